#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "trackguard/net.h"
#include "trackguard/page_session.h"

namespace trackguard {

struct FixtureResource {
  ElementHint type = ElementHint::kScript;
  std::string host;
  std::string path = "/";
  uint64_t bytes = 0;
  std::vector<std::string> set_cookies;
  std::chrono::milliseconds latency{0};
};

struct FixtureSite {
  std::string host;
  std::string path = "/";
  uint64_t body_bytes = 0;  // minimum; grows to fit the markup
  std::vector<std::string> set_cookies;
  std::chrono::milliseconds latency{0};
  std::vector<FixtureResource> resources;

  std::string url() const { return "http://" + host + path; }
};

struct FixtureCorpus {
  std::vector<FixtureSite> sites;

  // {"sites":[{"host","path","body_bytes","set_cookies","latency_ms",
  //            "resources":[{"type","host","path","bytes","set_cookies",
  //                          "latency_ms"}]}]}
  // Throws Error on schema violations, including one (host, path) served
  // with two different definitions.
  static FixtureCorpus parse(std::string_view json_text);
  static FixtureCorpus load(const std::filesystem::path& path);

  std::vector<std::string> hosts() const;  // sorted, unique
};

// Deterministic origin servers for a corpus, one listener per host.
class FixtureServer {
 public:
  explicit FixtureServer(FixtureCorpus corpus);
  ~FixtureServer();

  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  // `base` serves GET /hosts and GET /counters; host listeners take
  // ephemeral ports on base.host.
  void start(const net::HostPort& base = {"127.0.0.1", 0});
  void stop();

  const FixtureCorpus& corpus() const { return corpus_; }
  net::HostPort base_address() const;
  std::map<std::string, net::HostPort> host_map() const;
  std::string hosts_json() const;
  void write_hosts_file(const std::filesystem::path& path) const;

  // TCP connections accepted by the host's listener.
  uint64_t connections(const std::string& host) const;
  // Requests answered with 200 by the host's listener.
  uint64_t requests(const std::string& host) const;
  void reset_counters();
  std::string counters_json() const;

  // Exact response size (head + body) for the site page and for one of its
  // resources.
  uint64_t page_response_bytes(std::size_t site) const;
  uint64_t resource_response_bytes(std::size_t site, std::size_t resource) const;

  // HTML body of the site page.
  std::string page_html(std::size_t site) const;

 private:
  struct Document;
  struct HostListener;

  void serve(net::Socket& client, const std::string& host);
  void serve_base(net::Socket& client);
  const Document* find(const std::string& host, const std::string& path) const;

  FixtureCorpus corpus_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<Document>> documents_;
  std::map<std::string, std::unique_ptr<HostListener>> listeners_;
  net::TcpServer base_;
};

}  // namespace trackguard

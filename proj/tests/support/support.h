#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "trackguard/blocklist_store.h"
#include "trackguard/fetcher.h"
#include "trackguard/filtering_proxy.h"
#include "trackguard/fixture_server.h"
#include "trackguard/policy.h"
#include "trackguard/updater.h"

namespace trackguard::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// Reference matcher for domain-only lists: host equals a listed domain or is
// a subdomain of one.
bool oracle_matches(const std::set<std::string>& domains, const std::string& host);

std::vector<std::string> domain_expressions(const std::set<std::string>& domains);

std::string random_label(std::mt19937_64& rng, std::size_t min_len = 1,
                         std::size_t max_len = 8);
// `labels` dot-separated labels drawn from a small alphabet.
std::string random_host(std::mt19937_64& rng, std::size_t labels);
std::string random_path(std::mt19937_64& rng);

// Fixture origins plus a filtering proxy whose resolver points at them.
class ProxyRig {
 public:
  ProxyRig(FixtureCorpus corpus, const std::set<std::string>& blocklist,
           ProxyConfig config = {});
  ~ProxyRig();

  FixtureServer& fixture() { return *fixture_; }
  FilteringProxy& proxy() { return *proxy_; }
  StoreHandle& store() { return store_; }
  OverrideSet& overrides() { return overrides_; }
  Telemetry& telemetry() { return telemetry_; }
  ProxyClient client() const;

 private:
  StoreHandle store_;
  OverrideSet overrides_;
  Telemetry telemetry_;
  std::unique_ptr<FixtureServer> fixture_;
  std::unique_ptr<FilteringProxy> proxy_;
};

// In-memory list server with full version history. Answers a client at
// version v with 304 when current, a diff when v is known, else a snapshot.
class FakeListServer {
 public:
  uint64_t publish(std::set<std::string> domains);
  uint64_t version() const { return history_.size(); }
  const std::set<std::string>& current() const;
  UpdateResponse respond(uint64_t client_version);
  // The next diff answer claims a wrong base version.
  void corrupt_next_diff() { corrupt_next_diff_ = true; }
  void fail_next(unsigned n) { failures_ = n; }
  unsigned requests() const { return requests_; }

 private:
  std::vector<std::set<std::string>> history_;  // history_[v-1] is version v
  bool corrupt_next_diff_ = false;
  unsigned failures_ = 0;
  unsigned requests_ = 0;
};

FixtureResource resource(ElementHint type, const std::string& host, const std::string& path,
                         uint64_t bytes, std::vector<std::string> cookies = {},
                         int latency_ms = 0);

// Five first parties with one cookie each, four trackers setting two
// cookies each; tracker hosts are *.tracker-N.example.
FixtureCorpus cookie_corpus();
std::set<std::string> cookie_corpus_trackers();

}  // namespace trackguard::testing

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "trackguard/blocklist_store.h"
#include "trackguard/http_wire.h"
#include "trackguard/net.h"
#include "trackguard/page_session.h"
#include "trackguard/policy.h"

namespace trackguard {

// Request headers a client may send to attribute requests to a page load.
inline constexpr std::string_view kSessionHeader = "X-TP-Session";
inline constexpr std::string_view kKindHeader = "X-TP-Kind";
inline constexpr std::string_view kElementHeader = "X-TP-Element";
// "off" on a navigation turns the whole session into a measurement baseline:
// decisions are still computed and counted as matches but never enforced.
inline constexpr std::string_view kProtectionHeader = "X-TP-Protection";

// Response headers the proxy adds.
inline constexpr std::string_view kMarkerHeader = "X-Tracking-Protection";
inline constexpr std::string_view kMatchedHeader = "X-TP-Matched";

// Origin-form paths the proxy answers itself.
inline constexpr std::string_view kSessionEndpoint = "/tp/session/";

struct ProxyConfig {
  net::HostPort listen{"127.0.0.1", 8888};
  bool third_party_only = false;
  int block_status = 403;
  std::chrono::milliseconds upstream_timeout = std::chrono::seconds(10);
  std::chrono::milliseconds client_timeout = std::chrono::seconds(30);
  std::size_t max_sessions = 4096;

  // Throws std::invalid_argument when block_status is outside [400, 599].
  void validate() const;
};

// Maps hostnames to fixed upstream addresses (fixture corpora use
// hostnames that do not exist in DNS). Unmapped hosts resolve normally.
class UpstreamResolver {
 public:
  void add_override(std::string host, net::HostPort target);
  // JSON object {"host": "ip:port", ...}. Throws Error.
  void load_file(const std::filesystem::path& path);
  net::HostPort resolve(const std::string& host, uint16_t port) const;
  std::size_t size() const { return overrides_.size(); }

 private:
  std::map<std::string, net::HostPort> overrides_;
};

// Live page sessions keyed by the client-chosen session id.
class SessionRegistry {
 public:
  using EvictionHook = std::function<void(const PageSession&)>;

  explicit SessionRegistry(std::size_t max_sessions = 4096);

  void set_eviction_hook(EvictionHook hook);

  // Starts or restarts the session for a navigation.
  void begin(const std::string& id, const std::string& first_party_host,
             bool protection_enabled);
  bool contains(const std::string& id) const;
  // Runs `fn` on the session under the registry lock. Returns false when the
  // session is unknown.
  bool update(const std::string& id, const std::function<void(PageSession&)>& fn);
  std::optional<PageSession> get(const std::string& id) const;
  std::optional<PageSession> finish(const std::string& id);
  std::size_t size() const;

 private:
  std::size_t max_sessions_;
  EvictionHook on_evict_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, PageSession> sessions_;
};

struct ProxyStats {
  uint64_t requests = 0;
  uint64_t blocked = 0;
  uint64_t forwarded = 0;
  uint64_t upstream_errors = 0;
  uint64_t tunnels = 0;
};

// HTTP/1.1 forward proxy. Each request is classified before any upstream
// socket is opened; blocked requests get an empty-bodied error response
// carrying the marker headers and never touch the network.
class FilteringProxy {
 public:
  FilteringProxy(ProxyConfig config, StoreHandle& store, OverrideSet& overrides,
                 Telemetry& telemetry, UpstreamResolver resolver = {});
  ~FilteringProxy();

  void start();
  void stop();
  net::HostPort address() const { return server_.address(); }
  const ProxyConfig& config() const { return config_; }

  // Throws UnknownSession.
  PageSession session_report(const std::string& id) const;
  // Removes the session and feeds its page load to telemetry (unless the
  // session ran with protection off). Throws UnknownSession.
  PageSession finalize_session(const std::string& id);

  ProxyStats stats() const;

 private:
  struct Attribution;

  void handle_connection(net::Socket& client);
  void handle_http(net::Socket& client, net::StreamReader& reader,
                   const http::RequestHead& head);
  void handle_connect(net::Socket& client, net::StreamReader& reader,
                      const http::RequestHead& head);
  void handle_local(net::Socket& client, const http::RequestHead& head);

  Attribution attribute(const http::RequestHead& head, const CanonicalUrl& url,
                        RequestKind default_kind);
  Decision decide(const Attribution& who);
  // Records the decision in the session; true when the request must be
  // refused.
  bool account(const Attribution& who, const Decision& decision);
  void send_block(net::Socket& client, const Decision& decision);
  void tunnel(net::Socket& client, net::Socket& upstream,
              const std::string& leftover, const std::optional<std::string>& session_id);

  ProxyConfig config_;
  StoreHandle& store_;
  OverrideSet& overrides_;
  Telemetry& telemetry_;
  UpstreamResolver resolver_;
  SessionRegistry sessions_;
  net::TcpServer server_;

  std::atomic<uint64_t> requests_{0};
  std::atomic<uint64_t> blocked_{0};
  std::atomic<uint64_t> forwarded_{0};
  std::atomic<uint64_t> upstream_errors_{0};
  std::atomic<uint64_t> tunnels_{0};
};

}  // namespace trackguard

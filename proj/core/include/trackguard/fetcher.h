#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trackguard/cookies.h"
#include "trackguard/http_wire.h"
#include "trackguard/net.h"
#include "trackguard/page_session.h"

namespace trackguard {

struct HttpResult {
  int status = 0;
  http::Headers headers;
  std::string body;
  uint64_t wire_bytes = 0;

  bool blocked() const;
};

// Minimal HTTP/1.1 client that talks to a forward proxy. One connection per
// request, no caching, no conditional requests.
class ProxyClient {
 public:
  explicit ProxyClient(net::HostPort proxy,
                       std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Absolute-form GET through the proxy. Throws NetworkError / HttpParseError.
  HttpResult get(const std::string& url, const http::Headers& extra = {}) const;
  // Origin-form request answered by the proxy itself.
  HttpResult local(const std::string& method, const std::string& path) const;
  // Sends CONNECT and returns the proxy's answer; an established tunnel is
  // closed right away.
  HttpResult connect(const std::string& host, uint16_t port,
                     const http::Headers& extra = {}) const;

  const net::HostPort& proxy() const { return proxy_; }

 private:
  HttpResult exchange(const std::string& request, std::string_view method) const;

  net::HostPort proxy_;
  std::chrono::milliseconds timeout_;
};

enum class FetchMode { kProtected, kUnprotected };

struct FetchOptions {
  std::size_t per_host_parallelism = 6;
  std::chrono::milliseconds timeout = std::chrono::seconds(30);
};

struct FetchReport {
  std::string site;
  bool protected_mode = true;
  double load_time_ms = 0;
  // From the proxy's page session.
  uint64_t bytes = 0;
  uint64_t requests = 0;
  uint64_t blocked = 0;
  uint64_t matched = 0;
  std::map<ElementHint, uint64_t> blocked_by_type;
  std::set<std::string> contacted_hosts;
  // Client side.
  std::set<CookieKey> cookies;
  uint64_t client_wire_bytes = 0;
  uint64_t subresources = 0;
  uint64_t failures = 0;
};

// Loads `site` and its direct subresources through the proxy under a fresh
// page session. Throws SiteUnreachable when the top-level fetch fails.
FetchReport fetch_page(const std::string& site, FetchMode mode, const ProxyClient& client,
                       const FetchOptions& options = {});

std::string new_session_id();

}  // namespace trackguard

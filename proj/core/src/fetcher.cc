#include "trackguard/fetcher.h"

#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <thread>

#include "trackguard/errors.h"
#include "trackguard/filtering_proxy.h"
#include "trackguard/html_extract.h"
#include "trackguard/url.h"

namespace trackguard {
namespace {

using Clock = std::chrono::steady_clock;
using HostSemaphore = std::counting_semaphore<1024>;

std::string host_header(const CanonicalUrl& url) {
  std::string out = url.host;
  if (url.port) out += ":" + std::to_string(*url.port);
  return out;
}

http::Headers session_headers(const std::string& session_id, RequestKind kind,
                              std::optional<ElementHint> hint, FetchMode mode) {
  http::Headers headers;
  headers.add(std::string(kSessionHeader), session_id);
  headers.add(std::string(kKindHeader), std::string(to_string(kind)));
  if (hint) headers.add(std::string(kElementHeader), std::string(to_string(*hint)));
  if (mode == FetchMode::kUnprotected && kind == RequestKind::kNavigation) {
    headers.add(std::string(kProtectionHeader), "off");
  }
  return headers;
}

void harvest_cookies(const HttpResult& result, const std::string& url,
                     std::set<CookieKey>& jar) {
  for (const auto& header : result.headers.get_all("Set-Cookie")) {
    auto cookie = parse_set_cookie(header, url);
    if (!cookie) continue;
    if (cookie->expired) {
      jar.erase(cookie->key);
    } else {
      jar.insert(cookie->key);
    }
  }
}

}  // namespace

bool HttpResult::blocked() const {
  auto marker = headers.get(kMarkerHeader);
  return marker && *marker == "blocked";
}

ProxyClient::ProxyClient(net::HostPort proxy, std::chrono::milliseconds timeout)
    : proxy_(std::move(proxy)), timeout_(timeout) {}

HttpResult ProxyClient::exchange(const std::string& request,
                                 std::string_view method) const {
  net::Socket socket = net::connect_tcp(proxy_.host, proxy_.port, timeout_);
  socket.set_timeout(timeout_);
  socket.write_all(request);
  net::StreamReader reader(socket);
  http::Response response = http::read_response(reader, method);
  HttpResult result;
  result.status = response.head.status;
  result.headers = std::move(response.head.headers);
  result.body = std::move(response.body);
  result.wire_bytes = response.wire_bytes();
  return result;
}

HttpResult ProxyClient::get(const std::string& url, const http::Headers& extra) const {
  CanonicalUrl parsed = parse_and_canonicalize(url);
  http::Headers headers;
  headers.add("Host", host_header(parsed));
  for (const auto& [name, value] : extra.entries()) headers.add(name, value);
  headers.add("Connection", "close");
  return exchange("GET " + url + " HTTP/1.1\r\n" + headers.serialize() + "\r\n", "GET");
}

HttpResult ProxyClient::local(const std::string& method, const std::string& path) const {
  return exchange(method + " " + path + " HTTP/1.1\r\nHost: " + proxy_.to_string() +
                      "\r\nConnection: close\r\n\r\n",
                  method);
}

HttpResult ProxyClient::connect(const std::string& host, uint16_t port,
                                const http::Headers& extra) const {
  std::string authority = net::HostPort{host, port}.to_string();
  http::Headers headers;
  headers.add("Host", authority);
  for (const auto& [name, value] : extra.entries()) headers.add(name, value);
  net::Socket socket = net::connect_tcp(proxy_.host, proxy_.port, timeout_);
  socket.set_timeout(timeout_);
  socket.write_all("CONNECT " + authority + " HTTP/1.1\r\n" + headers.serialize() + "\r\n");
  net::StreamReader reader(socket);
  auto raw = reader.read_head();
  if (!raw) throw HttpParseError("proxy closed the connection");
  http::ResponseHead head = http::parse_response_head(*raw);
  HttpResult result;
  result.status = head.status;
  result.headers = std::move(head.headers);
  result.wire_bytes = raw->size();
  if (result.status != 200) {
    http::ResponseHead framing_head{"HTTP/1.1", result.status, "", result.headers};
    http::relay_body(reader, http::response_framing(framing_head, "CONNECT"),
                     [&](std::string_view bytes) { result.body.append(bytes); });
  }
  socket.shutdown_both();
  return result;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(rng()));
  return buffer;
}

FetchReport fetch_page(const std::string& site, FetchMode mode, const ProxyClient& client,
                       const FetchOptions& options) {
  FetchReport report;
  report.site = site;
  report.protected_mode = mode == FetchMode::kProtected;
  const std::string session_id = new_session_id();
  const auto t0 = Clock::now();

  HttpResult top;
  try {
    top = client.get(site, session_headers(session_id, RequestKind::kNavigation,
                                           std::nullopt, mode));
  } catch (const Error& e) {
    try {
      client.local("DELETE", std::string(kSessionEndpoint) + session_id);
    } catch (const Error&) {
    }
    throw SiteUnreachable(site + ": " + e.what());
  }
  if (top.status >= 400 || top.blocked()) {
    try {
      client.local("DELETE", std::string(kSessionEndpoint) + session_id);
    } catch (const Error&) {
    }
    throw SiteUnreachable(site + ": HTTP " + std::to_string(top.status));
  }

  std::mutex mu;
  std::set<CookieKey> jar;
  harvest_cookies(top, site, jar);
  report.client_wire_bytes = top.wire_bytes;

  std::vector<Subresource> resources = extract_subresources(top.body, site);
  report.subresources = resources.size();

  std::map<std::string, std::unique_ptr<HostSemaphore>> per_host;
  for (const auto& resource : resources) {
    std::string host = parse_and_canonicalize(resource.url).host;
    if (!per_host.count(host)) {
      per_host[host] = std::make_unique<HostSemaphore>(
          static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.per_host_parallelism)));
    }
  }

  std::vector<std::thread> workers;
  workers.reserve(resources.size());
  for (const auto& resource : resources) {
    workers.emplace_back([&, resource] {
      CanonicalUrl url = parse_and_canonicalize(resource.url);
      HostSemaphore& slot = *per_host.at(url.host);
      slot.acquire();
      http::Headers headers =
          session_headers(session_id, RequestKind::kSubresource, resource.hint, mode);
      headers.add("Referer", site);
      HttpResult result;
      bool failed = false;
      try {
        if (url.scheme == "https") {
          result = client.connect(url.host, url.effective_port(), headers);
        } else {
          result = client.get(resource.url, headers);
        }
        failed = !result.blocked() && (result.status < 200 || result.status >= 400);
      } catch (const Error&) {
        failed = true;
      }
      slot.release();
      std::lock_guard lock(mu);
      if (failed) ++report.failures;
      if (!failed && !result.blocked()) {
        harvest_cookies(result, resource.url, jar);
        report.client_wire_bytes += result.wire_bytes;
      }
    });
  }
  for (auto& worker : workers) worker.join();
  report.load_time_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  report.cookies = std::move(jar);

  HttpResult finished = client.local("DELETE", std::string(kSessionEndpoint) + session_id);
  if (finished.status != 200) {
    throw Error("proxy did not return session " + session_id + ": HTTP " +
                std::to_string(finished.status));
  }
  PageSession session = decode_session(finished.body);
  report.bytes = session.bytes_downloaded;
  report.requests = session.request_count;
  report.blocked = session.blocked_count;
  report.matched = session.matched_count;
  report.blocked_by_type = session.blocked_by_type;
  report.contacted_hosts = session.contacted_hosts;
  return report;
}

}  // namespace trackguard

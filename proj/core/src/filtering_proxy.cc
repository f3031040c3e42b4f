#include "trackguard/filtering_proxy.h"

#include <poll.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {
namespace {

constexpr std::string_view kHopByHop[] = {
    "Connection",          "Proxy-Connection", "Keep-Alive", "Proxy-Authorization",
    "Proxy-Authenticate",  "TE",               "Trailer",    "Upgrade",
};

std::string simple_response(int status, std::string_view content_type,
                            std::string_view body,
                            const http::Headers& extra = {}) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " +
                    std::string(http::reason_phrase(status)) + "\r\n";
  out += extra.serialize();
  if (!content_type.empty()) {
    out += "Content-Type: " + std::string(content_type) + "\r\n";
  }
  out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
  out += "Connection: close\r\n\r\n";
  out += body;
  return out;
}

void send_error(net::Socket& client, int status, std::string_view marker,
                std::string_view message) {
  http::Headers extra;
  if (!marker.empty()) extra.add(std::string(kMarkerHeader), std::string(marker));
  try {
    client.write_all(simple_response(status, "text/plain", std::string(message) + "\n",
                                     extra));
  } catch (const NetworkError&) {
  }
}

// Path and query of an absolute-form target, exactly as the client sent it.
std::string origin_form(std::string_view target) {
  auto scheme_end = target.find("://");
  std::string_view rest =
      scheme_end == std::string_view::npos ? target : target.substr(scheme_end + 3);
  auto start = rest.find_first_of("/?#");
  if (start == std::string_view::npos) return "/";
  std::string_view tail = rest.substr(start);
  tail = tail.substr(0, tail.find('#'));
  if (tail.empty() || tail.front() == '?') return "/" + std::string(tail);
  return std::string(tail);
}

std::string authority_of(std::string_view target) {
  auto scheme_end = target.find("://");
  std::string_view rest =
      scheme_end == std::string_view::npos ? target : target.substr(scheme_end + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest.remove_prefix(at + 1);
  return std::string(rest);
}

// Host suitable for getaddrinfo (IPv6 brackets removed).
std::string dial_host(const std::string& host) {
  if (host.size() > 2 && host.front() == '[') return host.substr(1, host.size() - 2);
  return host;
}

std::optional<std::string> referer_host(const http::Headers& headers) {
  auto referer = headers.get("Referer");
  if (!referer) return std::nullopt;
  try {
    return parse_and_canonicalize(*referer).host;
  } catch (const MalformedUrl&) {
    return std::nullopt;
  }
}

}  // namespace

void ProxyConfig::validate() const {
  if (block_status < 400 || block_status > 599) {
    throw std::invalid_argument("block status must be in [400, 599]");
  }
}

void UpstreamResolver::add_override(std::string host, net::HostPort target) {
  overrides_[std::move(host)] = std::move(target);
}

void UpstreamResolver::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read hosts file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("hosts file must be a JSON object: " + path.string());
  }
  for (const auto& [host, address] : doc.items()) {
    if (!address.is_string()) throw Error("hosts file entry for " + host + " is not a string");
    auto canonical = canonicalize_hostname(host);
    if (!canonical) throw Error("hosts file has invalid host " + host);
    add_override(*canonical, net::HostPort::parse(address.get<std::string>()));
  }
}

net::HostPort UpstreamResolver::resolve(const std::string& host, uint16_t port) const {
  if (auto it = overrides_.find(host); it != overrides_.end()) return it->second;
  return {dial_host(host), port};
}

SessionRegistry::SessionRegistry(std::size_t max_sessions)
    : max_sessions_(std::max<std::size_t>(1, max_sessions)) {}

void SessionRegistry::set_eviction_hook(EvictionHook hook) {
  std::lock_guard lock(mu_);
  on_evict_ = std::move(hook);
}

void SessionRegistry::begin(const std::string& id, const std::string& first_party_host,
                            bool protection_enabled) {
  std::optional<PageSession> evicted;
  EvictionHook hook;
  {
    std::lock_guard lock(mu_);
    if (!sessions_.count(id) && sessions_.size() >= max_sessions_) {
      auto oldest = std::min_element(
          sessions_.begin(), sessions_.end(), [](const auto& a, const auto& b) {
            return a.second.started < b.second.started;
          });
      evicted = std::move(oldest->second);
      sessions_.erase(oldest);
      hook = on_evict_;
    }
    PageSession session;
    session.id = id;
    session.first_party_host = first_party_host;
    session.started = std::chrono::system_clock::now();
    session.protection_enabled = protection_enabled;
    sessions_[id] = std::move(session);
  }
  if (evicted && hook) hook(*evicted);
}

bool SessionRegistry::contains(const std::string& id) const {
  std::lock_guard lock(mu_);
  return sessions_.count(id) > 0;
}

bool SessionRegistry::update(const std::string& id,
                             const std::function<void(PageSession&)>& fn) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return false;
  fn(it->second);
  return true;
}

std::optional<PageSession> SessionRegistry::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::optional<PageSession> SessionRegistry::finish(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  PageSession session = std::move(it->second);
  sessions_.erase(it);
  return session;
}

std::size_t SessionRegistry::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

struct FilteringProxy::Attribution {
  RequestMeta meta;
  std::optional<std::string> session_id;
  bool protection_enabled = true;
};

FilteringProxy::FilteringProxy(ProxyConfig config, StoreHandle& store,
                               OverrideSet& overrides, Telemetry& telemetry,
                               UpstreamResolver resolver)
    : config_(std::move(config)),
      store_(store),
      overrides_(overrides),
      telemetry_(telemetry),
      resolver_(std::move(resolver)),
      sessions_(config_.max_sessions) {
  config_.validate();
  sessions_.set_eviction_hook([this](const PageSession& session) {
    if (session.protection_enabled) telemetry_.record_page_load(session, overrides_);
  });
}

FilteringProxy::~FilteringProxy() { stop(); }

void FilteringProxy::start() {
  server_.start(config_.listen, [this](net::Socket& client) { handle_connection(client); });
}

void FilteringProxy::stop() { server_.stop(); }

PageSession FilteringProxy::session_report(const std::string& id) const {
  auto session = sessions_.get(id);
  if (!session) throw UnknownSession("unknown session " + id);
  return *session;
}

PageSession FilteringProxy::finalize_session(const std::string& id) {
  auto session = sessions_.finish(id);
  if (!session) throw UnknownSession("unknown session " + id);
  if (session->protection_enabled) telemetry_.record_page_load(*session, overrides_);
  return *session;
}

ProxyStats FilteringProxy::stats() const {
  return {requests_.load(), blocked_.load(), forwarded_.load(), upstream_errors_.load(),
          tunnels_.load()};
}

void FilteringProxy::handle_connection(net::Socket& client) {
  client.set_timeout(config_.client_timeout);
  net::StreamReader reader(client);
  std::optional<std::string> raw;
  http::RequestHead head;
  try {
    raw = reader.read_head();
    if (!raw) return;
    head = http::parse_request_head(*raw);
  } catch (const HttpParseError& e) {
    send_error(client, 400, "", e.what());
    return;
  }

  if (http::iequals(head.method, "CONNECT")) {
    handle_connect(client, reader, head);
  } else if (head.target.front() == '/') {
    handle_local(client, head);
  } else {
    handle_http(client, reader, head);
  }
}

FilteringProxy::Attribution FilteringProxy::attribute(const http::RequestHead& head,
                                                      const CanonicalUrl& url,
                                                      RequestKind default_kind) {
  Attribution who;
  who.meta.url = url;
  const auto& headers = head.headers;
  auto referer = referer_host(headers);

  if (auto kind = headers.get(kKindHeader)) {
    who.meta.kind = parse_request_kind(*kind).value_or(default_kind);
  } else if (default_kind == RequestKind::kNavigation) {
    who.meta.kind = referer ? RequestKind::kSubresource : RequestKind::kNavigation;
  } else {
    who.meta.kind = default_kind;
  }
  if (auto hint = headers.get(kElementHeader)) {
    who.meta.element_hint = parse_element_hint(*hint);
  }
  auto protection = headers.get(kProtectionHeader);
  who.protection_enabled = !(protection && http::iequals(*protection, "off"));
  who.session_id = headers.get(kSessionHeader);
  if (who.session_id && who.session_id->empty()) who.session_id.reset();

  if (who.meta.kind == RequestKind::kNavigation) {
    if (who.session_id) sessions_.begin(*who.session_id, url.host, who.protection_enabled);
    return who;
  }

  if (who.session_id) {
    auto session = sessions_.get(*who.session_id);
    if (!session) {
      sessions_.begin(*who.session_id, referer.value_or(""), who.protection_enabled);
      session = sessions_.get(*who.session_id);
    }
    if (session) {
      who.protection_enabled = session->protection_enabled;
      if (!session->first_party_host.empty()) {
        who.meta.first_party_host = session->first_party_host;
        return who;
      }
    }
  }
  who.meta.first_party_host = referer;
  return who;
}

Decision FilteringProxy::decide(const Attribution& who) {
  auto store = store_.current();
  PolicyConfig policy{config_.third_party_only};
  return classify(who.meta, *store, overrides_, policy);
}

bool FilteringProxy::account(const Attribution& who, const Decision& decision) {
  ++requests_;
  bool refuse = decision.verdict == Verdict::kBlock && who.protection_enabled;
  if (refuse) {
    ++blocked_;
  } else {
    ++forwarded_;
  }
  if (who.session_id) {
    sessions_.update(*who.session_id, [&](PageSession& session) {
      ++session.request_count;
      if (decision.matched_expression) ++session.matched_count;
      if (refuse) {
        ++session.blocked_count;
        ++session.blocked_by_type[who.meta.element_hint.value_or(ElementHint::kOther)];
      }
    });
  }
  return refuse;
}

void FilteringProxy::send_block(net::Socket& client, const Decision& decision) {
  http::Headers extra;
  extra.add(std::string(kMarkerHeader), "blocked");
  extra.add(std::string(kMatchedHeader), decision.matched_expression.value_or(""));
  try {
    client.write_all(simple_response(config_.block_status, "", "", extra));
  } catch (const NetworkError&) {
  }
}

void FilteringProxy::handle_http(net::Socket& client, net::StreamReader& reader,
                                 const http::RequestHead& head) {
  CanonicalUrl url;
  try {
    url = parse_and_canonicalize(head.target);
  } catch (const MalformedUrl& e) {
    send_error(client, 400, "", std::string("malformed request target: ") + e.what());
    return;
  }
  if (url.scheme != "http") {
    send_error(client, 400, "", "https requests must use CONNECT");
    return;
  }

  Attribution who = attribute(head, url, RequestKind::kNavigation);
  Decision decision = decide(who);
  if (account(who, decision)) {
    send_block(client, decision);
    return;
  }

  net::HostPort destination = resolver_.resolve(url.host, url.effective_port());
  net::Socket upstream;
  try {
    upstream = net::connect_tcp(destination.host, destination.port, config_.upstream_timeout);
  } catch (const NetworkError& e) {
    ++upstream_errors_;
    send_error(client, 502, "upstream-error", e.what());
    return;
  }
  upstream.set_timeout(config_.upstream_timeout);
  server_.track(upstream.fd());
  struct Untrack {
    net::TcpServer& server;
    int fd;
    ~Untrack() { server.untrack(fd); }
  } untrack{server_, upstream.fd()};

  if (who.session_id) {
    sessions_.update(*who.session_id,
                     [&](PageSession& session) { session.contacted_hosts.insert(url.host); });
  }

  http::Headers forwarded = head.headers;
  if (auto connection = head.headers.get("Connection")) {
    std::string_view tokens = *connection;
    while (!tokens.empty()) {
      auto comma = tokens.find(',');
      std::string_view token = tokens.substr(0, comma);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      if (!token.empty()) forwarded.remove(token);
      if (comma == std::string_view::npos) break;
      tokens.remove_prefix(comma + 1);
    }
  }
  for (auto name : kHopByHop) forwarded.remove(name);
  for (auto name : {kSessionHeader, kKindHeader, kElementHeader, kProtectionHeader}) {
    forwarded.remove(name);
  }
  if (!forwarded.get("Host")) forwarded.add("Host", authority_of(head.target));
  forwarded.add("Connection", "close");

  bool response_started = false;
  try {
    upstream.write_all(head.method + " " + origin_form(head.target) + " HTTP/1.1\r\n" +
                       forwarded.serialize() + "\r\n");
    http::relay_body(reader, http::request_framing(head),
                     [&](std::string_view bytes) { upstream.write_all(bytes); });

    net::StreamReader upstream_reader(upstream);
    auto raw = upstream_reader.read_head();
    if (!raw) throw HttpParseError("upstream closed without a response");
    http::ResponseHead response = http::parse_response_head(*raw);
    response_started = true;
    auto deliver = [&](std::string_view bytes) {
      if (who.session_id) {
        sessions_.update(*who.session_id,
                         [&](PageSession& session) { session.bytes_downloaded += bytes.size(); });
      }
      client.write_all(bytes);
    };
    deliver(*raw);
    http::relay_body(upstream_reader, http::response_framing(response, head.method), deliver);
  } catch (const Error& e) {
    ++upstream_errors_;
    if (!response_started) send_error(client, 502, "upstream-error", e.what());
  }
}

void FilteringProxy::handle_connect(net::Socket& client, net::StreamReader& reader,
                                    const http::RequestHead& head) {
  net::HostPort target;
  std::optional<std::string> host;
  try {
    target = net::HostPort::parse(head.target);
    host = canonicalize_hostname(target.host.find(':') != std::string::npos
                                     ? "[" + target.host + "]"
                                     : target.host);
  } catch (const NetworkError&) {
  }
  if (!host || target.port == 0) {
    send_error(client, 400, "", "CONNECT target must be host:port");
    return;
  }

  CanonicalUrl url;
  url.scheme = "https";
  url.host = *host;
  if (target.port != 443) url.port = target.port;
  url.path = "/";

  Attribution who = attribute(head, url, RequestKind::kSubresource);
  Decision decision = decide(who);
  if (account(who, decision)) {
    send_block(client, decision);
    return;
  }

  net::HostPort destination = resolver_.resolve(url.host, target.port);
  net::Socket upstream;
  try {
    upstream = net::connect_tcp(destination.host, destination.port, config_.upstream_timeout);
  } catch (const NetworkError& e) {
    ++upstream_errors_;
    send_error(client, 502, "upstream-error", e.what());
    return;
  }
  ++tunnels_;
  if (who.session_id) {
    sessions_.update(*who.session_id,
                     [&](PageSession& session) { session.contacted_hosts.insert(url.host); });
  }
  server_.track(upstream.fd());
  try {
    client.write_all("HTTP/1.1 200 Connection Established\r\n\r\n");
    tunnel(client, upstream, reader.take_buffered(), who.session_id);
  } catch (const Error&) {
  }
  server_.untrack(upstream.fd());
}

void FilteringProxy::tunnel(net::Socket& client, net::Socket& upstream,
                            const std::string& leftover,
                            const std::optional<std::string>& session_id) {
  if (!leftover.empty()) upstream.write_all(leftover);
  uint64_t downstream_bytes = 0;
  bool client_open = true;
  bool upstream_open = true;
  char buffer[16 * 1024];
  while (client_open || upstream_open) {
    pollfd fds[2] = {{client.fd(), static_cast<short>(client_open ? POLLIN : 0), 0},
                     {upstream.fd(), static_cast<short>(upstream_open ? POLLIN : 0), 0}};
    int ready = ::poll(fds, 2, static_cast<int>(config_.client_timeout.count()));
    if (ready <= 0) break;
    if (client_open && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) {
      std::size_t n = client.read_some(buffer);
      if (n == 0) {
        client_open = false;
        upstream.shutdown_write();
      } else {
        upstream.write_all({buffer, n});
      }
    }
    if (upstream_open && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      std::size_t n = upstream.read_some(buffer);
      if (n == 0) {
        upstream_open = false;
        client.shutdown_write();
      } else {
        client.write_all({buffer, n});
        downstream_bytes += n;
      }
    }
  }
  if (session_id) {
    sessions_.update(*session_id, [&](PageSession& session) {
      session.bytes_downloaded += downstream_bytes;
    });
  }
}

void FilteringProxy::handle_local(net::Socket& client, const http::RequestHead& head) {
  std::string_view target = head.target;
  if (target.substr(0, kSessionEndpoint.size()) != kSessionEndpoint) {
    send_error(client, 400, "", "not a proxy request");
    return;
  }
  std::string id(target.substr(kSessionEndpoint.size()));
  try {
    PageSession session;
    if (http::iequals(head.method, "GET")) {
      session = session_report(id);
    } else if (http::iequals(head.method, "DELETE")) {
      session = finalize_session(id);
    } else {
      send_error(client, 405, "", "use GET or DELETE");
      return;
    }
    client.write_all(simple_response(200, "application/json", encode_session(session)));
  } catch (const UnknownSession& e) {
    send_error(client, 404, "", e.what());
  }
}

}  // namespace trackguard

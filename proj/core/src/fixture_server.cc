#include "trackguard/fixture_server.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trackguard/errors.h"
#include "trackguard/http_wire.h"
#include "trackguard/url.h"

namespace trackguard {
namespace {

using nlohmann::json;

std::string_view content_type(ElementHint type) {
  switch (type) {
    case ElementHint::kScript: return "application/javascript";
    case ElementHint::kImg: return "image/gif";
    case ElementHint::kIframe: return "text/html";
    case ElementHint::kObject: return "application/octet-stream";
    case ElementHint::kStylesheet: return "text/css";
    case ElementHint::kOther: break;
  }
  return "application/octet-stream";
}

std::string element_markup(const FixtureResource& resource) {
  std::string url = "http://" + resource.host + resource.path;
  switch (resource.type) {
    case ElementHint::kScript: return "<script src=\"" + url + "\"></script>\n";
    case ElementHint::kImg: return "<img src=\"" + url + "\">\n";
    case ElementHint::kIframe: return "<iframe src=\"" + url + "\"></iframe>\n";
    case ElementHint::kObject: return "<object data=\"" + url + "\"></object>\n";
    case ElementHint::kStylesheet:
      return "<link rel=\"stylesheet\" href=\"" + url + "\">\n";
    case ElementHint::kOther: break;
  }
  return {};
}

std::string build_html(const FixtureSite& site) {
  std::string head = "<!DOCTYPE html>\n<html><head><title>" + site.host +
                      "</title></head><body>\n";
  std::string tail = "</body></html>\n";
  std::string body;
  for (const auto& resource : site.resources) body += element_markup(resource);
  std::size_t size = head.size() + body.size() + tail.size();
  if (size < site.body_bytes) {
    std::size_t gap = site.body_bytes - size;
    if (gap >= 8) {
      body += "<!--" + std::string(gap - 8, 'p') + "-->\n";
    } else {
      body += std::string(gap, '\n');
    }
  }
  return head + body + tail;
}

std::string build_response(std::string_view type, const std::string& body,
                           const std::vector<std::string>& set_cookies) {
  std::string out = "HTTP/1.1 200 OK\r\nContent-Type: " + std::string(type) +
                    "\r\nContent-Length: " + std::to_string(body.size()) + "\r\n";
  for (const auto& cookie : set_cookies) out += "Set-Cookie: " + cookie + "\r\n";
  out += "Cache-Control: no-store\r\nConnection: close\r\n\r\n";
  return out + body;
}

std::string require_host(const json& node, const std::string& where) {
  if (!node.contains("host") || !node["host"].is_string()) {
    throw Error(where + ": missing host");
  }
  auto host = canonicalize_hostname(node["host"].get<std::string>());
  if (!host || is_ip_literal(*host)) throw Error(where + ": invalid host");
  return *host;
}

std::string optional_path(const json& node, const std::string& where) {
  if (!node.contains("path")) return "/";
  if (!node["path"].is_string()) throw Error(where + ": path must be a string");
  std::string path = node["path"].get<std::string>();
  if (path.empty() || path.front() != '/' ||
      path.find_first_of(" \"<>\r\n\t") != std::string::npos) {
    throw Error(where + ": path must start with / and contain no spaces or quotes");
  }
  return path;
}

uint64_t optional_uint(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key)) return 0;
  if (!node[key].is_number_unsigned() && !(node[key].is_number_integer() && node[key].get<int64_t>() >= 0)) {
    throw Error(where + ": " + key + " must be a non-negative integer");
  }
  return node[key].get<uint64_t>();
}

std::vector<std::string> optional_cookies(const json& node, const std::string& where) {
  std::vector<std::string> out;
  if (!node.contains("set_cookies")) return out;
  if (!node["set_cookies"].is_array()) throw Error(where + ": set_cookies must be an array");
  for (const auto& cookie : node["set_cookies"]) {
    if (!cookie.is_string()) throw Error(where + ": set_cookies entries must be strings");
    std::string text = cookie.get<std::string>();
    if (text.find_first_of("\r\n") != std::string::npos) {
      throw Error(where + ": set_cookies entries must be single-line");
    }
    out.push_back(std::move(text));
  }
  return out;
}

}  // namespace

struct FixtureServer::Document {
  std::string response;
  std::chrono::milliseconds latency{0};
};

struct FixtureServer::HostListener {
  net::TcpServer server;
  std::atomic<uint64_t> requests{0};
};

FixtureCorpus FixtureCorpus::parse(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("sites") ||
      !doc["sites"].is_array()) {
    throw Error("fixture corpus must be an object with a \"sites\" array");
  }
  FixtureCorpus corpus;
  std::map<std::pair<std::string, std::string>, std::string> seen;
  auto claim = [&](const std::string& host, const std::string& path,
                   const std::string& definition, const std::string& where) {
    auto [it, inserted] = seen.emplace(std::pair{host, path}, definition);
    if (!inserted && it->second != definition) {
      throw Error(where + ": http://" + host + path + " defined twice with different content");
    }
  };

  for (std::size_t i = 0; i < doc["sites"].size(); ++i) {
    const json& node = doc["sites"][i];
    std::string where = "/sites/" + std::to_string(i);
    if (!node.is_object()) throw Error(where + ": site must be an object");
    FixtureSite site;
    site.host = require_host(node, where);
    site.path = optional_path(node, where);
    site.body_bytes = optional_uint(node, "body_bytes", where);
    site.set_cookies = optional_cookies(node, where);
    site.latency = std::chrono::milliseconds(optional_uint(node, "latency_ms", where));
    if (node.contains("resources")) {
      if (!node["resources"].is_array()) throw Error(where + ": resources must be an array");
      for (std::size_t k = 0; k < node["resources"].size(); ++k) {
        const json& item = node["resources"][k];
        std::string rwhere = where + "/resources/" + std::to_string(k);
        if (!item.is_object()) throw Error(rwhere + ": resource must be an object");
        FixtureResource resource;
        if (!item.contains("type") || !item["type"].is_string()) {
          throw Error(rwhere + ": missing type");
        }
        auto type = parse_element_hint(item["type"].get<std::string>());
        if (!type || *type == ElementHint::kOther) {
          throw Error(rwhere + ": type must be script, img, iframe, object or stylesheet");
        }
        resource.type = *type;
        resource.host = require_host(item, rwhere);
        resource.path = optional_path(item, rwhere);
        resource.bytes = optional_uint(item, "bytes", rwhere);
        resource.set_cookies = optional_cookies(item, rwhere);
        resource.latency = std::chrono::milliseconds(optional_uint(item, "latency_ms", rwhere));
        claim(resource.host, resource.path,
              json{{"type", to_string(resource.type)},
                   {"bytes", resource.bytes},
                   {"set_cookies", resource.set_cookies},
                   {"latency_ms", resource.latency.count()}}
                  .dump(),
              rwhere);
        site.resources.push_back(std::move(resource));
      }
    }
    claim(site.host, site.path, "site:" + std::to_string(i), where);
    corpus.sites.push_back(std::move(site));
  }
  return corpus;
}

FixtureCorpus FixtureCorpus::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::vector<std::string> FixtureCorpus::hosts() const {
  std::set<std::string> hosts;
  for (const auto& site : sites) {
    hosts.insert(site.host);
    for (const auto& resource : site.resources) hosts.insert(resource.host);
  }
  return {hosts.begin(), hosts.end()};
}

FixtureServer::FixtureServer(FixtureCorpus corpus) : corpus_(std::move(corpus)) {
  for (const auto& site : corpus_.sites) {
    auto page = std::make_shared<Document>();
    page->response = build_response("text/html", build_html(site), site.set_cookies);
    page->latency = site.latency;
    documents_[{site.host, site.path}] = page;
    for (const auto& resource : site.resources) {
      auto doc = std::make_shared<Document>();
      doc->response = build_response(content_type(resource.type),
                                     std::string(resource.bytes, 'x'), resource.set_cookies);
      doc->latency = resource.latency;
      documents_.emplace(std::pair{resource.host, resource.path}, doc);
    }
  }
  for (const auto& host : corpus_.hosts()) {
    listeners_[host] = std::make_unique<HostListener>();
  }
}

FixtureServer::~FixtureServer() { stop(); }

void FixtureServer::start(const net::HostPort& base) {
  for (auto& [host, listener] : listeners_) {
    listener->server.start({base.host, 0},
                           [this, name = host](net::Socket& client) { serve(client, name); });
  }
  base_.start(base, [this](net::Socket& client) { serve_base(client); });
}

void FixtureServer::stop() {
  base_.stop();
  for (auto& [host, listener] : listeners_) listener->server.stop();
}

net::HostPort FixtureServer::base_address() const { return base_.address(); }

std::map<std::string, net::HostPort> FixtureServer::host_map() const {
  std::map<std::string, net::HostPort> out;
  for (const auto& [host, listener] : listeners_) out[host] = listener->server.address();
  return out;
}

std::string FixtureServer::hosts_json() const {
  json out = json::object();
  for (const auto& [host, address] : host_map()) out[host] = address.to_string();
  return out.dump(2) + "\n";
}

void FixtureServer::write_hosts_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << hosts_json();
}

uint64_t FixtureServer::connections(const std::string& host) const {
  auto it = listeners_.find(host);
  return it == listeners_.end() ? 0 : it->second->server.accepted();
}

uint64_t FixtureServer::requests(const std::string& host) const {
  auto it = listeners_.find(host);
  return it == listeners_.end() ? 0 : it->second->requests.load();
}

void FixtureServer::reset_counters() {
  for (auto& [host, listener] : listeners_) {
    listener->server.reset_accepted();
    listener->requests = 0;
  }
}

std::string FixtureServer::counters_json() const {
  json out = json::object();
  for (const auto& [host, listener] : listeners_) {
    out[host] = {{"connections", listener->server.accepted()},
                 {"requests", listener->requests.load()}};
  }
  return out.dump(2) + "\n";
}

uint64_t FixtureServer::page_response_bytes(std::size_t site) const {
  const auto& s = corpus_.sites.at(site);
  return find(s.host, s.path)->response.size();
}

uint64_t FixtureServer::resource_response_bytes(std::size_t site,
                                                std::size_t resource) const {
  const auto& r = corpus_.sites.at(site).resources.at(resource);
  return find(r.host, r.path)->response.size();
}

std::string FixtureServer::page_html(std::size_t site) const {
  return build_html(corpus_.sites.at(site));
}

const FixtureServer::Document* FixtureServer::find(const std::string& host,
                                                   const std::string& path) const {
  auto it = documents_.find({host, path});
  return it == documents_.end() ? nullptr : it->second.get();
}

void FixtureServer::serve(net::Socket& client, const std::string& host) {
  client.set_timeout(std::chrono::seconds(30));
  net::StreamReader reader(client);
  try {
    auto raw = reader.read_head();
    if (!raw) return;
    http::RequestHead head = http::parse_request_head(*raw);
    std::string path = head.target;
    if (path.front() != '/') {
      try {
        path = parse_and_canonicalize(path).path;
      } catch (const MalformedUrl&) {
      }
    }
    path = path.substr(0, path.find('?'));
    const Document* doc = find(host, path);
    if (!doc || !(http::iequals(head.method, "GET") || http::iequals(head.method, "HEAD"))) {
      client.write_all("HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
      return;
    }
    if (doc->latency.count() > 0) std::this_thread::sleep_for(doc->latency);
    listeners_.at(host)->requests++;
    if (http::iequals(head.method, "HEAD")) {
      client.write_all(std::string_view(doc->response).substr(0, doc->response.find("\r\n\r\n") + 4));
    } else {
      client.write_all(doc->response);
    }
    client.shutdown_write();
  } catch (const Error&) {
  }
}

void FixtureServer::serve_base(net::Socket& client) {
  client.set_timeout(std::chrono::seconds(30));
  net::StreamReader reader(client);
  try {
    auto raw = reader.read_head();
    if (!raw) return;
    http::RequestHead head = http::parse_request_head(*raw);
    std::string body;
    int status = 200;
    if (head.target == "/hosts") {
      body = hosts_json();
    } else if (head.target == "/counters") {
      body = counters_json();
    } else {
      status = 404;
    }
    client.write_all("HTTP/1.1 " + std::to_string(status) + " " +
                     std::string(http::reason_phrase(status)) +
                     "\r\nContent-Type: application/json\r\nContent-Length: " +
                     std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n" + body);
  } catch (const Error&) {
  }
}

}  // namespace trackguard

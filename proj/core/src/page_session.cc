#include "trackguard/page_session.h"

#include <array>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<ElementHint, std::string_view>, 6> kHintNames{{
    {ElementHint::kScript, "script"},
    {ElementHint::kImg, "img"},
    {ElementHint::kIframe, "iframe"},
    {ElementHint::kObject, "object"},
    {ElementHint::kStylesheet, "stylesheet"},
    {ElementHint::kOther, "other"},
}};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i] >= 'A' && a[i] <= 'Z' ? static_cast<char>(a[i] + 32) : a[i];
    if (x != b[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(RequestKind kind) {
  return kind == RequestKind::kNavigation ? "navigation" : "subresource";
}

std::string_view to_string(ElementHint hint) {
  for (const auto& [value, name] : kHintNames) {
    if (value == hint) return name;
  }
  return "other";
}

std::optional<RequestKind> parse_request_kind(std::string_view text) {
  if (iequals(text, "navigation")) return RequestKind::kNavigation;
  if (iequals(text, "subresource")) return RequestKind::kSubresource;
  return std::nullopt;
}

std::optional<ElementHint> parse_element_hint(std::string_view text) {
  for (const auto& [value, name] : kHintNames) {
    if (iequals(text, name)) return value;
  }
  return std::nullopt;
}

std::string encode_session(const PageSession& session) {
  json by_type = json::object();
  for (const auto& [hint, count] : session.blocked_by_type) {
    by_type[std::string(to_string(hint))] = count;
  }
  json doc{
      {"id", session.id},
      {"first_party_host", session.first_party_host},
      {"started_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                         session.started.time_since_epoch())
                         .count()},
      {"request_count", session.request_count},
      {"blocked_count", session.blocked_count},
      {"matched_count", session.matched_count},
      {"bytes_downloaded", session.bytes_downloaded},
      {"blocked_by_type", by_type},
      {"contacted_hosts", session.contacted_hosts},
      {"protection_enabled", session.protection_enabled},
  };
  return doc.dump();
}

PageSession decode_session(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("session report is not a JSON object");
  }
  PageSession session;
  try {
    session.id = doc.at("id").get<std::string>();
    session.first_party_host = doc.at("first_party_host").get<std::string>();
    session.started = std::chrono::system_clock::time_point(
        std::chrono::milliseconds(doc.at("started_ms").get<int64_t>()));
    session.request_count = doc.at("request_count").get<uint64_t>();
    session.blocked_count = doc.at("blocked_count").get<uint64_t>();
    session.matched_count = doc.at("matched_count").get<uint64_t>();
    session.bytes_downloaded = doc.at("bytes_downloaded").get<uint64_t>();
    for (const auto& [name, count] : doc.at("blocked_by_type").items()) {
      auto hint = parse_element_hint(name);
      if (!hint) throw Error("unknown element type " + name);
      session.blocked_by_type[*hint] = count.get<uint64_t>();
    }
    session.contacted_hosts =
        doc.at("contacted_hosts").get<std::set<std::string>>();
    session.protection_enabled = doc.at("protection_enabled").get<bool>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed session report: ") + e.what());
  }
  return session;
}

}  // namespace trackguard

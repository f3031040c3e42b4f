#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace trackguard {

enum class RequestKind { kNavigation, kSubresource };

enum class ElementHint { kScript, kImg, kIframe, kObject, kStylesheet, kOther };

std::string_view to_string(RequestKind kind);
std::string_view to_string(ElementHint hint);
std::optional<RequestKind> parse_request_kind(std::string_view text);
std::optional<ElementHint> parse_element_hint(std::string_view text);

// Counters for one top-level page load.
struct PageSession {
  std::string id;
  std::string first_party_host;
  std::chrono::system_clock::time_point started{};
  uint64_t request_count = 0;
  uint64_t blocked_count = 0;
  // Requests whose URL is on the list, whether or not they were blocked
  // (overridden sites and unprotected sessions still match).
  uint64_t matched_count = 0;
  // Response header + body bytes of allowed, completed responses as relayed.
  uint64_t bytes_downloaded = 0;
  std::map<ElementHint, uint64_t> blocked_by_type;
  std::set<std::string> contacted_hosts;
  // False for measurement sessions that asked the proxy not to enforce.
  bool protection_enabled = true;

  friend bool operator==(const PageSession&, const PageSession&) = default;
};

std::string encode_session(const PageSession& session);
// Throws Error on malformed input.
PageSession decode_session(std::string_view json_text);

}  // namespace trackguard

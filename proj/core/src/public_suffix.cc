#include "trackguard/public_suffix.h"

#include <algorithm>
#include <vector>

#include "punycode.h"
#include "trackguard/url.h"

namespace trackguard {
namespace internal {
extern const std::string_view kBundledPublicSuffixList;
}  // namespace internal

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Offsets of every label start, leftmost first.
std::vector<std::size_t> label_starts(std::string_view host) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < host.size(); ++i) {
    if (host[i] == '.') starts.push_back(i + 1);
  }
  return starts;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view text) {
  PublicSuffixList list;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    // A rule ends at the first whitespace.
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    line = line.substr(0, line.find_first_of(" \t\r"));
    if (line.substr(0, 2) == "//") continue;

    enum { kNormal, kWildcard, kException } kind = kNormal;
    if (line.front() == '!') {
      kind = kException;
      line.remove_prefix(1);
    } else if (line.substr(0, 2) == "*.") {
      kind = kWildcard;
      line.remove_prefix(2);
    }
    auto ascii = internal::domain_to_ascii(lowercase(line));
    if (!ascii || ascii->empty()) continue;
    switch (kind) {
      case kNormal: list.rules_.insert(std::move(*ascii)); break;
      case kWildcard: list.wildcards_.insert(std::move(*ascii)); break;
      case kException: list.exceptions_.insert(std::move(*ascii)); break;
    }
  }
  return list;
}

const PublicSuffixList& PublicSuffixList::bundled() {
  static const PublicSuffixList list = parse(internal::kBundledPublicSuffixList);
  return list;
}

std::string PublicSuffixList::public_suffix(std::string_view host) const {
  auto starts = label_starts(host);

  // An exception rule wins over everything; its suffix drops the leftmost
  // label of the rule.
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::string candidate(host.substr(starts[i]));
    if (exceptions_.count(candidate)) {
      return i + 1 < starts.size() ? std::string(host.substr(starts[i + 1]))
                                   : candidate;
    }
  }
  // Otherwise the longest normal or wildcard match.
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::string candidate(host.substr(starts[i]));
    if (rules_.count(candidate)) return candidate;
    if (i + 1 < starts.size() &&
        wildcards_.count(std::string(host.substr(starts[i + 1])))) {
      return candidate;
    }
  }
  return std::string(host.substr(starts.back()));
}

bool PublicSuffixList::is_public_suffix(std::string_view host) const {
  return public_suffix(host) == host;
}

std::string PublicSuffixList::registrable_domain(std::string_view host) const {
  if (host.empty() || is_ip_literal(host)) return std::string(host);
  std::string suffix = public_suffix(host);
  if (suffix.size() >= host.size()) return std::string(host);
  std::string_view rest = host.substr(0, host.size() - suffix.size() - 1);
  auto dot = rest.rfind('.');
  return std::string(host.substr(dot == std::string_view::npos ? 0 : dot + 1));
}

}  // namespace trackguard

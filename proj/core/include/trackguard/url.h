#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trackguard/errors.h"

namespace trackguard {

// A URL reduced to the form used for blocklist matching.
//
// Invariants after parse_and_canonicalize():
//  - scheme is "http" or "https"
//  - host is lowercase ASCII, no leading/trailing/repeated dots; IPv4 hosts
//    are dotted quads, IPv6 hosts are bracketed in inet_ntop form
//  - path starts with '/', has no "." or ".." segments and no empty segments
//  - host, path and query are percent-decoded to a fixpoint and re-escaped
//    with the fixed escape set (bytes <= 0x20, >= 0x7f, '#', '%')
struct CanonicalUrl {
  std::string scheme;
  std::string host;
  // Absent when the URL used the scheme's default port.
  std::optional<uint16_t> port;
  std::string path = "/";
  // Without the leading '?'. Present-but-empty means the URL ended in '?'.
  std::optional<std::string> query;

  uint16_t effective_port() const;
  // "<host><path>[?<query>]", the exact-match lookup expression.
  std::string expression() const;

  friend bool operator==(const CanonicalUrl&, const CanonicalUrl&) = default;
};

// Throws MalformedUrl for unparseable input, an empty host, a non-ASCII host
// or a scheme other than http/https.
CanonicalUrl parse_and_canonicalize(std::string_view raw);

// Reassembles a URL string that re-parses to the same CanonicalUrl.
std::string render(const CanonicalUrl& url);

// Canonical hostname for list entries and override keys. Accepts a bare host
// ("Tracker.Example.") and returns nullopt for anything that is not one.
std::optional<std::string> canonicalize_hostname(std::string_view raw);

bool is_ip_literal(std::string_view host);

// Exact host first, then suffixes built from the last five labels down to
// two labels. IP literals yield only themselves. At most five entries.
std::vector<std::string> host_suffixes(std::string_view host);

// Path with query, bare path, then directory prefixes (at most four, counted
// from the root) from most to least specific. At most six entries.
std::vector<std::string> path_prefixes(std::string_view path,
                                       const std::optional<std::string>& query);

// Cartesian product host_suffixes x path_prefixes, host-major order.
std::vector<std::string> lookup_expressions(const CanonicalUrl& url);

// Host-only expressions (every host suffix followed by "/"); used where only
// the host is visible, e.g. CONNECT tunnels.
std::vector<std::string> host_lookup_expressions(std::string_view host);

// Resolves an HTML reference against a base URL per RFC 3986.
// Returns nullopt for references that are not http(s) after resolution.
std::optional<std::string> resolve_reference(std::string_view base,
                                             std::string_view reference);

}  // namespace trackguard

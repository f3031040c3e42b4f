#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace trackguard {

struct CookieKey {
  std::string name;
  std::string domain;  // lowercase, no leading dot
  std::string path;

  friend auto operator<=>(const CookieKey&, const CookieKey&) = default;
};

struct SetCookie {
  CookieKey key;
  std::string value;
  bool host_only = true;
  bool expired = false;  // Max-Age <= 0
};

// Parses one Set-Cookie header value received from `request_url`. Domain
// defaults to the request host, path to the directory of the request path.
// nullopt for headers a cookie store would reject (no name=value pair, a
// Domain attribute that does not domain-match the host).
std::optional<SetCookie> parse_set_cookie(std::string_view header,
                                          std::string_view request_url);

// Directory part of a request path ("/a/b/c" -> "/a/b", "/a" -> "/").
std::string default_cookie_path(std::string_view path);

// Union of (name, domain, path) identities over every report's cookies.
template <typename Range>
std::size_t count_cookies(const Range& cookie_sets) {
  std::set<CookieKey> all;
  for (const auto& cookies : cookie_sets) all.insert(cookies.begin(), cookies.end());
  return all.size();
}

}  // namespace trackguard

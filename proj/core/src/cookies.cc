#include "trackguard/cookies.h"

#include <cctype>
#include <charconv>

#include "trackguard/errors.h"
#include "trackguard/public_suffix.h"
#include "trackguard/url.h"

namespace trackguard {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool domain_matches(const std::string& host, const std::string& domain) {
  if (host == domain) return true;
  return host.size() > domain.size() &&
         host.compare(host.size() - domain.size(), domain.size(), domain) == 0 &&
         host[host.size() - domain.size() - 1] == '.' && !is_ip_literal(host);
}

}  // namespace

std::string default_cookie_path(std::string_view path) {
  if (path.empty() || path.front() != '/') return "/";
  auto last = path.rfind('/');
  if (last == 0) return "/";
  return std::string(path.substr(0, last));
}

std::optional<SetCookie> parse_set_cookie(std::string_view header,
                                          std::string_view request_url) {
  CanonicalUrl url;
  try {
    url = parse_and_canonicalize(request_url);
  } catch (const MalformedUrl&) {
    return std::nullopt;
  }

  std::string_view pair = header.substr(0, header.find(';'));
  auto eq = pair.find('=');
  if (eq == std::string_view::npos) return std::nullopt;
  SetCookie cookie;
  cookie.key.name = std::string(trim(pair.substr(0, eq)));
  cookie.value = std::string(trim(pair.substr(eq + 1)));
  if (cookie.key.name.empty()) return std::nullopt;

  std::optional<std::string> domain_attr;
  std::optional<std::string> path_attr;
  std::string_view rest =
      pair.size() < header.size() ? header.substr(pair.size() + 1) : std::string_view{};
  while (!rest.empty()) {
    auto semi = rest.find(';');
    std::string_view av = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    auto av_eq = av.find('=');
    std::string name = lowercase(trim(av.substr(0, av_eq)));
    std::string_view value =
        av_eq == std::string_view::npos ? std::string_view{} : trim(av.substr(av_eq + 1));
    if (name == "domain") {
      while (!value.empty() && value.front() == '.') value.remove_prefix(1);
      if (!value.empty()) domain_attr = lowercase(value);
    } else if (name == "path") {
      if (!value.empty() && value.front() == '/') path_attr = std::string(value);
    } else if (name == "max-age") {
      long long seconds = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seconds);
      if (ec == std::errc() && ptr == value.data() + value.size()) {
        cookie.expired = seconds <= 0;
      } else if (ec == std::errc::result_out_of_range && !value.empty() &&
                 value.front() == '-') {
        cookie.expired = true;
      }
    }
  }

  if (domain_attr) {
    if (!domain_matches(url.host, *domain_attr)) return std::nullopt;
    if (*domain_attr != url.host &&
        PublicSuffixList::bundled().is_public_suffix(*domain_attr)) {
      return std::nullopt;
    }
    cookie.key.domain = *domain_attr;
    cookie.host_only = false;
  } else {
    cookie.key.domain = url.host;
  }
  cookie.key.path = path_attr.value_or(default_cookie_path(url.path));
  return cookie;
}

}  // namespace trackguard

#include "trackguard/url.h"

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>

namespace trackguard {
namespace {

constexpr std::size_t kMaxHostSuffixLabels = 5;
constexpr std::size_t kMaxDirectoryPrefixes = 4;

bool is_hex_digit(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
         (c >= 'A' && c <= 'F');
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return c - 'A' + 10;
}

char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), to_lower_ascii);
  return out;
}

// One pass over the input; `changed` reports whether any escape was decoded.
std::string percent_decode_once(std::string_view in, bool& changed) {
  std::string out;
  out.reserve(in.size());
  changed = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '%' && i + 2 < in.size() && is_hex_digit(in[i + 1]) &&
        is_hex_digit(in[i + 2])) {
      out.push_back(static_cast<char>(hex_value(in[i + 1]) * 16 +
                                      hex_value(in[i + 2])));
      i += 2;
      changed = true;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

// Every decode pass that changes the string shortens it, so this terminates.
std::string percent_decode_fixpoint(std::string_view in) {
  std::string current(in);
  for (;;) {
    bool changed = false;
    std::string next = percent_decode_once(current, changed);
    if (!changed) return current;
    current = std::move(next);
  }
}

bool needs_escape(unsigned char c) {
  return c <= 0x20 || c >= 0x7f || c == '#' || c == '%';
}

void append_escaped(std::string& out, unsigned char c) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  out.push_back('%');
  out.push_back(kHex[c >> 4]);
  out.push_back(kHex[c & 0xf]);
}

std::string percent_escape(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char ch : in) {
    auto c = static_cast<unsigned char>(ch);
    if (needs_escape(c)) {
      append_escaped(out, c);
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

// Drops empty, "." and ".." segments. A trailing slash survives when the
// input ended in a directory.
std::string resolve_path_segments(std::string_view path) {
  std::vector<std::string_view> stack;
  bool trailing_slash = false;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    std::string_view segment = path.substr(pos, next - pos);
    bool last = next == path.size();
    if (segment.empty() || segment == ".") {
      trailing_slash = last;
    } else if (segment == "..") {
      if (!stack.empty()) stack.pop_back();
      trailing_slash = last;
    } else {
      stack.push_back(segment);
      trailing_slash = false;
    }
    pos = next + 1;
  }
  std::string out = "/";
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (i) out.push_back('/');
    out.append(stack[i]);
  }
  if (trailing_slash && !stack.empty()) out.push_back('/');
  return out;
}

// inet_aton-style number: decimal, 0x-hex or leading-zero octal.
std::optional<uint64_t> parse_ipv4_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int base = 10;
  if (s.size() > 1 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
    if (s.empty()) return 0;
  } else if (s.size() > 1 && s[0] == '0') {
    base = 8;
    s.remove_prefix(1);
  }
  if (s.size() > 16) return std::nullopt;
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_labels(std::string_view host) {
  std::vector<std::string_view> labels;
  std::size_t pos = 0;
  while (pos <= host.size()) {
    std::size_t dot = host.find('.', pos);
    if (dot == std::string_view::npos) dot = host.size();
    labels.push_back(host.substr(pos, dot - pos));
    pos = dot + 1;
  }
  return labels;
}

// Returns the dotted quad if every label is numeric, nullopt if the host is
// not numeric at all. Throws for numeric hosts that overflow.
std::optional<std::string> normalize_ipv4(std::string_view host) {
  auto labels = split_labels(host);
  if (labels.empty() || labels.size() > 4) return std::nullopt;
  std::vector<uint64_t> parts;
  for (auto label : labels) {
    auto value = parse_ipv4_number(label);
    if (!value) return std::nullopt;
    parts.push_back(*value);
  }
  uint64_t address = 0;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i] > 255) throw MalformedUrl("IPv4 component out of range");
    address |= parts[i] << (8 * (3 - i));
  }
  int remaining_bytes = static_cast<int>(5 - parts.size());
  uint64_t limit = remaining_bytes >= 4 ? 0xffffffffull
                                        : (1ull << (8 * remaining_bytes)) - 1;
  if (parts.back() > limit) throw MalformedUrl("IPv4 address out of range");
  address |= parts.back();
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u",
                static_cast<unsigned>((address >> 24) & 0xff),
                static_cast<unsigned>((address >> 16) & 0xff),
                static_cast<unsigned>((address >> 8) & 0xff),
                static_cast<unsigned>(address & 0xff));
  return std::string(buf);
}

bool is_hostname_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == '.';
}

// Host text (without brackets or port) to canonical form; nullopt when the
// text is not an acceptable host.
std::optional<std::string> canonical_host(std::string_view raw) {
  std::string decoded = percent_decode_fixpoint(raw);
  for (char c : decoded) {
    if (static_cast<unsigned char>(c) >= 0x80) return std::nullopt;
  }
  std::string lowered = to_lower(decoded);
  std::string collapsed;
  collapsed.reserve(lowered.size());
  for (char c : lowered) {
    if (c == '.' && (collapsed.empty() || collapsed.back() == '.')) continue;
    collapsed.push_back(c);
  }
  while (!collapsed.empty() && collapsed.back() == '.') collapsed.pop_back();
  if (collapsed.empty()) return std::nullopt;
  if (!std::all_of(collapsed.begin(), collapsed.end(), is_hostname_char)) {
    return std::nullopt;
  }
  if (auto ipv4 = normalize_ipv4(collapsed)) return ipv4;
  return collapsed;
}

std::optional<std::string> canonical_ipv6(std::string_view inner) {
  std::string text = to_lower(inner);
  if (text.empty() || text.size() > 45) return std::nullopt;
  in6_addr addr{};
  if (inet_pton(AF_INET6, text.c_str(), &addr) != 1) return std::nullopt;
  char buf[INET6_ADDRSTRLEN];
  if (!inet_ntop(AF_INET6, &addr, buf, sizeof(buf))) return std::nullopt;
  return "[" + std::string(buf) + "]";
}

uint16_t default_port(std::string_view scheme) {
  return scheme == "https" ? 443 : 80;
}

bool is_scheme_char(char c, bool first) {
  bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (first) return alpha;
  return alpha || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

// Length of a leading "scheme:" (excluding the colon), or 0.
std::size_t scheme_length(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ':') return i;
    if (!is_scheme_char(s[i], i == 0)) return 0;
  }
  return 0;
}

std::string strip_whitespace(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && static_cast<unsigned char>(raw[begin]) <= 0x20) ++begin;
  while (end > begin && static_cast<unsigned char>(raw[end - 1]) <= 0x20) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    char c = raw[i];
    if (c == '\t' || c == '\r' || c == '\n') continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

uint16_t CanonicalUrl::effective_port() const {
  return port.value_or(default_port(scheme));
}

std::string CanonicalUrl::expression() const {
  std::string out = host + path;
  if (query) {
    out.push_back('?');
    out.append(*query);
  }
  return out;
}

CanonicalUrl parse_and_canonicalize(std::string_view raw) {
  std::string text = strip_whitespace(raw);
  if (text.empty()) throw MalformedUrl("empty URL");

  if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);

  std::size_t scheme_len = scheme_length(text);
  if (scheme_len == 0) throw MalformedUrl("missing scheme");
  CanonicalUrl url;
  url.scheme = to_lower(std::string_view(text).substr(0, scheme_len));
  if (url.scheme != "http" && url.scheme != "https") {
    throw MalformedUrl("unsupported scheme: " + url.scheme);
  }
  std::string_view rest = std::string_view(text).substr(scheme_len + 1);
  if (rest.substr(0, 2) != "//") throw MalformedUrl("missing authority");
  rest.remove_prefix(2);

  std::size_t authority_end = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, authority_end);
  std::string_view remainder = authority_end == std::string_view::npos
                                   ? std::string_view()
                                   : rest.substr(authority_end);

  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }

  std::string_view host_text;
  std::string_view port_text;
  bool has_port = false;
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) throw MalformedUrl("unclosed IPv6");
    host_text = authority.substr(1, close - 1);
    std::string_view after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') throw MalformedUrl("junk after IPv6 host");
      port_text = after.substr(1);
      has_port = true;
    }
    auto host = canonical_ipv6(host_text);
    if (!host) throw MalformedUrl("invalid IPv6 host");
    url.host = *host;
  } else {
    if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
      host_text = authority.substr(0, colon);
      port_text = authority.substr(colon + 1);
      has_port = true;
    } else {
      host_text = authority;
    }
    auto host = canonical_host(host_text);
    if (!host) throw MalformedUrl("invalid host");
    url.host = *host;
  }

  if (has_port && !port_text.empty()) {
    if (port_text.size() > 5 ||
        !std::all_of(port_text.begin(), port_text.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
      throw MalformedUrl("invalid port");
    }
    unsigned value = 0;
    std::from_chars(port_text.data(), port_text.data() + port_text.size(),
                    value);
    if (value == 0 || value > 65535) throw MalformedUrl("port out of range");
    if (value != default_port(url.scheme)) {
      url.port = static_cast<uint16_t>(value);
    }
  }

  std::string_view raw_path = remainder;
  if (auto q = remainder.find('?'); q != std::string_view::npos) {
    raw_path = remainder.substr(0, q);
    url.query = percent_escape(percent_decode_fixpoint(remainder.substr(q + 1)));
  }
  url.path = percent_escape(
      resolve_path_segments(percent_decode_fixpoint(raw_path)));
  return url;
}

std::string render(const CanonicalUrl& url) {
  std::string out = url.scheme + "://" + url.host;
  if (url.port) out += ":" + std::to_string(*url.port);
  // A literal '?' in the path must not be mistaken for the query delimiter.
  for (char c : url.path) {
    if (c == '?') {
      out += "%3F";
    } else {
      out.push_back(c);
    }
  }
  if (url.query) {
    out.push_back('?');
    out.append(*url.query);
  }
  return out;
}

std::optional<std::string> canonicalize_hostname(std::string_view raw) {
  std::string text = strip_whitespace(raw);
  if (text.empty()) return std::nullopt;
  if (text.front() == '[' && text.back() == ']') {
    return canonical_ipv6(std::string_view(text).substr(1, text.size() - 2));
  }
  try {
    return canonical_host(text);
  } catch (const MalformedUrl&) {
    return std::nullopt;
  }
}

bool is_ip_literal(std::string_view host) {
  if (!host.empty() && host.front() == '[') return true;
  in_addr addr{};
  std::string copy(host);
  return inet_pton(AF_INET, copy.c_str(), &addr) == 1;
}

std::vector<std::string> host_suffixes(std::string_view host) {
  std::vector<std::string> out{std::string(host)};
  if (is_ip_literal(host)) return out;
  auto labels = split_labels(host);
  std::size_t longest = std::min(kMaxHostSuffixLabels, labels.size());
  for (std::size_t count = longest; count >= 2; --count) {
    std::size_t first = labels.size() - count;
    std::string_view suffix = host.substr(
        static_cast<std::size_t>(labels[first].data() - host.data()));
    if (std::find(out.begin(), out.end(), suffix) == out.end()) {
      out.emplace_back(suffix);
    }
  }
  return out;
}

std::vector<std::string> path_prefixes(std::string_view path,
                                       const std::optional<std::string>& query) {
  std::vector<std::string> out;
  auto add = [&out](std::string value) {
    if (std::find(out.begin(), out.end(), value) == out.end()) {
      out.push_back(std::move(value));
    }
  };
  if (query) add(std::string(path) + "?" + *query);
  add(std::string(path));

  std::vector<std::string> directories{"/"};
  std::size_t pos = 1;
  while (directories.size() < kMaxDirectoryPrefixes) {
    std::size_t slash = path.find('/', pos);
    if (slash == std::string_view::npos) break;
    directories.emplace_back(path.substr(0, slash + 1));
    pos = slash + 1;
  }
  for (auto it = directories.rbegin(); it != directories.rend(); ++it) add(*it);
  return out;
}

std::vector<std::string> lookup_expressions(const CanonicalUrl& url) {
  auto hosts = host_suffixes(url.host);
  auto paths = path_prefixes(url.path, url.query);
  std::vector<std::string> out;
  out.reserve(hosts.size() * paths.size());
  for (const auto& host : hosts) {
    for (const auto& path : paths) out.push_back(host + path);
  }
  return out;
}

std::vector<std::string> host_lookup_expressions(std::string_view host) {
  std::vector<std::string> out;
  for (auto& suffix : host_suffixes(host)) out.push_back(suffix + "/");
  return out;
}

namespace {

struct UrlParts {
  std::string scheme;
  std::string authority;
  std::string path;
  std::optional<std::string> query;
};

std::optional<UrlParts> split_absolute(std::string_view url) {
  std::size_t scheme_len = scheme_length(url);
  if (scheme_len == 0) return std::nullopt;
  UrlParts parts;
  parts.scheme = to_lower(url.substr(0, scheme_len));
  std::string_view rest = url.substr(scheme_len + 1);
  if (rest.substr(0, 2) != "//") return std::nullopt;
  rest.remove_prefix(2);
  std::size_t end = rest.find_first_of("/?");
  parts.authority = std::string(rest.substr(0, end));
  rest = end == std::string_view::npos ? std::string_view() : rest.substr(end);
  std::size_t q = rest.find('?');
  parts.path = std::string(rest.substr(0, q));
  if (q != std::string_view::npos) parts.query = std::string(rest.substr(q + 1));
  return parts;
}

// RFC 3986 remove_dot_segments, keeping empty segments intact.
std::string remove_dot_segments(std::string_view input) {
  std::vector<std::string_view> out;
  bool absolute = !input.empty() && input.front() == '/';
  std::string_view rest = absolute ? input.substr(1) : input;
  bool trailing = false;
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    std::size_t slash = rest.find('/', pos);
    if (slash == std::string_view::npos) slash = rest.size();
    std::string_view segment = rest.substr(pos, slash - pos);
    bool last = slash == rest.size();
    if (segment == ".") {
      trailing = last;
    } else if (segment == "..") {
      if (!out.empty()) out.pop_back();
      trailing = last;
    } else {
      out.push_back(segment);
      trailing = false;
    }
    pos = slash + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) result.push_back('/');
    result.append(out[i]);
  }
  if (trailing && !out.empty() && !out.back().empty()) result.push_back('/');
  return result;
}

std::string assemble(const UrlParts& parts) {
  std::string out = parts.scheme + "://" + parts.authority;
  out += parts.path.empty() ? "/" : parts.path;
  if (parts.query) out += "?" + *parts.query;
  return out;
}

}  // namespace

std::optional<std::string> resolve_reference(std::string_view base,
                                             std::string_view reference) {
  std::string ref = strip_whitespace(reference);
  if (auto hash = ref.find('#'); hash != std::string::npos) ref.resize(hash);

  auto base_parts = split_absolute(strip_whitespace(base));
  if (!base_parts) return std::nullopt;

  UrlParts target;
  if (scheme_length(ref) > 0) {
    auto parts = split_absolute(ref);
    if (!parts) return std::nullopt;
    target = *parts;
    target.path = remove_dot_segments(target.path);
  } else if (ref.substr(0, 2) == "//") {
    auto parts = split_absolute(base_parts->scheme + ":" + ref);
    if (!parts) return std::nullopt;
    target = *parts;
    target.path = remove_dot_segments(target.path);
  } else {
    target.scheme = base_parts->scheme;
    target.authority = base_parts->authority;
    std::string_view rest = ref;
    std::size_t q = rest.find('?');
    std::string_view ref_path = rest.substr(0, q);
    std::optional<std::string> ref_query;
    if (q != std::string_view::npos) ref_query = std::string(rest.substr(q + 1));
    if (ref_path.empty()) {
      target.path = base_parts->path;
      target.query = ref_query ? ref_query : base_parts->query;
    } else {
      if (ref_path.front() == '/') {
        target.path = remove_dot_segments(ref_path);
      } else {
        std::string merged;
        if (base_parts->path.empty()) {
          merged = "/" + std::string(ref_path);
        } else {
          auto slash = base_parts->path.rfind('/');
          merged = base_parts->path.substr(0, slash + 1) + std::string(ref_path);
        }
        target.path = remove_dot_segments(merged);
      }
      target.query = ref_query;
    }
  }
  if (target.scheme != "http" && target.scheme != "https") return std::nullopt;
  if (target.authority.empty()) return std::nullopt;
  return assemble(target);
}

}  // namespace trackguard

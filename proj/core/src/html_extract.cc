#include "trackguard/html_extract.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <utility>

#include "trackguard/url.h"

namespace trackguard {
namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  auto it = std::search(haystack.begin() + std::min(from, haystack.size()), haystack.end(),
                        needle.begin(), needle.end(),
                        [](char a, char b) { return lower(a) == lower(b); });
  return it == haystack.end() ? std::string_view::npos : it - haystack.begin();
}

std::string decode_entities(std::string_view value) {
  static const std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&quot;", '"'}, {"&#39;", '\''}, {"&apos;", '\''},
      {"&lt;", '<'},  {"&gt;", '>'},
  };
  std::string out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size();) {
    bool replaced = false;
    if (value[i] == '&') {
      for (const auto& [entity, ch] : kEntities) {
        if (value.substr(i, entity.size()) == entity) {
          out += ch;
          i += entity.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += value[i++];
  }
  return out;
}

struct Tag {
  std::string name;
  std::map<std::string, std::string> attrs;  // first occurrence wins
  std::size_t end = 0;                       // index just past '>'
};

// Parses the tag starting at html[pos] == '<'. Returns false when this is
// not an opening tag.
bool parse_tag(std::string_view html, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i >= html.size() || !std::isalpha(static_cast<unsigned char>(html[i]))) return false;
  while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])) ||
                             html[i] == '-')) {
    tag.name += lower(html[i++]);
  }
  while (i < html.size()) {
    while (i < html.size() && (is_space(html[i]) || html[i] == '/')) ++i;
    if (i >= html.size()) break;
    if (html[i] == '>') {
      tag.end = i + 1;
      return true;
    }
    std::string name;
    while (i < html.size() && !is_space(html[i]) && html[i] != '=' && html[i] != '>' &&
           html[i] != '/') {
      name += lower(html[i++]);
    }
    while (i < html.size() && is_space(html[i])) ++i;
    std::string value;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && is_space(html[i])) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        char quote = html[i++];
        std::size_t close = html.find(quote, i);
        if (close == std::string_view::npos) close = html.size();
        value = decode_entities(html.substr(i, close - i));
        i = std::min(close + 1, html.size());
      } else {
        std::size_t start = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '>') ++i;
        value = decode_entities(html.substr(start, i - start));
      }
    }
    if (name.empty()) {
      ++i;
      continue;
    }
    tag.attrs.emplace(std::move(name), std::move(value));
  }
  tag.end = html.size();
  return true;
}

bool rel_has_stylesheet(const std::string& rel) {
  std::size_t i = 0;
  while (i < rel.size()) {
    while (i < rel.size() && is_space(rel[i])) ++i;
    std::size_t start = i;
    while (i < rel.size() && !is_space(rel[i])) ++i;
    std::string token;
    for (std::size_t k = start; k < i; ++k) token += lower(rel[k]);
    if (token == "stylesheet") return true;
  }
  return false;
}

std::optional<std::pair<ElementHint, std::string>> resource_of(const Tag& tag) {
  auto attr = [&](const char* name) -> const std::string* {
    auto it = tag.attrs.find(name);
    return it == tag.attrs.end() ? nullptr : &it->second;
  };
  const std::string* ref = nullptr;
  ElementHint hint = ElementHint::kOther;
  if (tag.name == "script") {
    hint = ElementHint::kScript;
    ref = attr("src");
  } else if (tag.name == "img") {
    hint = ElementHint::kImg;
    ref = attr("src");
  } else if (tag.name == "iframe") {
    hint = ElementHint::kIframe;
    ref = attr("src");
  } else if (tag.name == "object") {
    hint = ElementHint::kObject;
    ref = attr("data");
  } else if (tag.name == "link") {
    const std::string* rel = attr("rel");
    if (!rel || !rel_has_stylesheet(*rel)) return std::nullopt;
    hint = ElementHint::kStylesheet;
    ref = attr("href");
  }
  if (!ref) return std::nullopt;
  std::string_view trimmed = *ref;
  while (!trimmed.empty() && is_space(trimmed.front())) trimmed.remove_prefix(1);
  while (!trimmed.empty() && is_space(trimmed.back())) trimmed.remove_suffix(1);
  if (trimmed.empty()) return std::nullopt;
  return std::pair{hint, std::string(trimmed)};
}

}  // namespace

std::vector<Subresource> extract_subresources(std::string_view html,
                                              std::string_view base) {
  std::vector<Subresource> out;
  std::set<std::pair<ElementHint, std::string>> seen;
  std::size_t pos = 0;
  while ((pos = html.find('<', pos)) != std::string_view::npos) {
    if (html.substr(pos, 4) == "<!--") {
      std::size_t close = html.find("-->", pos + 4);
      if (close == std::string_view::npos) break;
      pos = close + 3;
      continue;
    }
    Tag tag;
    if (!parse_tag(html, pos, tag)) {
      ++pos;
      continue;
    }
    pos = tag.end;
    if (auto found = resource_of(tag)) {
      if (auto absolute = resolve_reference(base, found->second)) {
        if (seen.emplace(found->first, *absolute).second) {
          out.push_back({found->first, *absolute});
        }
      }
    }
    // raw-text content
    if (tag.name == "script" || tag.name == "style") {
      std::size_t close = ifind(html, "</" + tag.name, pos);
      if (close == std::string_view::npos) break;
      pos = close;
    }
  }
  return out;
}

}  // namespace trackguard

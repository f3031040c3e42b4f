#include "trackguard/list_compiler.h"

#include <json.hpp>

#include "trackguard/errors.h"
#include "trackguard/url.h"

namespace trackguard {
namespace {

using nlohmann::json;

std::string pointer_escape(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string child(const std::string& path, const std::string& token) {
  return path + "/" + pointer_escape(token);
}

std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

}  // namespace

bool CategoryFilter::accepts(const std::string& category) const {
  if (exclude.count(category)) return false;
  return include.empty() || include.count(category);
}

DomainList parse_disconnect(std::string_view text, const CategoryFilter& filter,
                            std::string name) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw SchemaError("", "document is not valid JSON");
  if (!doc.is_object()) throw SchemaError("", "expected an object");
  auto categories = doc.find("categories");
  if (categories == doc.end()) throw SchemaError("/categories", "missing");
  if (!categories->is_object()) {
    throw SchemaError("/categories", "expected an object");
  }

  DomainList list;
  list.name = std::move(name);
  list.source_format = ListFormat::kDisconnectJson;
  for (const auto& [category, entities] : categories->items()) {
    std::string category_path = child("/categories", category);
    if (!entities.is_array()) {
      throw SchemaError(category_path, "expected an array of entities");
    }
    if (!filter.accepts(category)) continue;
    for (std::size_t i = 0; i < entities.size(); ++i) {
      const json& entity = entities[i];
      std::string entity_path = child(category_path, i);
      if (!entity.is_object()) throw SchemaError(entity_path, "expected an object");
      for (const auto& [entity_name, homepages] : entity.items()) {
        std::string homepages_path = child(entity_path, entity_name);
        if (!homepages.is_object()) {
          throw SchemaError(homepages_path, "expected an object");
        }
        for (const auto& [homepage, domains] : homepages.items()) {
          std::string domains_path = child(homepages_path, homepage);
          if (domains.is_string()) continue;
          if (!domains.is_array()) {
            throw SchemaError(domains_path, "expected an array of domains");
          }
          for (std::size_t j = 0; j < domains.size(); ++j) {
            std::string domain_path = child(domains_path, j);
            if (!domains[j].is_string()) {
              throw SchemaError(domain_path, "expected a string");
            }
            auto domain = canonicalize_hostname(domains[j].get<std::string>());
            if (!domain) {
              throw SchemaError(domain_path,
                                "invalid domain: " + domains[j].get<std::string>());
            }
            list.domains.insert(*domain);
          }
        }
      }
    }
  }
  return list;
}

DomainList parse_plain(std::string_view text, std::string name) {
  DomainList list;
  list.name = std::move(name);
  list.source_format = ListFormat::kPlainText;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;

    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string_view entry = line.substr(first, last - first + 1);
    auto domain = canonicalize_hostname(entry);
    if (!domain) {
      throw InvalidDomain(line_number, "invalid domain: " + std::string(entry));
    }
    list.domains.insert(*domain);
  }
  return list;
}

ListUpdate compile(const DomainList& list, uint64_t to_version) {
  ListUpdate update;
  update.from_version = 0;
  update.to_version = to_version;
  update.add.reserve(list.domains.size());
  for (const auto& domain : list.domains) update.add.push_back(domain + "/");
  return update;
}

}  // namespace trackguard

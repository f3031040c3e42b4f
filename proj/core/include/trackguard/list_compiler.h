#pragma once

#include <set>
#include <string>
#include <string_view>

#include "trackguard/list_update.h"

namespace trackguard {

enum class ListFormat { kDisconnectJson, kPlainText };

struct DomainList {
  std::string name;
  ListFormat source_format = ListFormat::kPlainText;
  std::set<std::string> domains;  // canonical hostnames
};

// Which Disconnect categories to ingest. An empty `include` means every
// category not listed in `exclude`.
struct CategoryFilter {
  std::set<std::string> include;
  std::set<std::string> exclude{"Content"};

  bool accepts(const std::string& category) const;
};

// Disconnect services.json shape:
//   {"categories": {<category>: [ {<entity>: {<homepage>: [<domain>...]}} ]}}
// String-valued entity keys (annotations such as "dnt") are skipped.
// Throws SchemaError with the JSON pointer of the bad node.
DomainList parse_disconnect(std::string_view text,
                            const CategoryFilter& filter = {},
                            std::string name = "disconnect");

// One domain per line; '#' comments and blank lines are skipped.
// Throws InvalidDomain with the 1-based line number.
DomainList parse_plain(std::string_view text, std::string name = "plain");

// Full snapshot whose add set is "<domain>/" for every domain, sorted.
ListUpdate compile(const DomainList& list, uint64_t to_version = 1);

}  // namespace trackguard

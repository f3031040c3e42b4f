#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trackguard/page_session.h"

namespace trackguard {

struct Subresource {
  ElementHint hint = ElementHint::kOther;
  std::string url;  // absolute

  friend bool operator==(const Subresource&, const Subresource&) = default;
};

// Tag-level scan for script[src], img[src], iframe[src], object[data] and
// link[rel=stylesheet][href]. Relative references resolve against `base`;
// non-http(s) results are dropped. Document order, duplicates removed.
std::vector<Subresource> extract_subresources(std::string_view html,
                                              std::string_view base);

}  // namespace trackguard

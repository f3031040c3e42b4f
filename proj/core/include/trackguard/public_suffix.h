#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace trackguard {

// Public Suffix List matcher (publicsuffix.org text format: one rule per
// line, "//" comments, "*." wildcards, "!" exceptions). Both the ICANN and
// private sections are honored. Unicode rules are stored in punycode.
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::string_view text);
  // The snapshot compiled into the library.
  static const PublicSuffixList& bundled();

  // Longest matching public suffix, falling back to the last label.
  std::string public_suffix(std::string_view host) const;
  bool is_public_suffix(std::string_view host) const;
  // Public suffix plus one label. A host that is itself a public suffix, or
  // an IP literal, is returned unchanged.
  std::string registrable_domain(std::string_view host) const;

  std::size_t rule_count() const {
    return rules_.size() + wildcards_.size() + exceptions_.size();
  }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // "*.ck" stored as "ck"
  std::unordered_set<std::string> exceptions_;  // "!www.ck" stored as "www.ck"
};

}  // namespace trackguard

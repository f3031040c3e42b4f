#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace trackguard::internal {

// Converts a UTF-8 domain name to its ASCII form label by label
// (RFC 3492 punycode with the "xn--" prefix). ASCII labels pass through
// unchanged. No IDNA mapping or normalization is applied. Returns nullopt
// for invalid UTF-8.
std::optional<std::string> domain_to_ascii(std::string_view utf8);

}  // namespace trackguard::internal

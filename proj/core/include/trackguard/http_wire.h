#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trackguard/net.h"

namespace trackguard::http {

// Ordered header list; names compare case-insensitively.
class Headers {
 public:
  void add(std::string name, std::string value);
  void remove(std::string_view name);
  std::optional<std::string> get(std::string_view name) const;
  std::vector<std::string> get_all(std::string_view name) const;
  bool has_token(std::string_view name, std::string_view token) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

bool iequals(std::string_view a, std::string_view b);

struct RequestHead {
  std::string method;
  std::string target;
  std::string version;
  Headers headers;
};

struct ResponseHead {
  std::string version;
  int status = 0;
  std::string reason;
  Headers headers;
};

// Parse a head as returned by StreamReader::read_head(). Throw HttpParseError.
RequestHead parse_request_head(std::string_view raw);
ResponseHead parse_response_head(std::string_view raw);

enum class BodyFraming { kNone, kLength, kChunked, kUntilClose };

struct Framing {
  BodyFraming kind = BodyFraming::kNone;
  uint64_t length = 0;
};

Framing request_framing(const RequestHead& head);
Framing response_framing(const ResponseHead& head, std::string_view request_method);

// Streams the body bytes exactly as they appear on the wire (chunk framing
// included). Returns the number of bytes forwarded.
uint64_t relay_body(net::StreamReader& reader, const Framing& framing,
                    const std::function<void(std::string_view)>& sink);

struct Response {
  ResponseHead head;
  std::string body;          // transfer-decoded
  uint64_t head_bytes = 0;
  uint64_t body_wire_bytes = 0;

  uint64_t wire_bytes() const { return head_bytes + body_wire_bytes; }
};

// Reads one complete response. Throws HttpParseError / NetworkError.
Response read_response(net::StreamReader& reader, std::string_view request_method);

std::string_view reason_phrase(int status);

}  // namespace trackguard::http

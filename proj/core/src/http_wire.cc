#include "trackguard/http_wire.h"

#include <algorithm>
#include <charconv>

#include "trackguard/errors.h"

namespace trackguard::http {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits a head into its start line and parsed header fields.
std::string_view parse_fields(std::string_view raw, Headers& headers) {
  auto line_end = raw.find("\r\n");
  if (line_end == std::string_view::npos) throw HttpParseError("missing CRLF");
  std::string_view start_line = raw.substr(0, line_end);
  std::size_t pos = line_end + 2;
  while (pos < raw.size()) {
    auto end = raw.find("\r\n", pos);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(pos, end - pos);
    pos = end + 2;
    if (line.empty()) break;
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw HttpParseError("malformed header line");
    }
    std::string_view name = line.substr(0, colon);
    if (name.find_first_of(" \t") != std::string_view::npos) {
      throw HttpParseError("whitespace in header name");
    }
    headers.add(std::string(name), std::string(trim(line.substr(colon + 1))));
  }
  return start_line;
}

std::optional<uint64_t> parse_length(std::string_view text) {
  text = trim(text);
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

bool is_chunked(const Headers& headers) {
  auto te = headers.get("Transfer-Encoding");
  if (!te) return false;
  std::string_view value = *te;
  auto comma = value.rfind(',');
  std::string_view last = trim(comma == std::string_view::npos
                                   ? value
                                   : value.substr(comma + 1));
  return iequals(last, "chunked");
}

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           auto lower = [](char c) {
             return c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c;
           };
           return lower(x) == lower(y);
         });
}

void Headers::add(std::string name, std::string value) {
  entries_.emplace_back(std::move(name), std::move(value));
}

void Headers::remove(std::string_view name) {
  std::erase_if(entries_, [&](const auto& e) { return iequals(e.first, name); });
}

std::optional<std::string> Headers::get(std::string_view name) const {
  for (const auto& [key, value] : entries_) {
    if (iequals(key, name)) return value;
  }
  return std::nullopt;
}

std::vector<std::string> Headers::get_all(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    if (iequals(key, name)) out.push_back(value);
  }
  return out;
}

bool Headers::has_token(std::string_view name, std::string_view token) const {
  for (const auto& value : get_all(name)) {
    std::string_view rest = value;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      if (iequals(trim(rest.substr(0, comma)), token)) return true;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return false;
}

std::string Headers::serialize() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += ": ";
    out += value;
    out += "\r\n";
  }
  return out;
}

RequestHead parse_request_head(std::string_view raw) {
  RequestHead head;
  std::string_view line = parse_fields(raw, head.headers);
  auto sp1 = line.find(' ');
  auto sp2 = line.rfind(' ');
  if (sp1 == std::string_view::npos || sp2 == sp1) {
    throw HttpParseError("malformed request line");
  }
  head.method = std::string(line.substr(0, sp1));
  head.target = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
  head.version = std::string(line.substr(sp2 + 1));
  if (head.method.empty() || head.target.empty() ||
      head.version.rfind("HTTP/1.", 0) != 0) {
    throw HttpParseError("malformed request line");
  }
  return head;
}

ResponseHead parse_response_head(std::string_view raw) {
  ResponseHead head;
  std::string_view line = parse_fields(raw, head.headers);
  auto sp1 = line.find(' ');
  if (sp1 == std::string_view::npos || line.substr(0, 7) != "HTTP/1.") {
    throw HttpParseError("malformed status line");
  }
  head.version = std::string(line.substr(0, sp1));
  std::string_view rest = line.substr(sp1 + 1);
  auto space = std::find(rest.begin(), rest.end(), ' ');
  auto sp2 = space == rest.end() ? std::string_view::npos
                                 : static_cast<std::size_t>(space - rest.begin());
  std::string_view code = rest.substr(0, sp2);
  auto status = parse_length(code);
  if (!status || code.size() != 3) throw HttpParseError("malformed status code");
  head.status = static_cast<int>(*status);
  if (sp2 != std::string_view::npos) head.reason = std::string(rest.substr(sp2 + 1));
  return head;
}

Framing request_framing(const RequestHead& head) {
  if (is_chunked(head.headers)) return {BodyFraming::kChunked, 0};
  if (auto length = head.headers.get("Content-Length")) {
    auto value = parse_length(*length);
    if (!value) throw HttpParseError("bad Content-Length");
    return {*value ? BodyFraming::kLength : BodyFraming::kNone, *value};
  }
  return {BodyFraming::kNone, 0};
}

Framing response_framing(const ResponseHead& head,
                         std::string_view request_method) {
  if (iequals(request_method, "HEAD") || (head.status >= 100 && head.status < 200) ||
      head.status == 204 || head.status == 304) {
    return {BodyFraming::kNone, 0};
  }
  if (is_chunked(head.headers)) return {BodyFraming::kChunked, 0};
  if (auto length = head.headers.get("Content-Length")) {
    auto value = parse_length(*length);
    if (!value) throw HttpParseError("bad Content-Length");
    return {*value ? BodyFraming::kLength : BodyFraming::kNone, *value};
  }
  return {BodyFraming::kUntilClose, 0};
}

uint64_t relay_body(net::StreamReader& reader, const Framing& framing,
                    const std::function<void(std::string_view)>& sink) {
  uint64_t total = 0;
  auto counted = [&](std::string_view bytes) {
    total += bytes.size();
    sink(bytes);
  };
  switch (framing.kind) {
    case BodyFraming::kNone:
      return 0;
    case BodyFraming::kLength:
      reader.read_exact(framing.length, counted);
      return total;
    case BodyFraming::kUntilClose:
      reader.read_to_end(counted);
      return total;
    case BodyFraming::kChunked:
      for (;;) {
        std::string size_line = reader.read_line();
        counted(size_line);
        std::string_view size_text = size_line;
        size_text = size_text.substr(0, size_text.find_first_of(";\r"));
        size_text = trim(size_text);
        uint64_t size = 0;
        auto [ptr, ec] = std::from_chars(
            size_text.data(), size_text.data() + size_text.size(), size, 16);
        if (size_text.empty() || ec != std::errc() ||
            ptr != size_text.data() + size_text.size()) {
          throw HttpParseError("bad chunk size");
        }
        if (size == 0) {
          // Trailer section ends with an empty line.
          for (;;) {
            std::string trailer = reader.read_line();
            counted(trailer);
            if (trailer == "\r\n") return total;
          }
        }
        reader.read_exact(size, counted);
        std::string crlf = reader.read_line();
        if (crlf != "\r\n") throw HttpParseError("missing CRLF after chunk");
        counted(crlf);
      }
  }
  return total;
}

Response read_response(net::StreamReader& reader, std::string_view request_method) {
  auto raw = reader.read_head();
  if (!raw) throw HttpParseError("connection closed before response");
  Response response;
  response.head = parse_response_head(*raw);
  response.head_bytes = raw->size();
  Framing framing = response_framing(response.head, request_method);
  if (framing.kind != BodyFraming::kChunked) {
    response.body_wire_bytes = relay_body(
        reader, framing, [&](std::string_view bytes) { response.body.append(bytes); });
    return response;
  }
  std::string wire;
  response.body_wire_bytes =
      relay_body(reader, framing, [&](std::string_view bytes) { wire.append(bytes); });
  // Decode the chunked wire form captured above.
  std::size_t pos = 0;
  for (;;) {
    auto eol = wire.find("\r\n", pos);
    std::string_view size_text = std::string_view(wire).substr(pos, eol - pos);
    size_text = size_text.substr(0, size_text.find(';'));
    uint64_t size = 0;
    std::from_chars(size_text.data(), size_text.data() + size_text.size(), size, 16);
    pos = eol + 2;
    if (size == 0) break;
    response.body.append(wire, pos, size);
    pos += size + 2;
  }
  return response;
}

std::string_view reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 204: return "No Content";
    case 304: return "Not Modified";
    case 400: return "Bad Request";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 410: return "Gone";
    case 451: return "Unavailable For Legal Reasons";
    case 500: return "Internal Server Error";
    case 502: return "Bad Gateway";
    case 503: return "Service Unavailable";
    case 504: return "Gateway Timeout";
    default: return status >= 500 ? "Server Error" : status >= 400 ? "Client Error" : "OK";
  }
}

}  // namespace trackguard::http

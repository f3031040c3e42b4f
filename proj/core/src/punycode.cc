#include "punycode.h"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace trackguard::internal {
namespace {

constexpr uint32_t kBase = 36;
constexpr uint32_t kTMin = 1;
constexpr uint32_t kTMax = 26;
constexpr uint32_t kSkew = 38;
constexpr uint32_t kDamp = 700;
constexpr uint32_t kInitialBias = 72;
constexpr uint32_t kInitialN = 128;

uint32_t adapt(uint32_t delta, uint32_t num_points, bool first_time) {
  delta = first_time ? delta / kDamp : delta / 2;
  delta += delta / num_points;
  uint32_t k = 0;
  while (delta > ((kBase - kTMin) * kTMax) / 2) {
    delta /= kBase - kTMin;
    k += kBase;
  }
  return k + (kBase - kTMin + 1) * delta / (delta + kSkew);
}

char encode_digit(uint32_t d) {
  return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26));
}

std::optional<std::vector<uint32_t>> decode_utf8(std::string_view in) {
  std::vector<uint32_t> out;
  for (std::size_t i = 0; i < in.size();) {
    auto c = static_cast<unsigned char>(in[i]);
    int extra = 0;
    uint32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      return std::nullopt;
    }
    if (i + extra >= in.size()) return std::nullopt;
    for (int k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(in[i + k]);
      if ((cc >> 6) != 0x2) return std::nullopt;
      cp = (cp << 6) | (cc & 0x3f);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::optional<std::string> encode_label(const std::vector<uint32_t>& input) {
  std::string output;
  for (uint32_t c : input) {
    if (c < 0x80) output.push_back(static_cast<char>(c));
  }
  uint32_t basic = static_cast<uint32_t>(output.size());
  uint32_t handled = basic;
  if (basic > 0) output.push_back('-');

  uint32_t n = kInitialN;
  uint32_t delta = 0;
  uint32_t bias = kInitialBias;
  while (handled < input.size()) {
    uint32_t m = UINT32_MAX;
    for (uint32_t c : input) {
      if (c >= n && c < m) m = c;
    }
    if ((m - n) > (UINT32_MAX - delta) / (handled + 1)) return std::nullopt;
    delta += (m - n) * (handled + 1);
    n = m;
    for (uint32_t c : input) {
      if (c < n && ++delta == 0) return std::nullopt;
      if (c == n) {
        uint32_t q = delta;
        for (uint32_t k = kBase;; k += kBase) {
          uint32_t t = k <= bias ? kTMin : (k >= bias + kTMax ? kTMax : k - bias);
          if (q < t) break;
          output.push_back(encode_digit(t + (q - t) % (kBase - t)));
          q = (q - t) / (kBase - t);
        }
        output.push_back(encode_digit(q));
        bias = adapt(delta, handled + 1, handled == basic);
        delta = 0;
        ++handled;
      }
    }
    ++delta;
    ++n;
  }
  return output;
}

}  // namespace

std::optional<std::string> domain_to_ascii(std::string_view utf8) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= utf8.size()) {
    std::size_t dot = utf8.find('.', pos);
    if (dot == std::string_view::npos) dot = utf8.size();
    std::string_view label = utf8.substr(pos, dot - pos);
    if (pos) out.push_back('.');
    bool ascii = std::all_of(label.begin(), label.end(), [](char c) {
      return static_cast<unsigned char>(c) < 0x80;
    });
    if (ascii) {
      out.append(label);
    } else {
      auto code_points = decode_utf8(label);
      if (!code_points) return std::nullopt;
      auto encoded = encode_label(*code_points);
      if (!encoded) return std::nullopt;
      out += "xn--" + *encoded;
    }
    pos = dot + 1;
  }
  return out;
}

}  // namespace trackguard::internal

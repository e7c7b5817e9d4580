#include "kgres/sha1.hpp"

#include <array>
#include <cstdint>
#include <cstring>

namespace kgres {

namespace {

std::uint32_t rotl(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

}  // namespace

std::string sha1_hex(const std::string& bytes) {
  std::array<std::uint32_t, 5> h{0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

  std::string msg = bytes;
  const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
  msg.push_back(static_cast<char>(0x80));
  while (msg.size() % 64 != 56) msg.push_back('\0');
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xFF));

  std::array<std::uint32_t, 80> w{};
  for (size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    for (int i = 0; i < 16; ++i) {
      w[static_cast<size_t>(i)] = 0;
      for (int b = 0; b < 4; ++b)
        w[static_cast<size_t>(i)] =
            (w[static_cast<size_t>(i)] << 8) |
            static_cast<std::uint8_t>(msg[chunk + static_cast<size_t>(4 * i + b)]);
    }
    for (int i = 16; i < 80; ++i)
      w[static_cast<size_t>(i)] = rotl(w[static_cast<size_t>(i - 3)] ^ w[static_cast<size_t>(i - 8)] ^
                                           w[static_cast<size_t>(i - 14)] ^ w[static_cast<size_t>(i - 16)],
                                       1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[static_cast<size_t>(i)];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  std::string out;
  out.reserve(40);
  const char* digits = "0123456789abcdef";
  for (std::uint32_t v : h)
    for (int i = 7; i >= 0; --i) out.push_back(digits[(v >> (4 * i)) & 0xF]);
  return out;
}

std::string git_blob_hash(const std::string& content) {
  return sha1_hex("blob " + std::to_string(content.size()) + '\0' + content);
}

}  // namespace kgres

#include "chunkscope/net.hpp"

#include <charconv>

namespace chunkscope {

std::optional<std::uint32_t> parse_ipv4(const std::string &text) {
  std::uint32_t addr = 0;
  const char *p = text.data();
  const char *end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(p, end, value, 10);
    if (ec != std::errc{} || ptr == p || value > 255) return std::nullopt;
    addr = (addr << 8) | value;
    p = ptr;
    if (octet < 3) {
      if (p >= end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return addr;
}

std::string format_ipv4(std::uint32_t addr) {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((addr >> shift) & 0xffu);
    if (shift > 0) out += '.';
  }
  return out;
}

std::string format_prefix24(std::uint32_t prefix) {
  return format_ipv4(prefix & 0xffffff00u) + "/24";
}

} // namespace chunkscope

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace chunkscope {

// Dotted-quad IPv4 helpers shared by simulator, ingest, and aggregation.

std::optional<std::uint32_t> parse_ipv4(const std::string &text);
std::string format_ipv4(std::uint32_t addr);

// /24 prefix of an address (low 8 bits masked off).
inline std::uint32_t prefix24(std::uint32_t addr) { return addr & 0xffffff00u; }

std::string format_prefix24(std::uint32_t prefix);

} // namespace chunkscope

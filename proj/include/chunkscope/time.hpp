#pragma once

#include <cmath>
#include <cstdint>

namespace chunkscope {

// All durations are stored as integer microseconds; log formats carry
// decimal milliseconds. Conversions round to the nearest microsecond and
// are exact round-trips for any duration below ~52 days.
using micros_t = std::int64_t;

inline constexpr micros_t kMicrosPerMilli = 1000;
inline constexpr micros_t kMicrosPerSec = 1000000;

inline double us_to_ms(micros_t us) { return static_cast<double>(us) / 1000.0; }
inline double us_to_sec(micros_t us) { return static_cast<double>(us) / 1e6; }

inline micros_t ms_to_us(double ms) { return static_cast<micros_t>(std::llround(ms * 1000.0)); }
inline micros_t sec_to_us(double sec) { return static_cast<micros_t>(std::llround(sec * 1e6)); }

} // namespace chunkscope

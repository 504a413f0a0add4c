#pragma once

#include <cmath>
#include <cstdint>

namespace skybatch {

// Virtual clock tick: integer microseconds. Kept integral so repeated runs
// accumulate no float drift; reported values are converted to milliseconds.
using SimTime = std::int64_t;

inline double to_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }

inline SimTime from_ms(double ms) { return static_cast<SimTime>(std::llround(ms * 1000.0)); }

} // namespace skybatch

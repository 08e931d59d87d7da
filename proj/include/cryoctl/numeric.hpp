// Copyright 2026 The cryoctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cryoctl {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Round half away from zero. Used for every quantization step in the
/// library so that hardware and software paths agree.
inline std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(std::llround(x));
}

inline std::int64_t round_half_away(long double x) {
    return static_cast<std::int64_t>(std::llroundl(x));
}

/// Normalized sinc, sin(pi x)/(pi x).
inline double sinc(double x) {
    if (x == 0.0) {
        return 1.0;
    }
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

/// SplitMix64 finalizer. Maps (seed, stream, index) onto independent
/// 64-bit seeds for per-shot random substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

}  // namespace cryoctl

// Copyright 2026 The privts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "privts/errors.hpp"

namespace privts::mpc {

// Ring element of Z_2^64; all arithmetic wraps.
using Ring = std::uint64_t;
using RingVec = std::vector<Ring>;

inline constexpr int kRingBits = 64;

inline std::int64_t to_signed(Ring r) { return static_cast<std::int64_t>(r); }
inline Ring from_signed(std::int64_t s) { return static_cast<Ring>(s); }

// Fixed-point encoding with frac_bits fractional bits; representable range
// is |x| < 2^(64 - frac_bits - 2), which leaves the two headroom bits the
// exact-truncation protocol needs.
struct FixedPointCodec {
  int frac_bits = 16;

  double scale() const { return std::ldexp(1.0, frac_bits); }
  double limit() const { return std::ldexp(1.0, kRingBits - frac_bits - 2); }

  Ring encode(double x) const {
    if (!(std::fabs(x) < limit()))
      throw OutOfRange("value " + std::to_string(x) + " outside fixed-point range");
    return from_signed(std::llround(x * scale()));
  }

  double decode(Ring r) const {
    return static_cast<double>(to_signed(r)) / scale();
  }

  RingVec encode_vector(const std::vector<double>& xs) const {
    RingVec out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = encode(xs[i]);
    return out;
  }

  std::vector<double> decode_vector(const RingVec& rs) const {
    std::vector<double> out(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) out[i] = decode(rs[i]);
    return out;
  }
};

// Reference fixed-point semantics shared with the secure evaluator: floor
// division by 2^f (arithmetic shift).
inline Ring truncate_ring(Ring x, int frac_bits) {
  return from_signed(to_signed(x) >> frac_bits);
}

}  // namespace privts::mpc

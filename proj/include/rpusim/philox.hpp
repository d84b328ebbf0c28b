/* Copyright 2026 The rpusim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>

namespace rpusim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every random quantity in the simulator is a pure function of
/// (key, counter), so results never depend on evaluation order or
/// thread scheduling. The counter layout used throughout:
///
///   ctr[0] = low 32 bits of the operation id
///   ctr[1] = high 32 bits of the operation id
///   ctr[2] = element index (output line, input line, or device index)
///   ctr[3] = (stream tag << 24) | auxiliary (retry count, bit-word, slot)
struct Philox4x32 {
  using Ctr = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMult0 = 0xD2511F53u;
  static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static inline Ctr round(const Ctr &c, const Key &k) {
    const std::uint64_t p0 = std::uint64_t(kMult0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kMult1) * c[2];
    return {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
            std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
  }

  /// Ten-round keyed bijection; the standard recommended strength.
  static inline Ctr eval(Ctr c, Key k) {
    c = round(c, k);
    for (int r = 1; r < 10; ++r) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
      c = round(c, k);
    }
    return c;
  }
};

/// Stream tags: disjoint random streams per purpose. Placed in the top
/// byte of ctr[3] so no two purposes can collide on a counter value.
enum StreamTag : std::uint32_t {
  kTagDeviceSample = 1, // construction-time device parameter sampling
  kTagForwardNoise = 2, // analog output noise, forward reads
  kTagBackwardNoise = 3, // analog output noise, backward reads
  kTagMaskColumn = 4,   // stochastic update pulse bits, column side
  kTagMaskRow = 5,      // stochastic update pulse bits, row side
  kTagUpdateNoise = 6,  // cycle-to-cycle increment noise
  kTagShuffle = 7,      // epoch shuffling in the trainer
};

inline Philox4x32::Ctr make_ctr(std::uint64_t op, std::uint32_t elem,
                                StreamTag tag, std::uint32_t aux = 0) {
  return {std::uint32_t(op), std::uint32_t(op >> 32), elem,
          (std::uint32_t(tag) << 24) | (aux & 0xFFFFFFu)};
}

inline Philox4x32::Key make_key(std::uint64_t seed) {
  return {std::uint32_t(seed), std::uint32_t(seed >> 32)};
}

/// splitmix64 finalizer; used to derive per-array keys from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform double in (0,1), open at both ends, from 64 random bits.
/// Forcing the low bit keeps the product exact, so the result can never
/// round to 0 or 1 (the quantile function must stay finite).
inline double u64_to_unit(std::uint64_t u) {
  return double((u >> 11) | 1u) * 0x1.0p-53;
}

/// Inverse normal CDF, Wichura's algorithm AS 241 (PPND16). Accurate to
/// about 1e-16 relative over the full open interval.
double normal_quantile(double p);

/// First 64 bits of a Philox block in memory order: word 0 is the low half.
inline std::uint64_t block_u64(const Philox4x32::Ctr &r) {
  return std::uint64_t(r[0]) | (std::uint64_t(r[1]) << 32);
}

/// One standard normal variate from a counter/key pair. Consumes the
/// first 64 bits of the Philox block.
inline double normal_draw(const Philox4x32::Ctr &c, const Philox4x32::Key &k) {
  return normal_quantile(u64_to_unit(block_u64(Philox4x32::eval(c, k))));
}

/// One uniform (0,1) variate from a counter/key pair.
inline double uniform_draw(const Philox4x32::Ctr &c,
                           const Philox4x32::Key &k) {
  return u64_to_unit(block_u64(Philox4x32::eval(c, k)));
}

} // namespace rpusim

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

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace rpusim::kernels {

/// Table of arithmetic inner loops. `scalar()` is the portable reference;
/// SIMD variants must agree with it (bit-exact for the integer kernels,
/// within accumulation-order tolerance for the floating-point ones) and
/// are selected at runtime from CPU features.
struct Ops {
  const char *name;

  /// y = W x. W is rows x cols, row-major with leading dimension lda.
  void (*matvec)(const double *w, std::size_t rows, std::size_t cols,
                 std::size_t lda, const double *x, double *y);

  /// z = W^T d, accumulated row by row (z must be zeroed by the caller).
  void (*matvec_t)(const double *w, std::size_t rows, std::size_t cols,
                   std::size_t lda, const double *d, double *z);

  /// Rank-1 update W += a * d x^T.
  void (*ger)(double *w, std::size_t rows, std::size_t cols, std::size_t lda,
              const double *d, const double *x, double a);

  /// counts[i] = popcount(col_masks[i] & row_mask) for i in [0, n).
  void (*coincidence_counts)(const std::uint64_t *col_masks, std::size_t n,
                             std::uint64_t row_mask, std::uint8_t *counts);

  /// max_i |v_i|; 0 for empty input.
  double (*max_abs)(const double *v, std::size_t n);
};

/// Portable reference kernels.
const Ops &scalar();

/// AVX2+FMA kernels, or nullptr when unsupported by build or CPU.
const Ops *avx2();

/// The currently selected table. Defaults to the best supported variant;
/// the RPUSIM_KERNEL environment variable ("scalar", "avx2") overrides.
const Ops &active();

/// Force a variant by name ("scalar", "avx2", "auto"). Returns false if
/// the variant is unavailable; the selection is then left unchanged.
bool select(std::string_view name);

} // namespace rpusim::kernels

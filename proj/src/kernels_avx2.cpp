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

// Compiled with -mavx2 -mfma (see src/CMakeLists.txt). Nothing here may run
// unless the dispatcher has already confirmed CPU support.

#include "rpusim/kernels.hpp"

#include <bit>
#include <cmath>
#include <immintrin.h>

namespace rpusim::kernels {
namespace detail {
const Ops *avx2_table();
} // namespace detail

namespace {

void matvec_avx2(const double *w, std::size_t rows, std::size_t cols,
                 std::size_t lda, const double *x, double *y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = w + i * lda;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j),
                             _mm256_loadu_pd(x + j), acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j + 4),
                             _mm256_loadu_pd(x + j + 4), acc1);
    }
    for (; j + 4 <= cols; j += 4)
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j),
                             _mm256_loadu_pd(x + j), acc0);
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc),
                                    _mm256_extractf128_pd(acc, 1));
    double total = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; j < cols; ++j)
      total += row[j] * x[j];
    y[i] = total;
  }
}

void matvec_t_avx2(const double *w, std::size_t rows, std::size_t cols,
                   std::size_t lda, const double *d, double *z) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = w + i * lda;
    const __m256d di = _mm256_set1_pd(d[i]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), di,
                                          _mm256_loadu_pd(z + j));
      _mm256_storeu_pd(z + j, acc);
    }
    for (; j < cols; ++j)
      z[j] += row[j] * d[i];
  }
}

void ger_avx2(double *w, std::size_t rows, std::size_t cols, std::size_t lda,
              const double *d, const double *x, double a) {
  for (std::size_t i = 0; i < rows; ++i) {
    double *row = w + i * lda;
    const double adi = a * d[i];
    const __m256d vadi = _mm256_set1_pd(adi);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d acc = _mm256_fmadd_pd(vadi, _mm256_loadu_pd(x + j),
                                          _mm256_loadu_pd(row + j));
      _mm256_storeu_pd(row + j, acc);
    }
    for (; j < cols; ++j)
      row[j] += adi * x[j];
  }
}

// Nibble-LUT popcount (Mula): per-byte counts via PSHUFB, then PSADBW sums
// the bytes of each 64-bit lane.
void coincidence_counts_avx2(const std::uint64_t *col_masks, std::size_t n,
                             std::uint64_t row_mask, std::uint8_t *counts) {
  const __m256i lut =
      _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_nibble = _mm256_set1_epi8(0x0f);
  const __m256i vrow = _mm256_set1_epi64x(static_cast<long long>(row_mask));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_and_si256(
        _mm256_loadu_si256(reinterpret_cast<const __m256i *>(col_masks + i)),
        vrow);
    const __m256i lo = _mm256_and_si256(v, low_nibble);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi64(v, 4), low_nibble);
    const __m256i bytes = _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo),
                                          _mm256_shuffle_epi8(lut, hi));
    const __m256i sums = _mm256_sad_epu8(bytes, _mm256_setzero_si256());
    alignas(32) std::uint64_t tmp[4];
    _mm256_store_si256(reinterpret_cast<__m256i *>(tmp), sums);
    counts[i + 0] = static_cast<std::uint8_t>(tmp[0]);
    counts[i + 1] = static_cast<std::uint8_t>(tmp[1]);
    counts[i + 2] = static_cast<std::uint8_t>(tmp[2]);
    counts[i + 3] = static_cast<std::uint8_t>(tmp[3]);
  }
  for (; i < n; ++i)
    counts[i] = static_cast<std::uint8_t>(std::popcount(col_masks[i] & row_mask));
}

double max_abs_avx2(const double *v, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d vm = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vm = _mm256_max_pd(vm, _mm256_andnot_pd(sign, _mm256_loadu_pd(v + i)));
  const __m128d pair = _mm_max_pd(_mm256_castpd256_pd128(vm),
                                  _mm256_extractf128_pd(vm, 1));
  double m = _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) {
    const double a = std::fabs(v[i]);
    if (a > m)
      m = a;
  }
  return m;
}

} // namespace

const Ops *detail::avx2_table() {
  static const Ops ops = {
      "avx2",          matvec_avx2, matvec_t_avx2,
      ger_avx2,        coincidence_counts_avx2,
      max_abs_avx2,
  };
  return &ops;
}

} // namespace rpusim::kernels

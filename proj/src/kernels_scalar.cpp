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

#include "rpusim/kernels.hpp"

#include <bit>
#include <cmath>

namespace rpusim::kernels {
namespace {

void matvec_scalar(const double *w, std::size_t rows, std::size_t cols,
                   std::size_t lda, const double *x, double *y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = w + i * lda;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j)
      acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_t_scalar(const double *w, std::size_t rows, std::size_t cols,
                     std::size_t lda, const double *d, double *z) {
  // Accumulate row by row so the memory walk stays sequential over W.
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = w + i * lda;
    const double di = d[i];
    for (std::size_t j = 0; j < cols; ++j)
      z[j] += row[j] * di;
  }
}

void ger_scalar(double *w, std::size_t rows, std::size_t cols, std::size_t lda,
                const double *d, const double *x, double a) {
  for (std::size_t i = 0; i < rows; ++i) {
    double *row = w + i * lda;
    const double adi = a * d[i];
    for (std::size_t j = 0; j < cols; ++j)
      row[j] += adi * x[j];
  }
}

void coincidence_counts_scalar(const std::uint64_t *col_masks, std::size_t n,
                               std::uint64_t row_mask, std::uint8_t *counts) {
  for (std::size_t i = 0; i < n; ++i)
    counts[i] = static_cast<std::uint8_t>(std::popcount(col_masks[i] & row_mask));
}

double max_abs_scalar(const double *v, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(v[i]);
    if (a > m)
      m = a;
  }
  return m;
}

} // namespace

const Ops &scalar() {
  static const Ops ops = {
      "scalar",          matvec_scalar, matvec_t_scalar,
      ger_scalar,        coincidence_counts_scalar,
      max_abs_scalar,
  };
  return ops;
}

} // namespace rpusim::kernels

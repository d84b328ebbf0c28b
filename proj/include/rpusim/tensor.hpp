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
#include <vector>

namespace rpusim {

/// A square n x n x depth activation volume, stored channel-major
/// ([ch][row][col]).
struct Volume {
  int n = 0;     ///< spatial side
  int depth = 0; ///< channels
  std::vector<double> data;

  static Volume zeros(int n, int depth) {
    return Volume{n, depth,
                  std::vector<double>(std::size_t(n) * std::size_t(n) *
                                      std::size_t(depth))};
  }
  double &at(int ch, int r, int c) {
    return data[(std::size_t(ch) * std::size_t(n) + std::size_t(r)) *
                    std::size_t(n) +
                std::size_t(c)];
  }
  double at(int ch, int r, int c) const {
    return data[(std::size_t(ch) * std::size_t(n) + std::size_t(r)) *
                    std::size_t(n) +
                std::size_t(c)];
  }
  std::size_t numel() const { return data.size(); }
};

/// Column-major matrix: each column is contiguous, so an im2col column can
/// be handed to an array MVM without copying.
struct ColMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  static ColMatrix zeros(std::size_t rows, std::size_t cols) {
    return ColMatrix{rows, cols, std::vector<double>(rows * cols)};
  }
  double *col(std::size_t c) { return a.data() + c * rows; }
  const double *col(std::size_t c) const { return a.data() + c * rows; }
  double &at(std::size_t r, std::size_t c) { return a[c * rows + r]; }
  double at(std::size_t r, std::size_t c) const { return a[c * rows + r]; }
};

/// Lower a volume into the convolution input matrix X of shape
/// k^2*depth x (n-k+1)^2. Column p holds the k x k x depth patch at output
/// position p; output positions are ordered row-major, and within a column
/// the ordering is depth-major, then kernel row, then kernel column. The
/// constant-1 bias row used by array operations is appended by the caller.
ColMatrix im2col(const Volume &v, int k);

/// Overlap-summing adjoint of im2col: each output pixel accumulates every
/// Z entry whose im2col position maps to it.
Volume col2im_accumulate(const ColMatrix &z, int n, int k, int d);

} // namespace rpusim

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

#include "rpusim/tensor.hpp"

#include <stdexcept>
#include <string>

namespace rpusim {

static void check_geometry(int n, int k, int d) {
  if (n <= 0 || k <= 0 || d <= 0)
    throw std::invalid_argument("im2col: n, k, d must be positive");
  if (k > n)
    throw std::invalid_argument("im2col: kernel size " + std::to_string(k) +
                                " exceeds input side " + std::to_string(n));
}

ColMatrix im2col(const Volume &v, int k) {
  check_geometry(v.n, k, v.depth);
  const int out = v.n - k + 1;
  ColMatrix x = ColMatrix::zeros(std::size_t(k) * k * v.depth,
                                 std::size_t(out) * out);
  std::size_t p = 0;
  for (int ro = 0; ro < out; ++ro) {
    for (int co = 0; co < out; ++co, ++p) {
      double *dst = x.col(p);
      std::size_t i = 0;
      for (int ch = 0; ch < v.depth; ++ch)
        for (int kr = 0; kr < k; ++kr)
          for (int kc = 0; kc < k; ++kc, ++i)
            dst[i] = v.at(ch, ro + kr, co + kc);
    }
  }
  return x;
}

Volume col2im_accumulate(const ColMatrix &z, int n, int k, int d) {
  check_geometry(n, k, d);
  const int out = n - k + 1;
  if (z.rows != std::size_t(k) * k * d ||
      z.cols != std::size_t(out) * out)
    throw std::invalid_argument("col2im_accumulate: Z is " +
                                std::to_string(z.rows) + "x" +
                                std::to_string(z.cols) + ", expected " +
                                std::to_string(std::size_t(k) * k * d) + "x" +
                                std::to_string(std::size_t(out) * out));
  Volume v = Volume::zeros(n, d);
  std::size_t p = 0;
  for (int ro = 0; ro < out; ++ro) {
    for (int co = 0; co < out; ++co, ++p) {
      const double *src = z.col(p);
      std::size_t i = 0;
      for (int ch = 0; ch < d; ++ch)
        for (int kr = 0; kr < k; ++kr)
          for (int kc = 0; kc < k; ++kc, ++i)
            v.at(ch, ro + kr, co + kc) += src[i];
    }
  }
  return v;
}

} // namespace rpusim

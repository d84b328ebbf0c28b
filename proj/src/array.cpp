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

#include "rpusim/array.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "rpusim/errors.hpp"
#include "rpusim/kernels.hpp"

namespace rpusim {
namespace {

constexpr int kMaxBitLength = 1024; // sanity cap; the model uses BL <= 64

double clip(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

// Threshold so that a 32-bit lane fires with probability min(1, p):
// compare lane < thresh in 64-bit space, where p = 1 maps to 2^32.
std::uint64_t pulse_threshold(double p) {
  if (p <= 0.0)
    return 0;
  if (p >= 1.0)
    return 1ull << 32;
  return static_cast<std::uint64_t>(p * 4294967296.0 + 0.5);
}

// One 64-bit word of a pulse bit mask for the given line. Each Philox
// block yields four 32-bit lanes, i.e. four Bernoulli bits.
std::uint64_t mask_word(const Philox4x32::Key &key, std::uint64_t op,
                        std::uint32_t elem, StreamTag tag, int bits,
                        std::uint64_t thresh, int word) {
  std::uint64_t mask = 0;
  const int first_eval = word * 16;
  for (int b = 0; b < bits; b += 4) {
    const auto blk = Philox4x32::eval(
        make_ctr(op, elem, tag, std::uint32_t(first_eval + b / 4)), key);
    const int lanes = std::min(4, bits - b);
    for (int l = 0; l < lanes; ++l)
      if (std::uint64_t(blk[std::size_t(l)]) < thresh)
        mask |= 1ull << (b + l);
  }
  return mask;
}

} // namespace

void RpuArrayConfig::validate() const {
  if (rows == 0 || cols == 0)
    throw ConfigError("array shape must be positive, got " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  if (rows * cols > 0xFFFFFFFFull)
    throw ConfigError("array too large: device index must fit 32 bits");
  if (!(dw_min_mean > 0.0) || !(bound_mean > 0.0))
    throw ConfigError("dw_min_mean and bound_mean must be strictly positive");
  for (double s : {dw_min_dtod, dw_min_ctoc, imbalance_dtod, bound_dtod})
    if (!(s >= 0.0) || !(s <= 1.0))
      throw ConfigError("relative stds must lie in [0, 1]");
  if (!(noise_sigma >= 0.0))
    throw ConfigError("noise_sigma must be non-negative");
  if (!(output_bound_alpha > 0.0))
    throw ConfigError("output_bound_alpha must be positive");
}

RpuArrayConfig RpuArrayConfig::without_variations() const {
  RpuArrayConfig c = *this;
  c.dw_min_dtod = 0.0;
  c.dw_min_ctoc = 0.0;
  c.imbalance_dtod = 0.0;
  c.bound_dtod = 0.0;
  return c;
}

UpdateConfig UpdateConfig::balanced(double eta, int bl, double dw_min_mean) {
  if (!(eta > 0.0) || bl < 1 || !(dw_min_mean > 0.0))
    throw ConfigError("balanced gains need eta > 0, bl >= 1, dw_min > 0");
  const double c = std::sqrt(eta / (double(bl) * dw_min_mean));
  return UpdateConfig{bl, c, c, eta};
}

void UpdateConfig::validate() const {
  if (bl < 1 || bl > kMaxBitLength)
    throw ConfigError("bit-stream length must be in [1, " +
                      std::to_string(kMaxBitLength) + "], got " +
                      std::to_string(bl));
  if (!(c_x > 0.0) || !(c_delta > 0.0))
    throw ConfigError("update gains must be strictly positive");
}

RpuArray::RpuArray(const RpuArrayConfig &cfg) : cfg_(cfg) {
  cfg_.validate();
  key_ = make_key(cfg_.seed);

  const std::size_t n = cfg_.rows * cfg_.cols;
  w_.resize(n);
  dw_plus_.resize(n);
  dw_minus_.resize(n);
  bound_.resize(n);

  const double init_range = 1.0 / std::sqrt(double(cfg_.cols));
  for (std::size_t e = 0; e < n; ++e) {
    const auto elem = std::uint32_t(e);
    // Sampling slots: 0 = dw_min, 1 = imbalance ratio, 2 = bound, 3 = init.
    const double dw = std::max(
        cfg_.dw_min_mean *
            (1.0 + cfg_.dw_min_dtod *
                       normal_draw(make_ctr(0, elem, kTagDeviceSample, 0),
                                   key_)),
        0.01 * cfg_.dw_min_mean);
    // The ratio is realized symmetrically: dw+- = dw * rho^{+-1/2}, which
    // keeps the geometric mean of the pair at dw. Clamped away from zero
    // so the square root stays real for extreme settings.
    const double rho = std::max(
        1.0 + cfg_.imbalance_dtod *
                  normal_draw(make_ctr(0, elem, kTagDeviceSample, 1), key_),
        0.01);
    const double sqrt_rho = std::sqrt(rho);
    dw_plus_[e] = dw * sqrt_rho;
    dw_minus_[e] = dw / sqrt_rho;
    bound_[e] = std::max(
        cfg_.bound_mean *
            (1.0 + cfg_.bound_dtod *
                       normal_draw(make_ctr(0, elem, kTagDeviceSample, 2),
                                   key_)),
        0.10 * cfg_.bound_mean);
    const double u =
        uniform_draw(make_ctr(0, elem, kTagDeviceSample, 3), key_);
    w_[e] = clip((2.0 * u - 1.0) * init_range, -bound_[e], bound_[e]);
  }
}

void RpuArray::forward_mvm(std::span<const double> x, std::span<double> y,
                           std::uint64_t op, std::uint32_t noise_round,
                           bool *saturated) const {
  if (x.size() != cfg_.cols || y.size() != cfg_.rows)
    throw DimensionError("forward_mvm: expected x[" +
                         std::to_string(cfg_.cols) + "], y[" +
                         std::to_string(cfg_.rows) + "]");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(std::fabs(x[i]) <= 1.0))
      throw InputRangeError("forward_mvm: |x[" + std::to_string(i) +
                            "]| = " + std::to_string(std::fabs(x[i])) +
                            " exceeds the unit pulse-duration range");

  kernels::active().matvec(w_.data(), cfg_.rows, cfg_.cols, cfg_.cols,
                           x.data(), y.data());
  const double a = cfg_.output_bound_alpha;
  bool sat = false;
  for (std::size_t j = 0; j < cfg_.rows; ++j) {
    if (cfg_.noise_sigma > 0.0)
      y[j] += cfg_.noise_sigma *
              normal_draw(make_ctr(op, std::uint32_t(j), kTagForwardNoise,
                                   noise_round),
                          key_);
    y[j] = clip(y[j], -a, a);
    // Exact comparison is the saturation detector: clipping assigns the
    // bound value itself.
    sat = sat || y[j] == a || y[j] == -a;
  }
  if (saturated)
    *saturated = sat;
}

void RpuArray::backward_mvm(std::span<const double> delta,
                            std::span<double> z, std::uint64_t op,
                            std::uint32_t noise_round) const {
  if (delta.size() != cfg_.rows || z.size() != cfg_.cols)
    throw DimensionError("backward_mvm: expected delta[" +
                         std::to_string(cfg_.rows) + "], z[" +
                         std::to_string(cfg_.cols) + "]");
  for (std::size_t j = 0; j < delta.size(); ++j)
    if (!(std::fabs(delta[j]) <= 1.0))
      throw InputRangeError("backward_mvm: |delta[" + std::to_string(j) +
                            "]| = " + std::to_string(std::fabs(delta[j])) +
                            " exceeds the unit pulse-duration range");

  std::fill(z.begin(), z.end(), 0.0);
  kernels::active().matvec_t(w_.data(), cfg_.rows, cfg_.cols, cfg_.cols,
                             delta.data(), z.data());
  const double a = cfg_.output_bound_alpha;
  for (std::size_t i = 0; i < cfg_.cols; ++i) {
    if (cfg_.noise_sigma > 0.0)
      z[i] += cfg_.noise_sigma *
              normal_draw(make_ctr(op, std::uint32_t(i), kTagBackwardNoise,
                                   noise_round),
                          key_);
    z[i] = clip(z[i], -a, a);
  }
}

void RpuArray::stochastic_update(std::span<const double> x,
                                 std::span<const double> delta,
                                 const UpdateConfig &cfg, std::uint64_t op) {
  if (x.size() != cfg_.cols || delta.size() != cfg_.rows)
    throw DimensionError("stochastic_update: expected x[" +
                         std::to_string(cfg_.cols) + "], delta[" +
                         std::to_string(cfg_.rows) + "]");
  cfg.validate();

  const std::size_t n_cols = cfg_.cols;
  const int bl = cfg.bl;
  const int words = (bl + 63) / 64;

  col_masks_.assign(std::size_t(words) * n_cols, 0);
  col_sign_.resize(n_cols);
  counts_.resize(n_cols);

  // Column pulse trains, shared across all rows of this call.
  for (std::size_t i = 0; i < n_cols; ++i) {
    col_sign_[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
    const std::uint64_t th = pulse_threshold(cfg.c_x * std::fabs(x[i]));
    if (th == 0)
      continue;
    for (int wd = 0; wd < words; ++wd) {
      const int bits = std::min(64, bl - wd * 64);
      col_masks_[std::size_t(wd) * n_cols + i] =
          mask_word(key_, op, std::uint32_t(i), kTagMaskColumn, bits, th, wd);
    }
  }

  std::vector<int> wide_counts; // only used when BL spans multiple words
  const double ctoc = cfg_.dw_min_ctoc;
  for (std::size_t j = 0; j < cfg_.rows; ++j) {
    const double dj = delta[j];
    const std::uint64_t th = pulse_threshold(cfg.c_delta * std::fabs(dj));
    if (th == 0)
      continue;
    const double sd = dj > 0.0 ? 1.0 : -1.0;

    const int *counts = nullptr;
    if (words == 1) {
      const std::uint64_t row_mask =
          mask_word(key_, op, std::uint32_t(j), kTagMaskRow, bl, th, 0);
      if (row_mask == 0)
        continue;
      kernels::active().coincidence_counts(col_masks_.data(), n_cols,
                                           row_mask, counts_.data());
    } else {
      wide_counts.assign(n_cols, 0);
      bool any = false;
      for (int wd = 0; wd < words; ++wd) {
        const int bits = std::min(64, bl - wd * 64);
        const std::uint64_t row_mask =
            mask_word(key_, op, std::uint32_t(j), kTagMaskRow, bits, th, wd);
        if (row_mask == 0)
          continue;
        any = true;
        const std::uint64_t *cw = col_masks_.data() + std::size_t(wd) * n_cols;
        for (std::size_t i = 0; i < n_cols; ++i)
          wide_counts[i] += std::popcount(cw[i] & row_mask);
      }
      if (!any)
        continue;
      counts = wide_counts.data();
    }

    double *wrow = w_.data() + j * n_cols;
    const double *bro = bound_.data() + j * n_cols;
    const double *dwp = dw_plus_.data() + j * n_cols;
    const double *dwm = dw_minus_.data() + j * n_cols;
    for (std::size_t i = 0; i < n_cols; ++i) {
      const int c = counts ? counts[i] : int(counts_[i]);
      if (c == 0)
        continue;
      const double s = col_sign_[i] * sd;
      const double dws = s > 0.0 ? dwp[i] : dwm[i];
      double steps = double(c);
      if (ctoc > 0.0) {
        const auto e = std::uint32_t(j * n_cols + i);
        steps += ctoc * std::sqrt(double(c)) *
                 normal_draw(make_ctr(op, e, kTagUpdateNoise, 0), key_);
      }
      wrow[i] = clip(wrow[i] + s * dws * steps, -bro[i], bro[i]);
    }
  }
}

void RpuArray::set_weights(std::span<const double> w) {
  if (w.size() != w_.size())
    throw DimensionError("set_weights: expected " + std::to_string(w_.size()) +
                         " entries, got " + std::to_string(w.size()));
  for (std::size_t e = 0; e < w_.size(); ++e)
    w_[e] = clip(w[e], -bound_[e], bound_[e]);
}

std::vector<double> RpuArray::get_weights() const { return w_; }

} // namespace rpusim

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

#include <cstdint>
#include <span>
#include <vector>

#include "rpusim/philox.hpp"

namespace rpusim {

/// Device and array-level parameters of one resistive crossbar array.
/// Defaults are the baseline device model: an average incremental weight
/// change of 0.001 with 30% device-to-device and cycle-to-cycle variation,
/// 2% up/down imbalance spread, weight bounds of 0.6 (30% spread), analog
/// output noise of 0.06 and an output saturation bound of 12.
struct RpuArrayConfig {
  std::size_t rows = 0; ///< M, output lines
  std::size_t cols = 0; ///< N, input lines (bias column included by callers)

  double dw_min_mean = 0.001;  ///< mean weight change per coincidence
  double dw_min_dtod = 0.30;   ///< device-to-device rel. std of dw_min
  double dw_min_ctoc = 0.30;   ///< cycle-to-cycle rel. std per coincidence
  double imbalance_dtod = 0.02; ///< rel. std of the up/down ratio (mean 1)
  double bound_mean = 0.6;     ///< mean |w| bound
  double bound_dtod = 0.30;    ///< device-to-device rel. std of the bound
  double noise_sigma = 0.06;   ///< Gaussian output noise std per MVM output
  double output_bound_alpha = 12.0; ///< output saturation |alpha|
  std::uint64_t seed = 0;      ///< device sampling + noise stream seed

  /// Throws ConfigError when any invariant is violated.
  void validate() const;

  /// Copy with every variation parameter (dtod/ctoc/imbalance) set to 0.
  RpuArrayConfig without_variations() const;
};

/// Stochastic pulse-train update parameters.
struct UpdateConfig {
  int bl = 1;          ///< bit-stream length BL
  double c_x = 1.0;    ///< column (input) gain Cx
  double c_delta = 1.0; ///< row (error) gain Cdelta
  double eta = 0.0;    ///< learning rate the gains were derived from

  /// Symmetric gains c_x = c_delta = sqrt(eta / (bl * dw_min_mean)), the
  /// default rule; the expected update then equals eta * delta * x^T.
  static UpdateConfig balanced(double eta, int bl, double dw_min_mean);

  void validate() const;
};

/// Interface shared by a plain crossbar array and its replicated variant,
/// exposing the three backpropagation cycles executed on the array.
///
/// Every operation takes a caller-chosen operation id; all randomness is a
/// pure function of (seed, op, element), so identical call sequences give
/// identical results regardless of scheduling. `noise_round` distinguishes
/// physical re-reads of the same logical operation (bound-management
/// retries) that must see fresh noise.
class AnalogArray {
public:
  virtual ~AnalogArray() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual double output_bound() const = 0;
  virtual double dw_min_mean() const = 0;

  /// y = clip(W x + noise, -alpha, alpha). Requires |x_i| <= 1: the pulse
  /// duration encoding cannot represent larger inputs. When `saturated` is
  /// given it reports whether any physical output line sat at the bound
  /// (checked before any replica averaging).
  virtual void forward_mvm(std::span<const double> x, std::span<double> y,
                           std::uint64_t op, std::uint32_t noise_round = 0,
                           bool *saturated = nullptr) const = 0;

  /// z = clip(W^T delta + noise, -alpha, alpha). Requires |delta_j| <= 1.
  virtual void backward_mvm(std::span<const double> delta,
                            std::span<double> z, std::uint64_t op,
                            std::uint32_t noise_round = 0) const = 0;

  /// Stochastic pulse-coincidence update; realizes
  /// W += eta * delta * x^T in expectation (see RpuArray).
  virtual void stochastic_update(std::span<const double> x,
                                 std::span<const double> delta,
                                 const UpdateConfig &cfg, std::uint64_t op) = 0;

  /// Digital weight access (tests and FP comparisons only). set clips each
  /// entry to its device's own bound; get reads back exact stored weights.
  virtual void set_weights(std::span<const double> w) = 0;
  virtual std::vector<double> get_weights() const = 0;

  /// Overrides the per-read output noise std (the evaluation-noise switch).
  virtual void set_noise_sigma(double sigma) = 0;
};

/// One crossbar of rows x cols resistive devices.
///
/// Construction samples per-device parameters from the seeded stream:
/// dw_min ~ Normal(mean, mean*dtod) clamped at 1% of the mean; the up/down
/// ratio rho ~ Normal(1, imbalance_dtod) realized as dw_plus = dw_min*sqrt(rho),
/// dw_minus = dw_min/sqrt(rho); bounds ~ Normal(mean, mean*dtod) clamped at
/// 10% of the mean; initial weights uniform in [-1/sqrt(N), +1/sqrt(N)]
/// clipped to the device bound.
class RpuArray final : public AnalogArray {
public:
  explicit RpuArray(const RpuArrayConfig &cfg);

  std::size_t rows() const override { return cfg_.rows; }
  std::size_t cols() const override { return cfg_.cols; }
  double output_bound() const override { return cfg_.output_bound_alpha; }
  double dw_min_mean() const override { return cfg_.dw_min_mean; }
  const RpuArrayConfig &config() const { return cfg_; }

  void forward_mvm(std::span<const double> x, std::span<double> y,
                   std::uint64_t op, std::uint32_t noise_round = 0,
                   bool *saturated = nullptr) const override;
  void backward_mvm(std::span<const double> delta, std::span<double> z,
                    std::uint64_t op,
                    std::uint32_t noise_round = 0) const override;

  /// For each of BL bit positions, column i fires with probability
  /// min(1, Cx|x_i|) and sign(x_i); row j fires with probability
  /// min(1, Cd|d_j|) and sign(d_j). Each coincidence at (j,i) moves the
  /// weight by sign(x_i)sign(d_j) * dw (dw_plus or dw_minus by direction),
  /// each step carrying cycle-to-cycle noise; afterwards the weight is
  /// clipped to the device bound. Implemented in aggregate: the two pulse
  /// bit masks are ANDed and popcounted, and c coincidences apply
  /// s*dw*(c + ctoc*sqrt(c)*g) with one Gaussian g per device and call,
  /// which is distributed identically to c per-coincidence noises.
  void stochastic_update(std::span<const double> x,
                         std::span<const double> delta,
                         const UpdateConfig &cfg, std::uint64_t op) override;

  void set_weights(std::span<const double> w) override;
  std::vector<double> get_weights() const override;
  void set_noise_sigma(double sigma) override { cfg_.noise_sigma = sigma; }

  // Device-parameter views (statistics tests).
  const std::vector<double> &device_dw_plus() const { return dw_plus_; }
  const std::vector<double> &device_dw_minus() const { return dw_minus_; }
  const std::vector<double> &device_bound() const { return bound_; }

private:
  RpuArrayConfig cfg_;
  Philox4x32::Key key_;
  std::vector<double> w_;        // rows x cols, row-major
  std::vector<double> dw_plus_;  // per-device up increment
  std::vector<double> dw_minus_; // per-device down increment
  std::vector<double> bound_;    // per-device |w| bound

  // Update-call scratch (updates have exclusive ownership; MVMs never
  // touch these).
  std::vector<std::uint64_t> col_masks_;
  std::vector<std::uint8_t> counts_;
  std::vector<double> col_sign_;
};

} // namespace rpusim

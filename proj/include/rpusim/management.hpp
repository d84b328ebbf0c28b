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

#include "rpusim/array.hpp"

namespace rpusim {

/// Diagnostics of one managed MVM call.
struct ManagedMvmReport {
  double scale_used = 1.0; ///< input divisor: max|delta| (NM) or 2^n (BM)
  int halvings_n = 0;      ///< bound-management retries
  double rescale_m = 1.0;  ///< update-management ratio m, when computed
  bool bound_overflow = false; ///< saturation persisted at n_max halvings
};

/// Maximum bound-management halvings; the effective output bound is then
/// 2^10 * alpha, far above any activation in these networks.
inline constexpr int kMaxHalvings = 10;

/// Noise management: divide delta by its max magnitude so the array sees a
/// full-range input, then rescale the result, keeping the signal-to-noise
/// ratio of the read fixed. A zero delta short-circuits to z = 0 without
/// touching the array.
void noise_managed_backward(const AnalogArray &array,
                            std::span<const double> delta,
                            std::span<double> z, std::uint64_t op,
                            ManagedMvmReport *report = nullptr);

/// Forward-side variant of noise management (off by default in training;
/// the backward cycle is the one dominated by noise). A zero x falls
/// through to a plain forward read.
void noise_managed_forward(const AnalogArray &array, std::span<const double> x,
                           std::span<double> y, std::uint64_t op,
                           ManagedMvmReport *report = nullptr);

/// Bound management: run the forward read, and while any output sits
/// exactly at the saturation bound, halve the input and retry (fresh
/// noise each attempt), up to kMaxHalvings; the result is rescaled by
/// 2^n. If saturation persists at n_max the clipped result is returned
/// with the overflow flag set rather than failing the run.
void bound_managed_forward(const AnalogArray &array, std::span<const double> x,
                           std::span<double> y, std::uint64_t op,
                           ManagedMvmReport *report = nullptr);

/// Backward read without noise management. Error components beyond the
/// unit pulse-duration range cannot be emitted by the encoder and are
/// truncated to +-1 before the read (the unmanaged hardware behavior).
void raw_backward(const AnalogArray &array, std::span<const double> delta,
                  std::span<double> z, std::uint64_t op);

/// Update-management gains for one update call.
struct UmGains {
  double c_x = 0.0;
  double c_delta = 0.0;
  double m = 1.0;  ///< sqrt(max|delta| / max|x|)
  bool skip = false; ///< x or delta all zero: no update required
};

/// Split the gain product eta/(BL*dw_min) asymmetrically by
/// m = sqrt(max|delta|/max|x|), balancing pulse probabilities between the
/// column and row streams; the product c_x*c_delta (hence the expected
/// update) is invariant to m.
UmGains update_management_gains(std::span<const double> x,
                                std::span<const double> delta, double eta,
                                int bl, double dw_min_mean);

/// Multi-device mapping: one logical weight per #d physical devices.
struct ReplicaConfig {
  int replicas = 1;
  void validate() const;
};

/// A logical M x N array backed by a physical (#d*M) x N crossbar whose
/// row groups replicate the logical rows. Forward averages the #d
/// physical outputs per logical row (noise shrinks as sigma/sqrt(#d) and
/// device variation of the effective weight as 1/sqrt(#d)); backward
/// tiles delta across the row groups, the column read physically sums all
/// replicas, and the digital result is divided by #d; update feeds the
/// same column pulse train to all replicas while each physical row draws
/// its own error train.
class ReplicatedArray final : public AnalogArray {
public:
  ReplicatedArray(const RpuArrayConfig &logical, const ReplicaConfig &rep);

  std::size_t rows() const override { return logical_rows_; }
  std::size_t cols() const override { return phys_.cols(); }
  double output_bound() const override { return phys_.output_bound(); }
  double dw_min_mean() const override { return phys_.dw_min_mean(); }
  int replicas() const { return replicas_; }
  const RpuArray &physical() const { return phys_; }

  void forward_mvm(std::span<const double> x, std::span<double> y,
                   std::uint64_t op, std::uint32_t noise_round = 0,
                   bool *saturated = nullptr) const override;
  void backward_mvm(std::span<const double> delta, std::span<double> z,
                    std::uint64_t op,
                    std::uint32_t noise_round = 0) const override;
  void stochastic_update(std::span<const double> x,
                         std::span<const double> delta,
                         const UpdateConfig &cfg, std::uint64_t op) override;

  /// Logical views: set writes each logical weight to all its replicas
  /// (each clipped by its own device bound); get returns the replica mean.
  void set_weights(std::span<const double> w) override;
  std::vector<double> get_weights() const override;
  void set_noise_sigma(double sigma) override { phys_.set_noise_sigma(sigma); }

private:
  RpuArray phys_;
  std::size_t logical_rows_;
  int replicas_;
};

} // namespace rpusim

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

#include "rpusim/management.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rpusim/errors.hpp"
#include "rpusim/kernels.hpp"

namespace rpusim {

// Each call site below keeps its own thread-local scratch vector: managed
// wrappers nest (bound management around a replicated forward), so a
// shared buffer would alias across stack frames.

void noise_managed_backward(const AnalogArray &array,
                            std::span<const double> delta,
                            std::span<double> z, std::uint64_t op,
                            ManagedMvmReport *report) {
  const double dmax =
      kernels::active().max_abs(delta.data(), delta.size());
  if (report)
    *report = ManagedMvmReport{};
  if (dmax == 0.0) {
    std::fill(z.begin(), z.end(), 0.0);
    return;
  }
  thread_local std::vector<double> scaled;
  scaled.resize(delta.size());
  for (std::size_t j = 0; j < delta.size(); ++j)
    scaled[j] = delta[j] / dmax;
  array.backward_mvm(scaled, z, op);
  for (double &v : z)
    v *= dmax;
  if (report)
    report->scale_used = dmax;
}

void noise_managed_forward(const AnalogArray &array,
                           std::span<const double> x, std::span<double> y,
                           std::uint64_t op, ManagedMvmReport *report) {
  const double xmax = kernels::active().max_abs(x.data(), x.size());
  if (report)
    *report = ManagedMvmReport{};
  if (xmax == 0.0) {
    array.forward_mvm(x, y, op);
    return;
  }
  thread_local std::vector<double> scaled;
  scaled.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    scaled[i] = x[i] / xmax;
  array.forward_mvm(scaled, y, op);
  for (double &v : y)
    v *= xmax;
  if (report)
    report->scale_used = xmax;
}

void bound_managed_forward(const AnalogArray &array,
                           std::span<const double> x, std::span<double> y,
                           std::uint64_t op, ManagedMvmReport *report) {
  bool sat = false;
  array.forward_mvm(x, y, op, 0, &sat);
  int n = 0;
  if (sat) {
    thread_local std::vector<double> scaled;
    scaled.resize(x.size());
    double factor = 1.0;
    while (sat && n < kMaxHalvings) {
      ++n;
      factor *= 0.5;
      for (std::size_t i = 0; i < x.size(); ++i)
        scaled[i] = x[i] * factor;
      array.forward_mvm(scaled, y, op, std::uint32_t(n), &sat);
    }
    const double back = std::ldexp(1.0, n); // 2^n
    for (double &v : y)
      v *= back;
  }
  if (report) {
    *report = ManagedMvmReport{};
    report->scale_used = std::ldexp(1.0, n);
    report->halvings_n = n;
    report->bound_overflow = sat;
  }
}

void raw_backward(const AnalogArray &array, std::span<const double> delta,
                  std::span<double> z, std::uint64_t op) {
  bool needs_clamp = false;
  for (double d : delta)
    if (std::fabs(d) > 1.0) {
      needs_clamp = true;
      break;
    }
  if (!needs_clamp) {
    array.backward_mvm(delta, z, op);
    return;
  }
  thread_local std::vector<double> clamped;
  clamped.resize(delta.size());
  for (std::size_t j = 0; j < delta.size(); ++j)
    clamped[j] = std::clamp(delta[j], -1.0, 1.0);
  array.backward_mvm(clamped, z, op);
}

UmGains update_management_gains(std::span<const double> x,
                                std::span<const double> delta, double eta,
                                int bl, double dw_min_mean) {
  if (!(eta > 0.0) || bl < 1 || !(dw_min_mean > 0.0))
    throw ConfigError("update management needs eta > 0, bl >= 1, dw_min > 0");
  UmGains g;
  const double xmax = kernels::active().max_abs(x.data(), x.size());
  const double dmax = kernels::active().max_abs(delta.data(), delta.size());
  if (xmax == 0.0 || dmax == 0.0) {
    g.skip = true;
    return g;
  }
  const double base = std::sqrt(eta / (double(bl) * dw_min_mean));
  g.m = std::sqrt(dmax / xmax);
  g.c_x = g.m * base;
  g.c_delta = base / g.m;
  return g;
}

void ReplicaConfig::validate() const {
  if (replicas < 1)
    throw ConfigError("replicas must be >= 1, got " +
                      std::to_string(replicas));
}

namespace {

RpuArrayConfig physical_config(const RpuArrayConfig &logical,
                               const ReplicaConfig &rep) {
  rep.validate();
  logical.validate();
  RpuArrayConfig phys = logical;
  phys.rows = logical.rows * std::size_t(rep.replicas);
  return phys;
}

} // namespace

ReplicatedArray::ReplicatedArray(const RpuArrayConfig &logical,
                                 const ReplicaConfig &rep)
    : phys_(physical_config(logical, rep)), logical_rows_(logical.rows),
      replicas_(rep.replicas) {}

void ReplicatedArray::forward_mvm(std::span<const double> x,
                                  std::span<double> y, std::uint64_t op,
                                  std::uint32_t noise_round,
                                  bool *saturated) const {
  if (y.size() != logical_rows_)
    throw DimensionError("replicated forward: expected y[" +
                         std::to_string(logical_rows_) + "]");
  thread_local std::vector<double> phys_y;
  phys_y.resize(phys_.rows());
  phys_.forward_mvm(x, phys_y, op, noise_round, saturated);
  const double inv = 1.0 / double(replicas_);
  for (std::size_t j = 0; j < logical_rows_; ++j) {
    double acc = 0.0;
    for (int r = 0; r < replicas_; ++r)
      acc += phys_y[std::size_t(r) * logical_rows_ + j];
    y[j] = acc * inv;
  }
}

void ReplicatedArray::backward_mvm(std::span<const double> delta,
                                   std::span<double> z, std::uint64_t op,
                                   std::uint32_t noise_round) const {
  if (delta.size() != logical_rows_)
    throw DimensionError("replicated backward: expected delta[" +
                         std::to_string(logical_rows_) + "]");
  thread_local std::vector<double> tiled;
  tiled.resize(phys_.rows());
  for (int r = 0; r < replicas_; ++r)
    std::copy(delta.begin(), delta.end(),
              tiled.begin() + std::ptrdiff_t(r) * std::ptrdiff_t(logical_rows_));
  phys_.backward_mvm(tiled, z, op, noise_round);
  const double inv = 1.0 / double(replicas_);
  for (double &v : z)
    v *= inv;
}

void ReplicatedArray::stochastic_update(std::span<const double> x,
                                        std::span<const double> delta,
                                        const UpdateConfig &cfg,
                                        std::uint64_t op) {
  if (delta.size() != logical_rows_)
    throw DimensionError("replicated update: expected delta[" +
                         std::to_string(logical_rows_) + "]");
  // The same x pulse train reaches every replica (column streams are keyed
  // by column index only); each physical row draws its own error train.
  std::vector<double> tiled(phys_.rows());
  for (int r = 0; r < replicas_; ++r)
    std::copy(delta.begin(), delta.end(),
              tiled.begin() + std::ptrdiff_t(r) * std::ptrdiff_t(logical_rows_));
  phys_.stochastic_update(x, tiled, cfg, op);
}

void ReplicatedArray::set_weights(std::span<const double> w) {
  const std::size_t n = logical_rows_ * phys_.cols();
  if (w.size() != n)
    throw DimensionError("replicated set_weights: expected " +
                         std::to_string(n) + " entries");
  std::vector<double> phys_w(phys_.rows() * phys_.cols());
  for (int r = 0; r < replicas_; ++r)
    std::copy(w.begin(), w.end(),
              phys_w.begin() + std::ptrdiff_t(r) * std::ptrdiff_t(n));
  phys_.set_weights(phys_w);
}

std::vector<double> ReplicatedArray::get_weights() const {
  const auto phys_w = phys_.get_weights();
  const std::size_t n = logical_rows_ * phys_.cols();
  std::vector<double> w(n, 0.0);
  for (int r = 0; r < replicas_; ++r)
    for (std::size_t e = 0; e < n; ++e)
      w[e] += phys_w[std::size_t(r) * n + e];
  const double inv = 1.0 / double(replicas_);
  for (double &v : w)
    v *= inv;
  return w;
}

} // namespace rpusim

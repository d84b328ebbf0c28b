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
#include <functional>
#include <string>
#include <vector>

#include "rpusim/mnist.hpp"
#include "rpusim/network.hpp"

namespace rpusim {

/// Evaluation operations live above every training op id: training uses
/// image-serial * 4096, which stays far below this bit for any practical
/// epoch count.
inline constexpr std::uint64_t kEvalNamespace = 1ull << 40;

struct TrainingConfig {
  NetworkSpec spec = NetworkSpec::benchmark();
  NetworkBuildOptions build{}; ///< backend, management, device, eta, seed
  int epochs = 30;
  std::size_t train_limit = 0; ///< 0 = full training set (reduced-scale knob)
  std::size_t test_limit = 0;  ///< 0 = full test set
  int threads = 1;             ///< evaluation threads
  std::string variant = "rpu"; ///< tag recorded in every metrics row

  void validate() const;
};

struct MetricsRecord {
  int epoch = 0; ///< 1-based
  double test_error_pct = 0.0;
  std::string variant;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<MetricsRecord> records; ///< one per epoch
  /// Mean training loss over up to 6 disjoint windows of the first epoch
  /// (10,000 images each at full scale) — the harness sanity signal.
  std::vector<double> first_epoch_window_loss;
  /// Mean/std of test error over the last up-to-6 epochs (the average
  /// between the 25th and 30th epochs at the standard schedule).
  double final_error_mean = 0.0;
  double final_error_std = 0.0;
};

/// Seeded per-epoch Fisher-Yates permutation of [0, n).
std::vector<std::uint32_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                            int epoch);

/// Error percent of `net` on the test set (first `limit` images; 0 = all).
/// `epoch_tag` separates the noise namespaces of different evaluation
/// rounds; `noise_active` = false re-reads with sigma forced to 0. Works on
/// per-thread copies, so the caller's network is never modified and the
/// result is thread-count invariant.
double evaluate(const Network &net, const MnistData &test, std::size_t limit,
                int epoch_tag, bool noise_active, int threads);

/// Called after each epoch's evaluation with the fresh record.
using ProgressFn = std::function<void(const MetricsRecord &)>;

/// SGD over `cfg.epochs` epochs (minibatch 1), evaluating after each epoch.
/// Deterministic given the config. When `out_net` is non-null the trained
/// network is copied there.
TrainResult train(const TrainingConfig &cfg, const MnistData &train_set,
                  const MnistData &test_set, Network *out_net = nullptr,
                  const ProgressFn &progress = {});

/// Writes `epoch,test_error_pct,variant,seed` rows; identical inputs give
/// identical bytes.
void write_metrics_csv(const std::string &path,
                       const std::vector<MetricsRecord> &records);

struct AblationVariant {
  std::string name;
  TrainingConfig config;
};

struct VariantResult {
  std::string name;
  TrainResult result;
};

/// The named ablation family (management, pulse-length, and multi-device
/// variants), derived from one base config: same seed and device model
/// everywhere.
std::vector<AblationVariant> standard_variants(const TrainingConfig &base);

/// Trains every variant; when `out_dir` is non-empty, writes one
/// `<out_dir>/<name>.csv` per variant. An empty list is a no-op.
std::vector<VariantResult> run_ablation(
    const std::vector<AblationVariant> &variants, const MnistData &train_set,
    const MnistData &test_set, const std::string &out_dir,
    const ProgressFn &progress = {});

} // namespace rpusim

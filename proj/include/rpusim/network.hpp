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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rpusim/array.hpp"
#include "rpusim/management.hpp"
#include "rpusim/tensor.hpp"

namespace rpusim {

/// Sequential operation-id allocator: one pass over an image draws a fresh
/// id per array operation from a caller-chosen base namespace, so noise is
/// a pure function of (seed, image, position in the pass).
struct OpCounter {
  std::uint64_t base = 0;
  std::uint32_t next = 0;
  std::uint64_t alloc() { return base + next++; }
};

struct ConvSpec {
  int n = 0; ///< input spatial side
  int k = 0; ///< kernel side
  int d = 0; ///< input channels
  int m = 0; ///< output channels (kernels)
};

struct FcSpec {
  int in = 0;
  int out = 0;
};

struct LayerSpec {
  enum class Kind { Conv, Tanh, Pool, Fc, Softmax };
  Kind kind = Kind::Tanh;
  ConvSpec conv{};
  FcSpec fc{};
  int classes = 0;

  static LayerSpec Conv(int n, int k, int d, int m) {
    LayerSpec s;
    s.kind = Kind::Conv;
    s.conv = ConvSpec{n, k, d, m};
    return s;
  }
  static LayerSpec Tanh() { return LayerSpec{}; }
  static LayerSpec Pool() {
    LayerSpec s;
    s.kind = Kind::Pool;
    return s;
  }
  static LayerSpec Fc(int in, int out) {
    LayerSpec s;
    s.kind = Kind::Fc;
    s.fc = FcSpec{in, out};
    return s;
  }
  static LayerSpec Softmax(int classes) {
    LayerSpec s;
    s.kind = Kind::Softmax;
    s.classes = classes;
    return s;
  }
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  /// Shape-composition check; throws ConfigError with the offending layer
  /// index. Requires a terminal Softmax and at least one trainable layer.
  void validate() const;

  /// The MNIST benchmark network:
  /// Conv(28,5,1,16)-Tanh-Pool-Conv(12,5,16,32)-Tanh-Pool-
  /// FC(512,128)-Tanh-FC(128,10)-Softmax.
  static NetworkSpec benchmark();
};

/// Everything needed to back one logical array: backend choice, management
/// wiring, pulse-train parameters, and the device model for the RPU case.
struct ArrayOptions {
  bool analog = true;            ///< false: exact floating-point backend
  bool noise_management = true;  ///< NM on backward MVMs
  bool bound_management = true;  ///< BM on forward MVMs
  bool nm_forward = false;       ///< optional NM on forward MVMs
  bool update_management = false; ///< per-call UM gains
  int bl = 10;                   ///< pulse-train length
  double eta = 0.01;
  ReplicaConfig replicas{};
  RpuArrayConfig device{}; ///< rows/cols/seed filled by the network builder
};

/// One logical trainable array. Analog mode wraps an RpuArray (or a
/// ReplicatedArray) in the configured management; FP mode is a plain
/// matrix with exact MVMs and exact rank-1 updates, same init rule,
/// no noise and no bounds.
class TrainableArray {
public:
  TrainableArray() = default;
  TrainableArray(std::size_t rows, std::size_t cols, const ArrayOptions &opts);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool analog() const { return opts_.analog; }
  const ArrayOptions &options() const { return opts_; }

  void forward(std::span<const double> x, std::span<double> y,
               OpCounter &ops) const;
  void backward(std::span<const double> delta, std::span<double> z,
                OpCounter &ops) const;
  void update(std::span<const double> x, std::span<const double> delta,
              OpCounter &ops);

  std::vector<double> weights() const;
  void set_weights(std::span<const double> w);

  /// Read-noise override; no-op for the FP backend.
  void set_noise_sigma(double sigma);

private:
  const AnalogArray *arr() const;
  AnalogArray *arr();

  std::size_t rows_ = 0, cols_ = 0;
  ArrayOptions opts_{};
  UpdateConfig fixed_gains_{};
  std::vector<double> fp_w_; ///< FP backend storage (row-major)
  std::variant<std::monostate, RpuArray, ReplicatedArray> analog_;
};

namespace detail {

struct ConvLayer {
  ConvSpec spec{};
  std::string name;
  TrainableArray arr; ///< m x (k^2 d + 1)
  ColMatrix xb;       ///< cached input columns, bias row appended
  ColMatrix dcols;    ///< cached error columns
  bool have_x = false, have_d = false;

  Volume forward(const Volume &in, OpCounter &ops);
  Volume backward(const Volume &err, OpCounter &ops, bool need_input_grad);
  void update(OpCounter &ops);
};

struct FcLayer {
  FcSpec spec{};
  std::string name;
  TrainableArray arr; ///< out x (in + 1)
  std::vector<double> xb; ///< cached input, bias appended
  std::vector<double> dcache;
  int in_n = 0, in_depth = 0; ///< input volume shape, for backward
  bool have_x = false, have_d = false;

  Volume forward(const Volume &in, OpCounter &ops);
  Volume backward(const Volume &err, OpCounter &ops, bool need_input_grad);
  void update(OpCounter &ops);
};

struct TanhLayer {
  std::vector<double> act;
  int n = 0, depth = 0;

  Volume forward(const Volume &in);
  Volume backward(const Volume &err) const;
};

struct PoolLayer {
  std::vector<std::size_t> src; ///< flat argmax index per pooled element
  int in_n = 0, depth = 0;

  Volume forward(const Volume &in);
  Volume backward(const Volume &err) const;
};

struct SoftmaxLayer {
  int classes = 0;
  std::vector<double> probs;

  Volume forward(const Volume &in);
};

using LayerState =
    std::variant<ConvLayer, FcLayer, TanhLayer, PoolLayer, SoftmaxLayer>;

} // namespace detail

/// Per-array overrides applied on top of the global build options, keyed
/// by array name (K1, K2, W3, ...).
struct LayerOverrides {
  std::optional<bool> noise_management, bound_management, nm_forward,
      update_management;
  std::optional<int> bl;
  std::optional<int> replicas;
  std::optional<RpuArrayConfig> device; ///< full device-model replacement
};

struct NetworkBuildOptions {
  bool analog = true;
  double eta = 0.01;
  int bl = 10;
  bool noise_management = true;
  bool bound_management = true;
  bool nm_forward = false;
  bool update_management = false;
  bool eval_noise = true; ///< keep MVM noise during evaluation
  RpuArrayConfig device{}; ///< device-model template (rows/cols/seed ignored)
  std::uint64_t seed = 1;
  std::map<std::string, LayerOverrides> per_array;
};

struct TrainStepResult {
  double loss = 0.0;
  int predicted = -1;
  std::uint32_t ops_used = 0; ///< array operations consumed by this pass
};

/// A feed-forward network mapped onto logical arrays. Value-semantic: a
/// copy carries the full device state, so evaluation threads can work on
/// independent clones.
class Network {
public:
  Network(const NetworkSpec &spec, const NetworkBuildOptions &opts);

  /// Forward + output delta + backward + stochastic updates for one image.
  TrainStepResult train_step(const Volume &in, int label,
                             std::uint64_t op_base);

  /// Forward only; argmax class. Mutates layer caches but never weights.
  int predict(const Volume &in, std::uint64_t op_base);

  /// Forward only; cross-entropy loss against `label`.
  double loss(const Volume &in, int label, std::uint64_t op_base);

  /// Forward only; softmax probabilities.
  std::vector<double> probabilities(const Volume &in, std::uint64_t op_base);

  const NetworkSpec &spec() const { return spec_; }
  std::vector<std::string> array_names() const;
  TrainableArray &array(const std::string &name);
  const TrainableArray &array(const std::string &name) const;
  int classes() const { return classes_; }

  /// Read-noise override on every analog array (evaluation-noise switch).
  void set_noise_sigma(double sigma);

private:
  Volume forward_all(const Volume &in, OpCounter &ops);

  NetworkSpec spec_;
  std::vector<detail::LayerState> layers_;
  int classes_ = 0;
};

} // namespace rpusim

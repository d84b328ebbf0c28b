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

#include "rpusim/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rpusim/errors.hpp"
#include "rpusim/kernels.hpp"
#include "rpusim/philox.hpp"

namespace rpusim {

// ---------------------------------------------------------------------------
// NetworkSpec

void NetworkSpec::validate() const {
  if (layers.empty())
    throw ConfigError("network: empty layer list");
  int n = 0, depth = 0; // current volume shape; n == 0 means "flat"
  std::size_t numel = 0;
  bool have_shape = false, have_trainable = false, have_softmax = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec &l = layers[i];
    const std::string where = "network: layer " + std::to_string(i) + ": ";
    if (have_softmax)
      throw ConfigError(where + "softmax must be the terminal layer");
    switch (l.kind) {
    case LayerSpec::Kind::Conv: {
      const ConvSpec &c = l.conv;
      if (c.n <= 0 || c.k <= 0 || c.d <= 0 || c.m <= 0)
        throw ConfigError(where + "conv dimensions must be positive");
      if (c.k > c.n)
        throw ConfigError(where + "conv kernel exceeds input side");
      if (have_shape && (n != c.n || depth != c.d))
        throw ConfigError(where + "conv expects " + std::to_string(c.n) +
                          "x" + std::to_string(c.n) + "x" +
                          std::to_string(c.d) + ", previous layer gives " +
                          std::to_string(n) + "x" + std::to_string(n) + "x" +
                          std::to_string(depth));
      n = c.n - c.k + 1;
      depth = c.m;
      numel = std::size_t(n) * n * depth;
      have_shape = true;
      have_trainable = true;
      break;
    }
    case LayerSpec::Kind::Pool:
      if (!have_shape || n <= 0)
        throw ConfigError(where + "pool needs a spatial input");
      if (n % 2 != 0)
        throw ConfigError(where + "pool needs an even side, got " +
                          std::to_string(n));
      n /= 2;
      numel = std::size_t(n) * n * depth;
      break;
    case LayerSpec::Kind::Tanh:
      if (!have_shape)
        throw ConfigError(where + "tanh needs an input shape");
      break;
    case LayerSpec::Kind::Fc:
      if (l.fc.in <= 0 || l.fc.out <= 0)
        throw ConfigError(where + "fc dimensions must be positive");
      if (have_shape && numel != std::size_t(l.fc.in))
        throw ConfigError(where + "fc expects " + std::to_string(l.fc.in) +
                          " inputs, previous layer gives " +
                          std::to_string(numel));
      n = 0;
      depth = l.fc.out;
      numel = std::size_t(l.fc.out);
      have_shape = true;
      have_trainable = true;
      break;
    case LayerSpec::Kind::Softmax:
      if (l.classes <= 1)
        throw ConfigError(where + "softmax needs at least 2 classes");
      if (have_shape && numel != std::size_t(l.classes))
        throw ConfigError(where + "softmax expects " +
                          std::to_string(l.classes) +
                          " logits, previous layer gives " +
                          std::to_string(numel));
      have_softmax = true;
      break;
    }
  }
  if (!have_softmax)
    throw ConfigError("network: missing terminal softmax layer");
  if (!have_trainable)
    throw ConfigError("network: no trainable layers");
}

NetworkSpec NetworkSpec::benchmark() {
  NetworkSpec s;
  s.layers = {LayerSpec::Conv(28, 5, 1, 16), LayerSpec::Tanh(),
              LayerSpec::Pool(),             LayerSpec::Conv(12, 5, 16, 32),
              LayerSpec::Tanh(),             LayerSpec::Pool(),
              LayerSpec::Fc(512, 128),       LayerSpec::Tanh(),
              LayerSpec::Fc(128, 10),        LayerSpec::Softmax(10)};
  return s;
}

// ---------------------------------------------------------------------------
// TrainableArray

TrainableArray::TrainableArray(std::size_t rows, std::size_t cols,
                               const ArrayOptions &opts)
    : rows_(rows), cols_(cols), opts_(opts) {
  opts_.device.rows = rows;
  opts_.device.cols = cols;
  if (opts_.analog) {
    if (opts_.replicas.replicas > 1)
      analog_.emplace<ReplicatedArray>(opts_.device, opts_.replicas);
    else
      analog_.emplace<RpuArray>(opts_.device);
    fixed_gains_ =
        UpdateConfig::balanced(opts_.eta, opts_.bl, arr()->dw_min_mean());
  } else {
    if (rows == 0 || cols == 0)
      throw ConfigError("array: zero dimension");
    if (rows > 0xFFFFFFFFull / cols)
      throw ConfigError("array: too many elements for the noise counter");
    fp_w_.resize(rows * cols);
    // Same init distribution the analog array samples (uniform in
    // +-1/sqrt(N)), drawn from the same stream slot so FP and RPU runs of
    // one seed start from comparable points.
    const double range = 1.0 / std::sqrt(double(cols));
    const auto key = make_key(opts_.device.seed);
    for (std::size_t e = 0; e < fp_w_.size(); ++e) {
      const double u = uniform_draw(
          make_ctr(0, std::uint32_t(e), kTagDeviceSample, 3), key);
      fp_w_[e] = (2.0 * u - 1.0) * range;
    }
  }
}

const AnalogArray *TrainableArray::arr() const {
  if (const auto *p = std::get_if<RpuArray>(&analog_))
    return p;
  if (const auto *p = std::get_if<ReplicatedArray>(&analog_))
    return p;
  return nullptr;
}

AnalogArray *TrainableArray::arr() {
  return const_cast<AnalogArray *>(
      static_cast<const TrainableArray *>(this)->arr());
}

void TrainableArray::forward(std::span<const double> x, std::span<double> y,
                             OpCounter &ops) const {
  const std::uint64_t op = ops.alloc();
  if (!opts_.analog) {
    if (x.size() != cols_ || y.size() != rows_)
      throw DimensionError("fp forward: shape mismatch");
    kernels::active().matvec(fp_w_.data(), rows_, cols_, cols_, x.data(),
                             y.data());
    return;
  }
  const AnalogArray &a = *arr();
  if (!opts_.nm_forward) {
    if (opts_.bound_management)
      bound_managed_forward(a, x, y, op);
    else
      a.forward_mvm(x, y, op);
    return;
  }
  // NM on the forward side: rescale to full encoder range, re-amplify the
  // result. Composes with BM, which sees the scaled input.
  const double xmax = kernels::active().max_abs(x.data(), x.size());
  if (xmax == 0.0 || xmax == 1.0) { // nothing to rescale
    if (opts_.bound_management)
      bound_managed_forward(a, x, y, op);
    else
      a.forward_mvm(x, y, op);
    return;
  }
  thread_local std::vector<double> nm_fwd_scaled;
  nm_fwd_scaled.assign(x.begin(), x.end());
  for (double &v : nm_fwd_scaled)
    v /= xmax;
  if (opts_.bound_management)
    bound_managed_forward(a, nm_fwd_scaled, y, op);
  else
    a.forward_mvm(nm_fwd_scaled, y, op);
  for (double &v : y)
    v *= xmax;
}

void TrainableArray::backward(std::span<const double> delta,
                              std::span<double> z, OpCounter &ops) const {
  const std::uint64_t op = ops.alloc();
  if (!opts_.analog) {
    if (delta.size() != rows_ || z.size() != cols_)
      throw DimensionError("fp backward: shape mismatch");
    std::fill(z.begin(), z.end(), 0.0);
    kernels::active().matvec_t(fp_w_.data(), rows_, cols_, cols_,
                               delta.data(), z.data());
    return;
  }
  if (opts_.noise_management)
    noise_managed_backward(*arr(), delta, z, op);
  else
    raw_backward(*arr(), delta, z, op);
}

void TrainableArray::update(std::span<const double> x,
                            std::span<const double> delta, OpCounter &ops) {
  const std::uint64_t op = ops.alloc();
  if (!opts_.analog) {
    if (x.size() != cols_ || delta.size() != rows_)
      throw DimensionError("fp update: shape mismatch");
    kernels::active().ger(fp_w_.data(), rows_, cols_, cols_, delta.data(),
                          x.data(), opts_.eta);
    return;
  }
  if (opts_.update_management) {
    const UmGains g = update_management_gains(x, delta, opts_.eta, opts_.bl,
                                              arr()->dw_min_mean());
    if (g.skip)
      return;
    UpdateConfig cfg;
    cfg.bl = opts_.bl;
    cfg.c_x = g.c_x;
    cfg.c_delta = g.c_delta;
    cfg.eta = opts_.eta;
    arr()->stochastic_update(x, delta, cfg, op);
    return;
  }
  arr()->stochastic_update(x, delta, fixed_gains_, op);
}

std::vector<double> TrainableArray::weights() const {
  if (!opts_.analog)
    return fp_w_;
  return arr()->get_weights();
}

void TrainableArray::set_weights(std::span<const double> w) {
  if (w.size() != rows_ * cols_)
    throw DimensionError("set_weights: size mismatch");
  if (!opts_.analog) {
    fp_w_.assign(w.begin(), w.end());
    return;
  }
  arr()->set_weights(w);
}

void TrainableArray::set_noise_sigma(double sigma) {
  if (AnalogArray *a = arr())
    a->set_noise_sigma(sigma);
}

// ---------------------------------------------------------------------------
// Layers

namespace detail {

Volume ConvLayer::forward(const Volume &in, OpCounter &ops) {
  if (in.n != spec.n || in.depth != spec.d)
    throw DimensionError(name + ": input is " + std::to_string(in.n) + "x" +
                         std::to_string(in.n) + "x" +
                         std::to_string(in.depth) + ", expected " +
                         std::to_string(spec.n) + "x" +
                         std::to_string(spec.n) + "x" +
                         std::to_string(spec.d));
  const int out = spec.n - spec.k + 1;
  const std::size_t patch = std::size_t(spec.k) * spec.k * spec.d;
  const std::size_t ncols = std::size_t(out) * out;

  // im2col with the bias row appended, filled in place so the buffer is
  // reused across images.
  if (xb.rows != patch + 1 || xb.cols != ncols)
    xb = ColMatrix::zeros(patch + 1, ncols);
  std::size_t p = 0;
  for (int ro = 0; ro < out; ++ro) {
    for (int co = 0; co < out; ++co, ++p) {
      double *dst = xb.col(p);
      std::size_t i = 0;
      for (int ch = 0; ch < spec.d; ++ch)
        for (int kr = 0; kr < spec.k; ++kr)
          for (int kc = 0; kc < spec.k; ++kc, ++i)
            dst[i] = in.at(ch, ro + kr, co + kc);
      dst[patch] = 1.0; // bias input
    }
  }
  have_x = true;

  Volume y = Volume::zeros(out, spec.m);
  std::vector<double> yc(std::size_t(spec.m));
  for (std::size_t p = 0; p < ncols; ++p) {
    arr.forward(std::span<const double>(xb.col(p), patch + 1),
                std::span<double>(yc), ops);
    const int ro = int(p) / out, co = int(p) % out;
    for (int f = 0; f < spec.m; ++f)
      y.at(f, ro, co) = yc[std::size_t(f)];
  }
  return y;
}

Volume ConvLayer::backward(const Volume &err, OpCounter &ops,
                           bool need_input_grad) {
  const int out = spec.n - spec.k + 1;
  if (err.n != out || err.depth != spec.m)
    throw DimensionError(name + ": error volume shape mismatch");
  const std::size_t patch = std::size_t(spec.k) * spec.k * spec.d;
  const std::size_t ncols = std::size_t(out) * out;

  if (dcols.rows != std::size_t(spec.m) || dcols.cols != ncols)
    dcols = ColMatrix::zeros(std::size_t(spec.m), ncols);
  for (std::size_t p = 0; p < ncols; ++p) {
    const int ro = int(p) / out, co = int(p) % out;
    double *d = dcols.col(p);
    for (int f = 0; f < spec.m; ++f)
      d[f] = err.at(f, ro, co);
  }
  have_d = true;

  if (!need_input_grad)
    return Volume{}; // first layer: nothing consumes the propagated error

  ColMatrix z = ColMatrix::zeros(patch, ncols);
  std::vector<double> zc(patch + 1);
  for (std::size_t p = 0; p < ncols; ++p) {
    arr.backward(std::span<const double>(dcols.col(p), std::size_t(spec.m)),
                 std::span<double>(zc), ops);
    std::memcpy(z.col(p), zc.data(), patch * sizeof(double)); // drop bias row
  }
  return col2im_accumulate(z, spec.n, spec.k, spec.d);
}

void ConvLayer::update(OpCounter &ops) {
  if (!have_x || !have_d)
    throw StateError(name + ": update before forward/backward");
  const std::size_t ncols = xb.cols;
  for (std::size_t p = 0; p < ncols; ++p)
    arr.update(std::span<const double>(xb.col(p), xb.rows),
               std::span<const double>(dcols.col(p), dcols.rows), ops);
}

Volume FcLayer::forward(const Volume &in, OpCounter &ops) {
  if (in.numel() != std::size_t(spec.in))
    throw DimensionError(name + ": input has " + std::to_string(in.numel()) +
                         " elements, expected " + std::to_string(spec.in));
  in_n = in.n;
  in_depth = in.depth;
  xb.assign(in.data.begin(), in.data.end());
  xb.push_back(1.0); // bias input
  have_x = true;

  Volume y;
  y.n = 0;
  y.depth = spec.out;
  y.data.resize(std::size_t(spec.out));
  arr.forward(xb, y.data, ops);
  return y;
}

Volume FcLayer::backward(const Volume &err, OpCounter &ops,
                         bool need_input_grad) {
  if (err.numel() != std::size_t(spec.out))
    throw DimensionError(name + ": error shape mismatch");
  dcache.assign(err.data.begin(), err.data.end());
  have_d = true;

  if (!need_input_grad)
    return Volume{};

  std::vector<double> z(std::size_t(spec.in) + 1);
  arr.backward(dcache, z, ops);
  Volume v;
  v.n = in_n;
  v.depth = in_depth;
  v.data.assign(z.begin(), z.end() - 1); // drop bias row
  return v;
}

void FcLayer::update(OpCounter &ops) {
  if (!have_x || !have_d)
    throw StateError(name + ": update before forward/backward");
  arr.update(xb, dcache, ops);
}

Volume TanhLayer::forward(const Volume &in) {
  n = in.n;
  depth = in.depth;
  act.resize(in.data.size());
  Volume out = in;
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    act[i] = std::tanh(in.data[i]);
    out.data[i] = act[i];
  }
  return out;
}

Volume TanhLayer::backward(const Volume &err) const {
  if (err.data.size() != act.size())
    throw DimensionError("tanh: error shape mismatch");
  Volume out = err;
  for (std::size_t i = 0; i < act.size(); ++i)
    out.data[i] = err.data[i] * (1.0 - act[i] * act[i]);
  return out;
}

Volume PoolLayer::forward(const Volume &in) {
  if (in.n <= 0 || in.n % 2 != 0)
    throw DimensionError("pool: spatial side " + std::to_string(in.n) +
                         " is not even");
  in_n = in.n;
  depth = in.depth;
  const int on = in.n / 2;
  Volume out = Volume::zeros(on, in.depth);
  src.assign(out.data.size(), 0);
  for (int ch = 0; ch < in.depth; ++ch) {
    for (int r = 0; r < on; ++r) {
      for (int c = 0; c < on; ++c) {
        // Strictly-greater comparison: ties go to the first element in
        // row-major window order.
        double best = in.at(ch, 2 * r, 2 * c);
        int br = 2 * r, bc = 2 * c;
        for (int dr = 0; dr < 2; ++dr)
          for (int dc = 0; dc < 2; ++dc) {
            const double v = in.at(ch, 2 * r + dr, 2 * c + dc);
            if (v > best) {
              best = v;
              br = 2 * r + dr;
              bc = 2 * c + dc;
            }
          }
        out.at(ch, r, c) = best;
        src[(std::size_t(ch) * on + r) * on + c] =
            (std::size_t(ch) * in.n + br) * in.n + bc;
      }
    }
  }
  return out;
}

Volume PoolLayer::backward(const Volume &err) const {
  if (err.data.size() != src.size())
    throw DimensionError("pool: error shape mismatch");
  Volume out = Volume::zeros(in_n, depth);
  for (std::size_t i = 0; i < src.size(); ++i)
    out.data[src[i]] += err.data[i];
  return out;
}

Volume SoftmaxLayer::forward(const Volume &in) {
  if (in.numel() != std::size_t(classes))
    throw DimensionError("softmax: expected " + std::to_string(classes) +
                         " logits, got " + std::to_string(in.numel()));
  probs.resize(in.data.size());
  const double mx = *std::max_element(in.data.begin(), in.data.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(in.data[i] - mx);
    sum += probs[i];
  }
  Volume out = in;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] /= sum;
    out.data[i] = probs[i];
  }
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Network

static ArrayOptions resolve_options(const NetworkBuildOptions &b,
                                    const std::string &name,
                                    int trainable_index) {
  ArrayOptions o;
  o.analog = b.analog;
  o.noise_management = b.noise_management;
  o.bound_management = b.bound_management;
  o.nm_forward = b.nm_forward;
  o.update_management = b.update_management;
  o.bl = b.bl;
  o.eta = b.eta;
  o.device = b.device;
  auto it = b.per_array.find(name);
  if (it != b.per_array.end()) {
    const LayerOverrides &ov = it->second;
    if (ov.noise_management)
      o.noise_management = *ov.noise_management;
    if (ov.bound_management)
      o.bound_management = *ov.bound_management;
    if (ov.nm_forward)
      o.nm_forward = *ov.nm_forward;
    if (ov.update_management)
      o.update_management = *ov.update_management;
    if (ov.bl)
      o.bl = *ov.bl;
    if (ov.replicas)
      o.replicas.replicas = std::size_t(*ov.replicas);
    if (ov.device)
      o.device = *ov.device;
  }
  // Each array draws from its own stream; index is 1-based so the network
  // seed itself is never used as an array seed directly.
  o.device.seed = mix_seed(b.seed, std::uint64_t(trainable_index));
  return o;
}

Network::Network(const NetworkSpec &spec, const NetworkBuildOptions &opts)
    : spec_(spec) {
  spec_.validate();
  int trainable = 0;
  for (const LayerSpec &l : spec_.layers) {
    switch (l.kind) {
    case LayerSpec::Kind::Conv: {
      ++trainable;
      detail::ConvLayer cl;
      cl.spec = l.conv;
      cl.name = "K" + std::to_string(trainable);
      const std::size_t cols =
          std::size_t(l.conv.k) * l.conv.k * l.conv.d + 1;
      cl.arr = TrainableArray(std::size_t(l.conv.m), cols,
                              resolve_options(opts, cl.name, trainable));
      layers_.emplace_back(std::move(cl));
      break;
    }
    case LayerSpec::Kind::Fc: {
      ++trainable;
      detail::FcLayer fl;
      fl.spec = l.fc;
      fl.name = "W" + std::to_string(trainable);
      fl.arr = TrainableArray(std::size_t(l.fc.out),
                              std::size_t(l.fc.in) + 1,
                              resolve_options(opts, fl.name, trainable));
      layers_.emplace_back(std::move(fl));
      break;
    }
    case LayerSpec::Kind::Tanh:
      layers_.emplace_back(detail::TanhLayer{});
      break;
    case LayerSpec::Kind::Pool:
      layers_.emplace_back(detail::PoolLayer{});
      break;
    case LayerSpec::Kind::Softmax: {
      detail::SoftmaxLayer sl;
      sl.classes = l.classes;
      classes_ = l.classes;
      layers_.emplace_back(std::move(sl));
      break;
    }
    }
  }
}

Volume Network::forward_all(const Volume &in, OpCounter &ops) {
  Volume v = in;
  for (auto &layer : layers_) {
    v = std::visit(
        [&](auto &l) -> Volume {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, detail::ConvLayer> ||
                        std::is_same_v<T, detail::FcLayer>)
            return l.forward(v, ops);
          else
            return l.forward(v);
        },
        layer);
  }
  return v;
}

TrainStepResult Network::train_step(const Volume &in, int label,
                                    std::uint64_t op_base) {
  if (label < 0 || label >= classes_)
    throw DataError("train_step: label " + std::to_string(label) +
                    " out of range");
  OpCounter ops{op_base, 0};
  const Volume probs = forward_all(in, ops);

  TrainStepResult res;
  res.predicted = int(std::max_element(probs.data.begin(), probs.data.end()) -
                      probs.data.begin());
  // Guard the log: a certain wrong answer would otherwise give inf.
  res.loss = -std::log(std::max(probs.data[std::size_t(label)], 1e-300));

  // Combined softmax + cross-entropy gradient wrt the logits.
  Volume err = probs;
  for (std::size_t i = 0; i < err.data.size(); ++i)
    err.data[i] = (int(i) == label ? 1.0 : 0.0) - probs.data[i];

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const bool need_input_grad = li > 0;
    err = std::visit(
        [&](auto &l) -> Volume {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, detail::ConvLayer> ||
                        std::is_same_v<T, detail::FcLayer>)
            return l.backward(err, ops, need_input_grad);
          else if constexpr (std::is_same_v<T, detail::SoftmaxLayer>)
            return err; // gradient already folded into the output delta
          else
            return l.backward(err);
        },
        layers_[li]);
  }

  for (auto &layer : layers_) {
    std::visit(
        [&](auto &l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, detail::ConvLayer> ||
                        std::is_same_v<T, detail::FcLayer>)
            l.update(ops);
        },
        layer);
  }
  res.ops_used = ops.next;
  return res;
}

int Network::predict(const Volume &in, std::uint64_t op_base) {
  OpCounter ops{op_base, 0};
  const Volume probs = forward_all(in, ops);
  return int(std::max_element(probs.data.begin(), probs.data.end()) -
             probs.data.begin());
}

double Network::loss(const Volume &in, int label, std::uint64_t op_base) {
  if (label < 0 || label >= classes_)
    throw DataError("loss: label out of range");
  OpCounter ops{op_base, 0};
  const Volume probs = forward_all(in, ops);
  return -std::log(std::max(probs.data[std::size_t(label)], 1e-300));
}

std::vector<double> Network::probabilities(const Volume &in,
                                           std::uint64_t op_base) {
  OpCounter ops{op_base, 0};
  return forward_all(in, ops).data;
}

std::vector<std::string> Network::array_names() const {
  std::vector<std::string> names;
  for (const auto &layer : layers_) {
    if (const auto *c = std::get_if<detail::ConvLayer>(&layer))
      names.push_back(c->name);
    else if (const auto *f = std::get_if<detail::FcLayer>(&layer))
      names.push_back(f->name);
  }
  return names;
}

TrainableArray &Network::array(const std::string &name) {
  for (auto &layer : layers_) {
    if (auto *c = std::get_if<detail::ConvLayer>(&layer)) {
      if (c->name == name)
        return c->arr;
    } else if (auto *f = std::get_if<detail::FcLayer>(&layer)) {
      if (f->name == name)
        return f->arr;
    }
  }
  throw ConfigError("network: no array named '" + name + "'");
}

const TrainableArray &Network::array(const std::string &name) const {
  return const_cast<Network *>(this)->array(name);
}

void Network::set_noise_sigma(double sigma) {
  for (auto &layer : layers_) {
    if (auto *c = std::get_if<detail::ConvLayer>(&layer))
      c->arr.set_noise_sigma(sigma);
    else if (auto *f = std::get_if<detail::FcLayer>(&layer))
      f->arr.set_noise_sigma(sigma);
  }
}

} // namespace rpusim

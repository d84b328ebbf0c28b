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

#include "rpusim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "rpusim/errors.hpp"
#include "rpusim/philox.hpp"

namespace rpusim {

void TrainingConfig::validate() const {
  spec.validate();
  if (epochs < 0)
    throw ConfigError("trainer: epochs must be >= 0");
  if (!(build.eta > 0.0))
    throw ConfigError("trainer: eta must be > 0");
  if (threads < 1)
    throw ConfigError("trainer: threads must be >= 1");
}

std::vector<std::uint32_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                            int epoch) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  // Salt 0 is reserved for the trainer stream; array seeds use salts >= 1.
  const auto key = make_key(mix_seed(seed, 0));
  for (std::size_t i = n; i-- > 1;) {
    const std::uint64_t r = block_u64(Philox4x32::eval(
        make_ctr(std::uint64_t(std::uint32_t(epoch)), std::uint32_t(i),
                 kTagShuffle, 0),
        key));
    std::swap(order[i], order[r % (i + 1)]);
  }
  return order;
}

double evaluate(const Network &net, const MnistData &test, std::size_t limit,
                int epoch_tag, bool noise_active, int threads) {
  std::size_t n = std::size_t(test.count);
  if (limit != 0)
    n = std::min(n, limit);
  if (n == 0)
    throw DataError("evaluate: empty test set");

  Network base = net;
  if (!noise_active)
    base.set_noise_sigma(0.0);

  const std::uint64_t ns =
      kEvalNamespace + (std::uint64_t(std::uint32_t(epoch_tag)) << 28);
  const int nthreads = int(std::min<std::size_t>(std::size_t(threads), n));

  auto run_chunk = [&](std::size_t lo, std::size_t hi, const Network &src,
                       std::size_t *wrong_out) {
    Network local = src;
    std::size_t wrong = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t op_base = ns + std::uint64_t(i) * 4096;
      if (local.predict(test.image(i), op_base) != test.label(i))
        ++wrong;
    }
    *wrong_out = wrong;
  };

  std::vector<std::size_t> wrong(std::size_t(nthreads), 0);
  if (nthreads == 1) {
    run_chunk(0, n, base, &wrong[0]);
  } else {
    const std::size_t chunk = (n + std::size_t(nthreads) - 1) / nthreads;
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t lo = std::size_t(t) * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      pool.emplace_back(run_chunk, lo, hi, std::cref(base),
                        &wrong[std::size_t(t)]);
    }
    for (auto &th : pool)
      th.join();
  }
  const std::size_t total_wrong =
      std::accumulate(wrong.begin(), wrong.end(), std::size_t(0));
  return 100.0 * double(total_wrong) / double(n);
}

TrainResult train(const TrainingConfig &cfg, const MnistData &train_set,
                  const MnistData &test_set, Network *out_net,
                  const ProgressFn &progress) {
  cfg.validate();
  if (train_set.count == 0)
    throw DataError("train: empty training set");

  std::size_t n = std::size_t(train_set.count);
  if (cfg.train_limit != 0)
    n = std::min(n, cfg.train_limit);

  Network net(cfg.spec, cfg.build);
  TrainResult res;

  const std::size_t wsize = std::max<std::size_t>(1, n / 6);
  std::vector<double> wsum(6, 0.0);
  std::vector<std::size_t> wcount(6, 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::uint32_t> order =
        shuffled_indices(n, cfg.build.seed, epoch);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::uint32_t idx = order[pos];
      const std::uint64_t serial = std::uint64_t(epoch) * n + pos;
      TrainStepResult step;
      try {
        step = net.train_step(train_set.image(idx), train_set.label(idx),
                              serial * 4096);
      } catch (const std::exception &e) {
        throw std::runtime_error(
            "train: epoch " + std::to_string(epoch + 1) + ", image " +
            std::to_string(idx) + ": " + e.what());
      }
      if (epoch == 0) {
        const std::size_t w = pos / wsize;
        if (w < 6) {
          wsum[w] += step.loss;
          ++wcount[w];
        }
      }
    }
    const double err = evaluate(net, test_set, cfg.test_limit, epoch + 1,
                                cfg.build.eval_noise, cfg.threads);
    res.records.push_back(
        MetricsRecord{epoch + 1, err, cfg.variant, cfg.build.seed});
    if (progress)
      progress(res.records.back());
  }

  for (std::size_t w = 0; w < 6; ++w)
    if (wcount[w] > 0)
      res.first_epoch_window_loss.push_back(wsum[w] / double(wcount[w]));

  if (!res.records.empty()) {
    const std::size_t tail = std::min<std::size_t>(6, res.records.size());
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = res.records.size() - tail; i < res.records.size();
         ++i) {
      sum += res.records[i].test_error_pct;
      sumsq += res.records[i].test_error_pct * res.records[i].test_error_pct;
    }
    res.final_error_mean = sum / double(tail);
    res.final_error_std = std::sqrt(
        std::max(0.0, sumsq / double(tail) -
                          res.final_error_mean * res.final_error_mean));
  }

  if (out_net)
    *out_net = std::move(net);
  return res;
}

void write_metrics_csv(const std::string &path,
                       const std::vector<MetricsRecord> &records) {
  std::ofstream out(path, std::ios::binary); // binary: byte-stable newlines
  if (!out)
    throw DataError("cannot write '" + path + "'");
  out << "epoch,test_error_pct,variant,seed\n";
  char buf[64];
  for (const MetricsRecord &r : records) {
    std::snprintf(buf, sizeof buf, "%.10g", r.test_error_pct);
    out << r.epoch << ',' << buf << ',' << r.variant << ',' << r.seed
        << '\n';
  }
}

std::vector<AblationVariant> standard_variants(const TrainingConfig &base) {
  auto make = [&base](const std::string &name, bool analog, bool nm, bool bm,
                      bool um, int bl) {
    AblationVariant v;
    v.name = name;
    v.config = base;
    v.config.variant = name;
    v.config.build.analog = analog;
    v.config.build.noise_management = nm;
    v.config.build.bound_management = bm;
    v.config.build.update_management = um;
    v.config.build.bl = bl;
    v.config.build.per_array.clear();
    return v;
  };

  std::vector<AblationVariant> out;
  out.push_back(make("fp", false, false, false, false, 10));
  out.push_back(make("rpu_raw", true, false, false, false, 10));
  out.push_back(make("rpu_nm", true, true, false, false, 10));
  out.push_back(make("rpu_bm", true, false, true, false, 10));
  out.push_back(make("rpu_nm_bm", true, true, true, false, 10));
  out.push_back(make("rpu_bl1", true, true, true, false, 1));
  out.push_back(make("rpu_bl40", true, true, true, false, 40));
  out.push_back(make("rpu_um_bl10", true, true, true, true, 10));
  out.push_back(make("rpu_um_bl1", true, true, true, true, 1));

  // Device-variation ablations ride on the NM+BM configuration.
  AblationVariant novar = make("rpu_novar", true, true, true, false, 10);
  novar.config.build.device = base.build.device.without_variations();
  out.push_back(novar);

  const RpuArrayConfig quiet = base.build.device.without_variations();
  AblationVariant nv_conv =
      make("rpu_novar_k1k2", true, true, true, false, 10);
  nv_conv.config.build.per_array["K1"].device = quiet;
  nv_conv.config.build.per_array["K2"].device = quiet;
  out.push_back(nv_conv);

  AblationVariant nv_fc = make("rpu_novar_w3w4", true, true, true, false, 10);
  nv_fc.config.build.per_array["W3"].device = quiet;
  nv_fc.config.build.per_array["W4"].device = quiet;
  out.push_back(nv_fc);

  AblationVariant k2x4 = make("rpu_k2x4", true, true, true, false, 10);
  k2x4.config.build.per_array["K2"].replicas = 4;
  out.push_back(k2x4);

  AblationVariant k2x13 = make("rpu_k2x13", true, true, true, false, 10);
  k2x13.config.build.per_array["K2"].replicas = 13;
  out.push_back(k2x13);

  AblationVariant all = make("rpu_all", true, true, true, true, 1);
  all.config.build.per_array["K2"].replicas = 13;
  out.push_back(all);

  return out;
}

std::vector<VariantResult> run_ablation(
    const std::vector<AblationVariant> &variants, const MnistData &train_set,
    const MnistData &test_set, const std::string &out_dir,
    const ProgressFn &progress) {
  std::vector<VariantResult> results;
  for (const AblationVariant &v : variants) {
    VariantResult r;
    r.name = v.name;
    r.result = train(v.config, train_set, test_set, nullptr, progress);
    if (!out_dir.empty()) {
      const std::filesystem::path p =
          std::filesystem::path(out_dir) / (v.name + ".csv");
      write_metrics_csv(p.string(), r.result.records);
    }
    results.push_back(std::move(r));
  }
  return results;
}

} // namespace rpusim

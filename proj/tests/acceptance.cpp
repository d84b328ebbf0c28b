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

// Acceptance gate. Prints one PASS/FAIL line per criterion.
//
//   --properties  (default) criteria 1-7: fast, no dataset required
//   --reduced     criteria 8-12 at reduced scale: 10k-image training
//                 subset, 5 epochs; checks variant ordering + the FP bound
//   --desk        criteria 8-13 at full scale (hours per run)
//   --only LIST   run only these criterion numbers, e.g. --only 8,9
//
// Exit code 0 iff every executed criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "rpusim/array.hpp"
#include "rpusim/config.hpp"
#include "rpusim/errors.hpp"
#include "rpusim/management.hpp"
#include "rpusim/mnist.hpp"
#include "rpusim/network.hpp"
#include "rpusim/perf.hpp"
#include "rpusim/philox.hpp"
#include "rpusim/tensor.hpp"
#include "rpusim/trainer.hpp"

namespace fs = std::filesystem;
using namespace rpusim;

namespace {

struct Ctx {
  std::string data_dir = "data/mnist";
  std::string out_dir;
  int threads = 1;
  std::set<int> only;
  bool run(int id) const { return only.empty() || only.count(id) > 0; }
};

int g_failures = 0;

bool report(const std::string &id, bool pass, const std::string &detail) {
  std::printf("%-5s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass)
    ++g_failures;
  return pass;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

/// Deterministic test-local uniform stream.
struct Rng {
  Philox4x32::Key key;
  std::uint64_t op = 0;
  explicit Rng(std::uint64_t seed) : key(make_key(mix_seed(seed, 9999))) {}
  double unit() { return uniform_draw(make_ctr(op++, 0, kTagShuffle, 1), key); }
  double sym() { return 2.0 * unit() - 1.0; } // uniform in [-1, 1]
  int upto(int n) { return int(unit() * n) % n; } // 0..n-1
};

// ---------------------------------------------------------------- C1
bool c1_analog_degeneration() {
  const double t0 = now_s();
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t rows = 1 + rng.upto(512);
    const std::size_t cols = 1 + rng.upto(512);
    RpuArrayConfig cfg;
    cfg.rows = rows;
    cfg.cols = cols;
    cfg.noise_sigma = 0.0;
    cfg.output_bound_alpha = 1e300;
    cfg.seed = 1000 + std::uint64_t(i);
    const RpuArray arr(cfg);
    const std::vector<double> w = arr.get_weights();

    std::vector<double> x(cols), y(rows), ref(rows, 0.0);
    for (double &v : x)
      v = rng.sym();
    arr.forward_mvm(x, y, std::uint64_t(i) * 8);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        ref[r] += w[r * cols + c] * x[c];
    for (std::size_t r = 0; r < rows; ++r)
      worst = std::max(worst, std::abs(y[r] - ref[r]) /
                                  std::max(1.0, std::abs(ref[r])));

    std::vector<double> d(rows), z(cols), refz(cols, 0.0);
    for (double &v : d)
      v = rng.sym();
    arr.backward_mvm(d, z, std::uint64_t(i) * 8 + 1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        refz[c] += w[r * cols + c] * d[r];
    for (std::size_t c = 0; c < cols; ++c)
      worst = std::max(worst, std::abs(z[c] - refz[c]) /
                                  std::max(1.0, std::abs(refz[c])));
  }
  const double dt = now_s() - t0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "analog degeneration: 200 arrays <=512x512, worst rel dev "
                "%.2e (<=1e-6), %.1f s (<10)",
                worst, dt);
  return report("C1", worst <= 1e-6 && dt < 10.0, buf);
}

// ---------------------------------------------------------------- C2
bool c2_update_oracle() {
  const double t0 = now_s();
  const double vals[] = {-0.9, -0.5, -0.1, 0.1, 0.5, 0.9};
  const int bls[] = {1, 10, 40};
  const int trials = 100000;
  const double dw = 0.001;
  double worst_sigmas = 0.0;
  int cell = 0;
  for (int bl : bls) {
    const UpdateConfig uc = UpdateConfig::balanced(0.01, bl, dw);
    for (double x : vals)
      for (double d : vals) {
        RpuArrayConfig cfg;
        cfg.rows = 1;
        cfg.cols = 1;
        cfg.bound_mean = 1e9; // keep the accumulated weight unclipped
        cfg.noise_sigma = 0.0;
        cfg = cfg.without_variations();
        cfg.seed = 50000 + std::uint64_t(cell);
        RpuArray arr(cfg);
        arr.set_weights(std::vector<double>{0.0});
        const std::vector<double> xv{x}, dv{d};
        for (int t = 0; t < trials; ++t)
          arr.stochastic_update(xv, dv, uc, std::uint64_t(t));
        const double mean = arr.get_weights()[0] / trials;

        const double px = std::min(1.0, uc.c_x * std::abs(x));
        const double pd = std::min(1.0, uc.c_delta * std::abs(d));
        const double p = px * pd;
        const double sign = (x < 0 ? -1.0 : 1.0) * (d < 0 ? -1.0 : 1.0);
        const double theory = bl * dw * sign * p;
        // per-trial coincidences are Binomial(BL, p)
        const double se = dw * std::sqrt(bl * p * (1.0 - p) / trials);
        const double sigmas = std::abs(mean - theory) / (se + 1e-12);
        worst_sigmas = std::max(worst_sigmas, sigmas);
        ++cell;
      }
  }
  const double dt = now_s() - t0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "stochastic update oracle: 108 cells x 1e5 trials, worst "
                "deviation %.2f sigma (<=3), %.1f s (<60)",
                worst_sigmas, dt);
  return report("C2", worst_sigmas <= 3.0 && dt < 60.0, buf);
}

// ---------------------------------------------------------------- C3
bool c3_nm_bm_exactness() {
  Rng rng(3);
  double worst_nm = 0.0;
  for (int i = 0; i < 20; ++i) {
    RpuArrayConfig cfg;
    cfg.rows = 64;
    cfg.cols = 64;
    cfg.noise_sigma = 0.0;
    cfg.output_bound_alpha = 1e9;
    cfg.seed = 3000 + std::uint64_t(i);
    const RpuArray arr(cfg);
    std::vector<double> d(64), z_nm(64), z_plain(64);
    for (double &v : d)
      v = rng.sym();
    const double scale = (i % 2 == 0) ? 1.0 : 1e-3; // exercise the rescale
    for (double &v : d)
      v *= scale;
    noise_managed_backward(arr, d, z_nm, std::uint64_t(i) * 4);
    arr.backward_mvm(d, z_plain, std::uint64_t(i) * 4 + 2);
    for (int c = 0; c < 64; ++c)
      worst_nm = std::max(worst_nm, std::abs(z_nm[c] - z_plain[c]) /
                                        std::max(1.0, std::abs(z_plain[c])));
  }

  const double targets[] = {11.9, 12.0, 20.0, 100.0, 1e4};
  const std::size_t n = 16384;
  RpuArrayConfig cfg;
  cfg.rows = 1;
  cfg.cols = n;
  cfg.noise_sigma = 0.0;
  cfg.bound_mean = 1.0;
  cfg.bound_dtod = 0.0;
  cfg.output_bound_alpha = 12.0;
  cfg.seed = 3100;
  RpuArray arr(cfg);
  const std::vector<double> ones(n, 1.0);
  double worst_bm = 0.0;
  int op = 0;
  for (double target : targets) {
    arr.set_weights(std::vector<double>(n, target / double(n)));
    std::vector<double> y(1);
    ManagedMvmReport rep;
    bound_managed_forward(arr, ones, y, std::uint64_t(op++) * 64, &rep);
    if (rep.bound_overflow)
      worst_bm = 1.0;
    worst_bm = std::max(worst_bm, std::abs(y[0] - target) / target);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "NM/BM exactness at sigma=0: NM worst rel %.2e, BM worst rel "
                "%.2e over outputs up to 1e4 (<=1e-6)",
                worst_nm, worst_bm);
  return report("C3", worst_nm <= 1e-6 && worst_bm <= 1e-6, buf);
}

// ---------------------------------------------------------------- C4
bool c4_um_invariant() {
  Rng rng(4);
  const int bls[] = {1, 10, 40};
  const double eta = 0.01, dw = 0.001;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int len = 1 + rng.upto(128);
    const double sx = std::pow(10.0, -4.0 * rng.unit());
    const double sd = std::pow(10.0, -6.0 * rng.unit());
    std::vector<double> x(len), d(len);
    for (int j = 0; j < len; ++j) {
      x[j] = rng.sym() * sx;
      d[j] = rng.sym() * sd;
    }
    const int bl = bls[i % 3];
    const UmGains g = update_management_gains(x, d, eta, bl, dw);
    if (g.skip)
      continue;
    const double product = eta / (bl * dw);
    worst = std::max(worst, std::abs(g.c_x * g.c_delta - product) /
                                std::max(1.0, product));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "UM gain invariant: c_x*c_delta = eta/(BL*dw_min) over 1e4 "
                "pairs, worst dev %.2e (<=1e-12)",
                worst);
  return report("C4", worst <= 1e-12, buf);
}

// ---------------------------------------------------------------- C5
bool c5_im2col() {
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + rng.upto(10);
    const int k = 1 + rng.upto(std::min(4, n));
    const int d = 1 + rng.upto(3);
    const int m = 2;
    Volume v = Volume::zeros(n, d);
    for (double &e : v.data)
      e = rng.sym();
    const ColMatrix cols = im2col(v, k);
    const int span = n - k + 1;
    const int krows = k * k * d;

    // direct sliding-window convolution as the oracle
    std::vector<double> w(std::size_t(m) * krows);
    for (double &e : w)
      e = rng.sym();
    for (int ro = 0; ro < span; ++ro)
      for (int co = 0; co < span; ++co)
        for (int om = 0; om < m; ++om) {
          double direct = 0.0;
          for (int ch = 0; ch < d; ++ch)
            for (int kr = 0; kr < k; ++kr)
              for (int kc = 0; kc < k; ++kc)
                direct += v.at(ch, ro + kr, co + kc) *
                          w[std::size_t(om) * krows +
                            std::size_t(ch) * k * k + std::size_t(kr) * k +
                            kc];
          double lowered = 0.0;
          const double *col = cols.col(ro * span + co);
          for (int r = 0; r < krows; ++r)
            lowered += w[std::size_t(om) * krows + r] * col[r];
          worst = std::max(worst, std::abs(direct - lowered) /
                                      std::max(1.0, std::abs(direct)));
        }

    // adjoint identity: <im2col(v), Z> == <v, col2im(Z)>
    ColMatrix z;
    z.rows = krows;
    z.cols = span * span;
    z.a.resize(std::size_t(krows) * span * span);
    for (double &e : z.a)
      e = rng.sym();
    double lhs = 0.0;
    for (std::size_t e = 0; e < z.a.size(); ++e)
      lhs += cols.a[e] * z.a[e];
    const Volume back = col2im_accumulate(z, n, k, d);
    double rhs = 0.0;
    for (std::size_t e = 0; e < back.data.size(); ++e)
      rhs += back.data[e] * v.data[e];
    worst = std::max(worst,
                     std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "im2col/col2im: direct-conv equivalence + adjoint identity "
                "on 100 instances, worst rel %.2e (<=1e-6)",
                worst);
  return report("C5", worst <= 1e-6, buf);
}

// ---------------------------------------------------------------- C6
bool c6_fp_gradient() {
  NetworkSpec spec;
  spec.layers = {LayerSpec::Conv(6, 3, 1, 2), LayerSpec::Tanh(),
                 LayerSpec::Pool(),           LayerSpec::Fc(8, 5),
                 LayerSpec::Tanh(),           LayerSpec::Fc(5, 3),
                 LayerSpec::Softmax(3)};
  NetworkBuildOptions opts;
  opts.analog = false;
  opts.eta = 0.01;
  opts.seed = 6;

  Rng rng(6);
  std::vector<Volume> imgs;
  const int labels[3] = {0, 1, 2};
  for (int i = 0; i < 3; ++i) {
    Volume v = Volume::zeros(6, 1);
    for (double &e : v.data)
      e = rng.unit();
    imgs.push_back(std::move(v));
  }

  const Network base(spec, opts);
  const std::vector<std::string> names = base.array_names();

  // analytic gradient of the summed loss: -(W_after - W_before)/eta,
  // accumulated from one step per image, each from the same start weights
  std::map<std::string, std::vector<double>> grad;
  for (const std::string &nm : names)
    grad[nm] = std::vector<double>(base.array(nm).weights().size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    Network net = base;
    net.train_step(imgs[i], labels[i], std::uint64_t(i) * 4096);
    for (const std::string &nm : names) {
      const std::vector<double> before = base.array(nm).weights();
      const std::vector<double> after = net.array(nm).weights();
      for (std::size_t e = 0; e < before.size(); ++e)
        grad[nm][e] += -(after[e] - before[e]) / opts.eta;
    }
  }

  auto total_loss = [&](Network &net) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      s += net.loss(imgs[i], labels[i], std::uint64_t(i) * 4096);
    return s;
  };

  const double h = 1e-4;
  double worst = 0.0; // relative, with a 1e-7 absolute floor
  for (const std::string &nm : names) {
    const std::vector<double> w0 = base.array(nm).weights();
    for (std::size_t e = 0; e < w0.size(); ++e) {
      Network net = base;
      std::vector<double> w = w0;
      w[e] = w0[e] + h;
      net.array(nm).set_weights(w);
      const double lp = total_loss(net);
      w[e] = w0[e] - h;
      net.array(nm).set_weights(w);
      const double lm = total_loss(net);
      const double numeric = (lp - lm) / (2 * h);
      const double an = grad[nm][e];
      const double tol =
          1e-4 * std::max(std::abs(an), std::abs(numeric)) + 1e-7;
      worst = std::max(worst, std::abs(an - numeric) / tol);
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "FP gradient check: 3-image micro-network, worst |analytic - "
                "finite difference| at %.2e of the 1e-4 relative tolerance",
                worst);
  return report("C6", worst <= 1.0, buf);
}

// ---------------------------------------------------------------- C7
bool c7_multidevice_and_table2() {
  const double sigma = 0.06;
  double worst_rel = 0.0;
  for (int nd : {1, 4, 13}) {
    RpuArrayConfig cfg;
    cfg.rows = 16;
    cfg.cols = 8;
    cfg.noise_sigma = sigma;
    cfg.output_bound_alpha = 1e9;
    cfg.seed = 7000 + std::uint64_t(nd);
    ReplicaConfig rep;
    rep.replicas = nd;
    ReplicatedArray arr(cfg, rep);
    arr.set_weights(std::vector<double>(16 * 8, 0.0));
    const std::vector<double> x(8, 0.0);
    std::vector<double> y(16);
    double sum = 0.0, sumsq = 0.0;
    const int ops = 400;
    for (int op = 0; op < ops; ++op) {
      arr.forward_mvm(x, y, std::uint64_t(op) * 4);
      for (double v : y) {
        sum += v;
        sumsq += v * v;
      }
    }
    const double cnt = double(ops) * 16;
    const double mean = sum / cnt;
    const double sd = std::sqrt(std::max(0.0, sumsq / cnt - mean * mean));
    const double expect = sigma / std::sqrt(double(nd));
    worst_rel = std::max(worst_rel, std::abs(sd - expect) / expect);
  }

  struct Row {
    const char *name;
    std::size_t rows, cols;
    std::uint64_t ws, macs;
  };
  // hand-checked: macs = rows * cols * ws
  const Row table[] = {
      {"K1", 96, 363, 3025, 105415200ull},
      {"K2", 256, 2400, 729, 447897600ull},
      {"K3", 384, 2304, 169, 149520384ull},
      {"K4", 384, 3456, 169, 224280576ull},
      {"K5", 256, 3456, 169, 149520384ull},
      {"W6", 4096, 9216, 1, 37748736ull},
      {"W7", 4096, 4096, 1, 16777216ull},
      {"W8", 1000, 4096, 1, 4096000ull},
  };
  const auto descs = describe_network(alexnet_geometry());
  bool table_ok = descs.size() == 8;
  if (table_ok)
    for (int i = 0; i < 8; ++i)
      table_ok = table_ok && descs[i].name == table[i].name &&
                 descs[i].rows == table[i].rows &&
                 descs[i].cols == table[i].cols &&
                 descs[i].ws == table[i].ws &&
                 descs[i].macs() == table[i].macs;
  table_ok = table_ok && total_macs(descs) == 1135256096ull;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "multi-device noise ~ sigma/sqrt(d) for d in {1,4,13}, worst "
                "rel dev %.1f%% (<=10%%); array-size/MAC table %s",
                100.0 * worst_rel, table_ok ? "exact" : "MISMATCH");
  return report("C7", worst_rel <= 0.10 && table_ok, buf);
}

// ------------------------------------------------------- quantitative
struct RunKey {
  std::string variant;
  std::uint64_t seed;
  int epochs;
  bool operator<(const RunKey &o) const {
    return std::tie(variant, seed, epochs) <
           std::tie(o.variant, o.seed, o.epochs);
  }
};

struct Quant {
  const Ctx &ctx;
  bool reduced;
  MnistData train_set, test_set;
  std::map<RunKey, TrainResult> cache;

  Quant(const Ctx &c, bool red) : ctx(c), reduced(red) {
    auto p = [&](const char *f) {
      return (fs::path(ctx.data_dir) / f).string();
    };
    train_set = load_mnist(p("train-images-idx3-ubyte"),
                           p("train-labels-idx1-ubyte"));
    test_set =
        load_mnist(p("t10k-images-idx3-ubyte"), p("t10k-labels-idx1-ubyte"));
  }

  const TrainResult &run(const std::string &variant, std::uint64_t seed,
                         int epochs) {
    const RunKey key{variant, seed, epochs};
    auto it = cache.find(key);
    if (it != cache.end())
      return it->second;

    TrainingConfig base;
    base.build.seed = seed;
    base.threads = ctx.threads;
    base.epochs = epochs;
    if (reduced)
      base.train_limit = 10000;
    TrainingConfig cfg;
    bool found = false;
    for (const AblationVariant &v : standard_variants(base))
      if (v.name == variant) {
        cfg = v.config;
        found = true;
        break;
      }
    if (!found)
      throw StateError("acceptance: unknown variant " + variant);

    std::printf("# running %s: seed %llu, %d epochs%s\n", variant.c_str(),
                static_cast<unsigned long long>(seed), epochs,
                reduced ? " (reduced scale)" : "");
    std::fflush(stdout);
    TrainResult res = train(cfg, train_set, test_set, nullptr,
                            [](const MetricsRecord &r) {
                              std::printf("#   epoch %d: %.2f%%\n", r.epoch,
                                          r.test_error_pct);
                              std::fflush(stdout);
                            });
    if (!ctx.out_dir.empty()) {
      fs::create_directories(ctx.out_dir);
      char fname[128];
      std::snprintf(fname, sizeof fname, "%s_seed%llu_e%d%s.csv",
                    variant.c_str(), static_cast<unsigned long long>(seed),
                    epochs, reduced ? "_reduced" : "");
      write_metrics_csv((fs::path(ctx.out_dir) / fname).string(),
                        res.records);
    }
    return cache.emplace(key, std::move(res)).first->second;
  }
};

void reduced_suite(const Ctx &ctx) {
  Quant q(ctx, true);
  const int epochs = 5;
  const double fp = q.run("fp", 1, epochs).final_error_mean;
  const double fp_last = q.run("fp", 1, epochs).records.back().test_error_pct;
  const double raw = q.run("rpu_raw", 1, epochs).final_error_mean;
  const double nmbm = q.run("rpu_nm_bm", 1, epochs).final_error_mean;
  const double umbl1 = q.run("rpu_um_bl1", 1, epochs).final_error_mean;
  const double all = q.run("rpu_all", 1, epochs).final_error_mean;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "reduced FP baseline: final-epoch error %.2f%% (<=2.5%%), "
                "5-epoch mean %.2f%%",
                fp_last, fp);
  report("C8r", fp_last <= 2.5, buf);
  std::snprintf(buf, sizeof buf,
                "reduced ordering: managed %.2f%% < unmanaged %.2f%% "
                "(strict)",
                nmbm, raw);
  report("C9r", nmbm < raw, buf);
  std::snprintf(buf, sizeof buf,
                "reduced ordering: UM+BL1 %.2f%% <= NM+BM %.2f%%", umbl1,
                nmbm);
  report("C10r", umbl1 <= nmbm, buf);
  std::snprintf(buf, sizeof buf,
                "reduced ordering: +13xK2 %.2f%% <= UM+BL1 %.2f%%", all,
                umbl1);
  report("C11r", all <= umbl1, buf);
  std::snprintf(buf, sizeof buf,
                "reduced ordering: best model %.2f%% <= NM+BM %.2f%%", all,
                nmbm);
  report("C12r", all <= nmbm, buf);
}

void desk_suite(const Ctx &ctx) {
  Quant q(ctx, false);
  if (ctx.run(8)) {
    const TrainResult &r = q.run("fp", 1, 30);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "FP baseline, 30 epochs: final %.2f%%, epochs-25-30 mean "
                  "%.2f%% (<=1.0%%)",
                  r.records.back().test_error_pct, r.final_error_mean);
    report("C8", r.final_error_mean <= 1.0, buf);
  }
  if (ctx.run(9)) {
    const TrainResult &r = q.run("rpu_raw", 1, 10);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "unmanaged RPU baseline, 10 epochs: final error %.2f%% "
                  "(>=5%%)",
                  r.records.back().test_error_pct);
    report("C9", r.records.back().test_error_pct >= 5.0, buf);
  }
  if (ctx.run(10)) {
    const TrainResult &r = q.run("rpu_nm_bm", 1, 30);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "RPU + NM + BM, 30 epochs: epochs-25-30 mean %.2f%% (in "
                  "[1.3, 2.1])",
                  r.final_error_mean);
    report("C10", r.final_error_mean >= 1.3 && r.final_error_mean <= 2.1,
           buf);
  }
  if (ctx.run(11)) {
    const TrainResult &r = q.run("rpu_um_bl1", 1, 30);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "+ UM with BL=1, 30 epochs: epochs-25-30 mean %.2f%% (in "
                  "[0.9, 1.4])",
                  r.final_error_mean);
    report("C11", r.final_error_mean >= 0.9 && r.final_error_mean <= 1.4,
           buf);
  }
  if (ctx.run(12)) {
    const TrainResult &r = q.run("rpu_all", 1, 30);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "+ 13-device K2 mapping, 30 epochs: epochs-25-30 mean "
                  "%.2f%% (in [0.7, 1.1])",
                  r.final_error_mean);
    report("C12", r.final_error_mean >= 0.7 && r.final_error_mean <= 1.1,
           buf);
  }
  if (ctx.run(13)) {
    double m12 = 0, m11 = 0, m10 = 0, m9 = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      m12 += q.run("rpu_all", seed, 30).final_error_mean / 3.0;
      m11 += q.run("rpu_um_bl1", seed, 30).final_error_mean / 3.0;
      m10 += q.run("rpu_nm_bm", seed, 30).final_error_mean / 3.0;
      m9 += q.run("rpu_raw", seed, 10).final_error_mean / 3.0;
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "3-seed ordering: %.2f%% <= %.2f%% <= %.2f%% < %.2f%%",
                  m12, m11, m10, m9);
    report("C13", m12 <= m11 && m11 <= m10 && m10 < m9, buf);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"rpusim acceptance gate"};
  bool properties = false, reduced = false, desk = false;
  std::string only_list;
  Ctx ctx;
  app.add_flag("--properties", properties, "criteria 1-7 (default)");
  app.add_flag("--reduced", reduced, "criteria 8-12, reduced scale");
  app.add_flag("--desk", desk, "criteria 8-13, full scale");
  app.add_option("--only", only_list, "comma list of criterion numbers");
  app.add_option("--data", ctx.data_dir, "MNIST IDX dataset root")
      ->envname("RPUSIM_DATA_DIR");
  app.add_option("--out", ctx.out_dir, "write per-run metrics CSVs here");
  app.add_option("--threads", ctx.threads, "evaluation threads");
  CLI11_PARSE(app, argc, argv);

  if (!only_list.empty()) {
    std::size_t at = 0;
    while (at < only_list.size()) {
      std::size_t comma = only_list.find(',', at);
      if (comma == std::string::npos)
        comma = only_list.size();
      ctx.only.insert(std::atoi(only_list.substr(at, comma - at).c_str()));
      at = comma + 1;
    }
  }
  if (!properties && !reduced && !desk)
    properties = true;

  try {
    if (properties) {
      if (ctx.run(1))
        c1_analog_degeneration();
      if (ctx.run(2))
        c2_update_oracle();
      if (ctx.run(3))
        c3_nm_bm_exactness();
      if (ctx.run(4))
        c4_um_invariant();
      if (ctx.run(5))
        c5_im2col();
      if (ctx.run(6))
        c6_fp_gradient();
      if (ctx.run(7))
        c7_multidevice_and_table2();
    }
    if (reduced)
      reduced_suite(ctx);
    if (desk)
      desk_suite(ctx);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "acceptance: aborted: %s\n", e.what());
    return 1;
  }

  if (g_failures == 0) {
    std::printf("all executed criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}

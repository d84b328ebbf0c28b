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

#include <cmath>
#include <doctest.h>
#include <limits>
#include <numeric>
#include <vector>

#include "rpusim/errors.hpp"

using namespace rpusim;

namespace {

RpuArrayConfig quiet_config(std::size_t rows, std::size_t cols,
                            std::uint64_t seed = 1) {
  RpuArrayConfig cfg;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.dw_min_dtod = 0.0;
  cfg.dw_min_ctoc = 0.0;
  cfg.imbalance_dtod = 0.0;
  cfg.bound_dtod = 0.0;
  cfg.noise_sigma = 0.0;
  cfg.seed = seed;
  return cfg;
}

} // namespace

TEST_CASE("config validation") {
  RpuArrayConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), ConfigError); // zero shape
  cfg.rows = 2;
  cfg.cols = 3;
  CHECK_NOTHROW(cfg.validate());
  cfg.dw_min_mean = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dw_min_mean = 0.001;
  cfg.bound_dtod = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.bound_dtod = 0.3;
  cfg.output_bound_alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero-variance sampling gives the exact device parameters") {
  RpuArray a(quiet_config(4, 5));
  for (double v : a.device_dw_plus())
    CHECK(v == doctest::Approx(0.001));
  for (double v : a.device_dw_minus())
    CHECK(v == doctest::Approx(0.001));
  for (double v : a.device_bound())
    CHECK(v == doctest::Approx(0.6));
  // Initialization contract: weights uniform within +-1/sqrt(N).
  const double lim = 1.0 / std::sqrt(5.0);
  for (double w : a.get_weights()) {
    CHECK(w <= lim);
    CHECK(w >= -lim);
  }
}

TEST_CASE("device sampler hits the requested spread") {
  RpuArrayConfig cfg = quiet_config(1000, 1000, 42);
  cfg.dw_min_dtod = 0.30;
  RpuArray a(cfg);
  const auto &dw = a.device_dw_plus(); // imbalance 0, so dw_plus == dw_min
  const double n = double(dw.size());
  const double mean = std::accumulate(dw.begin(), dw.end(), 0.0) / n;
  double var = 0.0;
  for (double v : dw)
    var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  // One-sided clamping at 1% of the mean trims the far-left tail
  // (~4e-4 of the mass), a sub-0.1% effect on the std.
  CHECK(sd == doctest::Approx(0.0003).epsilon(0.02));
  CHECK(mean == doctest::Approx(0.001).epsilon(0.01));
}

TEST_CASE("same seed twice reproduces the grid bit for bit") {
  RpuArrayConfig cfg;
  cfg.rows = 7;
  cfg.cols = 9;
  cfg.seed = 123;
  RpuArray a(cfg), b(cfg);
  CHECK(a.get_weights() == b.get_weights());
  CHECK(a.device_dw_plus() == b.device_dw_plus());
  CHECK(a.device_dw_minus() == b.device_dw_minus());
  CHECK(a.device_bound() == b.device_bound());
}

TEST_CASE("imbalance realization preserves the geometric mean") {
  RpuArrayConfig cfg = quiet_config(50, 50, 9);
  cfg.imbalance_dtod = 0.02;
  RpuArray a(cfg);
  const auto &p = a.device_dw_plus();
  const auto &m = a.device_dw_minus();
  bool spread = false;
  for (std::size_t e = 0; e < p.size(); ++e) {
    CHECK(std::sqrt(p[e] * m[e]) == doctest::Approx(0.001).epsilon(1e-12));
    spread = spread || p[e] != m[e];
  }
  CHECK(spread);
}

TEST_CASE("forward_mvm basics") {
  RpuArray a(quiet_config(2, 2));
  a.set_weights(std::vector<double>{0.1, 0.2, -0.3, 0.4});

  std::vector<double> x{1.0, 1.0}, y(2);
  a.forward_mvm(x, y, 1);
  CHECK(y[0] == doctest::Approx(0.3));
  CHECK(y[1] == doctest::Approx(0.1));

  x = {0.0, 0.0};
  a.forward_mvm(x, y, 2);
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(0.0));

  std::vector<double> bad{1.5, 0.0};
  CHECK_THROWS_AS(a.forward_mvm(bad, y, 3), InputRangeError);
  std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(a.forward_mvm(wrong, y, 4), DimensionError);
}

TEST_CASE("outputs clip at the signal bound") {
  RpuArrayConfig cfg = quiet_config(1, 2);
  cfg.bound_mean = 20.0; // keep weights themselves unclipped
  RpuArray a(cfg);
  a.set_weights(std::vector<double>{8.0, 7.0});
  std::vector<double> x{1.0, 1.0}, y(1);
  bool sat = false;
  a.forward_mvm(x, y, 1, 0, &sat);
  CHECK(y[0] == doctest::Approx(12.0)); // true product 15
  CHECK(sat);
  x = {0.5, 0.5};
  a.forward_mvm(x, y, 2, 0, &sat);
  CHECK(y[0] == doctest::Approx(7.5));
  CHECK_FALSE(sat);
}

TEST_CASE("backward_mvm transposes") {
  RpuArrayConfig cfg = quiet_config(2, 3);
  cfg.bound_mean = 10.0; // keep the hand-picked weights unclipped
  RpuArray a(cfg);
  a.set_weights(std::vector<double>{1, 2, 3, 4, 5, 6});
  std::vector<double> d{0.5, -0.25}, z(3);
  a.backward_mvm(d, z, 1);
  CHECK(z[0] == doctest::Approx(0.5 - 1.0));
  CHECK(z[1] == doctest::Approx(1.0 - 1.25));
  CHECK(z[2] == doctest::Approx(1.5 - 1.5));

  std::vector<double> zero{0.0, 0.0};
  a.backward_mvm(zero, z, 2);
  for (double v : z)
    CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("noiseless mvm equals a reference matmul on random arrays") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    RpuArrayConfig cfg;
    cfg.rows = 61;
    cfg.cols = 47;
    cfg.noise_sigma = 0.0;
    cfg.output_bound_alpha = std::numeric_limits<double>::infinity();
    cfg.seed = seed;
    RpuArray a(cfg);
    const auto w = a.get_weights();

    std::vector<double> x(cfg.cols), y(cfg.rows), ref(cfg.rows, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = 2.0 * uniform_draw(make_ctr(i, 0, kTagShuffle, 0),
                                make_key(seed)) -
             1.0;
    a.forward_mvm(x, y, 5);
    for (std::size_t j = 0; j < cfg.rows; ++j)
      for (std::size_t i = 0; i < cfg.cols; ++i)
        ref[j] += w[j * cfg.cols + i] * x[i];
    for (std::size_t j = 0; j < cfg.rows; ++j)
      CHECK(y[j] == doctest::Approx(ref[j]).epsilon(1e-6));
  }
}

TEST_CASE("mvm noise has the configured deviation") {
  RpuArrayConfig cfg = quiet_config(1, 4, 77);
  cfg.noise_sigma = 0.06;
  RpuArray a(cfg);
  a.set_weights(std::vector<double>{0, 0, 0, 0});
  std::vector<double> d{0.0}, z(4);
  const int trials = 25000; // 4 outputs per call -> 1e5 samples
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    d[0] = 0.0;
    a.backward_mvm(d, z, std::uint64_t(t));
    for (double v : z) {
      sum += v;
      sumsq += v * v;
    }
  }
  const double n = 4.0 * trials;
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(sd == doctest::Approx(0.06).epsilon(0.02));
}

TEST_CASE("update with zero input changes nothing") {
  RpuArrayConfig cfg;
  cfg.rows = 3;
  cfg.cols = 4;
  cfg.seed = 5;
  RpuArray a(cfg);
  const auto before = a.get_weights();
  std::vector<double> x(4, 0.0), d{0.9, -0.9, 0.9};
  a.stochastic_update(x, d, UpdateConfig::balanced(0.01, 10, 0.001), 1);
  CHECK(a.get_weights() == before);
}

TEST_CASE("update expectation follows the pulse-coincidence law") {
  // BL = 10, Cx = Cd = 1, x = 0.5, delta = 0.4: expected change per call
  // is 10 * 0.001 * 0.5 * 0.4 = 0.002.
  RpuArrayConfig cfg = quiet_config(1, 1);
  cfg.bound_mean = 1e6; // never hit the bound
  UpdateConfig ucfg{10, 1.0, 1.0, 0.01};

  const int trials = 100000;
  RpuArray a(cfg);
  std::vector<double> x{0.5}, d{0.4};
  double prev = a.get_weights()[0];
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    a.stochastic_update(x, d, ucfg, std::uint64_t(t));
    const double w = a.get_weights()[0];
    const double step = w - prev;
    prev = w;
    sum += step;
    sumsq += step * step;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sumsq / trials - mean * mean);
  const double se = sd / std::sqrt(double(trials));
  CHECK(std::fabs(mean - 0.002) < 3.0 * se);
}

TEST_CASE("certain pulses give exactly one increment at BL = 1") {
  RpuArrayConfig cfg = quiet_config(1, 1);
  RpuArray a(cfg);
  a.set_weights(std::vector<double>{0.0});
  const double c = std::sqrt(0.01 / (1.0 * 0.001)); // ~3.16
  UpdateConfig ucfg{1, c, c, 0.01};
  // Probabilities c*0.5 and c*0.4 both exceed 1, so they clip to certain
  // pulses and the single coincidence applies +dw exactly.
  std::vector<double> x{0.5}, d{0.4};
  a.stochastic_update(x, d, ucfg, 9);
  CHECK(a.get_weights()[0] == doctest::Approx(0.001).epsilon(1e-12));
  // Opposite signs step down by dw_minus.
  d[0] = -0.4;
  a.stochastic_update(x, d, ucfg, 10);
  CHECK(a.get_weights()[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("update sign follows sign(x)*sign(delta)") {
  const double c = std::sqrt(0.01 / (1.0 * 0.001));
  UpdateConfig ucfg{1, c, c, 0.01};
  for (double sx : {1.0, -1.0})
    for (double sd : {1.0, -1.0}) {
      RpuArray a(quiet_config(1, 1));
      a.set_weights(std::vector<double>{0.0});
      std::vector<double> x{sx * 0.9}, d{sd * 0.9};
      a.stochastic_update(x, d, ucfg, 3);
      CHECK(a.get_weights()[0] ==
            doctest::Approx(sx * sd * 0.001).epsilon(1e-12));
    }
}

TEST_CASE("weights never escape the device bound") {
  RpuArrayConfig cfg;
  cfg.rows = 4;
  cfg.cols = 4;
  cfg.seed = 31;
  RpuArray a(cfg);
  const double c = std::sqrt(0.01 / (1.0 * 0.001));
  UpdateConfig ucfg{1, c, c, 0.01};
  std::vector<double> x(4, 0.9), d(4, 0.9);
  for (int t = 0; t < 2000; ++t)
    a.stochastic_update(x, d, ucfg, std::uint64_t(t));
  const auto w = a.get_weights();
  const auto &b = a.device_bound();
  for (std::size_t e = 0; e < w.size(); ++e)
    CHECK(std::fabs(w[e]) <= b[e] + 1e-15);
}

TEST_CASE("set_weights clips to the per-device bound") {
  RpuArray a(quiet_config(1, 2));
  a.set_weights(std::vector<double>{5.0, -0.2});
  const auto w = a.get_weights();
  CHECK(w[0] == doctest::Approx(0.6));
  CHECK(w[1] == doctest::Approx(-0.2));
}

TEST_CASE("update determinism under identical call sequences") {
  RpuArrayConfig cfg;
  cfg.rows = 3;
  cfg.cols = 5;
  cfg.seed = 88;
  UpdateConfig ucfg = UpdateConfig::balanced(0.01, 10, 0.001);
  std::vector<double> x{0.1, -0.4, 0.9, 0.0, 1.0}, d{0.02, -0.7, 0.3};

  RpuArray a(cfg), b(cfg);
  for (int t = 0; t < 50; ++t) {
    a.stochastic_update(x, d, ucfg, std::uint64_t(t));
    b.stochastic_update(x, d, ucfg, std::uint64_t(t));
  }
  CHECK(a.get_weights() == b.get_weights());
}

TEST_CASE("balanced gains satisfy the product rule") {
  const auto u = UpdateConfig::balanced(0.01, 10, 0.001);
  CHECK(u.c_x == doctest::Approx(1.0));
  CHECK(u.c_delta == doctest::Approx(1.0));
  CHECK(u.c_x * u.c_delta ==
        doctest::Approx(0.01 / (10 * 0.001)).epsilon(1e-12));
  CHECK_THROWS_AS(UpdateConfig::balanced(0.0, 10, 0.001), ConfigError);
  CHECK_THROWS_AS(UpdateConfig::balanced(0.01, 0, 0.001), ConfigError);
}

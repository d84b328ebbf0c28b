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

#include "rpusim/perf.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cstdio>

#include "rpusim/errors.hpp"

namespace rpusim {

void HardwareDesc::validate() const {
  if (!(t_meas_large > 0.0) || !(t_meas_small > 0.0))
    throw ConfigError("hardware: measurement times must be positive");
  if (!(conventional_macs_per_s > 0.0))
    throw ConfigError("hardware: throughput must be positive");
}

std::vector<NetLayerDesc> describe_network(const std::vector<LayerSpec> &layers) {
  std::vector<NetLayerDesc> out;
  int trainable = 0;
  for (const LayerSpec &l : layers) {
    if (l.kind == LayerSpec::Kind::Conv) {
      ++trainable;
      const ConvSpec &c = l.conv;
      if (c.n <= 0 || c.k <= 0 || c.d <= 0 || c.m <= 0 || c.k > c.n)
        throw ConfigError("describe_network: bad conv geometry at K" +
                          std::to_string(trainable));
      NetLayerDesc d;
      d.name = "K" + std::to_string(trainable);
      d.rows = std::size_t(c.m);
      d.cols = std::size_t(c.k) * c.k * c.d;
      const int span = c.n - c.k + 1;
      d.ws = std::uint64_t(span) * span;
      out.push_back(std::move(d));
    } else if (l.kind == LayerSpec::Kind::Fc) {
      ++trainable;
      const FcSpec &f = l.fc;
      if (f.in <= 0 || f.out <= 0)
        throw ConfigError("describe_network: bad fc geometry at W" +
                          std::to_string(trainable));
      NetLayerDesc d;
      d.name = "W" + std::to_string(trainable);
      d.rows = std::size_t(f.out);
      d.cols = std::size_t(f.in);
      d.ws = 1;
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::uint64_t total_macs(const std::vector<NetLayerDesc> &descs) {
  std::uint64_t total = 0;
  for (const NetLayerDesc &d : descs)
    total += d.macs();
  return total;
}

double time_per_image_conventional(const std::vector<NetLayerDesc> &descs,
                                   const HardwareDesc &hw) {
  hw.validate();
  return double(total_macs(descs)) / hw.conventional_macs_per_s;
}

RpuTimeEstimate time_per_image_rpu(const std::vector<NetLayerDesc> &descs,
                                   const HardwareDesc &hw,
                                   const std::map<std::string, ArrayClass> &classes,
                                   const std::map<std::string, int> &ws_split) {
  hw.validate();
  for (const auto &kv : ws_split)
    if (kv.second <= 0)
      throw ConfigError("time_per_image_rpu: split factor for " + kv.first +
                        " must be positive");
  RpuTimeEstimate est;
  for (const NetLayerDesc &d : descs) {
    ArrayClass cls = ArrayClass::Large;
    if (auto it = classes.find(d.name); it != classes.end())
      cls = it->second;
    double reads = double(d.ws);
    if (auto it = ws_split.find(d.name); it != ws_split.end())
      reads /= double(it->second);
    const double t =
        reads * (cls == ArrayClass::Large ? hw.t_meas_large : hw.t_meas_small);
    if (t > est.seconds || est.bottleneck.empty()) {
      est.seconds = t;
      est.bottleneck = d.name;
    }
  }
  if (descs.empty())
    est.seconds = 0.0;
  return est;
}

std::vector<LayerSpec> alexnet_geometry() {
  // Side lengths are the stride-free equivalents: e.g. the 55x55 output of
  // the first layer appears here as n=65, k=11 so that (n-k+1)^2 = 3025.
  std::vector<LayerSpec> layers;
  layers.push_back(LayerSpec::Conv(65, 11, 3, 96));
  layers.push_back(LayerSpec::Conv(31, 5, 96, 256));
  layers.push_back(LayerSpec::Conv(15, 3, 256, 384));
  layers.push_back(LayerSpec::Conv(15, 3, 384, 384));
  layers.push_back(LayerSpec::Conv(15, 3, 384, 256));
  layers.push_back(LayerSpec::Fc(9216, 4096));
  layers.push_back(LayerSpec::Fc(4096, 4096));
  layers.push_back(LayerSpec::Fc(4096, 1000));
  return layers;
}

namespace {

std::string human_macs(std::uint64_t macs) {
  char buf[32];
  if (macs >= 1000000000ull)
    std::snprintf(buf, sizeof buf, "%.2f G", double(macs) / 1e9);
  else if (macs >= 1000000ull)
    std::snprintf(buf, sizeof buf, "%.0f M", double(macs) / 1e6);
  else
    std::snprintf(buf, sizeof buf, "%" PRIu64, macs);
  return buf;
}

} // namespace

std::string format_table_text(const std::vector<NetLayerDesc> &descs) {
  // Column widths are computed over the data so the table stays aligned
  // for arbitrary networks.
  std::vector<std::array<std::string, 5>> rows;
  for (const NetLayerDesc &d : descs) {
    char shape[48];
    std::snprintf(shape, sizeof shape, "%zu x %zu", d.rows, d.cols);
    rows.push_back({d.name, shape, std::to_string(d.ws),
                    std::to_string(d.macs()), human_macs(d.macs())});
  }
  const std::uint64_t total = total_macs(descs);
  rows.push_back({"total", "", "", std::to_string(total), human_macs(total)});

  std::array<std::string, 5> head = {"layer", "array", "ws", "macs", "approx"};
  std::array<std::size_t, 5> width{};
  for (std::size_t c = 0; c < 5; ++c) {
    width[c] = head[c].size();
    for (const auto &r : rows)
      width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  auto emit = [&](const std::array<std::string, 5> &r) {
    for (std::size_t c = 0; c < 5; ++c) {
      out += r[c];
      if (c + 1 < 5)
        out.append(width[c] - r[c].size() + 2, ' ');
    }
    out += '\n';
  };
  emit(head);
  for (const auto &r : rows)
    emit(r);
  return out;
}

std::string format_table_csv(const std::vector<NetLayerDesc> &descs) {
  std::string out = "layer,rows,cols,ws,macs\n";
  for (const NetLayerDesc &d : descs) {
    char line[128];
    std::snprintf(line, sizeof line, "%s,%zu,%zu,%" PRIu64 ",%" PRIu64 "\n",
                  d.name.c_str(), d.rows, d.cols, d.ws, d.macs());
    out += line;
  }
  char tot[64];
  std::snprintf(tot, sizeof tot, "total,,,,%" PRIu64 "\n", total_macs(descs));
  out += tot;
  return out;
}

} // namespace rpusim

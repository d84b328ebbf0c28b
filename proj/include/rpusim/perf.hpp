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
#include <string>
#include <vector>

#include "rpusim/network.hpp"

namespace rpusim {

/// One trainable layer in the analytic cost model. The array shape here is
/// the bias-free M x k^2*d form (the bias column does not change any of
/// the reuse or MAC arithmetic).
struct NetLayerDesc {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::uint64_t ws = 1; ///< weight-sharing factor: reads per image
  std::uint64_t macs() const { return std::uint64_t(rows) * cols * ws; }
};

/// Hardware constants: two RPU array speed classes (large arrays are
/// thermal-noise limited, small ones are not) and a conventional-compute
/// throughput for the comparison baseline.
struct HardwareDesc {
  double t_meas_large = 80e-9;
  double t_meas_small = 10e-9;
  double conventional_macs_per_s = 1e12;
  void validate() const;
};

enum class ArrayClass { Large, Small };

/// Extracts the trainable layers (conv and fc) from a layer list; other
/// layer kinds carry no arrays and are skipped. Names follow the trainable
/// ordinal: conv -> K<i>, fc -> W<i>.
std::vector<NetLayerDesc> describe_network(const std::vector<LayerSpec> &layers);

std::uint64_t total_macs(const std::vector<NetLayerDesc> &descs);

/// Compute-bound conventional estimate: total MACs / throughput.
double time_per_image_conventional(const std::vector<NetLayerDesc> &descs,
                                   const HardwareDesc &hw);

struct RpuTimeEstimate {
  double seconds = 0.0;
  std::string bottleneck; ///< empty when there are no layers
};

/// Pipelined RPU estimate: each layer needs ws * t_meas(class); the image
/// rate is set by the slowest stage, so the result is the maximum with its
/// arg-max layer. `classes` assigns speed classes (default Large);
/// `ws_split` divides a layer's reuse count across that many parallel
/// arrays.
RpuTimeEstimate time_per_image_rpu(
    const std::vector<NetLayerDesc> &descs, const HardwareDesc &hw,
    const std::map<std::string, ArrayClass> &classes = {},
    const std::map<std::string, int> &ws_split = {});

/// AlexNet geometry with both GPU halves merged per layer, expressed in
/// the stride-free reuse form used by this model: n is chosen so that
/// (n - k + 1)^2 equals the layer's output-position count.
std::vector<LayerSpec> alexnet_geometry();

/// Aligned text report: layer, array size, ws, MACs, plus a total row.
std::string format_table_text(const std::vector<NetLayerDesc> &descs);

/// CSV report with header `layer,rows,cols,ws,macs`.
std::string format_table_csv(const std::vector<NetLayerDesc> &descs);

} // namespace rpusim

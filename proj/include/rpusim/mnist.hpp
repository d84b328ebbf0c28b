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
#include <string>
#include <vector>

#include "rpusim/tensor.hpp"

namespace rpusim {

/// A labeled image set. Pixels stay in their raw byte form; conversion to
/// [0, 1] doubles happens per image on access.
struct MnistData {
  int count = 0;
  int side = 0; ///< square image side (IDX rows == cols required)
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;

  Volume image(std::size_t i) const;
  int label(std::size_t i) const { return int(labels[i]); }
};

/// Parses the big-endian IDX pair (image magic 0x00000803, label magic
/// 0x00000801). Throws MissingDataError when a file does not exist and
/// DataError on wrong magic, truncation, or an image/label count mismatch.
MnistData load_mnist(const std::string &images_path,
                     const std::string &labels_path);

} // namespace rpusim

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

#include <stdexcept>
#include <string>

namespace rpusim {

/// Invalid or inconsistent configuration values.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Vector/matrix size mismatch between caller and array.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Analog input outside the encodable range (|v| > 1).
struct InputRangeError : std::runtime_error {
  explicit InputRangeError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Operation invoked in the wrong phase (e.g. update before forward).
struct StateError : std::runtime_error {
  explicit StateError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated data file.
struct DataError : std::runtime_error {
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Referenced data file does not exist.
struct MissingDataError : std::runtime_error {
  explicit MissingDataError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace rpusim

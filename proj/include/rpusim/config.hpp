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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rpusim/perf.hpp"
#include "rpusim/trainer.hpp"

namespace rpusim {

/// One `key = value` line; line 0 marks command-line overrides.
struct ConfigEntry {
  std::string key, value;
  int line = 0;
};

/// Flat dotted-key configuration text. `#` starts a comment, blank lines
/// are skipped, duplicate keys are rejected. Parsing keeps the file order
/// and line numbers so schema errors can point at the offending line.
class ConfigMap {
public:
  static ConfigMap parse_text(const std::string &text, std::string origin);
  /// Reads and parses a file; a missing or unreadable file is a
  /// ConfigError (a config problem, not a dataset problem).
  static ConfigMap parse_file(const std::string &path);

  /// Applies a `key=value` override (the --set flag); replaces any
  /// existing entry for the key.
  void set_assignment(const std::string &assignment);
  void set(const std::string &key, const std::string &value);

  const ConfigEntry *find(const std::string &key) const;
  const std::vector<ConfigEntry> &entries() const { return entries_; }
  const std::string &origin() const { return origin_; }

private:
  std::vector<ConfigEntry> entries_;
  std::string origin_ = "<config>";
};

/// Fully resolved experiment: a concrete training run plus an optional
/// ablation-suite variant list.
struct ExperimentConfig {
  TrainingConfig training{};
  std::vector<std::string> suite; ///< suite.variants tokens, may be empty
};

/// Typed resolution against the experiment schema. Every key must be
/// known; errors carry origin and line number.
ExperimentConfig resolve_experiment(const ConfigMap &cfg);

/// Canonical snapshot of a resolved experiment. Feeding the text back
/// through parse_text + resolve_experiment yields a config whose snapshot
/// is byte-identical, and whose run behaves identically.
std::string snapshot_experiment(const ExperimentConfig &exp);

/// Hardware-spec schema for the estimate command: measurement times and
/// throughput plus per-layer speed-class / array-split assignments.
struct HardwareSpec {
  HardwareDesc hw{};
  std::map<std::string, ArrayClass> classes;
  std::map<std::string, int> split;
};

HardwareSpec resolve_hardware(const ConfigMap &cfg);

/// The network-geometry token list: `conv:n:k:d:m`, `tanh`, `pool`,
/// `fc:in:out`, `softmax:classes`, whitespace separated.
std::vector<LayerSpec> parse_layer_tokens(const std::string &text,
                                          const std::string &context);
std::string layer_tokens(const std::vector<LayerSpec> &layers);

/// Bundled reference configs as (filename, content) pairs: training
/// baselines, figure ablation suites, network specs and the hardware
/// model. Content is canonical and parseable by the matching resolver.
std::vector<std::pair<std::string, std::string>> reference_configs();

} // namespace rpusim

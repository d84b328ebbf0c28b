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

#include "rpusim/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "rpusim/errors.hpp"

namespace rpusim {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool valid_token(const std::string &s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.' || c == '-' || c == '+' || c == ':'))
      return false;
  return true;
}

std::string where(const std::string &origin, int line) {
  if (line <= 0)
    return origin + ": --set";
  return origin + ":" + std::to_string(line);
}

[[noreturn]] void fail(const std::string &origin, int line,
                       const std::string &msg) {
  throw ConfigError(where(origin, line) + ": " + msg);
}

double to_double(const ConfigEntry &e, const std::string &origin) {
  const std::string v = e.value;
  char *end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    fail(origin, e.line, "expected a number for '" + e.key + "', got '" + v + "'");
  return x;
}

long long to_ll(const ConfigEntry &e, const std::string &origin) {
  const std::string v = e.value;
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(origin, e.line, "expected an integer for '" + e.key + "', got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const ConfigEntry &e, const std::string &origin) {
  const std::string v = e.value;
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(origin, e.line,
         "expected a non-negative integer for '" + e.key + "', got '" + v + "'");
  return x;
}

bool to_bool(const ConfigEntry &e, const std::string &origin) {
  if (e.value == "true")
    return true;
  if (e.value == "false")
    return false;
  fail(origin, e.line,
       "expected true or false for '" + e.key + "', got '" + e.value + "'");
}

std::string fmt_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::vector<std::string> split_ws(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok)
    out.push_back(tok);
  return out;
}

// Trainable-array names in network order: conv -> K<i>, fc -> W<i>.
std::vector<std::string> trainable_names(const std::vector<LayerSpec> &layers) {
  std::vector<std::string> names;
  int i = 0;
  for (const LayerSpec &l : layers) {
    if (l.kind == LayerSpec::Kind::Conv)
      names.push_back("K" + std::to_string(++i));
    else if (l.kind == LayerSpec::Kind::Fc)
      names.push_back("W" + std::to_string(++i));
  }
  return names;
}

} // namespace

ConfigMap ConfigMap::parse_text(const std::string &text, std::string origin) {
  ConfigMap cfg;
  cfg.origin_ = std::move(origin);
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (std::size_t hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty())
      continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      fail(cfg.origin_, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!valid_token(key))
      fail(cfg.origin_, line, "bad key '" + key + "'");
    if (const ConfigEntry *prev = cfg.find(key))
      fail(cfg.origin_, line,
           "duplicate key '" + key + "' (first set at line " +
               std::to_string(prev->line) + ")");
    cfg.entries_.push_back({key, value, line});
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

void ConfigMap::set_assignment(const std::string &assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (!valid_token(key))
    throw ConfigError("--set: bad key '" + key + "'");
  set(key, trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string &key, const std::string &value) {
  for (ConfigEntry &e : entries_)
    if (e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  entries_.push_back({key, value, 0});
}

const ConfigEntry *ConfigMap::find(const std::string &key) const {
  for (const ConfigEntry &e : entries_)
    if (e.key == key)
      return &e;
  return nullptr;
}

std::vector<LayerSpec> parse_layer_tokens(const std::string &text,
                                          const std::string &context) {
  std::vector<LayerSpec> layers;
  for (const std::string &tok : split_ws(text)) {
    std::vector<std::string> parts;
    std::size_t at = 0;
    while (true) {
      std::size_t colon = tok.find(':', at);
      parts.push_back(tok.substr(at, colon - at));
      if (colon == std::string::npos)
        break;
      at = colon + 1;
    }
    auto want = [&](std::size_t n) {
      if (parts.size() != n)
        throw ConfigError(context + ": bad layer token '" + tok + "'");
    };
    auto num = [&](const std::string &s) {
      int x = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc{} || p != s.data() + s.size())
        throw ConfigError(context + ": bad layer token '" + tok + "'");
      return x;
    };
    if (parts[0] == "conv") {
      want(5);
      layers.push_back(
          LayerSpec::Conv(num(parts[1]), num(parts[2]), num(parts[3]),
                          num(parts[4])));
    } else if (parts[0] == "fc") {
      want(3);
      layers.push_back(LayerSpec::Fc(num(parts[1]), num(parts[2])));
    } else if (parts[0] == "tanh") {
      want(1);
      layers.push_back(LayerSpec::Tanh());
    } else if (parts[0] == "pool") {
      want(1);
      layers.push_back(LayerSpec::Pool());
    } else if (parts[0] == "softmax") {
      want(2);
      layers.push_back(LayerSpec::Softmax(num(parts[1])));
    } else {
      throw ConfigError(context + ": unknown layer kind '" + parts[0] + "'");
    }
  }
  if (layers.empty())
    throw ConfigError(context + ": network.layers is empty");
  return layers;
}

std::string layer_tokens(const std::vector<LayerSpec> &layers) {
  std::string out;
  for (const LayerSpec &l : layers) {
    if (!out.empty())
      out += ' ';
    switch (l.kind) {
    case LayerSpec::Kind::Conv:
      out += "conv:" + std::to_string(l.conv.n) + ":" +
             std::to_string(l.conv.k) + ":" + std::to_string(l.conv.d) + ":" +
             std::to_string(l.conv.m);
      break;
    case LayerSpec::Kind::Fc:
      out += "fc:" + std::to_string(l.fc.in) + ":" + std::to_string(l.fc.out);
      break;
    case LayerSpec::Kind::Tanh:
      out += "tanh";
      break;
    case LayerSpec::Kind::Pool:
      out += "pool";
      break;
    case LayerSpec::Kind::Softmax:
      out += "softmax:" + std::to_string(l.classes);
      break;
    }
  }
  return out;
}

namespace {

/// Tracks which entries a resolver consumed so leftovers can be rejected.
class Schema {
public:
  explicit Schema(const ConfigMap &cfg) : cfg_(cfg) {}

  const ConfigEntry *take(const std::string &key) {
    const ConfigEntry *e = cfg_.find(key);
    if (e)
      used_.insert(e->key);
    return e;
  }

  void get(const std::string &key, double &out) {
    if (const ConfigEntry *e = take(key))
      out = to_double(*e, cfg_.origin());
  }
  void get(const std::string &key, bool &out) {
    if (const ConfigEntry *e = take(key))
      out = to_bool(*e, cfg_.origin());
  }
  void get(const std::string &key, int &out, int lo, int hi) {
    if (const ConfigEntry *e = take(key)) {
      const long long x = to_ll(*e, cfg_.origin());
      if (x < lo || x > hi)
        fail(cfg_.origin(), e->line,
             "'" + key + "' out of range [" + std::to_string(lo) + ", " +
                 std::to_string(hi) + "]");
      out = int(x);
    }
  }
  void get(const std::string &key, std::uint64_t &out) {
    if (const ConfigEntry *e = take(key))
      out = to_u64(*e, cfg_.origin());
  }
  void get(const std::string &key, std::string &out) {
    if (const ConfigEntry *e = take(key)) {
      if (!valid_token(e->value))
        fail(cfg_.origin(), e->line, "bad value for '" + key + "'");
      out = e->value;
    }
  }

  /// Entries not consumed yet whose key starts with `prefix`.
  std::vector<const ConfigEntry *> remaining(const std::string &prefix) {
    std::vector<const ConfigEntry *> out;
    for (const ConfigEntry &e : cfg_.entries())
      if (!used_.count(e.key) && e.key.rfind(prefix, 0) == 0)
        out.push_back(&e);
    return out;
  }

  void consume(const ConfigEntry &e) { used_.insert(e.key); }

  void reject_leftovers() const {
    for (const ConfigEntry &e : cfg_.entries())
      if (!used_.count(e.key))
        fail(cfg_.origin(), e.line, "unknown key '" + e.key + "'");
  }

  const std::string &origin() const { return cfg_.origin(); }

private:
  const ConfigMap &cfg_;
  std::set<std::string> used_;
};

// Device-model patch fields, shared by the base `device.` keys and the
// per-layer `layers.<NAME>.device.` keys.
bool apply_device_field(RpuArrayConfig &dev, const std::string &field,
                        const ConfigEntry &e, const std::string &origin) {
  double *slot = nullptr;
  if (field == "dw_min_mean")
    slot = &dev.dw_min_mean;
  else if (field == "dw_min_dtod")
    slot = &dev.dw_min_dtod;
  else if (field == "dw_min_ctoc")
    slot = &dev.dw_min_ctoc;
  else if (field == "imbalance_dtod")
    slot = &dev.imbalance_dtod;
  else if (field == "bound_mean")
    slot = &dev.bound_mean;
  else if (field == "bound_dtod")
    slot = &dev.bound_dtod;
  else if (field == "noise_sigma")
    slot = &dev.noise_sigma;
  else if (field == "alpha")
    slot = &dev.output_bound_alpha;
  else
    return false;
  *slot = to_double(e, origin);
  return true;
}

} // namespace

ExperimentConfig resolve_experiment(const ConfigMap &cfg) {
  Schema s(cfg);
  ExperimentConfig exp;
  TrainingConfig &t = exp.training;

  s.get("run.variant", t.variant);
  s.get("train.seed", t.build.seed);
  s.get("train.epochs", t.epochs, 0, 1000000);
  std::uint64_t lim = t.train_limit;
  s.get("train.train_limit", lim);
  t.train_limit = std::size_t(lim);
  lim = t.test_limit;
  s.get("train.test_limit", lim);
  t.test_limit = std::size_t(lim);
  s.get("train.threads", t.threads, 1, 4096);

  if (const ConfigEntry *e = s.take("network.layers"))
    t.spec.layers = parse_layer_tokens(
        e->value, where(s.origin(), e->line) + ": network.layers");

  s.get("model.analog", t.build.analog);
  s.get("model.eta", t.build.eta);
  s.get("model.bl", t.build.bl, 1, 100000);
  s.get("model.noise_management", t.build.noise_management);
  s.get("model.bound_management", t.build.bound_management);
  s.get("model.nm_forward", t.build.nm_forward);
  s.get("model.update_management", t.build.update_management);
  s.get("model.eval_noise", t.build.eval_noise);

  for (const ConfigEntry *e : s.remaining("device.")) {
    const std::string field = e->key.substr(7);
    if (!apply_device_field(t.build.device, field, *e, s.origin()))
      fail(s.origin(), e->line, "unknown key '" + e->key + "'");
    s.consume(*e);
  }

  const std::vector<std::string> names = trainable_names(t.spec.layers);
  for (const ConfigEntry *e : s.remaining("layers.")) {
    // layers.<NAME>.<field...>
    const std::string rest = e->key.substr(7);
    const std::size_t dot = rest.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size())
      fail(s.origin(), e->line, "unknown key '" + e->key + "'");
    const std::string name = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    bool known_name = false;
    for (const std::string &n : names)
      known_name = known_name || n == name;
    if (!known_name)
      fail(s.origin(), e->line,
           "unknown array '" + name + "' in '" + e->key + "'");
    LayerOverrides &ov = t.build.per_array[name];
    if (field == "noise_management")
      ov.noise_management = to_bool(*e, s.origin());
    else if (field == "bound_management")
      ov.bound_management = to_bool(*e, s.origin());
    else if (field == "nm_forward")
      ov.nm_forward = to_bool(*e, s.origin());
    else if (field == "update_management")
      ov.update_management = to_bool(*e, s.origin());
    else if (field == "bl") {
      const long long x = to_ll(*e, s.origin());
      if (x < 1 || x > 100000)
        fail(s.origin(), e->line, "'" + e->key + "' out of range");
      ov.bl = int(x);
    } else if (field == "replicas") {
      const long long x = to_ll(*e, s.origin());
      if (x < 1 || x > 100000)
        fail(s.origin(), e->line, "'" + e->key + "' out of range");
      ov.replicas = int(x);
    } else if (field.rfind("device.", 0) == 0) {
      if (!ov.device)
        ov.device = t.build.device;
      if (!apply_device_field(*ov.device, field.substr(7), *e, s.origin()))
        fail(s.origin(), e->line, "unknown key '" + e->key + "'");
    } else {
      fail(s.origin(), e->line, "unknown key '" + e->key + "'");
    }
    s.consume(*e);
  }

  if (const ConfigEntry *e = s.take("suite.variants")) {
    exp.suite = split_ws(e->value);
    for (const std::string &v : exp.suite)
      if (!valid_token(v))
        fail(s.origin(), e->line, "bad variant name '" + v + "'");
  }

  s.reject_leftovers();
  return exp;
}

std::string snapshot_experiment(const ExperimentConfig &exp) {
  const TrainingConfig &t = exp.training;
  std::string out = "# rpusim resolved configuration\n";
  auto kv = [&out](const std::string &k, const std::string &v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  kv("run.variant", t.variant);
  kv("train.seed", std::to_string(t.build.seed));
  kv("train.epochs", std::to_string(t.epochs));
  kv("train.train_limit", std::to_string(t.train_limit));
  kv("train.test_limit", std::to_string(t.test_limit));
  kv("train.threads", std::to_string(t.threads));
  kv("network.layers", layer_tokens(t.spec.layers));
  kv("model.analog", fmt_bool(t.build.analog));
  kv("model.eta", fmt_double(t.build.eta));
  kv("model.bl", std::to_string(t.build.bl));
  kv("model.noise_management", fmt_bool(t.build.noise_management));
  kv("model.bound_management", fmt_bool(t.build.bound_management));
  kv("model.nm_forward", fmt_bool(t.build.nm_forward));
  kv("model.update_management", fmt_bool(t.build.update_management));
  kv("model.eval_noise", fmt_bool(t.build.eval_noise));
  auto device = [&](const std::string &prefix, const RpuArrayConfig &d) {
    kv(prefix + "dw_min_mean", fmt_double(d.dw_min_mean));
    kv(prefix + "dw_min_dtod", fmt_double(d.dw_min_dtod));
    kv(prefix + "dw_min_ctoc", fmt_double(d.dw_min_ctoc));
    kv(prefix + "imbalance_dtod", fmt_double(d.imbalance_dtod));
    kv(prefix + "bound_mean", fmt_double(d.bound_mean));
    kv(prefix + "bound_dtod", fmt_double(d.bound_dtod));
    kv(prefix + "noise_sigma", fmt_double(d.noise_sigma));
    kv(prefix + "alpha", fmt_double(d.output_bound_alpha));
  };
  device("device.", t.build.device);
  for (const auto &[name, ov] : t.build.per_array) {
    const std::string p = "layers." + name + ".";
    if (ov.noise_management)
      kv(p + "noise_management", fmt_bool(*ov.noise_management));
    if (ov.bound_management)
      kv(p + "bound_management", fmt_bool(*ov.bound_management));
    if (ov.nm_forward)
      kv(p + "nm_forward", fmt_bool(*ov.nm_forward));
    if (ov.update_management)
      kv(p + "update_management", fmt_bool(*ov.update_management));
    if (ov.bl)
      kv(p + "bl", std::to_string(*ov.bl));
    if (ov.replicas)
      kv(p + "replicas", std::to_string(*ov.replicas));
    if (ov.device)
      device(p + "device.", *ov.device);
  }
  if (!exp.suite.empty()) {
    std::string joined;
    for (const std::string &v : exp.suite) {
      if (!joined.empty())
        joined += ' ';
      joined += v;
    }
    kv("suite.variants", joined);
  }
  return out;
}

HardwareSpec resolve_hardware(const ConfigMap &cfg) {
  Schema s(cfg);
  HardwareSpec spec;
  s.get("hardware.t_meas_large", spec.hw.t_meas_large);
  s.get("hardware.t_meas_small", spec.hw.t_meas_small);
  s.get("hardware.throughput", spec.hw.conventional_macs_per_s);
  for (const ConfigEntry *e : s.remaining("class.")) {
    const std::string name = e->key.substr(6);
    if (e->value == "large")
      spec.classes[name] = ArrayClass::Large;
    else if (e->value == "small")
      spec.classes[name] = ArrayClass::Small;
    else
      fail(s.origin(), e->line,
           "expected large or small for '" + e->key + "'");
    s.consume(*e);
  }
  for (const ConfigEntry *e : s.remaining("split.")) {
    const long long x = to_ll(*e, s.origin());
    if (x < 1 || x > 1000000)
      fail(s.origin(), e->line, "'" + e->key + "' out of range");
    spec.split[e->key.substr(6)] = int(x);
    s.consume(*e);
  }
  s.reject_leftovers();
  spec.hw.validate();
  return spec;
}

std::vector<std::pair<std::string, std::string>> reference_configs() {
  std::vector<std::pair<std::string, std::string>> out;
  const TrainingConfig base{};
  auto add_variant = [&](const std::string &file, const std::string &name,
                         const std::string &note) {
    for (const AblationVariant &v : standard_variants(base))
      if (v.name == name) {
        out.emplace_back(file, "# " + note + "\n" +
                                   snapshot_experiment({v.config, {}}));
        return;
      }
    throw StateError("reference_configs: no variant " + name);
  };
  auto add_suite = [&](const std::string &file, const std::string &note,
                       const std::vector<std::string> &names) {
    ExperimentConfig exp{base, names};
    out.emplace_back(file, "# " + note + "\n" + snapshot_experiment(exp));
  };

  add_variant("lenet_fp.cfg", "fp",
              "floating-point reference trained with plain SGD");
  add_variant("lenet_rpu.cfg", "rpu_nm_bm",
              "baseline device model with noise and bound management");
  add_variant("lenet_rpu_raw.cfg", "rpu_raw",
              "baseline device model, no management techniques");
  add_variant("lenet_rpu_um_bl1.cfg", "rpu_um_bl1",
              "update management with single-pulse updates");
  add_variant("lenet_rpu_all.cfg", "rpu_all",
              "all techniques: NM + BM + UM, BL = 1, 13 devices on K2");
  add_suite("suite_fig3.cfg", "management ablation: raw, +NM, +BM, +NM+BM",
            {"rpu_raw", "rpu_nm", "rpu_bm", "rpu_nm_bm"});
  add_suite("suite_fig4.cfg",
            "device-variation ablation and multi-device mappings",
            {"rpu_nm_bm", "rpu_novar", "rpu_novar_k1k2", "rpu_novar_w3w4",
             "rpu_k2x4", "rpu_k2x13"});
  add_suite("suite_fig5.cfg", "update-scheme ablation: BL and UM sweeps",
            {"rpu_nm_bm", "rpu_bl1", "rpu_bl40", "rpu_um_bl10", "rpu_um_bl1"});
  add_suite("suite_fig6.cfg", "headline comparison: FP vs best RPU models",
            {"fp", "rpu_nm_bm", "rpu_um_bl1", "rpu_all"});

  out.emplace_back("lenet.net",
                   "# benchmark network geometry\nnetwork.layers = " +
                       layer_tokens(NetworkSpec::benchmark().layers) + "\n");
  out.emplace_back("alexnet.net",
                   "# AlexNet geometry in stride-free reuse form\n"
                   "network.layers = " +
                       layer_tokens(alexnet_geometry()) + "\n");
  out.emplace_back("hardware.cfg",
                   "# RPU array speed classes and the conventional baseline\n"
                   "hardware.t_meas_large = " +
                       fmt_double(HardwareDesc{}.t_meas_large) +
                       "\nhardware.t_meas_small = " +
                       fmt_double(HardwareDesc{}.t_meas_small) +
                       "\nhardware.throughput = " +
                       fmt_double(HardwareDesc{}.conventional_macs_per_s) +
                       "\n");
  return out;
}

} // namespace rpusim

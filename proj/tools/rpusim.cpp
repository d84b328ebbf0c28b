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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rpusim/config.hpp"
#include "rpusim/errors.hpp"
#include "rpusim/mnist.hpp"
#include "rpusim/perf.hpp"
#include "rpusim/trainer.hpp"

namespace fs = std::filesystem;
using namespace rpusim;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string data_dir = "data/mnist";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = 0;
  bool reduced = false;
  bool seed_given = false, threads_given = false;
};

void add_common(CLI::App *cmd, CommonOpts &o) {
  cmd->add_option("--config", o.config_path, "experiment config file");
  cmd->add_option("--set", o.sets,
                  "override a config key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "override train.seed")
      ->each([&o](const std::string &) { o.seed_given = true; });
  cmd->add_option("--threads", o.threads, "evaluation threads")
      ->each([&o](const std::string &) { o.threads_given = true; });
  cmd->add_option("--out", o.out_dir, "output directory (default .)");
  cmd->add_flag("--reduced", o.reduced,
                "reduced scale: 10k-image train subset, at most 5 epochs");
  cmd->add_option("--data", o.data_dir, "MNIST IDX dataset root directory")
      ->envname("RPUSIM_DATA_DIR");
}

ExperimentConfig load_experiment(const CommonOpts &o) {
  ConfigMap cfg = o.config_path.empty()
                      ? ConfigMap::parse_text("", "<defaults>")
                      : ConfigMap::parse_file(o.config_path);
  for (const std::string &s : o.sets)
    cfg.set_assignment(s);
  ExperimentConfig exp = resolve_experiment(cfg);
  if (o.seed_given)
    exp.training.build.seed = o.seed;
  if (o.threads_given)
    exp.training.threads = o.threads;
  if (o.reduced) {
    exp.training.train_limit =
        exp.training.train_limit == 0
            ? 10000
            : std::min<std::size_t>(exp.training.train_limit, 10000);
    exp.training.epochs = std::min(exp.training.epochs, 5);
  }
  return exp;
}

std::pair<MnistData, MnistData> load_dataset(const std::string &root) {
  auto p = [&root](const char *f) { return (fs::path(root) / f).string(); };
  MnistData train_set =
      load_mnist(p("train-images-idx3-ubyte"), p("train-labels-idx1-ubyte"));
  MnistData test_set =
      load_mnist(p("t10k-images-idx3-ubyte"), p("t10k-labels-idx1-ubyte"));
  return {std::move(train_set), std::move(test_set)};
}

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
}

std::string human_time(double seconds) {
  char buf[48];
  if (seconds >= 1.0)
    std::snprintf(buf, sizeof buf, "%.4g s", seconds);
  else if (seconds >= 1e-3)
    std::snprintf(buf, sizeof buf, "%.4g ms", seconds * 1e3);
  else if (seconds >= 1e-6)
    std::snprintf(buf, sizeof buf, "%.4g us", seconds * 1e6);
  else
    std::snprintf(buf, sizeof buf, "%.4g ns", seconds * 1e9);
  return buf;
}

void print_epoch(const MetricsRecord &r) {
  std::printf("[%s seed %llu] epoch %d: test error %.2f%%\n",
              r.variant.c_str(), static_cast<unsigned long long>(r.seed),
              r.epoch, r.test_error_pct);
  std::fflush(stdout);
}

int cmd_train(const CommonOpts &o) {
  ExperimentConfig exp = load_experiment(o);
  exp.training.validate();
  exp.training.spec.validate();
  auto [train_set, test_set] = load_dataset(o.data_dir);

  fs::create_directories(o.out_dir);
  const std::string name = exp.training.variant;
  const fs::path snap_path = fs::path(o.out_dir) / (name + ".cfg");
  write_file(snap_path, snapshot_experiment(exp));

  std::printf("training %s: %d epochs, seed %llu, %s backend\n", name.c_str(),
              exp.training.epochs,
              static_cast<unsigned long long>(exp.training.build.seed),
              exp.training.build.analog ? "analog" : "floating-point");
  std::fflush(stdout);

  const TrainResult res =
      train(exp.training, train_set, test_set, nullptr, print_epoch);

  const fs::path csv_path = fs::path(o.out_dir) / (name + ".csv");
  write_metrics_csv(csv_path.string(), res.records);
  if (!res.records.empty())
    std::printf("%s: final test error %.2f%% (mean %.2f%% +- %.2f%% over "
                "last %zu epochs)\n",
                name.c_str(), res.records.back().test_error_pct,
                res.final_error_mean, res.final_error_std,
                std::min<std::size_t>(6, res.records.size()));
  std::printf("wrote %s and %s\n", csv_path.string().c_str(),
              snap_path.string().c_str());
  return 0;
}

int cmd_ablate(const CommonOpts &o) {
  ExperimentConfig exp = load_experiment(o);
  if (exp.suite.empty()) {
    std::printf("ablate: suite.variants is empty, nothing to run\n");
    return 0;
  }
  const auto family = standard_variants(exp.training);
  std::vector<AblationVariant> chosen;
  for (const std::string &name : exp.suite) {
    bool found = false;
    for (const AblationVariant &v : family)
      if (v.name == name) {
        chosen.push_back(v);
        found = true;
        break;
      }
    if (!found) {
      std::string known;
      for (const AblationVariant &v : family)
        known += (known.empty() ? "" : " ") + v.name;
      throw ConfigError("suite.variants: unknown variant '" + name +
                        "' (known: " + known + ")");
    }
  }

  auto [train_set, test_set] = load_dataset(o.data_dir);
  fs::create_directories(o.out_dir);
  for (const AblationVariant &v : chosen)
    write_file(fs::path(o.out_dir) / (v.name + ".cfg"),
               snapshot_experiment({v.config, {}}));

  std::printf("ablation: %zu variants, %d epochs each\n", chosen.size(),
              exp.training.epochs);
  std::fflush(stdout);
  const auto results =
      run_ablation(chosen, train_set, test_set, o.out_dir, print_epoch);

  std::string summary = "variant,mean_error_pct,std_error_pct\n";
  std::printf("\n%-18s %s\n", "variant", "final error (epochs 25-30 mean)");
  for (const VariantResult &r : results) {
    char row[128];
    std::snprintf(row, sizeof row, "%s,%.10g,%.10g\n", r.name.c_str(),
                  r.result.final_error_mean, r.result.final_error_std);
    summary += row;
    std::printf("%-18s %.2f%% +- %.2f%%\n", r.name.c_str(),
                r.result.final_error_mean, r.result.final_error_std);
  }
  const fs::path sum_path = fs::path(o.out_dir) / "summary.csv";
  write_file(sum_path, summary);
  std::printf("wrote %s\n", sum_path.string().c_str());
  return 0;
}

int cmd_estimate(const std::string &net_path, const std::string &hw_path,
                 const std::string &csv_path) {
  const ExperimentConfig exp =
      resolve_experiment(ConfigMap::parse_file(net_path));
  const auto descs = describe_network(exp.training.spec.layers);
  HardwareSpec hs;
  if (!hw_path.empty())
    hs = resolve_hardware(ConfigMap::parse_file(hw_path));

  auto known = [&descs](const std::string &name) {
    for (const NetLayerDesc &d : descs)
      if (d.name == name)
        return true;
    return false;
  };
  for (const auto &kv : hs.classes)
    if (!known(kv.first))
      throw ConfigError(hw_path + ": class." + kv.first +
                        " names no layer of " + net_path);
  for (const auto &kv : hs.split)
    if (!known(kv.first))
      throw ConfigError(hw_path + ": split." + kv.first +
                        " names no layer of " + net_path);

  std::fputs(format_table_text(descs).c_str(), stdout);

  const double conv = time_per_image_conventional(descs, hs.hw);
  const RpuTimeEstimate rpu = time_per_image_rpu(descs, hs.hw, hs.classes,
                                                 hs.split);
  std::printf("\nconventional (%.4g MAC/s): %s per image\n",
              hs.hw.conventional_macs_per_s, human_time(conv).c_str());
  std::printf("rpu pipeline: %s per image, bottleneck %s\n",
              human_time(rpu.seconds).c_str(), rpu.bottleneck.c_str());
  if (rpu.seconds > 0.0)
    std::printf("speedup vs conventional: %.3g x\n", conv / rpu.seconds);

  if (!csv_path.empty()) {
    write_file(csv_path, format_table_csv(descs));
    std::printf("wrote %s\n", csv_path.c_str());
  }
  return 0;
}

int cmd_gen_config(const std::string &name, const std::string &out_dir) {
  const auto refs = reference_configs();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto &[file, content] : refs) {
      const fs::path p = fs::path(out_dir) / file;
      write_file(p, content);
      std::printf("wrote %s\n", p.string().c_str());
    }
    return 0;
  }
  if (name.empty()) {
    for (const auto &[file, content] : refs)
      std::printf("%s\n", file.c_str());
    return 0;
  }
  for (const auto &[file, content] : refs)
    if (file == name) {
      std::fputs(content.c_str(), stdout);
      return 0;
    }
  throw ConfigError("gen-config: unknown config '" + name +
                    "' (run gen-config with no arguments for the list)");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"rpusim: analog resistive cross-point CNN training simulator"};
  app.require_subcommand(1);
  int rc = 0;

  CommonOpts train_opts;
  CLI::App *train_cmd =
      app.add_subcommand("train", "train one network variant on MNIST");
  add_common(train_cmd, train_opts);
  train_cmd->callback([&] { rc = cmd_train(train_opts); });

  CommonOpts ablate_opts;
  CLI::App *ablate_cmd = app.add_subcommand(
      "ablate", "train every variant listed in suite.variants");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->callback([&] { rc = cmd_ablate(ablate_opts); });

  std::string net_path, hw_path, csv_path;
  CLI::App *est_cmd = app.add_subcommand(
      "estimate", "analytic array-size / MAC / timing report");
  est_cmd->add_option("--net", net_path, "network geometry file")->required();
  est_cmd->add_option("--hw", hw_path, "hardware spec file");
  est_cmd->add_option("--csv", csv_path, "also write the table as CSV");
  est_cmd->callback([&] { rc = cmd_estimate(net_path, hw_path, csv_path); });

  std::string gen_name, gen_out;
  CLI::App *gen_cmd = app.add_subcommand(
      "gen-config", "print or write the bundled reference configs");
  gen_cmd->add_option("name", gen_name, "config name to print");
  gen_cmd->add_option("--out", gen_out, "write all configs to a directory");
  gen_cmd->callback([&] { rc = cmd_gen_config(gen_name, gen_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "rpusim: %s\n", e.what());
    return 2;
  } catch (const MissingDataError &e) {
    std::fprintf(stderr, "rpusim: %s\n", e.what());
    return 3;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "rpusim: %s\n", e.what());
    return 1;
  }
  return rc;
}

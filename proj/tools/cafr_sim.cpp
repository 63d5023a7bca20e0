/*
 * Copyright 2026 The cafr-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command line front end: simulate, sweep, gen-movielens.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cafr/cafr.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::string> scheme;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> seeds;
  std::optional<int> rounds;
  std::optional<std::size_t> capacity;
  std::optional<double> density;
  std::string out;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config_path, "Key-value configuration file")->check(CLI::ExistingFile);
  cmd.add_option("--set", o.settings, "Override a configuration key (key=value), repeatable");
  cmd.add_option("--scheme", o.scheme, "cafr|random|ceps|thompson|cafr_nodrl|fedavg_cafr");
  cmd.add_option("--seed", o.seed, "Single seed");
  cmd.add_option("--seeds", o.seeds, "Comma separated seeds");
  cmd.add_option("--rounds", o.rounds, "Rounds per seed");
  cmd.add_option("--capacity", o.capacity, "Cache capacity c of each RSU");
  cmd.add_option("--density", o.density, "Vehicle density (vehicles/km)");
  cmd.add_option("--out", o.out, "Output CSV (default: stdout)");
}

cafr::ExperimentConfig build_config(const CommonOptions& o) {
  cafr::ExperimentConfig cfg = o.config_path.empty() ? cafr::ExperimentConfig{} : cafr::load_config(o.config_path);
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw cafr::ConfigError("--set expects key=value, got '" + s + "'");
    cafr::apply_setting(cfg, cafr::detail::trim(std::string_view(s).substr(0, eq)),
                        cafr::detail::trim(std::string_view(s).substr(eq + 1)));
  }
  if (o.scheme) cfg.scheme = cafr::parse_scheme(*o.scheme);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.seeds) cfg.seeds = cafr::parse_seed_list(*o.seeds);
  if (o.rounds) cfg.rounds = *o.rounds;
  if (o.capacity) cfg.capacity = *o.capacity;
  if (o.density) cfg.mobility.density_per_km = *o.density;
  return cfg;
}

std::string setting_key(const std::string& param) {
  if (param == "capacity") return "sim.capacity";
  if (param == "density") return "mobility.density";
  if (param == "rounds") return "sim.rounds";
  if (param == "scheme") return "sim.scheme";
  return param;
}

template <typename F>
void with_output(const std::string& path, F&& f) {
  if (path.empty()) {
    f(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw cafr::IoError("cannot write " + path);
  f(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative vehicular edge caching simulator"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log per-round progress");

  CommonOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run one experiment and write per-round metrics as CSV");
  add_common(*simulate, sim_opts);

  CommonOptions sweep_opts;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over values of one parameter");
  add_common(*sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "capacity|density|rounds|scheme or any configuration key")->required();
  sweep->add_option("--values", sweep_values, "Values to sweep")->required()->delimiter(',');

  std::string gen_dir;
  std::uint64_t gen_seed = 1000209;
  auto* gen = app.add_subcommand("gen-movielens", "Write a synthetic corpus in MovieLens-1M file format");
  gen->add_option("--out", gen_dir, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);
  if (verbose) cafr::logger()->set_level(spdlog::level::info);

  try {
    if (*simulate) {
      const auto cfg = build_config(sim_opts);
      cfg.validate();
      const auto corpus = cafr::load_corpus(cfg.data);
      const auto records = cafr::run_experiment(cfg, corpus);
      with_output(sim_opts.out, [&](std::ostream& out) { cafr::write_csv(out, records); });
    } else if (*sweep) {
      const auto base = build_config(sweep_opts);
      std::optional<cafr::Corpus> corpus;
      std::vector<std::vector<cafr::RoundRecord>> blocks;
      for (const auto& value : sweep_values) {
        auto cfg = base;
        cafr::apply_setting(cfg, setting_key(sweep_param), value);
        cfg.validate();
        if (!corpus || setting_key(sweep_param).starts_with("data.")) corpus = cafr::load_corpus(cfg.data);
        blocks.push_back(cafr::run_experiment(cfg, *corpus));
      }
      with_output(sweep_opts.out, [&](std::ostream& out) {
        for (std::size_t i = 0; i < blocks.size(); ++i) cafr::write_csv(out, blocks[i], i == 0);
      });
    } else if (*gen) {
      cafr::SyntheticCorpusParams p;
      p.seed = gen_seed;
      cafr::write_movielens(cafr::generate_synthetic_corpus(p), gen_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

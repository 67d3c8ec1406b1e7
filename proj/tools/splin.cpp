// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// splin: runs one experiment per subcommand and writes its results, artifacts
// and manifest to the output directory.

#include <splin/runner.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;  // config key -> text
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "Config file (key = value lines)");
  auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  };
  opt("--seed", "seed", "Master seed (u64)");
  opt("--jobs", "jobs", "Worker threads");
  opt("--out", "output_dir", "Output directory");
  opt("--format", "format", "Table format: csv or json");
  opt("--snapshot-every", "snapshot_every", "Dictionary snapshot period in rounds (0 = off)");
}

splin::ExperimentConfig load(splin::ExperimentKind kind, const Overrides& o) {
  splin::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::string text = splin::read_file(o.config_path);
    // The subcommand names the experiment when the file does not.
    const auto keys_experiment = [&] {
      std::size_t pos = 0;
      while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        line.erase(0, line.find_first_not_of(" \t"));
        if (line.rfind("experiment", 0) == 0 && line.find('=') != std::string::npos &&
            line.substr(0, line.find('=')).find_last_not_of(" \t") == 9)
          return true;
        pos = end + 1;
      }
      return false;
    }();
    if (!keys_experiment) text += "\nexperiment = " + std::string(splin::to_string(kind)) + "\n";
    cfg = splin::parse_config(text);
    if (cfg.experiment != kind)
      throw splin::ConfigError({{0, "experiment",
                                 "config names '" + std::string(splin::to_string(cfg.experiment)) +
                                     "' but the subcommand is '" + std::string(splin::to_string(kind)) + "'"}});
  }
  cfg.experiment = kind;
  splin::apply_env_overrides(cfg, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
  for (const auto& [key, value] : o.values) splin::set_config_value(cfg, key, value);
  splin::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse coding and identifiability experiments"};
  app.set_version_flag("--version", std::string(SPLIN_VERSION));
  app.require_subcommand(1);

  const std::pair<const char*, splin::ExperimentKind> kinds[] = {
      {"gen", splin::ExperimentKind::kGen},
      {"solve", splin::ExperimentKind::kSolve},
      {"learn-dict", splin::ExperimentKind::kLearnDict},
      {"train-sae", splin::ExperimentKind::kTrainSae},
      {"identcheck", splin::ExperimentKind::kIdentCheck},
      {"eval", splin::ExperimentKind::kEval},
      {"phase-sweep", splin::ExperimentKind::kPhaseSweep},
      {"pipeline", splin::ExperimentKind::kPipeline},
  };
  const char* help[] = {"Sample a dictionary, codes and observations",
                        "Sparse inference against the generating dictionary",
                        "Learn a dictionary and score recovery",
                        "Train a sparse autoencoder and measure its amortization gap",
                        "Train classifiers and test linear identifiability",
                        "Score inferred codes against ground truth",
                        "Recovery phase diagram over (k, m)",
                        "Generate, learn, infer, match and score"};

  Overrides o;
  std::optional<splin::ExperimentKind> chosen;
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i].first, help[i]);
    add_common(sub, o);
    if (kinds[i].second == splin::ExperimentKind::kIdentCheck) {
      sub->add_option_function<std::string>("--seeds", [&o](const std::string& v) { o.values["ident.seeds"] = v; },
                                            "Number of training seeds");
      sub->add_option_function<std::string>(
          "--generator", [&o](const std::string& v) { o.values["ident.generator"] = v; }, "Generator kind");
      sub->add_option_function<std::string>("--epochs", [&o](const std::string& v) { o.values["ident.epochs"] = v; },
                                            "Training epochs");
    }
    sub->callback([&chosen, k = kinds[i].second] { chosen = k; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const splin::ExperimentConfig cfg = load(*chosen, o);
    const splin::RunManifest m = splin::run(cfg);
    std::cout << "wrote " << m.files.size() + 1 << " files to " << cfg.output_dir << " (config " << m.config_hash.substr(0, 12)
              << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return splin::exit_code_for(e);
  }
}

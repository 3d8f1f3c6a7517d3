#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "advca/errors.hpp"
#include "advca/experiment.hpp"

namespace fs = std::filesystem;
using namespace advca;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw ArgumentError("bad graph index '" + item + "'");
    }
    if (pos != item.size() || item.front() == '-') throw ArgumentError("bad graph index '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ArgumentError("--indices selects no graphs");
  return out;
}

void report(const fs::path& out, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << (out / f).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial causal augmentation experiments on synthetic motif graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--seed", seed, "override the seed (dataset seed for generate, run seed otherwise)");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  };

  auto* generate = app.add_subcommand("generate", "write train/val/test JSONL and a manifest");
  common(generate);

  std::string data_dir;
  auto* train = app.add_subcommand("train", "train num_seeds models and summarise test accuracy");
  common(train);
  train->add_option("--data", data_dir, "directory holding train/val/test.jsonl")->required();

  std::string set_a;
  std::string set_b;
  auto* gcs = app.add_subcommand("gcs", "estimate graph covariate shift between two JSONL files");
  common(gcs);
  gcs->add_option("--set-a", set_a, "first graph set")->required();
  gcs->add_option("--set-b", set_b, "second graph set")->required();

  std::string checkpoint;
  std::string dataset;
  std::string indices;
  auto* visualize = app.add_subcommand("visualize", "export generator masks as Graphviz DOT");
  common(visualize);
  visualize->add_option("--checkpoint", checkpoint, "trained model checkpoint")->required();
  visualize->add_option("--dataset", dataset, "JSONL graph file")->required();
  visualize->add_option("--indices", indices, "comma-separated graph indices")->required();

  auto* ablate = app.add_subcommand("ablate", "compare advca against its ablations");
  common(ablate);
  ablate->add_option("--data", data_dir, "directory holding train/val/test.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    ExperimentConfig config = load_config(config_path);
    if (seed) {
      if (generate->parsed()) {
        config.dataset.seed = *seed;
      } else {
        config.seed = *seed;
      }
    }
    config.validate();
    const fs::path out(out_dir);
    if (generate->parsed()) {
      report(out, cmd_generate(config, out));
    } else if (train->parsed()) {
      report(out, cmd_train(config, data_dir, out));
    } else if (gcs->parsed()) {
      std::vector<std::string> warnings;
      const GcsReport r = cmd_gcs(config, set_a, set_b, out, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      std::cout << r.to_json() << "\n";
    } else if (visualize->parsed()) {
      report(out, cmd_visualize(config, checkpoint, dataset, parse_indices(indices), out));
    } else if (ablate->parsed()) {
      report(out, cmd_ablate(config, data_dir, out));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const TrainingError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

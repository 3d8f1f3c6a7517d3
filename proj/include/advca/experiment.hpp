#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advca/engine.hpp"
#include "advca/gcs.hpp"
#include "advca/graph.hpp"

namespace advca {
ADVCA_NS_BEGIN

struct DatasetConfig {
  ShiftKind shift = ShiftKind::base;
  std::size_t train_per_class = 100;  // per environment for the base shift
  std::size_t eval_per_class = 50;
  std::size_t feature_dim = 4;
  std::uint64_t seed = 0;
  // Base-shift base-graph size range; the size shift uses its fixed ladder.
  std::size_t min_base_nodes = 8;
  std::size_t max_base_nodes = 16;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  GcsConfig gcs;
  Method method = Method::advca;
  std::size_t num_seeds = 1;
  std::uint64_t seed = 0;  // run seeds are seed, seed + 1, ...

  void validate() const;
};

// `section.key = value` lines; `#` starts a comment. Unknown keys, repeated
// keys and malformed values throw ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical text form (every key, fixed order); parse_config round-trips it.
std::string format_config(const ExperimentConfig& config);

MotifConfig motif_config(const DatasetConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when training diverged
  TrainResult result;
};

// Fresh bundle per seed (initialised from the seed), trained with `method`.
SeedRun run_seed(const ExperimentConfig& config, const DatasetSplit& split, Method method, std::uint64_t seed,
                 ModelBundle* trained = nullptr);

struct AccuracySummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for fewer than two runs
  std::size_t count = 0;
};
AccuracySummary summarize(const std::vector<SeedRun>& runs);

std::string metrics_csv(const TrainResult& result);
std::string iso_timestamp();

// Commands. Each writes its outputs under `out_dir` and returns the list of
// files written (relative to out_dir).
std::vector<std::string> cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                      const std::string& timestamp = iso_timestamp());
DatasetSplit load_split(const std::filesystem::path& data_dir, ShiftKind shift);
std::vector<std::string> cmd_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                   const std::filesystem::path& out_dir);
GcsReport cmd_gcs(const ExperimentConfig& config, const std::filesystem::path& set_a,
                  const std::filesystem::path& set_b, const std::filesystem::path& out_dir,
                  std::vector<std::string>* warnings = nullptr);
std::vector<std::string> cmd_visualize(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                       const std::filesystem::path& dataset, const std::vector<std::size_t>& indices,
                                       const std::filesystem::path& out_dir);
std::vector<std::string> cmd_ablate(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                    const std::filesystem::path& out_dir);

// Variants compared by cmd_ablate, in output order.
const std::vector<Method>& ablation_variants();

ADVCA_NS_END
}  // namespace advca

#include "advca/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "advca/dot.hpp"
#include "advca/errors.hpp"
#include "advca/io.hpp"

namespace advca {
ADVCA_NS_BEGIN

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_integer(const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw ArgumentError("expected an integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ArgumentError("expected a number, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ArgumentError("expected true or false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Empty field for quantities a method does not produce.
std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field size_field(T ExperimentConfig::*section, std::size_t T::*member) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*section).*member = parse_integer<std::size_t>(v); },
          [=](const ExperimentConfig& c) { return std::to_string((c.*section).*member); }};
}

template <class T, class R>
Field real_field(T ExperimentConfig::*section, R T::*member) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*section).*member = static_cast<R>(parse_double(v)); },
          [=](const ExperimentConfig& c) { return format_double(static_cast<double>((c.*section).*member)); }};
}

template <class T>
Field bool_field(T ExperimentConfig::*section, bool T::*member) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*section).*member = parse_bool(v); },
          [=](const ExperimentConfig& c) { return std::string((c.*section).*member ? "true" : "false"); }};
}

template <class T>
Field seed_field(T ExperimentConfig::*section, std::uint64_t T::*member) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*section).*member = parse_integer<std::uint64_t>(v); },
          [=](const ExperimentConfig& c) { return std::to_string((c.*section).*member); }};
}

// Every accepted key, in canonical order.
const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment.method",
       {[](C& c, const std::string& v) { c.method = parse_method(v); },
        [](const C& c) { return to_string(c.method); }}},
      {"experiment.num_seeds",
       {[](C& c, const std::string& v) { c.num_seeds = parse_integer<std::size_t>(v); },
        [](const C& c) { return std::to_string(c.num_seeds); }}},
      {"experiment.seed",
       {[](C& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); },
        [](const C& c) { return std::to_string(c.seed); }}},
      {"dataset.shift",
       {[](C& c, const std::string& v) { c.dataset.shift = parse_shift_kind(v); },
        [](const C& c) { return to_string(c.dataset.shift); }}},
      {"dataset.train_per_class", size_field(&C::dataset, &DatasetConfig::train_per_class)},
      {"dataset.eval_per_class", size_field(&C::dataset, &DatasetConfig::eval_per_class)},
      {"dataset.feature_dim", size_field(&C::dataset, &DatasetConfig::feature_dim)},
      {"dataset.seed", seed_field(&C::dataset, &DatasetConfig::seed)},
      {"dataset.min_base_nodes", size_field(&C::dataset, &DatasetConfig::min_base_nodes)},
      {"dataset.max_base_nodes", size_field(&C::dataset, &DatasetConfig::max_base_nodes)},
      {"model.backbone_layers", size_field(&C::model, &ModelConfig::backbone_layers)},
      {"model.backbone_hidden", size_field(&C::model, &ModelConfig::backbone_hidden)},
      {"model.mask_layers", size_field(&C::model, &ModelConfig::mask_layers)},
      {"model.mask_hidden", size_field(&C::model, &ModelConfig::mask_hidden)},
      {"train.adv_lr", real_field(&C::train, &TrainConfig::adv_lr)},
      {"train.lr", real_field(&C::train, &TrainConfig::lr)},
      {"train.gamma", real_field(&C::train, &TrainConfig::gamma)},
      {"train.causal_ratio", real_field(&C::train, &TrainConfig::causal_ratio)},
      {"train.adv_ratio", real_field(&C::train, &TrainConfig::adv_ratio)},
      {"train.threshold", real_field(&C::train, &TrainConfig::threshold)},
      {"train.epochs", size_field(&C::train, &TrainConfig::epochs)},
      {"train.batch_size", size_field(&C::train, &TrainConfig::batch_size)},
      {"train.adam", bool_field(&C::train, &TrainConfig::adam)},
      {"train.dropedge_p", real_field(&C::train, &TrainConfig::dropedge_p)},
      {"train.check_partition", bool_field(&C::train, &TrainConfig::check_partition)},
      {"gcs.num_samples", size_field(&C::gcs, &GcsConfig::num_samples)},
      {"gcs.epsilon", real_field(&C::gcs, &GcsConfig::epsilon)},
      {"gcs.feature_dim", size_field(&C::gcs, &GcsConfig::feature_dim)},
      {"gcs.domain_layers", size_field(&C::gcs, &GcsConfig::domain_layers)},
      {"gcs.domain_hidden", size_field(&C::gcs, &GcsConfig::domain_hidden)},
      {"gcs.domain_epochs", size_field(&C::gcs, &GcsConfig::domain_epochs)},
      {"gcs.domain_batch", size_field(&C::gcs, &GcsConfig::domain_batch)},
      {"gcs.domain_lr", real_field(&C::gcs, &GcsConfig::domain_lr)},
      {"gcs.seed", seed_field(&C::gcs, &GcsConfig::seed)},
  };
  return table;
}

ordered_json split_stats(const std::vector<Graph>& graphs, const std::string& file) {
  double nodes = 0.0;
  double edges = 0.0;
  std::set<std::string> envs;
  std::vector<std::size_t> per_class(kNumMotifClasses, 0);
  for (const auto& g : graphs) {
    nodes += static_cast<double>(g.num_nodes);
    edges += static_cast<double>(g.edges.size());
    envs.insert(g.env);
    if (g.label < per_class.size()) ++per_class[g.label];
  }
  const double n = graphs.empty() ? 1.0 : static_cast<double>(graphs.size());
  ordered_json j;
  j["file"] = file;
  j["graphs"] = graphs.size();
  j["avg_nodes"] = nodes / n;
  j["avg_edges"] = edges / n;
  j["envs"] = std::vector<std::string>(envs.begin(), envs.end());
  j["per_class"] = per_class;
  return j;
}

std::vector<std::uint64_t> run_seeds(const ExperimentConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < config.num_seeds; ++i) seeds.push_back(config.seed + i);
  return seeds;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_seeds == 0) throw ConfigError("experiment.num_seeds must be >= 1");
  if (dataset.train_per_class == 0 || dataset.eval_per_class == 0) throw ConfigError("dataset counts must be >= 1");
  if (dataset.feature_dim == 0) throw ConfigError("dataset.feature_dim must be >= 1");
  if (dataset.min_base_nodes < 4 || dataset.min_base_nodes > dataset.max_base_nodes) {
    throw ConfigError("dataset base size range must satisfy 4 <= min <= max");
  }
  if (model.feature_dim != dataset.feature_dim) throw ConfigError("model and dataset feature_dim differ");
  try {
    train.validate();
    gcs.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> index;
  for (const auto& [key, field] : fields()) index[key] = &field;
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    try {
      it->second->set(config, value);
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
  config.model.feature_dim = config.dataset.feature_dim;
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [key, field] : fields()) {
    const std::string s = key.substr(0, key.find('.'));
    if (!section.empty() && s != section) out += "\n";
    section = s;
    out += key + " = " + field.get(config) + "\n";
  }
  return out;
}

MotifConfig motif_config(const DatasetConfig& config) {
  MotifConfig m = config.shift == ShiftKind::base
                      ? base_shift_config(config.train_per_class, config.eval_per_class, config.seed)
                      : size_shift_config(config.train_per_class, config.eval_per_class, config.seed);
  m.feature_dim = config.feature_dim;
  if (config.shift == ShiftKind::base) {
    for (auto& env : m.envs) {
      env.min_base_nodes = config.min_base_nodes;
      env.max_base_nodes = config.max_base_nodes;
    }
  }
  return m;
}

SeedRun run_seed(const ExperimentConfig& config, const DatasetSplit& split, Method method, std::uint64_t seed,
                 ModelBundle* trained) {
  SeedRun run;
  run.seed = seed;
  ModelBundle bundle = ModelBundle::create(config.model, seed);
  TrainConfig tc = config.train;
  tc.seed = seed;
  try {
    run.result = train(bundle, split, tc, method);
    run.ok = true;
  } catch (const TrainingError& e) {
    run.error = e.what();
  }
  if (trained != nullptr) *trained = std::move(bundle);
  return run;
}

AccuracySummary summarize(const std::vector<SeedRun>& runs) {
  AccuracySummary s;
  std::vector<double> acc;
  for (const auto& r : runs) {
    if (r.ok) acc.push_back(r.result.test_accuracy);
  }
  s.count = acc.size();
  if (acc.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  for (double a : acc) s.mean += a;
  s.mean /= static_cast<double>(acc.size());
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - s.mean) * (a - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  return s;
}

std::string metrics_csv(const TrainResult& result) {
  std::string out =
      "epoch,split,loss,accuracy,L_adv,L_cau,L_reg1,L_reg2,mean_cau_mask_causal_nodes,mean_cau_mask_env_nodes\n";
  for (const auto& m : result.history) {
    out += std::to_string(m.epoch) + "," + m.split + "," + csv_number(m.loss) + "," + csv_number(m.accuracy) + "," +
           csv_number(m.adv_loss) + "," + csv_number(m.cau_loss) + "," + csv_number(m.reg1) + "," +
           csv_number(m.reg2) + "," + csv_number(m.mask_causal) + "," + csv_number(m.mask_env) + "\n";
  }
  return out;
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::vector<std::string> cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                      const std::string& timestamp) {
  config.validate();
  const std::vector<Graph> graphs = generate_motif_dataset(motif_config(config.dataset));
  const DatasetSplit split = split_covariate(graphs, config.dataset.shift);
  save_jsonl(split.train, out_dir / "train.jsonl");
  save_jsonl(split.val, out_dir / "val.jsonl");
  save_jsonl(split.test, out_dir / "test.jsonl");
  ordered_json manifest;
  manifest["generated_at"] = timestamp;
  manifest["shift"] = to_string(config.dataset.shift);
  manifest["seed"] = config.dataset.seed;
  manifest["feature_dim"] = config.dataset.feature_dim;
  manifest["splits"]["train"] = split_stats(split.train, "train.jsonl");
  manifest["splits"]["val"] = split_stats(split.val, "val.jsonl");
  manifest["splits"]["test"] = split_stats(split.test, "test.jsonl");
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return {"train.jsonl", "val.jsonl", "test.jsonl", "manifest.json"};
}

DatasetSplit load_split(const std::filesystem::path& data_dir, ShiftKind shift) {
  DatasetSplit split;
  split.shift_kind = shift;
  split.train = load_jsonl(data_dir / "train.jsonl");
  split.val = load_jsonl(data_dir / "val.jsonl");
  split.test = load_jsonl(data_dir / "test.jsonl");
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw DataError("dataset in " + data_dir.string() + " has an empty split");
  }
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto& g : *part) {
      if (g.feature_dim != split.train.front().feature_dim) throw DataError("feature widths differ across splits");
    }
  }
  return split;
}

std::vector<std::string> cmd_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                   const std::filesystem::path& out_dir) {
  config.validate();
  const DatasetSplit split = load_split(data_dir, config.dataset.shift);
  if (split.train.front().feature_dim != config.model.feature_dim) {
    throw DataError("dataset feature_dim " + std::to_string(split.train.front().feature_dim) +
                    " does not match config " + std::to_string(config.model.feature_dim));
  }
  std::vector<std::string> written;
  std::vector<SeedRun> runs;
  ordered_json per_seed = ordered_json::array();
  for (std::uint64_t seed : run_seeds(config)) {
    ModelBundle bundle;
    SeedRun run = run_seed(config, split, config.method, seed, &bundle);
    const std::string dir = "seed_" + std::to_string(seed);
    ordered_json entry;
    entry["seed"] = seed;
    if (run.ok) {
      save_checkpoint(bundle.all_params(), out_dir / dir / "model.ckpt");
      write_file_atomic(out_dir / dir / "metrics.csv", metrics_csv(run.result));
      written.push_back(dir + "/model.ckpt");
      written.push_back(dir + "/metrics.csv");
      entry["test_acc"] = run.result.test_accuracy;
      entry["best_val_acc"] = run.result.best_val_accuracy;
      entry["best_epoch"] = run.result.best_epoch;
    } else {
      entry["error"] = run.error;
    }
    per_seed.push_back(entry);
    runs.push_back(std::move(run));
  }
  const AccuracySummary s = summarize(runs);
  ordered_json summary;
  summary["method"] = to_string(config.method);
  summary["mean_test_acc"] = s.count > 0 ? ordered_json(s.mean) : ordered_json(nullptr);
  summary["std_test_acc"] = s.count > 0 ? ordered_json(s.std) : ordered_json(nullptr);
  summary["per_seed"] = per_seed;
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  written.push_back("summary.json");
  return written;
}

GcsReport cmd_gcs(const ExperimentConfig& config, const std::filesystem::path& set_a,
                  const std::filesystem::path& set_b, const std::filesystem::path& out_dir,
                  std::vector<std::string>* warnings) {
  config.validate();
  const auto a = load_jsonl(set_a);
  const auto b = load_jsonl(set_b);
  if (a.size() < 2 || b.size() < 2) throw DataError("each graph set needs at least 2 graphs");
  if (a.front().feature_dim != b.front().feature_dim) throw DataError("graph sets differ in feature width");
  const GcsReport report = graph_covariate_shift(make_inputs(a), make_inputs(b), config.gcs, warnings);
  write_file_atomic(out_dir / "gcs.json", report.to_json() + "\n");
  return report;
}

std::vector<std::string> cmd_visualize(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                       const std::filesystem::path& dataset, const std::vector<std::size_t>& indices,
                                       const std::filesystem::path& out_dir) {
  config.validate();
  const ModelBundle bundle = ModelBundle::create(config.model, 0);
  load_checkpoint(bundle.all_params(), checkpoint);
  const auto graphs = load_jsonl(dataset);
  for (std::size_t idx : indices) {
    if (idx >= graphs.size()) {
      throw ArgumentError("graph index " + std::to_string(idx) + " out of range (dataset has " +
                          std::to_string(graphs.size()) + " graphs)");
    }
  }
  std::vector<std::string> written;
  NoGradGuard no_grad;
  for (std::size_t idx : indices) {
    const Graph& g = graphs[idx];
    const MaskPair masks = bundle.generator.forward(make_input(g));
    const std::vector<double> node(masks.node.data().begin(), masks.node.data().end());
    std::vector<double> edge;
    if (masks.edge_values.defined()) edge.assign(masks.edge_values.data().begin(), masks.edge_values.data().end());
    const std::string name = "graph_" + std::to_string(idx);
    write_file_atomic(out_dir / (name + ".dot"), to_dot(g, node, edge, name));
    written.push_back(name + ".dot");
  }
  return written;
}

const std::vector<Method>& ablation_variants() {
  static const std::vector<Method> v = {Method::advca, Method::no_adv, Method::no_cau, Method::rdca, Method::erm};
  return v;
}

std::vector<std::string> cmd_ablate(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                    const std::filesystem::path& out_dir) {
  config.validate();
  const DatasetSplit split = load_split(data_dir, config.dataset.shift);
  std::string csv = "variant,mean_acc,std_acc\n";
  for (Method m : ablation_variants()) {
    std::vector<SeedRun> runs;
    for (std::uint64_t seed : run_seeds(config)) runs.push_back(run_seed(config, split, m, seed));
    const AccuracySummary s = summarize(runs);
    csv += to_string(m) + "," + csv_number(s.mean) + "," + csv_number(s.std) + "\n";
  }
  write_file_atomic(out_dir / "ablation.csv", csv);
  return {"ablation.csv"};
}

ADVCA_NS_END
}  // namespace advca

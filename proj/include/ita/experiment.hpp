#pragma once

// Experiment runner shared by the command-line tool and the acceptance
// suite: configuration, data generation and files, training under each
// ablation, evaluation and the metrics report.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ita/augment.hpp"
#include "ita/gridlang.hpp"
#include "ita/seqmodel.hpp"
#include "ita/toymol.hpp"

namespace ita::experiment {

inline constexpr std::string_view kCodeVersion = "ita-1.0.0";

enum class Domain { kToymol, kGridlang };
enum class Ablation { kBaseline, kTestOnly, kTrainOnly, kFull, kNoFilter, kDupe, kKeepTargets, kIdeal };

std::string_view to_string(Domain d);
std::string_view to_string(Setting s);
std::string_view to_string(Ablation a);
Domain domain_from_string(std::string_view s);
Setting setting_from_string(std::string_view s);
Ablation ablation_from_string(std::string_view s);
const std::vector<Ablation>& all_ablations();

/// Which property model the toymol filters use during training and
/// prediction. Evaluation always uses F0.
struct ProxyChoice {
  bool oracle = false;  // F0 itself (the zero-RMSE rung)
  toymol::DegradeKnob knob = toymol::DegradeKnob::kDropFeatures;
  std::optional<double> level;  // unset: the proxy fitted at data generation
};

struct ExperimentConfig {
  Domain domain = Domain::kToymol;
  Setting mode = Setting::kConditional;
  std::string task = "task-Q";
  SeqModelConfig model;
  AugmentConfig augment;  // Z and L here are the evaluation values
  Ablation ablation = Ablation::kFull;

  // Data sizes (toymol) and task counts (gridlang).
  std::size_t n_pairs = 2000;
  std::size_t n_unlabeled = 5000;
  std::size_t n_test = 1000;
  std::size_t n_tasks = 500;
  std::size_t n_test_tasks = 500;
  toymol::SynthesisOptions synthesis;
  gridlang::GridConfig grid;
  gridlang::ProgramConfig program;
  toymol::ProxyOptions proxy_fit;

  bool use_unlabeled = false;  // semi-supervised: augment the unlabeled pool too
  bool transductive = false;   // augment test inputs (never their answers)
  ProxyChoice proxy;
  std::size_t ideal_c = 2000;  // attempt budget of the ideal variant
  std::size_t n_uniqueness = 20000;
  std::uint64_t seed = 1;

  /// Defaults for a domain and mode (schedule, K/C, model order).
  static ExperimentConfig defaults(Domain domain, Setting mode);
  void validate() const;

  /// Unknown keys are rejected. Missing keys take the domain/mode defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Full echo; execution-only settings (worker count) are left out so that
  /// reports do not depend on them.
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Data

struct ExperimentData {
  Domain domain = Domain::kToymol;
  Setting mode = Setting::kConditional;
  // toymol
  Dataset<TokenSeq> mol_train;  // conditional: pairs; unconditional: targets with empty source
  std::vector<TokenSeq> mol_test;
  toymol::ProxyPredictor proxy;
  std::vector<toymol::LabeledMolecule> proxy_training;  // what the proxy was fitted on
  // gridlang
  std::vector<gridlang::Task> grid_train;
  std::vector<gridlang::Task> grid_test;
  std::vector<gridlang::GivenSpec> grid_unlabeled;
};

ExperimentData generate_data(const ExperimentConfig& cfg);

/// Writes JSONL data files and manifest.json into `dir` (created if needed).
void write_data(const ExperimentData& data, const ExperimentConfig& cfg,
                const std::filesystem::path& dir);
ExperimentData read_data(const ExperimentConfig& cfg, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Training and evaluation

struct TrainResult {
  SeqModel model;
  std::vector<EpochStats> epochs;
  double proxy_rmse = 0.0;  // of the property model used in the filter (0 for F0)
  std::size_t k_prime = 0;  // ideal variant only
};

struct Metrics {
  std::optional<double> success;
  std::optional<double> diversity;
  std::optional<double> uniqueness;
  std::optional<double> top1;
};

struct MetricsReport {
  std::vector<EpochStats> epochs;
  Metrics metrics;
  double proxy_rmse = 0.0;
  nlohmann::json config;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  /// Fractions outside [0, 1] (a contract violation).
  std::vector<std::string> violations() const;
};

struct RunOptions {
  unsigned workers = 1;
  std::function<void(const EpochStats&)> on_epoch;
};

TrainResult train(const ExperimentConfig& cfg, const ExperimentData& data, const RunOptions& opts = {});
Metrics evaluate(const ExperimentConfig& cfg, const ExperimentData& data, const SeqModel& model,
                 const RunOptions& opts = {});
/// train + evaluate on already generated data.
MetricsReport run(const ExperimentConfig& cfg, const ExperimentData& data, const RunOptions& opts = {});

/// Conditioning feature used for a domain and mode.
std::uint32_t mol_feature(Setting mode, const TokenSeq& x);

void write_epochs_csv(std::ostream& out, const std::vector<EpochStats>& epochs);

}  // namespace ita::experiment

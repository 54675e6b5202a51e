#pragma once

// Molecule-analog string domain over {A, B, C, (, )}: a validity grammar,
// bigram fingerprints with Tanimoto similarity, a computable ground-truth
// property, a ridge-regression proxy for it, and the three-part target filter.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ita/augment.hpp"
#include "ita/rng.hpp"
#include "ita/tokens.hpp"

namespace ita::toymol {

inline constexpr Token kA = 0, kB = 1, kC = 2, kOpen = 3, kClose = 4;

const Alphabet& alphabet();
TokenSeq parse(std::string_view text);
std::string to_string(const TokenSeq& s);

struct ValidityLimits {
  int max_depth = 4;
  std::size_t max_len = 40;
};

bool is_valid(const TokenSeq& s, const ValidityLimits& limits = {});
int max_depth(const TokenSeq& s);

/// Set of boundary-padded character bigrams ("^A", "AB", "B$", ...) packed
/// into a 7x7 bit matrix.
using Fingerprint = std::uint64_t;
inline constexpr std::size_t kFingerprintBits = 49;

Fingerprint fingerprint(const TokenSeq& s);
double tanimoto(Fingerprint a, Fingerprint b);
/// Throws std::invalid_argument unless both strings are valid.
double tanimoto(const TokenSeq& a, const TokenSeq& b);
std::string bigram_name(std::size_t bit);

/// Ground-truth property: depth-weighted share of 'A' among letters, each
/// letter weighted by (1 + nesting depth). Throws on invalid input.
double f0(const TokenSeq& s);

struct TaskSpec {
  std::string name;
  double alpha = 0.8;  // source property ceiling
  double beta = 0.9;   // target property floor
  double delta = 0.4;  // similarity floor

  void validate() const;
  static TaskSpec qed_analog() { return {"task-Q", 0.8, 0.9, 0.4}; }
  static TaskSpec drd2_analog() { return {"task-D", 0.05, 0.5, 0.4}; }
  static TaskSpec by_name(std::string_view name);
};

struct LabeledMolecule {
  TokenSeq mol;
  double label;
};

// ---------------------------------------------------------------------------
// Proxy property predictor

struct ProxyOptions {
  double ridge_lambda = 1e-3;
  double holdout_fraction = 0.2;
  // Degradation knobs (identity when all zero / one).
  double label_noise = 0.0;       // std-dev of Gaussian noise on training labels
  double subsample = 1.0;         // fraction of training rows kept
  double drop_features = 0.0;     // fraction of features removed
};

/// Ridge model over fingerprint-bit indicators plus a length feature and a
/// bias; predictions are clamped to [0, 1].
class ProxyPredictor {
 public:
  static constexpr std::size_t kNumFeatures = kFingerprintBits + 1;

  ProxyPredictor() = default;
  ProxyPredictor(std::vector<double> weights, double bias, std::vector<bool> active,
                 double lambda, double rmse);

  double predict(const TokenSeq& s) const;
  static std::vector<double> features(const TokenSeq& s);

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  double lambda() const { return lambda_; }
  double heldout_rmse() const { return rmse_; }

  void save(std::ostream& out) const;
  static ProxyPredictor load(std::istream& in);

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<bool> active_;
  double lambda_ = 0.0;
  double rmse_ = 0.0;
};

ProxyPredictor fit_proxy(const std::vector<LabeledMolecule>& molecules, const ProxyOptions& opts,
                         SeedStream seed);

enum class DegradeKnob { kLabelNoise, kSubsample, kDropFeatures };
DegradeKnob degrade_knob_from_string(std::string_view s);
std::string_view to_string(DegradeKnob k);

struct ProxyRung {
  double level = 0.0;
  ProxyPredictor predictor;
  double rmse = 0.0;
};

/// One predictor per knob level, all fitted with the same seed so rungs
/// differ only by the knob.
std::vector<ProxyRung> degrade_proxy(const std::vector<LabeledMolecule>& molecules,
                                     const ProxyOptions& base, DegradeKnob knob,
                                     const std::vector<double>& levels, SeedStream seed);

/// Property evaluator used inside a filter: F0 itself or a proxy.
class PropertyModel {
 public:
  PropertyModel() = default;  // ground truth
  explicit PropertyModel(std::shared_ptr<const ProxyPredictor> proxy) : proxy_(std::move(proxy)) {}
  static PropertyModel ground_truth() { return {}; }

  double operator()(const TokenSeq& s) const { return proxy_ ? proxy_->predict(s) : f0(s); }
  bool is_ground_truth() const { return proxy_ == nullptr; }

 private:
  std::shared_ptr<const ProxyPredictor> proxy_;
};

/// c(X, Y) = valid(Y) && sim(X, Y) >= delta && property(Y) >= beta.
class MolFilter final : public TargetFilter<TokenSeq> {
 public:
  MolFilter(TaskSpec task, PropertyModel property, ValidityLimits limits = {})
      : task_(std::move(task)), property_(std::move(property)), limits_(limits) {}
  FilterVerdict check(const TokenSeq& source, const TokenSeq& target) const override;

 private:
  TaskSpec task_;
  PropertyModel property_;
  ValidityLimits limits_;
};

/// Unconditional variant: valid(Y) && property(Y) >= beta; the source is ignored.
class PropertyFilter final : public TargetFilter<TokenSeq> {
 public:
  PropertyFilter(double beta, PropertyModel property, ValidityLimits limits = {})
      : beta_(beta), property_(std::move(property)), limits_(limits) {}
  FilterVerdict check(const TokenSeq& source, const TokenSeq& target) const override;

 private:
  double beta_;
  PropertyModel property_;
  ValidityLimits limits_;
};

// ---------------------------------------------------------------------------
// Dataset synthesis

struct SynthesisOptions {
  std::size_t min_len = 6;
  std::size_t max_len = 14;
  double p_open = 0.12;     // chance to open a paren group at each step
  double p_close = 0.35;    // chance to close an open group at each step
  double p_letter_a = 0.6;  // letter distribution for sources; B and C split the rest
  std::size_t max_edits = 4;
  std::size_t edit_attempts = 200;   // per source before it is resampled
  std::size_t global_attempts = 200000;
  ValidityLimits limits;
};

TokenSeq random_molecule(Rng& rng, const SynthesisOptions& opts);

struct MolData {
  Dataset<TokenSeq> train;  // gold pairs + unlabeled pool
  std::vector<TokenSeq> test_sources;
};

/// Sources have f0 <= alpha; each target is a random local edit of its source
/// that satisfies the task filter under f0. Deterministic in `seed`.
MolData synthesize_dataset(const TaskSpec& task, std::size_t n_pairs, std::size_t n_unlabeled,
                           std::size_t n_test, const SynthesisOptions& opts, SeedStream seed);

/// Unconditional training set: distinct valid molecules with f0 >= beta.
std::vector<TokenSeq> synthesize_targets(double beta, std::size_t n, const SynthesisOptions& opts,
                                         SeedStream seed);

// ---------------------------------------------------------------------------
// Conditioning

/// Small discrete code of a source: paren presence and group count, which of
/// B/C occur, how many non-A letters, the share of A among letters, and a
/// length bucket. Uses only the string, never F0.
std::uint32_t featurize(const TokenSeq& source);
inline constexpr std::uint32_t kNumFeatures = 1u << 11;

}  // namespace ita::toymol

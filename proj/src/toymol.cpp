#include "ita/toymol.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace ita::toymol {

namespace {

constexpr int kCaret = 5;   // '^' in fingerprints
constexpr int kDollar = 6;  // '$'
constexpr int kFormatVersion = 1;

bool is_letter(Token t) { return t <= kC; }

Fingerprint bigram_bit(int a, int b) { return Fingerprint{1} << (a * 7 + b); }

}  // namespace

const Alphabet& alphabet() {
  static const Alphabet a({"A", "B", "C", "(", ")"});
  return a;
}

TokenSeq parse(std::string_view text) { return alphabet().encode_chars(text); }

std::string to_string(const TokenSeq& s) { return alphabet().decode_chars(s); }

bool is_valid(const TokenSeq& s, const ValidityLimits& limits) {
  if (s.empty() || s.size() > limits.max_len) return false;
  int depth = 0;
  bool letter = false;
  for (Token t : s) {
    if (t == kOpen) {
      if (++depth > limits.max_depth) return false;
    } else if (t == kClose) {
      if (--depth < 0) return false;
    } else if (is_letter(t)) {
      letter = true;
    } else {
      return false;
    }
  }
  return depth == 0 && letter;
}

int max_depth(const TokenSeq& s) {
  int depth = 0, deepest = 0;
  for (Token t : s) {
    if (t == kOpen) deepest = std::max(deepest, ++depth);
    else if (t == kClose) --depth;
  }
  return deepest;
}

Fingerprint fingerprint(const TokenSeq& s) {
  Fingerprint fp = 0;
  int prev = kCaret;
  for (Token t : s) {
    fp |= bigram_bit(prev, t);
    prev = t;
  }
  fp |= bigram_bit(prev, kDollar);
  return fp;
}

double tanimoto(Fingerprint a, Fingerprint b) {
  const int uni = std::popcount(a | b);
  if (uni == 0) return 1.0;
  return static_cast<double>(std::popcount(a & b)) / static_cast<double>(uni);
}

double tanimoto(const TokenSeq& a, const TokenSeq& b) {
  if (!is_valid(a) || !is_valid(b))
    throw std::invalid_argument("tanimoto: both molecules must be valid");
  return tanimoto(fingerprint(a), fingerprint(b));
}

std::string bigram_name(std::size_t bit) {
  static const char* chars = "ABC()^$";
  return {chars[bit / 7], chars[bit % 7]};
}

double f0(const TokenSeq& s) {
  if (!is_valid(s)) throw std::invalid_argument("f0: invalid molecule '" + to_string(s) + "'");
  double a_weight = 0.0, total = 0.0;
  int depth = 0;
  for (Token t : s) {
    if (t == kOpen) ++depth;
    else if (t == kClose) --depth;
    else {
      const double w = 1.0 + depth;
      total += w;
      if (t == kA) a_weight += w;
    }
  }
  return total > 0.0 ? a_weight / total : 0.0;
}

void TaskSpec::validate() const {
  if (!(0.0 <= alpha && alpha < beta && beta <= 1.0))
    throw std::invalid_argument("TaskSpec: need 0 <= alpha < beta <= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("TaskSpec: need 0 < delta <= 1");
}

TaskSpec TaskSpec::by_name(std::string_view name) {
  if (name == "task-Q" || name == "qed") return qed_analog();
  if (name == "task-D" || name == "drd2") return drd2_analog();
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

ProxyPredictor::ProxyPredictor(std::vector<double> weights, double bias, std::vector<bool> active,
                               double lambda, double rmse)
    : weights_(std::move(weights)), bias_(bias), active_(std::move(active)), lambda_(lambda),
      rmse_(rmse) {
  if (weights_.size() != kNumFeatures || active_.size() != kNumFeatures)
    throw std::invalid_argument("ProxyPredictor: wrong feature count");
}

std::vector<double> ProxyPredictor::features(const TokenSeq& s) {
  std::vector<double> x(kNumFeatures, 0.0);
  Fingerprint fp = fingerprint(s);
  for (std::size_t b = 0; b < kFingerprintBits; ++b)
    if (fp >> b & 1) x[b] = 1.0;
  x[kFingerprintBits] = static_cast<double>(s.size()) / 40.0;
  return x;
}

double ProxyPredictor::predict(const TokenSeq& s) const {
  double y = bias_;
  Fingerprint fp = fingerprint(s);
  while (fp) {
    int b = std::countr_zero(fp);
    y += weights_[static_cast<std::size_t>(b)];
    fp &= fp - 1;
  }
  y += weights_[kFingerprintBits] * static_cast<double>(s.size()) / 40.0;
  return std::clamp(y, 0.0, 1.0);
}

void ProxyPredictor::save(std::ostream& out) const {
  nlohmann::json j;
  j["format"] = "ita-proxy";
  j["version"] = kFormatVersion;
  j["weights"] = weights_;
  j["bias"] = bias_;
  std::vector<int> active(active_.begin(), active_.end());
  j["active"] = active;
  j["ridge_lambda"] = lambda_;
  j["heldout_rmse"] = rmse_;
  out << j.dump() << '\n';
}

ProxyPredictor ProxyPredictor::load(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "ita-proxy" || j.value("version", 0) != kFormatVersion)
    throw std::runtime_error("not an ita-proxy v1 record");
  auto active = j.at("active").get<std::vector<int>>();
  if (j.at("weights").empty() && active.empty()) return ProxyPredictor();  // unfitted
  return ProxyPredictor(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(),
                        std::vector<bool>(active.begin(), active.end()),
                        j.at("ridge_lambda").get<double>(), j.at("heldout_rmse").get<double>());
}

ProxyPredictor fit_proxy(const std::vector<LabeledMolecule>& molecules, const ProxyOptions& opts,
                         SeedStream seed) {
  std::unordered_set<TokenSeq, TokenSeqHash> distinct;
  for (const auto& m : molecules) distinct.insert(m.mol);
  if (distinct.size() < 2) throw std::invalid_argument("fit_proxy: need >= 2 distinct molecules");
  if (!(opts.ridge_lambda > 0.0)) throw std::invalid_argument("fit_proxy: ridge_lambda must be > 0");

  // Split and knob randomness use separate substreams so that turning one
  // knob leaves the others' draws untouched.
  std::vector<std::size_t> order(molecules.size());
  std::iota(order.begin(), order.end(), 0);
  {
    Rng rng = seed.child(1).rng();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  auto n_hold = static_cast<std::size_t>(std::floor(opts.holdout_fraction * molecules.size()));
  n_hold = std::min(n_hold, molecules.size() - 1);
  std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<long>(n_hold));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_hold), order.end());

  if (opts.subsample < 1.0) {
    auto keep = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::round(opts.subsample * static_cast<double>(train.size()))));
    train.resize(std::min(keep, train.size()));
  }

  std::vector<bool> active(ProxyPredictor::kNumFeatures, true);
  if (opts.drop_features > 0.0) {
    std::vector<std::size_t> idx(ProxyPredictor::kNumFeatures);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = seed.child(2).rng();
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    auto drop = static_cast<std::size_t>(std::round(opts.drop_features * idx.size()));
    for (std::size_t i = 0; i < std::min(drop, idx.size()); ++i) active[idx[i]] = false;
  }

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto d = static_cast<Eigen::Index>(ProxyPredictor::kNumFeatures);
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  Rng noise = seed.child(3).rng();
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& m = molecules[train[static_cast<std::size_t>(r)]];
    auto f = ProxyPredictor::features(m.mol);
    for (Eigen::Index c = 0; c < d; ++c) X(r, c) = active[static_cast<std::size_t>(c)] ? f[static_cast<std::size_t>(c)] : 0.0;
    const double eps = normal01(noise);
    y(r) = m.label + opts.label_noise * eps;
  }
  Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += opts.ridge_lambda * static_cast<double>(n);
  Eigen::VectorXd w = A.ldlt().solve(Xc.transpose() * yc);
  const double bias = y_mean - x_mean.dot(w);

  std::vector<double> weights(w.data(), w.data() + w.size());
  ProxyPredictor model(weights, bias, active, opts.ridge_lambda, 0.0);
  const auto& eval = hold.empty() ? train : hold;
  double se = 0.0;
  for (std::size_t i : eval) {
    const double e = model.predict(molecules[i].mol) - molecules[i].label;
    se += e * e;
  }
  const double rmse = std::sqrt(se / static_cast<double>(eval.size()));
  return ProxyPredictor(std::move(weights), bias, std::move(active), opts.ridge_lambda, rmse);
}

DegradeKnob degrade_knob_from_string(std::string_view s) {
  if (s == "label_noise") return DegradeKnob::kLabelNoise;
  if (s == "subsample") return DegradeKnob::kSubsample;
  if (s == "drop_features") return DegradeKnob::kDropFeatures;
  throw std::invalid_argument("unknown degrade knob '" + std::string(s) + "'");
}

std::string_view to_string(DegradeKnob k) {
  switch (k) {
    case DegradeKnob::kLabelNoise: return "label_noise";
    case DegradeKnob::kSubsample: return "subsample";
    case DegradeKnob::kDropFeatures: return "drop_features";
  }
  return "?";
}

std::vector<ProxyRung> degrade_proxy(const std::vector<LabeledMolecule>& molecules,
                                     const ProxyOptions& base, DegradeKnob knob,
                                     const std::vector<double>& levels, SeedStream seed) {
  std::vector<ProxyRung> rungs;
  for (double level : levels) {
    ProxyOptions o = base;
    switch (knob) {
      case DegradeKnob::kLabelNoise: o.label_noise = level; break;
      case DegradeKnob::kSubsample: o.subsample = level; break;
      case DegradeKnob::kDropFeatures: o.drop_features = level; break;
    }
    auto p = fit_proxy(molecules, o, seed);
    rungs.push_back({level, p, p.heldout_rmse()});
  }
  return rungs;
}

// ---------------------------------------------------------------------------

FilterVerdict MolFilter::check(const TokenSeq& source, const TokenSeq& target) const {
  if (!is_valid(target, limits_)) return FilterVerdict::conjunction({{"validity", false, 0.0}});
  const double sim = tanimoto(fingerprint(source), fingerprint(target));
  const double prop = property_(target);
  return FilterVerdict::conjunction({{"validity", true, 1.0},
                                     {"similarity", sim >= task_.delta, sim},
                                     {"property", prop >= task_.beta, prop}});
}

FilterVerdict PropertyFilter::check(const TokenSeq&, const TokenSeq& target) const {
  if (!is_valid(target, limits_)) return FilterVerdict::conjunction({{"validity", false, 0.0}});
  const double prop = property_(target);
  return FilterVerdict::conjunction({{"validity", true, 1.0}, {"property", prop >= beta_, prop}});
}

// ---------------------------------------------------------------------------

TokenSeq random_molecule(Rng& rng, const SynthesisOptions& opts) {
  const std::size_t span = opts.max_len - opts.min_len + 1;
  const std::size_t target_len = opts.min_len + uniform_index(rng, span);
  const int max_depth = opts.limits.max_depth;
  TokenSeq s;
  int depth = 0;
  bool just_opened = false;
  auto letter = [&] {
    double u = uniform01(rng);
    if (u < opts.p_letter_a) return kA;
    return u < opts.p_letter_a + (1.0 - opts.p_letter_a) / 2 ? kB : kC;
  };
  while (s.size() + static_cast<std::size_t>(depth) < target_len) {
    const std::size_t room = target_len - s.size() - static_cast<std::size_t>(depth);
    if (!just_opened && depth < max_depth && room >= 3 && bernoulli(rng, opts.p_open)) {
      s.push_back(kOpen);
      ++depth;
      just_opened = true;
    } else if (!just_opened && depth > 0 && bernoulli(rng, opts.p_close)) {
      s.push_back(kClose);
      --depth;
    } else {
      s.push_back(letter());
      just_opened = false;
    }
  }
  while (depth-- > 0) s.push_back(kClose);
  return s;
}

namespace {

std::vector<std::size_t> letter_positions(const TokenSeq& s) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (is_letter(s[i])) pos.push_back(i);
  return pos;
}

Token edit_letter(Rng& rng) {
  if (bernoulli(rng, 0.8)) return kA;
  return static_cast<Token>(uniform_index(rng, 3));
}

// One random local edit; returns false when the edit does not apply.
bool apply_edit(TokenSeq& s, Rng& rng) {
  switch (uniform_index(rng, 4)) {
    case 0: {  // substitute a letter
      auto pos = letter_positions(s);
      if (pos.empty()) return false;
      s[pos[uniform_index(rng, pos.size())]] = edit_letter(rng);
      return true;
    }
    case 1: {  // wrap a balanced span in parentheses
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == kClose) continue;
        int depth = 0;
        bool letter = false;
        for (std::size_t j = i; j < s.size(); ++j) {
          if (s[j] == kOpen) ++depth;
          else if (s[j] == kClose && --depth < 0) break;
          letter = letter || is_letter(s[j]);
          if (depth == 0 && letter) spans.emplace_back(i, j);
        }
      }
      if (spans.empty()) return false;
      auto [i, j] = spans[uniform_index(rng, spans.size())];
      s.insert(s.begin() + static_cast<long>(j) + 1, kClose);
      s.insert(s.begin() + static_cast<long>(i), kOpen);
      return true;
    }
    case 2: {  // insert a letter
      s.insert(s.begin() + static_cast<long>(uniform_index(rng, s.size() + 1)), edit_letter(rng));
      return true;
    }
    default: {  // delete a letter
      auto pos = letter_positions(s);
      if (pos.size() < 2) return false;
      s.erase(s.begin() + static_cast<long>(pos[uniform_index(rng, pos.size())]));
      return true;
    }
  }
}

std::optional<TokenSeq> edit_to_target(const TokenSeq& x, const TaskSpec& task,
                                       const SynthesisOptions& opts, Rng& rng) {
  const Fingerprint fx = fingerprint(x);
  for (std::size_t attempt = 0; attempt < opts.edit_attempts; ++attempt) {
    TokenSeq y = x;
    const std::size_t edits = 1 + uniform_index(rng, opts.max_edits);
    for (std::size_t e = 0; e < edits; ++e) apply_edit(y, rng);
    if (y == x || !is_valid(y, opts.limits)) continue;
    if (f0(y) >= task.beta && tanimoto(fx, fingerprint(y)) >= task.delta) return y;
  }
  return std::nullopt;
}

struct PairSampler {
  const TaskSpec& task;
  const SynthesisOptions& opts;
  std::size_t draws = 0;
  std::size_t rejected_sources = 0;
  std::size_t failed_edits = 0;

  TokenSeq source(Rng& rng) {
    for (;;) {
      if (++draws > opts.global_attempts)
        throw std::runtime_error(
            "synthesize_dataset: global budget exhausted after " + std::to_string(draws - 1) +
            " source draws (" + std::to_string(rejected_sources) + " above alpha, " +
            std::to_string(failed_edits) + " with no reachable target)");
      TokenSeq x = random_molecule(rng, opts);
      if (is_valid(x, opts.limits) && f0(x) <= task.alpha) return x;
      ++rejected_sources;
    }
  }

  std::pair<TokenSeq, TokenSeq> pair(Rng& rng) {
    for (;;) {
      TokenSeq x = source(rng);
      if (auto y = edit_to_target(x, task, opts, rng)) return {std::move(x), std::move(*y)};
      ++failed_edits;
    }
  }
};

}  // namespace

MolData synthesize_dataset(const TaskSpec& task, std::size_t n_pairs, std::size_t n_unlabeled,
                           std::size_t n_test, const SynthesisOptions& opts, SeedStream seed) {
  task.validate();
  PairSampler sampler{task, opts};
  MolData out;
  std::vector<std::pair<TokenSeq, TokenSeq>> labeled;
  {
    Rng rng = seed.child(1).rng();
    for (std::size_t i = 0; i < n_pairs; ++i) labeled.push_back(sampler.pair(rng));
  }
  std::vector<TokenSeq> unlabeled;
  {
    Rng rng = seed.child(2).rng();
    for (std::size_t i = 0; i < n_unlabeled; ++i) unlabeled.push_back(sampler.source(rng));
  }
  {
    // Test sources come from the pair distribution; their targets are dropped.
    Rng rng = seed.child(3).rng();
    for (std::size_t i = 0; i < n_test; ++i) out.test_sources.push_back(sampler.pair(rng).first);
  }
  out.train = make_dataset(std::move(labeled), std::move(unlabeled));
  return out;
}

std::vector<TokenSeq> synthesize_targets(double beta, std::size_t n, const SynthesisOptions& opts,
                                         SeedStream seed) {
  TaskSpec task{"unconditional", std::min(0.8, beta - 1e-9), beta, 0.4};
  task.validate();
  PairSampler sampler{task, opts};
  Rng rng = seed.child(4).rng();
  std::vector<TokenSeq> out;
  std::unordered_set<TokenSeq, TokenSeqHash> seen;
  while (out.size() < n) {
    auto [x, y] = sampler.pair(rng);
    if (seen.insert(y).second) out.push_back(std::move(y));
  }
  return out;
}

std::uint32_t featurize(const TokenSeq& source) {
  bool parens = false, has_b = false, has_c = false;
  int letters = 0, non_a = 0, groups = 0;
  for (Token t : source) {
    parens = parens || t == kOpen;
    has_b = has_b || t == kB;
    has_c = has_c || t == kC;
    groups += t == kOpen;
    letters += t == kA || t == kB || t == kC;
    non_a += t == kB || t == kC;
  }
  const std::size_t n = source.size();
  const std::uint32_t len_bucket = n <= 7 ? 0 : n <= 10 ? 1 : n <= 13 ? 2 : 3;
  const std::uint32_t non_a_bucket = non_a <= 1 ? 0 : non_a <= 3 ? static_cast<std::uint32_t>(non_a - 1) : 3;
  const double share = letters ? static_cast<double>(letters - non_a) / letters : 0.0;
  const std::uint32_t share_bucket = std::min<std::uint32_t>(3, static_cast<std::uint32_t>(share / 0.2));
  const std::uint32_t group_bucket = static_cast<std::uint32_t>(std::min(groups, 2));
  return (parens ? 1u : 0u) | (has_b ? 2u : 0u) | (has_c ? 4u : 0u) | (len_bucket << 3) |
         (non_a_bucket << 5) | (share_bucket << 7) | (group_bucket << 9);
}

}  // namespace ita::toymol

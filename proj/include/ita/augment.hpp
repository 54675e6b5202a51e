#pragma once

// Iterative target augmentation: bootstrap a generator on gold pairs, then
// repeatedly sample candidate targets, keep the ones an external filter
// accepts, and refit on the expanded dataset.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ita/parallel.hpp"
#include "ita/rng.hpp"
#include "ita/seqmodel.hpp"
#include "ita/tokens.hpp"

namespace ita {

enum class Origin : std::uint8_t { kGold, kAugmented, kPadded };

constexpr std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::kGold: return "gold";
    case Origin::kAugmented: return "augmented";
    case Origin::kPadded: return "padded";
  }
  return "?";
}

template <class Input>
struct Pair {
  Input source;
  TokenSeq target;
  Origin origin = Origin::kGold;
  // Identifies the source across epochs: position of the gold pair for
  // labeled sources, (#gold + position) for unlabeled ones.
  std::uint32_t source_index = 0;
};

template <class Input>
struct Dataset {
  std::vector<Pair<Input>> pairs;
  std::vector<Input> unlabeled;  // sources without targets

  std::size_t num_gold() const {
    return static_cast<std::size_t>(std::count_if(
        pairs.begin(), pairs.end(), [](const auto& p) { return p.origin == Origin::kGold; }));
  }
};

/// Builds a gold-only dataset with source_index set to the pair position.
template <class Input>
Dataset<Input> make_dataset(std::vector<std::pair<Input, TokenSeq>> labeled,
                            std::vector<Input> unlabeled = {}) {
  Dataset<Input> d;
  d.pairs.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i)
    d.pairs.push_back({std::move(labeled[i].first), std::move(labeled[i].second), Origin::kGold,
                       static_cast<std::uint32_t>(i)});
  d.unlabeled = std::move(unlabeled);
  return d;
}

enum class Setting { kConditional, kUnconditional };

struct AugmentConfig {
  std::size_t K = 4;   // max accepted new targets per input
  std::size_t C = 200; // max sampling attempts per input
  std::size_t L = 10;  // prediction-time attempts
  std::size_t Z = 20;  // outputs proposed per test input
  std::size_t n1 = 5;  // bootstrap epochs
  std::size_t n2 = 10; // augmentation epochs
  bool dedupe = true;
  bool pad_with_gold = true;
  bool keep_targets_across_epochs = false;
  bool keep_gold_after_bootstrap = true;
  Setting setting = Setting::kConditional;
  // Fraction of labeled sources augmented per epoch (rotating shards). The
  // rest contribute their gold pair padded to K+1 copies.
  double shard_fraction = 1.0;
  // Thread count. Results never depend on it.
  unsigned workers = 1;

  void validate() const {
    if (K < 1 || K > C) throw std::invalid_argument("AugmentConfig: need 1 <= K <= C");
    if (L < 1) throw std::invalid_argument("AugmentConfig: need L >= 1");
    if (Z < 1) throw std::invalid_argument("AugmentConfig: need Z >= 1");
    if (!(shard_fraction > 0.0 && shard_fraction <= 1.0))
      throw std::invalid_argument("AugmentConfig: shard_fraction must be in (0, 1]");
  }

  static AugmentConfig string_defaults() { return {}; }

  static AugmentConfig program_defaults() {
    AugmentConfig c;
    c.C = 50;
    c.n1 = 15;
    c.n2 = 50;
    return c;
  }

  static AugmentConfig unconditional_defaults() {
    AugmentConfig c;
    c.setting = Setting::kUnconditional;
    c.n1 = 1;
    c.n2 = 50;
    c.keep_gold_after_bootstrap = false;
    c.pad_with_gold = false;
    return c;
  }
};

struct SubCheck {
  std::string_view name;  // static storage
  bool pass = false;
  double value = 0.0;
};

struct FilterVerdict {
  bool pass = false;
  std::vector<SubCheck> checks;

  static FilterVerdict conjunction(std::vector<SubCheck> checks) {
    FilterVerdict v;
    v.pass = std::all_of(checks.begin(), checks.end(), [](const SubCheck& c) { return c.pass; });
    v.checks = std::move(checks);
    return v;
  }

  const SubCheck* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// The binary constraint c(X, Y). Implementations must be deterministic and
/// safe to call concurrently.
template <class Input>
class TargetFilter {
 public:
  virtual ~TargetFilter() = default;
  virtual FilterVerdict check(const Input& source, const TokenSeq& target) const = 0;
};

template <class Input>
class AcceptAllFilter final : public TargetFilter<Input> {
 public:
  FilterVerdict check(const Input&, const TokenSeq&) const override {
    return FilterVerdict::conjunction({{"accept_all", true, 1.0}});
  }
};

template <class Input>
class FunctionFilter final : public TargetFilter<Input> {
 public:
  explicit FunctionFilter(std::function<bool(const Input&, const TokenSeq&)> fn)
      : fn_(std::move(fn)) {}
  FilterVerdict check(const Input& x, const TokenSeq& y) const override {
    bool ok = fn_(x, y);
    return FilterVerdict::conjunction({{"predicate", ok, ok ? 1.0 : 0.0}});
  }

 private:
  std::function<bool(const Input&, const TokenSeq&)> fn_;
};

template <class G, class Input>
concept Generator = requires(const G& cg, G& g, const Input& x, Rng& rng,
                             std::span<const Pair<Input>> data) {
  { cg.sample(x, rng) } -> std::convertible_to<Sample>;
  g.fit(data);
};

template <class G, class Input>
concept ScoringGenerator = Generator<G, Input> && requires(const G& g, const Input& x,
                                                           const TokenSeq& y) {
  { g.log_prob(x, y) } -> std::convertible_to<double>;
};

enum class Phase : std::uint8_t { kBootstrap, kAugment, kIdeal };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kBootstrap: return "bootstrap";
    case Phase::kAugment: return "augment";
    case Phase::kIdeal: return "ideal";
  }
  return "?";
}

struct EpochStats {
  std::size_t epoch = 0;
  Phase phase = Phase::kAugment;
  std::size_t candidates_sampled = 0;
  std::size_t candidates_passing = 0;  // filter passes, duplicates included
  std::size_t candidates_accepted = 0;
  std::size_t pads_added = 0;
  std::size_t sources_short = 0;  // sources that found fewer than K targets
  std::size_t dataset_size = 0;
  double pass_rate = 0.0;  // accepted / sampled
  double train_log_likelihood = 0.0;  // mean log P(target | source) after refit
  bool cold_start = false;  // augmentation ran without any bootstrap epoch
  // Distinct (source, target) augmented pairs seen so far in the run.
  std::size_t cumulative_distinct = 0;
};

/// Per-source outcome of one augmentation round.
template <class Input>
struct SourceAugment {
  std::vector<Pair<Input>> pairs;
  std::size_t sampled = 0;
  std::size_t passing = 0;
  std::size_t accepted = 0;
  std::size_t pads = 0;
};

namespace detail {

template <class Input>
FilterVerdict checked(const TargetFilter<Input>& filter, const Input& x, const TokenSeq& y,
                      std::size_t index) {
  try {
    return filter.check(x, y);
  } catch (const std::exception& e) {
    throw std::runtime_error("target filter failed on input " + std::to_string(index) + ": " +
                             e.what());
  }
}

// Samples for one source until K new targets are accepted or C attempts are
// spent. `seen` holds targets already present for this source.
template <class Input, class G>
SourceAugment<Input> augment_source(const Input& x, const std::optional<TokenSeq>& gold,
                                    std::uint32_t source_index,
                                    std::unordered_set<TokenSeq, TokenSeqHash> seen, const G& model,
                                    const TargetFilter<Input>& filter, const AugmentConfig& cfg,
                                    SeedStream seed) {
  SourceAugment<Input> r;
  Rng rng = seed.child(source_index).rng();
  while (r.sampled < cfg.C && r.accepted < cfg.K) {
    Sample cand = model.sample(x, rng);
    ++r.sampled;
    if (cfg.dedupe && seen.contains(cand.tokens)) continue;
    if (!checked(filter, x, cand.tokens, source_index).pass) continue;
    ++r.passing;
    ++r.accepted;
    if (cfg.dedupe) seen.insert(cand.tokens);
    r.pairs.push_back({x, std::move(cand.tokens), Origin::kAugmented, source_index});
  }
  if (gold && cfg.pad_with_gold) {
    r.pads = cfg.K - r.accepted;
    for (std::size_t i = 0; i < r.pads; ++i)
      r.pairs.push_back({x, *gold, Origin::kPadded, source_index});
  }
  return r;
}

inline std::size_t shard_count(const AugmentConfig& cfg) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(1.0 / cfg.shard_fraction)));
}

}  // namespace detail

/// One augmentation round (the E-step by rejection sampling). `epoch` picks
/// the rotating shard when shard_fraction < 1; randomness comes from `seed`.
template <class Input, class G>
  requires Generator<G, Input>
std::pair<Dataset<Input>, EpochStats> augment_dataset(const Dataset<Input>& base, const G& model,
                                                      const TargetFilter<Input>& filter,
                                                      const AugmentConfig& cfg, SeedStream seed,
                                                      std::size_t epoch = 1) {
  cfg.validate();
  EpochStats stats;
  stats.epoch = epoch;
  stats.phase = Phase::kAugment;
  Dataset<Input> out;
  out.unlabeled = base.unlabeled;

  if (cfg.setting == Setting::kUnconditional) {
    std::vector<const Pair<Input>*> gold, kept;
    for (const auto& p : base.pairs) {
      if (p.origin == Origin::kGold) gold.push_back(&p);
      else if (p.origin == Origin::kAugmented && cfg.keep_targets_across_epochs) kept.push_back(&p);
    }
    Input source = base.pairs.empty() ? Input{} : base.pairs.front().source;
    std::unordered_set<TokenSeq, TokenSeqHash> seen;
    if (cfg.keep_gold_after_bootstrap) {
      for (const auto* p : gold) {
        out.pairs.push_back(*p);
        seen.insert(p->target);
      }
    }
    for (const auto* p : kept) {
      out.pairs.push_back(*p);
      seen.insert(p->target);
    }
    const std::size_t unit = std::max<std::size_t>(gold.size(), 1);
    const std::size_t budget = cfg.C * unit;
    const std::size_t quota = cfg.K * unit;
    constexpr std::size_t kChunk = 1024;
    const std::size_t n_chunks = (budget + kChunk - 1) / kChunk;
    struct Draw {
      TokenSeq tokens;
      bool pass;
    };
    std::size_t next_chunk = 0;
    std::size_t accepted = 0;
    bool done = false;
    while (!done && next_chunk < n_chunks) {
      const std::size_t wave = std::min<std::size_t>(std::max(1u, cfg.workers), n_chunks - next_chunk);
      std::vector<std::vector<Draw>> draws(wave);
      parallel_for(wave, cfg.workers, [&](std::size_t w) {
        const std::size_t c = next_chunk + w;
        const std::size_t begin = c * kChunk, end = std::min(budget, begin + kChunk);
        Rng rng = seed.child(c).rng();
        draws[w].reserve(end - begin);
        for (std::size_t j = begin; j < end; ++j) {
          Sample s = model.sample(source, rng);
          bool pass = detail::checked(filter, source, s.tokens, j).pass;
          draws[w].push_back({std::move(s.tokens), pass});
        }
      });
      for (auto& chunk : draws) {
        for (auto& d : chunk) {
          ++stats.candidates_sampled;
          if (!d.pass) continue;
          ++stats.candidates_passing;
          if (cfg.dedupe && !seen.insert(d.tokens).second) continue;
          out.pairs.push_back({source, std::move(d.tokens), Origin::kAugmented, 0});
          if (++accepted == quota) {
            done = true;
            break;
          }
        }
        if (done) break;
      }
      next_chunk += wave;
    }
    stats.candidates_accepted = accepted;
    stats.sources_short = accepted < quota ? 1 : 0;
  } else {
    // Group the base dataset by source.
    struct Group {
      const Input* source = nullptr;
      std::optional<TokenSeq> gold;
      std::uint32_t index = 0;
      std::vector<const Pair<Input>*> kept;
    };
    std::vector<Group> groups;
    std::unordered_map<std::uint32_t, std::size_t> by_index;
    for (const auto& p : base.pairs) {
      if (p.origin != Origin::kGold) continue;
      if (!by_index.emplace(p.source_index, groups.size()).second)
        throw std::invalid_argument("duplicate source_index " + std::to_string(p.source_index) +
                                    " among gold pairs");
      groups.push_back({&p.source, p.target, p.source_index, {}});
    }
    const std::size_t n_labeled = groups.size();
    std::uint32_t next_index = 0;
    for (const auto& g : groups) next_index = std::max(next_index, g.index + 1);
    for (std::size_t j = 0; j < base.unlabeled.size(); ++j) {
      auto idx = static_cast<std::uint32_t>(next_index + j);
      by_index.emplace(idx, groups.size());
      groups.push_back({&base.unlabeled[j], std::nullopt, idx, {}});
    }
    if (cfg.keep_targets_across_epochs) {
      for (const auto& p : base.pairs) {
        if (p.origin != Origin::kAugmented) continue;
        auto it = by_index.find(p.source_index);
        if (it != by_index.end()) groups[it->second].kept.push_back(&p);
      }
    }

    const std::size_t shards = detail::shard_count(cfg);
    auto in_shard = [&](std::size_t g) {
      return g >= n_labeled || shards == 1 || (g % shards) == ((epoch - 1) % shards);
    };

    std::vector<SourceAugment<Input>> results(groups.size());
    parallel_for(groups.size(), cfg.workers, [&](std::size_t g) {
      const Group& grp = groups[g];
      if (!in_shard(g)) {
        SourceAugment<Input> r;
        if (grp.gold && cfg.pad_with_gold) {
          r.pads = cfg.K;
          for (std::size_t i = 0; i < cfg.K; ++i)
            r.pairs.push_back({*grp.source, *grp.gold, Origin::kPadded, grp.index});
        }
        results[g] = std::move(r);
        return;
      }
      std::unordered_set<TokenSeq, TokenSeqHash> seen;
      if (grp.gold) seen.insert(*grp.gold);
      for (const auto* p : grp.kept) seen.insert(p->target);
      results[g] = detail::augment_source(*grp.source, grp.gold, grp.index, std::move(seen), model,
                                          filter, cfg, seed);
    });

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const Group& grp = groups[g];
      if (grp.gold) out.pairs.push_back({*grp.source, *grp.gold, Origin::kGold, grp.index});
      for (const auto* p : grp.kept) out.pairs.push_back(*p);
      auto& r = results[g];
      stats.candidates_sampled += r.sampled;
      stats.candidates_passing += r.passing;
      stats.candidates_accepted += r.accepted;
      stats.pads_added += r.pads;
      if (r.accepted < cfg.K && in_shard(g)) ++stats.sources_short;
      for (auto& p : r.pairs) out.pairs.push_back(std::move(p));
    }
  }
  stats.dataset_size = out.pairs.size();
  stats.pass_rate = stats.candidates_sampled == 0
                        ? 0.0
                        : static_cast<double>(stats.candidates_accepted) /
                              static_cast<double>(stats.candidates_sampled);
  return {std::move(out), stats};
}

namespace detail {

template <class Input, class G>
double mean_log_likelihood(const G& model, const std::vector<Pair<Input>>& pairs) {
  if constexpr (ScoringGenerator<G, Input>) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : pairs) sum += model.log_prob(p.source, p.target);
    return sum / static_cast<double>(pairs.size());
  } else {
    return 0.0;
  }
}

template <class Input>
std::vector<Pair<Input>> gold_pairs(const Dataset<Input>& d) {
  std::vector<Pair<Input>> gold;
  for (const auto& p : d.pairs)
    if (p.origin == Origin::kGold) gold.push_back(p);
  return gold;
}

}  // namespace detail

/// Bootstrap for n1 epochs on gold data, then n2 rounds of augment + refit.
/// The model is updated in place; one EpochStats per epoch is returned.
/// `on_epoch`, when set, is called after every epoch (e.g. to stream a CSV).
template <class Input, class G>
  requires Generator<G, Input>
std::vector<EpochStats> train(G& model, const Dataset<Input>& data,
                              const TargetFilter<Input>& filter, const AugmentConfig& cfg,
                              SeedStream seed,
                              const std::function<void(const EpochStats&)>& on_epoch = {}) {
  cfg.validate();
  if (data.pairs.empty() && data.unlabeled.empty())
    throw std::invalid_argument("train: dataset is empty");
  std::vector<EpochStats> history;
  auto emit = [&](const EpochStats& s) {
    history.push_back(s);
    if (on_epoch) on_epoch(s);
  };

  const auto gold = detail::gold_pairs(data);
  if (cfg.n1 > 0) {
    // The count model's fit is exact, so every bootstrap epoch lands on the
    // same parameters; one fit, n1 identical records.
    model.fit(std::span<const Pair<Input>>(gold));
    const double ll = detail::mean_log_likelihood<Input>(model, gold);
    for (std::size_t e = 1; e <= cfg.n1; ++e) {
      EpochStats s;
      s.epoch = e;
      s.phase = Phase::kBootstrap;
      s.dataset_size = gold.size();
      s.train_log_likelihood = ll;
      emit(s);
    }
  }

  Dataset<Input> running = data;
  std::unordered_map<std::uint32_t, std::unordered_set<TokenSeq, TokenSeqHash>> seen_pairs;
  std::size_t distinct = 0;
  for (std::size_t t = 1; t <= cfg.n2; ++t) {
    const Dataset<Input>& base = cfg.keep_targets_across_epochs ? running : data;
    auto [next, stats] = augment_dataset(base, model, filter, cfg, seed.child(t), t);
    for (const auto& p : next.pairs)
      if (p.origin == Origin::kAugmented && seen_pairs[p.source_index].insert(p.target).second)
        ++distinct;
    stats.cumulative_distinct = distinct;
    model.fit(std::span<const Pair<Input>>(next.pairs));
    stats.epoch = cfg.n1 + t;
    stats.cold_start = cfg.n1 == 0;
    stats.train_log_likelihood = detail::mean_log_likelihood<Input>(model, next.pairs);
    emit(stats);
    running = std::move(next);
  }
  return history;
}

/// Non-iterative baseline: a single large augmentation of K' targets per
/// source with an attempt budget of c_big, then one fit. Assumes the model is
/// already bootstrapped.
template <class Input, class G>
  requires Generator<G, Input>
EpochStats train_ideal(G& model, const Dataset<Input>& data, const TargetFilter<Input>& filter,
                       std::size_t k_prime, std::size_t c_big, SeedStream seed,
                       unsigned workers = 1) {
  AugmentConfig cfg;
  cfg.K = std::max<std::size_t>(k_prime, 1);
  cfg.C = std::max(c_big, cfg.K);
  cfg.pad_with_gold = true;
  cfg.dedupe = true;
  cfg.workers = workers;
  auto [expanded, stats] = augment_dataset(data, model, filter, cfg, seed.child(0xdeadULL), 1);
  model.fit(std::span<const Pair<Input>>(expanded.pairs));
  stats.phase = Phase::kIdeal;
  stats.train_log_likelihood = detail::mean_log_likelihood<Input>(model, expanded.pairs);
  return stats;
}

/// Average number of distinct accepted targets per labeled source over a
/// run's augmentation history, rounded: the K' of the ideal variant.
inline std::size_t ideal_k_prime(std::size_t distinct_accepted_total, std::size_t n_sources) {
  if (n_sources == 0) return 0;
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(distinct_accepted_total) / static_cast<double>(n_sources)));
}

/// Prediction-time filtering: for each of Z independent slots, sample up to L
/// candidates and keep the first that passes, else the first attempt.
template <class Input, class G>
  requires Generator<G, Input>
std::vector<TokenSeq> predict(const Input& x, const G& model, const TargetFilter<Input>& filter,
                              std::size_t Z, std::size_t L, SeedStream seed) {
  if (Z < 1 || L < 1) throw std::invalid_argument("predict: need Z >= 1 and L >= 1");
  std::vector<TokenSeq> out;
  out.reserve(Z);
  for (std::size_t z = 0; z < Z; ++z) {
    Rng rng = seed.child(z).rng();
    std::optional<TokenSeq> first;
    bool found = false;
    for (std::size_t l = 0; l < L; ++l) {
      Sample s = model.sample(x, rng);
      // A single attempt is emitted as-is, so the filter is not consulted.
      if (L > 1 && filter.check(x, s.tokens).pass) {
        out.push_back(std::move(s.tokens));
        found = true;
        break;
      }
      if (!first) first = std::move(s.tokens);
    }
    if (!found) out.push_back(std::move(*first));
  }
  return out;
}

template <class Input, class G>
  requires Generator<G, Input>
std::vector<std::vector<TokenSeq>> predict_all(std::span<const Input> inputs, const G& model,
                                               const TargetFilter<Input>& filter, std::size_t Z,
                                               std::size_t L, SeedStream seed,
                                               unsigned workers = 1) {
  std::vector<std::vector<TokenSeq>> out(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    out[i] = predict(inputs[i], model, filter, Z, L, seed.child(i));
  });
  return out;
}

/// Fraction of inputs with at least one output passing the ground-truth filter.
template <class Input>
double success_rate(std::span<const std::vector<TokenSeq>> predictions,
                    std::span<const Input> inputs, const TargetFilter<Input>& truth) {
  if (predictions.size() != inputs.size())
    throw std::invalid_argument("success_rate: predictions/inputs size mismatch");
  if (inputs.empty()) return 0.0;
  std::size_t hits = 0, empty = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (predictions[i].empty()) ++empty;
    for (const auto& y : predictions[i]) {
      if (truth.check(inputs[i], y).pass) {
        ++hits;
        break;
      }
    }
  }
  if (empty > 0)
    std::clog << "warning: " << empty << " input(s) had no predictions; counted as failures\n";
  return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

using Similarity = std::function<double(const TokenSeq&, const TokenSeq&)>;

/// Mean over inputs of the average pairwise distance (1 - sim) among passing
/// outputs; inputs with fewer than two passing outputs score 0.
template <class Input>
double diversity(std::span<const std::vector<TokenSeq>> predictions,
                 std::span<const Input> inputs, const TargetFilter<Input>& truth,
                 const Similarity& sim) {
  if (predictions.size() != inputs.size())
    throw std::invalid_argument("diversity: predictions/inputs size mismatch");
  if (inputs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<const TokenSeq*> passing;
    for (const auto& y : predictions[i])
      if (truth.check(inputs[i], y).pass) passing.push_back(&y);
    if (passing.size() < 2) continue;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < passing.size(); ++a)
      for (std::size_t b = a + 1; b < passing.size(); ++b, ++pairs)
        sum += 1.0 - sim(*passing[a], *passing[b]);
    total += sum / static_cast<double>(pairs);
  }
  return total / static_cast<double>(inputs.size());
}

/// N unconditional draws. With a prediction filter and L > 1 each draw is
/// filtered like one predict() slot: up to L attempts, the first passing one
/// kept, else the first attempt.
template <class Input, class G>
  requires Generator<G, Input>
std::vector<TokenSeq> filtered_draws(const G& model, const Input& source, std::size_t N,
                                     SeedStream seed, unsigned workers = 1,
                                     const TargetFilter<Input>* prediction_filter = nullptr,
                                     std::size_t L = 1) {
  if (L == 0) throw std::invalid_argument("filtered_draws: L must be >= 1");
  constexpr std::size_t kChunk = 1024;
  const std::size_t n_chunks = (N + kChunk - 1) / kChunk;
  const bool filtered = prediction_filter != nullptr && L > 1;
  std::vector<TokenSeq> out(N);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    Rng rng = seed.child(c).rng();
    const std::size_t end = std::min(N, (c + 1) * kChunk);
    for (std::size_t j = c * kChunk; j < end; ++j) {
      Sample s = model.sample(source, rng);
      if (filtered && !prediction_filter->check(source, s.tokens).pass) {
        for (std::size_t l = 1; l < L; ++l) {
          Sample retry = model.sample(source, rng);
          if (prediction_filter->check(source, retry.tokens).pass) {
            s = std::move(retry);
            break;
          }
        }
      }
      out[j] = std::move(s.tokens);
    }
  });
  return out;
}

/// Fraction of draws that pass `truth` (unconditional success).
template <class Input>
double draw_success(std::span<const TokenSeq> draws, const Input& source,
                    const TargetFilter<Input>& truth) {
  if (draws.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& y : draws) n += truth.check(source, y).pass ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(draws.size());
}

/// Distinct passing draws as a fraction of the number of draws.
template <class Input>
double draw_uniqueness(std::span<const TokenSeq> draws, const Input& source,
                       const TargetFilter<Input>& truth) {
  if (draws.empty()) return 0.0;
  std::unordered_set<TokenSeq, TokenSeqHash> distinct;
  for (const auto& y : draws)
    if (truth.check(source, y).pass) distinct.insert(y);
  return static_cast<double>(distinct.size()) / static_cast<double>(draws.size());
}

/// Distinct passing samples among N unconditional draws, as a fraction of N.
template <class Input, class G>
  requires Generator<G, Input>
double uniqueness(const G& model, const Input& source, const TargetFilter<Input>& truth,
                  std::size_t N, SeedStream seed, unsigned workers = 1,
                  const TargetFilter<Input>* prediction_filter = nullptr, std::size_t L = 1) {
  if (N == 0) throw std::invalid_argument("uniqueness: N must be >= 1");
  auto draws = filtered_draws(model, source, N, seed, workers, prediction_filter, L);
  return draw_uniqueness<Input>(draws, source, truth);
}

}  // namespace ita

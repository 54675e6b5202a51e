#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "ita/rng.hpp"
#include "ita/tokens.hpp"

namespace ita {

struct SeqModelConfig {
  int order = 3;
  double kappa = 0.1;
  /// Interpolation weights, highest order first; size() == order, sums to 1.
  std::vector<double> weights = {0.6, 0.3, 0.1};
  std::size_t max_len = 40;
  /// Mass given to a feature-agnostic copy of the model (trained on all
  /// records regardless of feature); backs off sparse feature buckets.
  double shared_weight = 0.0;

  void validate() const;
};

struct Sample {
  TokenSeq tokens;
  bool terminated = true;  // false when max_len was hit before EOS
};

/// How a sequence that fills the whole length cap is scored. kAlways charges
/// the EOS transition everywhere; kCapped drops it at max_len, which matches
/// what sample() returns and makes probabilities sum to one over all
/// sequences of length <= max_len.
enum class EosAccounting { kAlways, kCapped };

/// Count-based conditional sequence model P(Y | feature) with additive
/// smoothing, linearly interpolated across n-gram orders. The next-token
/// distribution covers the alphabet plus EOS (id == alphabet size).
///
/// Per order k, with history h of k-1 previous tokens (BOS padded):
///   p_k(t | f, h) = (c(f, h, t) + kappa) / (c(f, h) + kappa * (V + 1))
/// and P_f(t | h) = sum_k w_k p_k(t | f, h_{k-1}). With kappa == 0 an unseen
/// context falls back to the uniform distribution (the kappa -> 0+ limit).
/// The emitted distribution is (1 - s) P_f + s P_shared, s = shared_weight.
class SeqModel {
 public:
  SeqModel() = default;
  SeqModel(Alphabet alphabet, SeqModelConfig cfg);

  struct Record {
    std::uint32_t feature;
    const TokenSeq* target;
    std::uint64_t weight = 1;
  };

  /// Replaces all counts with the exact frequencies of `records`.
  /// Throws std::invalid_argument naming the record index on a bad token.
  void fit(std::span<const Record> records);
  void add(std::uint32_t feature, std::span<const Token> target, std::uint64_t weight = 1);
  void clear();

  Sample sample(std::uint32_t feature, Rng& rng) const;
  double log_prob(std::uint32_t feature, std::span<const Token> target,
                  EosAccounting eos = EosAccounting::kAlways) const;

  /// Smoothed next-token distribution, size alphabet().size() + 1.
  std::vector<double> next_distribution(std::uint32_t feature,
                                        std::span<const Token> prefix) const;

  /// Raw count of `next` after the last (k-1) tokens of `prefix`.
  std::uint64_t count(std::uint32_t feature, int k, std::span<const Token> prefix,
                      Token next) const;

  const Alphabet& alphabet() const { return alphabet_; }
  const SeqModelConfig& config() const { return cfg_; }
  Token eos() const { return static_cast<Token>(alphabet_.size()); }
  std::size_t num_rows() const { return totals_.size(); }
  std::uint64_t total_weight() const { return total_weight_; }

  void save(std::ostream& out) const;
  static SeqModel load(std::istream& in);

 private:
  static constexpr Token kBos = 63;
  static constexpr std::uint32_t kSharedFeature = (1u << 24) - 1;
  void accumulate_one(std::uint32_t feature, double scale, std::span<const Token> prefix,
                      std::size_t pos, std::span<double> dist) const;
  void count_one(std::uint32_t feature, std::span<const Token> target, std::uint64_t weight);
  std::uint64_t key(std::uint32_t feature, int k, std::span<const Token> prefix,
                    std::size_t pos) const;
  void accumulate(std::uint32_t feature, std::span<const Token> prefix, std::size_t pos,
                  std::span<double> dist) const;

  Alphabet alphabet_;
  SeqModelConfig cfg_;
  std::unordered_map<std::uint64_t, std::uint32_t> rows_;
  std::vector<std::uint64_t> counts_;  // rows x (V + 1)
  std::vector<std::uint64_t> totals_;
  std::uint64_t total_weight_ = 0;
};

}  // namespace ita

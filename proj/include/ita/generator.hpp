#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ita/augment.hpp"
#include "ita/seqmodel.hpp"

namespace ita {

/// Deterministic map from a source to a small discrete conditioning code.
template <class Input>
using Featurizer = std::function<std::uint32_t(const Input&)>;

/// SeqModel conditioned on a featurized source: the trainable P(Y | X) that
/// the augmentation loop drives. fit() is a full refit of the counts.
template <class Input>
class CountGenerator {
 public:
  CountGenerator(Alphabet alphabet, SeqModelConfig cfg, Featurizer<Input> featurize)
      : model_(std::move(alphabet), std::move(cfg)), featurize_(std::move(featurize)) {}

  CountGenerator(SeqModel model, Featurizer<Input> featurize)
      : model_(std::move(model)), featurize_(std::move(featurize)) {}

  Sample sample(const Input& x, Rng& rng) const { return model_.sample(featurize_(x), rng); }

  double log_prob(const Input& x, const TokenSeq& y) const {
    return model_.log_prob(featurize_(x), y);
  }

  void fit(std::span<const Pair<Input>> data) {
    std::vector<SeqModel::Record> records;
    records.reserve(data.size());
    for (const auto& p : data) records.push_back({featurize_(p.source), &p.target, 1});
    model_.fit(records);
  }

  std::uint32_t feature(const Input& x) const { return featurize_(x); }
  const SeqModel& model() const { return model_; }
  SeqModel& model() { return model_; }

 private:
  SeqModel model_;
  Featurizer<Input> featurize_;
};

}  // namespace ita

#include <doctest.h>

#include <map>
#include <set>

#include "ita/augment.hpp"
#include "ita/generator.hpp"

using namespace ita;

namespace {

// Draws uniformly from a fixed candidate list; sources are ints.
struct ListGenerator {
  std::vector<TokenSeq> candidates;
  int fits = 0;
  std::size_t last_fit_size = 0;

  Sample sample(const int&, Rng& rng) const { return {candidates[uniform_index(rng, candidates.size())], true}; }
  void fit(std::span<const Pair<int>> data) {
    ++fits;
    last_fit_size = data.size();
  }
};

std::vector<TokenSeq> numbered(int n) {
  std::vector<TokenSeq> out;
  for (int i = 0; i < n; ++i) out.push_back(TokenSeq{static_cast<Token>(i)});
  return out;
}

Dataset<int> small_dataset(int n_gold, int n_unlabeled = 0) {
  std::vector<std::pair<int, TokenSeq>> labeled;
  for (int i = 0; i < n_gold; ++i) labeled.push_back({i, TokenSeq{0}});
  std::vector<int> unl;
  for (int i = 0; i < n_unlabeled; ++i) unl.push_back(100 + i);
  return make_dataset(std::move(labeled), std::move(unl));
}

// Accepts even token values only.
FunctionFilter<int> even_filter([](const int&, const TokenSeq& y) { return y.front() % 2 == 0; });

}  // namespace

TEST_CASE("each labeled source ends with K + 1 pairs") {
  ListGenerator g{numbered(6)};
  AugmentConfig cfg;
  cfg.K = 4;
  cfg.C = 30;
  auto [out, stats] = augment_dataset(small_dataset(20), g, even_filter, cfg, SeedStream(1));
  std::map<std::uint32_t, std::vector<const Pair<int>*>> by_source;
  for (const auto& p : out.pairs) by_source[p.source_index].push_back(&p);
  CHECK(by_source.size() == 20);
  for (const auto& [idx, pairs] : by_source) {
    CHECK(pairs.size() == cfg.K + 1);
    std::set<TokenSeq> augmented;
    std::size_t gold = 0;
    for (const auto* p : pairs) {
      if (p->origin == Origin::kGold) ++gold;
      if (p->origin == Origin::kAugmented) {
        CHECK(p->target.front() % 2 == 0);
        CHECK(p->target != TokenSeq{0});  // the gold target is never re-accepted
        CHECK(augmented.insert(p->target).second);
      }
      if (p->origin == Origin::kPadded) CHECK(p->target == TokenSeq{0});
    }
    CHECK(gold == 1);
    // Only {2, 4} are new passing targets, so two pads each.
    CHECK(augmented.size() == 2);
  }
  CHECK(stats.candidates_accepted == 40);
  CHECK(stats.pads_added == 40);
  CHECK(stats.sources_short == 20);
  CHECK(stats.dataset_size == 100);
}

TEST_CASE("attempt budget C caps sampling") {
  ListGenerator g{numbered(1000)};
  AugmentConfig cfg;
  cfg.K = 4;
  cfg.C = 4;
  FunctionFilter<int> none([](const int&, const TokenSeq&) { return false; });
  auto [out, stats] = augment_dataset(small_dataset(5), g, none, cfg, SeedStream(1));
  CHECK(stats.candidates_sampled == 20);
  CHECK(stats.candidates_accepted == 0);
  CHECK(stats.pass_rate == 0.0);
}

TEST_CASE("without dedupe a target may repeat") {
  ListGenerator g{{TokenSeq{2}}};
  AugmentConfig cfg;
  cfg.K = 3;
  cfg.C = 10;
  cfg.dedupe = false;
  auto [out, stats] = augment_dataset(small_dataset(1), g, even_filter, cfg, SeedStream(1));
  CHECK(stats.candidates_accepted == 3);
  cfg.dedupe = true;
  auto [out2, stats2] = augment_dataset(small_dataset(1), g, even_filter, cfg, SeedStream(1));
  CHECK(stats2.candidates_accepted == 1);
}

TEST_CASE("unlabeled sources get augmented targets but no padding") {
  ListGenerator g{numbered(10)};
  AugmentConfig cfg;
  auto [out, stats] = augment_dataset(small_dataset(2, 3), g, even_filter, cfg, SeedStream(4));
  std::map<std::uint32_t, int> per;
  for (const auto& p : out.pairs) {
    ++per[p.source_index];
    if (p.source_index >= 2) CHECK(p.origin == Origin::kAugmented);
  }
  CHECK(per.size() == 5);
  for (std::uint32_t u = 2; u < 5; ++u) CHECK(per[u] == 4);  // {0,2,4,6,8} all new: K accepted
  CHECK(out.unlabeled.size() == 3);
}

TEST_CASE("unconditional quota is K per gold target, gold dropped") {
  ListGenerator g{numbered(200)};
  AugmentConfig cfg = AugmentConfig::unconditional_defaults();
  cfg.K = 3;
  cfg.C = 50;
  std::vector<std::pair<int, TokenSeq>> gold;
  for (int i = 0; i < 10; ++i) gold.push_back({0, TokenSeq{static_cast<Token>(2 * i)}});
  auto data = make_dataset(std::move(gold));
  auto [out, stats] = augment_dataset(data, g, even_filter, cfg, SeedStream(2));
  CHECK(stats.candidates_accepted == 30);
  CHECK(out.pairs.size() == 30);
  std::set<TokenSeq> distinct;
  for (const auto& p : out.pairs) {
    CHECK(p.origin == Origin::kAugmented);
    distinct.insert(p.target);
  }
  CHECK(distinct.size() == 30);
}

TEST_CASE("augmentation is identical across worker counts") {
  ListGenerator g{numbered(50)};
  for (auto setting : {Setting::kConditional, Setting::kUnconditional}) {
    AugmentConfig cfg = setting == Setting::kConditional ? AugmentConfig{} : AugmentConfig::unconditional_defaults();
    cfg.C = 40;
    auto data = small_dataset(200, 20);
    if (setting == Setting::kUnconditional) data.unlabeled.clear();
    cfg.workers = 1;
    auto [a, sa] = augment_dataset(data, g, even_filter, cfg, SeedStream(9));
    cfg.workers = 4;
    auto [b, sb] = augment_dataset(data, g, even_filter, cfg, SeedStream(9));
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].target == b.pairs[i].target);
      CHECK(a.pairs[i].source_index == b.pairs[i].source_index);
    }
    CHECK(sa.candidates_sampled == sb.candidates_sampled);
  }
}

TEST_CASE("shards rotate over epochs") {
  ListGenerator g{numbered(10)};
  AugmentConfig cfg;
  cfg.shard_fraction = 0.5;
  auto data = small_dataset(4);
  auto [e1, s1] = augment_dataset(data, g, even_filter, cfg, SeedStream(1), 1);
  auto [e2, s2] = augment_dataset(data, g, even_filter, cfg, SeedStream(1), 2);
  auto augmented_sources = [](const Dataset<int>& d) {
    std::set<std::uint32_t> s;
    for (const auto& p : d.pairs)
      if (p.origin == Origin::kAugmented) s.insert(p.source_index);
    return s;
  };
  CHECK(augmented_sources(e1) == std::set<std::uint32_t>{0, 2});
  CHECK(augmented_sources(e2) == std::set<std::uint32_t>{1, 3});
  CHECK(e1.pairs.size() == 4 * (cfg.K + 1));
}

TEST_CASE("train runs n1 bootstrap epochs then n2 refits") {
  ListGenerator g{numbered(10)};
  AugmentConfig cfg;
  cfg.n1 = 3;
  cfg.n2 = 4;
  std::vector<std::size_t> streamed;
  auto hist = train(g, small_dataset(5), even_filter, cfg, SeedStream(1),
                    [&](const EpochStats& s) { streamed.push_back(s.epoch); });
  REQUIRE(hist.size() == 7);
  CHECK(streamed == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7});
  CHECK(hist[0].phase == Phase::kBootstrap);
  CHECK(hist[6].phase == Phase::kAugment);
  CHECK(g.fits == 1 + 4);
  CHECK(g.last_fit_size == 5 * (cfg.K + 1));
  CHECK(hist.back().cumulative_distinct == 5 * 4);  // {2,4,6,8} per source
}

TEST_CASE("baseline schedule is n2 = 0") {
  ListGenerator g{numbered(10)};
  AugmentConfig cfg;
  cfg.n2 = 0;
  auto hist = train(g, small_dataset(5), even_filter, cfg, SeedStream(1));
  CHECK(hist.size() == cfg.n1);
  CHECK(g.fits == 1);
  CHECK(g.last_fit_size == 5);
}

TEST_CASE("keep targets across epochs accumulates") {
  ListGenerator g{numbered(40)};
  AugmentConfig cfg;
  cfg.n2 = 3;
  cfg.keep_targets_across_epochs = true;
  auto hist = train(g, small_dataset(3), even_filter, cfg, SeedStream(2));
  CHECK(hist.back().dataset_size > 3 * (cfg.K + 1));
}

TEST_CASE("ideal variant uses K prime targets per source") {
  CHECK(ideal_k_prime(10, 4) == 3);  // 2.5 rounds away from zero
  CHECK(ideal_k_prime(0, 0) == 0);
  ListGenerator g{numbered(40)};
  auto stats = train_ideal(g, small_dataset(3), even_filter, 6, 500, SeedStream(1));
  CHECK(stats.phase == Phase::kIdeal);
  CHECK(stats.candidates_accepted == 18);
  CHECK(g.last_fit_size == 3 * 7);
}

TEST_CASE("prediction-time filtering keeps the first passing attempt") {
  ListGenerator g{numbered(9)};
  auto out = predict(0, g, even_filter, 20, 10, SeedStream(3));
  CHECK(out.size() == 20);
  for (const auto& y : out) CHECK(y.front() % 2 == 0);
  // L = 1 emits the raw first sample.
  FunctionFilter<int> none([](const int&, const TokenSeq&) { return false; });
  auto raw = predict(0, g, none, 5, 1, SeedStream(3));
  auto raw_again = predict(0, g, even_filter, 5, 1, SeedStream(3));
  CHECK(raw == raw_again);
  // Nothing passes: the first attempt of each slot.
  auto fallback = predict(0, g, none, 5, 10, SeedStream(3));
  CHECK(fallback == raw);
  CHECK_THROWS_AS(predict(0, g, none, 0, 1, SeedStream(3)), std::invalid_argument);
}

TEST_CASE("predict_all is independent of workers") {
  ListGenerator g{numbered(9)};
  std::vector<int> inputs(50);
  auto a = predict_all<int>(inputs, g, even_filter, 4, 3, SeedStream(1), 1);
  auto b = predict_all<int>(inputs, g, even_filter, 4, 3, SeedStream(1), 4);
  CHECK(a == b);
}

TEST_CASE("filtered draws honour the prediction filter") {
  ListGenerator g{numbered(4)};
  auto plain = filtered_draws(g, 0, 3000, SeedStream(1));
  auto filtered = filtered_draws(g, 0, 3000, SeedStream(1), 1, &even_filter, 10);
  const auto passing = [&](const std::vector<TokenSeq>& d) {
    return draw_success<int>(d, 0, even_filter);
  };
  CHECK(passing(plain) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(passing(filtered) > 0.99);
  CHECK(filtered_draws(g, 0, 3000, SeedStream(1), 3, &even_filter, 10) == filtered);
  CHECK(uniqueness(g, 0, even_filter, 3000, SeedStream(1), 1, &even_filter, 10) ==
        doctest::Approx(2.0 / 3000));
}

TEST_CASE("count generator conditions on the featurized source") {
  Alphabet ab({"a", "b"});
  SeqModelConfig mc;
  mc.kappa = 0.0;
  mc.weights = {1.0, 0.0, 0.0};
  CountGenerator<int> g(ab, mc, [](const int& x) { return static_cast<std::uint32_t>(x % 2); });
  std::vector<Pair<int>> data{{0, ab.encode_chars("aa")}, {1, ab.encode_chars("bb")}};
  g.fit(data);
  Rng rng = SeedStream(1).rng();
  CHECK(g.sample(2, rng).tokens == ab.encode_chars("aa"));
  CHECK(g.sample(3, rng).tokens == ab.encode_chars("bb"));
  CHECK(g.log_prob(4, ab.encode_chars("aa")) == doctest::Approx(0.0));
}

TEST_CASE("config validation") {
  AugmentConfig c;
  c.K = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.K = 10;
  c.C = 5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.shard_fraction = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  ListGenerator g{numbered(2)};
  CHECK_THROWS_AS(train(g, Dataset<int>{}, even_filter, AugmentConfig{}, SeedStream(1)), std::invalid_argument);
}

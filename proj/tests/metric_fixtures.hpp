#pragma once

// Hand-built fixtures for the four evaluation metrics, each checked against a
// brute-force re-implementation written without the library helpers.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "ita/augment.hpp"
#include "ita/gridlang.hpp"

namespace fixtures {

using ita::TokenSeq;

inline const ita::Alphabet& letters() {
  static const ita::Alphabet a({"a", "b", "c", "d"});
  return a;
}

inline TokenSeq word(const std::string& s) { return letters().encode_chars(s); }

inline std::set<std::string> adjacent_pairs(const std::string& s) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) out.insert(s.substr(i, 2));
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct MetricCase {
  std::vector<int> inputs;
  std::vector<std::vector<std::string>> outputs;
};

// Passing outputs: those not containing 'd', plus anything for input 3.
inline bool passes(int x, const std::string& y) { return x == 3 || y.find('d') == std::string::npos; }

inline double brute_success(const MetricCase& c) {
  int hits = 0;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    bool any = false;
    for (const auto& y : c.outputs[i]) any = any || passes(c.inputs[i], y);
    hits += any;
  }
  return c.inputs.empty() ? 0.0 : hits / static_cast<double>(c.inputs.size());
}

inline double brute_diversity(const MetricCase& c) {
  double total = 0;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    std::vector<std::string> ok;
    for (const auto& y : c.outputs[i])
      if (passes(c.inputs[i], y)) ok.push_back(y);
    double sum = 0;
    int n = 0;
    for (std::size_t a = 0; a < ok.size(); ++a)
      for (std::size_t b = 0; b < ok.size(); ++b)
        if (a < b) {
          sum += 1 - jaccard(adjacent_pairs(ok[a]), adjacent_pairs(ok[b]));
          ++n;
        }
    if (n) total += sum / n;
  }
  return c.inputs.empty() ? 0.0 : total / static_cast<double>(c.inputs.size());
}

inline double brute_uniqueness(const std::vector<std::string>& draws) {
  std::set<std::string> seen;
  for (const auto& y : draws)
    if (passes(0, y)) seen.insert(y);
  return draws.empty() ? 0.0 : seen.size() / static_cast<double>(draws.size());
}

inline std::vector<MetricCase> metric_cases() {
  return {
      {{0}, {{"abc", "bcd"}}},  // one passing output
      {{3}, {{"abc", "bcd"}}},  // the 2/3 fixture: {ab,bc} vs {bc,cd}
      {{0, 1, 2}, {{"d", "dd"}, {"ab", "ab", "ba"}, {"abcabc", "cab", "add", "c"}}},
      {{3, 3}, {{"abcd", "dcba", "aaaa"}, {"a"}}},
      {{1, 2}, {{}, {"bb", "bbb", "cc"}}},
  };
}

inline const std::vector<std::string>& uniqueness_draws() {
  static const std::vector<std::string> d{"ab", "ab", "abc", "d", "bd", "ca", "ca", "ca", "cab", "abc"};
  return d;
}

/// A generator that always emits the same program for a given task.
struct FixedPrograms {
  std::vector<std::pair<int, TokenSeq>> by_start_x;  // keyed by x of the first given input
  ita::Sample sample(const ita::gridlang::GivenSpec& s, ita::Rng&) const {
    for (const auto& [x, p] : by_start_x)
      if (x == s.given.front().in.x) return ita::Sample{p};
    return ita::Sample{};
  }
  void fit(std::span<const ita::Pair<ita::gridlang::GivenSpec>>) {}
};

struct Top1Fixture {
  std::vector<ita::gridlang::Task> tasks;
  std::vector<std::string> emitted;  // program text per task
};

inline ita::gridlang::GridState strip(int width, int x) {
  auto g = ita::gridlang::GridState::empty(width, 1);
  g.x = x;
  g.dir = ita::gridlang::Dir::kEast;
  return g;
}

// Tasks on 1 x 6 strips: "move twice" from x, held-out from another start.
inline Top1Fixture top1_fixture() {
  using namespace ita::gridlang;
  Top1Fixture f;
  auto pair_for = [](int x, int dx) {
    IOPair io{strip(6, x), strip(6, x + dx)};
    return io;
  };
  for (int x = 0; x < 4; ++x) {
    Task t;
    t.spec.given = {pair_for(x, 2)};
    t.heldout = {x == 3 ? IOPair{strip(6, 4), strip(6, 5)} : pair_for(x + 1, 2)};
    t.gold = parse("move move");
    f.tasks.push_back(t);
  }
  f.emitted = {
      "move move",                      // generalizes
      "while frontIsClear { move }",    // from 1 reaches 5, fails given (needs 3)
      "move move",                      // generalizes
      "move move",                      // given ok at 3 -> 5; held-out from 4 crashes
  };
  return f;
}

inline double brute_top1(const Top1Fixture& f) {
  using namespace ita::gridlang;
  int hits = 0;
  for (std::size_t i = 0; i < f.tasks.size(); ++i) {
    Program p = parse(f.emitted[i]);
    bool ok = true;
    auto all = f.tasks[i].spec.given;
    all.insert(all.end(), f.tasks[i].heldout.begin(), f.tasks[i].heldout.end());
    for (const auto& io : all) {
      auto r = execute(p, io.in);
      ok = ok && r.ok() && r.final.x == io.out.x && r.final.y == io.out.y && r.final.dir == io.out.dir &&
           r.final.markers == io.out.markers;
    }
    hits += ok;
  }
  return hits / static_cast<double>(f.tasks.size());
}

/// Empty on success; otherwise one message per mismatch.
inline std::vector<std::string> check_metric_oracles() {
  std::vector<std::string> bad;
  ita::FunctionFilter<int> filter(
      [](const int& x, const TokenSeq& y) { return passes(x, letters().decode_chars(y)); });
  ita::Similarity sim = [](const TokenSeq& a, const TokenSeq& b) {
    return jaccard(adjacent_pairs(letters().decode_chars(a)), adjacent_pairs(letters().decode_chars(b)));
  };
  const auto cases = metric_cases();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    std::vector<std::vector<TokenSeq>> preds;
    for (const auto& outs : c.outputs) {
      preds.emplace_back();
      for (const auto& y : outs) preds.back().push_back(word(y));
    }
    const double s = ita::success_rate<int>(preds, c.inputs, filter);
    const double d = ita::diversity<int>(preds, c.inputs, filter, sim);
    if (s != brute_success(c)) bad.push_back("success differs on case " + std::to_string(k));
    if (std::abs(d - brute_diversity(c)) > 1e-15) bad.push_back("diversity differs on case " + std::to_string(k));
  }
  {
    std::vector<std::vector<TokenSeq>> preds{{word("abc"), word("bcd")}};
    std::vector<int> in{3};
    const double d = ita::diversity<int>(preds, in, filter, sim);
    if (std::abs(d - 2.0 / 3.0) > 1e-15) bad.push_back("diversity fixture is not 2/3");
  }
  {
    std::vector<TokenSeq> draws;
    for (const auto& y : uniqueness_draws()) draws.push_back(word(y));
    const double u = ita::draw_uniqueness<int>(draws, 0, filter);
    if (u != brute_uniqueness(uniqueness_draws())) bad.push_back("uniqueness differs");
    if (u != 0.4) bad.push_back("uniqueness fixture is not 4/10");
  }
  {
    auto f = top1_fixture();
    FixedPrograms model;
    for (std::size_t i = 0; i < f.tasks.size(); ++i)
      model.by_start_x.push_back(
          {f.tasks[i].spec.given.front().in.x, ita::gridlang::to_tokens(ita::gridlang::parse(f.emitted[i]))});
    const double t = ita::gridlang::top1_generalization(model, f.tasks, 10, ita::SeedStream(1));
    if (t != brute_top1(f)) bad.push_back("top-1 differs");
    if (t != 0.5) bad.push_back("top-1 fixture is not 2/4");
  }
  return bad;
}

}  // namespace fixtures

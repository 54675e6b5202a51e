#include "ita/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ita {

namespace {
constexpr int kMaxOrder = 7;
constexpr std::uint32_t kMaxFeature = (1u << 24) - 2;
constexpr const char* kMagic = "ita-seqmodel";
constexpr int kFormatVersion = 1;
}  // namespace

void SeqModelConfig::validate() const {
  if (order < 1 || order > kMaxOrder)
    throw std::invalid_argument("seqmodel order must be in [1, 7]");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be >= 0");
  if (weights.size() != static_cast<std::size_t>(order))
    throw std::invalid_argument("need one interpolation weight per order");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("interpolation weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("interpolation weights must sum to 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (!(shared_weight >= 0.0 && shared_weight < 1.0))
    throw std::invalid_argument("shared_weight must be in [0, 1)");
}

SeqModel::SeqModel(Alphabet alphabet, SeqModelConfig cfg)
    : alphabet_(std::move(alphabet)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (alphabet_.size() == 0) throw std::invalid_argument("seqmodel needs a non-empty alphabet");
}

std::uint64_t SeqModel::key(std::uint32_t feature, int k, std::span<const Token> prefix,
                            std::size_t pos) const {
  std::uint64_t h = (static_cast<std::uint64_t>(feature) << 40) |
                    (static_cast<std::uint64_t>(k) << 36);
  for (int j = 1; j < k; ++j) {
    Token t = pos >= static_cast<std::size_t>(j) ? prefix[pos - j] : kBos;
    h |= static_cast<std::uint64_t>(t) << (6 * (j - 1));
  }
  return h;
}

void SeqModel::clear() {
  rows_.clear();
  counts_.clear();
  totals_.clear();
  total_weight_ = 0;
}

void SeqModel::add(std::uint32_t feature, std::span<const Token> target, std::uint64_t weight) {
  if (feature > kMaxFeature) throw std::invalid_argument("context feature exceeds 24 bits");
  if (!alphabet_.contains(target)) throw std::invalid_argument("target token outside alphabet");
  if (weight == 0) return;
  count_one(feature, target, weight);
  if (cfg_.shared_weight > 0.0) count_one(kSharedFeature, target, weight);
  total_weight_ += weight;
}

void SeqModel::count_one(std::uint32_t feature, std::span<const Token> target,
                         std::uint64_t weight) {
  const std::size_t width = alphabet_.size() + 1;
  for (std::size_t pos = 0; pos <= target.size(); ++pos) {
    Token next = pos < target.size() ? target[pos] : eos();
    for (int k = 1; k <= cfg_.order; ++k) {
      auto [it, inserted] = rows_.try_emplace(key(feature, k, target, pos),
                                              static_cast<std::uint32_t>(totals_.size()));
      if (inserted) {
        counts_.resize(counts_.size() + width, 0);
        totals_.push_back(0);
      }
      counts_[it->second * width + next] += weight;
      totals_[it->second] += weight;
    }
  }
}

void SeqModel::fit(std::span<const Record> records) {
  clear();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!alphabet_.contains(*r.target))
      throw std::invalid_argument("training pair " + std::to_string(i) +
                                  " has a token outside the alphabet");
    add(r.feature, *r.target, r.weight);
  }
}

void SeqModel::accumulate(std::uint32_t feature, std::span<const Token> prefix, std::size_t pos,
                          std::span<double> dist) const {
  std::fill(dist.begin(), dist.end(), 0.0);
  const double s = cfg_.shared_weight;
  accumulate_one(feature, 1.0 - s, prefix, pos, dist);
  if (s > 0.0) accumulate_one(kSharedFeature, s, prefix, pos, dist);
}

void SeqModel::accumulate_one(std::uint32_t feature, double scale, std::span<const Token> prefix,
                              std::size_t pos, std::span<double> dist) const {
  const std::size_t width = alphabet_.size() + 1;
  const double uniform = 1.0 / static_cast<double>(width);
  for (int k = 1; k <= cfg_.order; ++k) {
    const double w = scale * cfg_.weights[cfg_.order - k];
    if (w == 0.0) continue;
    auto it = rows_.find(key(feature, k, prefix, pos));
    if (it == rows_.end()) {
      for (auto& d : dist) d += w * uniform;
      continue;
    }
    const std::uint64_t* row = &counts_[it->second * width];
    const double denom = static_cast<double>(totals_[it->second]) + cfg_.kappa * width;
    for (std::size_t t = 0; t < width; ++t)
      dist[t] += w * (static_cast<double>(row[t]) + cfg_.kappa) / denom;
  }
}

std::vector<double> SeqModel::next_distribution(std::uint32_t feature,
                                                std::span<const Token> prefix) const {
  std::vector<double> dist(alphabet_.size() + 1);
  accumulate(feature, prefix, prefix.size(), dist);
  return dist;
}

std::uint64_t SeqModel::count(std::uint32_t feature, int k, std::span<const Token> prefix,
                              Token next) const {
  auto it = rows_.find(key(feature, k, prefix, prefix.size()));
  if (it == rows_.end()) return 0;
  return counts_[it->second * (alphabet_.size() + 1) + next];
}

Sample SeqModel::sample(std::uint32_t feature, Rng& rng) const {
  Sample out;
  const std::size_t width = alphabet_.size() + 1;
  double dist[64];
  std::span<double> d(dist, width);
  out.tokens.reserve(16);
  while (out.tokens.size() < cfg_.max_len) {
    accumulate(feature, out.tokens, out.tokens.size(), d);
    double u = uniform01(rng);
    std::size_t pick = width - 1;
    double acc = 0.0;
    for (std::size_t t = 0; t < width; ++t) {
      acc += d[t];
      if (u < acc) {
        pick = t;
        break;
      }
    }
    if (pick == eos()) return out;
    out.tokens.push_back(static_cast<Token>(pick));
  }
  out.terminated = false;
  return out;
}

double SeqModel::log_prob(std::uint32_t feature, std::span<const Token> target,
                          EosAccounting eos_mode) const {
  if (!alphabet_.contains(target)) throw std::invalid_argument("log_prob: token outside alphabet");
  if (target.size() > cfg_.max_len) throw std::invalid_argument("log_prob: target exceeds max_len");
  const std::size_t width = alphabet_.size() + 1;
  double dist[64];
  std::span<double> d(dist, width);
  double lp = 0.0;
  for (std::size_t pos = 0; pos <= target.size(); ++pos) {
    if (pos == target.size() && eos_mode == EosAccounting::kCapped && pos == cfg_.max_len) break;
    accumulate(feature, target, pos, d);
    Token next = pos < target.size() ? target[pos] : eos();
    if (d[next] <= 0.0) return -std::numeric_limits<double>::infinity();
    lp += std::log(d[next]);
  }
  return lp;
}

void SeqModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "alphabet";
  for (const auto& s : alphabet_.symbols()) out << ' ' << s;
  out << '\n';
  out.precision(17);
  out << "order " << cfg_.order << '\n' << "kappa " << cfg_.kappa << '\n' << "weights";
  for (double w : cfg_.weights) out << ' ' << w;
  out << '\n' << "max_len " << cfg_.max_len << '\n';
  out << "shared_weight " << cfg_.shared_weight << '\n';

  std::vector<std::pair<std::uint64_t, std::uint32_t>> sorted(rows_.begin(), rows_.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t width = alphabet_.size() + 1;
  out << "rows " << sorted.size() << '\n';
  for (const auto& [k, row] : sorted) {
    auto feature = static_cast<std::uint32_t>(k >> 40);
    int order = static_cast<int>((k >> 36) & 0xF);
    out << feature << ' ' << order;
    for (int j = order - 1; j >= 1; --j) out << ' ' << ((k >> (6 * (j - 1))) & 0x3F);
    out << " :";
    for (std::size_t t = 0; t < width; ++t) out << ' ' << counts_[row * width + t];
    out << '\n';
  }
  out << "total_weight " << total_weight_ << '\n';
}

SeqModel SeqModel::load(std::istream& in) {
  auto fail = [](const std::string& what) {
    throw std::runtime_error("malformed seqmodel file: " + what);
  };
  std::string line, word;
  std::getline(in, line);
  {
    std::istringstream ls(line);
    int version = 0;
    ls >> word >> version;
    if (word != kMagic) fail("bad magic");
    if (version != kFormatVersion) fail("unsupported version " + std::to_string(version));
  }
  std::getline(in, line);
  std::vector<std::string> symbols;
  {
    std::istringstream ls(line);
    ls >> word;
    if (word != "alphabet") fail("expected alphabet");
    while (ls >> word) symbols.push_back(word);
  }
  SeqModelConfig cfg;
  if (!(in >> word >> cfg.order) || word != "order") fail("expected order");
  if (!(in >> word >> cfg.kappa) || word != "kappa") fail("expected kappa");
  in >> word;
  if (word != "weights") fail("expected weights");
  cfg.weights.assign(static_cast<std::size_t>(cfg.order), 0.0);
  for (auto& w : cfg.weights)
    if (!(in >> w)) fail("short weights");
  if (!(in >> word >> cfg.max_len) || word != "max_len") fail("expected max_len");
  if (!(in >> word >> cfg.shared_weight) || word != "shared_weight") fail("expected shared_weight");

  SeqModel model(Alphabet(std::move(symbols)), cfg);
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "rows") fail("expected rows");
  const std::size_t width = model.alphabet_.size() + 1;
  for (std::size_t r = 0; r < n; ++r) {
    std::uint64_t feature = 0;
    int order = 0;
    if (!(in >> feature >> order) || order < 1 || order > cfg.order) fail("bad row header");
    std::uint64_t k = (feature << 40) | (static_cast<std::uint64_t>(order) << 36);
    for (int j = order - 1; j >= 1; --j) {
      std::uint64_t t = 0;
      in >> t;
      k |= (t & 0x3F) << (6 * (j - 1));
    }
    in >> word;
    if (word != ":") fail("expected ':'");
    auto idx = static_cast<std::uint32_t>(model.totals_.size());
    model.rows_.emplace(k, idx);
    model.counts_.resize(model.counts_.size() + width);
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < width; ++t) {
      if (!(in >> model.counts_[idx * width + t])) fail("short count row");
      total += model.counts_[idx * width + t];
    }
    model.totals_.push_back(total);
  }
  if (!(in >> word >> model.total_weight_) || word != "total_weight") fail("expected total_weight");
  return model;
}

}  // namespace ita

#include "ita/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ita/generator.hpp"

namespace ita::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Substream tags under the master seed.
constexpr std::uint64_t kDataTag = 1, kProxyTag = 2, kTrainTag = 3, kEvalTag = 4, kIdealTag = 5;

constexpr const char* kManifestFormat = "ita-data";
constexpr int kManifestVersion = 1;

template <class E>
struct Names {
  E value;
  std::string_view name;
};

constexpr Names<Domain> kDomains[] = {{Domain::kToymol, "toymol"}, {Domain::kGridlang, "gridlang"}};
constexpr Names<Setting> kSettings[] = {{Setting::kConditional, "conditional"},
                                        {Setting::kUnconditional, "unconditional"}};
constexpr Names<Ablation> kAblations[] = {
    {Ablation::kBaseline, "baseline"},   {Ablation::kTestOnly, "test_only"},
    {Ablation::kTrainOnly, "train_only"}, {Ablation::kFull, "full"},
    {Ablation::kNoFilter, "no_filter"},   {Ablation::kDupe, "dupe"},
    {Ablation::kKeepTargets, "keep_targets"}, {Ablation::kIdeal, "ideal"}};

template <class E, std::size_t N>
std::string_view name_of(const Names<E> (&table)[N], E v) {
  for (const auto& n : table)
    if (n.value == v) return n.name;
  return "?";
}

template <class E, std::size_t N>
E value_of(const Names<E> (&table)[N], std::string_view s, const char* what) {
  for (const auto& n : table)
    if (n.name == s) return n.value;
  std::string known;
  for (const auto& n : table) known += (known.empty() ? "" : ", ") + std::string(n.name);
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " +
                              known + ")");
}

// Rejects keys of `j` outside `allowed`; `where` names the object in errors.
void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

bool evaluates_with_filter(Ablation a) {
  return a != Ablation::kBaseline && a != Ablation::kTrainOnly && a != Ablation::kNoFilter;
}

bool augments(Ablation a) { return a != Ablation::kBaseline && a != Ablation::kTestOnly; }

std::size_t eval_attempts(const ExperimentConfig& cfg) {
  return evaluates_with_filter(cfg.ablation) ? cfg.augment.L : 1;
}

AugmentConfig effective_augment(const ExperimentConfig& cfg, unsigned workers) {
  AugmentConfig a = cfg.augment;
  a.workers = workers;
  if (!augments(cfg.ablation)) a.n2 = 0;
  if (cfg.ablation == Ablation::kDupe) a.dedupe = false;
  if (cfg.ablation == Ablation::kKeepTargets) a.keep_targets_across_epochs = true;
  return a;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::ifstream open_read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

template <class Fn>
void for_each_json_line(const fs::path& path, Fn fn) {
  auto in = open_read(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<toymol::LabeledMolecule> proxy_training_set(const ExperimentData& d) {
  // Labeled molecules the proxy may learn from: both sides of the training
  // pairs, plus the unlabeled pool in the unconditional setting (low-property
  // examples that the target-only data lacks).
  std::vector<toymol::LabeledMolecule> mols;
  for (const auto& p : d.mol_train.pairs) {
    if (d.mode == Setting::kConditional) mols.push_back({p.source, toymol::f0(p.source)});
    mols.push_back({p.target, toymol::f0(p.target)});
  }
  if (d.mode == Setting::kUnconditional)
    for (const auto& x : d.mol_train.unlabeled) mols.push_back({x, toymol::f0(x)});
  return mols;
}

toymol::ProxyPredictor fit_base_proxy(const ExperimentConfig& cfg, const ExperimentData& d) {
  auto mols = proxy_training_set(d);
  if (mols.size() < 2) return toymol::ProxyPredictor();
  return toymol::fit_proxy(mols, cfg.proxy_fit, SeedStream(cfg.seed).child(kProxyTag));
}

struct PropertyChoice {
  toymol::PropertyModel model;
  double rmse = 0.0;
};

PropertyChoice choose_property(const ExperimentConfig& cfg, const ExperimentData& d) {
  if (cfg.proxy.oracle) return {toymol::PropertyModel::ground_truth(), 0.0};
  if (cfg.proxy.level) {
    auto mols = proxy_training_set(d);
    auto rungs = toymol::degrade_proxy(mols, cfg.proxy_fit, cfg.proxy.knob, {*cfg.proxy.level},
                                       SeedStream(cfg.seed).child(kProxyTag));
    auto p = std::make_shared<toymol::ProxyPredictor>(rungs.front().predictor);
    return {toymol::PropertyModel(p), rungs.front().rmse};
  }
  if (d.proxy.weights().empty())
    throw std::runtime_error("no proxy predictor available (dataset too small to fit one)");
  return {toymol::PropertyModel(std::make_shared<toymol::ProxyPredictor>(d.proxy)),
          d.proxy.heldout_rmse()};
}

std::unique_ptr<TargetFilter<TokenSeq>> mol_filter(const ExperimentConfig& cfg,
                                                   const toymol::PropertyModel& property) {
  auto task = toymol::TaskSpec::by_name(cfg.task);
  if (cfg.mode == Setting::kConditional) return std::make_unique<toymol::MolFilter>(task, property);
  return std::make_unique<toymol::PropertyFilter>(task.beta, property);
}

template <class Input>
std::size_t n_augmented_sources(const Dataset<Input>& d) {
  std::size_t n = d.unlabeled.size();
  for (const auto& p : d.pairs) n += p.origin == Origin::kGold ? 1 : 0;
  return n;
}

template <class Input>
void train_generic(CountGenerator<Input>& g, const Dataset<Input>& d, const TargetFilter<Input>& train_filter,
                   const ExperimentConfig& cfg, const RunOptions& opts, TrainResult& out) {
  const AugmentConfig ac = effective_augment(cfg, opts.workers);
  const SeedStream seed = SeedStream(cfg.seed).child(kTrainTag);
  if (cfg.ablation != Ablation::kIdeal) {
    out.epochs = ita::train(g, d, train_filter, ac, seed, opts.on_epoch);
    return;
  }
  // K' comes from the iterative run this variant is compared against.
  CountGenerator<Input> iterative = g;
  auto history = ita::train(iterative, d, train_filter, ac, seed);
  const std::size_t distinct = history.empty() ? 0 : history.back().cumulative_distinct;
  out.k_prime = std::max<std::size_t>(1, ideal_k_prime(distinct, n_augmented_sources(d)));

  AugmentConfig boot = ac;
  boot.n2 = 0;
  out.epochs = ita::train(g, d, train_filter, boot, seed, opts.on_epoch);
  auto stats = train_ideal(g, d, train_filter, out.k_prime, cfg.ideal_c,
                           SeedStream(cfg.seed).child(kIdealTag), opts.workers);
  stats.epoch = ac.n1 + 1;
  out.epochs.push_back(stats);
  if (opts.on_epoch) opts.on_epoch(stats);
}

Dataset<TokenSeq> mol_training_set(const ExperimentConfig& cfg, const ExperimentData& d) {
  Dataset<TokenSeq> out = d.mol_train;
  if (cfg.mode == Setting::kUnconditional) {
    out.unlabeled.clear();
    return out;
  }
  if (!cfg.use_unlabeled) out.unlabeled.clear();
  if (cfg.transductive) out.unlabeled.insert(out.unlabeled.end(), d.mol_test.begin(), d.mol_test.end());
  return out;
}

Dataset<gridlang::GivenSpec> grid_training_set(const ExperimentConfig& cfg, const ExperimentData& d) {
  Dataset<gridlang::GivenSpec> out;
  for (const auto& t : d.grid_train)
    out.pairs.push_back({t.spec, gridlang::to_tokens(t.gold), Origin::kGold,
                         static_cast<std::uint32_t>(out.pairs.size())});
  if (cfg.use_unlabeled) out.unlabeled = d.grid_unlabeled;
  if (cfg.transductive)
    for (const auto& t : d.grid_test) out.unlabeled.push_back(t.spec);
  return out;
}

Featurizer<gridlang::GivenSpec> grid_featurizer() {
  return [](const gridlang::GivenSpec& s) { return gridlang::featurize(s); };
}

Featurizer<TokenSeq> mol_featurizer(Setting mode) {
  return [mode](const TokenSeq& x) { return mol_feature(mode, x); };
}

void check_match(const ExperimentConfig& cfg, const ExperimentData& d) {
  if (cfg.domain != d.domain || cfg.mode != d.mode)
    throw std::invalid_argument("config/data mismatch: config is " + std::string(to_string(cfg.domain)) + "/" +
                                std::string(to_string(cfg.mode)) + ", data is " +
                                std::string(to_string(d.domain)) + "/" + std::string(to_string(d.mode)));
}

json maybe(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json epoch_to_json(const EpochStats& s) {
  return {{"epoch", s.epoch},
          {"phase", std::string(to_string(s.phase))},
          {"candidates_sampled", s.candidates_sampled},
          {"candidates_passing", s.candidates_passing},
          {"candidates_accepted", s.candidates_accepted},
          {"pads_added", s.pads_added},
          {"sources_short", s.sources_short},
          {"dataset_size", s.dataset_size},
          {"pass_rate", s.pass_rate},
          {"train_log_likelihood", s.train_log_likelihood},
          {"cumulative_distinct", s.cumulative_distinct},
          {"cold_start", s.cold_start}};
}

}  // namespace

std::string_view to_string(Domain d) { return name_of(kDomains, d); }
std::string_view to_string(Setting s) { return name_of(kSettings, s); }
std::string_view to_string(Ablation a) { return name_of(kAblations, a); }
Domain domain_from_string(std::string_view s) { return value_of(kDomains, s, "domain"); }
Setting setting_from_string(std::string_view s) { return value_of(kSettings, s, "mode"); }
Ablation ablation_from_string(std::string_view s) { return value_of(kAblations, s, "ablation"); }

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> all = [] {
    std::vector<Ablation> v;
    for (const auto& n : kAblations) v.push_back(n.value);
    return v;
  }();
  return all;
}

std::uint32_t mol_feature(Setting mode, const TokenSeq& x) {
  return mode == Setting::kConditional ? toymol::featurize(x) : 0u;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::defaults(Domain domain, Setting mode) {
  ExperimentConfig c;
  c.domain = domain;
  c.mode = mode;
  c.model.shared_weight = 0.2;
  if (domain == Domain::kGridlang) {
    c.augment = AugmentConfig::program_defaults();
    c.augment.Z = 1;
    c.augment.n2 = 10;
  } else if (mode == Setting::kUnconditional) {
    c.augment = AugmentConfig::unconditional_defaults();
    c.n_pairs = 1000;
    c.n_unlabeled = 1000;
    c.n_test = 0;
    c.model.shared_weight = 0.0;  // a single conditioning value: nothing to back off to
  } else {
    c.augment = AugmentConfig::string_defaults();
  }
  return c;
}

void ExperimentConfig::validate() const {
  model.validate();
  augment.validate();
  toymol::TaskSpec::by_name(task).validate();
  if (domain == Domain::kGridlang && mode != Setting::kConditional)
    throw std::invalid_argument("gridlang supports only the conditional mode");
  if (transductive && mode != Setting::kConditional)
    throw std::invalid_argument("transductive implies the conditional mode");
  if (use_unlabeled && mode != Setting::kConditional)
    throw std::invalid_argument("an unlabeled pool is only used in the conditional mode");
  if (ablation == Ablation::kIdeal && mode != Setting::kConditional)
    throw std::invalid_argument("the ideal ablation is defined for the conditional mode");
  if (n_uniqueness == 0) throw std::invalid_argument("n_uniqueness must be >= 1");
  if (ideal_c == 0) throw std::invalid_argument("ideal_c must be >= 1");
  if (proxy.level && (proxy.oracle || domain != Domain::kToymol))
    throw std::invalid_argument("a degraded proxy level needs the toymol domain and oracle=false");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, {"domain", "mode", "task", "ablation", "seed", "model", "augment", "eval", "data", "proxy",
                 "ideal_c", "grid", "program"},
             "config");
  Domain domain = domain_from_string(j.value("domain", std::string("toymol")));
  Setting mode = setting_from_string(j.value("mode", std::string("conditional")));
  ExperimentConfig c = defaults(domain, mode);
  read_opt(j, "task", c.task);
  if (j.contains("ablation")) c.ablation = ablation_from_string(j.at("ablation").get<std::string>());
  read_opt(j, "seed", c.seed);
  read_opt(j, "ideal_c", c.ideal_c);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"order", "kappa", "weights", "max_len", "shared_weight"}, "model");
    read_opt(m, "order", c.model.order);
    read_opt(m, "kappa", c.model.kappa);
    read_opt(m, "max_len", c.model.max_len);
    read_opt(m, "shared_weight", c.model.shared_weight);
    if (m.contains("weights")) {
      c.model.weights = m.at("weights").get<std::vector<double>>();
    } else if (m.contains("order") && c.model.order != 3) {
      // Geometric weights, highest order first, when only the order changes.
      c.model.weights.assign(static_cast<std::size_t>(c.model.order), 0.0);
      double sum = 0.0;
      for (int k = 0; k < c.model.order; ++k) sum += c.model.weights[k] = std::pow(0.5, k);
      for (auto& w : c.model.weights) w /= sum;
    }
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    check_keys(a, {"K", "C", "n1", "n2", "shard_fraction", "keep_gold_after_bootstrap", "pad_with_gold"},
               "augment");
    read_opt(a, "K", c.augment.K);
    read_opt(a, "C", c.augment.C);
    read_opt(a, "n1", c.augment.n1);
    read_opt(a, "n2", c.augment.n2);
    read_opt(a, "shard_fraction", c.augment.shard_fraction);
    read_opt(a, "keep_gold_after_bootstrap", c.augment.keep_gold_after_bootstrap);
    read_opt(a, "pad_with_gold", c.augment.pad_with_gold);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, {"Z", "L", "n_uniqueness"}, "eval");
    read_opt(e, "Z", c.augment.Z);
    read_opt(e, "L", c.augment.L);
    read_opt(e, "n_uniqueness", c.n_uniqueness);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"n_pairs", "n_unlabeled", "n_test", "n_tasks", "n_test_tasks", "use_unlabeled",
                   "transductive"},
               "data");
    read_opt(d, "n_pairs", c.n_pairs);
    read_opt(d, "n_unlabeled", c.n_unlabeled);
    read_opt(d, "n_test", c.n_test);
    read_opt(d, "n_tasks", c.n_tasks);
    read_opt(d, "n_test_tasks", c.n_test_tasks);
    read_opt(d, "use_unlabeled", c.use_unlabeled);
    read_opt(d, "transductive", c.transductive);
  }
  if (j.contains("proxy")) {
    const auto& p = j.at("proxy");
    check_keys(p, {"oracle", "knob", "level", "ridge_lambda", "holdout_fraction"}, "proxy");
    read_opt(p, "oracle", c.proxy.oracle);
    if (p.contains("knob")) c.proxy.knob = toymol::degrade_knob_from_string(p.at("knob").get<std::string>());
    if (p.contains("level") && !p.at("level").is_null()) c.proxy.level = p.at("level").get<double>();
    read_opt(p, "ridge_lambda", c.proxy_fit.ridge_lambda);
    read_opt(p, "holdout_fraction", c.proxy_fit.holdout_fraction);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"min_side", "max_side", "wall_density", "marker_density", "max_initial_markers", "n_given",
                   "n_heldout"},
               "grid");
    read_opt(g, "min_side", c.grid.min_side);
    read_opt(g, "max_side", c.grid.max_side);
    read_opt(g, "wall_density", c.grid.wall_density);
    read_opt(g, "marker_density", c.grid.marker_density);
    read_opt(g, "max_initial_markers", c.grid.max_initial_markers);
    read_opt(g, "n_given", c.grid.n_given);
    read_opt(g, "n_heldout", c.grid.n_heldout);
  }
  if (j.contains("program")) {
    const auto& p = j.at("program");
    check_keys(p, {"max_depth", "max_len", "max_statements", "max_body_statements", "p_control", "step_budget"},
               "program");
    read_opt(p, "max_depth", c.program.limits.max_depth);
    read_opt(p, "max_len", c.program.limits.max_len);
    read_opt(p, "max_statements", c.program.max_statements);
    read_opt(p, "max_body_statements", c.program.max_body_statements);
    read_opt(p, "p_control", c.program.p_control);
    read_opt(p, "step_budget", c.program.step_budget);
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["domain"] = std::string(to_string(domain));
  j["mode"] = std::string(to_string(mode));
  j["task"] = task;
  j["ablation"] = std::string(to_string(ablation));
  j["seed"] = seed;
  j["ideal_c"] = ideal_c;
  j["model"] = {{"order", model.order},
                {"kappa", model.kappa},
                {"weights", model.weights},
                {"max_len", model.max_len},
                {"shared_weight", model.shared_weight}};
  j["augment"] = {{"K", augment.K},
                  {"C", augment.C},
                  {"n1", augment.n1},
                  {"n2", augment.n2},
                  {"shard_fraction", augment.shard_fraction},
                  {"keep_gold_after_bootstrap", augment.keep_gold_after_bootstrap},
                  {"pad_with_gold", augment.pad_with_gold}};
  j["eval"] = {{"Z", augment.Z}, {"L", augment.L}, {"n_uniqueness", n_uniqueness}};
  j["data"] = {{"n_pairs", n_pairs},         {"n_unlabeled", n_unlabeled},
               {"n_test", n_test},           {"n_tasks", n_tasks},
               {"n_test_tasks", n_test_tasks}, {"use_unlabeled", use_unlabeled},
               {"transductive", transductive}};
  j["proxy"] = {{"oracle", proxy.oracle},
                {"knob", std::string(toymol::to_string(proxy.knob))},
                {"level", proxy.level ? json(*proxy.level) : json(nullptr)},
                {"ridge_lambda", proxy_fit.ridge_lambda},
                {"holdout_fraction", proxy_fit.holdout_fraction}};
  j["grid"] = {{"min_side", grid.min_side},
               {"max_side", grid.max_side},
               {"wall_density", grid.wall_density},
               {"marker_density", grid.marker_density},
               {"max_initial_markers", grid.max_initial_markers},
               {"n_given", grid.n_given},
               {"n_heldout", grid.n_heldout}};
  j["program"] = {{"max_depth", program.limits.max_depth},
                  {"max_len", program.limits.max_len},
                  {"max_statements", program.max_statements},
                  {"max_body_statements", program.max_body_statements},
                  {"p_control", program.p_control},
                  {"step_budget", program.step_budget}};
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  auto in = open_read(path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  try {
    return ExperimentConfig::from_json(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Data

ExperimentData generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.domain = cfg.domain;
  d.mode = cfg.mode;
  const SeedStream seed = SeedStream(cfg.seed).child(kDataTag);
  if (cfg.domain == Domain::kGridlang) {
    d.grid_train = gridlang::generate_tasks(cfg.n_tasks, cfg.grid, cfg.program, seed.child(1));
    d.grid_test = gridlang::generate_tasks(cfg.n_test_tasks, cfg.grid, cfg.program, seed.child(2));
    for (auto& t : gridlang::generate_tasks(cfg.n_unlabeled, cfg.grid, cfg.program, seed.child(3)))
      d.grid_unlabeled.push_back(std::move(t.spec));
    return d;
  }
  const auto task = toymol::TaskSpec::by_name(cfg.task);
  if (cfg.mode == Setting::kConditional) {
    auto mol = toymol::synthesize_dataset(task, cfg.n_pairs, cfg.n_unlabeled, cfg.n_test, cfg.synthesis, seed);
    d.mol_train = std::move(mol.train);
    d.mol_test = std::move(mol.test_sources);
  } else {
    auto targets = toymol::synthesize_targets(task.beta, cfg.n_pairs, cfg.synthesis, seed);
    std::vector<std::pair<TokenSeq, TokenSeq>> labeled;
    for (auto& y : targets) labeled.emplace_back(TokenSeq{}, std::move(y));
    auto pool = toymol::synthesize_dataset(task, 0, cfg.n_unlabeled, 0, cfg.synthesis, seed);
    d.mol_train = make_dataset(std::move(labeled), std::move(pool.train.unlabeled));
  }
  d.proxy = fit_base_proxy(cfg, d);
  return d;
}

void write_data(const ExperimentData& d, const ExperimentConfig& cfg, const fs::path& dir) {
  check_match(cfg, d);
  fs::create_directories(dir);
  json counts, files = json::array();
  auto add = [&](const char* name, const std::function<void(std::ostream&)>& body) {
    write_file(dir / name, body);
    files.push_back(name);
  };
  if (d.domain == Domain::kGridlang) {
    add("train_tasks.jsonl", [&](std::ostream& o) { gridlang::write_tasks_jsonl(o, d.grid_train); });
    add("test_tasks.jsonl", [&](std::ostream& o) { gridlang::write_tasks_jsonl(o, d.grid_test); });
    add("unlabeled_specs.jsonl", [&](std::ostream& o) { gridlang::write_specs_jsonl(o, d.grid_unlabeled); });
    counts = {{"train_tasks", d.grid_train.size()},
              {"test_tasks", d.grid_test.size()},
              {"unlabeled_specs", d.grid_unlabeled.size()},
              {"given_per_task", cfg.grid.n_given},
              {"heldout_per_task", cfg.grid.n_heldout}};
  } else {
    const bool cond = d.mode == Setting::kConditional;
    add("train.jsonl", [&](std::ostream& o) {
      for (const auto& p : d.mol_train.pairs) {
        json j;
        if (cond) j["x"] = toymol::to_string(p.source);
        j["y"] = toymol::to_string(p.target);
        o << j.dump() << '\n';
      }
    });
    add("unlabeled.jsonl", [&](std::ostream& o) {
      for (const auto& x : d.mol_train.unlabeled) o << json{{"x", toymol::to_string(x)}}.dump() << '\n';
    });
    if (cond)
      add("test.jsonl", [&](std::ostream& o) {
        for (const auto& x : d.mol_test) o << json{{"x", toymol::to_string(x)}}.dump() << '\n';
      });
    add("proxy.json", [&](std::ostream& o) { d.proxy.save(o); });
    counts = {{cond ? "pairs" : "targets", d.mol_train.pairs.size()},
              {"unlabeled", d.mol_train.unlabeled.size()},
              {"test", d.mol_test.size()}};
  }
  json manifest = {{"format", kManifestFormat},
                   {"version", kManifestVersion},
                   {"code_version", std::string(kCodeVersion)},
                   {"domain", std::string(to_string(d.domain))},
                   {"mode", std::string(to_string(d.mode))},
                   {"seed", cfg.seed},
                   {"counts", counts},
                   {"files", files},
                   {"config", cfg.to_json()}};
  if (d.domain == Domain::kToymol) manifest["proxy_heldout_rmse"] = d.proxy.heldout_rmse();
  write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
}

ExperimentData read_data(const ExperimentConfig& cfg, const fs::path& dir) {
  json manifest;
  {
    auto in = open_read(dir / "manifest.json");
    manifest = json::parse(in);
  }
  if (manifest.value("format", std::string()) != kManifestFormat)
    throw std::runtime_error((dir / "manifest.json").string() + " is not a data manifest");
  if (manifest.value("version", 0) != kManifestVersion)
    throw std::runtime_error("unsupported data manifest version");
  ExperimentData d;
  d.domain = domain_from_string(manifest.at("domain").get<std::string>());
  d.mode = setting_from_string(manifest.at("mode").get<std::string>());
  check_match(cfg, d);
  if (d.domain == Domain::kGridlang) {
    {
      auto in = open_read(dir / "train_tasks.jsonl");
      d.grid_train = gridlang::read_tasks_jsonl(in);
    }
    {
      auto in = open_read(dir / "test_tasks.jsonl");
      d.grid_test = gridlang::read_tasks_jsonl(in);
    }
    {
      auto in = open_read(dir / "unlabeled_specs.jsonl");
      d.grid_unlabeled = gridlang::read_specs_jsonl(in);
    }
    return d;
  }
  const bool cond = d.mode == Setting::kConditional;
  std::vector<std::pair<TokenSeq, TokenSeq>> labeled;
  std::vector<TokenSeq> unlabeled;
  auto molecule = [](const json& j, const char* key) {
    auto s = toymol::parse(j.at(key).get<std::string>());
    return s;
  };
  for_each_json_line(dir / "train.jsonl", [&](const json& j) {
    labeled.emplace_back(cond ? molecule(j, "x") : TokenSeq{}, molecule(j, "y"));
  });
  for_each_json_line(dir / "unlabeled.jsonl", [&](const json& j) { unlabeled.push_back(molecule(j, "x")); });
  if (cond)
    for_each_json_line(dir / "test.jsonl", [&](const json& j) { d.mol_test.push_back(molecule(j, "x")); });
  d.mol_train = make_dataset(std::move(labeled), std::move(unlabeled));
  auto in = open_read(dir / "proxy.json");
  d.proxy = toymol::ProxyPredictor::load(in);
  return d;
}

// ---------------------------------------------------------------------------
// Train / evaluate

TrainResult train(const ExperimentConfig& cfg, const ExperimentData& d, const RunOptions& opts) {
  cfg.validate();
  check_match(cfg, d);
  TrainResult out;
  if (cfg.domain == Domain::kGridlang) {
    CountGenerator<gridlang::GivenSpec> g(gridlang::alphabet(), cfg.model, grid_featurizer());
    const auto data = grid_training_set(cfg, d);
    gridlang::SpecFilter spec_filter({}, cfg.program.step_budget);
    AcceptAllFilter<gridlang::GivenSpec> accept_all;
    const TargetFilter<gridlang::GivenSpec>& f =
        cfg.ablation == Ablation::kNoFilter ? static_cast<const TargetFilter<gridlang::GivenSpec>&>(accept_all)
                                            : spec_filter;
    train_generic(g, data, f, cfg, opts, out);
    out.model = g.model();
    return out;
  }
  auto property = choose_property(cfg, d);
  out.proxy_rmse = property.rmse;
  auto filter = mol_filter(cfg, property.model);
  AcceptAllFilter<TokenSeq> accept_all;
  const TargetFilter<TokenSeq>& f = cfg.ablation == Ablation::kNoFilter
                                        ? static_cast<const TargetFilter<TokenSeq>&>(accept_all)
                                        : *filter;
  CountGenerator<TokenSeq> g(toymol::alphabet(), cfg.model, mol_featurizer(cfg.mode));
  train_generic(g, mol_training_set(cfg, d), f, cfg, opts, out);
  out.model = g.model();
  return out;
}

Metrics evaluate(const ExperimentConfig& cfg, const ExperimentData& d, const SeqModel& model,
                 const RunOptions& opts) {
  cfg.validate();
  check_match(cfg, d);
  Metrics m;
  const std::size_t L = eval_attempts(cfg);
  const SeedStream seed = SeedStream(cfg.seed).child(kEvalTag);
  if (cfg.domain == Domain::kGridlang) {
    CountGenerator<gridlang::GivenSpec> g(model, grid_featurizer());
    m.top1 = gridlang::top1_generalization(g, d.grid_test, L, seed, opts.workers, cfg.program.step_budget);
    return m;
  }
  CountGenerator<TokenSeq> g(model, mol_featurizer(cfg.mode));
  auto property = choose_property(cfg, d);
  auto predict_filter = mol_filter(cfg, property.model);
  auto truth = mol_filter(cfg, toymol::PropertyModel::ground_truth());
  if (cfg.mode == Setting::kConditional) {
    auto preds = predict_all<TokenSeq>(d.mol_test, g, *predict_filter, cfg.augment.Z, L, seed, opts.workers);
    m.success = success_rate<TokenSeq>(preds, d.mol_test, *truth);
    m.diversity = diversity<TokenSeq>(preds, d.mol_test, *truth, [](const TokenSeq& a, const TokenSeq& b) {
      return toymol::tanimoto(a, b);
    });
  } else {
    const TokenSeq none;
    auto draws = filtered_draws(g, none, cfg.n_uniqueness, seed, opts.workers, predict_filter.get(), L);
    m.success = draw_success<TokenSeq>(draws, none, *truth);
    m.uniqueness = draw_uniqueness<TokenSeq>(draws, none, *truth);
  }
  return m;
}

MetricsReport run(const ExperimentConfig& cfg, const ExperimentData& d, const RunOptions& opts) {
  auto tr = train(cfg, d, opts);
  MetricsReport r;
  r.epochs = std::move(tr.epochs);
  r.metrics = evaluate(cfg, d, tr.model, opts);
  r.proxy_rmse = tr.proxy_rmse;
  r.config = cfg.to_json();
  r.seed = cfg.seed;
  return r;
}

json MetricsReport::to_json() const {
  json epochs_j = json::array();
  for (const auto& e : epochs) epochs_j.push_back(epoch_to_json(e));
  return {{"format", "ita-metrics"},
          {"code_version", std::string(kCodeVersion)},
          {"seed", seed},
          {"config", config},
          {"proxy_rmse", proxy_rmse},
          {"metrics",
           {{"success", maybe(metrics.success)},
            {"diversity", maybe(metrics.diversity)},
            {"uniqueness", maybe(metrics.uniqueness)},
            {"top1_generalization", maybe(metrics.top1)}}},
          {"epochs", epochs_j}};
}

std::vector<std::string> MetricsReport::violations() const {
  std::vector<std::string> out;
  auto check = [&](const char* name, const std::optional<double>& v) {
    if (v && !(*v >= 0.0 && *v <= 1.0)) out.push_back(std::string(name) + " outside [0, 1]");
  };
  check("success", metrics.success);
  check("diversity", metrics.diversity);
  check("uniqueness", metrics.uniqueness);
  check("top1_generalization", metrics.top1);
  for (const auto& e : epochs)
    if (!(e.pass_rate >= 0.0 && e.pass_rate <= 1.0))
      out.push_back("epoch " + std::to_string(e.epoch) + " pass_rate outside [0, 1]");
  return out;
}

void write_epochs_csv(std::ostream& out, const std::vector<EpochStats>& epochs) {
  out << "epoch,phase,candidates_sampled,candidates_passing,candidates_accepted,pads_added,"
         "sources_short,dataset_size,pass_rate,train_log_likelihood,cumulative_distinct\n";
  char buf[64];
  for (const auto& e : epochs) {
    out << e.epoch << ',' << to_string(e.phase) << ',' << e.candidates_sampled << ',' << e.candidates_passing
        << ',' << e.candidates_accepted << ',' << e.pads_added << ',' << e.sources_short << ','
        << e.dataset_size << ',';
    std::snprintf(buf, sizeof buf, "%.10g,%.10g", e.pass_rate, e.train_log_likelihood);
    out << buf << ',' << e.cumulative_distinct << '\n';
  }
}

}  // namespace ita::experiment

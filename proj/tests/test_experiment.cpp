#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ita/experiment.hpp"
#include "metric_fixtures.hpp"

using namespace ita;
using namespace ita::experiment;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_conditional() {
  auto c = ExperimentConfig::defaults(Domain::kToymol, ita::Setting::kConditional);
  c.n_pairs = 150;
  c.n_unlabeled = 40;
  c.n_test = 60;
  c.augment.n1 = 2;
  c.augment.n2 = 2;
  c.augment.Z = 5;
  c.ideal_c = 100;
  return c;
}

ExperimentConfig tiny_unconditional() {
  auto c = ExperimentConfig::defaults(Domain::kToymol, ita::Setting::kUnconditional);
  c.n_pairs = 80;
  c.n_unlabeled = 80;
  c.augment.n2 = 2;
  c.n_uniqueness = 400;
  return c;
}

ExperimentConfig tiny_grid() {
  auto c = ExperimentConfig::defaults(Domain::kGridlang, ita::Setting::kConditional);
  c.n_tasks = 30;
  c.n_test_tasks = 20;
  c.n_unlabeled = 10;
  c.augment.n1 = 1;
  c.augment.n2 = 1;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("ita_test_" + name);
  fs::remove_all(d);
  return d;
}

bool in_unit(const std::optional<double>& v) { return v && *v >= 0.0 && *v <= 1.0; }

}  // namespace

TEST_CASE("every ablation runs on a tiny conditional config") {
  auto base = tiny_conditional();
  auto data = generate_data(base);
  for (auto a : all_ablations()) {
    CAPTURE(to_string(a));
    auto cfg = base;
    cfg.ablation = a;
    auto tr = train(cfg, data);
    const bool augments = a != Ablation::kBaseline && a != Ablation::kTestOnly;
    std::size_t augment_epochs = 0;
    for (const auto& e : tr.epochs) augment_epochs += e.phase != Phase::kBootstrap;
    CHECK(augment_epochs == (augments ? (a == Ablation::kIdeal ? 1u : cfg.augment.n2) : 0u));
    if (a == Ablation::kIdeal) CHECK(tr.k_prime >= 1);
    auto m = evaluate(cfg, data, tr.model);
    CHECK(in_unit(m.success));
    CHECK(in_unit(m.diversity));
    CHECK_FALSE(m.uniqueness);
    CHECK_FALSE(m.top1);
  }
}

TEST_CASE("no_filter accepts unfiltered candidates") {
  auto cfg = tiny_conditional();
  auto data = generate_data(cfg);
  cfg.ablation = Ablation::kNoFilter;
  auto tr = train(cfg, data);
  const auto& last = tr.epochs.back();
  CHECK(last.candidates_passing == last.candidates_accepted);
  CHECK(last.candidates_accepted == cfg.n_pairs * cfg.augment.K);
}

TEST_CASE("semi-supervised and transductive runs consume their extra sources") {
  auto cfg = tiny_conditional();
  auto data = generate_data(cfg);
  auto full = train(cfg, data).epochs.back();
  cfg.use_unlabeled = true;
  auto semi = train(cfg, data).epochs.back();
  cfg.use_unlabeled = false;
  cfg.transductive = true;
  auto trans = train(cfg, data).epochs.back();
  CHECK(semi.dataset_size > full.dataset_size);
  CHECK(trans.dataset_size > full.dataset_size);
}

TEST_CASE("unconditional ablations") {
  auto base = tiny_unconditional();
  auto data = generate_data(base);
  CHECK(data.mol_test.empty());
  for (auto a : {Ablation::kBaseline, Ablation::kFull, Ablation::kDupe, Ablation::kKeepTargets}) {
    auto cfg = base;
    cfg.ablation = a;
    auto r = run(cfg, data);
    CHECK(in_unit(r.metrics.success));
    CHECK(in_unit(r.metrics.uniqueness));
    CHECK(r.violations().empty());
  }
  auto cfg = base;
  cfg.ablation = Ablation::kIdeal;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("gridlang run reports top-1 only") {
  auto cfg = tiny_grid();
  auto data = generate_data(cfg);
  CHECK(data.grid_train.size() == 30);
  CHECK(data.grid_test.size() == 20);
  CHECK(data.grid_unlabeled.size() == 10);
  auto r = run(cfg, data);
  CHECK(in_unit(r.metrics.top1));
  CHECK_FALSE(r.metrics.success);
}

TEST_CASE("an untrained model scores near zero on task-Q") {
  auto cfg = tiny_conditional();
  cfg.n_test = 200;
  auto data = generate_data(cfg);
  SeqModel uniform(toymol::alphabet(), cfg.model);
  auto m = evaluate(cfg, data, uniform);
  CHECK(*m.success < 0.05);
}

TEST_CASE("data files round-trip and are reproducible") {
  auto cfg = tiny_conditional();
  cfg.seed = 7;
  auto dir = scratch_dir("roundtrip");
  auto data = generate_data(cfg);
  write_data(data, cfg, dir / "a");
  write_data(generate_data(cfg), cfg, dir / "b");
  for (const char* f : {"train.jsonl", "unlabeled.jsonl", "test.jsonl", "proxy.json", "manifest.json"})
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  auto back = read_data(cfg, dir / "a");
  REQUIRE(back.mol_train.pairs.size() == data.mol_train.pairs.size());
  CHECK(back.mol_train.pairs[3].target == data.mol_train.pairs[3].target);
  CHECK(back.mol_test == data.mol_test);
  CHECK(back.proxy.heldout_rmse() == data.proxy.heldout_rmse());
  auto r1 = run(cfg, data), r2 = run(cfg, back);
  CHECK(r1.to_json().dump() == r2.to_json().dump());

  auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["counts"]["pairs"] == 150);
  CHECK(manifest["code_version"] == std::string(kCodeVersion));

  auto grid = tiny_grid();
  CHECK_THROWS_AS(read_data(grid, dir / "a"), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("gridlang manifest counts") {
  auto cfg = ExperimentConfig::defaults(Domain::kGridlang, ita::Setting::kConditional);
  cfg.n_tasks = 500;
  cfg.n_test_tasks = 0;
  cfg.n_unlabeled = 0;
  auto dir = scratch_dir("grid");
  write_data(generate_data(cfg), cfg, dir);
  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["counts"]["train_tasks"] == 500);
  CHECK(manifest["counts"]["given_per_task"] == 5);
  CHECK(manifest["counts"]["heldout_per_task"] == 1);
  std::ifstream in(dir / "train_tasks.jsonl");
  auto tasks = gridlang::read_tasks_jsonl(in);
  CHECK(tasks.size() == 500);
  for (const auto& t : tasks) {
    CHECK(t.spec.given.size() == 5);
    CHECK(t.heldout.size() == 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("empty datasets write valid empty files") {
  auto cfg = tiny_conditional();
  cfg.n_pairs = 0;
  cfg.n_unlabeled = 0;
  cfg.n_test = 0;
  auto dir = scratch_dir("empty");
  auto data = generate_data(cfg);
  write_data(data, cfg, dir);
  CHECK(read_file(dir / "train.jsonl").empty());
  auto back = read_data(cfg, dir);
  CHECK(back.mol_train.pairs.empty());
  CHECK_THROWS(train(cfg, back));
  fs::remove_all(dir);
}

TEST_CASE("config parsing") {
  auto j = nlohmann::json::parse(R"({"domain": "toymol", "mode": "conditional", "ablation": "dupe",
                                     "seed": 9, "augment": {"K": 8}, "eval": {"L": 3},
                                     "model": {"order": 2}})");
  auto c = ExperimentConfig::from_json(j);
  CHECK(c.ablation == Ablation::kDupe);
  CHECK(c.seed == 9);
  CHECK(c.augment.K == 8);
  CHECK(c.augment.L == 3);
  CHECK(c.model.order == 2);
  CHECK(c.model.weights.size() == 2);
  auto echo = ExperimentConfig::from_json(c.to_json());
  CHECK(echo.to_json() == c.to_json());

  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"bogus": 1})")), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"augment": {"k": 1}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"ablation": "nope"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(
                      nlohmann::json::parse(R"({"mode": "unconditional", "data": {"transductive": true}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(nlohmann::json::parse(R"({"domain": "gridlang", "mode": "unconditional"})")),
      std::invalid_argument);
}

TEST_CASE("shipped configs equal the built-in defaults") {
  const fs::path dir = ITA_SOURCE_DIR "/configs";
  struct Expect {
    const char* file;
    Domain domain;
    ita::Setting mode;
  };
  for (auto e : {Expect{"toymol_conditional.json", Domain::kToymol, ita::Setting::kConditional},
                 Expect{"toymol_unconditional.json", Domain::kToymol, ita::Setting::kUnconditional},
                 Expect{"gridlang.json", Domain::kGridlang, ita::Setting::kConditional}}) {
    CAPTURE(e.file);
    auto loaded = load_config(dir / e.file);
    CHECK(loaded.to_json() == ExperimentConfig::defaults(e.domain, e.mode).to_json());
  }
}

TEST_CASE("report echoes config and code version") {
  auto cfg = tiny_conditional();
  cfg.ablation = Ablation::kBaseline;
  auto r = run(cfg, generate_data(cfg));
  auto j = r.to_json();
  CHECK(j["code_version"] == std::string(kCodeVersion));
  CHECK(j["config"] == cfg.to_json());
  CHECK(j["epochs"].size() == cfg.augment.n1);
  CHECK_FALSE(j.dump().find("workers") != std::string::npos);
  MetricsReport bad;
  bad.metrics.success = 1.5;
  CHECK(bad.violations().size() == 1);
}

TEST_CASE("metric oracles") {
  auto failures = fixtures::check_metric_oracles();
  for (const auto& f : failures) FAIL_CHECK(f);
  CHECK(failures.empty());
}

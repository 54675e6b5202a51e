// Command-line experiment runner.
//
//   ita gen-data --config cfg.json --out-dir data/
//   ita train    --config cfg.json --data data/ --out-dir run/
//   ita eval     --config cfg.json --data data/ --model run/model.txt --out-dir run/
//   ita sweep    --config cfg.json --kind k|proxy --out-dir sweep/ [--repeats 3]
//   ita theory   --report prop1|gaussian --out-dir theory/
//
// Exit codes: 0 ok, 1 operational error, 2 property violation.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ita/emtheory.hpp"
#include "ita/experiment.hpp"

namespace fs = std::filesystem;
using namespace ita;
using namespace ita::experiment;

namespace {

constexpr int kExitViolation = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  sub->add_option("--seed", c.seed, "override the master seed");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1u, 256u));
  sub->add_option("--out-dir", c.out_dir, "output directory");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::ofstream create(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

int report_violations(const MetricsReport& r) {
  auto v = r.violations();
  for (const auto& s : v) std::cerr << "violation: " << s << '\n';
  return v.empty() ? 0 : kExitViolation;
}

void print_metrics(const Metrics& m) {
  if (m.success) std::cout << "success " << fmt(m.success) << '\n';
  if (m.diversity) std::cout << "diversity " << fmt(m.diversity) << '\n';
  if (m.uniqueness) std::cout << "uniqueness " << fmt(m.uniqueness) << '\n';
  if (m.top1) std::cout << "top1_generalization " << fmt(m.top1) << '\n';
}

int cmd_gen_data(const Common& c) {
  auto cfg = resolve(c);
  auto data = generate_data(cfg);
  write_data(data, cfg, c.out_dir);
  std::cout << "wrote " << (fs::path(c.out_dir) / "manifest.json").string() << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& data_dir) {
  auto cfg = resolve(c);
  auto data = read_data(cfg, data_dir);
  const fs::path out = c.out_dir;
  auto csv = create(out / "epochs.csv");
  RunOptions opts;
  opts.workers = c.workers;
  auto header_done = false;
  opts.on_epoch = [&](const EpochStats& s) {
    // Streamed so that long runs leave a partial learning curve behind.
    std::ostringstream row;
    write_epochs_csv(row, {s});
    std::string text = row.str();
    if (header_done) text = text.substr(text.find('\n') + 1);
    header_done = true;
    csv << text << std::flush;
  };
  auto tr = train(cfg, data, opts);
  {
    auto model_out = create(out / "model.txt");
    tr.model.save(model_out);
  }
  MetricsReport r;
  r.epochs = tr.epochs;
  r.proxy_rmse = tr.proxy_rmse;
  r.config = cfg.to_json();
  r.seed = cfg.seed;
  auto j = r.to_json();
  if (tr.k_prime) j["k_prime"] = tr.k_prime;
  create(out / "train_report.json") << j.dump(2) << '\n';
  std::cout << "trained " << tr.epochs.size() << " epochs; model at " << (out / "model.txt").string() << '\n';
  return report_violations(r);
}

int cmd_eval(const Common& c, const std::string& data_dir, const std::string& model_path) {
  auto cfg = resolve(c);
  auto data = read_data(cfg, data_dir);
  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + model_path);
  SeqModel model = SeqModel::load(in);
  RunOptions opts;
  opts.workers = c.workers;
  MetricsReport r;
  r.metrics = evaluate(cfg, data, model, opts);
  r.config = cfg.to_json();
  r.seed = cfg.seed;
  if (cfg.domain == Domain::kToymol && !cfg.proxy.oracle) r.proxy_rmse = data.proxy.heldout_rmse();
  create(fs::path(c.out_dir) / "metrics.json") << r.to_json().dump(2) << '\n';
  print_metrics(r.metrics);
  return report_violations(r);
}

struct Rung {
  std::string label;
  ExperimentConfig cfg;
};

std::vector<Rung> sweep_rungs(const ExperimentConfig& base, const std::string& kind,
                              const std::vector<double>& levels) {
  std::vector<Rung> rungs;
  if (kind == "k") {
    for (std::size_t k : {2, 4, 8}) {
      auto c = base;
      c.augment.K = k;
      rungs.push_back({"K=" + std::to_string(k), c});
    }
    return rungs;
  }
  if (base.domain != Domain::kToymol) throw std::invalid_argument("the proxy sweep needs the toymol domain");
  auto oracle = base;
  oracle.proxy.oracle = true;
  oracle.proxy.level.reset();
  rungs.push_back({"oracle", oracle});
  auto fitted = base;
  fitted.proxy.oracle = false;
  fitted.proxy.level.reset();
  rungs.push_back({"base", fitted});
  for (double level : levels) {
    auto d = fitted;
    d.proxy.level = level;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s=%g", std::string(toymol::to_string(d.proxy.knob)).c_str(), level);
    rungs.push_back({buf, d});
  }
  return rungs;
}

int cmd_sweep(const Common& c, const std::string& kind, const std::vector<double>& levels, std::size_t repeats,
              const std::string& data_dir) {
  auto base = resolve(c);
  if (repeats == 0) throw std::invalid_argument("--repeats must be >= 1");
  if (!data_dir.empty() && repeats > 1)
    throw std::invalid_argument("--data fixes one dataset; it cannot be combined with --repeats > 1");
  auto rungs = sweep_rungs(base, kind, levels);
  RunOptions opts;
  opts.workers = c.workers;
  auto csv = create(fs::path(c.out_dir) / ("sweep_" + kind + ".csv"));
  csv << "rung,repeat,seed,proxy_rmse,success,diversity,uniqueness,top1_generalization\n";
  int status = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    auto seeded = base;
    seeded.seed = base.seed + r;
    auto data = data_dir.empty() ? generate_data(seeded) : read_data(seeded, data_dir);
    for (auto& rung : rungs) {
      auto cfg = rung.cfg;
      cfg.seed = seeded.seed;
      auto rep = run(cfg, data, opts);
      char rmse[32];
      std::snprintf(rmse, sizeof rmse, "%.6f", rep.proxy_rmse);
      csv << rung.label << ',' << r << ',' << cfg.seed << ',' << rmse << ',' << fmt(rep.metrics.success) << ','
          << fmt(rep.metrics.diversity) << ',' << fmt(rep.metrics.uniqueness) << ',' << fmt(rep.metrics.top1)
          << '\n'
          << std::flush;
      std::cout << rung.label << " seed " << cfg.seed << ": success " << fmt(rep.metrics.success)
                << (rep.metrics.top1 ? " top1 " + fmt(rep.metrics.top1) : std::string()) << '\n';
      if (report_violations(rep)) status = kExitViolation;
    }
  }
  return status;
}

int theory_prop1(const fs::path& out_dir, double lambda, double alpha0, double eps, std::size_t steps) {
  using namespace ita::emtheory;
  const std::size_t bound = convergence_bound(alpha0, lambda, eps);
  const std::size_t T = std::max(steps, bound + 5);
  auto trace = iterate_alpha(alpha0, lambda, T);
  {
    auto csv = create(out_dir / "prop1.csv");
    write_alpha_csv(csv, trace, lambda);
  }
  std::vector<std::string> bad;
  for (std::size_t t = 0; t < T; ++t) {
    if (trace.alpha[t] < 1.0 && !(trace.alpha[t + 1] > trace.alpha[t]))
      bad.push_back("alpha not increasing at t=" + std::to_string(t));
    if (trace.h_next[t] < trace.h_stay[t] - 1e-10)
      bad.push_back("objective decreased at t=" + std::to_string(t));
  }
  for (std::size_t t = bound; t <= T; ++t)
    if (trace.alpha[t] < 1.0 - eps) bad.push_back("alpha below 1-eps at t=" + std::to_string(t));
  auto verdict = create(out_dir / "prop1_verdict.csv");
  verdict << "lambda,alpha0,eps,bound_t,alpha_at_bound,pass\n";
  verdict << lambda << ',' << alpha0 << ',' << eps << ',' << bound << ',' << trace.alpha[bound] << ','
          << (bad.empty() ? 1 : 0) << '\n';
  std::cout << "bound t=" << bound << " alpha=" << trace.alpha[bound] << (bad.empty() ? " ok" : " VIOLATED")
            << '\n';
  for (const auto& b : bad) std::cerr << "violation: " << b << '\n';
  return bad.empty() ? 0 : kExitViolation;
}

int theory_gaussian(const fs::path& out_dir, std::size_t steps) {
  using namespace ita::emtheory;
  auto trace = gaussian_toy(steps);
  {
    auto csv = create(out_dir / "gaussian.csv");
    write_gaussian_csv(csv, trace);
  }
  std::vector<std::string> bad;
  const double direct = std::sqrt(2.0 / std::numbers::pi);
  if (steps >= 1 && std::abs(trace.mu[1] - direct) > 1e-9) bad.push_back("mu_1 differs from sqrt(2/pi)");
  for (std::size_t t = 0; t < steps; ++t)
    if (!(trace.mu[t + 1] > trace.mu[t])) bad.push_back("mu not increasing at t=" + std::to_string(t));
  for (std::size_t t = 1; t <= steps; ++t)
    if (!(trace.truncated_mean[t] > direct))
      bad.push_back("truncated mean not above direct projection at t=" + std::to_string(t));
  std::cout << "gaussian " << steps << " steps, mu_T=" << trace.mu.back() << (bad.empty() ? " ok" : " VIOLATED")
            << '\n';
  for (const auto& b : bad) std::cerr << "violation: " << b << '\n';
  return bad.empty() ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative target augmentation experiments"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, sweep_c, theory_c;
  std::string train_data, eval_data, eval_model, sweep_data;
  std::string sweep_kind = "k";
  std::vector<double> sweep_levels{0.2, 0.8};
  std::size_t repeats = 1;

  auto* gen = app.add_subcommand("gen-data", "synthesize a dataset and its manifest");
  add_common(gen, gen_c);

  auto* tr = app.add_subcommand("train", "train under the configured ablation");
  add_common(tr, train_c);
  tr->add_option("--data", train_data, "dataset directory")->required()->check(CLI::ExistingDirectory);

  auto* ev = app.add_subcommand("eval", "evaluate a trained model");
  add_common(ev, eval_c);
  ev->add_option("--data", eval_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--model", eval_model, "model file from train")->required()->check(CLI::ExistingFile);

  auto* sw = app.add_subcommand("sweep", "train + eval per rung of a sweep");
  add_common(sw, sweep_c);
  sw->add_option("--kind", sweep_kind, "k: K in {2,4,8}; proxy: oracle, base and degraded rungs")
      ->check(CLI::IsMember({"k", "proxy"}));
  sw->add_option("--levels", sweep_levels, "degradation levels of the proxy sweep");
  sw->add_option("--repeats", repeats, "repeats with seeds seed, seed+1, ...");
  sw->add_option("--data", sweep_data, "reuse a dataset directory (single repeat)")
      ->check(CLI::ExistingDirectory);

  std::string report = "prop1";
  double lambda = 1.0, alpha0 = 0.1, eps = 0.01;
  std::size_t steps = 20;
  auto* th = app.add_subcommand("theory", "numerical checks of the convergence argument");
  add_common(th, theory_c, false);
  th->add_option("--report", report, "prop1 or gaussian")->check(CLI::IsMember({"prop1", "gaussian"}));
  th->add_option("--lambda", lambda)->check(CLI::PositiveNumber);
  th->add_option("--alpha0", alpha0)->check(CLI::Range(1e-12, 1.0 - 1e-12));
  th->add_option("--eps", eps)->check(CLI::Range(1e-12, 1.0 - 1e-12));
  th->add_option("--steps", steps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(gen_c);
    if (*tr) return cmd_train(train_c, train_data);
    if (*ev) return cmd_eval(eval_c, eval_data, eval_model);
    if (*sw) return cmd_sweep(sweep_c, sweep_kind, sweep_levels, repeats, sweep_data);
    if (*th) {
      fs::create_directories(theory_c.out_dir);
      return report == "prop1" ? theory_prop1(theory_c.out_dir, lambda, alpha0, eps, steps)
                               : theory_gaussian(theory_c.out_dir, steps);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

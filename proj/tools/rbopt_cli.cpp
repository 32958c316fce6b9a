// rbopt: detailed solves, basis training, online evaluation and the study
// runner. Exit codes: 0 ok, 2 configuration error, 3 solver failure,
// 4 basis/operator hash mismatch, 1 anything else.

#include <filesystem>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "rbopt/basis_io.hpp"
#include "rbopt/config.hpp"
#include "rbopt/log.hpp"
#include "rbopt/study.hpp"

namespace fs = std::filesystem;
using namespace rbopt;

namespace {

struct Flags {
  std::string config;
  std::string mu;
  int workers = 0;
  std::int64_t seed = -1;
  std::string out;
  std::string measure;
  bool no_supremizers = false;
  bool no_detailed = false;
  std::string basis;
  std::string study;
  bool verbose = false;
  bool quiet = false;
};

RunConfig configure(const Flags& f) {
  RunConfig c = load_config(f.config);
  if (f.workers > 0) c.workers = f.workers;
  if (f.seed >= 0) c.test.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.measure.empty()) {
    try {
      c.measure = measure_from_string(f.measure);
    } catch (const ValidationError& e) {
      throw ConfigError("--measure", e.what());
    }
    if (c.spec.type == OptionType::EuropeanCall && c.measure != ErrorMeasure::L2True)
      throw ConfigError("--measure", "European training uses l2-true");
  }
  if (f.no_supremizers) c.supremizers = false;
  return c;
}

std::vector<ModelParams> mu_list(const RunConfig& c, const std::string& text) {
  std::vector<ModelParams> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(';', start);
    const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(c.parse_mu(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

int cmd_detailed_solve(const Flags& f) {
  const RunConfig c = configure(f);
  const ModelParams mu = f.mu.empty() ? c.box.defaults : c.parse_mu(f.mu);
  mu.validate();
  DiscreteOperators ops(c.spec, c.disc);
  log::info(ops.describe());
  const Trajectory t = solve_detailed(ops, mu, c.pdas);
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  write_trajectory_csv((dir / "trajectory.csv").string(), ops, t);
  if (ops.american()) write_trajectory_csv((dir / "multipliers.csv").string(), ops, t, true);
  TableHeader h{ops.config_hash(), c.run_hash(), std::nullopt, "mu=" + format_mu(mu)};
  auto out = open_table((dir / "summary.csv").string(), h, {"step", "pdas_iterations", "active_nodes"});
  int total = 0, worst = 0;
  for (std::size_t n = 0; n < t.iterations.size(); ++n) {
    out << n + 1 << ',' << t.iterations[n] << ',' << t.active_sizes[n] << '\n';
    total += t.iterations[n];
    worst = std::max(worst, t.iterations[n]);
  }
  std::cout << "mu = " << format_mu(mu) << "\nsteps = " << t.steps() << ", free nodes = " << ops.free_count()
            << "\nPDAS iterations: total " << total << ", max per step " << worst << "\nruntime " << std::fixed
            << std::setprecision(3) << t.seconds << " s\nwritten to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const Flags& f) {
  const RunConfig c = configure(f);
  DiscreteOperators ops(c.spec, c.disc);
  log::info(ops.describe());
  SnapshotStore store(ops, c.pdas, c.cache_dir);
  ConstantsCache constants(ops);
  const TrainingConfig tc = c.training();
  std::cout << "training " << to_string(c.spec.type) << " / " << to_string(c.spec.model) << ", " << tc.train_set.size()
            << " training parameters, N_max = " << c.n_max << ", measure " << to_string(c.measure) << '\n';
  const GreedyResult r = pod_angle_greedy(tc, ops, store, constants);
  BasisFile bf{c.spec, c.disc, c.box, c.measure, r.basis, r.train_error};
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  write_basis((dir / "basis.rb").string(), bf);
  TableHeader h{ops.config_hash(), c.run_hash(), std::nullopt, ""};
  write_provenance_csv((dir / "provenance.csv").string(), bf, h);
  write_train_trace_csv((dir / "train_trace.csv").string(), bf, h);
  write_selection_csv((dir / "selection.csv").string(), bf, h);

  const bool american = ops.american();
  const double beta = american ? constants.beta() : 0.0;
  std::cout << "  k   N_V  N_W  max train error" << (american && r.basis.supremizers ? "   beta_N/beta" : "") << '\n';
  for (std::size_t k = 0; k < r.train_error.size(); ++k) {
    const auto& p = r.basis.provenance[k];
    std::cout << std::setw(3) << p.k << std::setw(6) << p.n_primal << std::setw(5) << p.n_dual << "  " << std::scientific
              << std::setprecision(4) << r.train_error[k];
    if (american && r.basis.supremizers)
      std::cout << "   " << std::fixed << std::setprecision(4) << reduced_inf_sup(r.basis.truncated(k + 1)) / beta;
    std::cout << '\n';
  }
  std::cout << "basis (N_V = " << r.basis.n_primal() << ", N_W = " << r.basis.n_dual() << ") written to "
            << (dir / "basis.rb").string() << ", detailed solves: " << r.detailed_solves << '\n';
  return 0;
}

int cmd_evaluate(const Flags& f) {
  const RunConfig c = configure(f);
  const BasisFile bf = read_basis(f.basis);
  DiscreteOperators ops(c.spec, c.disc);
  const ReducedOperators rops = project_operators(bf.basis, ops);  // HashMismatch -> exit 4
  const std::vector<ModelParams> mus = f.mu.empty() ? c.test_set() : mu_list(c, f.mu);
  if (mus.empty()) throw ConfigError("test.count", "no parameters to evaluate (set test.count/test.mu or --mu)");
  SnapshotStore store(ops, c.pdas, c.cache_dir);
  ConstantsCache constants(ops);
  EvaluateOptions eo{!f.no_detailed, true, c.pdas};
  const auto evals = evaluate_set(rops, mus, eo, &constants, &store, c.workers);
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  TableHeader h{ops.config_hash(), c.run_hash(), c.test.seed,
                "N_V=" + std::to_string(bf.basis.n_primal()) + " N_W=" + std::to_string(bf.basis.n_dual())};
  write_evaluations_csv((dir / "evaluation.csv").string(), evals, c.table_steps, h);

  std::vector<double> l2, en, ap, sec;
  std::vector<std::vector<double>> eff(c.table_steps.size());
  std::size_t failures = 0;
  for (const auto& e : evals) {
    l2.push_back(e.l2_true);
    en.push_back(e.energy_true);
    ap.push_back(e.apost);
    sec.push_back(e.online_seconds);
    failures += !e.failure.empty();
    for (std::size_t j = 0; j < c.table_steps.size(); ++j)
      if (!e.effectivity.empty()) eff[j].push_back(e.effectivity[c.table_steps[j]]);
  }
  auto out = open_table((dir / "evaluation_summary.csv").string(), h, {"quantity", "max", "mean", "undefined"});
  auto row = [&](const std::string& name, const std::vector<double>& v) {
    const Aggregate a = aggregate(v);
    out << name << ',' << fmt(a.max) << ',' << fmt(a.mean) << ',' << a.undefined << '\n';
    std::cout << std::left << std::setw(22) << name << " max " << std::scientific << std::setprecision(4) << a.max
              << "  mean " << a.mean << "  (undefined: " << a.undefined << ")\n";
  };
  std::cout << evals.size() << " parameters, basis N_V = " << bf.basis.n_primal() << ", N_W = " << bf.basis.n_dual() << '\n';
  if (eo.truth) row("l2_true", l2);
  row("energy_true", en);
  row("energy_apost", ap);
  for (std::size_t j = 0; j < c.table_steps.size(); ++j)
    row("effectivity_n" + std::to_string(c.table_steps[j]), eff[j]);
  std::cout << "mean online time " << std::fixed << std::setprecision(6) << aggregate(sec).mean << " s\n";
  if (failures) {
    log::error(std::to_string(failures) + " reduced solves failed; see evaluation.csv");
    return 3;
  }
  return 0;
}

int cmd_study(const Flags& f) {
  const RunConfig c = configure(f);
  const std::string id = f.study.empty() ? c.study : f.study;
  if (id.empty()) throw ConfigError("run.study", "no study id given");
  run_study(id, c, StudyOptions{c.out_dir, c.workers});
  return 0;
}

int cmd_inspect(const Flags& f) {
  const BasisFile bf = read_basis(f.basis);
  const auto& b = bf.basis;
  std::cout << "format version " << kBasisVersion << "\noption " << to_string(bf.spec.type) << " / "
            << to_string(bf.spec.model) << ", K = " << bf.spec.strike << ", T = " << bf.spec.maturity << '\n';
  if (bf.spec.model == ModelKind::BlackScholes)
    std::cout << "mesh S in [" << bf.disc.s_min << ", " << bf.disc.s_max << "], " << bf.disc.nodes << " nodes\n";
  else
    std::cout << "mesh v in [" << bf.disc.heston.v_min << ", " << bf.disc.heston.v_max << "], x in ["
              << bf.disc.heston.x_min << ", " << bf.disc.heston.x_max << "], " << bf.disc.n_v << " x " << bf.disc.n_x
              << " nodes\n";
  std::cout << "L = " << bf.disc.time_steps << ", theta = " << bf.disc.theta << "\nbox:";
  for (auto a : bf.box.active_coords)
    std::cout << ' ' << ModelParams::coordinate_names(bf.spec.model)[a] << " in [" << bf.box.lower[a] << ", "
              << bf.box.upper[a] << "]";
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(b.config_hash));
  std::cout << "\ndefaults " << format_mu(bf.box.defaults) << "\nconfig_hash " << hash << "\nmeasure "
            << to_string(bf.measure) << ", supremizers " << (b.supremizers ? "on" : "off") << "\nN_V = " << b.n_primal()
            << " (" << std::count(b.supremizer.begin(), b.supremizer.end(), 1) << " supremizers), N_W = " << b.n_dual()
            << "\n\n  k   N_V  N_W  step  score        mu\n";
  for (std::size_t i = 0; i < b.provenance.size(); ++i) {
    const auto& p = b.provenance[i];
    std::cout << std::setw(3) << p.k << std::setw(6) << p.n_primal << std::setw(5) << p.n_dual << std::setw(6) << p.step
              << "  " << std::scientific << std::setprecision(4) << p.score << "  " << format_mu(p.mu) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced basis pricing of European and American options"};
  app.require_subcommand(1);
  Flags f;
  app.add_flag("-v,--verbose", f.verbose, "debug logging");
  app.add_flag("-q,--quiet", f.quiet, "warnings and errors only");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run configuration (key = value)")->required()->check(CLI::ExistingFile);
    sub->add_option("--workers", f.workers, "worker threads for parameter sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--out", f.out, "output directory");
  };

  auto* solve = app.add_subcommand("detailed-solve", "detailed solve at one parameter");
  common(solve);
  solve->add_option("--mu", f.mu, "\"v1,v2,...\": full vector or active coordinates (default: params.default)");

  auto* train = app.add_subcommand("train", "greedy basis construction");
  common(train);
  train->add_option("--measure", f.measure, "l2-true | energy-true | energy-apost");
  train->add_flag("--no-supremizers", f.no_supremizers, "skip supremizer enrichment (no inf-sup guarantee)");

  auto* eval = app.add_subcommand("evaluate", "online solves and certification against a basis");
  eval->add_option("basis", f.basis, "basis container")->required()->check(CLI::ExistingFile);
  common(eval);
  eval->add_option("--mu", f.mu, "\"v1,...;w1,...\" explicit parameters instead of the configured test set");
  eval->add_option("--seed", f.seed, "seed of the random test set");
  eval->add_flag("--no-detailed", f.no_detailed, "skip the detailed comparison");

  auto* study = app.add_subcommand("study", "run one of the experiments");
  study->add_option("id", f.study, "study id")->check(CLI::IsMember(study_ids()));
  common(study);
  study->add_option("--seed", f.seed, "seed of the random test set");
  study->add_option("--measure", f.measure, "greedy error measure");
  study->add_flag("--no-supremizers", f.no_supremizers, "skip supremizer enrichment");

  auto* inspect = app.add_subcommand("inspect-basis", "print a basis container header and provenance");
  inspect->add_option("basis", f.basis, "basis container")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (f.verbose) log::set_level(log::Level::Debug);
  if (f.quiet) log::set_level(log::Level::Warn);

  try {
    if (solve->parsed()) return cmd_detailed_solve(f);
    if (train->parsed()) return cmd_train(f);
    if (eval->parsed()) return cmd_evaluate(f);
    if (study->parsed()) return cmd_study(f);
    if (inspect->parsed()) return cmd_inspect(f);
  } catch (const ConfigError& e) {
    log::error(std::string("config: ") + e.what());
    return 2;
  } catch (const ValidationError& e) {
    log::error(std::string("invalid input: ") + e.what());
    return 2;
  } catch (const SolverError& e) {
    log::error(std::string("solver failure: ") + e.what());
    return 3;
  } catch (const HashMismatch& e) {
    log::error(std::string("hash mismatch: ") + e.what());
    return 4;
  } catch (const std::exception& e) {
    log::error(e.what());
    return 1;
  }
  return 1;
}

#include "rbopt/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>

#include <Eigen/Cholesky>

#include "rbopt/log.hpp"
#include "rbopt/sweep.hpp"

namespace rbopt {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? p : buf);
}

std::ofstream open_table(const std::string& path, const TableHeader& h, const std::vector<std::string>& columns) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char hash[40];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(h.config_hash));
  out << "# rbopt " << kVersion << " config_hash=" << hash;
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(h.run_hash));
  out << " run_hash=" << hash;
  if (h.seed) out << " seed=" << *h.seed;
  if (!h.note.empty()) out << " " << h.note;
  out << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  return out;
}

Evaluation evaluate_one(const ReducedOperators& rops, const ModelParams& mu, const EvaluateOptions& opt,
                        ConstantsCache* constants, SnapshotStore* store) {
  Evaluation ev;
  ev.mu = mu;
  Trajectory red;
  try {
    red = solve_reduced(rops, mu, opt.pdas);
  } catch (const SolverError& e) {
    ev.failure = e.what();
    return ev;
  }
  ev.online_seconds = red.seconds;
  std::shared_ptr<const Trajectory> det;
  if (opt.truth) {
    if (!store) throw std::invalid_argument("true errors need a snapshot store");
    det = store->get(mu);
  }
  if (opt.energy) {
    if (!constants) throw std::invalid_argument("energy quantities need stability constants");
    const StabilityConstants c = constants->get(mu);
    ev.alpha = c.alpha;
    if (c.alpha > 0.0) {
      const ErrorReport rep = certify(rops, red, c, det.get());
      ev.apost = rep.bound.total;
      if (rep.truth) {
        ev.l2_true = rep.truth->l2_true;
        ev.energy_true = rep.truth->energy_true;
        for (const auto& e : rep.effectivity) ev.effectivity.push_back(e ? *e : std::numeric_limits<double>::quiet_NaN());
      }
      return ev;
    }
  }
  if (det) ev.l2_true = true_errors(*rops.ops, *det, reconstruct(rops, red), 0.0).l2_true;
  return ev;
}

std::vector<Evaluation> evaluate_set(const ReducedOperators& rops, const std::vector<ModelParams>& mus,
                                     const EvaluateOptions& opt, ConstantsCache* constants, SnapshotStore* store,
                                     int workers) {
  std::vector<Evaluation> out(mus.size());
  parallel_for(mus.size(), workers, [&](std::size_t i) { out[i] = evaluate_one(rops, mus[i], opt, constants, store); });
  return out;
}

std::vector<Evaluation> evaluate_set_serial(const ReducedOperators& rops, const std::vector<ModelParams>& mus,
                                            const EvaluateOptions& opt, ConstantsCache* constants,
                                            SnapshotStore* store) {
  std::vector<Evaluation> out(mus.size());
  serial_for(mus.size(), [&](std::size_t i) { out[i] = evaluate_one(rops, mus[i], opt, constants, store); });
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) {
      ++a.undefined;
      continue;
    }
    a.max = n == 0 ? v : std::max(a.max, v);
    sum += v;
    ++n;
  }
  if (n > 0) a.mean = sum / static_cast<double>(n);
  return a;
}

PrefixProducts prefix_products(const Mat& psi, const DiscreteOperators& ops) {
  PrefixProducts pp;
  pp.x_psi = ops.gram() * psi;
  pp.m_psi = ops.mass() * psi;
  pp.gram = psi.transpose() * pp.x_psi;
  pp.mass = psi.transpose() * pp.m_psi;
  return pp;
}

CompressedTruth compress_truth(const Mat& psi, const PrefixProducts& pp, const DiscreteOperators& ops,
                               const Trajectory& detailed) {
  CompressedTruth t;
  t.mu = detailed.mu;
  t.seconds = detailed.seconds;
  const auto steps = static_cast<Eigen::Index>(detailed.u.size());
  t.coeff.resize(psi.cols(), steps);
  t.rest_m_psi.resize(psi.cols(), steps);
  const Eigen::LDLT<Mat> g(pp.gram);
  for (Eigen::Index n = 0; n < steps; ++n) {
    const Vec& u = detailed.u[static_cast<std::size_t>(n)];
    const Vec c = g.solve(pp.x_psi.transpose() * u);
    const Vec w = u - psi * c;
    t.coeff.col(n) = c;
    t.rest_x_sq.push_back(std::max(0.0, w.dot(ops.gram() * w)));
    t.rest_m_sq.push_back(std::max(0.0, w.dot(ops.mass() * w)));
    t.rest_m_psi.col(n) = pp.m_psi.transpose() * w;
  }
  return t;
}

TrueErrors compressed_errors(const CompressedTruth& t, const PrefixProducts& pp, const Trajectory& reduced,
                             double alpha, double dt) {
  if (static_cast<Eigen::Index>(reduced.u.size()) != t.coeff.cols())
    throw std::invalid_argument("trajectories differ in length");
  TrueErrors out;
  double sum_v = 0.0;
  for (std::size_t n = 0; n < reduced.u.size(); ++n) {
    Vec d = t.coeff.col(static_cast<Eigen::Index>(n));
    d.head(reduced.u[n].size()) -= reduced.u[n];
    const double v = std::max(0.0, d.dot(pp.gram * d) + t.rest_x_sq[n]);
    const double l2 = std::max(0.0, d.dot(pp.mass * d) + 2.0 * d.dot(t.rest_m_psi.col(static_cast<Eigen::Index>(n))) +
                                         t.rest_m_sq[n]);
    out.v_sq.push_back(v);
    out.l2_sq.push_back(l2);
    sum_v += v;
    out.partial.push_back(0.5 * l2 + 0.5 * alpha * dt * sum_v);
  }
  out.l2_true = dt * sum_v;
  out.energy_true = out.partial.back();
  return out;
}

void write_provenance_csv(const std::string& path, const BasisFile& f, const TableHeader& h) {
  std::vector<std::string> cols = {"k"};
  for (const auto& name : ModelParams::coordinate_names(f.spec.model)) cols.push_back(name);
  for (const char* c : {"step", "score", "angle_rad", "N_V", "N_W"}) cols.emplace_back(c);
  auto out = open_table(path, h, cols);
  for (const auto& p : f.basis.provenance) {
    out << p.k;
    for (double v : p.mu.values()) out << ',' << fmt(v);
    out << ',' << p.step << ',' << fmt(p.score) << ',' << fmt(p.angle) << ',' << p.n_primal << ',' << p.n_dual << '\n';
  }
}

void write_train_trace_csv(const std::string& path, const BasisFile& f, const TableHeader& h) {
  auto out = open_table(path, h, {"k", "N_V", "N_W", "max_train_" + std::string(to_string(f.measure)), "reduced_inf_sup"});
  for (std::size_t k = 0; k < f.train_error.size() && k < f.basis.provenance.size(); ++k) {
    const auto& p = f.basis.provenance[k];
    const double beta_n = f.spec.type == OptionType::AmericanPut ? reduced_inf_sup(f.basis.truncated(k + 1))
                                                                 : std::numeric_limits<double>::quiet_NaN();
    out << p.k << ',' << p.n_primal << ',' << p.n_dual << ',' << fmt(f.train_error[k]) << ',' << fmt(beta_n) << '\n';
  }
}

void write_selection_csv(const std::string& path, const BasisFile& f, const TableHeader& h) {
  std::vector<std::string> cols;
  for (auto a : f.box.active_coords) cols.push_back(ModelParams::coordinate_names(f.spec.model)[a]);
  cols.emplace_back("count");
  cols.emplace_back("first_k");
  auto out = open_table(path, h, cols);
  // ordered by first selection
  std::vector<std::pair<std::vector<double>, std::pair<std::size_t, std::size_t>>> seen;
  for (const auto& p : f.basis.provenance) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& e) { return e.first == p.mu.values(); });
    if (it == seen.end()) seen.push_back({p.mu.values(), {1, p.k}});
    else ++it->second.first;
  }
  for (const auto& [mu, c] : seen) {
    for (auto a : f.box.active_coords) out << fmt(mu[a]) << ',';
    out << c.first << ',' << c.second << '\n';
  }
}

void write_evaluations_csv(const std::string& path, const std::vector<Evaluation>& evals,
                           const std::vector<std::size_t>& steps, const TableHeader& h) {
  std::vector<std::string> cols = {"index"};
  const ModelKind kind = evals.empty() ? ModelKind::BlackScholes : evals.front().mu.kind();
  for (const auto& name : ModelParams::coordinate_names(kind)) cols.push_back(name);
  for (const char* c : {"alpha", "l2_true", "energy_true", "energy_apost"}) cols.emplace_back(c);
  for (auto n : steps) cols.push_back("effectivity_n" + std::to_string(n));
  cols.emplace_back("failure");
  auto out = open_table(path, h, cols);
  for (std::size_t i = 0; i < evals.size(); ++i) {
    const auto& e = evals[i];
    out << i;
    for (double v : e.mu.values()) out << ',' << fmt(v);
    out << ',' << fmt(e.alpha) << ',' << fmt(e.l2_true) << ',' << fmt(e.energy_true) << ',' << fmt(e.apost);
    for (auto n : steps)
      out << ',' << (n < e.effectivity.size() ? fmt(e.effectivity[n]) : "nan");
    std::string why = e.failure;
    std::replace(why.begin(), why.end(), ',', ';');
    out << ',' << why << '\n';
  }
}

namespace {

struct StudySpec {
  const char* id;
  ModelKind model;
  OptionType type;
  std::size_t dims;     // active coordinates required, 0 = any
  bool curves;          // test-set error versus basis size
  bool energy;          // energy errors on the test set
  bool train_measures;  // true and a posteriori training errors per iteration
  bool table;           // effectivity table
};

const std::vector<StudySpec>& specs() {
  static const std::vector<StudySpec> s = {
      {"eu-heston-2d", ModelKind::Heston, OptionType::EuropeanCall, 2, true, false, false, false},
      {"eu-heston-3d", ModelKind::Heston, OptionType::EuropeanCall, 3, true, false, false, false},
      {"eu-heston-5d", ModelKind::Heston, OptionType::EuropeanCall, 5, true, false, false, false},
      {"am-heston-2d", ModelKind::Heston, OptionType::AmericanPut, 2, true, false, false, false},
      {"am-bs", ModelKind::BlackScholes, OptionType::AmericanPut, 0, true, true, true, false},
      {"effectivity-bs", ModelKind::BlackScholes, OptionType::AmericanPut, 0, false, false, true, true},
      {"effectivity-heston", ModelKind::Heston, OptionType::AmericanPut, 2, false, false, true, true},
  };
  return s;
}

struct CurvePoint {
  std::size_t k, n_v, n_w;
  Aggregate l2, energy;
  std::size_t failures = 0;
};

// Test-set true errors of every greedy prefix. Each detailed trajectory is
// solved once and compressed against the final basis, so memory stays at
// O(N * L) per parameter.
std::vector<CurvePoint> prefix_curves(const ReducedBasis& basis, const DiscreteOperators& ops,
                                      const std::vector<ModelParams>& mus, const RunConfig& cfg, bool energy,
                                      ConstantsCache& constants, int workers, std::vector<double>& detailed_seconds,
                                      std::vector<double>& online_seconds) {
  const PrefixProducts pp = prefix_products(basis.psi, ops);
  std::vector<CompressedTruth> truth(mus.size());
  parallel_for(mus.size(), workers, [&](std::size_t i) {
    truth[i] = compress_truth(basis.psi, pp, ops, solve_detailed(ops, mus[i], cfg.pdas));
  });
  detailed_seconds.clear();
  for (const auto& t : truth) detailed_seconds.push_back(t.seconds);
  std::vector<double> alpha(mus.size(), 0.0);
  if (energy) parallel_for(mus.size(), workers, [&](std::size_t i) { alpha[i] = constants.get(mus[i]).alpha; });

  std::vector<CurvePoint> curve;
  for (std::size_t k = 1; k <= basis.iterations(); ++k) {
    const ReducedBasis bk = basis.truncated(k);
    const ReducedOperators rops = project_operators(bk, ops);
    std::vector<double> l2(mus.size()), en(mus.size()), secs(mus.size());
    std::vector<char> failed(mus.size(), 0);
    parallel_for(mus.size(), workers, [&](std::size_t i) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      try {
        const Trajectory red = solve_reduced(rops, mus[i], cfg.pdas);
        secs[i] = red.seconds;
        const TrueErrors e = compressed_errors(truth[i], pp, red, std::max(alpha[i], 0.0), ops.dt());
        l2[i] = e.l2_true;
        en[i] = energy && alpha[i] > 0.0 ? e.energy_true : nan;
      } catch (const SolverError& e) {
        log::warn(std::string("test evaluation failed: ") + e.what());
        l2[i] = en[i] = nan;
        failed[i] = 1;
      }
    });
    CurvePoint p{k, bk.n_primal(), bk.n_dual(), aggregate(l2), aggregate(en),
                 static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1))};
    if (!energy) p.energy = Aggregate{};
    curve.push_back(p);
    log::info("prefix " + std::to_string(k) + " (N_V = " + std::to_string(p.n_v) + "): max test l2-true = " + fmt(p.l2.max));
    if (k == basis.iterations()) online_seconds = secs;
  }
  return curve;
}

}  // namespace

const std::vector<std::string>& study_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& s : specs()) v.emplace_back(s.id);
    return v;
  }();
  return ids;
}

void run_study(const std::string& id, const RunConfig& cfg, const StudyOptions& opt) {
  const auto it = std::find_if(specs().begin(), specs().end(), [&](const StudySpec& s) { return id == s.id; });
  if (it == specs().end()) throw ConfigError("study", "unknown study id '" + id + "'");
  const StudySpec& spec = *it;
  if (cfg.spec.model != spec.model || cfg.spec.type != spec.type)
    throw ConfigError("option.model", "study " + id + " needs " + std::string(to_string(spec.type)) + " / " +
                                          std::string(to_string(spec.model)));
  if (spec.dims && cfg.box.active_coords.size() != spec.dims)
    throw ConfigError("params.active", "study " + id + " needs " + std::to_string(spec.dims) + " active coordinates");
  if (spec.curves && cfg.test_set().empty()) throw ConfigError("test.count", "study " + id + " needs a test set");

  namespace fs = std::filesystem;
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  const int workers = opt.workers;

  DiscreteOperators ops(cfg.spec, cfg.disc);
  SnapshotStore store(ops, cfg.pdas, cfg.cache_dir);
  ConstantsCache constants(ops);
  TableHeader h{ops.config_hash(), cfg.run_hash(), cfg.test.seed, "study=" + id};
  log::info("study " + id + ": " + ops.describe());

  TrainingConfig tc = cfg.training();
  tc.workers = workers;
  const GreedyResult gr = pod_angle_greedy(tc, ops, store, constants);
  BasisFile bf{cfg.spec, cfg.disc, cfg.box, cfg.measure, gr.basis, gr.train_error};
  write_basis((dir / "basis.rb").string(), bf);
  write_provenance_csv((dir / "provenance.csv").string(), bf, h);
  write_train_trace_csv((dir / "train_trace.csv").string(), bf, h);
  write_selection_csv((dir / "selection.csv").string(), bf, h);

  if (spec.curves) {
    std::vector<double> det_s, onl_s;
    const auto curve = prefix_curves(gr.basis, ops, cfg.test_set(), cfg, spec.energy, constants, workers, det_s, onl_s);
    auto out = open_table((dir / "error_curve.csv").string(), h,
                          {"k", "N_V", "N_W", "test_max_l2_true", "test_mean_l2_true", "test_max_energy_true",
                           "test_mean_energy_true", "energy_undefined", "failures"});
    for (const auto& p : curve)
      out << p.k << ',' << p.n_v << ',' << p.n_w << ',' << fmt(p.l2.max) << ',' << fmt(p.l2.mean) << ','
          << fmt(p.energy.max) << ',' << fmt(p.energy.mean) << ',' << (spec.energy ? p.energy.undefined : 0) << ','
          << p.failures << '\n';
    // wall-clock numbers: informative, excluded from the bit-identical outputs
    TableHeader th = h;
    th.note += " timing (not reproducible)";
    auto t = open_table((dir / "timing.csv").string(), th,
                        {"N_V", "N_W", "mean_detailed_s", "mean_online_s", "speedup"});
    const double d = aggregate(det_s).mean, o = aggregate(onl_s).mean;
    t << gr.basis.n_primal() << ',' << gr.basis.n_dual() << ',' << fmt(d) << ',' << fmt(o) << ',' << fmt(d / o) << '\n';
  }

  if (spec.train_measures || spec.table) {
    const auto train = cfg.train_set();
    EvaluateOptions eo{true, true, cfg.pdas};
    std::vector<std::vector<Evaluation>> per_k;
    for (std::size_t k = 1; k <= gr.basis.iterations(); ++k) {
      const ReducedOperators rops = project_operators(gr.basis.truncated(k), ops);
      per_k.push_back(evaluate_set(rops, train, eo, &constants, &store, workers));
    }
    if (spec.train_measures) {
      auto out = open_table((dir / "train_measures.csv").string(), h,
                            {"k", "N_V", "N_W", "max_energy_true", "max_energy_apost", "max_l2_true", "undefined",
                             "failures"});
      for (std::size_t k = 1; k <= per_k.size(); ++k) {
        std::vector<double> et, ap, l2;
        std::size_t failures = 0;
        for (const auto& e : per_k[k - 1]) {
          et.push_back(e.energy_true);
          ap.push_back(e.apost);
          l2.push_back(e.l2_true);
          failures += !e.failure.empty();
        }
        const auto& p = gr.basis.provenance[k - 1];
        out << k << ',' << p.n_primal << ',' << p.n_dual << ',' << fmt(aggregate(et).max) << ','
            << fmt(aggregate(ap).max) << ',' << fmt(aggregate(l2).max) << ',' << aggregate(ap).undefined << ','
            << failures << '\n';
      }
    }
    if (spec.table) {
      std::vector<std::size_t> ks = cfg.table_iterations;
      if (ks.empty())
        for (std::size_t k = 1; k <= per_k.size(); ++k) ks.push_back(k);
      std::vector<std::string> cols = {"N_max", "N_V", "N_W"};
      for (auto n : cfg.table_steps) cols.push_back("max_effectivity_n" + std::to_string(n));
      cols.emplace_back("excluded");
      auto out = open_table((dir / "effectivity.csv").string(), h, cols);
      for (auto k : ks) {
        if (k > per_k.size()) continue;
        const auto& p = gr.basis.provenance[k - 1];
        out << k << ',' << p.n_primal << ',' << p.n_dual;
        std::size_t excluded = 0;
        for (const auto& e : per_k[k - 1]) excluded += e.effectivity.empty();
        for (auto n : cfg.table_steps) {
          std::vector<double> v;
          for (const auto& e : per_k[k - 1])
            if (!e.effectivity.empty()) v.push_back(e.effectivity[n]);
          out << ',' << fmt(aggregate(v).max);
        }
        out << ',' << excluded << '\n';
      }
      write_evaluations_csv((dir / "train_evaluation.csv").string(), per_k.back(), cfg.table_steps, h);
    }
  }
  log::info("study " + id + " written to " + dir.string());
}

}  // namespace rbopt

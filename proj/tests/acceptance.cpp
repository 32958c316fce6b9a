// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>

#include "rbopt/log.hpp"
#include "rbopt/study.hpp"
#include "rbopt/sweep.hpp"

using namespace rbopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string cfg_path(const char* name) { return std::string(RBOPT_CONFIGS) + "/" + name; }

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared Black-Scholes setting: the energy-apost (48,24)-type basis and the
// 50-parameter test set reused by criteria 2, 3, 5, 7 and 8.
struct BsRun {
  RunConfig cfg;
  std::unique_ptr<DiscreteOperators> ops;
  std::unique_ptr<SnapshotStore> store;
  std::unique_ptr<ConstantsCache> constants;
  GreedyResult greedy;
  std::vector<ModelParams> test;
  std::vector<Trajectory> detailed;
  std::vector<Trajectory> reduced;
  bool reduced_ok = true;
};

BsRun& bs_run(int workers) {
  static std::unique_ptr<BsRun> run;
  if (run) return *run;
  run = std::make_unique<BsRun>();
  run->cfg = load_config(cfg_path("bs_american.conf"));
  run->ops = std::make_unique<DiscreteOperators>(run->cfg.spec, run->cfg.disc);
  run->store = std::make_unique<SnapshotStore>(*run->ops, run->cfg.pdas);
  run->constants = std::make_unique<ConstantsCache>(*run->ops);
  TrainingConfig tc = run->cfg.training();
  tc.measure = ErrorMeasure::EnergyApost;
  tc.workers = workers;
  run->greedy = pod_angle_greedy(tc, *run->ops, *run->store, *run->constants);
  run->test = run->cfg.box.random(50, run->cfg.test.seed);
  run->detailed = detailed_sweep(*run->ops, run->test, run->cfg.pdas, workers);
  const ReducedOperators rops = project_operators(run->greedy.basis, *run->ops);
  for (const auto& mu : run->test) {
    try {
      run->reduced.push_back(solve_reduced(rops, mu, run->cfg.pdas));
    } catch (const SolverError& e) {
      rbopt::log::warn(e.what());
      run->reduced_ok = false;
      run->reduced.emplace_back();
    }
  }
  return *run;
}

// Criterion 1: a European Heston problem on a 3 x 6 grid has 5 free nodes, so
// every trajectory lives in a space of dimension 5 and the strong POD-greedy
// exhausts it.
Outcome reproduction(int workers) {
  OptionSpec spec{OptionType::EuropeanCall, 1, 1, ModelKind::Heston};
  Discretization d;
  d.n_v = 3;
  d.n_x = 6;
  d.theta = 0.5;
  DiscreteOperators ops(spec, d);
  ParameterBox box;
  box.kind = ModelKind::Heston;
  box.defaults = ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0198);
  box.active_coords = {2, 3};
  box.lower = {0.3, 0.21, 0.08, 1.2, 0.0198};
  box.upper = {0.3, 0.21, 0.15, 3, 0.0198};
  SnapshotStore store(ops);
  ConstantsCache constants(ops);
  TrainingConfig tc;
  tc.train_set = box.tensor_grid(3);
  tc.n_max = 5;
  tc.workers = workers;
  const GreedyResult g = pod_angle_greedy(tc, ops, store, constants);
  const ReducedOperators rops = project_operators(g.basis, ops);
  double worst = 0.0;
  for (const auto& mu : tc.train_set) {
    const Trajectory red = reconstruct(rops, solve_reduced(rops, mu));
    worst = std::max(worst, true_errors(ops, *store.get(mu), red, 0.0).l2_true);
  }
  return {worst < 1e-12, "free nodes " + std::to_string(ops.free_count()) + ", N_V = " +
                             std::to_string(g.basis.n_primal()) + ", max train E_L2True = " + sci(worst)};
}

// Criterion 2: bound >= true energy error on 50 random parameters.
Outcome reliability(int workers) {
  BsRun& r = bs_run(workers);
  const ReducedOperators rops = project_operators(r.greedy.basis, *r.ops);
  std::size_t violations = 0, undefined = 0, failed = 0;
  double min_eff = INFINITY;
  for (std::size_t i = 0; i < r.test.size(); ++i) {
    if (r.reduced[i].u.empty()) {
      ++failed;
      continue;
    }
    const StabilityConstants c = r.constants->get(r.test[i]);
    if (!(c.alpha > 0)) {
      ++undefined;
      continue;
    }
    const ErrorReport rep = certify(rops, r.reduced[i], c, &r.detailed[i]);
    if (rep.bound.total < rep.truth->energy_true) ++violations;
    if (rep.truth->energy_true > 0) min_eff = std::min(min_eff, std::sqrt(rep.bound.total / rep.truth->energy_true));
  }
  return {violations == 0 && failed == 0 && undefined == 0,
          "(N_V,N_W) = (" + std::to_string(r.greedy.basis.n_primal()) + "," + std::to_string(r.greedy.basis.n_dual()) +
              "), violations " + std::to_string(violations) + "/50, alpha <= 0 at " + std::to_string(undefined) +
              ", reduced failures " + std::to_string(failed) + ", min effectivity " + sci(min_eff)};
}

// Max effectivity at step n over a training set; entries with alpha <= 0 are
// excluded and counted.
std::pair<double, std::size_t> max_effectivity(const ReducedOperators& rops, const std::vector<ModelParams>& train,
                                               ConstantsCache& constants, SnapshotStore& store, std::size_t n,
                                               const PdasOptions& pdas, int workers) {
  const auto evals = evaluate_set(rops, train, EvaluateOptions{true, true, pdas}, &constants, &store, workers);
  std::vector<double> eff;
  std::size_t excluded = 0;
  for (const auto& e : evals) {
    if (e.effectivity.empty() || !std::isfinite(e.effectivity[n])) {
      ++excluded;
      continue;
    }
    eff.push_back(e.effectivity[n]);
  }
  return {aggregate(eff).max, excluded};
}

// Criterion 3: effectivity magnitude, Black-Scholes and Heston.
Outcome effectivity_magnitude(int workers) {
  BsRun& r = bs_run(workers);
  const ReducedOperators rops = project_operators(r.greedy.basis, *r.ops);
  const auto [bs_max, bs_excl] =
      max_effectivity(rops, r.cfg.train_set(), *r.constants, *r.store, 20, r.cfg.pdas, workers);
  const bool bs_pass = bs_max >= 10 && bs_max <= 500;
  std::string detail = "BS (N_V,N_W) = (" + std::to_string(r.greedy.basis.n_primal()) + "," +
                       std::to_string(r.greedy.basis.n_dual()) + ") max eta(n=20) = " + sci(bs_max) + " over " +
                       std::to_string(r.cfg.train_set().size() - bs_excl) + " points (" + std::to_string(bs_excl) +
                       " excluded), target [10,500]";

  const RunConfig hc = load_config(cfg_path("heston_american.conf"));
  DiscreteOperators hops(hc.spec, hc.disc);
  ConstantsCache hconst(hops);
  const auto train = hc.train_set();
  std::vector<double> alpha(train.size());
  parallel_for(train.size(), workers, [&](std::size_t i) { alpha[i] = hconst.get(train[i]).alpha; });
  const auto coercive = static_cast<std::size_t>(std::count_if(alpha.begin(), alpha.end(), [](double a) { return a > 0; }));
  bool h_pass = false;
  if (coercive == 0) {
    detail += "; Heston: alpha <= 0 at all " + std::to_string(train.size()) + " training points (max alpha " +
              sci(*std::max_element(alpha.begin(), alpha.end())) + "), bound undefined";
  } else {
    SnapshotStore hstore(hops, hc.pdas);
    TrainingConfig tc = hc.training();
    tc.measure = ErrorMeasure::EnergyApost;
    tc.n_max = 25;
    tc.workers = workers;
    const GreedyResult g = pod_angle_greedy(tc, hops, hstore, hconst);
    const auto [h_max, h_excl] =
        max_effectivity(project_operators(g.basis, hops), train, hconst, hstore, 20, hc.pdas, workers);
    h_pass = h_max >= 30 && h_max <= 1500;
    detail += "; Heston max eta(n=20) = " + sci(h_max) + " (" + std::to_string(h_excl) + " excluded), target [30,1500]";
  }
  return {bs_pass && h_pass, detail};
}

// Max and mean test error of the first and last greedy prefix, from
// compressed detailed trajectories.
struct Decay {
  Aggregate first, last;
  std::size_t n_first = 0, n_last = 0;
};

Decay decay(const ReducedBasis& basis, const DiscreteOperators& ops, const std::vector<ModelParams>& mus,
            ConstantsCache& constants, const PdasOptions& pdas, bool energy, int workers) {
  const PrefixProducts pp = prefix_products(basis.psi, ops);
  std::vector<CompressedTruth> truth(mus.size());
  std::vector<double> alpha(mus.size(), 0.0);
  parallel_for(mus.size(), workers, [&](std::size_t i) {
    truth[i] = compress_truth(basis.psi, pp, ops, solve_detailed(ops, mus[i], pdas));
    if (energy) alpha[i] = constants.get(mus[i]).alpha;
  });
  auto at = [&](std::size_t k) {
    const ReducedOperators rops = project_operators(basis.truncated(k), ops);
    std::vector<double> v(mus.size());
    parallel_for(mus.size(), workers, [&](std::size_t i) {
      const TrueErrors e = compressed_errors(truth[i], pp, solve_reduced(rops, mus[i], pdas), std::max(alpha[i], 0.0),
                                             ops.dt());
      v[i] = energy ? (alpha[i] > 0 ? e.energy_true : NAN) : e.l2_true;
    });
    return aggregate(v);
  };
  Decay d;
  d.first = at(1);
  d.last = at(basis.iterations());
  d.n_first = basis.truncated(1).n_primal();
  d.n_last = basis.n_primal();
  return d;
}

// Criterion 4: (a) European Heston 2d, (b) American Black-Scholes.
Outcome error_decay(int workers) {
  const RunConfig ec = load_config(cfg_path("heston_european_2d.conf"));
  DiscreteOperators eops(ec.spec, ec.disc);
  SnapshotStore estore(eops, ec.pdas);
  ConstantsCache econst(eops);
  TrainingConfig etc = ec.training();
  etc.workers = workers;
  const GreedyResult eg = pod_angle_greedy(etc, eops, estore, econst);
  const Decay a = decay(eg.basis, eops, ec.test_set(), econst, ec.pdas, false, workers);
  const double ra = a.first.max / a.last.max;

  const RunConfig bc = load_config(cfg_path("bs_american.conf"));
  DiscreteOperators bops(bc.spec, bc.disc);
  SnapshotStore bstore(bops, bc.pdas);
  ConstantsCache bconst(bops);
  TrainingConfig btc = bc.training();
  btc.measure = ErrorMeasure::EnergyTrue;
  btc.workers = workers;
  const GreedyResult bg = pod_angle_greedy(btc, bops, bstore, bconst);
  const Decay b = decay(bg.basis, bops, bc.test_set(), bconst, bc.pdas, true, workers);
  const double rb = b.first.mean / b.last.mean;

  return {ra >= 1e4 && rb >= 1e3,
          "(a) max test l2 N=" + std::to_string(a.n_first) + ": " + sci(a.first.max) + " -> N=" +
              std::to_string(a.n_last) + ": " + sci(a.last.max) + " (ratio " + sci(ra) + ", need 1e4); (b) mean test " +
              "EnergyTrue N_max=1: " + sci(b.first.mean) + " -> N_max=" + std::to_string(bg.basis.iterations()) + ": " +
              sci(b.last.mean) + " (ratio " + sci(rb) + ", need 1e3, " + std::to_string(b.last.undefined) +
              " with alpha <= 0 left out)"};
}

struct Complementarity {
  double min_lambda = INFINITY, min_slack = INFINITY, max_product = 0.0;
  void add(const Vec& lambda, const Vec& slack) {
    if (lambda.size() == 0) return;
    min_lambda = std::min(min_lambda, lambda.minCoeff());
    min_slack = std::min(min_slack, slack.minCoeff());
    max_product = std::max(max_product, lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  bool ok() const { return min_lambda >= 0 && min_slack >= -1e-10 && max_product <= 1e-10; }
  std::string str() const {
    return "min lambda " + sci(min_lambda) + ", min slack " + sci(min_slack) + ", max |lambda o slack| " +
           sci(max_product);
  }
};

// Criterion 5: complementarity of every detailed and reduced solve of the run.
Outcome complementarity(int workers) {
  BsRun& r = bs_run(workers);
  const ReducedOperators rops = project_operators(r.greedy.basis, *r.ops);
  Complementarity det, red;
  for (const auto& t : r.detailed)
    for (std::size_t n = 1; n < t.u.size(); ++n) det.add(t.lambda[n], t.u[n] - r.ops->constraint(n - 1));
  for (const auto& t : r.reduced)
    for (std::size_t n = 1; n < t.u.size(); ++n)
      red.add(t.lambda[n], rops.dual.transpose() * t.u[n] - rops.constraint);
  const RunConfig hc = load_config(cfg_path("heston_american.conf"));
  DiscreteOperators hops(hc.spec, hc.disc);
  const Trajectory ht = solve_american(hops, hc.box.defaults, hc.pdas);
  Complementarity hd;
  for (std::size_t n = 1; n < ht.u.size(); ++n) hd.add(ht.lambda[n], ht.u[n] - hops.constraint(n - 1));
  return {det.ok() && red.ok() && hd.ok() && r.reduced_ok,
          "BS detailed (50 mu): " + det.str() + "; BS reduced: " + red.str() + "; Heston detailed: " + hd.str()};
}

// Criterion 6: PDAS iterations per step at the two baseline parameters,
// detailed and reduced. The reduced iterations of the 50 test solves are
// reported alongside.
struct Histogram {
  std::map<int, std::size_t> bins;
  int worst = 0;
  void add(const Trajectory& t) {
    for (int it : t.iterations) {
      ++bins[it];
      worst = std::max(worst, it);
    }
  }
  std::string str() const {
    std::string h;
    for (const auto& [k, v] : bins) h += (h.empty() ? "" : " ") + std::to_string(k) + ":" + std::to_string(v);
    return "max " + std::to_string(worst) + " {" + h + "}";
  }
};

Outcome pdas_convergence(int workers) {
  BsRun& r = bs_run(workers);
  Histogram det, red, test;
  det.add(solve_american(*r.ops, r.cfg.box.defaults, r.cfg.pdas));
  red.add(solve_reduced(project_operators(r.greedy.basis, *r.ops), r.cfg.box.defaults, r.cfg.pdas));
  for (const auto& t : r.reduced) test.add(t);

  const RunConfig hc = load_config(cfg_path("heston_american.conf"));
  DiscreteOperators hops(hc.spec, hc.disc);
  SnapshotStore hstore(hops, hc.pdas);
  ConstantsCache hconst(hops);
  TrainingConfig tc = hc.training();
  tc.workers = workers;
  const GreedyResult hg = pod_angle_greedy(tc, hops, hstore, hconst);
  det.add(*hstore.get(hc.box.defaults));
  red.add(solve_reduced(project_operators(hg.basis, hops), hc.box.defaults, hc.pdas));
  return {det.worst <= 10 && red.worst <= 10,
          "iterations:steps at the BS and Heston baselines, detailed " + det.str() + ", reduced (BS (" +
              std::to_string(r.greedy.basis.n_primal()) + "," + std::to_string(r.greedy.basis.n_dual()) +
              "), Heston (" + std::to_string(hg.basis.n_primal()) + "," + std::to_string(hg.basis.n_dual()) +
              ")) " + red.str() + "; reduced BS over 50 test mu " + test.str()};
}

// Criterion 7: projector orthogonality and sign on 20 evaluations.
Outcome projector(int workers) {
  BsRun& r = bs_run(workers);
  const ReducedOperators rops = project_operators(r.greedy.basis, *r.ops);
  std::size_t steps = 0, bad_dot = 0, bad_sign = 0;
  for (std::size_t i = 0; i < 20 && i < r.reduced.size(); ++i) {
    const Trajectory& t = r.reduced[i];
    if (t.u.empty()) continue;
    for (std::size_t n = 0; n + 1 < t.u.size(); ++n) {
      const InequalityResidual s = inequality_residual(rops, t, n);
      const Vec lambda = rops.xi * t.lambda[n + 1];
      bad_dot += s.pi.dot(lambda) != 0.0;
      bad_sign += s.pi.minCoeff() < 0.0;
      ++steps;
    }
  }
  return {steps == 20 * r.cfg.disc.time_steps && bad_dot == 0 && bad_sign == 0,
          std::to_string(steps) + " steps, nonzero <pi, lambda_N> " + std::to_string(bad_dot) + ", negative pi " +
              std::to_string(bad_sign)};
}

// Criterion 8: reduced inf-sup along the greedy.
Outcome inf_sup(int workers) {
  BsRun& r = bs_run(workers);
  if (!r.cfg.supremizers) {
    rbopt::log::warn("supremizers disabled: reduced inf-sup check skipped");
    return {true, "skipped (no supremizers)"};
  }
  const double beta = r.constants->beta();
  double worst = INFINITY;
  std::size_t worst_k = 0;
  for (std::size_t k = 1; k <= r.greedy.basis.iterations(); ++k) {
    const double b = reduced_inf_sup(r.greedy.basis.truncated(k));
    if (b < worst) {
      worst = b;
      worst_k = k;
    }
  }
  return {worst >= 0.99 * beta, "beta = " + sci(beta) + ", min beta_N = " + sci(worst) + " at iteration " +
                                    std::to_string(worst_k) + " (ratio " + sci(worst / beta) + ")"};
}

// Exhaustive 2^3 active-set search: the feasible complementary solution.
bool enumerate(const Mat& K, const Vec& rhs, const Vec& g, Vec& u_out, std::set<int>& active_out) {
  const int n = static_cast<int>(K.rows());
  int found = 0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec u = g;
    std::vector<int> inact;
    for (int i = 0; i < n; ++i)
      if (!(mask & (1 << i))) inact.push_back(i);
    if (!inact.empty()) {
      const auto m = static_cast<Eigen::Index>(inact.size());
      Mat k(m, m);
      Vec b(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        b[i] = rhs[inact[i]];
        for (int j = 0; j < n; ++j)
          if (mask & (1 << j)) b[i] -= K(inact[i], j) * g[j];
        for (Eigen::Index j = 0; j < m; ++j) k(i, j) = K(inact[i], inact[j]);
      }
      const Vec x = k.fullPivLu().solve(b);
      for (Eigen::Index i = 0; i < m; ++i) u[inact[i]] = x[i];
    }
    const Vec lam = K * u - rhs;
    bool ok = true;
    for (int i = 0; i < n; ++i) ok = ok && ((mask & (1 << i)) ? lam[i] >= 0 : u[i] >= g[i]);
    if (ok) {
      ++found;
      u_out = u;
      active_out.clear();
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) active_out.insert(i);
    }
  }
  return found == 1;
}

// Criterion 9: detailed PDAS vs enumeration on 3 free nodes.
Outcome oracle_equivalence(int /*workers*/) {
  Discretization d;
  d.nodes = 5;
  DiscreteOperators ops({OptionType::AmericanPut, 100, 1, ModelKind::BlackScholes}, d);
  const RunConfig bc = load_config(cfg_path("bs_american.conf"));
  const auto mus = bc.box.random(100, 31337);
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pert(-0.05, 0.05);
  std::size_t mismatched = 0, ambiguous = 0, active_total = 0;
  double worst = 0.0;
  for (const auto& mu : mus) {
    Mat K = Mat(ops.mass()) / ops.dt() + Mat(ops.bilinear(mu));
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) K(i, j) *= 1 + pert(rng);
    Vec g = ops.constraint(0), rhs = Mat(ops.mass()) / ops.dt() * g + ops.load(mu, 0);
    for (Eigen::Index i = 0; i < 3; ++i) {
      rhs[i] += std::abs(rhs[i]) * 4 * pert(rng);
      g[i] += 10 * pert(rng);
    }
    Vec u_e;
    std::set<int> act_e;
    if (!enumerate(K, rhs, g, u_e, act_e)) {
      ++ambiguous;
      continue;
    }
    const LcpResult r = pdas_solve(K.sparseView(), rhs, g, g, Vec::Zero(3), bc.pdas, &ops.gram());
    std::set<int> act_p;
    for (int i = 0; i < 3; ++i)
      if (r.lambda[i] > 0 || (act_e.count(i) && r.u[i] == g[i])) act_p.insert(i);
    const double diff = (r.u - u_e).lpNorm<Eigen::Infinity>() / std::max(1.0, u_e.lpNorm<Eigen::Infinity>());
    worst = std::max(worst, diff);
    active_total += act_e.size();
    if (!r.converged || act_p != act_e || diff > 1e-12) ++mismatched;
  }
  return {mismatched == 0 && ambiguous == 0,
          "100 instances, mismatches " + std::to_string(mismatched) + ", non-unique " + std::to_string(ambiguous) +
              ", active nodes in total " + std::to_string(active_total) + ", max rel. difference " + sci(worst)};
}

// Criterion 10: online time at N_V ~ 50 for H = 200 and H = 800.
Outcome online_split(int workers) {
  auto measure = [&](std::size_t nodes, std::size_t& nv, std::size_t& nw, long& iters) {
    RunConfig c = load_config(cfg_path("bs_american.conf"));
    c.disc.nodes = nodes;
    DiscreteOperators ops(c.spec, c.disc);
    SnapshotStore store(ops, c.pdas);
    ConstantsCache constants(ops);
    TrainingConfig tc = c.training();
    tc.measure = ErrorMeasure::L2True;
    tc.workers = workers;
    const GreedyResult g = pod_angle_greedy(tc, ops, store, constants);
    const ReducedOperators rops = project_operators(g.basis, ops);
    nv = g.basis.n_primal();
    nw = g.basis.n_dual();
    const auto mus = c.test_set();
    iters = 0;
    for (const auto& mu : mus)
      for (int it : solve_reduced(rops, mu, c.pdas).iterations) iters += it;
    std::vector<double> reps;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& mu : mus) solve_reduced(rops, mu, c.pdas);
      reps.push_back(seconds_since(t0) / static_cast<double>(mus.size()));
    }
    std::sort(reps.begin(), reps.end());
    return reps[reps.size() / 2];
  };
  std::size_t nv200, nw200, nv800, nw800;
  long it200, it800;
  const double t200 = measure(200, nv200, nw200, it200);
  const double t800 = measure(800, nv800, nw800, it800);
  const double ratio = t800 / t200;
  return {ratio >= 0.9 && ratio <= 1.1,
          "H=200 (" + std::to_string(nv200) + "," + std::to_string(nw200) + "): " + sci(t200) + " s, " +
              std::to_string(it200) + " PDAS iterations; H=800 (" + std::to_string(nv800) + "," +
              std::to_string(nw800) + "): " + sci(t800) + " s, " + std::to_string(it800) +
              " PDAS iterations; ratio " + sci(ratio) + ", per iteration " +
              sci((t800 / static_cast<double>(it800)) / (t200 / static_cast<double>(it200)))};
}

}  // namespace

int main(int argc, char** argv) {
  rbopt::log::set_level(rbopt::log::Level::Warn);
  const int workers = max_workers();
  using Fn = Outcome (*)(int);
  const std::vector<std::pair<const char*, Fn>> criteria = {
      {"reproduction", reproduction},
      {"bound reliability", reliability},
      {"effectivity magnitude", effectivity_magnitude},
      {"error decay", error_decay},
      {"complementarity and feasibility", complementarity},
      {"PDAS convergence", pdas_convergence},
      {"projector and cone", projector},
      {"inf-sup with supremizers", inf_sup},
      {"oracle equivalence", oracle_equivalence},
      {"online/offline split", online_split},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(workers);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %-32s %s  %s  [%.1f s]\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

#include "rbopt/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "rbopt/log.hpp"
#include "rbopt/sweep.hpp"

namespace rbopt {

std::string_view to_string(ErrorMeasure m) {
  switch (m) {
    case ErrorMeasure::L2True: return "l2-true";
    case ErrorMeasure::EnergyTrue: return "energy-true";
    case ErrorMeasure::EnergyApost: return "energy-apost";
  }
  return "?";
}

ErrorMeasure measure_from_string(std::string_view name) {
  if (name == "l2-true") return ErrorMeasure::L2True;
  if (name == "energy-true") return ErrorMeasure::EnergyTrue;
  if (name == "energy-apost") return ErrorMeasure::EnergyApost;
  throw ValidationError("unknown error measure '" + std::string(name) + "'");
}

std::optional<Vec> pod1(const std::vector<Vec>& snapshots, const SpMat& gram, double drop_tol) {
  if (snapshots.empty()) return std::nullopt;
  const auto m = static_cast<Eigen::Index>(snapshots.size());
  std::vector<Vec> xs;
  xs.reserve(snapshots.size());
  double largest = 0.0;
  for (const auto& v : snapshots) {
    xs.push_back(gram * v);
    largest = std::max(largest, std::sqrt(std::max(0.0, v.dot(xs.back()))));
  }
  if (!(largest > drop_tol)) return std::nullopt;
  Mat c(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = snapshots[static_cast<std::size_t>(i)].dot(xs[static_cast<std::size_t>(j)]);
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  const Vec a = es.eigenvectors().col(m - 1);
  Vec z = Vec::Zero(snapshots.front().size());
  for (Eigen::Index i = 0; i < m; ++i) z += a[i] * snapshots[static_cast<std::size_t>(i)];
  const double nz = std::sqrt(std::max(0.0, z.dot(gram * z)));
  if (!(nz > 0.0)) return std::nullopt;
  z /= nz;
  Eigen::Index imax = 0;
  z.cwiseAbs().maxCoeff(&imax);
  if (z[imax] < 0) z = -z;
  return z;
}

double angle_to_space(const Vec& eta, const Mat& basis) {
  const double ne = eta.norm();
  if (!(ne > 0.0)) throw std::invalid_argument("angle of the zero vector is undefined");
  if (basis.cols() == 0) return std::numbers::pi / 2;
  // least-squares projection onto the column span
  const Vec coeff = basis.colPivHouseholderQr().solve(eta);
  const double ratio = std::clamp((basis * coeff).norm() / ne, 0.0, 1.0);
  return std::acos(ratio);
}

Vec supremizer(const DiscreteOperators& ops, const Vec& xi) {
  Vec s = ops.gram_solve(xi);
  if (!s.allFinite()) throw std::runtime_error("Gram solve failed in supremizer");
  return s;
}

bool append_orthonormal(Mat& psi, const Vec& v, const SpMat& gram, double drop_tol) {
  const double n0 = std::sqrt(std::max(0.0, v.dot(gram * v)));
  if (!(n0 > 0.0)) return false;
  Vec w = v;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < psi.cols(); ++j) {
      const double c = psi.col(j).dot(gram * w);
      w -= c * psi.col(j);
    }
  }
  const double n1 = std::sqrt(std::max(0.0, w.dot(gram * w)));
  if (n1 < drop_tol * n0) return false;
  psi.conservativeResize(v.size(), psi.cols() + 1);
  psi.col(psi.cols() - 1) = w / n1;
  return true;
}

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best] || (std::isnan(v[best]) && !std::isnan(v[i]))) best = i;
  return best;
}

double greedy_error_measure(ErrorMeasure m, const ScoreContext& ctx, const ModelParams& mu) {
  const Trajectory red = solve_reduced(*ctx.rops, mu, ctx.pdas);
  if (m == ErrorMeasure::EnergyApost) {
    if (!ctx.constants) throw std::invalid_argument("a posteriori measure needs stability constants");
    return certify(*ctx.rops, red, ctx.constants->get(mu)).bound.total;
  }
  if (!ctx.snapshots) throw std::invalid_argument("true error measures need detailed trajectories");
  const auto detailed = ctx.snapshots->get(mu);
  const Trajectory rec = reconstruct(*ctx.rops, red);
  double alpha = 0.0;
  if (m == ErrorMeasure::EnergyTrue) {
    if (!ctx.constants) throw std::invalid_argument("energy measure needs stability constants");
    alpha = ctx.constants->get(mu).alpha;
    if (!(alpha > 0.0)) throw std::domain_error("coercivity constant <= 0: energy measure undefined");
  }
  const TrueErrors t = true_errors(*ctx.ops, *detailed, rec, alpha);
  return m == ErrorMeasure::L2True ? t.l2_true : t.energy_true;
}

namespace {

double guarded_score(ErrorMeasure m, const ScoreContext& ctx, const ModelParams& mu) {
  try {
    return greedy_error_measure(m, ctx, mu);
  } catch (const SolverError& e) {
    // a reduced solve that breaks down is the worst-approximated parameter
    log::warn(std::string("reduced solve failed during scoring: ") + e.what());
    return std::numeric_limits<double>::infinity();
  } catch (const std::domain_error& e) {
    // no energy bound outside the coercive regime; the parameter cannot be ranked
    log::debug(std::string("unranked training parameter ") + format_mu(mu) + ": " + e.what());
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::size_t unranked(const std::vector<double>& scores) {
  return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](double v) { return std::isnan(v); }));
}

}  // namespace

std::vector<double> score_sweep(ErrorMeasure m, const ScoreContext& ctx, const std::vector<ModelParams>& mus,
                                int workers) {
  std::vector<double> out(mus.size());
  parallel_for(mus.size(), workers, [&](std::size_t i) { out[i] = guarded_score(m, ctx, mus[i]); });
  return out;
}

std::vector<double> score_sweep_serial(ErrorMeasure m, const ScoreContext& ctx, const std::vector<ModelParams>& mus) {
  std::vector<double> out;
  out.reserve(mus.size());
  for (const auto& mu : mus) out.push_back(guarded_score(m, ctx, mu));
  return out;
}

GreedyResult pod_angle_greedy(const TrainingConfig& config, const DiscreteOperators& ops, SnapshotStore& store,
                              ConstantsCache& constants, const GreedyObserver& observer) {
  if (config.train_set.empty()) throw std::invalid_argument("training set is empty");
  if (config.n_max == 0) throw std::invalid_argument("N_max must be positive");
  for (const auto& mu : config.train_set) {
    if (mu.kind() != ops.spec().model) throw ValidationError("training parameter " + format_mu(mu) + " has the wrong model");
    mu.validate();
  }
  const bool american = ops.american();
  if (!american && config.measure != ErrorMeasure::L2True)
    throw ValidationError("European training uses the l2-true measure (no a posteriori estimator)");
  if (american && !config.supremizers)
    log::warn("supremizer enrichment disabled: reduced inf-sup stability is not guaranteed and is not checked");

  const SpMat& gram = ops.gram();
  const std::size_t L = ops.time_steps();
  const auto nf = static_cast<Eigen::Index>(ops.free_count());
  const std::size_t solves_before = store.solves();
  if (config.measure != ErrorMeasure::EnergyApost) store.prefetch(config.train_set, config.workers);

  GreedyResult result;
  ReducedBasis& basis = result.basis;
  basis.config_hash = ops.config_hash();
  basis.supremizers = american && config.supremizers;
  basis.psi = Mat(nf, 0);
  basis.xi = Mat(nf, 0);

  auto x_norm = [&](const Vec& v) { return std::sqrt(std::max(0.0, v.dot(gram * v))); };
  auto trajectory_scale = [&](const Trajectory& t) {
    double s = 0.0;
    for (const auto& u : t.u) s = std::max(s, x_norm(u));
    return s;
  };
  auto add_primal = [&](const Vec& v, bool is_supremizer) {
    if (append_orthonormal(basis.psi, v, gram, config.drop_tol)) {
      basis.supremizer.push_back(is_supremizer ? 1 : 0);
      return true;
    }
    log::debug(std::string(is_supremizer ? "supremizer" : "POD mode") + " dropped as linearly dependent");
    return false;
  };
  auto add_dual = [&](const Vec& lambda) {
    basis.xi.conservativeResize(nf, basis.xi.cols() + 1);
    basis.xi.col(basis.xi.cols() - 1) = lambda / lambda.norm();
  };
  // Supremizer of the part of the new dual vector not already in span(Xi).
  // The span of Psi is the same as with the raw vector, but X^{-1} smooths
  // so strongly that the raw supremizer is numerically parallel to the
  // earlier ones and would fall under the drop tolerance.
  auto add_supremizer = [&]() {
    if (!basis.supremizers) return;
    const Eigen::Index m = basis.xi.cols() - 1;
    Vec fresh = basis.xi.col(m);
    if (m > 0) {
      const auto prev = basis.xi.leftCols(m);
      fresh -= prev * prev.colPivHouseholderQr().solve(fresh);
    }
    if (!add_primal(supremizer(ops, fresh), true)) log::warn("supremizer of dual vector " + std::to_string(m + 1) + " is dependent");
  };
  auto record = [&](std::size_t k, const ModelParams& mu, std::size_t step, double score, double angle) {
    ProvenanceEntry e{k, mu, step, score, angle, basis.n_primal(), basis.n_dual()};
    basis.provenance.push_back(e);
    log::info("greedy iteration " + std::to_string(k) + ": mu = " + format_mu(mu) + ", n = " + std::to_string(step) +
              ", score = " + std::to_string(score) + ", angle = " + std::to_string(angle) + ", N_V = " + std::to_string(e.n_primal) +
              ", N_W = " + std::to_string(e.n_dual));
    if (observer) observer(e);
  };

  // initialization with the first training parameter
  {
    const ModelParams& mu1 = config.train_set.front();
    const auto traj = store.get(mu1);
    const double scale = trajectory_scale(*traj);
    if (american) {
      std::size_t n1 = 1;
      double best = -1.0;
      for (std::size_t n = 1; n <= L; ++n) {
        const double v = traj->lambda[n].norm();
        if (v > best) best = v, n1 = n;
      }
      add_primal(traj->u[n1], false);
      if (best > 0.0) {
        add_dual(traj->lambda[n1]);
        add_supremizer();
      }
      record(1, mu1, n1, std::numeric_limits<double>::quiet_NaN(), std::numbers::pi / 2);
    } else {
      if (auto z = pod1(traj->u, gram, config.drop_tol * scale)) add_primal(*z, false);
      record(1, mu1, 0, std::numeric_limits<double>::quiet_NaN(), 0.0);
    }
  }

  bool warned_unranked = false;
  auto sweep = [&]() {
    const ReducedOperators rops = project_operators(basis, ops);
    ScoreContext ctx{&ops, &rops, &constants, &store, config.pdas};
    auto scores = score_sweep(config.measure, ctx, config.train_set, config.workers);
    if (const std::size_t skipped = unranked(scores); skipped == scores.size())
      throw std::domain_error("no training parameter has a defined error measure");
    else if (skipped > 0 && !warned_unranked) {
      log::warn(std::to_string(skipped) + " training parameters have alpha <= 0 and are excluded from selection");
      warned_unranked = true;
    }
    return scores;
  };

  for (std::size_t k = 1; k < config.n_max; ++k) {
    const std::vector<double> scores = sweep();
    const std::size_t j = argmax_first(scores);
    result.train_error.push_back(scores[j]);
    const ModelParams& mu = config.train_set[j];
    const auto traj = store.get(mu);

    std::size_t step = 0;
    double angle = 0.0;
    if (american) {
      bool found = false;
      for (std::size_t n = 1; n <= L; ++n) {
        if (!(traj->lambda[n].norm() > 0.0)) continue;
        const double a = angle_to_space(traj->lambda[n], basis.xi);
        if (!found || a > angle) angle = a, step = n, found = true;
      }
      // New cone direction only while it stays linearly independent. The test
      // is applied at the level of the Gram matrix Xi^T Xi (sin^2 of the
      // angle), which governs the conditioning of the reduced saddle system.
      if (found && std::pow(std::sin(angle), 2) >= config.drop_tol) add_dual(traj->lambda[step]);
      else found = false;
      std::vector<Vec> dev;
      for (const auto& u : traj->u) dev.push_back(u - basis.psi * (basis.psi.transpose() * (gram * u)));
      if (auto z = pod1(dev, gram, config.drop_tol * trajectory_scale(*traj))) add_primal(*z, false);
      if (found) add_supremizer();
    } else {
      std::vector<Vec> dev;
      for (const auto& u : traj->u) dev.push_back(u - basis.psi * (basis.psi.transpose() * (gram * u)));
      if (auto z = pod1(dev, gram, config.drop_tol * trajectory_scale(*traj))) add_primal(*z, false);
    }
    record(k + 1, mu, step, scores[j], angle);
  }
  const std::vector<double> final_scores = sweep();
  result.train_error.push_back(final_scores[argmax_first(final_scores)]);
  result.detailed_solves = store.solves() - solves_before;
  return result;
}

}  // namespace rbopt

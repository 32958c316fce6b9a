#include "rbopt/certification.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rbopt {

Vec equality_residual(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced, std::size_t n) {
  const DiscreteOperators& ops = *rops.ops;
  if (n + 1 >= reduced.u.size()) throw std::out_of_range("residual requested past the last reduced step");
  const double dt = ops.dt(), th = ops.theta();
  const Vec& u0 = reduced.u[n];
  const Vec& u1 = reduced.u[n + 1];
  const Vec ut = th * u1 + (1.0 - th) * u0;
  const Vec theta = affine_theta(mu);
  Vec r = rops.mass_psi * ((u1 - u0) / dt);
  for (Eigen::Index q = 0; q < theta.size(); ++q) r += theta[q] * (rops.components_psi[static_cast<std::size_t>(q)] * ut);
  if (!reduced.lambda.empty() && reduced.lambda[n + 1].size() > 0) r -= rops.xi * reduced.lambda[n + 1];
  r -= ops.load(mu, n);
  return r;
}

double equality_residual_norm(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced,
                              std::size_t n) {
  const Vec r = equality_residual(rops, mu, reduced, n);
  return std::sqrt(std::max(0.0, r.dot(rops.ops->gram_solve(r))));
}

Vec cone_projector(const Vec& eta, const Vec& lambda) {
  if (eta.size() != lambda.size()) throw std::invalid_argument("projector operands differ in length");
  Vec pi = Vec::Zero(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (lambda[i] == 0.0 && eta[i] > 0.0) pi[i] = eta[i];
  return pi;
}

InequalityResidual inequality_residual(const ReducedOperators& rops, const Trajectory& reduced, std::size_t n) {
  const DiscreteOperators& ops = *rops.ops;
  if (n + 1 >= reduced.u.size()) throw std::out_of_range("residual requested past the last reduced step");
  InequalityResidual res;
  res.eta = rops.psi * reduced.u[n + 1] - ops.constraint(n);
  Vec lambda = Vec::Zero(res.eta.size());
  if (!reduced.lambda.empty() && reduced.lambda[n + 1].size() > 0) lambda = rops.xi * reduced.lambda[n + 1];
  res.pi = cone_projector(res.eta, lambda);
  res.delta = (res.eta - res.pi).norm();
  return res;
}

EnergyBound energy_bound(const std::vector<double>& delta_r, const std::vector<double>& delta_s,
                         const StabilityConstants& c, double dt, double initial_error_l2_sq) {
  if (delta_r.size() != delta_s.size()) throw std::invalid_argument("residual traces differ in length");
  if (!(c.alpha > 0.0))
    throw std::domain_error("coercivity constant " + std::to_string(c.alpha) + " <= 0: energy bound undefined");
  EnergyBound b;
  double acc = 0.5 * initial_error_l2_sq;
  b.partial.push_back(acc);
  for (std::size_t n = 0; n < delta_r.size(); ++n) {
    const double dr = delta_r[n], ds = delta_s[n];
    const double s = c.c_omega * ds / c.beta;
    const double mixed = dr + c.gamma * ds / c.beta;
    acc += 0.5 * s * s + dt * ds * dr / c.beta + dt / (2.0 * c.alpha) * mixed * mixed;
    b.partial.push_back(acc);
  }
  b.total = acc;
  return b;
}

TrueErrors true_errors(const DiscreteOperators& ops, const Trajectory& detailed, const Trajectory& reconstructed,
                       double alpha) {
  if (detailed.u.size() != reconstructed.u.size()) throw std::invalid_argument("trajectories differ in length");
  TrueErrors t;
  const double dt = ops.dt();
  double sum_v = 0.0;
  for (std::size_t n = 0; n < detailed.u.size(); ++n) {
    const Vec e = reconstructed.u[n] - detailed.u[n];
    const double v = e.dot(ops.gram() * e), l2 = e.dot(ops.mass() * e);
    t.v_sq.push_back(v);
    t.l2_sq.push_back(l2);
    sum_v += v;
    t.partial.push_back(0.5 * l2 + 0.5 * alpha * dt * sum_v);
  }
  t.l2_true = dt * sum_v;
  t.energy_true = t.partial.back();
  return t;
}

double dual_error_bound(double delta_r, double increment_l2, double error_next_v, const StabilityConstants& c,
                        double dt) {
  return (c.c_omega / dt * increment_l2 + c.gamma * error_next_v + delta_r) / c.beta;
}

std::optional<double> effectivity(double apost, double truth) {
  if (!(truth > 0.0)) return std::nullopt;
  return std::sqrt(apost / truth);
}

ErrorReport certify(const ReducedOperators& rops, const Trajectory& reduced, const StabilityConstants& constants,
                    const Trajectory* detailed) {
  const DiscreteOperators& ops = *rops.ops;
  ErrorReport rep;
  rep.mu = reduced.mu;
  rep.constants = constants;
  const std::size_t L = reduced.steps();
  for (std::size_t n = 0; n < L; ++n) {
    rep.delta_r.push_back(equality_residual_norm(rops, reduced.mu, reduced, n));
    rep.delta_s.push_back(ops.american() ? inequality_residual(rops, reduced, n).delta : 0.0);
  }
  const Vec e0 = rops.psi * reduced.u[0] - ops.initial_data();
  rep.initial_term = 0.5 * e0.dot(ops.mass() * e0);
  rep.bound = energy_bound(rep.delta_r, rep.delta_s, constants, ops.dt(), 2.0 * rep.initial_term);
  if (detailed) {
    const Trajectory rec = reconstruct(rops, reduced);
    rep.truth = true_errors(ops, *detailed, rec, constants.alpha);
    for (std::size_t n = 0; n <= L; ++n) rep.effectivity.push_back(effectivity(rep.bound.partial[n], rep.truth->partial[n]));
    if (ops.american()) {
      for (std::size_t n = 0; n < L; ++n) {
        const Vec el = rec.lambda[n + 1] - detailed->lambda[n + 1];
        const Vec de = (rec.u[n + 1] - detailed->u[n + 1]) - (rec.u[n] - detailed->u[n]);
        rep.dual_error.push_back(el.norm());
        rep.dual_bound.push_back(dual_error_bound(rep.delta_r[n], std::sqrt(std::max(0.0, de.dot(ops.mass() * de))),
                                                  std::sqrt(rep.truth->v_sq[n + 1]), constants, ops.dt()));
      }
    }
  }
  return rep;
}

void write_report_csv(const std::string& path, const ErrorReport& report, std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "# config_hash=" << std::hex << config_hash << std::dec << " mu=" << format_mu(report.mu)
      << " alpha=" << report.constants.alpha << " gamma=" << report.constants.gamma << " beta=" << report.constants.beta
      << '\n';
  out << "n,delta_r,delta_s,bound_partial,true_partial,effectivity\n";
  const std::size_t L = report.delta_r.size();
  for (std::size_t n = 0; n <= L; ++n) {
    out << n << ',';
    if (n < L) out << report.delta_r[n] << ',' << report.delta_s[n];
    else out << ',';
    out << ',' << report.bound.partial[n] << ',';
    if (report.truth) {
      out << report.truth->partial[n] << ',';
      if (report.effectivity[n]) out << *report.effectivity[n];
      else out << "exact";
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace rbopt

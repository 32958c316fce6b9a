#include "rbopt/reduced.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/LU>

#include "rbopt/log.hpp"

namespace rbopt {

namespace {

double weighted_norm(const Vec& v, const Mat& g) { return std::sqrt(std::max(0.0, v.dot(g * v))); }

// A ties into the inactive set: a constraint that is redundant in the
// reduced space sits at lambda = 0, slack = 0 up to roundoff and would
// otherwise flip in and out forever.
std::vector<char> reduced_active_set(const Vec& lambda, const Vec& slack, double c, double tie) {
  std::vector<char> a(static_cast<std::size_t>(lambda.size()));
  for (Eigen::Index p = 0; p < lambda.size(); ++p) a[static_cast<std::size_t>(p)] = lambda[p] - c * slack[p] > tie;
  return a;
}

// LCP  s = S lambda + q,  lambda >= 0, s >= 0, lambda o s = 0  by the
// least-index principal pivoting method, started from the active set `start`.
// Finite for P-matrices; S = B^T K^{-1} B is one when K is coercive and B has
// full column rank. Returns false if the pivot budget runs out.
bool least_index_pivoting(const Mat& S, const Vec& q, std::vector<char> active, Vec& lambda, int& pivots) {
  const Eigen::Index n = q.size();
  const double tol = 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, q.lpNorm<Eigen::Infinity>());
  const int budget = 20000;
  for (pivots = 0; pivots < budget; ++pivots) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index p = 0; p < n; ++p)
      if (active[static_cast<std::size_t>(p)]) act.push_back(p);
    const auto na = static_cast<Eigen::Index>(act.size());
    lambda = Vec::Zero(n);
    if (na > 0) {
      Mat saa(na, na);
      Vec qa(na);
      for (Eigen::Index i = 0; i < na; ++i) {
        qa[i] = q[act[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < na; ++j) saa(i, j) = S(act[static_cast<std::size_t>(i)], act[static_cast<std::size_t>(j)]);
      }
      const Vec la = saa.partialPivLu().solve(-qa);
      for (Eigen::Index i = 0; i < na; ++i) lambda[act[static_cast<std::size_t>(i)]] = la[i];
    }
    const Vec slack = S * lambda + q;
    Eigen::Index flip = -1;
    for (Eigen::Index p = 0; p < n && flip < 0; ++p) {
      const bool a = active[static_cast<std::size_t>(p)];
      if ((a && lambda[p] < -tol) || (!a && slack[p] < -tol)) flip = p;
    }
    if (flip < 0) {
      lambda = lambda.cwiseMax(0.0);
      return true;
    }
    active[static_cast<std::size_t>(flip)] = !active[static_cast<std::size_t>(flip)];
  }
  return false;
}

}  // namespace

ReducedOperators project_operators(const ReducedBasis& basis, const DiscreteOperators& ops) {
  if (basis.config_hash != ops.config_hash()) {
    std::ostringstream msg;
    msg << "basis config hash " << std::hex << basis.config_hash << " does not match operators " << ops.config_hash();
    throw HashMismatch(msg.str());
  }
  const auto nf = static_cast<Eigen::Index>(ops.free_count());
  if (basis.psi.rows() != nf || (basis.xi.cols() > 0 && basis.xi.rows() != nf))
    throw std::invalid_argument("basis vectors do not match the free-node count");

  ReducedOperators r;
  r.ops = &ops;
  r.config_hash = basis.config_hash;
  r.psi = basis.psi;
  r.xi = basis.xi.cols() > 0 ? basis.xi : Mat(nf, 0);
  const Mat& psi = r.psi;
  const Mat xpsi = ops.gram() * psi;
  r.gram = psi.transpose() * xpsi;
  r.mass_psi = ops.mass() * psi;
  r.mass = psi.transpose() * r.mass_psi;
  for (const auto& a : ops.components()) {
    r.components_psi.push_back(a * psi);
    r.components.push_back(psi.transpose() * r.components_psi.back());
  }
  r.dual = psi.transpose() * r.xi;
  r.dual_gram = r.xi.transpose() * r.xi;
  r.constraint = r.xi.transpose() * ops.constraint(0);
  r.initial = xpsi.transpose() * ops.initial_data();
  const Mat psi_t = psi.transpose();
  r.mass_lift = psi_t * ops.mass_lift();
  for (const auto& a : ops.components_lift()) r.components_lift.push_back(psi_t * a);
  r.neumann = psi_t * ops.neumann_load();
  return r;
}

Mat reduced_bilinear(const ReducedOperators& rops, const ModelParams& mu) {
  const Vec th = affine_theta(mu);
  Mat a = th[0] * rops.components[0];
  for (Eigen::Index q = 1; q < th.size(); ++q) a += th[q] * rops.components[static_cast<std::size_t>(q)];
  return a;
}

Vec reduced_load(const ReducedOperators& rops, const ModelParams& mu, std::size_t step) {
  const DiscreteOperators& ops = *rops.ops;
  const Vec g0 = ops.lift(mu, step), g1 = ops.lift(mu, step + 1);
  const double th = ops.theta();
  const Vec gt = th * g1 + (1.0 - th) * g0;
  const Vec theta = affine_theta(mu);
  Vec f = -(rops.mass_lift * (g1 - g0)) / ops.dt();
  for (Eigen::Index q = 0; q < theta.size(); ++q) f -= theta[q] * (rops.components_lift[static_cast<std::size_t>(q)] * gt);
  if (ops.spec().type == OptionType::EuropeanCall) f += rops.neumann;
  return f;
}

Trajectory solve_reduced(const ReducedOperators& rops, const ModelParams& mu, const PdasOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const DiscreteOperators& ops = *rops.ops;
  mu.validate();
  const std::size_t L = ops.time_steps();
  const double dt = ops.dt(), th = ops.theta();
  const Eigen::Index nv = rops.gram.rows(), nw = rops.dual.cols();
  const Mat a = reduced_bilinear(rops, mu);
  const Mat lhs = rops.mass / dt + th * a;
  const Mat rhs_op = rops.mass / dt - (1.0 - th) * a;

  Trajectory traj;
  traj.mu = mu;
  traj.u.push_back(rops.gram.ldlt().solve(rops.initial));
  const bool american = ops.american();
  if (!american || nw == 0) {
    if (american) traj.lambda.assign(1, Vec::Zero(0));
    Eigen::PartialPivLU<Mat> lu(lhs);
    for (std::size_t n = 0; n < L; ++n) {
      const Vec b = rhs_op * traj.u.back() + reduced_load(rops, mu, n);
      Vec next = lu.solve(b);
      if (!next.allFinite()) throw SolverError("singular reduced system", n + 1, format_mu(mu));
      traj.u.push_back(std::move(next));
      if (american) traj.lambda.push_back(Vec::Zero(0));
      traj.iterations.push_back(1);
      traj.active_sizes.push_back(0);
    }
    traj.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return traj;
  }

  traj.lambda.push_back(Vec::Zero(nw));
  const Mat bt = rops.dual.transpose();
  const Vec& g = rops.constraint;
  const double tie = 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, opt.c * g.lpNorm<Eigen::Infinity>());
  // balances the constraint blocks against the primal block so the rank
  // threshold of the LU is meaningful
  const double bnorm = rops.dual.norm();
  const double omega = bnorm > 0.0 ? lhs.norm() / bnorm : 1.0;
  Eigen::FullPivLU<Mat> lu;
  std::optional<Eigen::PartialPivLU<Mat>> pivot_lu;
  for (std::size_t n = 0; n < L; ++n) {
    const Vec b = rhs_op * traj.u.back() + reduced_load(rops, mu, n);
    Vec u = traj.u.back(), lam = traj.lambda.back();
    std::vector<std::vector<char>> seen;
    int iterations = 0;
    bool converged = false, cycled = false;
    std::size_t n_active = 0;
    while (iterations < opt.max_iter) {
      auto current = reduced_active_set(lam, bt * u - g, opt.c, tie);
      if (!seen.empty() && current == seen.back()) {
        converged = true;
        break;
      }
      if (std::find(seen.begin(), seen.end(), current) != seen.end()) {
        // the active-set sequence cycles (the reduced saddle matrix is no
        // M-matrix); finish the step by principal pivoting on the condensed LCP
        log::debug("reduced PDAS cycle at step " + std::to_string(n + 1) + ", mu = " + format_mu(mu));
        cycled = true;
        break;
      }
      std::vector<Eigen::Index> act;
      for (Eigen::Index p = 0; p < nw; ++p)
        if (current[static_cast<std::size_t>(p)]) act.push_back(p);
      const auto na = static_cast<Eigen::Index>(act.size());
      Mat k = Mat::Zero(nv + na, nv + na);
      Vec rhs(nv + na);
      k.topLeftCorner(nv, nv) = lhs;
      rhs.head(nv) = b;
      for (Eigen::Index j = 0; j < na; ++j) {
        k.block(0, nv + j, nv, 1) = -omega * rops.dual.col(act[static_cast<std::size_t>(j)]);
        k.block(nv + j, 0, 1, nv) = omega * bt.row(act[static_cast<std::size_t>(j)]);
        rhs[nv + j] = omega * g[act[static_cast<std::size_t>(j)]];
      }
      lu.compute(k);
      lu.setThreshold(1e-13);
      if (!lu.isInvertible())
        throw SolverError("singular reduced saddle system (inf-sup loss)", n + 1, format_mu(mu), act.size());
      const Vec x = lu.solve(rhs);
      Vec lam_new = Vec::Zero(nw);
      for (Eigen::Index j = 0; j < na; ++j) lam_new[act[static_cast<std::size_t>(j)]] = omega * x[nv + j];
      const Vec u_new = x.head(nv);
      const double inc = weighted_norm(u_new - u, rops.gram) + weighted_norm(lam_new - lam, rops.dual_gram);
      u = u_new;
      lam = std::move(lam_new);
      n_active = act.size();
      ++iterations;
      seen.push_back(std::move(current));
      if (inc <= opt.eps) {
        converged = true;
        break;
      }
    }
    if (!converged && !cycled && !seen.empty() && reduced_active_set(lam, bt * u - g, opt.c, tie) == seen.back())
      converged = true;
    if (!converged) {
      if (!pivot_lu) pivot_lu.emplace(lhs);
      const Mat kinv_b = pivot_lu->solve(rops.dual);
      const Mat S = bt * kinv_b;
      const Vec q = bt * pivot_lu->solve(b) - g;
      auto start = seen.empty() ? std::vector<char>(static_cast<std::size_t>(nw), 0) : seen.back();
      int pivots = 0;
      if (least_index_pivoting(S, q, std::move(start), lam, pivots)) {
        u = pivot_lu->solve(b) + kinv_b * lam;
        n_active = static_cast<std::size_t>((lam.array() > 0).count());
        iterations += pivots;
        converged = true;
      }
    }
    if (!converged)
      throw SolverError("reduced PDAS did not converge in " + std::to_string(opt.max_iter) + " iterations", n + 1,
                        format_mu(mu), n_active);
    traj.u.push_back(std::move(u));
    traj.lambda.push_back(std::move(lam));
    traj.iterations.push_back(iterations);
    traj.active_sizes.push_back(n_active);
  }
  traj.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

Trajectory reconstruct(const ReducedOperators& rops, const Trajectory& reduced) {
  Trajectory full;
  full.mu = reduced.mu;
  full.iterations = reduced.iterations;
  full.active_sizes = reduced.active_sizes;
  full.seconds = reduced.seconds;
  for (const auto& u : reduced.u) full.u.push_back(rops.psi * u);
  for (const auto& l : reduced.lambda)
    full.lambda.push_back(l.size() == 0 ? Vec(Vec::Zero(rops.psi.rows())) : Vec(rops.xi * l));
  return full;
}

Vec reconstruct_field(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced, std::size_t step) {
  return full_field(*rops.ops, mu, rops.psi * reduced.u.at(step), step);
}

void write_reduced_csv(const std::string& path, const ReducedOperators& rops, const Trajectory& reduced) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "# config_hash=" << std::hex << rops.config_hash << std::dec << " mu=" << format_mu(reduced.mu)
      << " N_V=" << rops.n_primal() << " N_W=" << rops.n_dual() << '\n';
  out << "step";
  for (std::size_t i = 0; i < rops.n_primal(); ++i) out << ",U" << i;
  if (!reduced.lambda.empty())
    for (std::size_t i = 0; i < rops.n_dual(); ++i) out << ",Lambda" << i;
  out << '\n';
  for (std::size_t n = 0; n < reduced.u.size(); ++n) {
    out << n;
    for (Eigen::Index i = 0; i < reduced.u[n].size(); ++i) out << ',' << reduced.u[n][i];
    if (!reduced.lambda.empty())
      for (Eigen::Index i = 0; i < reduced.lambda[n].size(); ++i) out << ',' << reduced.lambda[n][i];
    out << '\n';
  }
}

}  // namespace rbopt

#include "rbopt/detailed_solver.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <Eigen/SparseLU>

namespace rbopt {

namespace {

double x_norm(const Vec& v, const SpMat* gram) {
  if (!gram) return v.norm();
  return std::sqrt(std::max(0.0, v.dot(*gram * v)));
}

std::vector<char> active_set(const Vec& u, const Vec& lambda, const Vec& g, double c) {
  std::vector<char> a(static_cast<std::size_t>(u.size()));
  for (Eigen::Index p = 0; p < u.size(); ++p) a[static_cast<std::size_t>(p)] = (lambda[p] - c * (u[p] - g[p]) >= 0.0);
  return a;
}

}  // namespace

LcpResult pdas_solve(const SpMat& K, const Vec& rhs, const Vec& g, const Vec& u0, const Vec& lambda0,
                     const PdasOptions& opt, const SpMat* gram) {
  const Eigen::Index n = K.rows();
  LcpResult res;
  res.u = u0;
  res.lambda = lambda0;
  std::vector<char> used;
  std::vector<int> inactive_map(static_cast<std::size_t>(n));
  Eigen::SparseLU<SpMat> lu;

  for (int it = 0; it < opt.max_iter; ++it) {
    auto current = active_set(res.u, res.lambda, g, opt.c);
    if (!used.empty() && current == used) {
      res.converged = true;
      break;
    }
    std::size_t n_inactive = 0;
    Vec g_active = Vec::Zero(n);
    for (Eigen::Index p = 0; p < n; ++p) {
      if (current[static_cast<std::size_t>(p)]) {
        inactive_map[static_cast<std::size_t>(p)] = -1;
        g_active[p] = g[p];
      } else {
        inactive_map[static_cast<std::size_t>(p)] = static_cast<int>(n_inactive++);
      }
    }
    Vec u_new = g_active;
    if (n_inactive > 0) {
      const SpMat k_ii = restrict_rows_cols(K, inactive_map, n_inactive, inactive_map, n_inactive);
      const Vec coupling = K * g_active;
      Vec b(static_cast<Eigen::Index>(n_inactive));
      for (Eigen::Index p = 0; p < n; ++p)
        if (inactive_map[static_cast<std::size_t>(p)] >= 0) b[inactive_map[static_cast<std::size_t>(p)]] = rhs[p] - coupling[p];
      lu.compute(k_ii);
      if (lu.info() != Eigen::Success) throw std::runtime_error("singular inactive block in PDAS");
      const Vec x = lu.solve(b);
      for (Eigen::Index p = 0; p < n; ++p)
        if (inactive_map[static_cast<std::size_t>(p)] >= 0) u_new[p] = x[inactive_map[static_cast<std::size_t>(p)]];
    }
    Vec lambda_new = Vec::Zero(n);
    const Vec residual = K * u_new - rhs;
    std::size_t n_active = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      if (current[static_cast<std::size_t>(p)]) {
        lambda_new[p] = residual[p];
        ++n_active;
      }
    res.increment = x_norm(u_new - res.u, gram) + (lambda_new - res.lambda).norm();
    res.u = std::move(u_new);
    res.lambda = std::move(lambda_new);
    res.active = n_active;
    ++res.iterations;
    used = std::move(current);
    if (res.increment <= opt.eps) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) {
    // a final set check covers convergence on the last permitted solve
    if (!used.empty() && active_set(res.u, res.lambda, g, opt.c) == used) res.converged = true;
  }
  return res;
}

Trajectory solve_european(const DiscreteOperators& ops, const ModelParams& mu) {
  const auto t0 = std::chrono::steady_clock::now();
  mu.validate();
  const std::size_t L = ops.time_steps();
  const double dt = ops.dt(), th = ops.theta();
  const SpMat a = ops.bilinear(mu);
  const SpMat lhs = SpMat(ops.mass() / dt + th * a);
  const SpMat rhs_op = SpMat(ops.mass() / dt - (1.0 - th) * a);
  Eigen::SparseLU<SpMat> lu(lhs);
  if (lu.info() != Eigen::Success) throw SolverError("singular theta-scheme system", 0, format_mu(mu));

  Trajectory traj;
  traj.mu = mu;
  traj.u.reserve(L + 1);
  traj.u.push_back(ops.initial_data());
  for (std::size_t n = 0; n < L; ++n) {
    const Vec b = rhs_op * traj.u.back() + ops.load(mu, n);
    Vec next = lu.solve(b);
    if (!next.allFinite()) throw SolverError("non-finite theta-scheme solution", n + 1, format_mu(mu));
    traj.u.push_back(std::move(next));
    traj.iterations.push_back(1);
    traj.active_sizes.push_back(0);
  }
  traj.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

Trajectory solve_american(const DiscreteOperators& ops, const ModelParams& mu, const PdasOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  mu.validate();
  if (ops.theta() != 1.0) throw SolverError("American solves use theta = 1", 0, format_mu(mu));
  const std::size_t L = ops.time_steps();
  const double dt = ops.dt();
  const SpMat a = ops.bilinear(mu);
  const SpMat lhs = SpMat(ops.mass() / dt + a);
  const Eigen::Index n_free = static_cast<Eigen::Index>(ops.free_count());

  Trajectory traj;
  traj.mu = mu;
  traj.u.push_back(ops.initial_data());
  traj.lambda.push_back(Vec::Zero(n_free));
  for (std::size_t n = 0; n < L; ++n) {
    const Vec b = ops.mass() * traj.u.back() / dt + ops.load(mu, n);
    const Vec g = ops.constraint(n);
    LcpResult step;
    try {
      // u^0 sits exactly on the obstacle with lambda^0 = 0, so every node ties
      // into the active set; the first step starts from the unconstrained step.
      Vec u_start = traj.u.back();
      if (n == 0) {
        Eigen::SparseLU<SpMat> lu(lhs);
        if (lu.info() != Eigen::Success) throw std::runtime_error("singular implicit Euler system");
        u_start = lu.solve(b);
      }
      step = pdas_solve(lhs, b, g, u_start, traj.lambda.back(), opt, &ops.gram());
    } catch (const std::runtime_error& e) {
      throw SolverError(e.what(), n + 1, format_mu(mu));
    }
    if (!step.converged)
      throw SolverError("PDAS did not converge in " + std::to_string(opt.max_iter) + " iterations", n + 1,
                        format_mu(mu), step.active);
    traj.u.push_back(std::move(step.u));
    traj.lambda.push_back(std::move(step.lambda));
    traj.iterations.push_back(step.iterations);
    traj.active_sizes.push_back(step.active);
  }
  traj.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

Trajectory solve_detailed(const DiscreteOperators& ops, const ModelParams& mu, const PdasOptions& opt) {
  return ops.american() ? solve_american(ops, mu, opt) : solve_european(ops, mu);
}

Vec project_initial(const DiscreteOperators& ops, const Vec& w0_free) {
  if (w0_free.size() != static_cast<Eigen::Index>(ops.free_count()))
    throw std::invalid_argument("initial data has the wrong length");
  return w0_free;
}

Vec full_field(const DiscreteOperators& ops, const ModelParams& mu, const Vec& u_free, std::size_t step) {
  Vec w = ops.lift_nodal(mu, step);
  const auto& fn = ops.mesh().free_nodes;
  for (std::size_t k = 0; k < fn.size(); ++k) w[fn[k]] += u_free[static_cast<Eigen::Index>(k)];
  return w;
}

void write_trajectory_csv(const std::string& path, const DiscreteOperators& ops, const Trajectory& traj,
                          bool multipliers) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  const auto& mesh = ops.mesh();
  out << "# config_hash=" << std::hex << ops.config_hash() << std::dec << " mu=" << format_mu(traj.mu)
      << (multipliers ? " field=lambda(free nodes)" : " field=w(all nodes)") << '\n';
  out << "step";
  if (multipliers) {
    for (int node : mesh.free_nodes) out << ",n" << node;
  } else {
    for (std::size_t i = 0; i < mesh.node_count(); ++i) out << ",n" << i;
  }
  out << '\n';
  if (multipliers) {
    for (std::size_t n = 0; n < traj.lambda.size(); ++n) {
      out << n;
      for (Eigen::Index k = 0; k < traj.lambda[n].size(); ++k) out << ',' << traj.lambda[n][k];
      out << '\n';
    }
    return;
  }
  for (std::size_t n = 0; n < traj.u.size(); ++n) {
    const Vec w = full_field(ops, traj.mu, traj.u[n], n);
    out << n;
    for (Eigen::Index k = 0; k < w.size(); ++k) out << ',' << w[k];
    out << '\n';
  }
}

}  // namespace rbopt

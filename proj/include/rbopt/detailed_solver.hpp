#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rbopt/fem.hpp"

namespace rbopt {

/// Raised when a time step cannot be completed (singular system or PDAS
/// without convergence). Carries the step index and the parameter.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::size_t step, std::string mu, std::size_t active = 0)
      : std::runtime_error(what + " (step " + std::to_string(step) + ", mu = " + mu +
                           ", active set size " + std::to_string(active) + ")"),
        step_(step), active_(active) {}
  std::size_t step() const { return step_; }
  std::size_t active_size() const { return active_; }

private:
  std::size_t step_;
  std::size_t active_;
};

struct PdasOptions {
  double c = 1.0;
  double eps = 1e-10;
  int max_iter = 50;
};

/// Full time sequence of a detailed (or reconstructed) solve. u has L+1
/// entries; lambda has L+1 entries with lambda[0] = 0, or is empty for
/// European options.
struct Trajectory {
  ModelParams mu;
  std::vector<Vec> u;
  std::vector<Vec> lambda;
  std::vector<int> iterations;
  std::vector<std::size_t> active_sizes;
  double seconds = 0.0;

  std::size_t steps() const { return u.empty() ? 0 : u.size() - 1; }
};

struct LcpResult {
  Vec u;
  Vec lambda;
  int iterations = 0;
  double increment = 0.0;
  std::size_t active = 0;
  bool converged = false;
};

// One complementarity step with identity duality: find u, lambda with
//   K u - lambda = rhs,  lambda >= 0,  u >= g,  lambda o (u - g) = 0,
// by the primal-dual active set iteration warm-started at (u0, lambda0).
// The increment norm uses the Gram matrix when given, Euclidean otherwise.
LcpResult pdas_solve(const SpMat& K, const Vec& rhs, const Vec& g, const Vec& u0, const Vec& lambda0,
                     const PdasOptions& opt, const SpMat* gram = nullptr);

// Theta-scheme trajectory of the European call.
Trajectory solve_european(const DiscreteOperators& ops, const ModelParams& mu);

// Implicit Euler trajectory of the American put; each step solved by PDAS.
Trajectory solve_american(const DiscreteOperators& ops, const ModelParams& mu, const PdasOptions& opt = {});

// Dispatches on the option type of ops.
Trajectory solve_detailed(const DiscreteOperators& ops, const ModelParams& mu, const PdasOptions& opt = {});

// Initial data at the detailed level: the nodal interpolant, unchanged.
Vec project_initial(const DiscreteOperators& ops, const Vec& w0_free);

// Nodal values w^n = u^n + u_g^n over all mesh nodes.
Vec full_field(const DiscreteOperators& ops, const ModelParams& mu, const Vec& u_free, std::size_t step);

// Writes one row per time step (full nodal field) as comma-separated values.
void write_trajectory_csv(const std::string& path, const DiscreteOperators& ops, const Trajectory& traj,
                          bool multipliers = false);

}  // namespace rbopt

#pragma once

#include <string>
#include <vector>

#include "rbopt/detailed_solver.hpp"
#include "rbopt/reduced_basis.hpp"

namespace rbopt {

/// Parameter-independent projections of the detailed operators onto a
/// reduced basis. The online solve touches only the small matrices plus
/// the Dirichlet values of the lift (boundary-sized).
struct ReducedOperators {
  const DiscreteOperators* ops = nullptr;
  std::uint64_t config_hash = 0;

  Mat gram;                     // Psi^T X Psi, identity up to round-off
  Mat mass;                     // Psi^T M Psi
  std::vector<Mat> components;  // Psi^T A_q Psi
  Mat dual;                     // Psi^T B Xi with B = I
  Mat dual_gram;                // Xi^T Xi, the W inner product on span(Xi)
  Vec constraint;               // Xi^T G
  Vec initial;                  // Psi^T X u^0

  Mat mass_lift;                     // Psi^T M_fd
  std::vector<Mat> components_lift;  // Psi^T A_q,fd
  Vec neumann;                       // Psi^T f^E

  // Detailed-sized blocks used by the residual estimator.
  Mat psi;
  Mat xi;
  Mat mass_psi;                     // M Psi
  std::vector<Mat> components_psi;  // A_q Psi

  std::size_t n_primal() const { return static_cast<std::size_t>(gram.rows()); }
  std::size_t n_dual() const { return static_cast<std::size_t>(dual.cols()); }
};

class HashMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Throws HashMismatch when the basis was built for other operators.
ReducedOperators project_operators(const ReducedBasis& basis, const DiscreteOperators& ops);

// Reduced load F_N^n(mu) of the step n -> n+1.
Vec reduced_load(const ReducedOperators& rops, const ModelParams& mu, std::size_t step);

// Reduced A_N(mu) = sum_q theta_q(mu) Psi^T A_q Psi.
Mat reduced_bilinear(const ReducedOperators& rops, const ModelParams& mu);

// Reduced time stepping. American: primal-dual active set per step on the
// saddle system, warm-started from the previous step, Lambda^0 = 0.
// European: one dense solve per step. Coefficient vectors are returned in a
// Trajectory (lambda empty for European).
Trajectory solve_reduced(const ReducedOperators& rops, const ModelParams& mu, const PdasOptions& opt = {});

// Free-node fields Psi U_N^n and Xi Lambda_N^n.
Trajectory reconstruct(const ReducedOperators& rops, const Trajectory& reduced);

// Nodal w_N^n = Psi U_N^n + u_g^n over all mesh nodes.
Vec reconstruct_field(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced, std::size_t step);

// Coefficient rows (one per step): U_N, then Lambda_N when present.
void write_reduced_csv(const std::string& path, const ReducedOperators& rops, const Trajectory& reduced);

}  // namespace rbopt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbopt/reduced.hpp"
#include "rbopt/stability.hpp"

namespace rbopt {

// ||r^n||_{V'} of the reduced step n -> n+1, evaluated on all detailed test
// functions through the affine blocks and one Gram solve.
double equality_residual_norm(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced,
                              std::size_t n);

// Detailed residual vector R^n (entries r^n(phi_i)); exposed for tests.
Vec equality_residual(const ReducedOperators& rops, const ModelParams& mu, const Trajectory& reduced, std::size_t n);

struct InequalityResidual {
  Vec eta;       // s^n(chi_i) = (B^T Psi U_N^{n+1} - G^n)_i
  Vec pi;        // cone projection of eta
  double delta = 0.0;
};

// pi(eta) = mask(lambda == 0) o [eta]_+, componentwise.
Vec cone_projector(const Vec& eta, const Vec& lambda);

InequalityResidual inequality_residual(const ReducedOperators& rops, const Trajectory& reduced, std::size_t n);

struct EnergyBound {
  double total = 0.0;
  // partial[n]: initial term plus the step terms m = 0..n-1, n = 0..L
  std::vector<double> partial;
};

// Throws std::domain_error when alpha <= 0 (outside the coercive regime).
EnergyBound energy_bound(const std::vector<double>& delta_r, const std::vector<double>& delta_s,
                         const StabilityConstants& c, double dt, double initial_error_l2_sq);

struct TrueErrors {
  std::vector<double> v_sq;   // ||e^n||_V^2
  std::vector<double> l2_sq;  // ||e^n||_{L2}^2
  double l2_true = 0.0;       // dt sum_n ||e^n||_V^2
  double energy_true = 0.0;   // 1/2 ||e^L||_L2^2 + alpha/2 dt sum_n ||e^n||_V^2
  // partial[n] = 1/2 ||e^n||_L2^2 + alpha/2 dt sum_{m<=n} ||e^m||_V^2
  std::vector<double> partial;
};

// detailed and reconstructed are free-node trajectories of equal length.
TrueErrors true_errors(const DiscreteOperators& ops, const Trajectory& detailed, const Trajectory& reconstructed,
                       double alpha);

// Right-hand side of the primal/dual error relation at step n -> n+1.
double dual_error_bound(double delta_r, double increment_l2, double error_next_v, const StabilityConstants& c,
                        double dt);

// sqrt(apost / truth); empty when the true error vanishes ("exact").
std::optional<double> effectivity(double apost, double truth);

/// Certification of one reduced solve.
struct ErrorReport {
  ModelParams mu;
  StabilityConstants constants;
  std::vector<double> delta_r;  // n = 0..L-1
  std::vector<double> delta_s;
  double initial_term = 0.0;    // 1/2 ||e^0||_L2^2
  EnergyBound bound;
  std::optional<TrueErrors> truth;
  std::vector<std::optional<double>> effectivity;  // per n = 0..L, with truth
  std::vector<double> dual_error;                  // ||e_lambda^{n+1}||_W, with truth
  std::vector<double> dual_bound;
};

// The initial error is the X-orthogonal projection error of u^0 and is
// available without a detailed solve.
ErrorReport certify(const ReducedOperators& rops, const Trajectory& reduced, const StabilityConstants& constants,
                    const Trajectory* detailed = nullptr);

// Per-step traces: n, delta_r, delta_s, bound partial sum, true partial sum, effectivity.
void write_report_csv(const std::string& path, const ErrorReport& report, std::uint64_t config_hash);

}  // namespace rbopt

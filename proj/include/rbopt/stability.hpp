#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>

#include "rbopt/fem.hpp"

namespace rbopt {

/// Coercivity, continuity and inf-sup constants of one discretization at mu.
struct StabilityConstants {
  double alpha = 0.0;    // inf a(u,u;mu) / |u|_V^2
  double gamma = 0.0;    // sup a(u,v;mu) / (|u|_V |v|_V)
  double beta = 0.0;     // detailed inf-sup constant of b with Euclidean W
  double c_omega = 1.0;  // |v|_L2 <= c_omega |v|_V
};

enum class EigenMethod { Auto, Dense, Lanczos };

enum class Extreme { Both, Min, Max };

struct LanczosOptions {
  Extreme which = Extreme::Both;
  double tol = 1e-8;
  int max_iter = 1500;
  std::uint64_t seed = 12345;
};

struct LanczosResult {
  double min = 0.0;
  double max = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Extreme eigenvalues of an operator T that is self-adjoint in the inner
// product <u, v>_B = u^T B v. Full reorthogonalization; converged when the
// residual bound of the requested extreme Ritz pair(s) is below tol * spectral
// radius.
LanczosResult lanczos_extremes(const std::function<Vec(const Vec&)>& apply_T,
                               const std::function<Vec(const Vec&)>& apply_B, Eigen::Index n,
                               const LanczosOptions& opt = {});

double inf_sup_constant(const DiscreteOperators& ops, EigenMethod method = EigenMethod::Auto);
double coercivity_constant(const DiscreteOperators& ops, const ModelParams& mu, EigenMethod method = EigenMethod::Auto);
double continuity_constant(const DiscreteOperators& ops, const ModelParams& mu, EigenMethod method = EigenMethod::Auto);

StabilityConstants compute_constants(const DiscreteOperators& ops, const ModelParams& mu,
                                     EigenMethod method = EigenMethod::Auto);

/// Per-mu cache of the constants; beta computed once. Thread-safe.
class ConstantsCache {
public:
  explicit ConstantsCache(const DiscreteOperators& ops, EigenMethod method = EigenMethod::Auto)
      : ops_(ops), method_(method) {}

  StabilityConstants get(const ModelParams& mu);
  double beta();

private:
  const DiscreteOperators& ops_;
  EigenMethod method_;
  std::mutex mutex_;
  std::map<std::vector<double>, StabilityConstants> cache_;
  double beta_ = -1.0;
};

}  // namespace rbopt

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rbopt {

enum class ModelKind { BlackScholes, Heston };
enum class OptionType { EuropeanCall, AmericanPut };

std::string_view to_string(ModelKind kind);
std::string_view to_string(OptionType type);
ModelKind model_from_string(std::string_view name);
OptionType option_from_string(std::string_view name);

/// Thrown for parameter vectors and option specs that break their invariants.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter vector mu. Black-Scholes coordinates are (sigma, q, r); Heston
/// coordinates are (xi, rho, gamma, kappa, r).
class ModelParams {
public:
  ModelParams() = default;
  ModelParams(ModelKind kind, std::vector<double> values);

  static ModelParams black_scholes(double sigma, double q, double r);
  static ModelParams heston(double xi, double rho, double gamma, double kappa, double r);

  ModelKind kind() const { return kind_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  double sigma() const;
  double q() const;
  double xi() const;
  double rho() const;
  double gamma() const;
  double kappa() const;
  double r() const;

  // Throws ValidationError when an invariant of the model is violated.
  void validate() const;

  // xi^2 < 2 kappa gamma. Always true for Black-Scholes.
  bool feller_satisfied() const;

  static std::size_t dimension(ModelKind kind) { return kind == ModelKind::BlackScholes ? 3 : 5; }
  static const std::vector<std::string>& coordinate_names(ModelKind kind);
  static std::size_t coordinate_index(ModelKind kind, std::string_view name);

  bool operator==(const ModelParams&) const = default;

private:
  ModelKind kind_ = ModelKind::BlackScholes;
  std::vector<double> values_ = {0.0, 0.0, 0.0};
};

std::string format_mu(const ModelParams& mu);

/// Axis-aligned box of admissible parameters; coordinates outside
/// active_coords are pinned to the default vector.
struct ParameterBox {
  ModelKind kind = ModelKind::BlackScholes;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> active_coords;
  ModelParams defaults;

  void validate() const;
  bool contains(const ModelParams& mu, double rel_slack = 1e-12) const;

  // Equidistant tensor grid over the active coordinates, first active
  // coordinate varying slowest.
  std::vector<ModelParams> tensor_grid(std::span<const std::size_t> counts) const;
  std::vector<ModelParams> tensor_grid(std::size_t per_axis) const;

  // Uniform samples drawn with a seeded 64-bit Mersenne twister.
  std::vector<ModelParams> random(std::size_t count, std::uint64_t seed) const;
};

struct OptionSpec {
  OptionType type = OptionType::AmericanPut;
  double strike = 100.0;
  double maturity = 1.0;
  ModelKind model = ModelKind::BlackScholes;

  void validate() const;
};

// Payoff at a spatial coordinate: the stock price S for Black-Scholes, the
// log-price x = log(S/K) for Heston.
double payoff(const OptionSpec& spec, double coordinate);

/// Coefficients theta_q(mu) of the affine expansion a(.,.;mu) = sum theta_q a_q.
/// Black-Scholes: (sigma^2, r - q, r). Heston: (1, xi^2, rho xi, kappa, kappa gamma, r).
Eigen::VectorXd affine_theta(const ModelParams& mu);
std::size_t affine_count(ModelKind kind);
const std::vector<std::string>& affine_component_ids(ModelKind kind);

// Standard normal CDF via erfc, absolute error well below 1e-12.
double normal_cdf(double x);

enum class HestonBoundary { Gamma1, Gamma2, Gamma3, Gamma4 };

/// Heston rectangle (v_min, v_max) x (x_min, x_max).
struct HestonDomain {
  double v_min = 0.0025;
  double v_max = 0.5;
  double x_min = -5.0;
  double x_max = 5.0;
};

// Dirichlet data of the European call under Heston at time-to-maturity t.
// Gamma1: v = v_min, Gamma2: v = v_max, Gamma3: x = x_min (blend of the Gamma1
// and Gamma2 values). At t = 0 returns the payoff. Gamma4 is a Neumann edge
// and is rejected.
double heston_dirichlet_data(const ModelParams& mu, const OptionSpec& spec, const HestonDomain& dom,
                             double t, HestonBoundary edge, double v, double x);

}  // namespace rbopt

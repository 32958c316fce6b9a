#include "rbopt/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "rbopt/log.hpp"

namespace rbopt {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::BlackScholes ? "black-scholes" : "heston";
}

std::string_view to_string(OptionType type) {
  return type == OptionType::EuropeanCall ? "european-call" : "american-put";
}

ModelKind model_from_string(std::string_view name) {
  if (name == "black-scholes" || name == "bs") return ModelKind::BlackScholes;
  if (name == "heston") return ModelKind::Heston;
  throw ValidationError("unknown model '" + std::string(name) + "'");
}

OptionType option_from_string(std::string_view name) {
  if (name == "european-call") return OptionType::EuropeanCall;
  if (name == "american-put") return OptionType::AmericanPut;
  throw ValidationError("unknown option type '" + std::string(name) + "'");
}

ModelParams::ModelParams(ModelKind kind, std::vector<double> values)
    : kind_(kind), values_(std::move(values)) {
  if (values_.size() != dimension(kind_))
    throw ValidationError("parameter vector has " + std::to_string(values_.size()) +
                          " entries, model " + std::string(to_string(kind_)) + " needs " +
                          std::to_string(dimension(kind_)));
}

ModelParams ModelParams::black_scholes(double sigma, double q, double r) {
  return ModelParams(ModelKind::BlackScholes, {sigma, q, r});
}

ModelParams ModelParams::heston(double xi, double rho, double gamma, double kappa, double r) {
  return ModelParams(ModelKind::Heston, {xi, rho, gamma, kappa, r});
}

namespace {
void require(bool ok, ModelKind kind, const char* what) {
  if (!ok) throw ValidationError(std::string(what) + " is not defined for model " +
                                 std::string(to_string(kind)));
}
}  // namespace

double ModelParams::sigma() const { require(kind_ == ModelKind::BlackScholes, kind_, "sigma"); return values_[0]; }
double ModelParams::q() const { require(kind_ == ModelKind::BlackScholes, kind_, "q"); return values_[1]; }
double ModelParams::xi() const { require(kind_ == ModelKind::Heston, kind_, "xi"); return values_[0]; }
double ModelParams::rho() const { require(kind_ == ModelKind::Heston, kind_, "rho"); return values_[1]; }
double ModelParams::gamma() const { require(kind_ == ModelKind::Heston, kind_, "gamma"); return values_[2]; }
double ModelParams::kappa() const { require(kind_ == ModelKind::Heston, kind_, "kappa"); return values_[3]; }
double ModelParams::r() const { return kind_ == ModelKind::BlackScholes ? values_[2] : values_[4]; }

void ModelParams::validate() const {
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("parameter vector contains a non-finite entry");
  if (kind_ == ModelKind::BlackScholes) {
    if (!(sigma() > 0)) throw ValidationError("sigma must be positive");
    if (q() < 0) throw ValidationError("q must be nonnegative");
    if (r() < 0) throw ValidationError("r must be nonnegative");
  } else {
    if (!(xi() > 0)) throw ValidationError("xi must be positive");
    if (!(kappa() > 0)) throw ValidationError("kappa must be positive");
    if (!(gamma() > 0)) throw ValidationError("gamma must be positive");
    if (r() < 0) throw ValidationError("r must be nonnegative");
    if (rho() < -1 || rho() > 1) throw ValidationError("rho must lie in [-1, 1]");
    if (!feller_satisfied())
      log::warn("Feller condition xi^2 < 2 kappa gamma violated for mu = " + format_mu(*this));
  }
}

bool ModelParams::feller_satisfied() const {
  if (kind_ == ModelKind::BlackScholes) return true;
  return xi() * xi() < 2.0 * kappa() * gamma();
}

const std::vector<std::string>& ModelParams::coordinate_names(ModelKind kind) {
  static const std::vector<std::string> bs = {"sigma", "q", "r"};
  static const std::vector<std::string> h = {"xi", "rho", "gamma", "kappa", "r"};
  return kind == ModelKind::BlackScholes ? bs : h;
}

std::size_t ModelParams::coordinate_index(ModelKind kind, std::string_view name) {
  const auto& names = coordinate_names(kind);
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ValidationError("unknown coordinate '" + std::string(name) + "' for model " +
                          std::string(to_string(kind)));
  return static_cast<std::size_t>(it - names.begin());
}

std::string format_mu(const ModelParams& mu) {
  std::string out = "(";
  char buf[32];
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", mu[i]);
    out += (i ? "," : "");
    out += buf;
  }
  return out + ")";
}

void ParameterBox::validate() const {
  const std::size_t d = ModelParams::dimension(kind);
  if (lower.size() != d || upper.size() != d)
    throw ValidationError("parameter box dimension does not match the model");
  for (std::size_t i = 0; i < d; ++i)
    if (!(lower[i] <= upper[i])) throw ValidationError("parameter box has lower > upper");
  if (active_coords.empty()) throw ValidationError("parameter box has no active coordinates");
  for (auto c : active_coords)
    if (c >= d) throw ValidationError("active coordinate index out of range");
  if (defaults.kind() != kind || defaults.size() != d)
    throw ValidationError("default parameter vector does not match the box");
}

bool ParameterBox::contains(const ModelParams& mu, double rel_slack) const {
  if (mu.kind() != kind) return false;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const bool active = std::find(active_coords.begin(), active_coords.end(), i) != active_coords.end();
    if (active) {
      const double slack = rel_slack * std::max(std::abs(lower[i]), std::abs(upper[i]));
      if (mu[i] < lower[i] - slack || mu[i] > upper[i] + slack) return false;
    } else if (mu[i] != defaults[i]) {
      return false;
    }
  }
  return true;
}

std::vector<ModelParams> ParameterBox::tensor_grid(std::span<const std::size_t> counts) const {
  validate();
  if (counts.size() != active_coords.size())
    throw ValidationError("grid counts must match the number of active coordinates");
  std::size_t total = 1;
  for (auto c : counts) {
    if (c == 0) throw ValidationError("grid count must be positive");
    total *= c;
  }
  std::vector<ModelParams> out;
  out.reserve(total);
  std::vector<std::size_t> idx(counts.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    ModelParams mu = defaults;
    for (std::size_t a = 0; a < counts.size(); ++a) {
      const std::size_t c = active_coords[a];
      const double t = counts[a] == 1 ? 0.5 : static_cast<double>(idx[a]) / static_cast<double>(counts[a] - 1);
      mu[c] = counts[a] == 1 ? 0.5 * (lower[c] + upper[c]) : lower[c] + t * (upper[c] - lower[c]);
      if (counts[a] > 1 && idx[a] == counts[a] - 1) mu[c] = upper[c];
    }
    out.push_back(std::move(mu));
    for (std::size_t a = counts.size(); a-- > 0;) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

std::vector<ModelParams> ParameterBox::tensor_grid(std::size_t per_axis) const {
  std::vector<std::size_t> counts(active_coords.size(), per_axis);
  return tensor_grid(counts);
}

std::vector<ModelParams> ParameterBox::random(std::size_t count, std::uint64_t seed) const {
  validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ModelParams> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ModelParams mu = defaults;
    for (auto c : active_coords) mu[c] = lower[c] + unit(rng) * (upper[c] - lower[c]);
    out.push_back(std::move(mu));
  }
  return out;
}

void OptionSpec::validate() const {
  if (!(strike > 0)) throw ValidationError("strike must be positive");
  if (!(maturity > 0)) throw ValidationError("maturity must be positive");
  if (type == OptionType::EuropeanCall && model != ModelKind::Heston)
    throw ValidationError("european-call is only supported with the heston model");
}

double payoff(const OptionSpec& spec, double coordinate) {
  const double K = spec.strike;
  if (spec.type == OptionType::EuropeanCall) return std::max(K * std::exp(coordinate) - K, 0.0);
  if (spec.model == ModelKind::BlackScholes) return std::max(K - coordinate, 0.0);
  return std::max(K - K * std::exp(coordinate), 0.0);
}

std::size_t affine_count(ModelKind kind) { return kind == ModelKind::BlackScholes ? 3 : 6; }

const std::vector<std::string>& affine_component_ids(ModelKind kind) {
  static const std::vector<std::string> bs = {"sigma^2", "r-q", "r"};
  static const std::vector<std::string> h = {"1", "xi^2", "rho*xi", "kappa", "kappa*gamma", "r"};
  return kind == ModelKind::BlackScholes ? bs : h;
}

Eigen::VectorXd affine_theta(const ModelParams& mu) {
  if (mu.kind() == ModelKind::BlackScholes) {
    Eigen::VectorXd th(3);
    th << mu.sigma() * mu.sigma(), mu.r() - mu.q(), mu.r();
    return th;
  }
  Eigen::VectorXd th(6);
  th << 1.0, mu.xi() * mu.xi(), mu.rho() * mu.xi(), mu.kappa(), mu.kappa() * mu.gamma(), mu.r();
  return th;
}

double normal_cdf(double x) {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

double gamma1_value(const ModelParams& mu, const OptionSpec& spec, const HestonDomain& dom, double t, double x) {
  const double K = spec.strike;
  if (t <= 0) return payoff(spec, x);
  const double sigma = std::sqrt(dom.v_min);
  const double r = mu.r();
  const double sq = sigma * std::sqrt(t);
  const double d_plus = (x + (r + 0.5 * sigma * sigma) * t) / sq;
  const double d_minus = (x + (r - 0.5 * sigma * sigma) * t) / sq;
  return K * std::exp(x) * normal_cdf(d_plus) - K * std::exp(-r * t) * normal_cdf(d_minus);
}

double gamma2_value(const OptionSpec& spec, double t, double x) {
  if (t <= 0) return payoff(spec, x);
  return spec.strike * std::exp(x);
}

}  // namespace

double heston_dirichlet_data(const ModelParams& mu, const OptionSpec& spec, const HestonDomain& dom,
                             double t, HestonBoundary edge, double v, double x) {
  if (spec.type != OptionType::EuropeanCall || spec.model != ModelKind::Heston)
    throw ValidationError("heston_dirichlet_data is defined for the European call under Heston only");
  constexpr double tol = 1e-12;
  switch (edge) {
    case HestonBoundary::Gamma1:
      if (std::abs(v - dom.v_min) > tol) throw ValidationError("point is not on Gamma1");
      return gamma1_value(mu, spec, dom, t, x);
    case HestonBoundary::Gamma2:
      if (std::abs(v - dom.v_max) > tol) throw ValidationError("point is not on Gamma2");
      return gamma2_value(spec, t, x);
    case HestonBoundary::Gamma3: {
      if (std::abs(x - dom.x_min) > tol) throw ValidationError("point is not on Gamma3");
      // blend weight, 0 at v_min and 1 at v_max
      const double w = (v - dom.v_min) / (dom.v_max - dom.v_min);
      return w * gamma2_value(spec, t, dom.x_min) + (1.0 - w) * gamma1_value(mu, spec, dom, t, dom.x_min);
    }
    case HestonBoundary::Gamma4:
      break;
  }
  throw ValidationError("Gamma4 carries a Neumann condition, not Dirichlet data");
}

}  // namespace rbopt

#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "rbopt/models.hpp"

using namespace rbopt;

namespace {

// Adaptive Simpson, used as an independent oracle for the normal CDF.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double cdf_quadrature(double x) {
  auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi); };
  const double fa = phi(0), fb = phi(x), fm = phi(0.5 * x);
  return 0.5 + simpson(phi, 0, x, fa, fm, fb, x / 6 * (fa + 4 * fm + fb), 1e-15, 50);
}

// Taylor series of the CDF around 0, exact to roundoff for |x| <= 1.
double cdf_series(double x) {
  double term = x, sum = x;
  for (int k = 1; k < 60; ++k) {
    term *= -x * x / (2.0 * k);
    sum += term / (2.0 * k + 1);
  }
  return 0.5 + sum / std::sqrt(2 * std::numbers::pi);
}

}  // namespace

TEST(NormalCdf, Limits) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_EQ(normal_cdf(INFINITY), 1.0);
  EXPECT_EQ(normal_cdf(-INFINITY), 0.0);
}

TEST(NormalCdf, MatchesQuadratureOracle) {
  const double oracle = cdf_quadrature(1.96);
  EXPECT_NEAR(oracle, 0.9750021049, 5e-11);
  EXPECT_NEAR(normal_cdf(1.96), oracle, 1e-13);
  for (double x : {-3.0, -1.0, -0.3, 0.7, 2.5})
    EXPECT_NEAR(normal_cdf(x), cdf_quadrature(x), 1e-13) << x;
}

TEST(Payoff, Examples) {
  EXPECT_EQ(payoff(OptionSpec{OptionType::AmericanPut, 100, 1, ModelKind::BlackScholes}, 0.0), 100.0);
  EXPECT_EQ(payoff(OptionSpec{OptionType::EuropeanCall, 1, 1, ModelKind::Heston}, 0.0), 0.0);
  EXPECT_EQ(payoff(OptionSpec{OptionType::AmericanPut, 1, 1, ModelKind::Heston}, std::log(2.0)), 0.0);
}

TEST(AffineTheta, Examples) {
  const Eigen::VectorXd bs = affine_theta(ModelParams::black_scholes(0.5, 0.0, 0.05));
  ASSERT_EQ(bs.size(), 3);
  EXPECT_DOUBLE_EQ(bs[0], 0.25);
  EXPECT_DOUBLE_EQ(bs[1], 0.05);
  EXPECT_DOUBLE_EQ(bs[2], 0.05);
  const Eigen::VectorXd h = affine_theta(ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0198));
  ASSERT_EQ(h.size(), 6);
  const double expect[6] = {1, 0.09, 0.063, 2, 0.19, 0.0198};
  for (int q = 0; q < 6; ++q) EXPECT_NEAR(h[q], expect[q], 1e-15) << q;
  EXPECT_EQ(affine_count(ModelKind::Heston), 6u);
}

TEST(ModelParams, Validation) {
  EXPECT_THROW(ModelParams::black_scholes(0.0, 0.0, 0.05).validate(), ValidationError);
  EXPECT_THROW(ModelParams::black_scholes(0.2, -0.1, 0.05).validate(), ValidationError);
  EXPECT_THROW(ModelParams::heston(0.3, 1.5, 0.1, 2, 0.02).validate(), ValidationError);
  EXPECT_THROW(ModelParams(ModelKind::Heston, {1, 2, 3}), ValidationError);
  EXPECT_NO_THROW(ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0198).validate());
  EXPECT_TRUE(ModelParams::heston(0.9, 0.21, 0.16, 3, 0.0198).feller_satisfied());  // 0.96 >= 0.81
  EXPECT_FALSE(ModelParams::heston(0.9, 0.21, 0.1, 0.5, 0.0198).feller_satisfied());
}

TEST(HestonDirichlet, Examples) {
  const OptionSpec spec{OptionType::EuropeanCall, 1, 1, ModelKind::Heston};
  HestonDomain dom;
  const ModelParams mu = ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0198);
  EXPECT_NEAR(heston_dirichlet_data(mu, spec, dom, 0.7, HestonBoundary::Gamma2, dom.v_max, 1.0), std::exp(1.0), 1e-15);
  // t -> 0+: payoff limit
  EXPECT_NEAR(heston_dirichlet_data(mu, spec, dom, 1e-10, HestonBoundary::Gamma1, dom.v_min, 0.5), std::exp(0.5) - 1,
              1e-11);
  // r = 0, x = 0, v_min t = 1: d+- = +-1/2
  HestonDomain unit = dom;
  unit.v_min = 1.0;
  unit.v_max = 2.0;
  const ModelParams r0 = ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0);
  const double oracle = cdf_series(0.5) - cdf_series(-0.5);
  EXPECT_NEAR(oracle, 0.38292, 5e-6);
  EXPECT_NEAR(heston_dirichlet_data(r0, spec, unit, 1.0, HestonBoundary::Gamma1, 1.0, 0.0), oracle, 1e-14);
  EXPECT_THROW(heston_dirichlet_data(mu, spec, dom, 0.5, HestonBoundary::Gamma4, 0.1, dom.x_max), ValidationError);
}

TEST(ParameterBox, GridAndRandom) {
  ParameterBox box;
  box.kind = ModelKind::BlackScholes;
  box.lower = {0.475, 0.0014, 0.0475};
  box.upper = {0.525, 0.0016, 0.0525};
  box.active_coords = {0, 1, 2};
  box.defaults = ModelParams::black_scholes(0.5, 0.0015, 0.05);
  const auto grid = box.tensor_grid(4);
  ASSERT_EQ(grid.size(), 64u);
  EXPECT_EQ(grid.front()[0], 0.475);
  EXPECT_EQ(grid.back()[2], 0.0525);
  EXPECT_EQ(grid[1][2], 0.0475 + (0.0525 - 0.0475) / 3);  // last coordinate varies fastest
  for (const auto& mu : grid) EXPECT_TRUE(box.contains(mu));
  const auto a = box.random(10, 7), b = box.random(10, 7), c = box.random(10, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& mu : a) EXPECT_TRUE(box.contains(mu));
}

#include <random>

#include <gtest/gtest.h>

#include "rbopt/detailed_solver.hpp"
#include "rbopt/sweep.hpp"

using namespace rbopt;

namespace {

const OptionSpec kBsPut{OptionType::AmericanPut, 100, 1, ModelKind::BlackScholes};

Discretization bs_disc(std::size_t nodes) {
  Discretization d;
  d.nodes = nodes;
  return d;
}

Discretization heston_call_disc() {
  Discretization d;
  d.theta = 0.5;
  return d;
}

// Brute-force LCP: try every active set, keep the one that is feasible.
std::optional<std::pair<Vec, Vec>> enumerate_lcp(const Mat& K, const Vec& rhs, const Vec& g) {
  const int n = static_cast<int>(K.rows());
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<int> inact;
    Vec u = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) u[i] = g[i];
      else inact.push_back(i);
    }
    if (!inact.empty()) {
      const int m = static_cast<int>(inact.size());
      Mat k(m, m);
      Vec b(m);
      for (int i = 0; i < m; ++i) {
        b[i] = rhs[inact[i]];
        for (int j = 0; j < n; ++j)
          if (mask & (1 << j)) b[i] -= K(inact[i], j) * g[j];
        for (int j = 0; j < m; ++j) k(i, j) = K(inact[i], inact[j]);
      }
      const Vec x = k.partialPivLu().solve(b);
      for (int i = 0; i < m; ++i) u[inact[i]] = x[i];
    }
    const Vec lam = K * u - rhs;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (mask & (1 << i)) ok = lam[i] >= -1e-12;
      else ok = u[i] >= g[i] - 1e-12;
    }
    if (ok) {
      Vec l = Vec::Zero(n);
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) l[i] = lam[i];
      return std::make_pair(u, l);
    }
  }
  return std::nullopt;
}

}  // namespace

TEST(Pdas, InactiveConstraintGivesLinearSolve) {
  SpMat k(2, 2);
  k.insert(0, 0) = 2;
  k.insert(1, 1) = 3;
  const Vec zero = Vec::Zero(2);
  const LcpResult r = pdas_solve(k, zero, Vec::Constant(2, -1.0), zero, zero, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.u.norm(), 0.0);
  EXPECT_EQ(r.lambda.norm(), 0.0);
  EXPECT_EQ(r.active, 0u);
}

TEST(Pdas, MatchesEnumerationOnRandomMMatrices) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    Mat K = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) K(i, j) = -u(rng);
    for (int i = 0; i < 3; ++i) K(i, i) = -K.row(i).sum() + 0.1 + u(rng);
    Vec rhs(3), g(3);
    for (int i = 0; i < 3; ++i) {
      rhs[i] = n01(rng);
      g[i] = n01(rng);
    }
    const auto oracle = enumerate_lcp(K, rhs, g);
    ASSERT_TRUE(oracle.has_value());
    const SpMat ks = K.sparseView();
    const LcpResult r = pdas_solve(ks, rhs, g, Vec::Zero(3), Vec::Zero(3), {});
    ASSERT_TRUE(r.converged) << trial;
    EXPECT_LT((r.u - oracle->first).norm(), 1e-10) << trial;
    EXPECT_LT((r.lambda - oracle->second).norm(), 1e-10) << trial;
  }
}

TEST(DetailedSolver, SingleFreeNodeScalarRecurrence) {
  DiscreteOperators ops(kBsPut, bs_disc(3));
  const ModelParams mu = ModelParams::black_scholes(0.5, 0.0015, 0.05);
  const Trajectory t = solve_american(ops, mu);
  const double dt = ops.dt();
  const double m = Mat(ops.mass())(0, 0), a = Mat(ops.bilinear(mu))(0, 0);
  const double g = ops.constraint(0)[0];
  double u = ops.initial_data()[0];
  ASSERT_EQ(t.u.size(), ops.time_steps() + 1);
  for (std::size_t n = 0; n < ops.time_steps(); ++n) {
    const double rhs = m / dt * u + ops.load(mu, n)[0];
    const double free = rhs / (m / dt + a);
    const double next = std::max(free, g);
    const double lam = free >= g ? 0.0 : (m / dt + a) * g - rhs;
    EXPECT_NEAR(t.u[n + 1][0], next, 1e-12 * std::max(1.0, std::abs(next))) << n;
    EXPECT_NEAR(t.lambda[n + 1][0], lam, 1e-10 * std::max(1.0, std::abs(lam))) << n;
    u = next;
  }
}

TEST(DetailedSolver, AmericanPutStaysAboveObstacle) {
  DiscreteOperators ops(kBsPut, bs_disc(200));
  const ModelParams mu = ModelParams::black_scholes(0.41856, 0.0076785, 0.04847);
  const Trajectory t = solve_american(ops, mu);
  const Vec g = ops.constraint(0);
  for (std::size_t n = 1; n < t.u.size(); ++n) {
    EXPECT_GE((t.u[n] - g).minCoeff(), -1e-10);
    EXPECT_GE(t.lambda[n].minCoeff(), -1e-10);
    EXPECT_LT(t.lambda[n].cwiseProduct(t.u[n] - g).cwiseAbs().maxCoeff(), 1e-8);
  }
  // deep in the money the option is exercised, far out of the money it is worth little
  const Vec w = full_field(ops, mu, t.u.back(), ops.time_steps());
  EXPECT_NEAR(w[1], 100 - ops.mesh().nodes[1].x(), 1e-9);
  EXPECT_LT(w[180], 1.0);
}

TEST(DetailedSolver, AmericanRequiresImplicitEuler) {
  Discretization d = bs_disc(20);
  d.theta = 0.5;
  DiscreteOperators ops(kBsPut, d);
  EXPECT_THROW(solve_american(ops, ModelParams::black_scholes(0.5, 0.0015, 0.05)), SolverError);
}

TEST(DetailedSolver, EuropeanThetaSchemeResidual) {
  const OptionSpec spec{OptionType::EuropeanCall, 1, 1, ModelKind::Heston};
  DiscreteOperators ops(spec, heston_call_disc());
  const ModelParams mu = ModelParams::heston(0.3, 0.21, 0.095, 2, 0.0198);
  const Trajectory t = solve_european(ops, mu);
  ASSERT_EQ(t.u.size(), ops.time_steps() + 1);
  EXPECT_TRUE(t.lambda.empty());
  const Mat m = Mat(ops.mass()), a = Mat(ops.bilinear(mu));
  const double dt = ops.dt();
  for (std::size_t n = 0; n < ops.time_steps(); ++n) {
    const Vec r = (m / dt + 0.5 * a) * t.u[n + 1] - (m / dt - 0.5 * a) * t.u[n] - ops.load(mu, n);
    EXPECT_LT(r.norm(), 1e-10 * (1 + ops.load(mu, n).norm())) << n;
    EXPECT_TRUE(t.u[n + 1].allFinite());
  }
  // Away from the blended Gamma3 data the call is nonnegative and increasing
  // in log-price at the final time.
  const Vec w = full_field(ops, mu, t.u.back(), ops.time_steps());
  const std::size_t iv = 24, nx = ops.mesh().n_x;
  for (std::size_t ix = 36; ix + 1 < nx; ++ix) {
    EXPECT_GE(w[iv * nx + ix], -1e-6);
    EXPECT_LE(w[iv * nx + ix], w[iv * nx + ix + 1] + 1e-6);
  }
}

TEST(Sweep, ParallelMatchesSerialBitwise) {
  DiscreteOperators ops(kBsPut, bs_disc(120));
  ParameterBox box;
  box.kind = ModelKind::BlackScholes;
  box.lower = {0.475, 0.0014, 0.0475};
  box.upper = {0.525, 0.0016, 0.0525};
  box.active_coords = {0, 1, 2};
  box.defaults = ModelParams::black_scholes(0.5, 0.0015, 0.05);
  const auto mus = box.random(12, 99);
  const auto par = detailed_sweep(ops, mus, {}, std::max(2, max_workers()));
  const auto ser = detailed_sweep_serial(ops, mus, {});
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    ASSERT_EQ(par[i].u.size(), ser[i].u.size());
    for (std::size_t n = 0; n < par[i].u.size(); ++n) {
      EXPECT_EQ(par[i].u[n], ser[i].u[n]);
      EXPECT_EQ(par[i].lambda[n], ser[i].lambda[n]);
    }
  }
}

TEST(Sweep, SmallestFailingIndexIsRethrown) {
  auto body = [](std::size_t i) {
    if (i % 3 == 2) throw std::runtime_error("item " + std::to_string(i));
  };
  for (int w : {1, 4}) {
    try {
      parallel_for(10, w, body);
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "item 2");
    }
  }
}

#include "rbopt/stability.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace rbopt {

namespace {

constexpr Eigen::Index kDenseLimit = 1000;

bool use_dense(EigenMethod m, Eigen::Index n) {
  if (m == EigenMethod::Dense) return true;
  if (m == EigenMethod::Lanczos) return false;
  return n <= kDenseLimit;
}

// L^{-1} A L^{-T} for X = L L^T.
Mat whitened(const SpMat& gram, const Mat& a) {
  const Mat dense_gram(gram);
  Eigen::LLT<Mat> llt(dense_gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("Gram matrix is not positive definite");
  const auto l = llt.matrixL();
  Mat tmp = l.solve(a);
  Mat out = l.solve(tmp.transpose()).transpose();
  return out;
}

}  // namespace

LanczosResult lanczos_extremes(const std::function<Vec(const Vec&)>& apply_T,
                               const std::function<Vec(const Vec&)>& apply_B, Eigen::Index n,
                               const LanczosOptions& opt) {
  LanczosResult res;
  const int m_max = static_cast<int>(std::min<Eigen::Index>(opt.max_iter, n));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Vec q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = normal(rng);
  Vec bq = apply_B(q);
  q /= std::sqrt(q.dot(bq));
  bq = apply_B(q);

  Mat Q(n, m_max), BQ(n, m_max);
  std::vector<double> alpha, beta;
  for (int j = 0; j < m_max; ++j) {
    Q.col(j) = q;
    BQ.col(j) = bq;
    Vec w = apply_T(q);
    const double a = bq.dot(w);
    alpha.push_back(a);
    // two passes of full reorthogonalization in the B inner product
    for (int pass = 0; pass < 2; ++pass) {
      const Vec coeff = BQ.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * coeff;
    }
    Vec bw = apply_B(w);
    const double b = std::sqrt(std::max(0.0, w.dot(bw)));

    const int k = j + 1;
    const bool last = b <= 1e-14 * std::max(std::abs(a), 1e-300) || k == n || k == m_max;
    // the Ritz check costs O(k^2); every few steps is enough
    if (!last && k % 8 != 0) {
      beta.push_back(b);
      q = w / b;
      bq = bw / b;
      continue;
    }
    Vec diag(k), sub(std::max(k - 1, 1));
    for (int i = 0; i < k; ++i) diag[i] = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < k; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.computeFromTridiagonal(diag, sub.head(k - 1));
    const Vec& ev = es.eigenvalues();
    res.min = ev[0];
    res.max = ev[k - 1];
    res.iterations = k;
    const double scale = std::max(std::abs(res.min), std::abs(res.max));
    const double r_min = std::abs(b * es.eigenvectors()(k - 1, 0));
    const double r_max = std::abs(b * es.eigenvectors()(k - 1, k - 1));
    const bool min_ok = opt.which == Extreme::Max || r_min <= opt.tol * scale;
    const bool max_ok = opt.which == Extreme::Min || r_max <= opt.tol * scale;
    if (b <= 1e-14 * std::max(scale, 1e-300) || k == n || (k >= 3 && min_ok && max_ok)) {
      res.converged = true;
      return res;
    }
    beta.push_back(b);
    q = w / b;
    bq = bw / b;
  }
  return res;
}

double inf_sup_constant(const DiscreteOperators& ops, EigenMethod method) {
  const SpMat& x = ops.gram();
  double lmax = 0.0;
  if (use_dense(method, x.rows())) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(x), Eigen::EigenvaluesOnly);
    lmax = es.eigenvalues().maxCoeff();
  } else {
    LanczosOptions opt;
    opt.which = Extreme::Max;
    auto r = lanczos_extremes([&](const Vec& v) { return Vec(x * v); }, [](const Vec& v) { return v; }, x.rows(), opt);
    if (!r.converged) throw std::runtime_error("Lanczos did not converge for the inf-sup constant");
    lmax = r.max;
  }
  return 1.0 / std::sqrt(lmax);
}

double coercivity_constant(const DiscreteOperators& ops, const ModelParams& mu, EigenMethod method) {
  const SpMat a = ops.bilinear(mu);
  const SpMat a_sym = SpMat(0.5 * (a + SpMat(a.transpose())));
  if (use_dense(method, a.rows())) {
    const Mat c = whitened(ops.gram(), Mat(a_sym));
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  const SpMat& x = ops.gram();
  LanczosOptions opt;
  opt.which = Extreme::Min;
  auto r = lanczos_extremes([&](const Vec& v) { return ops.gram_solve(Vec(a_sym * v)); },
                            [&](const Vec& v) { return Vec(x * v); }, a.rows(), opt);
  if (!r.converged) throw std::runtime_error("Lanczos did not converge for the coercivity constant at mu = " + format_mu(mu));
  return r.min;
}

double continuity_constant(const DiscreteOperators& ops, const ModelParams& mu, EigenMethod method) {
  const SpMat a = ops.bilinear(mu);
  if (use_dense(method, a.rows())) {
    const Mat c = whitened(ops.gram(), Mat(a));
    Eigen::JacobiSVD<Mat> svd(c);
    return svd.singularValues()[0];
  }
  const SpMat at = a.transpose();
  const SpMat& x = ops.gram();
  LanczosOptions opt;
  opt.which = Extreme::Max;
  auto r = lanczos_extremes(
      [&](const Vec& v) { return ops.gram_solve(Vec(at * ops.gram_solve(Vec(a * v)))); },
      [&](const Vec& v) { return Vec(x * v); }, a.rows(), opt);
  if (!r.converged) throw std::runtime_error("Lanczos did not converge for the continuity constant at mu = " + format_mu(mu));
  return std::sqrt(r.max);
}

StabilityConstants compute_constants(const DiscreteOperators& ops, const ModelParams& mu, EigenMethod method) {
  StabilityConstants c;
  c.alpha = coercivity_constant(ops, mu, method);
  c.gamma = continuity_constant(ops, mu, method);
  c.beta = inf_sup_constant(ops, method);
  c.c_omega = 1.0;
  return c;
}

double ConstantsCache::beta() {
  std::lock_guard lock(mutex_);
  if (beta_ < 0) beta_ = inf_sup_constant(ops_, method_);
  return beta_;
}

StabilityConstants ConstantsCache::get(const ModelParams& mu) {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(mu.values());
    if (it != cache_.end()) return it->second;
  }
  StabilityConstants c;
  c.alpha = coercivity_constant(ops_, mu, method_);
  c.gamma = continuity_constant(ops_, mu, method_);
  c.beta = beta();
  std::lock_guard lock(mutex_);
  cache_.emplace(mu.values(), c);
  return c;
}

}  // namespace rbopt

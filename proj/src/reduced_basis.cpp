#include "rbopt/reduced_basis.hpp"

#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace rbopt {

ReducedBasis ReducedBasis::truncated(std::size_t iterations) const {
  if (iterations == 0 || iterations > provenance.size())
    throw std::out_of_range("basis has " + std::to_string(provenance.size()) + " greedy iterations, requested " +
                            std::to_string(iterations));
  const auto& last = provenance[iterations - 1];
  ReducedBasis out = truncated(last.n_primal, last.n_dual);
  out.provenance.assign(provenance.begin(), provenance.begin() + static_cast<std::ptrdiff_t>(iterations));
  return out;
}

ReducedBasis ReducedBasis::truncated(std::size_t n_v, std::size_t n_w) const {
  if (n_v > n_primal() || n_w > n_dual()) throw std::out_of_range("truncation larger than the basis");
  ReducedBasis out;
  out.psi = psi.leftCols(static_cast<Eigen::Index>(n_v));
  out.xi = xi.leftCols(static_cast<Eigen::Index>(n_w));
  out.supremizer.assign(supremizer.begin(), supremizer.begin() + static_cast<std::ptrdiff_t>(n_v));
  out.config_hash = config_hash;
  out.supremizers = supremizers;
  for (const auto& p : provenance)
    if (p.n_primal <= n_v && p.n_dual <= n_w) out.provenance.push_back(p);
  return out;
}

double orthonormality_defect(const ReducedBasis& basis, const SpMat& gram) {
  if (basis.psi.cols() == 0) return 0.0;
  const Mat g = basis.psi.transpose() * (gram * basis.psi);
  return (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double reduced_inf_sup(const ReducedBasis& basis) {
  if (basis.xi.cols() == 0) return 0.0;
  // with Q an orthonormal basis of span(Xi), beta_N = sigma_min(Psi^T Q);
  // avoids the Gram matrix Xi^T Xi, whose conditioning is the square of Xi's
  const Eigen::HouseholderQR<Mat> qr(basis.xi);
  const Mat q = qr.householderQ() * Mat::Identity(basis.xi.rows(), basis.xi.cols());
  const Mat bt = basis.psi.transpose() * q;
  if (bt.rows() < bt.cols()) return 0.0;
  Eigen::JacobiSVD<Mat> svd(bt);
  return svd.singularValues().minCoeff();
}

}  // namespace rbopt

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "rbopt/models.hpp"

namespace rbopt {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Space-time discretization of one pricing problem.
struct Discretization {
  // Black-Scholes price interval and node count.
  double s_min = 0.0;
  double s_max = 300.0;
  std::size_t nodes = 200;
  // Heston rectangle and grid resolution (n_v nodes along v, n_x along x).
  HestonDomain heston;
  std::size_t n_v = 49;
  std::size_t n_x = 97;
  // Uniform time grid of L steps on [0, T] and the theta of the time scheme.
  std::size_t time_steps = 20;
  double theta = 1.0;

  void validate(const OptionSpec& spec) const;
};

enum class BoundaryTag : std::uint8_t { Interior, Left, Right, Gamma1, Gamma2, Gamma3, Gamma4 };

/// P1 mesh: intervals in 1D, a tensor grid split along the (v,x) -> (v+dv,x+dx)
/// diagonal in 2D. Node coordinates are (S) in 1D and (v, x) in 2D; 2D node
/// ids are i_v * n_x + i_x.
struct Mesh {
  int dim = 1;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 2>> intervals;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryTag> tags;
  std::vector<bool> dirichlet;
  std::vector<int> free_index;       // node -> free slot or -1
  std::vector<int> dirichlet_index;  // node -> Dirichlet slot or -1
  std::vector<int> free_nodes;
  std::vector<int> dirichlet_nodes;
  std::size_t n_v = 0;
  std::size_t n_x = 0;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return dim == 1 ? intervals.size() : triangles.size(); }
  std::size_t free_count() const { return free_nodes.size(); }
};

Mesh build_mesh(const OptionSpec& spec, const Discretization& disc);

// Full-node matrices (before restriction to the free set). Used by the
// operator container and by tests.
struct NodalMatrices {
  SpMat gram;
  SpMat mass;
  std::vector<SpMat> components;
};

NodalMatrices assemble_nodal(const Mesh& mesh, const OptionSpec& spec);

// Gram matrix of the V inner product on free nodes: H1 for Heston, the
// S^2-weighted H1 product for Black-Scholes.
SpMat assemble_gram(const Mesh& mesh, const OptionSpec& spec);

// Affine components A_q restricted to free x free.
std::vector<SpMat> assemble_affine_components(const Mesh& mesh, const OptionSpec& spec);

// Conormal flux load of the European call on Gamma4, on free nodes.
Vec assemble_neumann_load(const Mesh& mesh, const OptionSpec& spec);

SpMat restrict_rows_cols(const SpMat& full, const std::vector<int>& row_map, std::size_t rows,
                         const std::vector<int>& col_map, std::size_t cols);

/// Assembled discrete operators of one (spec, discretization) pair.
/// Immutable after construction; safe to share between threads.
class DiscreteOperators {
public:
  DiscreteOperators(OptionSpec spec, Discretization disc);

  const OptionSpec& spec() const { return spec_; }
  const Discretization& discretization() const { return disc_; }
  const Mesh& mesh() const { return mesh_; }
  std::size_t free_count() const { return mesh_.free_count(); }
  std::size_t time_steps() const { return disc_.time_steps; }
  double theta() const { return disc_.theta; }
  double dt() const { return spec_.maturity / static_cast<double>(disc_.time_steps); }
  bool american() const { return spec_.type == OptionType::AmericanPut; }

  const SpMat& gram() const { return gram_; }
  const SpMat& mass() const { return mass_; }
  const std::vector<SpMat>& components() const { return components_; }
  const SpMat& mass_lift() const { return mass_fd_; }
  const std::vector<SpMat>& components_lift() const { return components_fd_; }
  const Vec& neumann_load() const { return neumann_load_; }
  const Vec& payoff_free() const { return payoff_free_; }
  const Vec& payoff_nodes() const { return payoff_nodes_; }

  // X^{-1} applied through a Cholesky factorization computed once.
  Vec gram_solve(const Vec& rhs) const;
  Mat gram_solve(const Mat& rhs) const;

  SpMat bilinear(const ModelParams& mu) const;
  SpMat bilinear_lift(const ModelParams& mu) const;

  // Dirichlet data u_g^n on the Dirichlet nodes (in mesh.dirichlet_nodes order).
  Vec lift(const ModelParams& mu, std::size_t step) const;
  // Full nodal lift vector: boundary data on Dirichlet nodes, zero elsewhere.
  Vec lift_nodal(const ModelParams& mu, std::size_t step) const;

  // Load F^n of the step n -> n+1 on free nodes.
  Vec load(const ModelParams& mu, std::size_t step) const;
  // Constraint data G^n: nodal (w0 - u_g^{n+1}) on free nodes.
  Vec constraint(std::size_t step) const;
  // Initial free-node data u^0 = w0 - u_g^0.
  Vec initial_data() const;

  // Whether mu-dependent lift data exists (European Heston).
  bool lift_depends_on_mu() const { return spec_.type == OptionType::EuropeanCall; }

  std::uint64_t config_hash() const { return hash_; }
  std::string describe() const;

private:
  OptionSpec spec_;
  Discretization disc_;
  Mesh mesh_;
  SpMat gram_;
  SpMat mass_;
  std::vector<SpMat> components_;
  SpMat mass_fd_;
  std::vector<SpMat> components_fd_;
  Vec neumann_load_;
  Vec payoff_free_;
  Vec payoff_nodes_;
  std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> gram_llt_;
  std::uint64_t hash_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace rbopt

#include "rbopt/fem.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rbopt {

void Discretization::validate(const OptionSpec& spec) const {
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in (0, 1]");
  if (time_steps < 1) throw ValidationError("time_steps must be positive");
  if (spec.model == ModelKind::BlackScholes) {
    if (nodes < 2) throw ValidationError("mesh needs at least 2 nodes");
    if (!(s_max > s_min)) throw ValidationError("degenerate Black-Scholes domain");
  } else {
    if (n_v < 2 || n_x < 2) throw ValidationError("mesh needs at least 2 nodes per direction");
    if (!(heston.v_max > heston.v_min) || !(heston.x_max > heston.x_min))
      throw ValidationError("degenerate Heston domain");
    if (!(heston.v_min > 0)) throw ValidationError("v_min must be positive");
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void finish_index_maps(Mesh& m) {
  const std::size_t n = m.nodes.size();
  m.free_index.assign(n, -1);
  m.dirichlet_index.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (m.dirichlet[i]) {
      m.dirichlet_index[i] = static_cast<int>(m.dirichlet_nodes.size());
      m.dirichlet_nodes.push_back(static_cast<int>(i));
    } else {
      m.free_index[i] = static_cast<int>(m.free_nodes.size());
      m.free_nodes.push_back(static_cast<int>(i));
    }
  }
}

}  // namespace

Mesh build_mesh(const OptionSpec& spec, const Discretization& disc) {
  disc.validate(spec);
  Mesh m;
  if (spec.model == ModelKind::BlackScholes) {
    m.dim = 1;
    const std::size_t n = disc.nodes;
    const double h = (disc.s_max - disc.s_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = i + 1 == n ? disc.s_max : disc.s_min + h * static_cast<double>(i);
      m.nodes.emplace_back(s, 0.0);
      m.tags.push_back(i == 0 ? BoundaryTag::Left : i + 1 == n ? BoundaryTag::Right : BoundaryTag::Interior);
      m.dirichlet.push_back(i == 0 || i + 1 == n);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) m.intervals.push_back({static_cast<int>(i), static_cast<int>(i + 1)});
    m.n_x = n;
    m.n_v = 1;
  } else {
    m.dim = 2;
    const auto& d = disc.heston;
    const std::size_t nv = disc.n_v, nx = disc.n_x;
    const bool european = spec.type == OptionType::EuropeanCall;
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const double v = iv + 1 == nv ? d.v_max : d.v_min + (d.v_max - d.v_min) * static_cast<double>(iv) / static_cast<double>(nv - 1);
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const double x = ix + 1 == nx ? d.x_max : d.x_min + (d.x_max - d.x_min) * static_cast<double>(ix) / static_cast<double>(nx - 1);
        m.nodes.emplace_back(v, x);
        const bool vlo = iv == 0, vhi = iv + 1 == nv, xlo = ix == 0, xhi = ix + 1 == nx;
        BoundaryTag tag = BoundaryTag::Interior;
        bool dir = false;
        if (european) {
          if (vlo) tag = BoundaryTag::Gamma1;
          else if (vhi) tag = BoundaryTag::Gamma2;
          else if (xlo) tag = BoundaryTag::Gamma3;
          else if (xhi) tag = BoundaryTag::Gamma4;
          dir = tag == BoundaryTag::Gamma1 || tag == BoundaryTag::Gamma2 || tag == BoundaryTag::Gamma3;
        } else {
          if (vlo) tag = BoundaryTag::Gamma1;
          else if (xlo) tag = BoundaryTag::Gamma3;
          else if (xhi) tag = BoundaryTag::Gamma4;
          else if (vhi) tag = BoundaryTag::Gamma2;
          dir = tag == BoundaryTag::Gamma1 || tag == BoundaryTag::Gamma3 || tag == BoundaryTag::Gamma4;
        }
        m.tags.push_back(tag);
        m.dirichlet.push_back(dir);
      }
    }
    auto id = [nx](std::size_t iv, std::size_t ix) { return static_cast<int>(iv * nx + ix); };
    for (std::size_t iv = 0; iv + 1 < nv; ++iv) {
      for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
        const int a = id(iv, ix), b = id(iv, ix + 1), c = id(iv + 1, ix), e = id(iv + 1, ix + 1);
        m.triangles.push_back({a, b, e});
        m.triangles.push_back({a, e, c});
      }
    }
    m.n_v = nv;
    m.n_x = nx;
  }
  finish_index_maps(m);
  return m;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct NodalTriplets {
  Triplets gram, mass;
  std::vector<Triplets> comp;
};

void assemble_1d(const Mesh& mesh, NodalTriplets& t) {
  static const double gp = 1.0 / std::sqrt(3.0);
  t.comp.resize(3);
  for (const auto& el : mesh.intervals) {
    const double sa = mesh.nodes[el[0]].x(), sb = mesh.nodes[el[1]].x();
    const double h = sb - sa;
    const double dphi[2] = {-1.0 / h, 1.0 / h};
    double mloc[2][2] = {}, kloc[2][2] = {}, cloc[2][2] = {};
    for (double xi : {-gp, gp}) {
      const double s = 0.5 * (sa + sb) + 0.5 * h * xi;
      const double w = 0.5 * h;
      const double phi[2] = {(sb - s) / h, (s - sa) / h};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          mloc[i][j] += w * phi[i] * phi[j];
          kloc[i][j] += w * s * s * dphi[i] * dphi[j];
          cloc[i][j] += w * s * dphi[j] * phi[i];
        }
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const int gi = el[i], gj = el[j];
        t.mass.emplace_back(gi, gj, mloc[i][j]);
        t.gram.emplace_back(gi, gj, mloc[i][j] + kloc[i][j]);
        // sigma^2: 1/2 S^2 stiffness plus the S-convection left by integrating by parts
        t.comp[0].emplace_back(gi, gj, 0.5 * kloc[i][j] + cloc[i][j]);
        t.comp[1].emplace_back(gi, gj, -cloc[i][j]);
        t.comp[2].emplace_back(gi, gj, mloc[i][j]);
      }
  }
}

void assemble_2d(const Mesh& mesh, NodalTriplets& t) {
  static const double qb[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
  t.comp.resize(6);
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector2d p0 = mesh.nodes[tri[0]], p1 = mesh.nodes[tri[1]], p2 = mesh.nodes[tri[2]];
    Eigen::Matrix2d J;
    J.col(0) = p1 - p0;
    J.col(1) = p2 - p0;
    const double det = J.determinant();
    const double area = 0.5 * std::abs(det);
    const Eigen::Matrix2d Jinv_t = J.inverse().transpose();
    // gradients of the barycentric coordinates, columns = (d/dv, d/dx)
    Eigen::Matrix<double, 3, 2> g;
    g.row(1) = (Jinv_t * Eigen::Vector2d(1, 0)).transpose();
    g.row(2) = (Jinv_t * Eigen::Vector2d(0, 1)).transpose();
    g.row(0) = -g.row(1) - g.row(2);

    double mloc[3][3] = {}, kloc[3][3] = {};
    double c[6][3][3] = {};
    for (const auto& bary : qb) {
      const double w = area / 3.0;
      const double v = bary[0] * p0.x() + bary[1] * p1.x() + bary[2] * p2.x();
      for (int i = 0; i < 3; ++i) {
        const double phi_i = bary[i];
        const double gv_i = g(i, 0), gx_i = g(i, 1);
        for (int j = 0; j < 3; ++j) {
          const double phi_j = bary[j];
          const double gv_j = g(j, 0), gx_j = g(j, 1);
          mloc[i][j] += w * phi_i * phi_j;
          kloc[i][j] += w * (gv_i * gv_j + gx_i * gx_j);
          c[0][i][j] += w * (0.5 * v * gx_j * gx_i + 0.5 * v * gx_j * phi_i);
          c[1][i][j] += w * (0.5 * v * gv_j * gv_i + 0.5 * gv_j * phi_i);
          c[2][i][j] += w * (0.5 * v * (gv_j * gx_i + gx_j * gv_i) + 0.5 * gx_j * phi_i);
          c[3][i][j] += w * (v * gv_j * phi_i);
          c[4][i][j] += w * (-gv_j * phi_i);
          c[5][i][j] += w * (phi_j * phi_i - gx_j * phi_i);
        }
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int gi = tri[i], gj = tri[j];
        t.mass.emplace_back(gi, gj, mloc[i][j]);
        t.gram.emplace_back(gi, gj, mloc[i][j] + kloc[i][j]);
        for (int q = 0; q < 6; ++q) t.comp[q].emplace_back(gi, gj, c[q][i][j]);
      }
  }
}

SpMat from_triplets(std::size_t n, const Triplets& t) {
  SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

NodalMatrices assemble_nodal(const Mesh& mesh, const OptionSpec& spec) {
  NodalTriplets t;
  if (mesh.dim == 1) {
    if (spec.model != ModelKind::BlackScholes) throw ValidationError("1D mesh requires the Black-Scholes model");
    assemble_1d(mesh, t);
  } else {
    if (spec.model != ModelKind::Heston) throw ValidationError("2D mesh requires the Heston model");
    assemble_2d(mesh, t);
  }
  const std::size_t n = mesh.node_count();
  NodalMatrices out;
  out.gram = from_triplets(n, t.gram);
  out.mass = from_triplets(n, t.mass);
  for (const auto& c : t.comp) out.components.push_back(from_triplets(n, c));
  return out;
}

SpMat restrict_rows_cols(const SpMat& full, const std::vector<int>& row_map, std::size_t rows,
                         const std::vector<int>& col_map, std::size_t cols) {
  Triplets t;
  t.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Eigen::Index k = 0; k < full.outerSize(); ++k)
    for (SpMat::InnerIterator it(full, k); it; ++it) {
      const int r = row_map[static_cast<std::size_t>(it.row())];
      const int c = col_map[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  SpMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SpMat assemble_gram(const Mesh& mesh, const OptionSpec& spec) {
  const auto nodal = assemble_nodal(mesh, spec);
  return restrict_rows_cols(nodal.gram, mesh.free_index, mesh.free_count(), mesh.free_index, mesh.free_count());
}

std::vector<SpMat> assemble_affine_components(const Mesh& mesh, const OptionSpec& spec) {
  const auto nodal = assemble_nodal(mesh, spec);
  std::vector<SpMat> out;
  for (const auto& c : nodal.components)
    out.push_back(restrict_rows_cols(c, mesh.free_index, mesh.free_count(), mesh.free_index, mesh.free_count()));
  return out;
}

Vec assemble_neumann_load(const Mesh& mesh, const OptionSpec& spec) {
  Vec f = Vec::Zero(static_cast<Eigen::Index>(mesh.free_count()));
  if (spec.type != OptionType::EuropeanCall || mesh.dim != 2) return f;
  static const double gp = 1.0 / std::sqrt(3.0);
  const std::size_t nx = mesh.n_x;
  for (std::size_t iv = 0; iv + 1 < mesh.n_v; ++iv) {
    const int a = static_cast<int>(iv * nx + nx - 1), b = static_cast<int>((iv + 1) * nx + nx - 1);
    const double va = mesh.nodes[a].x(), vb = mesh.nodes[b].x();
    const double xmax = mesh.nodes[a].y();
    const double len = vb - va;
    for (double s : {-gp, gp}) {
      const double v = 0.5 * (va + vb) + 0.5 * len * s;
      const double w = 0.5 * len;
      const double flux = 0.5 * v * spec.strike * std::exp(xmax);
      const double phi_a = (vb - v) / len, phi_b = (v - va) / len;
      if (mesh.free_index[a] >= 0) f[mesh.free_index[a]] += w * flux * phi_a;
      if (mesh.free_index[b] >= 0) f[mesh.free_index[b]] += w * flux * phi_b;
    }
  }
  return f;
}

DiscreteOperators::DiscreteOperators(OptionSpec spec, Discretization disc)
    : spec_(spec), disc_(disc) {
  spec_.validate();
  mesh_ = build_mesh(spec_, disc_);
  const auto nodal = assemble_nodal(mesh_, spec_);
  const std::size_t nf = mesh_.free_count(), nd = mesh_.dirichlet_nodes.size();
  const auto& fi = mesh_.free_index;
  const auto& di = mesh_.dirichlet_index;
  gram_ = restrict_rows_cols(nodal.gram, fi, nf, fi, nf);
  mass_ = restrict_rows_cols(nodal.mass, fi, nf, fi, nf);
  mass_fd_ = restrict_rows_cols(nodal.mass, fi, nf, di, nd);
  for (const auto& c : nodal.components) {
    components_.push_back(restrict_rows_cols(c, fi, nf, fi, nf));
    components_fd_.push_back(restrict_rows_cols(c, fi, nf, di, nd));
  }
  neumann_load_ = assemble_neumann_load(mesh_, spec_);
  const bool bs = spec_.model == ModelKind::BlackScholes;
  payoff_nodes_.resize(static_cast<Eigen::Index>(mesh_.node_count()));
  for (std::size_t i = 0; i < mesh_.node_count(); ++i)
    payoff_nodes_[static_cast<Eigen::Index>(i)] = payoff(spec_, bs ? mesh_.nodes[i].x() : mesh_.nodes[i].y());
  payoff_free_.resize(static_cast<Eigen::Index>(nf));
  for (std::size_t k = 0; k < nf; ++k) payoff_free_[static_cast<Eigen::Index>(k)] = payoff_nodes_[mesh_.free_nodes[k]];

  auto llt = std::make_shared<Eigen::SimplicialLLT<SpMat>>(gram_);
  if (llt->info() != Eigen::Success) throw std::runtime_error("Gram matrix factorization failed");
  gram_llt_ = std::move(llt);
  hash_ = fnv1a(describe());
}

Vec DiscreteOperators::gram_solve(const Vec& rhs) const { return gram_llt_->solve(rhs); }
Mat DiscreteOperators::gram_solve(const Mat& rhs) const { return gram_llt_->solve(rhs); }

SpMat DiscreteOperators::bilinear(const ModelParams& mu) const {
  const Vec th = affine_theta(mu);
  SpMat a = th[0] * components_[0];
  for (Eigen::Index q = 1; q < th.size(); ++q) a += th[q] * components_[static_cast<std::size_t>(q)];
  return a;
}

SpMat DiscreteOperators::bilinear_lift(const ModelParams& mu) const {
  const Vec th = affine_theta(mu);
  SpMat a = th[0] * components_fd_[0];
  for (Eigen::Index q = 1; q < th.size(); ++q) a += th[q] * components_fd_[static_cast<std::size_t>(q)];
  return a;
}

Vec DiscreteOperators::lift(const ModelParams& mu, std::size_t step) const {
  const auto& dn = mesh_.dirichlet_nodes;
  Vec g(static_cast<Eigen::Index>(dn.size()));
  const double t = dt() * static_cast<double>(step);
  for (std::size_t k = 0; k < dn.size(); ++k) {
    const int node = dn[k];
    const Eigen::Vector2d& p = mesh_.nodes[node];
    double val = 0.0;
    if (spec_.type == OptionType::AmericanPut) {
      val = payoff_nodes_[node];
    } else {
      HestonBoundary edge = HestonBoundary::Gamma1;
      switch (mesh_.tags[node]) {
        case BoundaryTag::Gamma1: edge = HestonBoundary::Gamma1; break;
        case BoundaryTag::Gamma2: edge = HestonBoundary::Gamma2; break;
        case BoundaryTag::Gamma3: edge = HestonBoundary::Gamma3; break;
        default: throw std::logic_error("Dirichlet node without a Dirichlet tag");
      }
      val = heston_dirichlet_data(mu, spec_, disc_.heston, t, edge, p.x(), p.y());
    }
    g[static_cast<Eigen::Index>(k)] = val;
  }
  return g;
}

Vec DiscreteOperators::lift_nodal(const ModelParams& mu, std::size_t step) const {
  Vec full = Vec::Zero(static_cast<Eigen::Index>(mesh_.node_count()));
  const Vec g = lift(mu, step);
  for (std::size_t k = 0; k < mesh_.dirichlet_nodes.size(); ++k) full[mesh_.dirichlet_nodes[k]] = g[static_cast<Eigen::Index>(k)];
  return full;
}

Vec DiscreteOperators::load(const ModelParams& mu, std::size_t step) const {
  if (step >= disc_.time_steps) throw std::out_of_range("load requested past the last time step");
  const Vec g0 = lift(mu, step), g1 = lift(mu, step + 1);
  const double th = disc_.theta;
  Vec f = -(mass_fd_ * (g1 - g0)) / dt() - bilinear_lift(mu) * (th * g1 + (1.0 - th) * g0);
  if (spec_.type == OptionType::EuropeanCall) f += neumann_load_;
  return f;
}

Vec DiscreteOperators::constraint(std::size_t /*step*/) const {
  // the zero-interior lift leaves only the obstacle on free nodes
  return payoff_free_;
}

Vec DiscreteOperators::initial_data() const { return payoff_free_; }

std::string DiscreteOperators::describe() const {
  char buf[512];
  if (spec_.model == ModelKind::BlackScholes) {
    std::snprintf(buf, sizeof buf, "model=%s;option=%s;K=%.17g;T=%.17g;L=%zu;theta=%.17g;s=[%.17g,%.17g];nodes=%zu",
                  std::string(to_string(spec_.model)).c_str(), std::string(to_string(spec_.type)).c_str(), spec_.strike,
                  spec_.maturity, disc_.time_steps, disc_.theta, disc_.s_min, disc_.s_max, disc_.nodes);
  } else {
    const auto& h = disc_.heston;
    std::snprintf(buf, sizeof buf,
                  "model=%s;option=%s;K=%.17g;T=%.17g;L=%zu;theta=%.17g;v=[%.17g,%.17g];x=[%.17g,%.17g];grid=%zux%zu",
                  std::string(to_string(spec_.model)).c_str(), std::string(to_string(spec_.type)).c_str(), spec_.strike,
                  spec_.maturity, disc_.time_steps, disc_.theta, h.v_min, h.v_max, h.x_min, h.x_max, disc_.n_v, disc_.n_x);
  }
  return buf;
}

}  // namespace rbopt

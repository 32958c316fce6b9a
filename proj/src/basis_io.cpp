#include "rbopt/basis_io.hpp"

#include <cstring>
#include <fstream>

#include "rbopt/binio.hpp"

namespace rbopt {

using namespace binio;

namespace {

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  for (double x : v) put_f64(out, x);
}

std::vector<double> get_doubles(std::istream& in) {
  const auto n = get_u64(in);
  if (n > (1u << 20)) throw std::runtime_error("corrupt list length in basis file");
  std::vector<double> v(n);
  for (auto& x : v) x = get_f64(in);
  return v;
}

}  // namespace

void write_basis(const std::string& path, const BasisFile& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kBasisMagic, sizeof kBasisMagic);
  put_u64(out, kBasisVersion);

  put_string(out, std::string(to_string(f.spec.model)));
  put_string(out, std::string(to_string(f.spec.type)));
  put_f64(out, f.spec.strike);
  put_f64(out, f.spec.maturity);
  const Discretization& d = f.disc;
  put_f64(out, d.s_min);
  put_f64(out, d.s_max);
  put_u64(out, d.nodes);
  put_f64(out, d.heston.v_min);
  put_f64(out, d.heston.v_max);
  put_f64(out, d.heston.x_min);
  put_f64(out, d.heston.x_max);
  put_u64(out, d.n_v);
  put_u64(out, d.n_x);
  put_u64(out, d.time_steps);
  put_f64(out, d.theta);
  put_doubles(out, f.box.lower);
  put_doubles(out, f.box.upper);
  put_doubles(out, f.box.defaults.values());
  put_u64(out, f.box.active_coords.size());
  for (auto a : f.box.active_coords) put_u64(out, a);
  put_u64(out, f.basis.config_hash);
  put_string(out, std::string(to_string(f.measure)));

  put_u64(out, f.basis.supremizers ? 1 : 0);
  put_mat(out, f.basis.psi);
  put_mat(out, f.basis.xi);
  put_u64(out, f.basis.supremizer.size());
  for (char s : f.basis.supremizer) put_u64(out, s ? 1 : 0);
  put_u64(out, f.basis.provenance.size());
  for (const auto& p : f.basis.provenance) {
    put_u64(out, p.k);
    put_doubles(out, p.mu.values());
    put_u64(out, p.step);
    put_f64(out, p.score);
    put_f64(out, p.angle);
    put_u64(out, p.n_primal);
    put_u64(out, p.n_dual);
  }
  put_doubles(out, f.train_error);
  if (!out) throw std::runtime_error("write failed for " + path);
}

BasisFile read_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open basis file " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kBasisMagic, sizeof magic) != 0)
    throw std::runtime_error(path + " is not a basis container");
  if (const auto version = get_u64(in); version != kBasisVersion)
    throw std::runtime_error(path + ": unsupported basis format version " + std::to_string(version));

  BasisFile f;
  f.spec.model = model_from_string(get_string(in));
  f.spec.type = option_from_string(get_string(in));
  f.spec.strike = get_f64(in);
  f.spec.maturity = get_f64(in);
  Discretization& d = f.disc;
  d.s_min = get_f64(in);
  d.s_max = get_f64(in);
  d.nodes = get_u64(in);
  d.heston.v_min = get_f64(in);
  d.heston.v_max = get_f64(in);
  d.heston.x_min = get_f64(in);
  d.heston.x_max = get_f64(in);
  d.n_v = get_u64(in);
  d.n_x = get_u64(in);
  d.time_steps = get_u64(in);
  d.theta = get_f64(in);
  const ModelKind kind = f.spec.model;
  f.box.kind = kind;
  f.box.lower = get_doubles(in);
  f.box.upper = get_doubles(in);
  f.box.defaults = ModelParams(kind, get_doubles(in));
  const auto n_active = get_u64(in);
  if (n_active > 5) throw std::runtime_error("corrupt active coordinate count in basis file");
  for (std::uint64_t i = 0; i < n_active; ++i) f.box.active_coords.push_back(get_u64(in));
  f.basis.config_hash = get_u64(in);
  f.measure = measure_from_string(get_string(in));

  f.basis.supremizers = get_u64(in) != 0;
  f.basis.psi = get_mat(in);
  f.basis.xi = get_mat(in);
  const auto n_flags = get_u64(in);
  if (n_flags != static_cast<std::uint64_t>(f.basis.psi.cols()))
    throw std::runtime_error("corrupt supremizer flags in basis file");
  for (std::uint64_t i = 0; i < n_flags; ++i) f.basis.supremizer.push_back(get_u64(in) ? 1 : 0);
  const auto n_prov = get_u64(in);
  if (n_prov > (1u << 20)) throw std::runtime_error("corrupt provenance length in basis file");
  for (std::uint64_t i = 0; i < n_prov; ++i) {
    ProvenanceEntry p;
    p.k = get_u64(in);
    p.mu = ModelParams(kind, get_doubles(in));
    p.step = get_u64(in);
    p.score = get_f64(in);
    p.angle = get_f64(in);
    p.n_primal = get_u64(in);
    p.n_dual = get_u64(in);
    f.basis.provenance.push_back(std::move(p));
  }
  f.train_error = get_doubles(in);
  return f;
}

}  // namespace rbopt

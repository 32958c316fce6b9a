#include "rbopt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace rbopt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key, "'" + text + "' is not a number");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key, "'" + text + "' is not a nonnegative integer");
  return v;
}

// Tracks which keys were consumed so leftovers can be reported as unknown.
class Reader {
public:
  explicit Reader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::optional<std::string> get(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }
  std::string required(const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError(key, "missing required key");
    return *v;
  }
  double number(const std::string& key, double fallback) {
    auto v = get(key);
    return v ? parse_double(key, *v) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    auto v = get(key);
    return v ? parse_count(key, *v) : fallback;
  }
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<std::size_t> out;
    for (const auto& item : split(*v, ',')) out.push_back(parse_count(key, item));
    return out;
  }
  bool flag(const std::string& key, bool fallback) {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError(key, "'" + *v + "' is not a boolean");
  }
  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) throw ConfigError(k, "unknown key");
  }

private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

// Runs a library validator and attributes its complaint to `key`.
template <class F>
void checked(const std::string& key, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    throw ConfigError(key, e.what());
  }
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

template <class T>
std::string join_counts(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

}  // namespace

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.count(key)) throw ConfigError(key, "duplicate key");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

RunConfig parse_config(const std::string& text) {
  Reader r(parse_key_values(text));
  RunConfig c;

  checked("option.model", [&] { c.spec.model = model_from_string(r.required("option.model")); });
  checked("option.type", [&] { c.spec.type = option_from_string(r.required("option.type")); });
  c.spec.strike = r.number("option.strike", c.spec.strike);
  c.spec.maturity = r.number("option.maturity", c.spec.maturity);
  if (!(c.spec.strike > 0)) throw ConfigError("option.strike", "must be positive");
  if (!(c.spec.maturity > 0)) throw ConfigError("option.maturity", "must be positive");
  checked("option.type", [&] { c.spec.validate(); });
  const ModelKind kind = c.spec.model;
  const bool bs = kind == ModelKind::BlackScholes;

  Discretization& d = c.disc;
  if (bs) {
    d.s_min = r.number("mesh.s_min", d.s_min);
    d.s_max = r.number("mesh.s_max", d.s_max);
    d.nodes = r.count("mesh.nodes", d.nodes);
    if (d.nodes < 3) throw ConfigError("mesh.nodes", "need at least 3 nodes");
    if (!(d.s_max > d.s_min) || d.s_min < 0) throw ConfigError("mesh.s_max", "need 0 <= s_min < s_max");
  } else {
    d.heston.v_min = r.number("mesh.v_min", d.heston.v_min);
    d.heston.v_max = r.number("mesh.v_max", d.heston.v_max);
    d.heston.x_min = r.number("mesh.x_min", d.heston.x_min);
    d.heston.x_max = r.number("mesh.x_max", d.heston.x_max);
    d.n_v = r.count("mesh.n_v", d.n_v);
    d.n_x = r.count("mesh.n_x", d.n_x);
    if (!(d.heston.v_min > 0)) throw ConfigError("mesh.v_min", "must be positive");
    if (!(d.heston.v_max > d.heston.v_min)) throw ConfigError("mesh.v_max", "must exceed v_min");
    if (!(d.heston.x_max > d.heston.x_min)) throw ConfigError("mesh.x_max", "must exceed x_min");
    if (d.n_v < 3) throw ConfigError("mesh.n_v", "need at least 3 nodes");
    if (d.n_x < 3) throw ConfigError("mesh.n_x", "need at least 3 nodes");
  }
  d.time_steps = r.count("time.steps", d.time_steps);
  if (d.time_steps < 1) throw ConfigError("time.steps", "must be positive");
  const double theta_default = c.spec.type == OptionType::EuropeanCall ? 0.5 : 1.0;
  d.theta = r.number("time.theta", theta_default);
  if (!(d.theta > 0.0 && d.theta <= 1.0)) throw ConfigError("time.theta", "must lie in (0, 1]");
  if (c.spec.type == OptionType::AmericanPut && d.theta != 1.0)
    throw ConfigError("time.theta", "American options use implicit Euler (theta = 1)");
  checked("mesh", [&] { d.validate(c.spec); });

  ParameterBox& box = c.box;
  box.kind = kind;
  std::vector<double> defaults;
  checked("params.default", [&] {
    defaults = parse_doubles("params.default", r.required("params.default"));
    box.defaults = ModelParams(kind, defaults);
    box.defaults.validate();
  });
  std::set<std::size_t> seen;
  for (const auto& name : split(r.required("params.active"), ',')) {
    std::size_t idx = 0;
    checked("params.active", [&] { idx = ModelParams::coordinate_index(kind, name); });
    if (!seen.insert(idx).second) throw ConfigError("params.active", "coordinate '" + name + "' listed twice");
    box.active_coords.push_back(idx);
  }
  if (box.active_coords.empty()) throw ConfigError("params.active", "no active coordinates");
  const auto lower = parse_doubles("params.lower", r.required("params.lower"));
  const auto upper = parse_doubles("params.upper", r.required("params.upper"));
  if (lower.size() != box.active_coords.size())
    throw ConfigError("params.lower", "needs one value per active coordinate");
  if (upper.size() != box.active_coords.size())
    throw ConfigError("params.upper", "needs one value per active coordinate");
  box.lower = defaults;
  box.upper = defaults;
  for (std::size_t a = 0; a < box.active_coords.size(); ++a) {
    if (!(lower[a] <= upper[a])) throw ConfigError("params.upper", "upper bound below lower bound");
    box.lower[box.active_coords[a]] = lower[a];
    box.upper[box.active_coords[a]] = upper[a];
  }
  checked("params.lower", [&] {
    ModelParams(kind, box.lower).validate();
    ModelParams(kind, box.upper).validate();
    box.validate();
  });

  const std::size_t grid_default = bs ? 4 : 7;
  c.train_grid = r.counts("train.grid", {grid_default});
  if (c.train_grid.size() == 1) c.train_grid.assign(box.active_coords.size(), c.train_grid.front());
  if (c.train_grid.size() != box.active_coords.size())
    throw ConfigError("train.grid", "needs one count or one count per active coordinate");
  if (std::count(c.train_grid.begin(), c.train_grid.end(), std::size_t{0}))
    throw ConfigError("train.grid", "counts must be positive");
  c.n_max = r.count("train.n_max", c.n_max);
  if (c.n_max < 1) throw ConfigError("train.n_max", "must be positive");
  const auto measure = r.get("train.measure");
  checked("train.measure", [&] { c.measure = measure ? measure_from_string(*measure) : ErrorMeasure::L2True; });
  if (c.spec.type == OptionType::EuropeanCall && c.measure != ErrorMeasure::L2True)
    throw ConfigError("train.measure", "European training uses l2-true");
  c.drop_tol = r.number("train.drop_tol", c.drop_tol);
  if (!(c.drop_tol > 0 && c.drop_tol < 1)) throw ConfigError("train.drop_tol", "must lie in (0, 1)");
  c.supremizers = r.flag("train.supremizers", c.supremizers);

  c.pdas.c = r.number("pdas.c", c.pdas.c);
  c.pdas.eps = r.number("pdas.eps", c.pdas.eps);
  c.pdas.max_iter = static_cast<int>(r.count("pdas.max_iter", static_cast<std::size_t>(c.pdas.max_iter)));
  if (!(c.pdas.c > 0)) throw ConfigError("pdas.c", "must be positive");
  if (!(c.pdas.eps > 0)) throw ConfigError("pdas.eps", "must be positive");
  if (c.pdas.max_iter < 1) throw ConfigError("pdas.max_iter", "must be positive");

  c.test.count = r.count("test.count", 0);
  c.test.seed = r.count("test.seed", 0);
  if (auto list = r.get("test.mu")) {
    for (const auto& item : split(*list, ';')) {
      if (item.empty()) continue;
      try {
        c.test.explicit_mu.push_back(c.parse_mu(item));
      } catch (const ConfigError& e) {
        throw ConfigError("test.mu", e.what());
      }
    }
  }

  c.table_iterations = r.counts("study.table_iterations", {});
  for (auto k : c.table_iterations)
    if (k < 1 || k > c.n_max) throw ConfigError("study.table_iterations", "entries must lie in [1, train.n_max]");
  c.table_steps = r.counts("study.table_steps", c.table_steps);
  for (auto n : c.table_steps)
    if (n > d.time_steps) throw ConfigError("study.table_steps", "entries must not exceed time.steps");

  c.out_dir = r.get("run.out").value_or(c.out_dir);
  c.study = r.get("run.study").value_or("");
  c.cache_dir = r.get("run.cache").value_or("");
  c.workers = static_cast<int>(r.count("run.workers", 1));
  if (c.workers < 1) throw ConfigError("run.workers", "must be positive");

  r.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  kv["option.model"] = std::string(to_string(spec.model));
  kv["option.type"] = std::string(to_string(spec.type));
  kv["option.strike"] = num(spec.strike);
  kv["option.maturity"] = num(spec.maturity);
  if (spec.model == ModelKind::BlackScholes) {
    kv["mesh.s_min"] = num(disc.s_min);
    kv["mesh.s_max"] = num(disc.s_max);
    kv["mesh.nodes"] = std::to_string(disc.nodes);
  } else {
    kv["mesh.v_min"] = num(disc.heston.v_min);
    kv["mesh.v_max"] = num(disc.heston.v_max);
    kv["mesh.x_min"] = num(disc.heston.x_min);
    kv["mesh.x_max"] = num(disc.heston.x_max);
    kv["mesh.n_v"] = std::to_string(disc.n_v);
    kv["mesh.n_x"] = std::to_string(disc.n_x);
  }
  kv["time.steps"] = std::to_string(disc.time_steps);
  kv["time.theta"] = num(disc.theta);
  std::vector<std::string> names;
  for (auto a : box.active_coords) names.push_back(ModelParams::coordinate_names(spec.model)[a]);
  std::string active;
  for (std::size_t i = 0; i < names.size(); ++i) active += (i ? "," : "") + names[i];
  kv["params.active"] = active;
  kv["params.default"] = join(box.defaults.values());
  kv["params.lower"] = join(box.lower);
  kv["params.upper"] = join(box.upper);
  kv["train.grid"] = join_counts(train_grid);
  kv["train.n_max"] = std::to_string(n_max);
  kv["train.measure"] = std::string(to_string(measure));
  kv["train.drop_tol"] = num(drop_tol);
  kv["train.supremizers"] = supremizers ? "true" : "false";
  kv["pdas.c"] = num(pdas.c);
  kv["pdas.eps"] = num(pdas.eps);
  kv["pdas.max_iter"] = std::to_string(pdas.max_iter);
  kv["test.count"] = std::to_string(test.count);
  kv["test.seed"] = std::to_string(test.seed);
  std::string mus;
  for (std::size_t i = 0; i < test.explicit_mu.size(); ++i) mus += (i ? ";" : "") + join(test.explicit_mu[i].values());
  kv["test.mu"] = mus;
  kv["study.table_iterations"] = join_counts(table_iterations);
  kv["study.table_steps"] = join_counts(table_steps);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::run_hash() const { return fnv1a(canonical()); }

std::vector<ModelParams> RunConfig::train_set() const { return box.tensor_grid(train_grid); }

std::vector<ModelParams> RunConfig::test_set() const {
  std::vector<ModelParams> out = test.explicit_mu;
  const auto random = box.random(test.count, test.seed);
  out.insert(out.end(), random.begin(), random.end());
  return out;
}

TrainingConfig RunConfig::training() const {
  TrainingConfig t;
  t.train_set = train_set();
  t.n_max = n_max;
  t.measure = measure;
  t.drop_tol = drop_tol;
  t.supremizers = supremizers;
  t.workers = workers;
  t.pdas = pdas;
  return t;
}

ModelParams RunConfig::parse_mu(const std::string& text) const {
  const auto v = parse_doubles("--mu", text);
  const std::size_t dim = ModelParams::dimension(spec.model);
  ModelParams mu = box.defaults;
  if (v.size() == dim) {
    mu = ModelParams(spec.model, v);
  } else if (v.size() == box.active_coords.size()) {
    for (std::size_t a = 0; a < v.size(); ++a) mu[box.active_coords[a]] = v[a];
  } else {
    throw ConfigError("--mu", "expected " + std::to_string(dim) + " values or " +
                                  std::to_string(box.active_coords.size()) + " active-coordinate values");
  }
  checked("--mu", [&] { mu.validate(); });
  if (!box.contains(mu)) throw ConfigError("--mu", format_mu(mu) + " lies outside the parameter box");
  return mu;
}

}  // namespace rbopt

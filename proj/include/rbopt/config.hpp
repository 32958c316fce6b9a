#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbopt/greedy.hpp"

namespace rbopt {

/// Rejected configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Random test set (count + seed) or an explicit list of parameters.
struct TestSetSpec {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<ModelParams> explicit_mu;
};

/// Everything one run needs. Built only through parse_config/load_config,
/// which validate every field.
struct RunConfig {
  OptionSpec spec;
  Discretization disc;
  ParameterBox box;

  std::vector<std::size_t> train_grid;  // points per active coordinate
  std::size_t n_max = 1;
  ErrorMeasure measure = ErrorMeasure::L2True;
  double drop_tol = 1e-10;
  bool supremizers = true;
  PdasOptions pdas;

  TestSetSpec test;

  // Study controls: greedy prefixes (N_max values) of the effectivity table,
  // time steps of its columns.
  std::vector<std::size_t> table_iterations;
  std::vector<std::size_t> table_steps = {5, 10, 15, 20};

  std::string out_dir = "out";
  std::string study;
  std::string cache_dir;
  int workers = 1;

  // Canonical "key = value" listing of every field, sorted by key.
  std::string canonical() const;
  // FNV-1a of canonical().
  std::uint64_t run_hash() const;

  std::vector<ModelParams> train_set() const;
  std::vector<ModelParams> test_set() const;
  TrainingConfig training() const;

  // Parameter from "v1,v2,...": either a full model vector or values for
  // the active coordinates only (the rest taken from the defaults). Must lie
  // in the box.
  ModelParams parse_mu(const std::string& text) const;
};

// Raw "key = value" pairs. Accepts '#' comments and "[section]" headers,
// which prefix the keys that follow with "section.".
std::map<std::string, std::string> parse_key_values(const std::string& text);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Comma-separated doubles; throws ConfigError naming `key`.
std::vector<double> parse_doubles(const std::string& key, const std::string& text);

}  // namespace rbopt

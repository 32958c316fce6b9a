#pragma once

#include <string>
#include <vector>

#include "rbopt/config.hpp"

namespace rbopt {

inline constexpr char kBasisMagic[8] = {'R', 'B', 'O', 'P', 'T', 'B', 'A', 'S'};
inline constexpr std::uint64_t kBasisVersion = 1;

/// Contents of a basis container: the problem it was trained on, the basis
/// with its greedy provenance, and the training trace.
struct BasisFile {
  OptionSpec spec;
  Discretization disc;
  ParameterBox box;
  ErrorMeasure measure = ErrorMeasure::L2True;
  ReducedBasis basis;
  std::vector<double> train_error;
};

// Layout: magic, version, then little-endian u64/f64 fields (strings are
// length-prefixed, matrices column-major with their shape).
void write_basis(const std::string& path, const BasisFile& file);
BasisFile read_basis(const std::string& path);

}  // namespace rbopt

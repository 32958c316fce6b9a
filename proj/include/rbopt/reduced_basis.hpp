#pragma once

#include <cstdint>
#include <vector>

#include "rbopt/fem.hpp"

namespace rbopt {

/// One greedy iteration: selected parameter, time index of the dual snapshot,
/// selection score, its angle to the previous dual space, and the basis sizes
/// reached after the iteration.
struct ProvenanceEntry {
  std::size_t k = 0;
  ModelParams mu;
  std::size_t step = 0;
  double score = 0.0;
  double angle = 0.0;
  std::size_t n_primal = 0;
  std::size_t n_dual = 0;
};

/// Primal basis Psi (X-orthonormal columns) and dual cone generators Xi
/// (nonnegative, unit Euclidean norm). Columns are appended in greedy order,
/// so every prefix recorded in the provenance is itself a basis.
struct ReducedBasis {
  Mat psi;
  Mat xi;
  std::vector<char> supremizer;  // per Psi column
  std::vector<ProvenanceEntry> provenance;
  std::uint64_t config_hash = 0;
  bool supremizers = true;

  std::size_t n_primal() const { return static_cast<std::size_t>(psi.cols()); }
  std::size_t n_dual() const { return static_cast<std::size_t>(xi.cols()); }
  std::size_t iterations() const { return provenance.size(); }

  // The basis after `iterations` greedy iterations (1-based).
  ReducedBasis truncated(std::size_t iterations) const;
  // First n_v primal and n_w dual columns.
  ReducedBasis truncated(std::size_t n_v, std::size_t n_w) const;
};

// max |Psi^T X Psi - I|.
double orthonormality_defect(const ReducedBasis& basis, const SpMat& gram);

// Smallest generalized singular value of Psi^T Xi with the X norm on V_N
// (Psi orthonormal) and the Euclidean W norm on span(Xi). Zero for N_W = 0.
double reduced_inf_sup(const ReducedBasis& basis);

}  // namespace rbopt

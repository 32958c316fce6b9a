#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rbopt/certification.hpp"
#include "rbopt/reduced.hpp"
#include "rbopt/snapshot_store.hpp"
#include "rbopt/stability.hpp"

namespace rbopt {

enum class ErrorMeasure { L2True, EnergyTrue, EnergyApost };

std::string_view to_string(ErrorMeasure m);  // "l2-true", "energy-true", "energy-apost"
ErrorMeasure measure_from_string(std::string_view name);

struct TrainingConfig {
  std::vector<ModelParams> train_set;
  std::size_t n_max = 1;
  ErrorMeasure measure = ErrorMeasure::L2True;
  double drop_tol = 1e-10;
  bool supremizers = true;
  int workers = 1;
  PdasOptions pdas;
};

// Dominant POD mode of `snapshots` in the X inner product (method of
// snapshots), unit X-norm, largest-magnitude entry positive. Empty when no
// snapshot has X-norm above drop_tol.
std::optional<Vec> pod1(const std::vector<Vec>& snapshots, const SpMat& gram, double drop_tol);

// Angle between eta and span(columns of basis) in the Euclidean W product.
double angle_to_space(const Vec& eta, const Mat& basis);

// Riesz representer of b(xi, .) in X: solves X s = xi.
Vec supremizer(const DiscreteOperators& ops, const Vec& xi);

// Appends v to the X-orthonormal columns of psi by modified Gram-Schmidt
// with one reorthogonalization pass. Returns false (psi untouched) when the
// remainder is below drop_tol relative to |v|_X.
bool append_orthonormal(Mat& psi, const Vec& v, const SpMat& gram, double drop_tol);

// Everything a score evaluation may need.
struct ScoreContext {
  const DiscreteOperators* ops = nullptr;
  const ReducedOperators* rops = nullptr;
  ConstantsCache* constants = nullptr;
  SnapshotStore* snapshots = nullptr;
  PdasOptions pdas;
};

// E(mu) for the current reduced operators. True measures pull the detailed
// trajectory from the store; the a posteriori measure needs none.
double greedy_error_measure(ErrorMeasure m, const ScoreContext& ctx, const ModelParams& mu);

// Scores over a parameter list against one immutable basis.
std::vector<double> score_sweep(ErrorMeasure m, const ScoreContext& ctx, const std::vector<ModelParams>& mus,
                                int workers);
std::vector<double> score_sweep_serial(ErrorMeasure m, const ScoreContext& ctx, const std::vector<ModelParams>& mus);

// Index of the largest value; smallest index wins ties, NaN entries are skipped.
std::size_t argmax_first(const std::vector<double>& v);

using GreedyObserver = std::function<void(const ProvenanceEntry&)>;

struct GreedyResult {
  ReducedBasis basis;
  // max training error of the basis after iteration k (k = 1..N_max)
  std::vector<double> train_error;
  std::size_t detailed_solves = 0;
};

// Offline basis construction. American options: POD-Angle-Greedy with
// optional supremizers. European options: strong POD-Greedy.
GreedyResult pod_angle_greedy(const TrainingConfig& config, const DiscreteOperators& ops, SnapshotStore& store,
                              ConstantsCache& constants, const GreedyObserver& observer = {});

}  // namespace rbopt

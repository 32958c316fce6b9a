#pragma once

#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rbopt/basis_io.hpp"
#include "rbopt/config.hpp"

namespace rbopt {

inline constexpr const char* kVersion = "0.1.0";

/// First line of every emitted table.
struct TableHeader {
  std::uint64_t config_hash = 0;  // operators
  std::uint64_t run_hash = 0;     // full run configuration
  std::optional<std::uint64_t> seed;
  std::string note;
};

std::ofstream open_table(const std::string& path, const TableHeader& header, const std::vector<std::string>& columns);

// Shortest round-trip decimal form; "nan" / "inf" for non-finite values.
std::string fmt(double v);

/// Online evaluation of one parameter against one reduced model.
struct Evaluation {
  ModelParams mu;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double l2_true = std::numeric_limits<double>::quiet_NaN();
  double energy_true = std::numeric_limits<double>::quiet_NaN();
  double apost = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> effectivity;  // n = 0..L; NaN where undefined or exact
  double online_seconds = 0.0;
  std::string failure;  // reduced solver error, empty on success
};

struct EvaluateOptions {
  bool truth = true;   // compare with the detailed trajectory
  bool energy = true;  // stability constants, a posteriori bound, energy error
  PdasOptions pdas;
};

// Reduced solve at mu plus the requested certification. Undefined energy
// quantities (alpha <= 0) stay NaN; a reduced solver failure is recorded in
// `failure` and leaves every error NaN.
Evaluation evaluate_one(const ReducedOperators& rops, const ModelParams& mu, const EvaluateOptions& opt,
                        ConstantsCache* constants, SnapshotStore* store);

std::vector<Evaluation> evaluate_set(const ReducedOperators& rops, const std::vector<ModelParams>& mus,
                                     const EvaluateOptions& opt, ConstantsCache* constants, SnapshotStore* store,
                                     int workers);
std::vector<Evaluation> evaluate_set_serial(const ReducedOperators& rops, const std::vector<ModelParams>& mus,
                                            const EvaluateOptions& opt, ConstantsCache* constants,
                                            SnapshotStore* store);

struct Aggregate {
  double max = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t undefined = 0;  // NaN entries, left out of max and mean
};
Aggregate aggregate(const std::vector<double>& values);

/// A detailed trajectory reduced to what the true errors of every prefix of
/// one basis need: with w^n = u^n - P u^n (P the X-orthogonal projection
/// onto span Psi) and c^n = coefficients of P u^n, the error of reduced
/// coefficients U is Psi (U - c) - w, and Psi^T X w = 0.
struct CompressedTruth {
  ModelParams mu;
  Mat coeff;                       // N x (L+1)
  std::vector<double> rest_x_sq;   // |w^n|_X^2
  std::vector<double> rest_m_sq;   // |w^n|_M^2
  Mat rest_m_psi;                  // N x (L+1): Psi^T M w^n
  double seconds = 0.0;            // detailed solve time
};

struct PrefixProducts {
  Mat x_psi;  // X Psi
  Mat m_psi;  // M Psi
  Mat gram;   // Psi^T X Psi
  Mat mass;   // Psi^T M Psi
};

PrefixProducts prefix_products(const Mat& psi, const DiscreteOperators& ops);
CompressedTruth compress_truth(const Mat& psi, const PrefixProducts& pp, const DiscreteOperators& ops,
                               const Trajectory& detailed);
// Same result as true_errors(ops, detailed, reconstruct(rops_k, reduced), alpha)
// for a reduced trajectory on the first U.size() columns of psi.
TrueErrors compressed_errors(const CompressedTruth& t, const PrefixProducts& pp, const Trajectory& reduced,
                             double alpha, double dt);

// Greedy provenance, training trace and selection frequencies.
void write_provenance_csv(const std::string& path, const BasisFile& f, const TableHeader& h);
void write_train_trace_csv(const std::string& path, const BasisFile& f, const TableHeader& h);
void write_selection_csv(const std::string& path, const BasisFile& f, const TableHeader& h);
// Per-parameter errors; effectivity columns at `steps`.
void write_evaluations_csv(const std::string& path, const std::vector<Evaluation>& evals,
                           const std::vector<std::size_t>& steps, const TableHeader& h);

const std::vector<std::string>& study_ids();

struct StudyOptions {
  std::string out_dir;
  int workers = 1;
};

// Runs one experiment and writes its tables into opt.out_dir. Throws
// ConfigError for an unknown id or a configuration the study does not fit.
void run_study(const std::string& id, const RunConfig& config, const StudyOptions& opt);

}  // namespace rbopt

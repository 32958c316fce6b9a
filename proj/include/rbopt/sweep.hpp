#pragma once

#include <exception>
#include <functional>
#include <vector>

#include "rbopt/detailed_solver.hpp"

namespace rbopt {

// Runs body(i) for i in [0, n) on `workers` OpenMP threads (dynamic
// schedule). Exceptions are collected per index and the one with the
// smallest index is rethrown after the loop, so failures are reported
// deterministically.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

// Serial counterpart with the same exception semantics; the reference for
// tests of the parallel kernels.
void serial_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Number of OpenMP threads available (1 when built without OpenMP).
int max_workers();

// Detailed trajectories for a list of parameters. Each item is solved
// independently, so the parallel and serial results are bitwise equal.
std::vector<Trajectory> detailed_sweep(const DiscreteOperators& ops, const std::vector<ModelParams>& mus,
                                       const PdasOptions& opt, int workers);
std::vector<Trajectory> detailed_sweep_serial(const DiscreteOperators& ops, const std::vector<ModelParams>& mus,
                                              const PdasOptions& opt);

}  // namespace rbopt

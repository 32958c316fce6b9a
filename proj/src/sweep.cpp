#include "rbopt/sweep.hpp"

#include <omp.h>

namespace rbopt {

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int max_workers() { return omp_get_max_threads(); }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    serial_for(n, body);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

void serial_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

std::vector<Trajectory> detailed_sweep(const DiscreteOperators& ops, const std::vector<ModelParams>& mus,
                                       const PdasOptions& opt, int workers) {
  std::vector<Trajectory> out(mus.size());
  parallel_for(mus.size(), workers, [&](std::size_t i) { out[i] = solve_detailed(ops, mus[i], opt); });
  return out;
}

std::vector<Trajectory> detailed_sweep_serial(const DiscreteOperators& ops, const std::vector<ModelParams>& mus,
                                              const PdasOptions& opt) {
  std::vector<Trajectory> out;
  out.reserve(mus.size());
  for (const auto& mu : mus) out.push_back(solve_detailed(ops, mu, opt));
  return out;
}

}  // namespace rbopt

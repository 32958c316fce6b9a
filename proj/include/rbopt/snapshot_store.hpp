#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rbopt/detailed_solver.hpp"

namespace rbopt {

/// Detailed trajectories keyed by (mu, config_hash). Kept in memory and,
/// when a directory is given, mirrored to one binary file per parameter so
/// later runs skip the solve.
class SnapshotStore {
public:
  SnapshotStore(const DiscreteOperators& ops, PdasOptions opt = {}, std::string cache_dir = {});

  // Trajectory at mu, solved (or loaded) on first use. Thread-safe.
  std::shared_ptr<const Trajectory> get(const ModelParams& mu);

  // Solves every missing parameter, in parallel over `workers` threads.
  void prefetch(const std::vector<ModelParams>& mus, int workers);

  std::size_t solves() const { return solves_; }
  std::size_t size() const;

  std::string file_for(const ModelParams& mu) const;

private:
  std::shared_ptr<const Trajectory> load(const ModelParams& mu) const;
  void save(const Trajectory& t) const;

  const DiscreteOperators& ops_;
  PdasOptions opt_;
  std::string dir_;
  mutable std::mutex mutex_;
  std::map<std::vector<double>, std::shared_ptr<const Trajectory>> cache_;
  std::size_t solves_ = 0;
};

void write_trajectory_binary(const std::string& path, const Trajectory& t, std::uint64_t config_hash);
// Returns false when the file is absent or was written for other operators.
bool read_trajectory_binary(const std::string& path, std::uint64_t config_hash, Trajectory& t);

}  // namespace rbopt

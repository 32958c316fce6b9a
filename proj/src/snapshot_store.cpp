#include "rbopt/snapshot_store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rbopt/binio.hpp"
#include "rbopt/log.hpp"
#include "rbopt/sweep.hpp"

namespace rbopt {

namespace {
constexpr std::uint64_t kMagic = 0x4a54534252ull;  // "RBSTJ"
constexpr std::uint64_t kVersion = 1;
}  // namespace

void write_trajectory_binary(const std::string& path, const Trajectory& t, std::uint64_t config_hash) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    binio::put_u64(out, kMagic);
    binio::put_u64(out, kVersion);
    binio::put_u64(out, config_hash);
    binio::put_u64(out, t.mu.kind() == ModelKind::BlackScholes ? 0 : 1);
    binio::put_vec(out, Eigen::Map<const Vec>(t.mu.values().data(), static_cast<Eigen::Index>(t.mu.size())));
    binio::put_u64(out, t.u.size());
    binio::put_u64(out, t.lambda.size());
    for (const auto& u : t.u) binio::put_vec(out, u);
    for (const auto& l : t.lambda) binio::put_vec(out, l);
    for (std::size_t n = 0; n + 1 < t.u.size(); ++n) {
      binio::put_u64(out, n < t.iterations.size() ? static_cast<std::uint64_t>(t.iterations[n]) : 0);
      binio::put_u64(out, n < t.active_sizes.size() ? t.active_sizes[n] : 0);
    }
    binio::put_f64(out, t.seconds);
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

bool read_trajectory_binary(const std::string& path, std::uint64_t config_hash, Trajectory& t) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  if (binio::get_u64(in) != kMagic || binio::get_u64(in) != kVersion) return false;
  if (binio::get_u64(in) != config_hash) return false;
  const auto kind = binio::get_u64(in) == 0 ? ModelKind::BlackScholes : ModelKind::Heston;
  const Vec mu = binio::get_vec(in);
  t.mu = ModelParams(kind, std::vector<double>(mu.data(), mu.data() + mu.size()));
  const auto nu = binio::get_u64(in), nl = binio::get_u64(in);
  t.u.clear();
  t.lambda.clear();
  t.iterations.clear();
  t.active_sizes.clear();
  for (std::uint64_t i = 0; i < nu; ++i) t.u.push_back(binio::get_vec(in));
  for (std::uint64_t i = 0; i < nl; ++i) t.lambda.push_back(binio::get_vec(in));
  for (std::uint64_t n = 0; n + 1 < nu; ++n) {
    t.iterations.push_back(static_cast<int>(binio::get_u64(in)));
    t.active_sizes.push_back(binio::get_u64(in));
  }
  t.seconds = binio::get_f64(in);
  return true;
}

SnapshotStore::SnapshotStore(const DiscreteOperators& ops, PdasOptions opt, std::string cache_dir)
    : ops_(ops), opt_(opt), dir_(std::move(cache_dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string SnapshotStore::file_for(const ModelParams& mu) const {
  std::string bytes(reinterpret_cast<const char*>(mu.values().data()), mu.size() * sizeof(double));
  char name[64];
  std::snprintf(name, sizeof name, "%016llx-%016llx.traj", static_cast<unsigned long long>(ops_.config_hash()),
                static_cast<unsigned long long>(fnv1a(bytes)));
  return (std::filesystem::path(dir_) / name).string();
}

std::size_t SnapshotStore::size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::shared_ptr<const Trajectory> SnapshotStore::load(const ModelParams& mu) const {
  if (dir_.empty()) return nullptr;
  auto t = std::make_shared<Trajectory>();
  try {
    if (read_trajectory_binary(file_for(mu), ops_.config_hash(), *t) && t->mu == mu) return t;
  } catch (const std::exception& e) {
    log::warn(std::string("ignoring unreadable snapshot file: ") + e.what());
  }
  return nullptr;
}

void SnapshotStore::save(const Trajectory& t) const {
  if (!dir_.empty()) write_trajectory_binary(file_for(t.mu), t, ops_.config_hash());
}

std::shared_ptr<const Trajectory> SnapshotStore::get(const ModelParams& mu) {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(mu.values());
    if (it != cache_.end()) return it->second;
  }
  auto t = load(mu);
  if (!t) {
    auto solved = std::make_shared<Trajectory>(solve_detailed(ops_, mu, opt_));
    save(*solved);
    t = std::move(solved);
    std::lock_guard lock(mutex_);
    ++solves_;
  }
  std::lock_guard lock(mutex_);
  return cache_.emplace(mu.values(), t).first->second;
}

void SnapshotStore::prefetch(const std::vector<ModelParams>& mus, int workers) {
  parallel_for(mus.size(), workers, [&](std::size_t i) { get(mus[i]); });
}

}  // namespace rbopt

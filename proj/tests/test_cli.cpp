#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rbopt/study.hpp"

using namespace rbopt;
namespace fs = std::filesystem;

namespace {

const char* kSmallBs = R"(
[option]
model = black-scholes
type = american-put
strike = 100
[mesh]
nodes = 40
[time]
steps = 10
[params]
active = sigma, r
lower = 0.475, 0.0475
upper = 0.525, 0.0525
default = 0.5, 0.0015, 0.05
[train]
grid = 2
n_max = 3
measure = l2-true
[test]
count = 4
seed = 7
[study]
table_steps = 5, 10
)";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rbopt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RBOPT_CLI) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, ParsesSmallBlackScholes) {
  const RunConfig c = parse_config(kSmallBs);
  EXPECT_EQ(c.disc.nodes, 40u);
  EXPECT_EQ(c.disc.time_steps, 10u);
  EXPECT_EQ(c.disc.theta, 1.0);
  EXPECT_EQ(c.train_set().size(), 4u);
  EXPECT_EQ(c.test_set().size(), 4u);
  const ModelParams mu = c.parse_mu("0.49,0.051");
  EXPECT_EQ(mu.sigma(), 0.49);
  EXPECT_EQ(mu.q(), 0.0015);
  EXPECT_EQ(mu.r(), 0.051);
  EXPECT_THROW(c.parse_mu("0.9,0.05"), ConfigError);
}

TEST(Config, ErrorsNameTheKey) {
  const std::string base = kSmallBs;
  EXPECT_EQ(config_error_key(base + "\n[mesh]\nbogus = 1\n"), "mesh.bogus");
  EXPECT_EQ(config_error_key(base + "\n[train]\nmeasure = nope\n"), "train.measure");
  std::string theta = base;
  theta.replace(theta.find("steps = 10"), 10, "steps = 10\ntheta = 0.5");
  EXPECT_EQ(config_error_key(theta), "time.theta");
  std::string nodes = base;
  nodes.replace(nodes.find("nodes = 40"), 10, "nodes = x");
  EXPECT_EQ(config_error_key(nodes), "mesh.nodes");
  std::string box = base;
  box.replace(box.find("upper = 0.525"), 13, "upper = 0.4");
  EXPECT_EQ(config_error_key(box), "params.upper");
}

TEST(Config, CanonicalFormAndHash) {
  const RunConfig a = parse_config(kSmallBs);
  // reordering and comments do not change the run
  const RunConfig b = parse_config(std::string("# reordered\n[study]\ntable_steps = 5,10\n[test]\nseed = 7\ncount = 4\n") +
                                   std::string(kSmallBs).substr(0, std::string(kSmallBs).find("[test]")));
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.run_hash(), b.run_hash());
  std::string other = kSmallBs;
  other.replace(other.find("seed = 7"), 8, "seed = 8");
  EXPECT_NE(parse_config(other).run_hash(), a.run_hash());
}

TEST(BasisIo, RoundTrip) {
  const RunConfig c = parse_config(kSmallBs);
  DiscreteOperators ops(c.spec, c.disc);
  SnapshotStore store(ops);
  ConstantsCache constants(ops);
  const GreedyResult g = pod_angle_greedy(c.training(), ops, store, constants);
  BasisFile f{c.spec, c.disc, c.box, c.measure, g.basis, g.train_error};
  const fs::path dir = scratch_dir("roundtrip");
  write_basis((dir / "b.rb").string(), f);
  const BasisFile r = read_basis((dir / "b.rb").string());
  EXPECT_EQ(r.basis.psi, g.basis.psi);
  EXPECT_EQ(r.basis.xi, g.basis.xi);
  EXPECT_EQ(r.basis.supremizer, g.basis.supremizer);
  EXPECT_EQ(r.basis.config_hash, ops.config_hash());
  ASSERT_EQ(r.basis.provenance.size(), g.basis.provenance.size());
  for (std::size_t k = 0; k < r.basis.provenance.size(); ++k) {
    EXPECT_EQ(r.basis.provenance[k].mu, g.basis.provenance[k].mu);
    EXPECT_EQ(r.basis.provenance[k].step, g.basis.provenance[k].step);
  }
  EXPECT_EQ(r.train_error, g.train_error);
  EXPECT_EQ(DiscreteOperators(r.spec, r.disc).config_hash(), ops.config_hash());
  // truncated file
  const std::string bytes = read_file(dir / "b.rb");
  write_file(dir / "cut.rb", bytes.substr(0, bytes.size() / 2));
  EXPECT_ANY_THROW(read_basis((dir / "cut.rb").string()));
  write_file(dir / "junk.rb", "not a basis");
  EXPECT_ANY_THROW(read_basis((dir / "junk.rb").string()));
}

TEST(Cli, ExitCodesAndDeterministicOutput) {
  const fs::path dir = scratch_dir("cli");
  write_file(dir / "small.conf", kSmallBs);
  std::string finer = kSmallBs;
  finer.replace(finer.find("nodes = 40"), 10, "nodes = 41");
  write_file(dir / "finer.conf", finer);
  write_file(dir / "bad.conf", std::string(kSmallBs) + "\n[mesh]\nbogus = 1\n");
  const std::string cfg = "--config " + (dir / "small.conf").string();

  EXPECT_EQ(run_cli("train " + cfg + " --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run_cli("train " + cfg + " --workers 2 --out " + (dir / "b").string()), 0);
  for (const char* table : {"provenance.csv", "train_trace.csv", "selection.csv"})
    EXPECT_EQ(read_file(dir / "a" / table), read_file(dir / "b" / table)) << table;
  EXPECT_EQ(read_file(dir / "a" / "basis.rb"), read_file(dir / "b" / "basis.rb"));

  const std::string basis = (dir / "a" / "basis.rb").string();
  EXPECT_EQ(run_cli("evaluate " + basis + " " + cfg + " --out " + (dir / "e").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "e" / "evaluation.csv"));
  EXPECT_EQ(run_cli("evaluate " + basis + " --config " + (dir / "finer.conf").string() + " --out " +
                    (dir / "f").string()),
            4);
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.conf").string() + " --out " + (dir / "c").string()), 2);
  EXPECT_EQ(run_cli("detailed-solve " + cfg + " --mu 3,3 --out " + (dir / "d").string()), 2);
  EXPECT_EQ(run_cli("study no-such-study " + cfg), 2);
  EXPECT_EQ(run_cli("inspect-basis " + basis), 0);
}

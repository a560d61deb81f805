#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bregman/experiments.hpp"
#include "cli.hpp"

using namespace bregman;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "bregman");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bregman_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fig1 output is byte-identical across runs") {
  const auto dir = scratch("fig1");
  const std::vector<std::string> common{"fig1", "--trials", "1", "--seed", "7", "--sample-sizes",
                                        "300,1200"};
  auto a = common, b = common;
  a.insert(a.end(), {"--out", (dir / "a.csv").string()});
  b.insert(b.end(), {"--out", (dir / "b.csv").string()});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a_summary.csv") == slurp(dir / "b_summary.csv"));
  CHECK(fs::exists(dir / "a_plot.gp"));
}

TEST_CASE("fig2 writes all three files") {
  const auto dir = scratch("fig2");
  REQUIRE(run({"fig2", "--trials", "1", "--sample-size", "1000", "--group-sizes", "2,4", "--out",
               (dir / "f.csv").string()}) == 0);
  CHECK(fs::exists(dir / "f.csv"));
  CHECK(fs::exists(dir / "f_summary.csv"));
  CHECK(fs::exists(dir / "f_plot.gp"));
}

TEST_CASE("config files are applied and flags override them") {
  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "trials = 2\nsample_sizes = 200\nmethods = pseudolikelihood\n";
  }
  REQUIRE(run({"fig1", "--config", (dir / "run.cfg").string(), "--trials", "1", "--out",
               (dir / "o.csv").string()}) == 0);
  const std::string csv = slurp(dir / "o.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("pseudolikelihood,200,0,") != std::string::npos);
}

TEST_CASE("errors give a nonzero exit") {
  const auto dir = scratch("errors");
  CHECK(run({"fig1", "--bogus"}) != 0);
  CHECK(run({"fig1", "--config", (dir / "missing.cfg").string()}) != 0);
  CHECK(run({"fig1", "--trials", "1", "--sample-sizes", "100", "--out",
             (dir / "no" / "such" / "dir.csv").string()}) != 0);
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "flavour = mint\n";
  }
  CHECK(run({"fig2", "--config", (dir / "bad.cfg").string()}) != 0);
  CHECK(run({}) != 0);
}

TEST_CASE("fit round trip through a csv file") {
  const auto dir = scratch("fit");
  RngStream rng(3, 3);
  BoltzmannParams truth;
  truth.upper_tri = random_init(3, 0.5, rng);
  truth.b = random_init(3, 0.5, rng);
  truth.c = -boltzmann_exact_log_partition(truth.coupling_matrix(), truth.b);
  const auto idx = sample_discrete_exact(boltzmann_log_pmf(truth), rng, 20000);
  const Matrix states = enumerate_states(3);
  Matrix x(3, 20000);
  for (Index t = 0; t < 20000; ++t) x.col(t) = states.col(idx[static_cast<std::size_t>(t)]);
  {
    std::ofstream out(dir / "data.csv");
    write_points_csv(out, x);
  }
  REQUIRE(run({"fit", "--model", "boltzmann", "--estimator", "nce", "--data",
               (dir / "data.csv").string(), "--out", (dir / "fit.csv").string()}) == 0);
  std::istringstream in(slurp(dir / "fit.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "parameter,value");
  Vector theta(7);
  Index k = 0;
  while (std::getline(in, line)) theta[k++] = std::stod(line.substr(line.find(',') + 1));
  REQUIRE(k == 7);
  CHECK(param_error_boltzmann(BoltzmannParams::unpack(3, theta), truth) < 0.01);

  {
    std::ofstream out(dir / "ica.csv");
    write_points_csv(out, sample_ica(Matrix::Identity(2, 2), rng, 500));
  }
  CHECK(run({"fit", "--model", "ica", "--experts", "2", "--data", (dir / "ica.csv").string(),
             "--out", (dir / "ica_fit.csv").string()}) == 0);
  CHECK(run({"fit", "--estimator", "telepathy", "--data", (dir / "data.csv").string()}) != 0);
}

TEST_CASE("validate passes") { CHECK(run({"validate", "--seed", "3"}) == 0); }

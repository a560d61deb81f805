#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "bregman/errors.hpp"
#include "bregman/experiments.hpp"

using namespace bregman;

namespace {

// Every ordered choice of n rows, every sign pattern, cost written out in full.
double brute_force_alignment(const Matrix& experts, const Matrix& mixing) {
  const Matrix r = experts * mixing.transpose().inverse();
  const Index k = r.rows(), n = r.cols();
  std::vector<Index> rows(static_cast<std::size_t>(k));
  std::iota(rows.begin(), rows.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(static_cast<std::size_t>(k), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    std::vector<Index> chosen;
    for (Index i = 0; i < k; ++i) {
      if (pick[static_cast<std::size_t>(i)]) chosen.push_back(i);
    }
    do {
      for (int signs = 0; signs < (1 << n); ++signs) {
        double cost = 0.0;
        for (Index j = 0; j < n; ++j) {
          const double s = (signs >> j) & 1 ? -1.0 : 1.0;
          for (Index c = 0; c < n; ++c) {
            const double d = s * r(chosen[static_cast<std::size_t>(j)], c) - (c == j ? 1.0 : 0.0);
            cost += d * d;
          }
        }
        for (Index i = 0; i < k; ++i) {
          if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) cost += r.row(i).squaredNorm();
        }
        best = std::min(best, cost);
      }
    } while (std::next_permutation(chosen.begin(), chosen.end()));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return std::sqrt(best);
}

}  // namespace

TEST_CASE("boltzmann parameter error") {
  BoltzmannParams a;
  a.upper_tri = Vector(3);
  a.upper_tri << 0.1, 0.2, 0.3;
  a.b = Vector(3);
  a.b << -1, 0, 1;
  a.c = 0.4;
  CHECK(param_error_boltzmann(a, a) == 0.0);
  BoltzmannParams b = a;
  b.c += 0.5;
  CHECK(param_error_boltzmann(b, a) == doctest::Approx(0.25));

  RngStream rng(1, 1);
  const Vector x = random_init(7, 1.0, rng), y = random_init(7, 1.0, rng);
  double flat = 0.0;
  for (Index i = 0; i < 7; ++i) flat += (x[i] - y[i]) * (x[i] - y[i]);
  CHECK(param_error_boltzmann(BoltzmannParams::unpack(3, x), BoltzmannParams::unpack(3, y)) ==
        doctest::Approx(flat).epsilon(1e-14));

  BoltzmannParams small;
  small.upper_tri = Vector::Zero(1);
  small.b = Vector::Zero(2);
  CHECK_THROWS_AS(param_error_boltzmann(small, a), InvalidArgument);
}

TEST_CASE("alignment of perfect recovery") {
  Matrix experts = Matrix::Zero(6, 3);
  experts(0, 2) = -1.0;
  experts(3, 0) = 1.0;
  experts(4, 1) = -1.0;
  const auto a = poe_alignment(experts, Matrix::Identity(3, 3));
  CHECK(a.error == 0.0);
  CHECK(a.matched_rows == std::vector<Index>{3, 4, 0});

  // Columns of B* are the true experts; their transposes are perfect rows.
  RngStream rng(2, 2);
  const Matrix mixing = draw_mixing_matrix(3, 100.0, rng);
  Matrix stacked = Matrix::Zero(5, 3);
  stacked.topRows(3) = mixing.transpose();
  CHECK(poe_alignment_error(stacked, mixing) < 1e-12);
  CHECK_THROWS_AS(poe_alignment_error(Matrix::Zero(2, 3), Matrix::Identity(3, 3)), InvalidArgument);
  CHECK_THROWS_AS(poe_alignment_error(Matrix::Zero(4, 3), Matrix::Zero(3, 3)), InvalidArgument);
}

TEST_CASE("alignment is first order in small perturbations") {
  RngStream rng(3, 3);
  Matrix e(3, 3);
  for (Index i = 0; i < 9; ++i) e(i) = 1e-4 * rng.normal();
  Matrix experts = Matrix::Zero(5, 3);
  experts.topRows(3) = Matrix::Identity(3, 3) + e;
  CHECK(poe_alignment_error(experts, Matrix::Identity(3, 3)) == doctest::Approx(e.norm()).epsilon(1e-10));
}

TEST_CASE("alignment matches an exhaustive search") {
  RngStream rng(4, 4);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix experts(6, 3), mixing(3, 3);
    for (Index i = 0; i < experts.size(); ++i) experts(i) = rng.normal();
    for (Index i = 0; i < mixing.size(); ++i) mixing(i) = rng.normal();
    CHECK(poe_alignment_error(experts, mixing) ==
          doctest::Approx(brute_force_alignment(experts, mixing)).epsilon(1e-12));
  }
}

TEST_CASE("spurious norm ratio and slopes") {
  Matrix experts(3, 2);
  experts << 2, 0, 0.1, 0.1, 0, 1;
  const auto a = poe_alignment(experts, Matrix::Identity(2, 2));
  CHECK(spurious_norm_ratio(experts, a) == doctest::Approx(std::sqrt(0.02) / 1.0));
  CHECK(least_squares_slope({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(least_squares_slope({1}, {1}), InvalidArgument);
}

TEST_CASE("fig1 row counts and determinism") {
  Fig1Config config;
  config.trials = 1;
  config.sample_sizes = {500};
  config.methods = {Fig1Method::nce_bernoulli};
  const auto result = run_fig1(config);
  CHECK(result.records.size() == 1);
  CHECK(result.summary.size() == 1);
  std::ostringstream a, b, s;
  write_fig1_csv(a, result);
  write_fig1_csv(b, run_fig1(config));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("method,sample_size,trial,error,status,wall_ms\n", 0) == 0);
  write_fig1_summary(s, result);
  CHECK(s.str().rfind("method,sample_size,mean_log10_error,mean_error,trials_ok\n", 0) == 0);

  config.sample_sizes = {500, 400};
  CHECK_THROWS_AS(run_fig1(config), InvalidArgument);
}

TEST_CASE("fig1 short sweep over all methods") {
  Fig1Config config;
  config.trials = 2;
  config.sample_sizes = {1000, 16000};
  const auto result = run_fig1(config);
  CHECK(result.records.size() == 16);
  for (const auto& r : result.records) {
    CHECK(std::isfinite(r.error));
    CHECK(r.error >= 0.0);
  }
  for (auto m : config.methods) CHECK(result.at(m, 16000).mean_error < result.at(m, 1000).mean_error);
}

TEST_CASE("fig2 small run") {
  Fig2Config config;
  config.trials = 1;
  config.sample_size = 3000;
  config.group_sizes = {1, 4};
  const auto result = run_fig2(config);
  CHECK(result.records.size() == 2);
  CHECK(result.summary.size() == 2);
  std::ostringstream out;
  write_fig2_csv(out, result);
  CHECK(out.str().rfind("group_size,trial,error,status,wall_ms\n", 0) == 0);
  config.group_sizes = {3};
  CHECK_THROWS_AS(run_fig2(config), InvalidArgument);
}

TEST_CASE("mixing matrices respect the condition bound") {
  RngStream rng(5, 5);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix b = draw_mixing_matrix(4, 10.0, rng);
    Eigen::JacobiSVD<Matrix> svd(b);
    CHECK(svd.singularValues()[0] / svd.singularValues()[3] <= 10.0);
  }
}

TEST_CASE("config parsing") {
  std::istringstream in("# comment\n\ntrials = 3\nsample_sizes = 100, 200\nmethods = ratio_matching\n"
                        "max_iterations = 50\nseed = 9\n");
  Fig1Config config;
  apply_fig1_config(parse_key_values(in), config);
  CHECK(config.trials == 3);
  CHECK(config.sample_sizes == std::vector<Index>{100, 200});
  CHECK(config.methods == std::vector<Fig1Method>{Fig1Method::ratio_matching});
  CHECK(config.optim.max_iterations == 50);
  CHECK(config.master_seed == 9u);

  std::istringstream bad("colour = blue\n");
  CHECK_THROWS_AS(apply_fig1_config(parse_key_values(bad), config), InvalidArgument);
  std::istringstream nonnum("trials = many\n");
  CHECK_THROWS_AS(apply_fig1_config(parse_key_values(nonnum), config), InvalidArgument);
  std::istringstream noeq("trials 3\n");
  CHECK_THROWS_AS(parse_key_values(noeq), InvalidArgument);

  std::istringstream fig2("K = 6\ngroup_sizes = 1,3\nT_d = 500\n");
  Fig2Config c2;
  apply_fig2_config(parse_key_values(fig2), c2);
  CHECK(c2.total_experts == 6);
  CHECK(c2.group_sizes == std::vector<Index>{1, 3});
  CHECK(c2.sample_size == 500);
}

TEST_CASE("points csv round trip") {
  Matrix x(2, 3);
  x << 1, -1, 0.25, 2, 3.5, -7;
  std::stringstream io;
  io << "a,b\n";
  write_points_csv(io, x);
  CHECK(read_points_csv(io) == x);
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_points_csv(ragged), InvalidArgument);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("fit recovers a boltzmann machine from its samples") {
  RngStream rng(6, 6);
  BoltzmannParams truth;
  truth.upper_tri = random_init(3, 0.5, rng);
  truth.b = random_init(3, 0.5, rng);
  truth.c = -boltzmann_exact_log_partition(truth.coupling_matrix(), truth.b);
  const auto idx = sample_discrete_exact(boltzmann_log_pmf(truth), rng, 20000);
  const Matrix states = enumerate_states(3);
  Matrix x(3, 20000);
  for (Index t = 0; t < 20000; ++t) x.col(t) = states.col(idx[static_cast<std::size_t>(t)]);

  FitConfig config;
  const auto fit = run_fit(config, x);
  CHECK(param_error_boltzmann(BoltzmannParams::unpack(3, fit.theta), truth) < 0.01);

  config.estimator = "ratio_matching";
  const auto rm = run_fit(config, x);
  CHECK_FALSE(rm.c_identified);
  std::ostringstream out;
  write_fit_csv(out, rm);
  CHECK(out.str().find("c,not_identified") != std::string::npos);

  config.estimator = "score_matching";
  CHECK_THROWS_AS(run_fit(config, x), InvalidArgument);
  config.model = "rbm";
  CHECK_THROWS_AS(run_fit(config, x), InvalidArgument);
}

#include "bregman/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "bregman/boosting.hpp"
#include "bregman/errors.hpp"
#include "bregman/estimators.hpp"
#include "bregman/noise.hpp"
#include "bregman/sampling.hpp"

namespace bregman {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags; changing any of them changes every experiment output.
constexpr std::uint64_t kFig1Stream = 1;
constexpr std::uint64_t kFig2Stream = 2;
constexpr std::uint64_t kFitStream = 3;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char separator) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, separator)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == separator) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InvalidArgument("config key '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InvalidArgument("config key '" + key + "': '" + text + "' is not an integer");
  }
  return value;
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& text) {
  std::vector<Index> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_integer(key, part));
  return values;
}

bool apply_optim_key(const std::string& key, const std::string& value, OptimConfig& optim) {
  if (key == "max_iterations") {
    optim.max_iterations = static_cast<int>(parse_integer(key, value));
  } else if (key == "gradient_tolerance") {
    optim.gradient_tolerance = parse_double(key, value);
  } else if (key == "memory") {
    optim.memory = static_cast<int>(parse_integer(key, value));
  } else if (key == "restarts") {
    optim.restarts = static_cast<int>(parse_integer(key, value));
  } else if (key == "init_scale") {
    optim.init_scale = parse_double(key, value);
  } else {
    return false;
  }
  return true;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const auto upper = std::min(lower + 1, values.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return values[lower] + fraction * (values[upper] - values[lower]);
}

BoltzmannParams draw_boltzmann_truth(Index n, double param_std, RngStream& rng) {
  BoltzmannParams truth;
  truth.upper_tri = random_init(n * (n - 1) / 2, param_std, rng);
  truth.b = random_init(n, param_std, rng);
  truth.c = -boltzmann_exact_log_partition(truth.coupling_matrix(), truth.b);
  return truth;
}

Vector boltzmann_start(Index n, double init_scale, RngStream& rng) {
  Vector theta = random_init(boltzmann_param_dim(n), init_scale, rng);
  theta[theta.size() - 1] = 0.0;
  return theta;
}

// c is not estimated by pseudolikelihood or ratio matching; for the error
// metric it is filled with the exact log partition of the estimate.
BoltzmannParams with_exact_normalizer(Index n, const Vector& theta) {
  auto params = BoltzmannParams::unpack(n, theta);
  params.c = -boltzmann_exact_log_partition(params.coupling_matrix(), params.b);
  return params;
}

struct MethodOutcome {
  BoltzmannParams estimate;
  OptimStatus status;
};

MethodOutcome run_fig1_method(Fig1Method method, const Fig1Config& config, const Matrix& points,
                              RngStream& rng) {
  const Index n = config.n;
  const auto model = std::make_shared<BoltzmannModel>(n);
  const auto data = WeightedSample::compressed_binary(points);
  const Index noise_count = std::llround(config.nu * static_cast<double>(points.cols()));

  Objective objective;
  bool fill_normalizer = false;
  switch (method) {
    case Fig1Method::nce_bernoulli: {
      const auto noise = BernoulliNoise::uniform(n);
      auto noise_sample = WeightedSample::compressed_binary(noise.sample(rng, noise_count));
      objective = nce_family_objective(model, noise, data, noise_sample, nce_pair(), config.nu);
      break;
    }
    case Fig1Method::nce_mixture: {
      const auto noise =
          fit_bernoulli_mixture(data.points, data.weights, config.mixture_components, rng);
      auto noise_sample = WeightedSample::compressed_binary(noise.sample(rng, noise_count));
      objective = nce_family_objective(model, noise, data, noise_sample, nce_pair(), config.nu);
      break;
    }
    case Fig1Method::pseudolikelihood:
      objective = pseudolikelihood(n, data);
      fill_normalizer = true;
      break;
    case Fig1Method::ratio_matching:
      objective = ratio_matching_objective(model, data);
      fill_normalizer = true;
      break;
  }
  const Vector theta0 = boltzmann_start(n, config.optim.init_scale, rng);
  const OptimResult result = minimize(objective, theta0, config.optim, &rng);
  MethodOutcome outcome{fill_normalizer ? with_exact_normalizer(n, result.theta)
                                        : BoltzmannParams::unpack(n, result.theta),
                        result.status};
  return outcome;
}

void write_plain(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

double param_error_boltzmann(const BoltzmannParams& estimate, const BoltzmannParams& truth) {
  require(estimate.dim() == truth.dim() && estimate.upper_tri.size() == truth.upper_tri.size(),
          "param_error_boltzmann: dimension mismatch");
  const double dc = estimate.c - truth.c;
  return (estimate.upper_tri - truth.upper_tri).squaredNorm() +
         (estimate.b - truth.b).squaredNorm() + dc * dc;
}

Alignment poe_alignment(const Matrix& experts, const Matrix& mixing) {
  const Index n = mixing.rows();
  const Index rows = experts.rows();
  require(mixing.cols() == n && experts.cols() == n, "poe_alignment: shape mismatch");
  require(rows >= n, "poe_alignment: need at least as many estimated experts as true ones");
  Eigen::FullPivLU<Matrix> lu(mixing.transpose());
  require(lu.isInvertible(), "poe_alignment: true mixing matrix is singular");
  // b_hat_k = b*_j gives row k of R equal to e_j.
  const Matrix r = experts * lu.inverse();

  // |aligned - I|^2 + |rest|^2 = |R|^2 + n - 2 sum_j |R(row_j, j)|, so the
  // best assignment maximizes the sum of matched magnitudes.
  std::vector<Index> current(static_cast<std::size_t>(n));
  std::vector<bool> used(static_cast<std::size_t>(rows), false);
  std::vector<Index> best;
  double best_score = -1.0;
  auto search = [&](auto&& self, Index column, double score) -> void {
    if (column == n) {
      if (score > best_score) {
        best_score = score;
        best = current;
      }
      return;
    }
    for (Index row = 0; row < rows; ++row) {
      if (used[static_cast<std::size_t>(row)]) continue;
      used[static_cast<std::size_t>(row)] = true;
      current[static_cast<std::size_t>(column)] = row;
      self(self, column + 1, score + std::abs(r(row, column)));
      used[static_cast<std::size_t>(row)] = false;
    }
  };
  search(search, 0, 0.0);

  double total = 0.0;
  std::vector<bool> matched(static_cast<std::size_t>(rows), false);
  for (Index j = 0; j < n; ++j) {
    const Index row = best[static_cast<std::size_t>(j)];
    matched[static_cast<std::size_t>(row)] = true;
    const double sign = r(row, j) < 0.0 ? -1.0 : 1.0;
    Vector aligned = sign * r.row(row).transpose();
    aligned[j] -= 1.0;
    total += aligned.squaredNorm();
  }
  for (Index row = 0; row < rows; ++row) {
    if (!matched[static_cast<std::size_t>(row)]) total += r.row(row).squaredNorm();
  }
  return {std::sqrt(total), best};
}

double poe_alignment_error(const Matrix& experts, const Matrix& mixing) {
  return poe_alignment(experts, mixing).error;
}

double spurious_norm_ratio(const Matrix& experts, const Alignment& alignment) {
  std::vector<bool> matched(static_cast<std::size_t>(experts.rows()), false);
  for (Index row : alignment.matched_rows) matched[static_cast<std::size_t>(row)] = true;
  double smallest_matched = std::numeric_limits<double>::infinity();
  double largest_spurious = 0.0;
  for (Index row = 0; row < experts.rows(); ++row) {
    const double norm = experts.row(row).norm();
    if (matched[static_cast<std::size_t>(row)]) {
      smallest_matched = std::min(smallest_matched, norm);
    } else {
      largest_spurious = std::max(largest_spurious, norm);
    }
  }
  return largest_spurious / smallest_matched;
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "least_squares_slope: need two points");
  const double count = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  require(sxx > 0.0, "least_squares_slope: xs are all equal");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------

const char* to_string(Fig1Method method) {
  switch (method) {
    case Fig1Method::nce_bernoulli:
      return "nce_bernoulli";
    case Fig1Method::nce_mixture:
      return "nce_mixture";
    case Fig1Method::pseudolikelihood:
      return "pseudolikelihood";
    case Fig1Method::ratio_matching:
      return "ratio_matching";
  }
  return "unknown";
}

Fig1Method fig1_method_from_string(const std::string& name) {
  for (auto method : {Fig1Method::nce_bernoulli, Fig1Method::nce_mixture,
                      Fig1Method::pseudolikelihood, Fig1Method::ratio_matching}) {
    if (name == to_string(method)) return method;
  }
  throw InvalidArgument("unknown fig1 method '" + name + "'");
}

void Fig1Config::validate() const {
  require(n >= 2 && n <= kMaxEnumerationDim, "fig1: n must lie in [2, 20]");
  require(!sample_sizes.empty(), "fig1: need at least one sample size");
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    require(sample_sizes[i] >= 1, "fig1: sample sizes must be positive");
    require(i == 0 || sample_sizes[i] > sample_sizes[i - 1],
            "fig1: sample sizes must be strictly increasing");
  }
  require(trials >= 1, "fig1: trials must be >= 1");
  require(nu > 0.0, "fig1: nu must be positive");
  require(!methods.empty(), "fig1: need at least one method");
  require(param_std > 0.0, "fig1: param_std must be positive");
  require(mixture_components >= 1, "fig1: mixture_components must be >= 1");
  optim.validate();
}

const Fig1Summary& Fig1Result::at(Fig1Method method, Index sample_size) const {
  for (const auto& row : summary) {
    if (row.method == method && row.sample_size == sample_size) return row;
  }
  throw InvalidArgument(std::string("fig1 summary has no row for ") + to_string(method) +
                        " at sample size " + std::to_string(sample_size));
}

double Fig1Result::slope(Fig1Method method) const {
  std::vector<double> xs, ys;
  for (const auto& row : summary) {
    if (row.method != method) continue;
    xs.push_back(std::log10(static_cast<double>(row.sample_size)));
    ys.push_back(row.mean_log10_error);
  }
  return least_squares_slope(xs, ys);
}

Fig1Result run_fig1(const Fig1Config& config) {
  config.validate();
  Fig1Result result;
  const RngStream master(config.master_seed, kFig1Stream);

  for (int trial = 0; trial < config.trials; ++trial) {
    const RngStream trial_rng = master.derive(static_cast<std::uint64_t>(trial));
    RngStream truth_rng = trial_rng.derive(0);
    const BoltzmannParams truth = draw_boltzmann_truth(config.n, config.param_std, truth_rng);
    const Vector log_pmf = boltzmann_log_pmf(truth);
    const Matrix states = enumerate_states(config.n);

    for (std::size_t s = 0; s < config.sample_sizes.size(); ++s) {
      const Index size = config.sample_sizes[s];
      const RngStream size_rng = trial_rng.derive(100 + s);
      RngStream sample_rng = size_rng.derive(0);
      const auto draws = sample_discrete_exact(log_pmf, sample_rng, size);
      Matrix points(config.n, size);
      for (Index t = 0; t < size; ++t) points.col(t) = states.col(draws[static_cast<std::size_t>(t)]);

      for (auto method : config.methods) {
        RngStream method_rng = size_rng.derive(1000 + static_cast<std::uint64_t>(method));
        const auto start = Clock::now();
        Fig1Record record{method, size, trial, kNaN, "", 0.0};
        const auto outcome = run_fig1_method(method, config, points, method_rng);
        record.error = param_error_boltzmann(outcome.estimate, truth);
        record.status = std::isfinite(record.error) ? to_string(outcome.status) : "failed";
        if (config.record_timing) record.wall_ms = elapsed_ms(start);
        result.records.push_back(std::move(record));
      }
    }
  }

  for (auto method : config.methods) {
    for (Index size : config.sample_sizes) {
      Fig1Summary row{method, size, 0.0, 0.0, 0};
      for (const auto& record : result.records) {
        if (record.method != method || record.sample_size != size) continue;
        if (!std::isfinite(record.error) || record.error <= 0.0) continue;
        row.mean_log10_error += std::log10(record.error);
        row.mean_error += record.error;
        ++row.trials_ok;
      }
      if (row.trials_ok > 0) {
        row.mean_log10_error /= row.trials_ok;
        row.mean_error /= row.trials_ok;
      } else {
        row.mean_log10_error = row.mean_error = kNaN;
      }
      result.summary.push_back(row);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

void Fig2Config::validate() const {
  require(n >= 1, "fig2: n must be positive");
  require(sample_size > n, "fig2: sample size must exceed the dimension");
  require(total_experts >= n, "fig2: need at least n experts for the alignment metric");
  require(!group_sizes.empty(), "fig2: need at least one group size");
  for (Index m : group_sizes) {
    require(m >= 1 && total_experts % m == 0, "fig2: every group size must divide K");
  }
  require(trials >= 1, "fig2: trials must be >= 1");
  require(nu > 0.0, "fig2: nu must be positive");
  require(max_condition >= 1.0, "fig2: max_condition must be >= 1");
  require(smoothing_eps >= 0.0, "fig2: smoothing_eps must be nonnegative");
  optim.validate();
}

const Fig2Summary& Fig2Result::at(Index group_size) const {
  for (const auto& row : summary) {
    if (row.group_size == group_size) return row;
  }
  throw InvalidArgument("fig2 summary has no row for group size " + std::to_string(group_size));
}

Matrix draw_mixing_matrix(Index n, double max_condition, RngStream& rng) {
  require(max_condition >= 1.0, "draw_mixing_matrix: max_condition must be >= 1");
  while (true) {
    Matrix b(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) b(i, j) = rng.normal();
    }
    Eigen::JacobiSVD<Matrix> svd(b);
    const auto& sv = svd.singularValues();
    const double smallest = sv[n - 1];
    if (smallest > 0.0 && sv[0] / smallest <= max_condition) return b;
  }
}

Fig2Result run_fig2(const Fig2Config& config) {
  config.validate();
  Fig2Result result;
  const RngStream master(config.master_seed, kFig2Stream);

  for (int trial = 0; trial < config.trials; ++trial) {
    const RngStream trial_rng = master.derive(static_cast<std::uint64_t>(trial));
    RngStream mixing_rng = trial_rng.derive(0);
    const Matrix mixing = draw_mixing_matrix(config.n, config.max_condition, mixing_rng);
    RngStream sample_rng = trial_rng.derive(1);
    const Matrix points = sample_ica(mixing, sample_rng, config.sample_size);
    const GaussianNoise noise = gaussian_noise_from_sample(points);

    for (Index group : config.group_sizes) {
      // Same stream for every group size: identical noise sample and first
      // initial experts across the arms of a trial.
      RngStream fit_rng = trial_rng.derive(2);
      BoostingConfig boost{config.total_experts, group, config.nu, config.smoothing_eps,
                           config.optim};
      const auto start = Clock::now();
      Fig2Record record{group, trial, kNaN, "", 0.0, kNaN};
      try {
        const auto fit = boosting_fit(points, noise, nce_pair(), boost, fit_rng);
        const Matrix experts = fit.params.experts.transpose();
        const auto alignment = poe_alignment(experts, mixing);
        record.error = alignment.error;
        record.norm_ratio = spurious_norm_ratio(experts, alignment);
        record.status = "converged";
        for (const auto& stage : fit.stages) {
          if (stage.optim.status != OptimStatus::converged) {
            record.status = to_string(stage.optim.status);
            break;
          }
        }
        if (!std::isfinite(record.error)) record.status = "failed";
      } catch (const StageFailure&) {
        record.status = "stage_failure";
      }
      if (config.record_timing) record.wall_ms = elapsed_ms(start);
      result.records.push_back(std::move(record));
    }
  }

  for (Index group : config.group_sizes) {
    std::vector<double> errors, ratios;
    for (const auto& record : result.records) {
      if (record.group_size != group || !std::isfinite(record.error)) continue;
      errors.push_back(record.error);
      ratios.push_back(record.norm_ratio);
    }
    result.summary.push_back({group, quantile(errors, 0.5), quantile(errors, 0.25),
                              quantile(errors, 0.75), quantile(ratios, 0.5),
                              static_cast<int>(errors.size())});
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

void write_fig1_csv(std::ostream& out, const Fig1Result& result) {
  out << "method,sample_size,trial,error,status,wall_ms\n";
  for (const auto& r : result.records) {
    write_plain(out, {to_string(r.method), std::to_string(r.sample_size), std::to_string(r.trial),
                      format_number(r.error), r.status, format_number(r.wall_ms)});
  }
}

void write_fig1_summary(std::ostream& out, const Fig1Result& result) {
  out << "method,sample_size,mean_log10_error,mean_error,trials_ok\n";
  for (const auto& r : result.summary) {
    write_plain(out, {to_string(r.method), std::to_string(r.sample_size),
                      format_number(r.mean_log10_error), format_number(r.mean_error),
                      std::to_string(r.trials_ok)});
  }
}

void write_fig1_plot_script(std::ostream& out, const std::string& summary_csv) {
  out << "# gnuplot: mean log10 squared parameter error against log10 sample size\n"
      << "set datafile separator ','\n"
      << "set key top right\n"
      << "set xlabel 'log10 sample size'\n"
      << "set ylabel 'mean log10 squared error'\n"
      << "methods = 'nce_bernoulli nce_mixture pseudolikelihood ratio_matching'\n"
      << "plot for [m in methods] '" << summary_csv
      << "' every ::1 using (strcol(1) eq m ? log10($2) : NaN):3 with linespoints title m\n";
}

void write_fig2_csv(std::ostream& out, const Fig2Result& result) {
  out << "group_size,trial,error,status,wall_ms\n";
  for (const auto& r : result.records) {
    write_plain(out, {std::to_string(r.group_size), std::to_string(r.trial),
                      format_number(r.error), r.status, format_number(r.wall_ms)});
  }
}

void write_fig2_summary(std::ostream& out, const Fig2Result& result) {
  out << "group_size,median_error,q1_error,q3_error,median_norm_ratio,trials_ok\n";
  for (const auto& r : result.summary) {
    write_plain(out, {std::to_string(r.group_size), format_number(r.median_error),
                      format_number(r.q1_error), format_number(r.q3_error),
                      format_number(r.median_norm_ratio), std::to_string(r.trials_ok)});
  }
}

void write_fig2_plot_script(std::ostream& out, const std::string& records_csv) {
  out << "# gnuplot: alignment error per number of jointly learned experts\n"
      << "set datafile separator ','\n"
      << "set style data boxplot\n"
      << "set style boxplot sorted\n"
      << "unset key\n"
      << "set xlabel 'experts learned jointly'\n"
      << "set ylabel 'alignment error'\n"
      << "plot '" << records_csv << "' every ::1 using (1.0):3:(0.5):1\n";
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(number) + ": empty key");
    values[key] = value;
  }
  return values;
}

void apply_fig1_config(const KeyValues& values, Fig1Config& config) {
  for (const auto& [key, value] : values) {
    if (key == "n") {
      config.n = parse_integer(key, value);
    } else if (key == "sample_sizes") {
      config.sample_sizes = parse_index_list(key, value);
    } else if (key == "trials") {
      config.trials = static_cast<int>(parse_integer(key, value));
    } else if (key == "nu") {
      config.nu = parse_double(key, value);
    } else if (key == "methods") {
      config.methods.clear();
      for (const auto& name : split(value, ',')) config.methods.push_back(fig1_method_from_string(name));
    } else if (key == "param_std") {
      config.param_std = parse_double(key, value);
    } else if (key == "seed" || key == "master_seed") {
      config.master_seed = static_cast<std::uint64_t>(parse_integer(key, value));
    } else if (key == "mixture_components") {
      config.mixture_components = parse_integer(key, value);
    } else if (!apply_optim_key(key, value, config.optim)) {
      throw InvalidArgument("unknown fig1 config key '" + key + "'");
    }
  }
}

void apply_fig2_config(const KeyValues& values, Fig2Config& config) {
  for (const auto& [key, value] : values) {
    if (key == "n") {
      config.n = parse_integer(key, value);
    } else if (key == "sample_size" || key == "T_d") {
      config.sample_size = parse_integer(key, value);
    } else if (key == "total_experts" || key == "K") {
      config.total_experts = parse_integer(key, value);
    } else if (key == "group_sizes") {
      config.group_sizes = parse_index_list(key, value);
    } else if (key == "trials") {
      config.trials = static_cast<int>(parse_integer(key, value));
    } else if (key == "nu") {
      config.nu = parse_double(key, value);
    } else if (key == "seed" || key == "master_seed") {
      config.master_seed = static_cast<std::uint64_t>(parse_integer(key, value));
    } else if (key == "max_condition") {
      config.max_condition = parse_double(key, value);
    } else if (key == "smoothing_eps") {
      config.smoothing_eps = parse_double(key, value);
    } else if (!apply_optim_key(key, value, config.optim)) {
      throw InvalidArgument("unknown fig2 config key '" + key + "'");
    }
  }
}

Matrix read_points_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& cell : split(trim(line), ',')) {
      std::size_t used = 0;
      try {
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw InvalidArgument("data line " + std::to_string(number) + " is not numeric");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument("data line " + std::to_string(number) + " has " +
                            std::to_string(row.size()) + " columns, expected " +
                            std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "data file has no rows");
  Matrix points(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t i = 0; i < rows[t].size(); ++i) {
      points(static_cast<Index>(i), static_cast<Index>(t)) = rows[t][i];
    }
  }
  return points;
}

void write_points_csv(std::ostream& out, const Matrix& points) {
  for (Index t = 0; t < points.cols(); ++t) {
    for (Index i = 0; i < points.rows(); ++i) out << (i ? "," : "") << format_number(points(i, t));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

FitResult run_fit(const FitConfig& config, const Matrix& points) {
  config.optim.validate();
  require(points.cols() >= 1, "fit: no data");
  const Index n = points.rows();
  const Index count = points.cols();
  RngStream rng(config.seed, kFitStream);
  const Index noise_count = std::llround(config.nu * static_cast<double>(count));
  FitResult fit;

  if (config.model == "boltzmann") {
    const auto model = std::make_shared<BoltzmannModel>(n);
    const auto data = WeightedSample::compressed_binary(points);
    std::unique_ptr<NoiseModel> noise;
    if (config.estimator == "nce" || config.estimator == "direct") {
      if (config.noise == "auto" || config.noise == "bernoulli") {
        noise = std::make_unique<BernoulliNoise>(BernoulliNoise::uniform(n));
      } else if (config.noise == "mixture") {
        noise = std::make_unique<BernoulliMixtureNoise>(
            fit_bernoulli_mixture(data.points, data.weights, config.mixture_components, rng));
      } else {
        throw InvalidArgument("fit: noise '" + config.noise + "' does not apply to binary data");
      }
    }
    Objective objective;
    bool fill_normalizer = false;
    if (config.estimator == "nce") {
      const auto noise_sample = WeightedSample::compressed_binary(noise->sample(rng, noise_count));
      objective = nce_family_objective(model, *noise, data, noise_sample,
                                       pair_by_name(config.pair), config.nu);
    } else if (config.estimator == "direct") {
      const auto noise_sample = WeightedSample::compressed_binary(noise->sample(rng, noise_count));
      objective =
          direct_matching_objective(model, *noise, data, noise_sample, pair_by_name(config.pair));
    } else if (config.estimator == "pseudolikelihood") {
      objective = pseudolikelihood(n, data);
      fill_normalizer = true;
    } else if (config.estimator == "ratio_matching") {
      objective = ratio_matching_objective(model, data);
      fit.c_identified = false;
    } else {
      throw InvalidArgument("fit: estimator '" + config.estimator +
                            "' is not available for the boltzmann model");
    }
    const auto result = minimize(objective, boltzmann_start(n, config.optim.init_scale, rng),
                                 config.optim, &rng);
    auto params = BoltzmannParams::unpack(n, result.theta);
    if (fill_normalizer && n <= kMaxEnumerationDim) {
      params = with_exact_normalizer(n, result.theta);
    } else if (fill_normalizer) {
      fit.c_identified = false;
    }
    fit.theta = params.pack();
    fit.status = to_string(result.status);
    fit.objective_value = result.value;
    const Matrix coupling = params.coupling_matrix();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        fit.parameters.emplace_back("M_" + std::to_string(i) + "_" + std::to_string(j),
                                    coupling(i, j));
      }
    }
    for (Index i = 0; i < n; ++i) fit.parameters.emplace_back("b_" + std::to_string(i), params.b[i]);
    fit.parameters.emplace_back("c", params.c);
  } else if (config.model == "ica") {
    require(config.noise == "auto" || config.noise == "gaussian",
            "fit: the ica model uses gaussian noise");
    require(config.estimator == "nce", "fit: the ica model supports the nce estimator only");
    const GaussianNoise noise = gaussian_noise_from_sample(points);
    const Index group = config.group_size > 0 ? config.group_size : config.experts;
    BoostingConfig boost{config.experts, group, config.nu, 1e-8, config.optim};
    const auto result = boosting_fit(points, noise, pair_by_name(config.pair), boost, rng);
    fit.theta = result.params.pack();
    fit.status = to_string(result.stages.back().optim.status);
    fit.objective_value = result.stages.back().optim.value;
    for (Index k = 0; k < result.params.num_experts(); ++k) {
      for (Index i = 0; i < n; ++i) {
        fit.parameters.emplace_back("b_" + std::to_string(k) + "_" + std::to_string(i),
                                    result.params.experts(i, k));
      }
    }
    fit.parameters.emplace_back("c", result.params.c);
  } else if (config.model == "gaussian") {
    const auto model = std::make_shared<GaussianToyModel>(n);
    const auto data = WeightedSample::uniform(points);
    Objective objective;
    std::unique_ptr<GaussianNoise> noise;
    if (config.estimator == "score_matching") {
      objective = score_matching_objective(model, data);
      fit.c_identified = false;
    } else if (config.estimator == "nce") {
      require(config.noise == "auto" || config.noise == "gaussian",
              "fit: the gaussian model uses gaussian noise");
      noise = std::make_unique<GaussianNoise>(gaussian_noise_from_sample(points));
      const auto noise_sample = WeightedSample::uniform(noise->sample(rng, noise_count));
      objective = nce_family_objective(model, *noise, data, noise_sample,
                                       pair_by_name(config.pair), config.nu);
    } else {
      throw InvalidArgument("fit: estimator '" + config.estimator +
                            "' is not available for the gaussian model");
    }
    Vector theta0 = Vector::Ones(n + 1);
    theta0[n] = 0.0;
    const auto result = minimize(objective, theta0, config.optim, &rng);
    fit.theta = result.theta;
    fit.status = to_string(result.status);
    fit.objective_value = result.value;
    for (Index i = 0; i < n; ++i) {
      fit.parameters.emplace_back("lambda_" + std::to_string(i), result.theta[i]);
    }
    fit.parameters.emplace_back("c", result.theta[n]);
  } else {
    throw InvalidArgument("fit: unknown model '" + config.model +
                          "' (expected boltzmann, ica or gaussian)");
  }
  return fit;
}

void write_fit_csv(std::ostream& out, const FitResult& result) {
  out << "parameter,value\n";
  for (const auto& [name, value] : result.parameters) {
    const bool hidden = name == "c" && !result.c_identified;
    out << name << ',' << (hidden ? std::string("not_identified") : format_number(value)) << '\n';
  }
}

}  // namespace bregman

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bregman/models.hpp"
#include "bregman/optimize.hpp"
#include "bregman/types.hpp"

namespace bregman {

// ---------------------------------------------------------------------------
// Error metrics

/// Squared distance over the free couplings, the biases and c.
double param_error_boltzmann(const BoltzmannParams& estimate, const BoltzmannParams& truth);

struct Alignment {
  double error = 0.0;
  /// matched_rows[j]: row of the estimate assigned to true expert j.
  std::vector<Index> matched_rows;
};

/// experts: K x n, one estimated b_k per row; mixing: n x n with the true
/// b*_k as columns. With R = experts * (mixing^T)^-1, searches every assignment
/// of n rows to the true experts (with sign flips) and returns
/// sqrt(min |aligned block - I|_F^2 + |remaining rows|_F^2).
Alignment poe_alignment(const Matrix& experts, const Matrix& mixing);
double poe_alignment_error(const Matrix& experts, const Matrix& mixing);

/// max norm over unmatched rows / min norm over matched rows.
double spurious_norm_ratio(const Matrix& experts, const Alignment& alignment);

/// Least-squares slope of ys against xs.
double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Boltzmann machine study

enum class Fig1Method { nce_bernoulli, nce_mixture, pseudolikelihood, ratio_matching };

const char* to_string(Fig1Method method);
Fig1Method fig1_method_from_string(const std::string& name);

struct Fig1Config {
  Index n = 5;
  std::vector<Index> sample_sizes{500, 2000, 8000, 32000};
  int trials = 20;
  double nu = 10.0;
  std::vector<Fig1Method> methods{Fig1Method::nce_bernoulli, Fig1Method::nce_mixture,
                                  Fig1Method::pseudolikelihood, Fig1Method::ratio_matching};
  double param_std = 0.5;
  std::uint64_t master_seed = 1;
  Index mixture_components = 4;
  OptimConfig optim;
  bool record_timing = false;

  void validate() const;
};

struct Fig1Record {
  Fig1Method method;
  Index sample_size = 0;
  int trial = 0;
  double error = 0.0;
  std::string status;
  double wall_ms = 0.0;
};

struct Fig1Summary {
  Fig1Method method;
  Index sample_size = 0;
  double mean_log10_error = 0.0;
  double mean_error = 0.0;
  int trials_ok = 0;
};

struct Fig1Result {
  std::vector<Fig1Record> records;
  std::vector<Fig1Summary> summary;

  const Fig1Summary& at(Fig1Method method, Index sample_size) const;
  /// Slope of mean log10 error against log10 sample size.
  double slope(Fig1Method method) const;
};

Fig1Result run_fig1(const Fig1Config& config);

// ---------------------------------------------------------------------------
// Boosted product-of-experts study

struct Fig2Config {
  Index n = 4;
  Index sample_size = 10000;
  Index total_experts = 8;
  std::vector<Index> group_sizes{1, 2, 4};
  int trials = 20;
  double nu = 2.0;
  std::uint64_t master_seed = 1;
  double max_condition = 100.0;
  double smoothing_eps = 1e-8;
  OptimConfig optim;
  bool record_timing = false;

  void validate() const;
};

struct Fig2Record {
  Index group_size = 0;
  int trial = 0;
  double error = 0.0;
  std::string status;
  double wall_ms = 0.0;
  double norm_ratio = 0.0;
};

struct Fig2Summary {
  Index group_size = 0;
  double median_error = 0.0;
  double q1_error = 0.0;
  double q3_error = 0.0;
  double median_norm_ratio = 0.0;
  int trials_ok = 0;
};

struct Fig2Result {
  std::vector<Fig2Record> records;
  std::vector<Fig2Summary> summary;

  const Fig2Summary& at(Index group_size) const;
};

/// Random B* with i.i.d. N(0, 1) entries, redrawn while cond(B*) > max_condition.
Matrix draw_mixing_matrix(Index n, double max_condition, RngStream& rng);

Fig2Result run_fig2(const Fig2Config& config);

// ---------------------------------------------------------------------------
// Flat files

/// %.12g
std::string format_number(double value);

void write_fig1_csv(std::ostream& out, const Fig1Result& result);
void write_fig1_summary(std::ostream& out, const Fig1Result& result);
void write_fig1_plot_script(std::ostream& out, const std::string& summary_csv);
void write_fig2_csv(std::ostream& out, const Fig2Result& result);
void write_fig2_summary(std::ostream& out, const Fig2Result& result);
void write_fig2_plot_script(std::ostream& out, const std::string& records_csv);

using KeyValues = std::map<std::string, std::string>;

/// "key = value" per line; blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(std::istream& in);

/// Unknown keys raise InvalidArgument.
void apply_fig1_config(const KeyValues& values, Fig1Config& config);
void apply_fig2_config(const KeyValues& values, Fig2Config& config);

/// Numeric CSV with one point per row; a non-numeric first row is a header.
/// Returns points as columns.
Matrix read_points_csv(std::istream& in);
void write_points_csv(std::ostream& out, const Matrix& points);

// ---------------------------------------------------------------------------
// Single estimation run on user data

struct FitConfig {
  std::string model = "boltzmann";   // boltzmann | ica | gaussian
  std::string estimator = "nce";     // nce | direct | pseudolikelihood | ratio_matching | score_matching
  std::string pair = "nce";
  std::string noise = "auto";        // auto | bernoulli | mixture | gaussian
  double nu = 10.0;
  Index experts = 4;                 // ica only
  Index group_size = 0;              // ica only; 0 fits all experts jointly
  Index mixture_components = 4;
  std::uint64_t seed = 1;
  OptimConfig optim;
};

struct FitResult {
  std::vector<std::pair<std::string, double>> parameters;
  bool c_identified = true;
  std::string status;
  double objective_value = 0.0;
  Vector theta;
};

FitResult run_fit(const FitConfig& config, const Matrix& points);
void write_fit_csv(std::ostream& out, const FitResult& result);

}  // namespace bregman

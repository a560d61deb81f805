#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "bregman/errors.hpp"
#include "bregman/experiments.hpp"
#include "bregman/validation.hpp"

namespace bregman {
namespace {

KeyValues read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  return parse_key_values(in);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

// results/fig1.csv -> results/fig1 so companions become fig1_summary.csv etc.
std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return path.substr(0, dot);
  }
  return path;
}

std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  auto out = open_output(path);
  writer(out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

double number_value(const std::string& key, const std::string& text) {
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

void apply_fit_config(const KeyValues& values, FitConfig& config) {
  const std::set<std::string> optim_keys{"max_iterations", "gradient_tolerance", "memory",
                                         "restarts", "init_scale"};
  KeyValues optim;
  for (const auto& [key, value] : values) {
    if (key == "model") {
      config.model = value;
    } else if (key == "estimator") {
      config.estimator = value;
    } else if (key == "pair") {
      config.pair = value;
    } else if (key == "noise") {
      config.noise = value;
    } else if (key == "nu") {
      config.nu = number_value(key, value);
    } else if (key == "experts") {
      config.experts = static_cast<Index>(number_value(key, value));
    } else if (key == "group_size") {
      config.group_size = static_cast<Index>(number_value(key, value));
    } else if (key == "mixture_components") {
      config.mixture_components = static_cast<Index>(number_value(key, value));
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(number_value(key, value));
    } else if (optim_keys.count(key)) {
      optim[key] = value;
    } else {
      throw InvalidArgument("unknown fit config key '" + key + "'");
    }
  }
  Fig2Config scratch;
  scratch.optim = config.optim;
  apply_fig2_config(optim, scratch);
  config.optim = scratch.optim;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Estimation of unnormalized models with Bregman-divergence objectives"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string config_path;
  std::string out_path;
  bool timing = false;

  auto* fig1 = app.add_subcommand("fig1", "Boltzmann machine sweep over sample sizes and methods");
  std::vector<Index> sample_sizes;
  std::vector<std::string> methods;
  std::optional<double> fig1_nu;
  std::optional<Index> fig1_n;
  fig1->add_option("--seed", seed, "master seed");
  fig1->add_option("--trials", trials, "number of trials");
  fig1->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  fig1->add_option("--out", out_path, "records CSV path")->default_val("fig1.csv");
  fig1->add_flag("--timing", timing, "record wall time per trial");
  fig1->add_option("--sample-sizes", sample_sizes, "data sample sizes")->delimiter(',');
  fig1->add_option("--methods", methods,
                   "nce_bernoulli, nce_mixture, pseudolikelihood, ratio_matching")
      ->delimiter(',');
  fig1->add_option("--nu", fig1_nu, "noise-to-data ratio");
  fig1->add_option("--n", fig1_n, "number of units");

  auto* fig2 = app.add_subcommand("fig2", "boosted product-of-experts sweep over group sizes");
  std::vector<Index> group_sizes;
  std::optional<Index> fig2_experts;
  std::optional<Index> fig2_size;
  std::optional<double> fig2_nu;
  fig2->add_option("--seed", seed, "master seed");
  fig2->add_option("--trials", trials, "number of trials");
  fig2->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  fig2->add_option("--out", out_path, "records CSV path")->default_val("fig2.csv");
  fig2->add_flag("--timing", timing, "record wall time per trial");
  fig2->add_option("--group-sizes", group_sizes, "experts learned jointly per stage")
      ->delimiter(',');
  fig2->add_option("--experts", fig2_experts, "total number of experts");
  fig2->add_option("--sample-size", fig2_size, "data sample size");
  fig2->add_option("--nu", fig2_nu, "noise-to-data ratio");

  auto* fit = app.add_subcommand("fit", "estimate a model from a CSV of points");
  FitConfig fit_config;
  std::string data_path;
  std::optional<std::string> model, estimator, pair, noise;
  std::optional<double> fit_nu;
  std::optional<Index> experts, group_size, components;
  fit->add_option("--data", data_path, "CSV with one point per row")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--model", model, "boltzmann, ica or gaussian");
  fit->add_option("--estimator", estimator,
                  "nce, direct, pseudolikelihood, ratio_matching or score_matching");
  fit->add_option("--pair", pair, "nce, quadratic or log");
  fit->add_option("--noise", noise, "auto, bernoulli, mixture or gaussian");
  fit->add_option("--nu", fit_nu, "noise-to-data ratio");
  fit->add_option("--experts", experts, "ica: number of experts");
  fit->add_option("--group-size", group_size, "ica: experts per boosting stage");
  fit->add_option("--components", components, "mixture noise components");
  fit->add_option("--seed", seed, "seed");
  fit->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  fit->add_option("--out", out_path, "parameter CSV path (stdout if omitted)");

  auto* validate = app.add_subcommand("validate", "run the identity and gradient self-checks");
  validate->add_option("--seed", seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (fig1->parsed()) {
      Fig1Config config;
      if (!config_path.empty()) apply_fig1_config(read_config(config_path), config);
      if (seed) config.master_seed = *seed;
      if (trials) config.trials = *trials;
      if (!sample_sizes.empty()) config.sample_sizes = sample_sizes;
      if (!methods.empty()) {
        config.methods.clear();
        for (const auto& m : methods) config.methods.push_back(fig1_method_from_string(m));
      }
      if (fig1_nu) config.nu = *fig1_nu;
      if (fig1_n) config.n = *fig1_n;
      config.record_timing = config.record_timing || timing;
      config.validate();
      const auto result = run_fig1(config);
      const std::string stem = stem_of(out_path);
      const std::string summary = stem + "_summary.csv";
      write_file(out_path, [&](std::ostream& o) { write_fig1_csv(o, result); });
      write_file(summary, [&](std::ostream& o) { write_fig1_summary(o, result); });
      write_file(stem + "_plot.gp",
                 [&](std::ostream& o) { write_fig1_plot_script(o, base_name(summary)); });
      for (auto method : config.methods) {
        std::cout << to_string(method) << ": slope "
                  << (config.sample_sizes.size() >= 2 ? format_number(result.slope(method)) : "n/a")
                  << '\n';
      }
      std::cout << "wrote " << out_path << ", " << summary << ", " << stem << "_plot.gp\n";
    } else if (fig2->parsed()) {
      Fig2Config config;
      if (!config_path.empty()) apply_fig2_config(read_config(config_path), config);
      if (seed) config.master_seed = *seed;
      if (trials) config.trials = *trials;
      if (!group_sizes.empty()) config.group_sizes = group_sizes;
      if (fig2_experts) config.total_experts = *fig2_experts;
      if (fig2_size) config.sample_size = *fig2_size;
      if (fig2_nu) config.nu = *fig2_nu;
      config.record_timing = config.record_timing || timing;
      config.validate();
      const auto result = run_fig2(config);
      const std::string stem = stem_of(out_path);
      const std::string summary = stem + "_summary.csv";
      write_file(out_path, [&](std::ostream& o) { write_fig2_csv(o, result); });
      write_file(summary, [&](std::ostream& o) { write_fig2_summary(o, result); });
      write_file(stem + "_plot.gp",
                 [&](std::ostream& o) { write_fig2_plot_script(o, base_name(out_path)); });
      for (const auto& row : result.summary) {
        std::cout << "group " << row.group_size << ": median error "
                  << format_number(row.median_error) << '\n';
      }
      std::cout << "wrote " << out_path << ", " << summary << ", " << stem << "_plot.gp\n";
    } else if (fit->parsed()) {
      if (!config_path.empty()) apply_fit_config(read_config(config_path), fit_config);
      if (model) fit_config.model = *model;
      if (estimator) fit_config.estimator = *estimator;
      if (pair) fit_config.pair = *pair;
      if (noise) fit_config.noise = *noise;
      if (fit_nu) fit_config.nu = *fit_nu;
      if (experts) fit_config.experts = *experts;
      if (group_size) fit_config.group_size = *group_size;
      if (components) fit_config.mixture_components = *components;
      if (seed) fit_config.seed = *seed;
      std::ifstream in(data_path);
      if (!in) throw std::runtime_error("cannot read data file '" + data_path + "'");
      const auto result = run_fit(fit_config, read_points_csv(in));
      if (out_path.empty()) {
        write_fit_csv(std::cout, result);
      } else {
        write_file(out_path, [&](std::ostream& o) { write_fit_csv(o, result); });
      }
      std::cerr << "optimizer status: " << result.status
                << ", objective: " << format_number(result.objective_value) << '\n';
    } else if (validate->parsed()) {
      const bool ok = print_check_table(std::cout, run_validation_suite(seed.value_or(1)));
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bregman

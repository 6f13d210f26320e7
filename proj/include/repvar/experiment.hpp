#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "repvar/covariance.hpp"
#include "repvar/observation.hpp"
#include "repvar/param_select.hpp"
#include "repvar/representer.hpp"
#include "repvar/transport.hpp"

namespace repvar {

enum class GridPreset { Isotropic, NonIsotropic };

const char* to_string(GridPreset p);
GridPreset grid_preset_from_string(std::string_view name);
/// 200 x 445 for the isotropic runs, 51 x 113 for the non-isotropic ones, on [30,45] x [0,20].
Grid preset_grid(GridPreset p);

/// Standard deviations of the first-guess perturbations of the source decay rates.
struct Perturbation {
  double k0 = 0.0;
  double k1 = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
};

enum class FirstGuessMode { PerColumn, Shared };

const char* to_string(FirstGuessMode m);
FirstGuessMode first_guess_mode_from_string(std::string_view name);

struct ExperimentConfig {
  int id = 1;
  GridPreset preset = GridPreset::Isotropic;
  Grid grid = preset_grid(GridPreset::Isotropic);
  double wind = 1.0;
  BoundaryKind bc = BoundaryKind::Periodic;
  SourceParams source;
  Perturbation perturbation;
  double noise = 0.7;  // sigma_m = max(noise * |truth_m|, sigma_floor)
  double sigma_floor = 0.0;
  FirstGuessMode first_guess = FirstGuessMode::PerColumn;
  int n_obs = 49;
  int columns = 500;
  int n_mc = 100000;
  double ci_variance = 0.0;
  std::uint64_t seed = 20240601;

  Bounds bounds{1e-6, 1e2};
  int lcurve_points = 100;
  int max_runs_1d = 60;
  int max_runs_multi = 200;
  Box box;
  double band_lo = 0.0;  // outlier band on selected sigma_f2 (GCV and chi2)
  double band_hi = 0.0;

  /// The four twin-experiment configurations with the given grid preset.
  static ExperimentConfig defaults(int id, GridPreset preset = GridPreset::Isotropic);
  /// Throws Error(Config) naming the offending field.
  void validate() const;
};

/// Seeds of the independent random streams of one experiment.
struct ExperimentSeeds {
  std::uint64_t locations;
  std::uint64_t data;
  std::uint64_t first_guess;
  static ExperimentSeeds from(std::uint64_t master);
};

/// Truth, observation locations, the filtered data matrix and the first-guess
/// source draws of one experiment. First-guess fields are solved on demand.
struct ExperimentData {
  ExperimentConfig config;
  TransportModel model;
  FieldST truth;
  std::vector<SpaceTimePoint> locations;
  std::vector<double> truth_at_obs;
  FilteredDataset data;
  std::vector<SourceParams> first_guess_sources;  // one per column
  int clipped_draws = 0;  // negative decay draws set to zero

  FieldST first_guess(int column) const;
  ObservationSet observations(int column) const;
};

ExperimentData build_experiment(const ExperimentConfig& cfg, ExecPolicy policy = ExecPolicy::Parallel);

/// Perturbed first-guess source: k ~ N(k, sd_k^2), alpha ~ N(alpha, sd_alpha^2),
/// negative draws clipped to 0. Draw order k0, alpha0, k1, alpha1.
SourceParams draw_first_guess_source(const SourceParams& truth, const Perturbation& sd, std::uint64_t seed,
                                     int* clipped = nullptr);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  int count = 0;
};
Summary summarize(std::span<const double> v);

/// RMSE of a field against the truth over the whole grid.
double field_rmse(const FieldST& a, const FieldST& truth);

struct MethodSummary {
  Method method = Method::GCV;
  CovarianceSpec::Kind kind = CovarianceSpec::Kind::Isotropic;
  std::vector<double> samples;  // selected sigma_f2 per successful column
  std::vector<int> sample_columns;
  std::vector<int> runs;
  Summary kept;  // statistics after the outlier band
  int outliers = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  std::optional<SelectionResult> column0;
  Summary rmse;  // assimilated RMSE over all columns with the column-0 parameters
};

struct EnsembleReport {
  int experiment = 1;
  GridPreset preset = GridPreset::Isotropic;
  int columns = 0;
  double first_guess_rmse_column0 = 0.0;
  Summary first_guess_rmse;
  Summary data_rmse;
  int clipped_draws = 0;
  int data_attempts = 0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  std::vector<MethodSummary> methods;

  /// Whether a sample of method m counts toward the kept statistics.
  bool keeps(Method m, double sigma_f2) const;

  const MethodSummary* find(Method m, CovarianceSpec::Kind kind = CovarianceSpec::Kind::Isotropic) const;
};

/// Isotropic preset: runs each method on every column, filters GCV and chi2
/// samples by the outlier band and assimilates every column with the column-0
/// parameters. Non-isotropic preset: runs the multi-parameter GCV and chi2 on
/// the columns, plus the isotropic 1-D searches for comparison.
EnsembleReport run_ensemble(const ExperimentData& exp, const std::vector<Method>& methods,
                            ExecPolicy policy = ExecPolicy::Parallel);

/// Selection on one column with the given method and covariance kind.
SelectionResult select_column(const ExperimentData& exp, const SelectionProblem& problem, Method method,
                              CovarianceSpec::Kind kind);

/// Assimilated RMSE of every column for fixed covariance parameters.
std::vector<double> assimilated_rmse(const ExperimentData& exp, const RepresenterBasis& basis,
                                     const CovarianceSpec& spec, ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace repvar

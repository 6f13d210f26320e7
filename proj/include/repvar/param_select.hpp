#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "repvar/covariance.hpp"
#include "repvar/observation.hpp"
#include "repvar/representer.hpp"

namespace repvar {

enum class Method { LCurve, GCV, Chi2 };

const char* to_string(Method m);
Method method_from_string(std::string_view name);

/// Everything a hyperparameter search holds fixed: the adjoint basis of the
/// observation locations, the data, the first guess and the non-searched part
/// of the covariance (kind, ci_variance, and l_f / tau_f for 1-D searches).
struct SelectionProblem {
  std::shared_ptr<const RepresenterBasis> basis;
  ObservationSet obs;
  FieldST q_f;
  CovarianceSpec base;
  ExecPolicy policy = ExecPolicy::Parallel;

  static SelectionProblem make(const TransportModel& model, ObservationSet obs, FieldST q_f, CovarianceSpec base,
                               ExecPolicy policy = ExecPolicy::Parallel);
  /// Same locations and first guess, different data vector.
  SelectionProblem with_data(std::span<const double> d) const;
  SelectionProblem with_first_guess(FieldST q_f) const;

  std::size_t size() const { return obs.size(); }
  CovarianceSpec with_sigma(double sigma_f2) const;
  /// One assimilation in data space (no grid fields are formed).
  DataSpaceSystem solve(const CovarianceSpec& spec) const;
};

/// (1/M) sum_k w_k [(q_hat_k - d_k) / (1 - (R P^-1)_kk)]^2, evaluated in the
/// equivalent form (1/M) sum_k (beta_k / ((P^-1)_kk sigma_k))^2, which stays
/// finite as sigma_k^2 underflows. Throws Error(Degenerate) for an
/// interpolating datum (sigma_k = 0).
double gcv_value(const DataSpaceSystem& sys);
double gcv_eval(const SelectionProblem& problem, const CovarianceSpec& spec);

struct Bounds {
  double lo = 1e-6;
  double hi = 1e2;
  void validate() const;
};

struct Box {
  double lo[3] = {1e-6, 1.0, 1.0};  // sigma_f2, l_f, tau_f
  double hi[3] = {9.0, 15.0, 20.0};
  void validate() const;
  bool contains(const CovarianceSpec& spec) const;
};

/// One sampled hyperparameter point. Quantities not computed are NaN.
struct CurveRow {
  double sigma_f2 = 0.0;
  double l_f = 0.0;
  double tau_f = 0.0;
  double j_data = 0.0;
  double j_mod = 0.0;
  double j_total = 0.0;
  double criterion = 0.0;  // GCV value, chi2 residual or L-curve curvature
};

struct SelectionResult {
  Method method = Method::GCV;
  CovarianceSpec params;
  double value = 0.0;  // criterion at params
  std::vector<CurveRow> curve;
  int runs = 0;  // assimilations performed
  int iterations = 0;
  // boundary, bracket_fallback, no_bracket, not_converged, max_runs,
  // no_improvement, residual_above_threshold, non_finite
  std::vector<std::string> flags;
  double corner_angle_sigma_f2 = 0.0;  // L-curve only
  std::vector<CovarianceSpec> start_solutions;  // multi-parameter only
  double spread = 0.0;  // multi-parameter chi2: spread of start solutions

  bool has_flag(std::string_view f) const;
};

/// Signed curvature of a parametric curve sampled at parameters s, by centered
/// differences; positive where the curve turns clockwise. Endpoints get NaN.
std::vector<double> discrete_curvature(std::span<const double> s, std::span<const double> x,
                                       std::span<const double> y);

std::vector<double> geometric_grid(double lo, double hi, int count);

SelectionResult lcurve_select(const SelectionProblem& problem, std::span<const double> sigma_grid);
SelectionResult gcv_select_1d(const SelectionProblem& problem, Bounds bounds = {}, int max_runs = 60);
SelectionResult chi2_select_1d(const SelectionProblem& problem, Bounds bounds = {}, int max_runs = 60);
SelectionResult gcv_select_multi(const SelectionProblem& problem, Box box = {}, int max_runs = 200);
SelectionResult chi2_select_multi(const SelectionProblem& problem, Box box = {}, int max_runs = 200);

}  // namespace repvar

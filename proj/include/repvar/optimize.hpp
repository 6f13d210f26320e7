#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace repvar {

struct ScalarMin {
  double x = 0.0;
  double f = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

/// Golden-section minimization of f on [a, b] until the bracket is narrower
/// than `tol` or `max_evals` evaluations have been spent.
ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double tol, int max_evals);

/// Root of a decreasing function g with g(a) > 0 > g(b), by bisection, stopping
/// when |g| <= ftol or after `max_evals` further evaluations.
ScalarMin bisect_decreasing(const std::function<double(double)>& g, double a, double b, double ftol,
                            int max_evals);

struct SimplexOptions {
  int max_evals = 200;
  double ftol_rel = 1e-3;
  double ftol_abs = 1e-14;
  double xtol = 1e-6;  // simplex diameter in scaled coordinates
  std::optional<double> stop_below;  // early stop once f <= this
};

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  double spread = 0.0;  // max distance of the final vertices from the best one
};

/// Nelder-Mead on the box [lo, hi]; every trial point is clamped into the box.
/// `steps` gives the initial edge of the simplex along each axis (sign picks
/// the direction).
SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> x0, const std::vector<double>& steps,
                              const std::vector<double>& lo, const std::vector<double>& hi,
                              const SimplexOptions& options);

}  // namespace repvar

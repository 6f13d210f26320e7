#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repvar/grid.hpp"
#include "repvar/parallel.hpp"

namespace repvar {

/// Model-error covariance C_f plus the (isotropic) initial-condition variance.
/// Isotropic C_f = sigma_f2 I is read as delta-correlated noise, so C_f applied
/// to a field is a pointwise scaling. NonIsotropic uses the separable kernel
/// sigma_f2 exp(-|x-x'|^2 / (2 l_f^2)) exp(-|t-t'| / tau_f).
struct CovarianceSpec {
  enum class Kind { Isotropic, NonIsotropic };

  Kind kind = Kind::Isotropic;
  double sigma_f2 = 0.0;
  double l_f = 1.0;
  double tau_f = 1.0;
  double ci_variance = 0.0;  // 0 means the initial condition is exact

  static CovarianceSpec isotropic(double sigma_f2, double ci_variance = 0.0);
  static CovarianceSpec non_isotropic(double sigma_f2, double l_f, double tau_f, double ci_variance = 0.0);

  bool is_isotropic() const { return kind == Kind::Isotropic; }
  /// Throws Error(Config) for negative variances or non-positive scales.
  void validate() const;
  std::string describe() const;
};

const char* to_string(CovarianceSpec::Kind kind);

/// Kernel value of a non-isotropic spec; throws Error(Config) for isotropic ones.
double kernel_eval(const CovarianceSpec& spec, double x, double t, double x2, double t2);

/// C_f and C_i bound to one grid. The spatial and temporal kernel matrices are
/// built once and shared read-only by every application.
class ModelErrorCovariance {
 public:
  ModelErrorCovariance(const Grid& grid, const CovarianceSpec& spec);

  const CovarianceSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }

  /// C_f applied to lam. Non-isotropic: midpoint quadrature of the kernel
  /// convolution with weights dx dt, evaluated as a spatial then a temporal pass.
  FieldST apply(const FieldST& lam, ExecPolicy policy = ExecPolicy::Parallel) const;
  /// C_i applied to an initial-time array.
  std::vector<double> apply_initial(std::span<const double> lam0) const;

 private:
  Grid grid_;
  CovarianceSpec spec_;
  Eigen::MatrixXd kx_;  // nx x nx, unit-variance Gaussian in space
  Eigen::MatrixXd kt_;  // nt x nt, exponential in time
};

FieldST apply_cf(const CovarianceSpec& spec, const FieldST& lam, ExecPolicy policy = ExecPolicy::Parallel);
std::vector<double> apply_ci(const CovarianceSpec& spec, std::span<const double> lam0);

}  // namespace repvar

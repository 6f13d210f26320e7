#include "repvar/covariance.hpp"

#include <cmath>
#include <sstream>

#include "repvar/error.hpp"

namespace repvar {

CovarianceSpec CovarianceSpec::isotropic(double sigma_f2, double ci_variance) {
  CovarianceSpec s;
  s.kind = Kind::Isotropic;
  s.sigma_f2 = sigma_f2;
  s.ci_variance = ci_variance;
  return s;
}

CovarianceSpec CovarianceSpec::non_isotropic(double sigma_f2, double l_f, double tau_f, double ci_variance) {
  CovarianceSpec s;
  s.kind = Kind::NonIsotropic;
  s.sigma_f2 = sigma_f2;
  s.l_f = l_f;
  s.tau_f = tau_f;
  s.ci_variance = ci_variance;
  return s;
}

void CovarianceSpec::validate() const {
  if (!(sigma_f2 >= 0.0)) throw Error(ErrorKind::Config, "sigma_f2 must be >= 0", "covariance.sigma_f2");
  if (!(ci_variance >= 0.0)) throw Error(ErrorKind::Config, "ci_variance must be >= 0", "covariance.ci_variance");
  if (kind == Kind::NonIsotropic) {
    if (!(l_f > 0.0)) throw Error(ErrorKind::Config, "l_f must be > 0", "covariance.l_f");
    if (!(tau_f > 0.0)) throw Error(ErrorKind::Config, "tau_f must be > 0", "covariance.tau_f");
  }
}

std::string CovarianceSpec::describe() const {
  std::ostringstream os;
  os.precision(10);
  if (is_isotropic()) {
    os << "isotropic(sigma_f2=" << sigma_f2;
  } else {
    os << "non_isotropic(sigma_f2=" << sigma_f2 << ", l_f=" << l_f << ", tau_f=" << tau_f;
  }
  if (ci_variance != 0.0) os << ", ci=" << ci_variance;
  os << ")";
  return os.str();
}

const char* to_string(CovarianceSpec::Kind kind) {
  return kind == CovarianceSpec::Kind::Isotropic ? "isotropic" : "non_isotropic";
}

double kernel_eval(const CovarianceSpec& spec, double x, double t, double x2, double t2) {
  if (spec.is_isotropic()) throw Error(ErrorKind::Config, "kernel_eval needs a non-isotropic covariance");
  const double dx = x - x2;
  return spec.sigma_f2 * std::exp(-dx * dx / (2.0 * spec.l_f * spec.l_f)) * std::exp(-std::abs(t - t2) / spec.tau_f);
}

ModelErrorCovariance::ModelErrorCovariance(const Grid& grid, const CovarianceSpec& spec)
    : grid_(grid), spec_(spec) {
  spec_.validate();
  if (spec_.is_isotropic()) return;
  kx_.resize(grid.nx, grid.nx);
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nx; ++j) {
      const double d = grid.x_center(i) - grid.x_center(j);
      kx_(i, j) = std::exp(-d * d / (2.0 * spec_.l_f * spec_.l_f));
    }
  }
  kt_.resize(grid.nt, grid.nt);
  for (int n = 0; n < grid.nt; ++n) {
    for (int m = 0; m < grid.nt; ++m) {
      kt_(n, m) = std::exp(-std::abs(grid.t_level(n) - grid.t_level(m)) / spec_.tau_f);
    }
  }
}

FieldST ModelErrorCovariance::apply(const FieldST& lam, ExecPolicy policy) const {
  require_same_grid(grid_, lam.grid(), "apply_cf");
  FieldST out(grid_);
  const int nx = grid_.nx;
  const int nt = grid_.nt;
  const bool par = policy == ExecPolicy::Parallel;

  if (spec_.is_isotropic()) {
    const auto in = lam.values();
    auto res = out.values();
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t k = 0; k < in.size(); ++k) res[k] = spec_.sigma_f2 * in[k];
    return out;
  }

  // spatial pass: y(m, i) = sum_j Kx(i, j) lam(m, j)
  FieldST y(grid_);
#pragma omp parallel for schedule(static) if (par)
  for (int m = 0; m < nt; ++m) {
    const auto src = lam.level(m);
    auto dst = y.level(m);
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      for (int j = 0; j < nx; ++j) s += kx_(j, i) * src[j];
      dst[i] = s;
    }
  }
  // temporal pass: out(n, i) = scale * sum_m Kt(n, m) y(m, i)
  const double scale = spec_.sigma_f2 * grid_.dx() * grid_.dt();
#pragma omp parallel for schedule(static) if (par)
  for (int n = 0; n < nt; ++n) {
    auto dst = out.level(n);
    for (int m = 0; m < nt; ++m) {
      const double k = kt_(m, n);
      if (k == 0.0) continue;
      const auto src = y.level(m);
      for (int i = 0; i < nx; ++i) dst[i] += k * src[i];
    }
    for (int i = 0; i < nx; ++i) dst[i] *= scale;
  }
  return out;
}

std::vector<double> ModelErrorCovariance::apply_initial(std::span<const double> lam0) const {
  if (lam0.size() != static_cast<std::size_t>(grid_.nx)) throw Error(ErrorKind::Shape, "apply_ci: length != nx");
  std::vector<double> out(lam0.size());
  for (std::size_t i = 0; i < lam0.size(); ++i) out[i] = spec_.ci_variance * lam0[i];
  return out;
}

FieldST apply_cf(const CovarianceSpec& spec, const FieldST& lam, ExecPolicy policy) {
  return ModelErrorCovariance(lam.grid(), spec).apply(lam, policy);
}

std::vector<double> apply_ci(const CovarianceSpec& spec, std::span<const double> lam0) {
  spec.validate();
  std::vector<double> out(lam0.size());
  for (std::size_t i = 0; i < lam0.size(); ++i) out[i] = spec.ci_variance * lam0[i];
  return out;
}

}  // namespace repvar

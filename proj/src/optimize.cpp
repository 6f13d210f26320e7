#include "repvar/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repvar/error.hpp"

namespace repvar {

ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double tol, int max_evals) {
  if (!(a < b)) throw Error(ErrorKind::Config, "golden section needs a < b");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  ScalarMin r;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  r.evaluations = 2;
  while (b - a > tol && r.evaluations < max_evals) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++r.evaluations;
    ++r.iterations;
  }
  r.converged = b - a <= tol;
  if (fc <= fd) {
    r.x = c;
    r.f = fc;
  } else {
    r.x = d;
    r.f = fd;
  }
  return r;
}

ScalarMin bisect_decreasing(const std::function<double(double)>& g, double a, double b, double ftol,
                            int max_evals) {
  ScalarMin r;
  double best_x = a;
  double best_g = INFINITY;
  while (r.evaluations < max_evals) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    ++r.evaluations;
    ++r.iterations;
    if (std::abs(gm) < std::abs(best_g)) {
      best_x = m;
      best_g = gm;
    }
    if (std::abs(gm) <= ftol) {
      r.converged = true;
      break;
    }
    if (gm > 0.0) {
      a = m;
    } else {
      b = m;
    }
    if (a == m && b == m) break;
  }
  r.x = best_x;
  r.f = best_g;
  return r;
}

namespace {

void clamp_into(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi) {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
}

}  // namespace

SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                              const std::vector<double>& steps, const std::vector<double>& lo,
                              const std::vector<double>& hi, const SimplexOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0 || steps.size() != n || lo.size() != n || hi.size() != n) {
    throw Error(ErrorKind::Shape, "simplex dimensions disagree");
  }
  std::vector<double> scale(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(lo[k] <= hi[k])) throw Error(ErrorKind::Config, "simplex box has lo > hi");
    scale[k] = hi[k] > lo[k] ? hi[k] - lo[k] : 1.0;
  }

  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : INFINITY;
  };

  clamp_into(x0, lo, hi);
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = eval(pts[0]);
  for (std::size_t k = 0; k < n; ++k) {
    pts[k + 1][k] += steps[k];
    clamp_into(pts[k + 1], lo, hi);
    if (pts[k + 1][k] == x0[k]) pts[k + 1][k] = x0[k] - steps[k];
    clamp_into(pts[k + 1], lo, hi);
    fv[k + 1] = eval(pts[k + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      p2[k] = pts[order[k]];
      f2[k] = fv[order[k]];
    }
    pts.swap(p2);
    fv.swap(f2);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::pow((pts[k][j] - pts[0][j]) / scale[j], 2);
      d = std::max(d, std::sqrt(s));
    }
    return d;
  };
  auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = a[j] + t * (b[j] - a[j]);
    clamp_into(x, lo, hi);
    return x;
  };

  sort_simplex();
  while (true) {
    if (options.stop_below && fv[0] <= *options.stop_below) {
      res.converged = true;
      break;
    }
    const double fspread = fv[n] - fv[0];
    if (fspread <= options.ftol_rel * std::abs(fv[0]) + options.ftol_abs || diameter() <= options.xtol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= options.max_evals) break;
    ++res.iterations;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[k][j] / static_cast<double>(n);
    }
    const std::vector<double> xr = blend(centroid, pts[n], -1.0);
    const double fr = eval(xr);
    if (fr < fv[0]) {
      if (res.evaluations < options.max_evals) {
        const std::vector<double> xe = blend(centroid, pts[n], -2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[n] = xe;
          fv[n] = fe;
        } else {
          pts[n] = xr;
          fv[n] = fr;
        }
      } else {
        pts[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const std::vector<double> xc = outside ? blend(centroid, pts[n], -0.5) : blend(centroid, pts[n], 0.5);
      const double fc = res.evaluations < options.max_evals ? eval(xc) : INFINITY;
      if (fc < (outside ? fr : fv[n])) {
        pts[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n && res.evaluations < options.max_evals; ++k) {
          pts[k] = blend(pts[0], pts[k], 0.5);
          fv[k] = eval(pts[k]);
        }
      }
    }
    sort_simplex();
  }
  res.x = pts[0];
  res.f = fv[0];
  res.spread = diameter();
  return res;
}

}  // namespace repvar

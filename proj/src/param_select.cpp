#include "repvar/param_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "repvar/error.hpp"
#include "repvar/optimize.hpp"

namespace repvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

CurveRow row_for(const CovarianceSpec& spec, const DataSpaceSystem& sys) {
  const Penalties p = penalties(sys);
  return CurveRow{spec.sigma_f2, spec.l_f, spec.tau_f, p.data, p.model, p.total, kNaN};
}

void require_finite(const CurveRow& r) {
  if (!std::isfinite(r.j_data) || !std::isfinite(r.j_mod) || !std::isfinite(r.j_total)) {
    throw Error(ErrorKind::Degenerate, "non-finite penalty at sigma_f2 = " + fmt(r.sigma_f2), "sigma_f2");
  }
}

void add_flag(SelectionResult& r, const std::string& f) {
  if (!r.has_flag(f)) r.flags.push_back(f);
}

// Evaluations of a 1-D criterion in log sigma_f2, cached so repeated abscissae
// do not cost another assimilation.
class LogScan {
 public:
  LogScan(const SelectionProblem& p, Method m) : problem_(p), method_(m) {}

  double operator()(double log_s) {
    auto it = cache_.find(log_s);
    if (it != cache_.end()) return it->second;
    const CovarianceSpec spec = problem_.with_sigma(std::exp(log_s));
    const DataSpaceSystem sys = problem_.solve(spec);
    CurveRow row = row_for(spec, sys);
    require_finite(row);
    row.criterion = method_ == Method::GCV ? gcv_value(sys) : row.j_total - static_cast<double>(problem_.size());
    rows_.push_back(row);
    cache_.emplace(log_s, row.criterion);
    return row.criterion;
  }

  int runs() const { return static_cast<int>(rows_.size()); }
  std::vector<CurveRow> rows() const { return rows_; }

 private:
  const SelectionProblem& problem_;
  Method method_;
  std::map<double, double> cache_;
  std::vector<CurveRow> rows_;
};

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::LCurve: return "lcurve";
    case Method::GCV: return "gcv";
    case Method::Chi2: return "chi2";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  if (name == "lcurve" || name == "l-curve" || name == "l_curve") return Method::LCurve;
  if (name == "gcv") return Method::GCV;
  if (name == "chi2" || name == "chi-squared") return Method::Chi2;
  throw Error(ErrorKind::Config, "unknown selection method '" + std::string(name) + "'", "method");
}

SelectionProblem SelectionProblem::make(const TransportModel& model, ObservationSet obs, FieldST q_f,
                                        CovarianceSpec base, ExecPolicy policy) {
  if (obs.size() == 0) throw Error(ErrorKind::Shape, "selection needs at least one datum");
  require_same_grid(model.grid(), q_f.grid(), "first guess");
  base.validate();
  auto basis = RepresenterBasis::from(model, obs, policy);
  return SelectionProblem{std::move(basis), std::move(obs), std::move(q_f), base, policy};
}

SelectionProblem SelectionProblem::with_data(std::span<const double> d) const {
  SelectionProblem p = *this;
  p.obs = obs.with_data(d);
  return p;
}

SelectionProblem SelectionProblem::with_first_guess(FieldST q) const {
  require_same_grid(q_f.grid(), q.grid(), "first guess");
  SelectionProblem p = *this;
  p.q_f = std::move(q);
  return p;
}

CovarianceSpec SelectionProblem::with_sigma(double sigma_f2) const {
  CovarianceSpec s = base;
  s.sigma_f2 = sigma_f2;
  return s;
}

DataSpaceSystem SelectionProblem::solve(const CovarianceSpec& spec) const {
  const Eigen::Index m = static_cast<Eigen::Index>(obs.size());
  Eigen::VectorXd h(m), sigma(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    h(k) = obs.points[k].d - obs.stencils[k].apply(q_f);
    sigma(k) = obs.points[k].sigma;
  }
  return DataSpaceSystem::from_sigma(basis->representer_matrix(spec, policy), sigma, std::move(h));
}

double gcv_value(const DataSpaceSystem& sys) {
  const Eigen::VectorXd pinv = sys.inverse_diagonal();
  const Eigen::Index m = sys.size();
  double g = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double s = sys.sigma()(k);
    if (!(s > 0.0) || !(pinv(k) > 0.0)) {
      throw Error(ErrorKind::Degenerate, "interpolating datum " + std::to_string(k) + ": 1 - (R P^-1)_kk vanishes");
    }
    const double loo = sys.beta()(k) / pinv(k) / s;
    g += loo * loo;
  }
  return g / static_cast<double>(m);
}

double gcv_eval(const SelectionProblem& problem, const CovarianceSpec& spec) {
  return gcv_value(problem.solve(spec));
}

void Bounds::validate() const {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::Config, "sigma_f2 bounds must satisfy 0 < lo < hi < inf", "selection.bounds");
  }
}

void Box::validate() const {
  if (!(lo[0] > 0.0)) throw Error(ErrorKind::Config, "sigma_f2 lower bound must be positive", "selection.box.sigma_f2");
  const char* keys[3] = {"selection.box.sigma_f2", "selection.box.l_f", "selection.box.tau_f"};
  for (int k = 0; k < 3; ++k) {
    if (!(lo[k] <= hi[k]) || !std::isfinite(hi[k])) throw Error(ErrorKind::Config, "invalid box", keys[k]);
  }
  if (!(lo[1] > 0.0) || !(lo[2] > 0.0)) throw Error(ErrorKind::Config, "length scales must be positive", "selection.box");
}

bool Box::contains(const CovarianceSpec& s) const {
  const double v[3] = {s.sigma_f2, s.l_f, s.tau_f};
  for (int k = 0; k < 3; ++k) {
    const double tol = 1e-12 * std::max(1.0, std::abs(hi[k]));
    if (v[k] < lo[k] - tol || v[k] > hi[k] + tol) return false;
  }
  return true;
}

bool SelectionResult::has_flag(std::string_view f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::vector<double> discrete_curvature(std::span<const double> s, std::span<const double> x,
                                       std::span<const double> y) {
  const std::size_t n = s.size();
  if (x.size() != n || y.size() != n) throw Error(ErrorKind::Shape, "curvature inputs differ in length");
  std::vector<double> k(n, kNaN);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double h1 = s[j] - s[j - 1];
    const double h2 = s[j + 1] - s[j];
    const double a = -h2 / (h1 * (h1 + h2));
    const double b = (h2 - h1) / (h1 * h2);
    const double c = h1 / (h2 * (h1 + h2));
    const double a2 = 2.0 / (h1 * (h1 + h2));
    const double b2 = -2.0 / (h1 * h2);
    const double c2 = 2.0 / (h2 * (h1 + h2));
    const double x1 = a * x[j - 1] + b * x[j] + c * x[j + 1];
    const double y1 = a * y[j - 1] + b * y[j] + c * y[j + 1];
    const double x2 = a2 * x[j - 1] + b2 * x[j] + c2 * x[j + 1];
    const double y2 = a2 * y[j - 1] + b2 * y[j] + c2 * y[j + 1];
    const double speed2 = x1 * x1 + y1 * y1;
    k[j] = speed2 > 0.0 ? (y1 * x2 - x1 * y2) / std::pow(speed2, 1.5) : kNaN;
  }
  return k;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw Error(ErrorKind::Config, "invalid geometric grid", "grid");
  std::vector<double> g(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < count; ++k) g[k] = std::exp(a + (b - a) * k / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

SelectionResult lcurve_select(const SelectionProblem& problem, std::span<const double> sigma_grid) {
  const int n = static_cast<int>(sigma_grid.size());
  if (n < 5) throw Error(ErrorKind::Config, "L-curve grid needs at least 5 points", "grid");
  for (int j = 0; j < n; ++j) {
    if (!(sigma_grid[j] > 0.0) || (j > 0 && !(sigma_grid[j] > sigma_grid[j - 1]))) {
      throw Error(ErrorKind::Config, "L-curve grid must be positive and strictly increasing", "grid");
    }
  }

  SelectionResult res;
  res.method = Method::LCurve;
  res.curve.resize(n);
  parallel_for(n, problem.policy, [&](int j) {
    const CovarianceSpec spec = problem.with_sigma(sigma_grid[j]);
    res.curve[j] = row_for(spec, problem.solve(spec));
  });
  res.runs = n;

  std::vector<double> s(n), x(n), y(n);
  for (int j = 0; j < n; ++j) {
    const CurveRow& r = res.curve[j];
    require_finite(r);
    if (!(r.j_data > 0.0) || !(r.j_mod > 0.0)) {
      throw Error(ErrorKind::Degenerate, "L-curve penalty not positive at sigma_f2 = " + fmt(r.sigma_f2), "sigma_f2");
    }
    s[j] = std::log(r.sigma_f2);
    x[j] = std::log(r.j_data);
    y[j] = std::log(r.sigma_f2 * r.j_mod);
  }
  const std::vector<double> kappa = discrete_curvature(s, x, y);
  int best = -1;
  for (int j = 1; j + 1 < n; ++j) {
    res.curve[j].criterion = kappa[j];
    if (std::isfinite(kappa[j]) && (best < 0 || kappa[j] > kappa[best])) best = j;
  }
  res.curve.front().criterion = kNaN;
  res.curve.back().criterion = kNaN;
  if (best < 0) throw Error(ErrorKind::Degenerate, "L-curve curvature undefined everywhere", "grid");
  if (best == 1 || best == n - 2) add_flag(res, "boundary");

  // Corner by turning angle between chords spanning a tenth of the grid.
  const int w = std::max(1, n / 10);
  int corner = w;
  double best_turn = -INFINITY;
  for (int j = w; j + w < n; ++j) {
    const double ax = x[j] - x[j - w], ay = y[j] - y[j - w];
    const double bx = x[j + w] - x[j], by = y[j + w] - y[j];
    const double turn = std::atan2(-(ax * by - ay * bx), ax * bx + ay * by);
    if (turn > best_turn) {
      best_turn = turn;
      corner = j;
    }
  }
  res.corner_angle_sigma_f2 = sigma_grid[corner];
  res.params = problem.with_sigma(sigma_grid[best]);
  res.value = kappa[best];
  res.iterations = 1;
  return res;
}

SelectionResult gcv_select_1d(const SelectionProblem& problem, Bounds bounds, int max_runs) {
  bounds.validate();
  const double a = std::log(bounds.lo);
  const double b = std::log(bounds.hi);
  const double tol = 1e-3;
  LogScan g(problem, Method::GCV);
  SelectionResult res;
  res.method = Method::GCV;

  const int endpoint_reserve = 2;
  ScalarMin m = golden_section(std::ref(g), a, b, tol, std::max(2, max_runs - endpoint_reserve));
  res.iterations = m.iterations;
  double best_x = m.x;
  double best_f = m.f;
  const double ga = g(a);
  const double gb = g(b);
  if (ga < best_f || gb < best_f) {
    // The sampled function is not unimodal on the bracket: scan coarsely, then refine locally.
    add_flag(res, "bracket_fallback");
    const int coarse = 13;
    std::vector<double> xs(coarse), fs(coarse);
    for (int k = 0; k < coarse; ++k) {
      xs[k] = a + (b - a) * k / (coarse - 1);
      fs[k] = g(xs[k]);
    }
    const int j = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    best_x = xs[j];
    best_f = fs[j];
    const int budget = max_runs - g.runs();
    if (budget >= 2) {
      const double lo = xs[std::max(0, j - 1)];
      const double hi = xs[std::min(coarse - 1, j + 1)];
      const ScalarMin r = golden_section(std::ref(g), lo, hi, tol, budget);
      res.iterations += r.iterations;
      if (r.f < best_f) {
        best_x = r.x;
        best_f = r.f;
      }
    }
  }
  if (ga <= best_f) {
    best_x = a;
    best_f = ga;
  }
  if (gb < best_f) {
    best_x = b;
    best_f = gb;
  }
  if (best_x - a <= tol || b - best_x <= tol) add_flag(res, "boundary");
  if (g.runs() >= max_runs) add_flag(res, "max_runs");
  if (!std::isfinite(best_f)) add_flag(res, "non_finite");

  res.params = problem.with_sigma(std::clamp(std::exp(best_x), bounds.lo, bounds.hi));
  res.value = best_f;
  res.runs = g.runs();
  res.curve = g.rows();
  return res;
}

SelectionResult chi2_select_1d(const SelectionProblem& problem, Bounds bounds, int max_runs) {
  bounds.validate();
  const double a = std::log(bounds.lo);
  const double b = std::log(bounds.hi);
  const double m_count = static_cast<double>(problem.size());
  LogScan g(problem, Method::Chi2);
  SelectionResult res;
  res.method = Method::Chi2;

  const double ga = g(a);
  const double gb = ga > 0.0 ? g(b) : 0.0;
  double x = 0.0;
  double fx = 0.0;
  if (!(ga > 0.0)) {
    add_flag(res, "boundary");
    add_flag(res, "no_bracket");
    x = a;
    fx = ga;
  } else if (!(gb < 0.0)) {
    add_flag(res, "boundary");
    add_flag(res, "no_bracket");
    x = b;
    fx = gb;
  } else {
    const ScalarMin r = bisect_decreasing(std::ref(g), a, b, 1e-6 * m_count, max_runs - g.runs());
    res.iterations = r.iterations;
    x = r.x;
    fx = r.f;
    if (!r.converged) add_flag(res, "not_converged");
  }
  res.params = problem.with_sigma(std::clamp(std::exp(x), bounds.lo, bounds.hi));
  res.value = fx;
  res.runs = g.runs();
  res.curve = g.rows();
  return res;
}

namespace {

struct MultiSetup {
  std::vector<int> free;  // indices into (log sigma_f2, l_f, tau_f)
  double lo[3];
  double hi[3];
  double pinned[3];
};

MultiSetup multi_setup(const Box& box) {
  box.validate();
  MultiSetup s{};
  for (int k = 0; k < 3; ++k) {
    s.lo[k] = k == 0 ? std::log(box.lo[0]) : box.lo[k];
    s.hi[k] = k == 0 ? std::log(box.hi[0]) : box.hi[k];
    s.pinned[k] = s.lo[k];
    if (box.hi[k] > box.lo[k]) s.free.push_back(k);
  }
  return s;
}

CovarianceSpec spec_from(const SelectionProblem& p, const MultiSetup& s, const std::vector<double>& z) {
  double v[3] = {s.pinned[0], s.pinned[1], s.pinned[2]};
  for (std::size_t j = 0; j < s.free.size(); ++j) v[s.free[j]] = z[j];
  CovarianceSpec spec = CovarianceSpec::non_isotropic(std::exp(v[0]), v[1], v[2], p.base.ci_variance);
  return spec;
}

// Tetrahedral corners of the free cube, then its center; duplicates dropped.
std::vector<std::vector<double>> multi_starts(const MultiSetup& s) {
  const int corners[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  std::vector<std::vector<double>> starts;
  auto push = [&](std::vector<double> z) {
    if (std::find(starts.begin(), starts.end(), z) == starts.end()) starts.push_back(std::move(z));
  };
  for (const auto& c : corners) {
    std::vector<double> z;
    for (int k : s.free) z.push_back(c[k] ? s.hi[k] : s.lo[k]);
    push(z);
  }
  std::vector<double> center;
  for (int k : s.free) center.push_back(0.5 * (s.lo[k] + s.hi[k]));
  push(center);
  return starts;
}

template <class Objective>
SelectionResult run_multi(const SelectionProblem& problem, const Box& box, int max_runs, Method method,
                          Objective&& criterion, const SimplexOptions& base_options) {
  const MultiSetup s = multi_setup(box);
  SelectionResult res;
  res.method = method;

  std::vector<double> best_z;
  double best_f = INFINITY;
  auto record = [&](const CovarianceSpec& spec) {
    const DataSpaceSystem sys = problem.solve(spec);
    CurveRow row = row_for(spec, sys);
    require_finite(row);
    row.criterion = criterion(sys, row);
    res.curve.push_back(row);
    ++res.runs;
    return row.criterion;
  };

  if (s.free.empty()) {
    const CovarianceSpec spec = spec_from(problem, s, {});
    res.value = record(spec);
    res.params = spec;
    res.start_solutions.push_back(spec);
    add_flag(res, "boundary");
    return res;
  }

  std::vector<double> lo, hi;
  for (int k : s.free) {
    lo.push_back(s.lo[k]);
    hi.push_back(s.hi[k]);
  }
  const auto starts = multi_starts(s);
  const int per_start = std::min(40, max_runs);
  int leftover = 0;
  bool improved = false;
  for (std::size_t st = 0; st < starts.size() && res.runs < max_runs; ++st) {
    const std::vector<double>& z0 = starts[st];
    std::vector<double> steps(z0.size());
    for (std::size_t j = 0; j < z0.size(); ++j) {
      const double range = hi[j] - lo[j];
      const double mid = 0.5 * (lo[j] + hi[j]);
      steps[j] = (z0[j] <= mid ? 0.25 : -0.25) * range;
    }
    SimplexOptions opt = base_options;
    opt.max_evals = std::min(per_start + leftover, max_runs - res.runs);
    if (opt.max_evals < static_cast<int>(z0.size()) + 1) break;
    double start_f = NAN;
    auto f = [&](const std::vector<double>& z) {
      const double v = record(spec_from(problem, s, z));
      if (std::isnan(start_f)) start_f = v;
      if (v < best_f) {
        best_f = v;
        best_z = z;
      }
      return v;
    };
    const SimplexResult r = nelder_mead_box(f, z0, steps, lo, hi, opt);
    res.iterations += r.iterations;
    leftover = std::max(0, opt.max_evals - r.evaluations);
    if (r.f < start_f) improved = true;
    res.start_solutions.push_back(spec_from(problem, s, r.x));
  }
  if (best_z.empty()) throw Error(ErrorKind::Selection, "multi-parameter search made no evaluation");
  if (!improved) add_flag(res, "no_improvement");
  if (!std::isfinite(best_f)) add_flag(res, "non_finite");
  if (res.runs >= max_runs) add_flag(res, "max_runs");

  res.params = spec_from(problem, s, best_z);
  res.value = best_f;
  for (std::size_t j = 0; j < best_z.size(); ++j) {
    const double tol = 1e-6 * (hi[j] - lo[j]);
    if (best_z[j] - lo[j] <= tol || hi[j] - best_z[j] <= tol) add_flag(res, "boundary");
  }
  return res;
}

}  // namespace

SelectionResult gcv_select_multi(const SelectionProblem& problem, Box box, int max_runs) {
  SimplexOptions opt;
  opt.ftol_rel = 1e-3;
  return run_multi(problem, box, max_runs, Method::GCV,
                   [](const DataSpaceSystem& sys, const CurveRow&) { return gcv_value(sys); }, opt);
}

SelectionResult chi2_select_multi(const SelectionProblem& problem, Box box, int max_runs) {
  const double m = static_cast<double>(problem.size());
  SimplexOptions opt;
  opt.ftol_rel = 1e-3;
  opt.stop_below = 1e-12;
  SelectionResult res = run_multi(
      problem, box, max_runs, Method::Chi2,
      [m](const DataSpaceSystem&, const CurveRow& row) { return std::pow((row.j_total - m) / m, 2); }, opt);

  // Start solutions that satisfy the criterion trace the solution manifold.
  const MultiSetup s = multi_setup(box);
  std::vector<CovarianceSpec> ok;
  for (const CovarianceSpec& sol : res.start_solutions) {
    for (const CurveRow& row : res.curve) {
      if (row.sigma_f2 == sol.sigma_f2 && row.l_f == sol.l_f && row.tau_f == sol.tau_f &&
          std::abs(row.j_total - m) <= 1e-3 * m) {
        ok.push_back(sol);
        break;
      }
    }
  }
  double spread = 0.0;
  for (std::size_t a = 0; a < ok.size(); ++a) {
    for (std::size_t b = a + 1; b < ok.size(); ++b) {
      const double va[3] = {std::log(ok[a].sigma_f2), ok[a].l_f, ok[a].tau_f};
      const double vb[3] = {std::log(ok[b].sigma_f2), ok[b].l_f, ok[b].tau_f};
      double d = 0.0;
      for (int k : s.free) d += std::pow((va[k] - vb[k]) / (s.hi[k] - s.lo[k]), 2);
      spread = std::max(spread, std::sqrt(d));
    }
  }
  res.spread = spread;
  if (std::sqrt(res.value) * m > 1e-3 * m) add_flag(res, "residual_above_threshold");
  return res;
}

}  // namespace repvar

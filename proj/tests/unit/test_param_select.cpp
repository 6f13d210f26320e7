#include <doctest.h>

#include <cmath>

#include "repvar/error.hpp"
#include "repvar/optimize.hpp"
#include "repvar/oracle.hpp"
#include "repvar/param_select.hpp"
#include "repvar/validation.hpp"

using namespace repvar;

namespace {

SelectionProblem problem_for(const TinyInstance& inst) {
  return SelectionProblem::make(inst.model, inst.obs, inst.q_f, inst.spec);
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::LCurve, Method::GCV, Method::Chi2}) CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("ridge"), Error);
}

TEST_CASE("curvature of a circle on a nonuniform parameter grid") {
  const double r = 2.5;
  std::vector<double> s, x, y;
  for (int k = 0; k <= 200; ++k) {
    const double th = 0.5 * std::pow(k / 200.0, 1.3) * 3.0;
    s.push_back(th);
    x.push_back(r * std::cos(th));
    y.push_back(-r * std::sin(th));  // clockwise
  }
  const auto kappa = discrete_curvature(s, x, y);
  CHECK(std::isnan(kappa.front()));
  CHECK(std::isnan(kappa.back()));
  for (std::size_t k = 1; k + 1 < kappa.size(); ++k) CHECK(kappa[k] == doctest::Approx(1.0 / r).epsilon(2e-2));
}

TEST_CASE("geometric grid") {
  const auto g = geometric_grid(1e-6, 1e2, 100);
  REQUIRE(g.size() == 100);
  CHECK(g.front() == doctest::Approx(1e-6));
  CHECK(g.back() == doctest::Approx(1e2));
  CHECK(g[1] / g[0] == doctest::Approx(g[99] / g[98]));
}

TEST_CASE("scalar optimizers") {
  const ScalarMin gs = golden_section([](double x) { return (x - 1.3) * (x - 1.3) + 2.0; }, -4.0, 5.0, 1e-6, 200);
  CHECK(gs.x == doctest::Approx(1.3).epsilon(1e-5));
  CHECK(gs.converged);
  const ScalarMin b = bisect_decreasing([](double x) { return 2.0 - x * x * x; }, 0.0, 3.0, 1e-12, 200);
  CHECK(b.x == doctest::Approx(std::cbrt(2.0)).epsilon(1e-10));
  CHECK(b.converged);
  const ScalarMin capped = golden_section([](double x) { return x * x; }, -1.0, 2.0, 1e-12, 6);
  CHECK(capped.evaluations <= 6);
  CHECK(!capped.converged);
}

TEST_CASE("Nelder-Mead on a box") {
  auto rosen = [](const std::vector<double>& z) {
    return 100.0 * std::pow(z[1] - z[0] * z[0], 2) + std::pow(1.0 - z[0], 2);
  };
  SimplexOptions opt;
  opt.max_evals = 3000;
  opt.ftol_rel = 1e-12;
  opt.ftol_abs = 1e-16;
  opt.xtol = 1e-10;
  const auto free = nelder_mead_box(rosen, {-1.2, 1.0}, {0.5, 0.5}, {-2, -2}, {2, 2}, opt);
  CHECK(free.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(free.x[1] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(free.evaluations <= 3000);
  const auto boxed = nelder_mead_box(rosen, {-1.2, 1.0}, {0.5, -0.5}, {-2, -2}, {0.5, 2}, opt);
  CHECK(boxed.x[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(boxed.x[1] == doctest::Approx(0.25).epsilon(1e-3));
  opt.max_evals = 25;
  CHECK(nelder_mead_box(rosen, {-1.2, 1.0}, {0.5, 0.5}, {-2, -2}, {2, 2}, opt).evaluations <= 25);
}

TEST_CASE("GCV equals literal leave-one-out") {
  const CheckResult r = check_gcv_loo(tiny_instances());
  CHECK_MESSAGE(r.pass, r.worst);
}

TEST_CASE("GCV rejects an interpolating datum") {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
  const auto sys = DataSpaceSystem::from_sigma(R, Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 1.0));
  CHECK_THROWS_AS(gcv_value(sys), Error);
}

TEST_CASE("chi2 cost is nonincreasing and the search converges") {
  int bracketed = 0;
  for (const auto& inst : tiny_instances()) {
    const auto p = problem_for(inst);
    double prev = INFINITY;
    for (double s : geometric_grid(1e-6, 1e2, 20)) {
      const double j = penalties(p.solve(p.with_sigma(s))).total;
      CHECK(j <= prev * (1 + 1e-12));
      prev = j;
    }
    const SelectionResult r = chi2_select_1d(p);
    CHECK(r.runs <= 60);
    if (!r.has_flag("no_bracket")) {
      ++bracketed;
      CHECK(std::abs(r.value) <= 1e-6 * p.size());
      const double j = penalties(p.solve(r.params)).total;
      CHECK(std::abs(j - p.size()) <= 1e-6 * p.size());
    }
  }
  CHECK(bracketed >= 1);
}

TEST_CASE("chi2 without a bracket returns the matching bound") {
  const auto inst = tiny_instances()[0];
  const auto p = problem_for(inst);
  const SelectionResult r = chi2_select_1d(p, Bounds{1e-3, 2e-3});
  CHECK(r.has_flag("no_bracket"));
  const double v = r.params.sigma_f2;
  CHECK((v == 1e-3 || v == 2e-3));
}

TEST_CASE("GCV search finds the grid minimum within budget") {
  for (const auto& inst : tiny_instances()) {
    const auto p = problem_for(inst);
    const SelectionResult r = gcv_select_1d(p);
    CHECK(r.runs <= 60);
    CHECK(r.curve.size() == static_cast<std::size_t>(r.runs));
    double grid_min = INFINITY;
    for (double s : geometric_grid(1e-6, 1e2, 41)) grid_min = std::min(grid_min, gcv_eval(p, p.with_sigma(s)));
    CHECK(r.value <= grid_min * (1 + 1e-3));
  }
}

TEST_CASE("L-curve picks a grid point of maximal curvature") {
  const auto inst = tiny_instances()[1];
  const auto p = problem_for(inst);
  const auto grid = geometric_grid(1e-6, 1e2, 100);
  const SelectionResult r = lcurve_select(p, grid);
  CHECK(r.runs == 100);
  REQUIRE(r.curve.size() == 100);
  double best = -INFINITY;
  for (std::size_t k = 1; k + 1 < r.curve.size(); ++k) best = std::max(best, r.curve[k].criterion);
  CHECK(r.value == best);
  CHECK(std::find(grid.begin(), grid.end(), r.params.sigma_f2) != grid.end());
  CHECK(r.corner_angle_sigma_f2 > 0.0);
}

TEST_CASE("multi-parameter searches stay in the box and within budget") {
  const auto inst = tiny_instances()[3];
  const auto p = SelectionProblem::make(inst.model, inst.obs, inst.q_f, CovarianceSpec::non_isotropic(1.0, 1.0, 1.0));
  Box box;
  box.hi[1] = 3.0;
  box.hi[2] = 3.0;
  box.lo[1] = 0.2;
  box.lo[2] = 0.2;
  const SelectionResult g = gcv_select_multi(p, box, 120);
  CHECK(g.runs <= 120);
  CHECK(box.contains(g.params));
  CHECK(!g.params.is_isotropic());
  const SelectionResult c = chi2_select_multi(p, box, 120);
  CHECK(c.runs <= 120);
  CHECK(box.contains(c.params));
  if (!c.has_flag("residual_above_threshold")) {
    CHECK(std::abs(penalties(p.solve(c.params)).total - p.size()) <= 1e-3 * p.size());
  }
}

TEST_CASE("pinned box dimensions are not searched") {
  const auto inst = tiny_instances()[3];
  const auto p = SelectionProblem::make(inst.model, inst.obs, inst.q_f, CovarianceSpec::non_isotropic(1.0, 1.0, 1.0));
  Box box;
  box.lo[1] = box.hi[1] = 0.7;
  box.lo[2] = box.hi[2] = 1.1;
  const SelectionResult g = gcv_select_multi(p, box, 60);
  CHECK(g.params.l_f == 0.7);
  CHECK(g.params.tau_f == 1.1);
}

TEST_CASE("3D-Var: trace GCV equals LOO with equal leverage") {
  const int n = 6;
  ThreeDVarProblem p;
  p.x_b = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  p.H = Eigen::MatrixXd::Identity(n, n);
  p.R_obs = 0.3 * Eigen::MatrixXd::Identity(n, n);
  p.d = p.x_b + Eigen::VectorXd::LinSpaced(n, -0.4, 0.9).cwiseAbs2();
  for (double s : {0.01, 0.5, 4.0}) {
    CHECK(threedvar_gcv(p, s) == doctest::Approx(threedvar_loo(p, s)).epsilon(1e-10));
  }
  const auto chi = threedvar_select(p, Method::Chi2);
  if (std::find(chi.flags.begin(), chi.flags.end(), "no_bracket") == chi.flags.end()) {
    CHECK(threedvar_chi2(p, chi.sigma_b2) == doctest::Approx(double(n)).epsilon(1e-5));
  }
  const auto gcv = threedvar_select(p, Method::GCV);
  CHECK(gcv.runs <= 60);
}

TEST_CASE("3D-Var estimate is the Kalman update") {
  ThreeDVarProblem p;
  p.x_b = Eigen::Vector3d(1.0, 2.0, 3.0);
  p.H = Eigen::MatrixXd(2, 3);
  p.H << 1, 0, 0, 0, 0.5, 0.5;
  p.R_obs = Eigen::Matrix2d::Identity() * 0.2;
  p.d = Eigen::Vector2d(1.5, 2.0);
  const double s = 0.7;
  const Eigen::MatrixXd B = s * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd K = B * p.H.transpose() * (p.H * B * p.H.transpose() + p.R_obs).inverse();
  const Eigen::VectorXd ref = p.x_b + K * (p.d - p.H * p.x_b);
  CHECK((threedvar_estimate(p, s) - ref).norm() < 1e-12);
}

#include "repvar/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "repvar/error.hpp"
#include "repvar/experiment.hpp"
#include "repvar/oracle.hpp"
#include "repvar/param_select.hpp"
#include "repvar/representer.hpp"

namespace repvar {

namespace {

struct CaseSpec {
  int nx, nt, m;
  BoundaryKind bc;
  double sigma_f2, ci;
  bool two_sources;
};

CheckResult finish(std::string name, double worst, double tol, std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.worst = worst;
  r.tolerance = tol;
  r.pass = std::isfinite(worst) && worst <= tol;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "relative_error: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return diff / std::max(scale, std::numeric_limits<double>::min());
}

std::vector<TinyInstance> tiny_instances(std::uint64_t seed) {
  const CaseSpec specs[] = {
      {20, 15, 6, BoundaryKind::Periodic, 0.1, 0.0, false}, {25, 20, 8, BoundaryKind::NoFlux, 1.0, 0.0, true},
      {16, 12, 5, BoundaryKind::Periodic, 10.0, 0.3, false}, {22, 18, 7, BoundaryKind::NoFlux, 1.0, 0.5, true},
      {12, 10, 4, BoundaryKind::Periodic, 0.1, 1.0, true},   {25, 20, 8, BoundaryKind::Periodic, 10.0, 0.0, false},
  };
  std::vector<TinyInstance> out;
  int k = 0;
  for (const CaseSpec& c : specs) {
    const Grid grid = Grid::make(0.0, 5.0, 0.0, 3.0, c.nx, c.nt);
    TransportModel model(grid, 1.0, c.bc);
    SourceParams truth{3.0, 1.5, 2.0, 0.3, c.two_sources ? 2.0 : 0.0, 3.5, 1.5, 0.6};
    SourceParams prior = truth;
    prior.k0 = 0.5;
    prior.alpha0 = 1.6;
    std::vector<double> q_init(grid.nx), q_true(grid.nx);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x_center(i);
      q_init[i] = std::exp(-(x - 2.0) * (x - 2.0));
      q_true[i] = 1.2 * q_init[i];
    }
    const FieldST t = solve_forward(model, truth, nullptr, q_true);
    const auto locs = sample_locations(grid, c.m, derive_seed(seed, 2 * k));
    ObservationSet obs = generate_observations(t, locs, 0.1, derive_seed(seed, 2 * k + 1), 0.05);
    FieldST q_f = solve_forward(model, prior, nullptr, q_init);
    std::ostringstream label;
    label << "nx=" << c.nx << " nt=" << c.nt << " M=" << c.m << " " << to_string(c.bc) << " sigma_f2=" << c.sigma_f2
          << " ci=" << c.ci;
    out.push_back({label.str(), model, prior, q_init, CovarianceSpec::isotropic(c.sigma_f2, c.ci), std::move(obs),
                   std::move(q_f)});
    ++k;
  }
  return out;
}

CheckResult check_oracle_equivalence(const std::vector<TinyInstance>& cases, double tol) {
  double worst = 0.0;
  std::string where;
  for (const auto& c : cases) {
    const FullSpaceSolution full = full_space_solve({c.model, c.source, c.q_init, c.spec, c.obs});
    const RepresenterSystem sys = assemble_system(c.model, c.spec, c.obs, c.q_f, {ExecPolicy::Serial});
    const FieldST q_hat = optimal_estimate(sys, ExecPolicy::Serial);
    const std::vector<double> at_obs = interpolate(q_hat, c.obs.stencils);
    const double e = relative_error(at_obs, {full.q_hat_obs.data(), static_cast<std::size_t>(full.q_hat_obs.size())});
    if (e >= worst) {
      worst = e;
      where = c.label;
    }
  }
  return finish("oracle equivalence", worst, tol, std::to_string(cases.size()) + " instances, worst " + where);
}

CheckResult check_gcv_loo(const std::vector<TinyInstance>& cases, double tol) {
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto problem = SelectionProblem::make(c.model, c.obs, c.q_f, c.spec, ExecPolicy::Serial);
    const double g = gcv_eval(problem, c.spec);
    const double loo = loo_bruteforce(c.model, c.q_f, c.obs, c.spec);
    worst = std::max(worst, std::abs(g - loo) / std::max(std::abs(loo), std::numeric_limits<double>::min()));
  }
  return finish("GCV equals leave-one-out", worst, tol, std::to_string(cases.size()) + " instances");
}

CheckResult check_penalty_identity(const std::vector<TinyInstance>& cases, double tol) {
  double worst = 0.0;
  int systems = 0;
  for (const auto& c : cases) {
    for (double scale : {0.1, 1.0, 10.0}) {
      CovarianceSpec s = c.spec;
      s.sigma_f2 *= scale;
      const RepresenterSystem sys = assemble_system(c.model, s, c.obs, c.q_f, {ExecPolicy::Serial});
      worst = std::max(worst, penalties(sys).identity_defect());
      ++systems;
    }
  }
  return finish("penalty identity", worst, tol, std::to_string(systems) + " systems");
}

CheckResult check_adjoint_duality(const TransportModel& model, int pairs, std::uint64_t seed, double tol) {
  const Grid& g = model.grid();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> ux(g.x_min, g.x_max), ut(g.t_min, g.t_max);
  const std::vector<double> zero_init(g.nx, 0.0);
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    FieldST forcing(g);
    for (double& v : forcing.values()) v = normal(rng);
    std::vector<double> q0(g.nx);
    for (double& v : q0) v = normal(rng);
    std::vector<Impulse> imp(1 + p % 4);
    for (auto& i : imp) i = {ux(rng), ut(rng), normal(rng)};

    const FieldST q = solve_forward(model, SourceParams{}, &forcing, q0);
    double lhs = 0.0;
    for (const auto& i : imp) lhs += i.amplitude * bilinear_stencil(g, i.x, i.t).apply(q);
    const AdjointField adj = solve_adjoint(model, imp);
    double rhs = grid_dot(forcing, adj.field);
    for (int i = 0; i < g.nx; ++i) rhs += g.dx() * q0[i] * adj.initial[i];
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  std::ostringstream d;
  d << pairs << " pairs on " << g.nx << "x" << g.nt << " " << to_string(model.boundary());
  return finish("adjoint duality", worst, tol, d.str());
}

CheckResult check_separable_convolution(double tol) {
  struct G {
    int nx, nt;
    double l, tau;
  };
  const G grids[] = {{12, 10, 1.0, 2.0}, {12, 10, 0.4, 0.5}, {7, 5, 3.0, 1.0}, {3, 4, 0.8, 10.0}, {2, 2, 1.0, 1.0}};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (const G& gs : grids) {
    const Grid g = Grid::make(0.0, 4.0, 0.0, 2.0, gs.nx, gs.nt);
    const auto spec = CovarianceSpec::non_isotropic(0.7, gs.l, gs.tau);
    FieldST lam(g);
    for (double& v : lam.values()) v = normal(rng);
    const FieldST fast = apply_cf(spec, lam, ExecPolicy::Serial);
    FieldST dense(g);
    for (int n = 0; n < g.nt; ++n) {
      for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        for (int m = 0; m < g.nt; ++m) {
          for (int j = 0; j < g.nx; ++j) {
            s += kernel_eval(spec, g.x_center(i), g.t_level(n), g.x_center(j), g.t_level(m)) * lam(m, j);
          }
        }
        dense(n, i) = s * g.dx() * g.dt();
      }
    }
    worst = std::max(worst, relative_error(fast.values(), dense.values()));
  }
  return finish("separable convolution", worst, tol, "5 grids up to 12x10");
}

std::vector<CheckResult> run_validation(ValidationSize size) {
  const auto cases = tiny_instances();
  std::vector<CheckResult> out;
  out.push_back(check_oracle_equivalence(cases));
  out.push_back(check_gcv_loo(cases));
  out.push_back(check_penalty_identity(cases));
  for (BoundaryKind bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
    TransportModel small(Grid::make(0.0, 5.0, 0.0, 3.0, 20, 15), 1.0, bc);
    out.push_back(check_adjoint_duality(small, 100, 3));
  }
  if (size == ValidationSize::Full) {
    for (GridPreset p : {GridPreset::Isotropic, GridPreset::NonIsotropic}) {
      TransportModel m(preset_grid(p), 1.0, BoundaryKind::Periodic);
      out.push_back(check_adjoint_duality(m, 100, 5));
    }
  }
  out.push_back(check_separable_convolution());
  return out;
}

}  // namespace repvar

// Acceptance suite: one PASS/FAIL line per criterion, diagnostics on '#' lines.
// Exit status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "repvar/experiment.hpp"
#include "repvar/oracle.hpp"
#include "repvar/param_select.hpp"
#include "repvar/representer.hpp"
#include "repvar/validation.hpp"

using namespace repvar;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string g(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

const Method kMethods[] = {Method::LCurve, Method::GCV, Method::Chi2};

// Mean sigma_f2 entering the tables: band-filtered for GCV and chi2, all samples for the L-curve.
bool table_mean(const EnsembleReport& rep, Method m, double& out) {
  const MethodSummary* s = rep.find(m);
  if (s == nullptr || s->kept.count == 0) return false;
  out = s->kept.mean;
  return true;
}

void describe(const EnsembleReport& rep, double seconds) {
  std::printf("# experiment %d (%d columns, %.1f s): first guess RMSE col0 %s mean %s (std %s), data RMSE %s (std %s)\n",
              rep.experiment, rep.columns, seconds, g(rep.first_guess_rmse_column0).c_str(),
              g(rep.first_guess_rmse.mean).c_str(), g(rep.first_guess_rmse.std).c_str(), g(rep.data_rmse.mean).c_str(),
              g(rep.data_rmse.std).c_str());
  for (const auto& m : rep.methods) {
    const Summary all = summarize(m.samples);
    std::printf("#   %-6s %-13s kept mean %s (std %s, n=%d) | all %s (n=%d) | outliers %d failures %d | col0 %s | RMSE %s\n",
                to_string(m.method), to_string(m.kind), g(m.kept.mean).c_str(), g(m.kept.std).c_str(), m.kept.count,
                g(all.mean).c_str(), all.count, m.outliers, m.failures,
                m.column0 ? m.column0->params.describe().c_str() : "-", g(m.rmse.mean).c_str());
  }
  std::fflush(stdout);
}

double upwind_error(int nx) {
  const double L = 10.0, T = 2.0, u = 1.0, width = 0.5;
  const double dx = L / nx;
  const int nt = static_cast<int>(std::lround(T / (0.5 * dx / u))) + 1;
  TransportModel m(Grid::make(0.0, L, 0.0, T, nx, nt), u, BoundaryKind::Periodic);
  auto exact = [&](double x, double t) {
    double d = std::fmod(x - u * t - 3.0 + 1.5 * L, L) - 0.5 * L;
    return std::exp(-d * d / (2 * width * width));
  };
  std::vector<double> q0(nx);
  for (int i = 0; i < nx; ++i) q0[i] = exact(m.grid().x_center(i), 0.0);
  const FieldST q = solve_forward(m, SourceParams{}, nullptr, q0);
  double e = 0.0;
  for (int i = 0; i < nx; ++i) e += std::pow(q(nt - 1, i) - exact(m.grid().x_center(i), T), 2) * dx;
  return std::sqrt(e);
}

}  // namespace

int main() {
  const auto t_all = Clock::now();

  // 1-3, 5, 6: tiny instances against the dense oracles
  const auto t_tiny = Clock::now();
  const auto cases = tiny_instances();
  const CheckResult eq = check_oracle_equivalence(cases);
  const double tiny_seconds = since(t_tiny);
  verdict(1, "oracle equivalence", eq.pass && cases.size() >= 5 && tiny_seconds < 10.0,
          "worst rel " + g(eq.worst) + " (tol 1e-8) on " + std::to_string(cases.size()) + " instances in " +
              g(tiny_seconds) + " s (limit 10 s)");

  const CheckResult loo = check_gcv_loo(cases);
  verdict(2, "GCV identity", loo.pass, "worst rel " + g(loo.worst) + " (tol 1e-8)");

  // Full-scale isotropic ensembles for experiments 1-4.
  std::map<int, EnsembleReport> iso;
  std::map<int, ExperimentData> data;
  for (int id = 1; id <= 4; ++id) {
    const auto t0 = Clock::now();
    data.emplace(id, build_experiment(ExperimentConfig::defaults(id)));
    iso[id] = run_ensemble(data.at(id), {kMethods[0], kMethods[1], kMethods[2]});
    describe(iso[id], since(t0));
  }

  CheckResult pen = check_penalty_identity(cases);
  int full_systems = 0;
  for (auto& [id, exp] : data) {
    const auto basis = RepresenterBasis::from(exp.model, exp.observations(0));
    for (double s : {1e-4, 0.5, 10.0}) {
      const auto sys = assemble_system(basis, CovarianceSpec::isotropic(s), exp.observations(0), exp.first_guess(0));
      pen.worst = std::max(pen.worst, penalties(sys).identity_defect());
      ++full_systems;
    }
  }
  verdict(3, "penalty identity", pen.worst <= 1e-10,
          "worst rel " + g(pen.worst) + " (tol 1e-10) over tiny systems and " + std::to_string(full_systems) +
              " full-scale systems");

  {
    double worst = 0.0;
    bool ok = true;
    std::string where;
    for (GridPreset p : {GridPreset::Isotropic, GridPreset::NonIsotropic}) {
      for (BoundaryKind bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        const CheckResult r = check_adjoint_duality(TransportModel(preset_grid(p), 1.0, bc), 100, 17);
        ok = ok && r.pass;
        if (r.worst >= worst) where = r.detail;
        worst = std::max(worst, r.worst);
      }
    }
    verdict(4, "adjoint duality", ok, "worst rel " + g(worst) + " (tol 1e-12), 100 pairs per preset and boundary; worst " + where);
  }

  {
    bool ok = true;
    int bracketed = 0, searched = 0;
    double worst_res = 0.0;
    auto check = [&](const SelectionProblem& p) {
      double prev = INFINITY;
      for (double s : geometric_grid(1e-6, 1e2, 20)) {
        const double j = penalties(p.solve(p.with_sigma(s))).total;
        if (j > prev) ok = false;
        prev = j;
      }
      const SelectionResult r = chi2_select_1d(p);
      ++searched;
      if (r.has_flag("no_bracket")) return;
      ++bracketed;
      const double res = std::abs(r.value) / p.size();
      worst_res = std::max(worst_res, res);
      if (res > 1e-6) ok = false;
    };
    for (const auto& c : cases) check(SelectionProblem::make(c.model, c.obs, c.q_f, c.spec));
    const ExperimentData& e1 = data.at(1);
    const auto basis = RepresenterBasis::from(e1.model, e1.observations(0));
    for (int j = 0; j < 20; ++j) {
      check(SelectionProblem{basis, e1.observations(j), e1.first_guess(j), CovarianceSpec::isotropic(1.0)});
    }
    verdict(5, "chi2 convergence", ok && bracketed > 0,
            std::to_string(bracketed) + " of " + std::to_string(searched) + " searches bracketed, worst |J-M|/M " +
                g(worst_res) + " (tol 1e-6); J nonincreasing on the 20-point grid");
  }

  {
    const CheckResult r = check_separable_convolution();
    verdict(6, "separable convolution", r.pass, "worst rel " + g(r.worst) + " (tol 1e-12), " + r.detail);
  }

  {
    const EnsembleReport& r = iso.at(1);
    const double lo[3] = {0.30, 0.27, 0.24}, hi[3] = {0.76, 0.81, 0.83};
    bool ok = true;
    std::string detail;
    for (int k = 0; k < 3; ++k) {
      double v = NAN;
      const bool have = table_mean(r, kMethods[k], v);
      const bool in = have && v >= lo[k] && v <= hi[k];
      ok = ok && in;
      const MethodSummary* s = r.find(kMethods[k]);
      detail += std::string(k ? "; " : "") + to_string(kMethods[k]) + " " + (have ? g(v) : "undefined") + " in [" +
                g(lo[k]) + ", " + g(hi[k]) + "] (kept " + std::to_string(s->kept.count) + "/" +
                std::to_string(r.columns) + ")";
    }
    verdict(7, "experiment 1 mean sigma_f2", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    for (Method m : kMethods) {
      double v[5] = {NAN, NAN, NAN, NAN, NAN};
      bool have = true;
      for (int id = 1; id <= 4; ++id) have = table_mean(iso.at(id), m, v[id]) && have;
      const bool a = have && v[1] < v[3];
      const bool b = have && v[2] < v[4];
      ok = ok && a && b;
      detail += std::string(detail.empty() ? "" : "; ") + to_string(m) + " e1 " + g(v[1]) + (a ? " < " : " !< ") +
                "e3 " + g(v[3]) + ", e2 " + g(v[2]) + (b ? " < " : " !< ") + "e4 " + g(v[4]);
    }
    verdict(8, "regime ordering", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    for (int id = 1; id <= 4; ++id) {
      const EnsembleReport& r = iso.at(id);
      const double worst_input = std::max(r.first_guess_rmse.mean, r.data_rmse.mean);
      detail += std::string(id > 1 ? "; " : "") + "e" + std::to_string(id) + " max(fg " + g(r.first_guess_rmse.mean) +
                ", data " + g(r.data_rmse.mean) + ")";
      for (Method m : kMethods) {
        const MethodSummary* s = r.find(m);
        const bool have = s->column0.has_value();
        const bool pass = have && s->rmse.mean <= worst_input && (id != 1 || s->rmse.mean < 0.5 * r.data_rmse.mean);
        ok = ok && pass;
        detail += std::string(" ") + to_string(m) + " " + (have ? g(s->rmse.mean) : "n/a") + (pass ? "" : "(x)");
      }
    }
    verdict(9, "improvement property", ok, detail + "; e1 also needs < 0.5 x data");
  }

  {
    std::map<int, EnsembleReport> ni;
    for (int id = 1; id <= 4; ++id) {
      const auto t0 = Clock::now();
      const ExperimentConfig cfg = ExperimentConfig::defaults(id, GridPreset::NonIsotropic);
      ni[id] = run_ensemble(build_experiment(cfg), {Method::GCV, Method::Chi2});
      describe(ni[id], since(t0));
    }
    const Box box;
    bool ok = true;
    std::string detail;
    for (Method m : {Method::GCV, Method::Chi2}) {
      double v[5] = {NAN, NAN, NAN, NAN, NAN};
      bool have = true;
      for (int id = 1; id <= 4; ++id) {
        const MethodSummary* s = ni.at(id).find(m, CovarianceSpec::Kind::NonIsotropic);
        if (s == nullptr || !s->column0) {
          have = false;
          continue;
        }
        v[id] = s->column0->params.sigma_f2;
        ok = ok && box.contains(s->column0->params);
      }
      const bool small = have && v[1] <= 1e-2 && v[2] <= 1e-2;
      const bool larger = have && v[3] >= 10 * v[1] && v[4] >= 10 * v[1];
      ok = ok && small && larger;
      detail += std::string(detail.empty() ? "" : "; ") + to_string(m) + " e1 " + g(v[1]) + " e2 " + g(v[2]) + " e3 " +
                g(v[3]) + " e4 " + g(v[4]);
    }
    verdict(10, "non-isotropic sigma_f2 pattern", ok, detail + " (need e1,e2 <= 1e-2; e3,e4 >= 10 x e1; in box)");
  }

  {
    int worst[2] = {0, 0};
    const Method ms[2] = {Method::GCV, Method::Chi2};
    const ExperimentData& e1 = data.at(1);
    const auto basis = RepresenterBasis::from(e1.model, e1.observations(0));
    for (int k = 0; k < 2; ++k) {
      for (int r : iso.at(1).find(ms[k])->runs) worst[k] = std::max(worst[k], r);
      for (int j = 0; j < 5; ++j) {  // includes columns whose criterion failed
        SelectionProblem p{basis, e1.observations(j), e1.first_guess(j), CovarianceSpec::isotropic(1.0)};
        const SelectionResult r = ms[k] == Method::GCV ? gcv_select_1d(p) : chi2_select_1d(p);
        worst[k] = std::max(worst[k], r.runs);
      }
    }
    verdict(11, "run-count economy", worst[0] <= 60 && worst[1] <= 60,
            "max assimilations gcv " + std::to_string(worst[0]) + ", chi2 " + std::to_string(worst[1]) + " (limit 60)");
  }

  {
    const double e[4] = {upwind_error(100), upwind_error(200), upwind_error(400), upwind_error(800)};
    bool ok = true;
    std::string detail = "L2 errors";
    for (double v : e) detail += " " + g(v);
    detail += "; ratios";
    for (int k = 1; k < 4; ++k) {
      const double ratio = e[k - 1] / e[k];
      if (k >= 2) ok = ok && ratio >= 1.6 && ratio <= 2.4;
      detail += " " + g(ratio);
    }
    verdict(12, "upwind convergence", ok, detail + " (need 2 +- 20% on the two finest refinements)");
  }

  std::printf("# total %.1f s, %d criteria failed\n", since(t_all), failures);
  return failures == 0 ? 0 : 1;
}

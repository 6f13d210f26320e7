// Serial reference vs OpenMP kernels. Prints wall time and the largest
// difference between the two results (expected 0).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "repvar/covariance.hpp"
#include "repvar/experiment.hpp"
#include "repvar/observation.hpp"
#include "repvar/parallel.hpp"
#include "repvar/representer.hpp"

using namespace repvar;

namespace {

template <class F>
double seconds(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

void row(const std::string& name, double serial, double parallel, double diff) {
  std::printf("%-34s %10.4f %10.4f %8.2fx %10.3g\n", name.c_str(), serial, parallel, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads: %d, repetitions: %d\n", thread_count(), reps);
  std::printf("%-34s %10s %10s %9s %10s\n", "kernel", "serial s", "parallel s", "speedup", "max diff");

  const Grid iso = preset_grid(GridPreset::Isotropic);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  FieldST lam(iso);
  for (double& v : lam.values()) v = normal(rng);

  {
    const ModelErrorCovariance cov(iso, CovarianceSpec::non_isotropic(1.0, 2.0, 3.0));
    FieldST a(iso), b(iso);
    const double s = seconds([&] { a = cov.apply(lam, ExecPolicy::Serial); }, reps);
    const double p = seconds([&] { b = cov.apply(lam, ExecPolicy::Parallel); }, reps);
    row("non-isotropic C_f 200x445", s, p, max_diff(a.values(), b.values()));
  }

  const TransportModel model(iso, 1.0, BoundaryKind::Periodic);
  const auto locs = sample_locations(iso, 49, 3);
  std::vector<Stencil> stencils;
  for (const auto& l : locs) stencils.push_back(bilinear_stencil(iso, l.x, l.t));
  {
    Eigen::MatrixXd a, b;
    const auto spec = CovarianceSpec::isotropic(0.5);
    const double s = seconds([&] { a = RepresenterBasis(model, stencils, locs, ExecPolicy::Serial).representer_matrix(spec, ExecPolicy::Serial); }, reps);
    const double p = seconds([&] { b = RepresenterBasis(model, stencils, locs, ExecPolicy::Parallel).representer_matrix(spec, ExecPolicy::Parallel); }, reps);
    row("representer matrix M=49", s, p, (a - b).cwiseAbs().maxCoeff());
  }
  {
    std::vector<double> truth(49);
    for (double& v : truth) v = 1.0 + std::abs(normal(rng)) * 10.0;
    FilteredDataset a, b;
    const double s = seconds([&] { a = calibrate_and_filter(truth, 0.7, 100000, 500, 9, ExecPolicy::Serial); }, reps);
    const double p = seconds([&] { b = calibrate_and_filter(truth, 0.7, 100000, 500, 9, ExecPolicy::Parallel); }, reps);
    row("noise calibration n_mc=1e5", s, p, (a.columns - b.columns).cwiseAbs().maxCoeff());
  }
  {
    ExperimentConfig cfg = ExperimentConfig::defaults(1);
    cfg.columns = 16;
    cfg.n_mc = 20000;
    const ExperimentData exp = build_experiment(cfg);
    EnsembleReport a, b;
    const double s = seconds([&] { a = run_ensemble(exp, {Method::GCV, Method::Chi2}, ExecPolicy::Serial); }, 1);
    const double p = seconds([&] { b = run_ensemble(exp, {Method::GCV, Method::Chi2}, ExecPolicy::Parallel); }, 1);
    double d = 0.0;
    for (std::size_t k = 0; k < a.methods.size(); ++k) d = std::max(d, max_diff(a.methods[k].samples, b.methods[k].samples));
    row("ensemble 16 columns gcv+chi2", s, p, d);
  }
  return 0;
}

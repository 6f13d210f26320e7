#include <doctest.h>

#include <cmath>

#include "repvar/error.hpp"
#include "repvar/representer.hpp"
#include "repvar/transport.hpp"
#include "repvar/validation.hpp"

using namespace repvar;

namespace {

// Prior covariance of the stacked trajectory q = L e, where e^0 is the
// initial-state error and e^{n+1} = dt F^n the model error of step n.
Eigen::MatrixXd trajectory_covariance(const TransportModel& model, const CovarianceSpec& spec) {
  const Grid& g = model.grid();
  const int nx = g.nx, nt = g.nt, N = nx * nt;
  const Eigen::MatrixXd A = build_step_matrix(model);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < nt; ++k) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Identity(nx, nx);
    for (int n = k; n < nt; ++n) {
      L.block(n * nx, k * nx, nx, nx) = block;
      block = A * block;
    }
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, N);
  S.topLeftCorner(nx, nx) = Eigen::MatrixXd::Identity(nx, nx) * spec.ci_variance / g.dx();
  const double dt = g.dt();
  for (int n = 0; n + 1 < nt; ++n) {
    for (int m = 0; m + 1 < nt; ++m) {
      for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nx; ++j) {
          double c;
          if (spec.is_isotropic()) {
            c = (n == m && i == j) ? spec.sigma_f2 / (g.dx() * dt) : 0.0;
          } else {
            c = kernel_eval(spec, g.x_center(i), g.t_level(n), g.x_center(j), g.t_level(m));
          }
          S((n + 1) * nx + i, (m + 1) * nx + j) = dt * dt * c;
        }
      }
    }
  }
  return L * S * L.transpose();
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("representer matrix and estimate match the dense Gaussian posterior") {
  const auto cases = tiny_instances();
  std::vector<CovarianceSpec> specs{CovarianceSpec::isotropic(0.7), CovarianceSpec::isotropic(2.0, 0.4),
                                    CovarianceSpec::non_isotropic(0.9, 0.6, 0.8),
                                    CovarianceSpec::non_isotropic(3.0, 1.5, 0.3, 0.2)};
  for (std::size_t c = 0; c < 3; ++c) {
    const TinyInstance& inst = cases[c];
    const Eigen::MatrixXd H = observation_matrix(inst.model.grid(), inst.obs.stencils);
    for (const auto& spec : specs) {
      CAPTURE(inst.label);
      CAPTURE(spec.describe());
      const Eigen::MatrixXd Sq = trajectory_covariance(inst.model, spec);
      const Eigen::MatrixXd R_ref = H * Sq * H.transpose();
      const auto basis = RepresenterBasis::from(inst.model, inst.obs);
      CHECK(rel(basis->representer_matrix(spec), R_ref) < 1e-10);

      const RepresenterSystem sys = assemble_system(inst.model, spec, inst.obs, inst.q_f);
      const FieldST q_hat = optimal_estimate(sys);
      const Eigen::Map<const Eigen::VectorXd> qf(inst.q_f.values().data(), inst.q_f.values().size());
      const std::vector<double> d = inst.obs.data(), s = inst.obs.sigmas();
      Eigen::VectorXd innov(d.size()), ce(d.size());
      for (std::size_t m = 0; m < d.size(); ++m) {
        innov[m] = d[m];
        ce[m] = s[m] * s[m];
      }
      innov -= H * qf;
      const Eigen::MatrixXd P = R_ref + Eigen::MatrixXd(ce.asDiagonal());
      const Eigen::VectorXd ref = qf + Sq * H.transpose() * P.ldlt().solve(innov);
      const Eigen::Map<const Eigen::VectorXd> got(q_hat.values().data(), q_hat.values().size());
      CHECK(rel(got, ref) < 1e-9);
    }
  }
}

TEST_CASE("streamed and stored representer fields give the same estimate") {
  const auto cases = tiny_instances();
  const TinyInstance& inst = cases[1];
  for (const auto& spec : {inst.spec, CovarianceSpec::non_isotropic(1.0, 0.5, 0.5)}) {
    const RepresenterSystem stored = assemble_system(inst.model, spec, inst.obs, inst.q_f);
    const RepresenterSystem streamed = assemble_system(inst.model, spec, inst.obs, inst.q_f, {ExecPolicy::Parallel, 0});
    CHECK(!stored.reps.empty());
    CHECK(streamed.reps.empty());
    const FieldST a = optimal_estimate(stored), b = optimal_estimate(streamed);
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
      worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
      scale = std::max(scale, std::abs(a.values()[k]));
    }
    CHECK(worst <= 1e-12 * scale);
  }
}

TEST_CASE("penalty identity and the direct model penalty") {
  for (const auto& inst : tiny_instances()) {
    const RepresenterSystem sys = assemble_system(inst.model, inst.spec, inst.obs, inst.q_f);
    const Penalties p = penalties(sys);
    CHECK(p.identity_defect() < 1e-10);
    CHECK(p.data >= 0.0);
    CHECK(p.model >= 0.0);
    const FieldST q_hat = optimal_estimate(sys);
    const auto direct = model_penalty_direct(sys, q_hat);
    REQUIRE(direct.has_value());
    CHECK(*direct == doctest::Approx(p.model).epsilon(1e-8));
    CHECK(sys.data.raw_asymmetry() < 1e-12);
  }
}

TEST_CASE("misfit and influence diagonal identities") {
  const auto inst = tiny_instances()[0];
  const RepresenterSystem sys = assemble_system(inst.model, inst.spec, inst.obs, inst.q_f);
  const FieldST q_hat = optimal_estimate(sys);
  const auto at_obs = interpolate(q_hat, inst.obs.stencils);
  const Eigen::VectorXd mis = sys.data.misfit();
  for (std::size_t m = 0; m < at_obs.size(); ++m) {
    CHECK(at_obs[m] - inst.obs.points[m].d == doctest::Approx(mis[m]).epsilon(1e-9));
  }
  const Eigen::MatrixXd RPinv = sys.data.R() * sys.data.P().inverse();
  const Eigen::VectorXd infl = sys.data.influence_diagonal();
  for (Eigen::Index k = 0; k < infl.size(); ++k) CHECK(infl[k] == doctest::Approx(RPinv(k, k)).epsilon(1e-10));
}

TEST_CASE("indefinite data-space system is reported") {
  Eigen::MatrixXd R(2, 2);
  R << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(DataSpaceSystem::solve(R, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)), Error);
  const DataSpaceSystem ok = DataSpaceSystem::solve(R, Eigen::VectorXd::Constant(2, 2.0), Eigen::VectorXd::Ones(2));
  CHECK(ok.beta()[0] == doctest::Approx(0.2));
}

TEST_CASE("serial and parallel representer matrices are identical") {
  const auto inst = tiny_instances()[3];
  RepresenterBasis s(inst.model, inst.obs.stencils, inst.obs.locations(), ExecPolicy::Serial);
  RepresenterBasis p(inst.model, inst.obs.stencils, inst.obs.locations(), ExecPolicy::Parallel);
  const auto spec = CovarianceSpec::non_isotropic(1.0, 0.8, 0.4, 0.3);
  CHECK((s.representer_matrix(spec, ExecPolicy::Serial) - p.representer_matrix(spec, ExecPolicy::Parallel))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("isotropic representer matrix is linear in the variances") {
  const auto inst = tiny_instances()[2];
  const auto basis = RepresenterBasis::from(inst.model, inst.obs);
  const Eigen::MatrixXd f = basis->representer_matrix(CovarianceSpec::isotropic(1.0, 0.0));
  const Eigen::MatrixXd i = basis->representer_matrix(CovarianceSpec::isotropic(0.0, 1.0));
  const Eigen::MatrixXd both = basis->representer_matrix(CovarianceSpec::isotropic(3.0, 0.5));
  CHECK(rel(both, 3.0 * f + 0.5 * i) < 1e-14);
}

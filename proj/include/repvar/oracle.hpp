#pragma once

#include <vector>

#include <Eigen/Dense>

#include "repvar/covariance.hpp"
#include "repvar/observation.hpp"
#include "repvar/optimize.hpp"
#include "repvar/param_select.hpp"
#include "repvar/transport.hpp"

namespace repvar {

/// Weak-constraint problem posed directly over the stacked trajectory. Only
/// meant for tiny grids; the prior mean is the error-free model run from q_init.
struct FullSpaceProblem {
  TransportModel model;
  SourceParams source;
  std::vector<double> q_init;
  CovarianceSpec covariance;  // isotropic
  ObservationSet obs;
  int max_unknowns = 5000;
};

struct FullSpaceSolution {
  FieldST q_hat;
  Eigen::VectorXd q_hat_obs;  // q_hat at the observation points
  Eigen::MatrixXd R;  // representer matrix recovered from the posterior covariance
  Eigen::VectorXd beta;  // C_eps^-1 (d - H q_hat)
  double J = 0.0;  // full cost at q_hat
  int unknowns = 0;
};

/// Minimizes
///   sum_n |q^{n+1} - A q^n - dt Q^n|^2 dx / (dt sigma_f2) + |q^0 - q_init|^2 dx / ci
///     + sum_m (H_m q - d_m)^2 / sigma_m^2
/// by dense normal equations. With ci = 0 the initial state is held fixed.
/// Throws Error(Shape) above the size cap and Error(Degenerate) for a
/// singular normal matrix.
FullSpaceSolution full_space_solve(const FullSpaceProblem& problem);

/// Literal leave-one-out: for each k, assimilate without datum k and compare
/// the estimate at (x_k, t_k) with d_k. Returns (1/M) sum_k w_k (q_hat^[k]_k - d_k)^2.
double loo_bruteforce(const TransportModel& model, const FieldST& q_f, const ObservationSet& obs,
                      const CovarianceSpec& spec);

/// Static problem with B = sigma_b2 I.
struct ThreeDVarProblem {
  Eigen::VectorXd x_b;
  Eigen::MatrixXd H;
  Eigen::MatrixXd R_obs;
  Eigen::VectorXd d;
};

Eigen::VectorXd threedvar_estimate(const Eigen::VectorXd& x_b, const Eigen::MatrixXd& B, const Eigen::MatrixXd& R_obs,
                                   const Eigen::MatrixXd& H, const Eigen::VectorXd& d);
Eigen::VectorXd threedvar_estimate(const ThreeDVarProblem& p, double sigma_b2);
/// M |d - H x_hat|^2 / tr(I - A)^2 with the influence matrix A formed densely.
double threedvar_gcv(const ThreeDVarProblem& p, double sigma_b2);
/// (1/M) sum_k (d_k - H_k x_hat^[k])^2 by M re-solves.
double threedvar_loo(const ThreeDVarProblem& p, double sigma_b2);
/// (d - H x_b)' (sigma_b2 H H' + R_obs)^-1 (d - H x_b).
double threedvar_chi2(const ThreeDVarProblem& p, double sigma_b2);

struct ThreeDVarSelection {
  double sigma_b2 = 0.0;
  int runs = 0;
  std::vector<std::string> flags;
};

/// Applies the named criterion on [bounds.lo, bounds.hi]: the L-curve on a
/// 100-point geometric grid, GCV by golden section and chi2 by bisection, all in
/// log sigma_b2.
ThreeDVarSelection threedvar_select(const ThreeDVarProblem& p, Method method, Bounds bounds = {});

}  // namespace repvar

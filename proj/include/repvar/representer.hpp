#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "repvar/covariance.hpp"
#include "repvar/observation.hpp"
#include "repvar/parallel.hpp"
#include "repvar/transport.hpp"

namespace repvar {

/// Adjoint representer alpha_m and representer r_m of one datum.
struct RepresenterPair {
  AdjointField alpha;
  FieldST r;
};

/// Forward solve forced by C_f alpha, started from C_i alpha(., 0).
FieldST representer_from_adjoint(const TransportModel& model, const ModelErrorCovariance& cov,
                                 const AdjointField& alpha);

RepresenterPair compute_representer_pair(const TransportModel& model, const CovarianceSpec& spec,
                                         const ObservationSet& obs, std::size_t m);

/// Reduced penalties at the optimum: data = h'P^-1 C_eps P^-1 h, model = h'P^-1 R P^-1 h,
/// total = h'P^-1 h.
struct Penalties {
  double data = 0.0;
  double model = 0.0;
  double total = 0.0;

  /// |data + model - total| relative to max(total, tiny).
  double identity_defect() const;
};

/// The M x M data-space problem P beta = h with P = R + C_eps, factored once.
class DataSpaceSystem {
 public:
  /// Symmetrizes R, factors P by Cholesky and solves for beta.
  /// Throws Error(Degenerate) when P is not numerically positive definite.
  static DataSpaceSystem solve(Eigen::MatrixXd R, Eigen::VectorXd c_eps, Eigen::VectorXd h);
  /// Same, from the data standard deviations; keeps them exactly so criteria
  /// weighted by 1/sigma stay finite when sigma^2 underflows.
  static DataSpaceSystem from_sigma(Eigen::MatrixXd R, const Eigen::VectorXd& sigma, Eigen::VectorXd h);

  Eigen::Index size() const { return h_.size(); }
  const Eigen::MatrixXd& R() const { return r_; }
  const Eigen::VectorXd& c_eps() const { return c_eps_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  Eigen::MatrixXd P() const;
  const Eigen::VectorXd& h() const { return h_; }
  const Eigen::VectorXd& beta() const { return beta_; }

  /// ||R - R'||_F / (1 + ||R||_F) of the matrix handed in, before symmetrization.
  double raw_asymmetry() const { return raw_asymmetry_; }
  /// Reciprocal condition estimate of the Cholesky factor inverted (~ cond_1(P)).
  double condition_estimate() const;

  Eigen::VectorXd solve_with(const Eigen::VectorXd& rhs) const;
  /// diag(P^-1).
  Eigen::VectorXd inverse_diagonal() const;
  /// diag(R P^-1) = 1 - c_eps .* diag(P^-1).
  Eigen::VectorXd influence_diagonal() const;
  /// q_hat - d at the observation points, which equals -c_eps .* beta.
  Eigen::VectorXd misfit() const;

 private:
  Eigen::MatrixXd r_;
  Eigen::VectorXd c_eps_;
  Eigen::VectorXd sigma_;
  Eigen::VectorXd h_;
  Eigen::VectorXd beta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double raw_asymmetry_ = 0.0;
};

Penalties penalties(const DataSpaceSystem& sys);

/// Adjoint representers of a fixed set of observation locations on a fixed
/// model. They do not depend on the covariance, so one basis serves every
/// hyperparameter evaluation. For isotropic covariances R and r_m are linear in
/// (sigma_f2, ci_variance); the unit responses are computed once and cached.
class RepresenterBasis {
 public:
  RepresenterBasis(TransportModel model, std::vector<Stencil> stencils, std::vector<SpaceTimePoint> locations,
                   ExecPolicy policy = ExecPolicy::Parallel, std::size_t field_budget_bytes = std::size_t{1} << 30);
  static std::shared_ptr<const RepresenterBasis> from(const TransportModel& model, const ObservationSet& obs,
                                                      ExecPolicy policy = ExecPolicy::Parallel);

  const TransportModel& model() const { return model_; }
  std::size_t size() const { return adjoints_.size(); }
  const std::vector<AdjointField>& adjoints() const { return adjoints_; }
  const std::vector<Stencil>& stencils() const { return stencils_; }
  const std::vector<SpaceTimePoint>& locations() const { return locations_; }

  /// R_{m1 m2} = r_{m1} evaluated at datum m2, not symmetrized.
  Eigen::MatrixXd representer_matrix(const CovarianceSpec& spec, ExecPolicy policy = ExecPolicy::Parallel) const;
  std::vector<FieldST> representer_fields(const CovarianceSpec& spec, ExecPolicy policy = ExecPolicy::Parallel) const;
  /// Whether M fields fit in the configured field budget.
  bool can_store_fields() const;

 private:
  struct UnitResponse {
    std::once_flag once;
    std::vector<FieldST> fields;  // empty when over budget
    Eigen::MatrixXd R;
  };
  const UnitResponse& unit(bool initial, ExecPolicy policy) const;
  std::vector<FieldST> compute_fields(const CovarianceSpec& spec, ExecPolicy policy) const;
  Eigen::MatrixXd sample_fields(const std::vector<FieldST>& fields) const;

  TransportModel model_;
  std::vector<Stencil> stencils_;
  std::vector<SpaceTimePoint> locations_;
  std::vector<AdjointField> adjoints_;
  std::size_t field_budget_bytes_;
  mutable UnitResponse unit_forcing_;
  mutable UnitResponse unit_initial_;
};

struct AssembleOptions {
  ExecPolicy policy = ExecPolicy::Parallel;
  /// Representer fields are kept only when M * N doubles fit in this budget.
  std::size_t field_budget_bytes = std::size_t{1} << 30;
};

/// A solved weak-constraint problem. Immutable once assembled.
struct RepresenterSystem {
  std::shared_ptr<const RepresenterBasis> basis;
  CovarianceSpec covariance;
  ObservationSet obs;
  FieldST q_f;
  DataSpaceSystem data;
  std::vector<FieldST> reps;  // empty when streamed; recomputed by optimal_estimate
};

/// Builds R from the representers, P = R + C_eps, h = d - H q_F and beta.
RepresenterSystem assemble_system(const TransportModel& model, const CovarianceSpec& spec,
                                  const ObservationSet& obs, const FieldST& q_f, const AssembleOptions& options = {});
/// Same, reusing a precomputed adjoint basis for the observation locations of `obs`.
RepresenterSystem assemble_system(std::shared_ptr<const RepresenterBasis> basis, const CovarianceSpec& spec,
                                  const ObservationSet& obs, const FieldST& q_f, const AssembleOptions& options = {});

/// q_hat = q_F + sum_m beta_m r_m over the whole grid.
FieldST optimal_estimate(const RepresenterSystem& sys, ExecPolicy policy = ExecPolicy::Parallel);
/// q_F + sum_m beta_m r_m for given fields (shared by the streaming and stored paths).
FieldST combine_representers(const FieldST& q_f, const std::vector<FieldST>& reps, const Eigen::VectorXd& beta,
                             ExecPolicy policy = ExecPolicy::Parallel);

Penalties penalties(const RepresenterSystem& sys);

/// Model penalty evaluated directly from the discrete dynamics residual of
/// q_hat - q_F (isotropic covariances only). Diagnostic; the data-space form is
/// the primary path.
std::optional<double> model_penalty_direct(const RepresenterSystem& sys, const FieldST& q_hat);

}  // namespace repvar

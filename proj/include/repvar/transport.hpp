#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "repvar/grid.hpp"

namespace repvar {

/// Two decaying Gaussian emitters:
/// Q(x,t) = S0 exp(-alpha0 (x-x0)^2 - k0 t) + S1 exp(-alpha1 (x-x1)^2 - k1 t).
struct SourceParams {
  double S0 = 0.0;
  double x0 = 0.0;
  double alpha0 = 0.0;
  double k0 = 0.0;
  double S1 = 0.0;
  double x1 = 0.0;
  double alpha1 = 0.0;
  double k1 = 0.0;

  /// Throws Error(Config) on negative decay rates.
  void validate() const;
};

double source_eval(const SourceParams& p, double x, double t);

/// Upwind one-step update q^{n+1} = A q^n as a two-point stencil per row.
/// The forward solve applies it, the adjoint applies its exact transpose.
class StepOperator {
 public:
  StepOperator(const Grid& grid, double u, BoundaryKind bc);

  int size() const { return nx_; }
  void apply(std::span<const double> in, std::span<double> out) const;
  void apply_transpose(std::span<const double> in, std::span<double> out) const;

 private:
  struct Row {
    int col[2];
    double w[2];
    int count;
  };
  int nx_;
  std::vector<Row> rows_;
};

/// A linear advection model on a fixed grid with constant wind. Construction
/// enforces the CFL bound, so every solve it performs is stable.
class TransportModel {
 public:
  TransportModel(const Grid& grid, double u, BoundaryKind bc);

  const Grid& grid() const { return grid_; }
  double wind() const { return u_; }
  BoundaryKind boundary() const { return bc_; }
  const StepOperator& step() const { return step_; }

 private:
  Grid grid_;
  double u_;
  BoundaryKind bc_;
  StepOperator step_;
};

/// Forward Euler upwind finite-volume solve:
/// q^{n+1}_i = (A q^n)_i + dt (Q(x_i, t_n) + forcing^n_i), q^0 = q_init.
/// `forcing` may be null; its last time level is never used.
FieldST solve_forward(const TransportModel& model, const SourceParams& source,
                      const FieldST* forcing, std::span<const double> q_init);

/// Point impulse amplitude * delta(x - x_m) delta(t - t_m) driving the adjoint.
struct Impulse {
  double x = 0.0;
  double t = 0.0;
  double amplitude = 1.0;
};

/// Backward solution of the discrete adjoint. `field` is the Green's function
/// seen by the forcing term: grid_dot(forcing, field) reproduces the impulse
/// functional of the forward solution driven by that forcing. `initial` plays
/// the same role for the initial condition, paired with the spatial measure dx.
struct AdjointField {
  FieldST field;
  std::vector<double> initial;
};

/// Solves the transpose of the discrete forward map for the given impulses.
/// Each impulse is deposited through the bilinear observation stencil and
/// scaled by 1/(dx dt). Throws Error(Domain) for impulses outside the grid.
AdjointField solve_adjoint(const TransportModel& model, std::span<const Impulse> impulses);

/// Dense nx-by-nx one-step matrix A. Throws Error(Shape) above `max_cells` cells.
Eigen::MatrixXd build_step_matrix(const TransportModel& model, int max_cells = 4096);

}  // namespace repvar

#include "repvar/transport.hpp"

#include <cmath>
#include <string>

#include "repvar/error.hpp"
#include "repvar/interp.hpp"

namespace repvar {

void SourceParams::validate() const {
  const char* names[] = {"source.alpha0", "source.alpha1", "source.k0", "source.k1"};
  const double values[] = {alpha0, alpha1, k0, k1};
  for (int k = 0; k < 4; ++k) {
    if (!(values[k] >= 0.0)) throw Error(ErrorKind::Config, std::string(names[k]) + " must be >= 0", names[k]);
  }
}

double source_eval(const SourceParams& p, double x, double t) {
  double q = 0.0;
  if (p.S0 != 0.0) q += p.S0 * std::exp(-p.alpha0 * (x - p.x0) * (x - p.x0) - p.k0 * t);
  if (p.S1 != 0.0) q += p.S1 * std::exp(-p.alpha1 * (x - p.x1) * (x - p.x1) - p.k1 * t);
  return q;
}

// Row i of A follows from the flux difference with F_{i+1/2} = u q_upstream.
// u > 0: q_i - c (q_i - q_{i-1});  u < 0: q_i - c (q_{i+1} - q_i), c = u dt/dx.
// Periodic wraps the neighbour, NoFlux substitutes a zero-gradient ghost
// (q_{-1} = q_0, q_{nx} = q_{nx-1}), which makes the inflow row the identity.
StepOperator::StepOperator(const Grid& grid, double u, BoundaryKind bc) : nx_(grid.nx), rows_(grid.nx) {
  const double c = u * grid.dt() / grid.dx();
  for (int i = 0; i < nx_; ++i) {
    Row& row = rows_[i];
    if (c == 0.0) {
      row = {{i, i}, {1.0, 0.0}, 1};
      continue;
    }
    int nb = c > 0.0 ? i - 1 : i + 1;
    const double a = std::abs(c);
    if (nb < 0 || nb >= nx_) {
      if (bc == BoundaryKind::Periodic) {
        nb = (nb + nx_) % nx_;
      } else {
        row = {{i, i}, {1.0, 0.0}, 1};
        continue;
      }
    }
    row = {{i, nb}, {1.0 - a, a}, 2};
  }
}

void StepOperator::apply(std::span<const double> in, std::span<double> out) const {
  for (int i = 0; i < nx_; ++i) {
    const Row& row = rows_[i];
    double s = row.w[0] * in[row.col[0]];
    if (row.count == 2) s += row.w[1] * in[row.col[1]];
    out[i] = s;
  }
}

void StepOperator::apply_transpose(std::span<const double> in, std::span<double> out) const {
  for (int j = 0; j < nx_; ++j) out[j] = 0.0;
  for (int i = 0; i < nx_; ++i) {
    const Row& row = rows_[i];
    out[row.col[0]] += row.w[0] * in[i];
    if (row.count == 2) out[row.col[1]] += row.w[1] * in[i];
  }
}

TransportModel::TransportModel(const Grid& grid, double u, BoundaryKind bc)
    : grid_((grid.check_cfl(u), grid)), u_(u), bc_(bc), step_(grid, u, bc) {}

FieldST solve_forward(const TransportModel& model, const SourceParams& source, const FieldST* forcing,
                      std::span<const double> q_init) {
  const Grid& g = model.grid();
  if (q_init.size() != static_cast<std::size_t>(g.nx)) {
    throw Error(ErrorKind::Shape, "initial condition length " + std::to_string(q_init.size()) +
                                      " != nx " + std::to_string(g.nx));
  }
  if (forcing != nullptr) require_same_grid(g, forcing->grid(), "solve_forward forcing");

  const bool has_source = source.S0 != 0.0 || source.S1 != 0.0;
  std::vector<double> q_src;
  if (has_source) q_src.resize(g.nx);

  FieldST q(g);
  std::copy(q_init.begin(), q_init.end(), q.level(0).begin());
  const double dt = g.dt();
  for (int n = 0; n + 1 < g.nt; ++n) {
    auto next = q.level(n + 1);
    model.step().apply(q.level(n), next);
    if (has_source) {
      const double t = g.t_level(n);
      for (int i = 0; i < g.nx; ++i) next[i] += dt * source_eval(source, g.x_center(i), t);
    }
    if (forcing != nullptr) {
      const auto f = forcing->level(n);
      for (int i = 0; i < g.nx; ++i) next[i] += dt * f[i];
    }
  }
  return q;
}

// With p^n the sensitivity of sum_m a_m H_m q to q^n:
//   p^{nt-1} = D^{nt-1},  p^n = A^T p^{n+1} + D^n,
// where D^n collects the stencil deposits on level n. The forcing f^n enters
// q^{n+1} with factor dt, so the Green's function of the forcing is
// dt p^{n+1} / (dx dt) = p^{n+1} / dx, and that of the initial state p^0 / dx.
AdjointField solve_adjoint(const TransportModel& model, std::span<const Impulse> impulses) {
  const Grid& g = model.grid();
  FieldST deposits(g);
  for (const Impulse& imp : impulses) bilinear_stencil(g, imp.x, imp.t).deposit(deposits, imp.amplitude);

  AdjointField out{FieldST(g), std::vector<double>(g.nx, 0.0)};
  const double inv_dx = 1.0 / g.dx();
  std::vector<double> p(deposits.level(g.nt - 1).begin(), deposits.level(g.nt - 1).end());
  std::vector<double> tmp(g.nx);
  for (int n = g.nt - 2; n >= 0; --n) {
    auto lam = out.field.level(n);
    for (int i = 0; i < g.nx; ++i) lam[i] = p[i] * inv_dx;
    model.step().apply_transpose(p, tmp);
    const auto dep = deposits.level(n);
    for (int i = 0; i < g.nx; ++i) p[i] = tmp[i] + dep[i];
  }
  for (int i = 0; i < g.nx; ++i) out.initial[i] = p[i] * inv_dx;
  return out;
}

Eigen::MatrixXd build_step_matrix(const TransportModel& model, int max_cells) {
  const int nx = model.grid().nx;
  if (nx > max_cells) {
    throw Error(ErrorKind::Shape, "step matrix of " + std::to_string(nx) + " cells exceeds the size guard");
  }
  Eigen::MatrixXd a(nx, nx);
  std::vector<double> e(nx, 0.0), col(nx);
  for (int j = 0; j < nx; ++j) {
    e[j] = 1.0;
    model.step().apply(e, col);
    for (int i = 0; i < nx; ++i) a(i, j) = col[i];
    e[j] = 0.0;
  }
  return a;
}

}  // namespace repvar

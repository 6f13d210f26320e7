#include "repvar/grid.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "repvar/error.hpp"

namespace repvar {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Cfl: return "cfl";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Selection: return "selection";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

const char* to_string(BoundaryKind bc) {
  return bc == BoundaryKind::Periodic ? "periodic" : "no_flux";
}

BoundaryKind boundary_from_string(std::string_view name) {
  if (name == "periodic") return BoundaryKind::Periodic;
  if (name == "no_flux" || name == "noflux" || name == "no flux") return BoundaryKind::NoFlux;
  throw Error(ErrorKind::Config, "unknown boundary condition '" + std::string(name) + "'", "boundary");
}

Grid Grid::make(double x_min, double x_max, double t_min, double t_max, int nx, int nt) {
  if (nx < 2) throw Error(ErrorKind::Config, "grid needs nx >= 2", "grid.nx");
  if (nt < 2) throw Error(ErrorKind::Config, "grid needs nt >= 2", "grid.nt");
  if (!(x_max > x_min)) throw Error(ErrorKind::Config, "grid needs x_max > x_min", "grid.x_max");
  if (!(t_max > t_min)) throw Error(ErrorKind::Config, "grid needs t_max > t_min", "grid.t_max");
  return Grid{x_min, x_max, t_min, t_max, nx, nt};
}

double Grid::courant(double u) const { return std::abs(u) * dt() / dx(); }

void Grid::check_cfl(double u) const {
  const double c = courant(u);
  if (!(c <= 1.0)) {
    std::ostringstream msg;
    msg << "CFL violated: |u| dt/dx = " << c << " > 1 (u=" << u << ", dt=" << dt() << ", dx=" << dx() << ")";
    throw Error(ErrorKind::Cfl, msg.str(), "wind");
  }
}

bool FieldST::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void FieldST::axpy(double a, const FieldST& other) {
  require_same_grid(grid_, other.grid_, "axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * other.values_[k];
}

double grid_dot(const FieldST& a, const FieldST& b) {
  require_same_grid(a.grid_, b.grid_, "grid_dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values_.size(); ++k) s += a.values_[k] * b.values_[k];
  return s * a.grid_.dx() * a.grid_.dt();
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorKind::Shape, std::string(what) + ": fields live on different grids");
}

}  // namespace repvar

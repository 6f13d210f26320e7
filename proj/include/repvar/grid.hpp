#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace repvar {

enum class BoundaryKind { Periodic, NoFlux };

const char* to_string(BoundaryKind bc);
BoundaryKind boundary_from_string(const std::string_view name);

/// Space-time discretization. Space is split into nx finite-volume cells with
/// centers x_min + (i + 1/2) dx; time carries nt levels t_min + n dt, so the
/// last level sits exactly on t_max.
struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  double t_min = 0.0;
  double t_max = 1.0;
  int nx = 2;
  int nt = 2;

  /// Throws Error(Config) unless nx, nt >= 2 and both extents are positive.
  static Grid make(double x_min, double x_max, double t_min, double t_max, int nx, int nt);

  double dx() const { return (x_max - x_min) / nx; }
  double dt() const { return (t_max - t_min) / (nt - 1); }
  double x_center(int i) const { return x_min + (i + 0.5) * dx(); }
  double t_level(int n) const { return t_min + n * dt(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(nt); }

  bool contains(double x, double t) const {
    return x >= x_min && x <= x_max && t >= t_min && t <= t_max;
  }

  /// Courant number |u| dt / dx.
  double courant(double u) const;
  /// Throws Error(Cfl) when the Courant number exceeds one.
  void check_cfl(double u) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Scalar field over the full grid, stored time-level major: value(n, i) at n*nx + i.
class FieldST {
 public:
  FieldST() = default;
  explicit FieldST(const Grid& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}

  const Grid& grid() const { return grid_; }

  double& operator()(int n, int i) { return values_[index(n, i)]; }
  double operator()(int n, int i) const { return values_[index(n, i)]; }

  std::span<double> level(int n) {
    return {values_.data() + static_cast<std::size_t>(n) * grid_.nx, static_cast<std::size_t>(grid_.nx)};
  }
  std::span<const double> level(int n) const {
    return {values_.data() + static_cast<std::size_t>(n) * grid_.nx, static_cast<std::size_t>(grid_.nx)};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  /// this += a * other (grids must match).
  void axpy(double a, const FieldST& other);

  /// Grid inner product sum(a * b) dx dt.
  friend double grid_dot(const FieldST& a, const FieldST& b);

 private:
  std::size_t index(int n, int i) const {
    return static_cast<std::size_t>(n) * grid_.nx + static_cast<std::size_t>(i);
  }

  Grid grid_{};
  std::vector<double> values_;
};

/// Throws Error(Shape) when the two grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace repvar

#pragma once

#include <array>
#include <span>

#include "repvar/grid.hpp"

namespace repvar {

/// Bilinear space-time interpolation weights of one point onto the grid. Up to
/// four (level, cell, weight) entries; weights are non-negative and sum to one.
/// Outside the outermost cell centers the spatial weight is clamped to the edge
/// cell (constant extrapolation), independent of the boundary condition.
struct Stencil {
  struct Entry {
    int n = 0;
    int i = 0;
    double w = 0.0;
  };
  std::array<Entry, 4> entries{};
  int count = 0;

  std::span<const Entry> view() const { return {entries.data(), static_cast<std::size_t>(count)}; }
  double apply(const FieldST& field) const;
  /// field += amplitude * weights (the transpose of apply).
  void deposit(FieldST& field, double amplitude) const;
};

/// Throws Error(Domain) when (x, t) lies outside the closed grid rectangle.
Stencil bilinear_stencil(const Grid& grid, double x, double t);

}  // namespace repvar

#include "repvar/interp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "repvar/error.hpp"

namespace repvar {

double Stencil::apply(const FieldST& field) const {
  double s = 0.0;
  for (const auto& e : view()) s += e.w * field(e.n, e.i);
  return s;
}

void Stencil::deposit(FieldST& field, double amplitude) const {
  for (const auto& e : view()) field(e.n, e.i) += amplitude * e.w;
}

namespace {

// Lower node index and weight of the upper node for a coordinate on a uniform
// node set, clamped to [0, count-1].
std::pair<int, double> locate(double s, int count) {
  if (s <= 0.0) return {0, 0.0};
  if (s >= count - 1) return {count - 2, 1.0};
  const int lo = std::min(static_cast<int>(std::floor(s)), count - 2);
  return {lo, s - lo};
}

}  // namespace

Stencil bilinear_stencil(const Grid& grid, double x, double t) {
  if (!std::isfinite(x) || !std::isfinite(t) || !grid.contains(x, t)) {
    std::ostringstream msg;
    msg << "point (" << x << ", " << t << ") outside [" << grid.x_min << ", " << grid.x_max << "] x ["
        << grid.t_min << ", " << grid.t_max << "]";
    throw Error(ErrorKind::Domain, msg.str());
  }
  const auto [i0, wx] = locate((x - grid.x_min) / grid.dx() - 0.5, grid.nx);
  const auto [n0, wt] = locate((t - grid.t_min) / grid.dt(), grid.nt);

  Stencil s;
  const double wxs[2] = {1.0 - wx, wx};
  const double wts[2] = {1.0 - wt, wt};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double w = wts[a] * wxs[b];
      if (w == 0.0) continue;
      s.entries[s.count++] = {n0 + a, i0 + b, w};
    }
  }
  return s;
}

}  // namespace repvar

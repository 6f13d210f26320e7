#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "repvar/grid.hpp"
#include "repvar/interp.hpp"
#include "repvar/parallel.hpp"

namespace repvar {

struct SpaceTimePoint {
  double x = 0.0;
  double t = 0.0;
};

struct ObsPoint {
  double x = 0.0;
  double t = 0.0;
  double d = 0.0;
  double sigma = 0.0;
};

/// M point measurements with their interpolation stencils (the discrete H_m).
struct ObservationSet {
  std::vector<ObsPoint> points;
  std::vector<Stencil> stencils;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  std::vector<SpaceTimePoint> locations() const;
  std::vector<double> data() const;
  std::vector<double> sigmas() const;

  /// Builds stencils for the points. Throws Error(Domain) / Error(Config).
  static ObservationSet make(const Grid& grid, std::vector<ObsPoint> points, std::uint64_t seed = 0);
  /// The same locations and noise levels with a different data vector.
  ObservationSet with_data(std::span<const double> d) const;
  /// All points except index k.
  ObservationSet without(std::size_t k) const;
};

/// M points i.i.d. uniform over the open rectangle (x_min, x_max) x (t_min, t_max).
std::vector<SpaceTimePoint> sample_locations(const Grid& grid, int count, std::uint64_t seed);

/// Bilinear interpolation of `field` at each point. Throws Error(Domain).
std::vector<double> interpolate(const FieldST& field, std::span<const SpaceTimePoint> points);
std::vector<double> interpolate(const FieldST& field, std::span<const Stencil> stencils);

/// d_m = H_m(truth) + eps_m with eps_m ~ N(0, sigma_m^2), sigma_m = sigma_level |H_m(truth)|,
/// raised to `sigma_floor` when that is larger.
ObservationSet generate_observations(const FieldST& truth, std::span<const SpaceTimePoint> locations,
                                     double sigma_level, std::uint64_t seed, double sigma_floor = 0.0);

/// sigma_level |truth_m|, raised to sigma_floor.
std::vector<double> noise_sigmas(std::span<const double> truth_at_obs, double sigma_level, double sigma_floor = 0.0);

/// Root mean square of a - b.
double rmse(std::span<const double> a, std::span<const double> b);

struct FilteredDataset {
  Eigen::MatrixXd columns;  // M x n_keep, each column one accepted data vector
  std::vector<double> column_rmse;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  int attempts = 0;  // candidate draws generated to fill the columns
  std::vector<double> sigma;  // per-point noise standard deviation
};

/// Estimates mean/std of RMSE(d, truth) over `n_mc` noise draws, then keeps the
/// first `n_keep` fresh draws whose RMSE lies in [mean - std, mean + std].
/// Gives up after 50 * n_keep candidates with Error(Selection).
FilteredDataset calibrate_and_filter(std::span<const double> truth_at_obs, double sigma_level, int n_mc,
                                     int n_keep, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Parallel,
                                     double sigma_floor = 0.0);

/// Stencil form of the observation operator, assembled as a dense M x (nt*nx) matrix.
Eigen::MatrixXd observation_matrix(const Grid& grid, std::span<const Stencil> stencils);

}  // namespace repvar

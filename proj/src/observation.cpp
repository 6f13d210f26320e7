#include "repvar/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "repvar/error.hpp"

namespace repvar {

std::vector<SpaceTimePoint> ObservationSet::locations() const {
  std::vector<SpaceTimePoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p.x, p.t});
  return out;
}

std::vector<double> ObservationSet::data() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.d);
  return out;
}

std::vector<double> ObservationSet::sigmas() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.sigma);
  return out;
}

ObservationSet ObservationSet::make(const Grid& grid, std::vector<ObsPoint> points, std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorKind::Config, "observation set needs at least one point", "observations");
  ObservationSet set;
  set.seed = seed;
  set.stencils.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.sigma >= 0.0)) throw Error(ErrorKind::Config, "observation sigma must be >= 0", "observations.sigma");
    set.stencils.push_back(bilinear_stencil(grid, p.x, p.t));
  }
  set.points = std::move(points);
  return set;
}

ObservationSet ObservationSet::with_data(std::span<const double> d) const {
  if (d.size() != points.size()) throw Error(ErrorKind::Shape, "data vector length does not match observation count");
  ObservationSet out = *this;
  for (std::size_t m = 0; m < d.size(); ++m) out.points[m].d = d[m];
  return out;
}

ObservationSet ObservationSet::without(std::size_t k) const {
  ObservationSet out;
  out.seed = seed;
  for (std::size_t m = 0; m < points.size(); ++m) {
    if (m == k) continue;
    out.points.push_back(points[m]);
    out.stencils.push_back(stencils[m]);
  }
  return out;
}

std::vector<SpaceTimePoint> sample_locations(const Grid& grid, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::Config, "observation count must be >= 1", "observations.count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(grid.x_min, grid.x_max);
  std::uniform_real_distribution<double> ut(grid.t_min, grid.t_max);
  auto open_draw = [&rng](auto& dist, double lo) {
    double v = dist(rng);
    while (v == lo) v = dist(rng);
    return v;
  };
  std::vector<SpaceTimePoint> out(count);
  for (auto& p : out) {
    p.x = open_draw(ux, grid.x_min);
    p.t = open_draw(ut, grid.t_min);
  }
  return out;
}

std::vector<double> interpolate(const FieldST& field, std::span<const Stencil> stencils) {
  std::vector<double> out;
  out.reserve(stencils.size());
  for (const auto& s : stencils) out.push_back(s.apply(field));
  return out;
}

std::vector<double> interpolate(const FieldST& field, std::span<const SpaceTimePoint> points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(bilinear_stencil(field.grid(), p.x, p.t).apply(field));
  return out;
}

std::vector<double> noise_sigmas(std::span<const double> truth_at_obs, double sigma_level, double sigma_floor) {
  if (!(sigma_level >= 0.0)) throw Error(ErrorKind::Config, "noise level must be >= 0", "noise_level");
  if (!(sigma_floor >= 0.0)) throw Error(ErrorKind::Config, "noise floor must be >= 0", "sigma_floor");
  std::vector<double> out(truth_at_obs.size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = std::max(sigma_level * std::abs(truth_at_obs[m]), sigma_floor);
  return out;
}

ObservationSet generate_observations(const FieldST& truth, std::span<const SpaceTimePoint> locations,
                                     double sigma_level, std::uint64_t seed, double sigma_floor) {
  if (!(sigma_level >= 0.0)) throw Error(ErrorKind::Config, "noise level must be >= 0", "noise_level");
  if (!(sigma_floor >= 0.0)) throw Error(ErrorKind::Config, "noise floor must be >= 0", "sigma_floor");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ObsPoint> points;
  points.reserve(locations.size());
  for (const auto& loc : locations) {
    const double q = bilinear_stencil(truth.grid(), loc.x, loc.t).apply(truth);
    const double sigma = std::max(sigma_level * std::abs(q), sigma_floor);
    points.push_back({loc.x, loc.t, q + sigma * normal(rng), sigma});
  }
  return ObservationSet::make(truth.grid(), std::move(points), seed);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "rmse: length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

namespace {

// One noisy draw of the data vector; stream-seeded so any draw can be replayed.
void draw_column(std::span<const double> truth, std::span<const double> sigma, std::uint64_t seed,
                 std::span<double> out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t m = 0; m < truth.size(); ++m) out[m] = truth[m] + sigma[m] * normal(rng);
}

}  // namespace

FilteredDataset calibrate_and_filter(std::span<const double> truth_at_obs, double sigma_level, int n_mc,
                                     int n_keep, std::uint64_t seed, ExecPolicy policy, double sigma_floor) {
  if (n_keep < 1 || n_mc < n_keep) {
    throw Error(ErrorKind::Config, "calibration needs n_mc >= n_keep >= 1", "observations.n_mc");
  }
  const int m_count = static_cast<int>(truth_at_obs.size());
  const std::vector<double> sigma = noise_sigmas(truth_at_obs, sigma_level, sigma_floor);

  const std::uint64_t calib_seed = derive_seed(seed, 0);
  const std::uint64_t cand_seed = derive_seed(seed, 1);
  const bool par = policy == ExecPolicy::Parallel;

  std::vector<double> calib(n_mc);
#pragma omp parallel if (par)
  {
    std::vector<double> col(m_count);
#pragma omp for schedule(static)
    for (int j = 0; j < n_mc; ++j) {
      draw_column(truth_at_obs, sigma, derive_seed(calib_seed, j), col);
      calib[j] = rmse(col, truth_at_obs);
    }
  }
  const double mean = std::accumulate(calib.begin(), calib.end(), 0.0) / n_mc;
  double var = 0.0;
  for (double r : calib) var += (r - mean) * (r - mean);
  const double sd = n_mc > 1 ? std::sqrt(var / (n_mc - 1)) : 0.0;
  const double lo = mean - sd;
  const double hi = mean + sd;

  FilteredDataset out;
  out.columns.resize(m_count, n_keep);
  out.rmse_mean = mean;
  out.rmse_std = sd;
  out.sigma = sigma;

  const int budget = 50 * n_keep;
  const int chunk = std::max(64, 2 * n_keep);
  Eigen::MatrixXd block(m_count, chunk);
  std::vector<double> block_rmse(chunk);
  int kept = 0;
  for (int start = 0; start < budget && kept < n_keep; start += chunk) {
    const int len = std::min(chunk, budget - start);
#pragma omp parallel for schedule(static) if (par)
    for (int j = 0; j < len; ++j) {
      std::span<double> col(block.col(j).data(), m_count);
      draw_column(truth_at_obs, sigma, derive_seed(cand_seed, start + j), col);
      block_rmse[j] = rmse(col, truth_at_obs);
    }
    for (int j = 0; j < len && kept < n_keep; ++j) {
      if (block_rmse[j] >= lo && block_rmse[j] <= hi) {
        out.columns.col(kept) = block.col(j);
        out.column_rmse.push_back(block_rmse[j]);
        ++kept;
        out.attempts = start + j + 1;
      }
    }
    if (kept < n_keep) out.attempts = start + len;
  }
  if (kept < n_keep) {
    throw Error(ErrorKind::Selection, "only " + std::to_string(kept) + " of " + std::to_string(n_keep) +
                                          " data columns fell inside the RMSE band after " +
                                          std::to_string(out.attempts) + " draws");
  }
  return out;
}

Eigen::MatrixXd observation_matrix(const Grid& grid, std::span<const Stencil> stencils) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(stencils.size()),
                                            static_cast<Eigen::Index>(grid.size()));
  for (std::size_t m = 0; m < stencils.size(); ++m) {
    for (const auto& e : stencils[m].view()) {
      h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(e.n) * grid.nx + e.i) += e.w;
    }
  }
  return h;
}

}  // namespace repvar

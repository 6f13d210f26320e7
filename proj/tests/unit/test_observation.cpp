#include <doctest.h>

#include <cmath>

#include "repvar/error.hpp"
#include "repvar/observation.hpp"

using namespace repvar;

TEST_CASE("bilinear stencil reproduces bilinear functions") {
  const Grid g = Grid::make(0.0, 2.0, 0.0, 1.0, 10, 9);
  FieldST f(g);
  auto fn = [](double x, double t) { return 1.5 + 2.0 * x - 3.0 * t + 0.5 * x * t; };
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) f(n, i) = fn(g.x_center(i), g.t_level(n));
  for (auto [x, t] : {std::pair{0.37, 0.41}, {1.9, 0.99}, {0.15, 0.0}, {1.2, 1.0}}) {
    CHECK(bilinear_stencil(g, x, t).apply(f) == doctest::Approx(fn(x, t)).epsilon(1e-13));
  }
  // inside the domain but outside the outermost centers: constant extension
  CHECK(bilinear_stencil(g, 0.01, 0.5).apply(f) == doctest::Approx(fn(g.x_center(0), 0.5)));
}

TEST_CASE("stencil weights sum to one and deposit is the transpose") {
  const Grid g = Grid::make(0.0, 1.0, 0.0, 1.0, 6, 7);
  const Stencil s = bilinear_stencil(g, 0.444, 0.777);
  double sum = 0.0;
  for (const auto& e : s.view()) sum += e.w;
  CHECK(sum == doctest::Approx(1.0));
  FieldST a(g), b(g);
  for (std::size_t k = 0; k < a.values().size(); ++k) a.values()[k] = std::cos(0.3 * k);
  s.deposit(b, 2.0);
  double dot = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) dot += a.values()[k] * b.values()[k];
  CHECK(dot == doctest::Approx(2.0 * s.apply(a)));
}

TEST_CASE("points outside the grid are rejected") {
  const Grid g = Grid::make(0.0, 1.0, 0.0, 1.0, 6, 7);
  CHECK_THROWS_AS(bilinear_stencil(g, 1.5, 0.5), Error);
  CHECK_THROWS_AS(bilinear_stencil(g, 0.5, -0.1), Error);
}

TEST_CASE("sampled locations are reproducible and inside the rectangle") {
  const Grid g = Grid::make(30.0, 45.0, 0.0, 20.0, 200, 445);
  const auto a = sample_locations(g, 49, 5);
  const auto b = sample_locations(g, 49, 5);
  const auto c = sample_locations(g, 49, 6);
  REQUIRE(a.size() == 49);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].t == b[k].t);
    CHECK(g.contains(a[k].x, a[k].t));
    differs = differs || a[k].x != c[k].x;
  }
  CHECK(differs);
}

TEST_CASE("noise level is relative to |truth| with an optional floor") {
  const std::vector<double> truth{10.0, -2.0, 0.0};
  const auto s = noise_sigmas(truth, 0.5);
  CHECK(s[0] == 5.0);
  CHECK(s[1] == 1.0);
  CHECK(s[2] == 0.0);
  const auto f = noise_sigmas(truth, 0.5, 2.0);
  CHECK(f[0] == 5.0);
  CHECK(f[1] == 2.0);
  CHECK(f[2] == 2.0);
}

TEST_CASE("calibrated columns lie in the one-sigma RMSE band") {
  std::vector<double> truth(20);
  for (int k = 0; k < 20; ++k) truth[k] = 1.0 + k;
  const FilteredDataset d = calibrate_and_filter(truth, 0.3, 20000, 200, 77);
  REQUIRE(d.columns.cols() == 200);
  CHECK(d.attempts >= 200);
  for (double r : d.column_rmse) {
    CHECK(r >= d.rmse_mean - d.rmse_std);
    CHECK(r <= d.rmse_mean + d.rmse_std);
  }
  // roughly 68% acceptance for a near-Gaussian RMSE distribution
  CHECK(static_cast<double>(200) / d.attempts > 0.5);
  CHECK(static_cast<double>(200) / d.attempts < 0.85);
  for (Eigen::Index j = 0; j < d.columns.cols(); ++j) {
    std::vector<double> col(d.columns.col(j).data(), d.columns.col(j).data() + 20);
    CHECK(rmse(col, truth) == doctest::Approx(d.column_rmse[j]));
  }

  const FilteredDataset s = calibrate_and_filter(truth, 0.3, 20000, 200, 77, ExecPolicy::Serial);
  CHECK((s.columns - d.columns).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.attempts == d.attempts);
}

TEST_CASE("zero noise keeps the truth") {
  const std::vector<double> truth{1.0, 2.0, 3.0};
  const FilteredDataset d = calibrate_and_filter(truth, 0.0, 100, 10, 1);
  for (Eigen::Index j = 0; j < 10; ++j)
    for (int m = 0; m < 3; ++m) CHECK(d.columns(m, j) == truth[m]);
  CHECK(d.rmse_mean == 0.0);
}

TEST_CASE("generated observations interpolate the truth") {
  const Grid g = Grid::make(0.0, 1.0, 0.0, 1.0, 8, 9);
  FieldST truth(g, 3.0);
  const auto locs = sample_locations(g, 5, 1);
  const ObservationSet obs = generate_observations(truth, locs, 0.0, 2);
  for (const auto& p : obs.points) CHECK(p.d == doctest::Approx(3.0));
  const ObservationSet noisy = generate_observations(truth, locs, 0.1, 2);
  for (const auto& p : noisy.points) CHECK(p.sigma == doctest::Approx(0.3));
  CHECK(noisy.without(1).size() == 4);
  const Eigen::MatrixXd H = observation_matrix(g, obs.stencils);
  CHECK(H.rows() == 5);
  CHECK(H.cols() == 72);
  for (int r = 0; r < 5; ++r) CHECK(H.row(r).sum() == doctest::Approx(1.0));
}

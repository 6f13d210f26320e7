#include <doctest.h>

#include <cmath>
#include <random>

#include "repvar/covariance.hpp"
#include "repvar/error.hpp"
#include "repvar/validation.hpp"

using namespace repvar;

namespace {

FieldST random_field(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n;
  FieldST f(g);
  for (double& v : f.values()) v = n(rng);
  return f;
}

}  // namespace

TEST_CASE("isotropic C_f scales by the variance") {
  const Grid g = Grid::make(0, 1, 0, 1, 5, 4);
  const FieldST lam = random_field(g, 1);
  const FieldST out = apply_cf(CovarianceSpec::isotropic(2.5), lam);
  for (std::size_t k = 0; k < out.values().size(); ++k) CHECK(out.values()[k] == 2.5 * lam.values()[k]);
  const auto ci = apply_ci(CovarianceSpec::isotropic(1.0, 0.4), std::vector<double>{1.0, -2.0});
  CHECK(ci[0] == doctest::Approx(0.4));
  CHECK(ci[1] == doctest::Approx(-0.8));
}

TEST_CASE("kernel values") {
  const auto s = CovarianceSpec::non_isotropic(2.0, 1.5, 3.0);
  CHECK(kernel_eval(s, 1.0, 2.0, 1.0, 2.0) == 2.0);
  CHECK(kernel_eval(s, 0.0, 0.0, 1.5, 3.0) == doctest::Approx(2.0 * std::exp(-0.5) * std::exp(-1.0)));
  CHECK_THROWS_AS(kernel_eval(CovarianceSpec::isotropic(1.0), 0, 0, 0, 0), Error);
}

TEST_CASE("separable C_f equals the dense double sum") {
  const CheckResult r = check_separable_convolution();
  CHECK_MESSAGE(r.pass, r.worst);
}

TEST_CASE("non-isotropic C_f is symmetric positive semidefinite in the grid inner product") {
  const Grid g = Grid::make(0, 3, 0, 2, 9, 8);
  const auto spec = CovarianceSpec::non_isotropic(0.8, 0.7, 1.2);
  const FieldST a = random_field(g, 2), b = random_field(g, 3);
  const FieldST ca = apply_cf(spec, a), cb = apply_cf(spec, b);
  CHECK(grid_dot(a, cb) == doctest::Approx(grid_dot(ca, b)).epsilon(1e-12));
  CHECK(grid_dot(a, ca) > 0.0);
}

TEST_CASE("serial and parallel applications agree bit for bit") {
  const Grid g = Grid::make(0, 3, 0, 2, 40, 30);
  const auto spec = CovarianceSpec::non_isotropic(0.8, 0.7, 1.2);
  const FieldST a = random_field(g, 4);
  const FieldST s = apply_cf(spec, a, ExecPolicy::Serial), p = apply_cf(spec, a, ExecPolicy::Parallel);
  for (std::size_t k = 0; k < s.values().size(); ++k) CHECK(s.values()[k] == p.values()[k]);
}

TEST_CASE("invalid covariance parameters name the key") {
  auto key_of = [](const CovarianceSpec& s) {
    try {
      s.validate();
    } catch (const Error& e) {
      return e.key();
    }
    return std::string();
  };
  CHECK(key_of(CovarianceSpec::isotropic(-1.0)) == "covariance.sigma_f2");
  CHECK(key_of(CovarianceSpec::non_isotropic(1.0, 0.0, 1.0)) == "covariance.l_f");
  CHECK(key_of(CovarianceSpec::non_isotropic(1.0, 1.0, -2.0)) == "covariance.tau_f");
  CHECK(key_of(CovarianceSpec::isotropic(1.0, -0.1)) == "covariance.ci_variance");
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repvar/covariance.hpp"
#include "repvar/observation.hpp"
#include "repvar/transport.hpp"

namespace repvar {

/// A weak-constraint problem small enough for the dense full-space solver.
struct TinyInstance {
  std::string label;
  TransportModel model;
  SourceParams source;
  std::vector<double> q_init;
  CovarianceSpec spec;
  ObservationSet obs;
  FieldST q_f;
};

/// Six instances with nx <= 25, nt <= 20, M <= 8, both boundary conditions,
/// sigma_f2 in {0.1, 1, 10} and exact as well as uncertain initial states.
std::vector<TinyInstance> tiny_instances(std::uint64_t seed = 7);

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // largest observed error
  double tolerance = 0.0;
  std::string detail;
};

/// max|a - b| / max(max|b|, tiny)
double relative_error(std::span<const double> a, std::span<const double> b);

CheckResult check_oracle_equivalence(const std::vector<TinyInstance>& cases, double tol = 1e-8);
CheckResult check_gcv_loo(const std::vector<TinyInstance>& cases, double tol = 1e-8);
CheckResult check_penalty_identity(const std::vector<TinyInstance>& cases, double tol = 1e-10);
/// <w, H q(F, q0)> against <F, adjoint> + dx <q0, adjoint initial> for random
/// forcings, initial states and impulse weights.
CheckResult check_adjoint_duality(const TransportModel& model, int pairs, std::uint64_t seed, double tol = 1e-12);
/// Separable non-isotropic C_f against the dense double sum, grids up to 12 x 10.
CheckResult check_separable_convolution(double tol = 1e-12);

enum class ValidationSize { Tiny, Full };

/// Tiny: the checks above on the tiny instances and the adjoint on a small grid.
/// Full: additionally the adjoint duality on both experiment grid presets.
std::vector<CheckResult> run_validation(ValidationSize size);

}  // namespace repvar

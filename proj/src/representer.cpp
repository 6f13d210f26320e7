#include "repvar/representer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "repvar/error.hpp"

namespace repvar {

FieldST representer_from_adjoint(const TransportModel& model, const ModelErrorCovariance& cov,
                                 const AdjointField& alpha) {
  const FieldST forcing = cov.apply(alpha.field, ExecPolicy::Serial);
  const std::vector<double> q0 = cov.apply_initial(alpha.initial);
  return solve_forward(model, SourceParams{}, &forcing, q0);
}

RepresenterPair compute_representer_pair(const TransportModel& model, const CovarianceSpec& spec,
                                         const ObservationSet& obs, std::size_t m) {
  if (m >= obs.size()) throw Error(ErrorKind::Shape, "representer index out of range");
  spec.validate();
  const Impulse imp{obs.points[m].x, obs.points[m].t, 1.0};
  AdjointField alpha = solve_adjoint(model, std::span<const Impulse>(&imp, 1));
  const ModelErrorCovariance cov(model.grid(), spec);
  FieldST r = representer_from_adjoint(model, cov, alpha);
  return {std::move(alpha), std::move(r)};
}

double Penalties::identity_defect() const {
  const double scale = std::max(std::abs(total), std::numeric_limits<double>::min());
  return std::abs(data + model - total) / scale;
}

DataSpaceSystem DataSpaceSystem::solve(Eigen::MatrixXd R, Eigen::VectorXd c_eps, Eigen::VectorXd h) {
  const Eigen::Index m = h.size();
  if (R.rows() != m || R.cols() != m || c_eps.size() != m) {
    throw Error(ErrorKind::Shape, "data-space system sizes disagree");
  }
  if (m == 0) throw Error(ErrorKind::Shape, "data-space system needs at least one datum");
  if (!R.allFinite() || !h.allFinite() || !c_eps.allFinite()) {
    throw Error(ErrorKind::Degenerate, "non-finite entries in the data-space system");
  }
  if ((c_eps.array() < 0.0).any()) throw Error(ErrorKind::Config, "negative observation variance", "sigma");

  DataSpaceSystem s;
  s.raw_asymmetry_ = (R - R.transpose()).norm() / (1.0 + R.norm());
  s.r_ = 0.5 * (R + R.transpose());
  s.sigma_ = c_eps.cwiseSqrt();
  s.c_eps_ = std::move(c_eps);
  s.h_ = std::move(h);
  s.llt_.compute(s.P());
  if (s.llt_.info() != Eigen::Success || !(s.llt_.rcond() > 0.0)) {
    throw Error(ErrorKind::Degenerate, "R + C_eps is not numerically positive definite");
  }
  s.beta_ = s.llt_.solve(s.h_);
  if (!s.beta_.allFinite()) throw Error(ErrorKind::Degenerate, "data-space solve produced non-finite values");
  return s;
}

DataSpaceSystem DataSpaceSystem::from_sigma(Eigen::MatrixXd R, const Eigen::VectorXd& sigma, Eigen::VectorXd h) {
  if ((sigma.array() < 0.0).any()) throw Error(ErrorKind::Config, "negative observation sigma", "sigma");
  DataSpaceSystem s = solve(std::move(R), sigma.array().square().matrix(), std::move(h));
  s.sigma_ = sigma;
  return s;
}

Eigen::MatrixXd DataSpaceSystem::P() const {
  Eigen::MatrixXd p = r_;
  p.diagonal() += c_eps_;
  return p;
}

double DataSpaceSystem::condition_estimate() const { return 1.0 / llt_.rcond(); }

Eigen::VectorXd DataSpaceSystem::solve_with(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }

Eigen::VectorXd DataSpaceSystem::inverse_diagonal() const {
  const Eigen::MatrixXd inv = llt_.solve(Eigen::MatrixXd::Identity(size(), size()));
  return inv.diagonal();
}

Eigen::VectorXd DataSpaceSystem::influence_diagonal() const {
  return (1.0 - (c_eps_.array() * inverse_diagonal().array())).matrix();
}

Eigen::VectorXd DataSpaceSystem::misfit() const { return -(c_eps_.array() * beta_.array()).matrix(); }

Penalties penalties(const DataSpaceSystem& sys) {
  Penalties p;
  const Eigen::VectorXd& b = sys.beta();
  p.data = (sys.c_eps().array() * b.array().square()).sum();
  p.model = b.dot(sys.R() * b);
  p.total = sys.h().dot(b);
  return p;
}

RepresenterBasis::RepresenterBasis(TransportModel model, std::vector<Stencil> stencils,
                                   std::vector<SpaceTimePoint> locations, ExecPolicy policy,
                                   std::size_t field_budget_bytes)
    : model_(std::move(model)),
      stencils_(std::move(stencils)),
      locations_(std::move(locations)),
      field_budget_bytes_(field_budget_bytes) {
  if (stencils_.size() != locations_.size()) throw Error(ErrorKind::Shape, "stencil and location counts differ");
  const int m = static_cast<int>(locations_.size());
  adjoints_.resize(m);
  for (const auto& p : locations_) {
    if (!model_.grid().contains(p.x, p.t)) throw Error(ErrorKind::Domain, "observation outside the grid");
  }
  parallel_for(m, policy, [&](int k) {
    const Impulse imp{locations_[k].x, locations_[k].t, 1.0};
    adjoints_[k] = solve_adjoint(model_, std::span<const Impulse>(&imp, 1));
  });
}

std::shared_ptr<const RepresenterBasis> RepresenterBasis::from(const TransportModel& model,
                                                               const ObservationSet& obs, ExecPolicy policy) {
  return std::make_shared<const RepresenterBasis>(model, obs.stencils, obs.locations(), policy);
}

bool RepresenterBasis::can_store_fields() const {
  const double bytes = static_cast<double>(size()) * static_cast<double>(model_.grid().size()) * sizeof(double);
  return bytes <= static_cast<double>(field_budget_bytes_);
}

Eigen::MatrixXd RepresenterBasis::sample_fields(const std::vector<FieldST>& fields) const {
  const Eigen::Index m = static_cast<Eigen::Index>(fields.size());
  Eigen::MatrixXd R(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) R(a, b) = stencils_[b].apply(fields[a]);
  }
  return R;
}

std::vector<FieldST> RepresenterBasis::compute_fields(const CovarianceSpec& spec, ExecPolicy policy) const {
  const ModelErrorCovariance cov(model_.grid(), spec);
  std::vector<FieldST> fields(size());
  parallel_for(static_cast<int>(size()), policy,
               [&](int k) { fields[k] = representer_from_adjoint(model_, cov, adjoints_[k]); });
  return fields;
}

const RepresenterBasis::UnitResponse& RepresenterBasis::unit(bool initial, ExecPolicy policy) const {
  UnitResponse& u = initial ? unit_initial_ : unit_forcing_;
  std::call_once(u.once, [&] {
    const CovarianceSpec spec = initial ? CovarianceSpec::isotropic(0.0, 1.0) : CovarianceSpec::isotropic(1.0, 0.0);
    if (can_store_fields()) {
      u.fields = compute_fields(spec, policy);
      u.R = sample_fields(u.fields);
      return;
    }
    // Over budget: stream one field at a time and keep only its samples.
    const ModelErrorCovariance cov(model_.grid(), spec);
    const Eigen::Index m = static_cast<Eigen::Index>(size());
    u.R.resize(m, m);
    parallel_for(static_cast<int>(m), policy, [&](int a) {
      const FieldST r = representer_from_adjoint(model_, cov, adjoints_[a]);
      for (Eigen::Index b = 0; b < m; ++b) u.R(a, b) = stencils_[b].apply(r);
    });
  });
  return u;
}

Eigen::MatrixXd RepresenterBasis::representer_matrix(const CovarianceSpec& spec, ExecPolicy policy) const {
  spec.validate();
  if (spec.is_isotropic()) {
    const Eigen::Index m = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    if (spec.sigma_f2 != 0.0) R += spec.sigma_f2 * unit(false, policy).R;
    if (spec.ci_variance != 0.0) R += spec.ci_variance * unit(true, policy).R;
    return R;
  }
  const ModelErrorCovariance cov(model_.grid(), spec);
  const Eigen::Index m = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd R(m, m);
  parallel_for(static_cast<int>(m), policy, [&](int a) {
    const FieldST r = representer_from_adjoint(model_, cov, adjoints_[a]);
    for (Eigen::Index b = 0; b < m; ++b) R(a, b) = stencils_[b].apply(r);
  });
  return R;
}

std::vector<FieldST> RepresenterBasis::representer_fields(const CovarianceSpec& spec, ExecPolicy policy) const {
  spec.validate();
  if (!spec.is_isotropic() || !can_store_fields()) return compute_fields(spec, policy);
  const Grid& g = model_.grid();
  std::vector<FieldST> fields(size(), FieldST(g));
  const bool use_f = spec.sigma_f2 != 0.0;
  const bool use_i = spec.ci_variance != 0.0;
  const UnitResponse* uf = use_f ? &unit(false, policy) : nullptr;
  const UnitResponse* ui = use_i ? &unit(true, policy) : nullptr;
  parallel_for(static_cast<int>(size()), policy, [&](int k) {
    if (uf != nullptr) fields[k].axpy(spec.sigma_f2, uf->fields[k]);
    if (ui != nullptr) fields[k].axpy(spec.ci_variance, ui->fields[k]);
  });
  return fields;
}

namespace {

void check_compatible(const RepresenterBasis& basis, const ObservationSet& obs, const FieldST& q_f) {
  require_same_grid(basis.model().grid(), q_f.grid(), "first guess");
  if (obs.size() != basis.size()) throw Error(ErrorKind::Shape, "observation count differs from the basis");
  const auto locs = basis.locations();
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs.points[k].x != locs[k].x || obs.points[k].t != locs[k].t) {
      throw Error(ErrorKind::Shape, "observation locations differ from the basis");
    }
  }
}

}  // namespace

RepresenterSystem assemble_system(const TransportModel& model, const CovarianceSpec& spec,
                                  const ObservationSet& obs, const FieldST& q_f, const AssembleOptions& options) {
  auto basis = std::make_shared<const RepresenterBasis>(model, obs.stencils, obs.locations(), options.policy,
                                                        options.field_budget_bytes);
  return assemble_system(std::move(basis), spec, obs, q_f, options);
}

RepresenterSystem assemble_system(std::shared_ptr<const RepresenterBasis> basis, const CovarianceSpec& spec,
                                  const ObservationSet& obs, const FieldST& q_f, const AssembleOptions& options) {
  if (!basis) throw Error(ErrorKind::Shape, "null representer basis");
  check_compatible(*basis, obs, q_f);
  spec.validate();
  if (!q_f.all_finite()) throw Error(ErrorKind::Degenerate, "first guess has non-finite values");

  const Eigen::Index m = static_cast<Eigen::Index>(obs.size());
  Eigen::VectorXd h(m), sigma(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    h(k) = obs.points[k].d - obs.stencils[k].apply(q_f);
    sigma(k) = obs.points[k].sigma;
  }

  std::vector<FieldST> reps;
  Eigen::MatrixXd R;
  const bool store = basis->can_store_fields() &&
                     static_cast<double>(m) * static_cast<double>(q_f.grid().size()) * sizeof(double) <=
                         static_cast<double>(options.field_budget_bytes);
  if (store) {
    reps = basis->representer_fields(spec, options.policy);
    R.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) R(a, b) = obs.stencils[b].apply(reps[a]);
    }
  } else {
    R = basis->representer_matrix(spec, options.policy);
  }
  DataSpaceSystem data = DataSpaceSystem::from_sigma(std::move(R), sigma, std::move(h));
  return RepresenterSystem{std::move(basis), spec, obs, q_f, std::move(data), std::move(reps)};
}

FieldST combine_representers(const FieldST& q_f, const std::vector<FieldST>& reps, const Eigen::VectorXd& beta,
                             ExecPolicy policy) {
  if (static_cast<Eigen::Index>(reps.size()) != beta.size()) {
    throw Error(ErrorKind::Shape, "representer and coefficient counts differ");
  }
  FieldST out = q_f;
  auto dst = out.values();
  const int n = static_cast<int>(dst.size());
  constexpr int chunk = 4096;
  const int chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, policy, [&](int c) {
    const int lo = c * chunk;
    const int hi = std::min(n, lo + chunk);
    for (std::size_t m = 0; m < reps.size(); ++m) {
      const auto src = reps[m].values();
      const double b = beta(static_cast<Eigen::Index>(m));
      for (int j = lo; j < hi; ++j) dst[j] += b * src[j];
    }
  });
  return out;
}

FieldST optimal_estimate(const RepresenterSystem& sys, ExecPolicy policy) {
  if (!sys.reps.empty()) return combine_representers(sys.q_f, sys.reps, sys.data.beta(), policy);
  // Streaming: q_hat - q_F = r[sum_m beta_m alpha_m], a single forward solve.
  const RepresenterBasis& basis = *sys.basis;
  const Grid& g = sys.q_f.grid();
  AdjointField combined{FieldST(g), std::vector<double>(g.nx, 0.0)};
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const double b = sys.data.beta()(static_cast<Eigen::Index>(m));
    combined.field.axpy(b, basis.adjoints()[m].field);
    for (int i = 0; i < g.nx; ++i) combined.initial[i] += b * basis.adjoints()[m].initial[i];
  }
  const ModelErrorCovariance cov(g, sys.covariance);
  const FieldST forcing = cov.apply(combined.field, policy);
  const std::vector<double> q0 = cov.apply_initial(combined.initial);
  FieldST out = solve_forward(basis.model(), SourceParams{}, &forcing, q0);
  out.axpy(1.0, sys.q_f);
  return out;
}

Penalties penalties(const RepresenterSystem& sys) { return penalties(sys.data); }

std::optional<double> model_penalty_direct(const RepresenterSystem& sys, const FieldST& q_hat) {
  if (!sys.covariance.is_isotropic()) return std::nullopt;
  const Grid& g = q_hat.grid();
  require_same_grid(g, sys.q_f.grid(), "model_penalty_direct");
  FieldST delta = q_hat;
  delta.axpy(-1.0, sys.q_f);

  double total = 0.0;
  const double s2 = sys.covariance.sigma_f2;
  if (s2 > 0.0) {
    std::vector<double> step(g.nx);
    double acc = 0.0;
    for (int n = 0; n + 1 < g.nt; ++n) {
      sys.basis->model().step().apply(delta.level(n), step);
      const auto next = delta.level(n + 1);
      for (int i = 0; i < g.nx; ++i) acc += (next[i] - step[i]) * (next[i] - step[i]);
    }
    total += acc * g.dx() / (g.dt() * s2);
  }
  const double ci = sys.covariance.ci_variance;
  if (ci > 0.0) {
    double acc = 0.0;
    for (double v : delta.level(0)) acc += v * v;
    total += acc * g.dx() / ci;
  }
  return total;
}

}  // namespace repvar

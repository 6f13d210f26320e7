#include "repvar/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "repvar/error.hpp"
#include "repvar/representer.hpp"

namespace repvar {

FullSpaceSolution full_space_solve(const FullSpaceProblem& p) {
  const Grid& g = p.model.grid();
  const CovarianceSpec& cov = p.covariance;
  cov.validate();
  if (!cov.is_isotropic()) throw Error(ErrorKind::Config, "full-space oracle handles isotropic covariances", "covariance");
  if (!(cov.sigma_f2 > 0.0)) throw Error(ErrorKind::Config, "full-space oracle needs sigma_f2 > 0", "sigma_f2");
  if (p.q_init.size() != static_cast<std::size_t>(g.nx)) throw Error(ErrorKind::Shape, "q_init length != nx");
  for (const auto& pt : p.obs.points) {
    if (!(pt.sigma > 0.0)) throw Error(ErrorKind::Config, "full-space oracle needs sigma_m > 0", "sigma");
  }

  const int nx = g.nx;
  const int n0 = cov.ci_variance > 0.0 ? 0 : 1;  // first unknown level
  const int levels = g.nt - n0;
  const int U = levels * nx;
  if (U > p.max_unknowns) {
    throw Error(ErrorKind::Shape, "full-space problem has " + std::to_string(U) + " unknowns, above the cap");
  }
  const int M = static_cast<int>(p.obs.size());
  const int rows = (g.nt - 1) * nx + (n0 == 0 ? nx : 0) + M;

  const Eigen::MatrixXd A = build_step_matrix(p.model);
  const Eigen::Map<const Eigen::VectorXd> q_init(p.q_init.data(), nx);
  const double dx = g.dx();
  const double dt = g.dt();
  const double sw_dyn = std::sqrt(dx / (dt * cov.sigma_f2));

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(rows, U);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  auto col = [&](int n) { return (n - n0) * nx; };

  int r = 0;
  for (int n = 0; n + 1 < g.nt; ++n) {
    Eigen::VectorXd forcing(nx);
    for (int i = 0; i < nx; ++i) forcing(i) = dt * source_eval(p.source, g.x_center(i), g.t_level(n));
    K.block(r, col(n + 1), nx, nx) = sw_dyn * Eigen::MatrixXd::Identity(nx, nx);
    if (n >= n0) {
      K.block(r, col(n), nx, nx) = -sw_dyn * A;
      y.segment(r, nx) = sw_dyn * forcing;
    } else {
      y.segment(r, nx) = sw_dyn * (forcing + A * q_init);
    }
    r += nx;
  }
  if (n0 == 0) {
    const double sw = std::sqrt(dx / cov.ci_variance);
    K.block(r, 0, nx, nx) = sw * Eigen::MatrixXd::Identity(nx, nx);
    y.segment(r, nx) = sw * q_init;
    r += nx;
  }
  // Observation rows; stencil entries on a fixed level move to the right-hand side.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, U);
  Eigen::VectorXd h_fixed = Eigen::VectorXd::Zero(M);
  for (int m = 0; m < M; ++m) {
    for (const auto& e : p.obs.stencils[m].view()) {
      if (e.n >= n0) {
        H(m, col(e.n) + e.i) += e.w;
      } else {
        h_fixed(m) += e.w * q_init(e.i);
      }
    }
    const double sw = 1.0 / p.obs.points[m].sigma;
    K.row(r) = sw * H.row(m);
    y(r) = sw * (p.obs.points[m].d - h_fixed(m));
    ++r;
  }

  const Eigen::MatrixXd N = K.transpose() * K;
  const Eigen::LLT<Eigen::MatrixXd> llt(N);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Degenerate, "full-space normal matrix is singular");
  const Eigen::VectorXd z = llt.solve(K.transpose() * y);

  FullSpaceSolution out;
  out.unknowns = U;
  out.q_hat = FieldST(g);
  for (int i = 0; i < nx && n0 == 1; ++i) out.q_hat(0, i) = q_init(i);
  for (int n = n0; n < g.nt; ++n) {
    for (int i = 0; i < nx; ++i) out.q_hat(n, i) = z(col(n) + i);
  }
  out.q_hat_obs = H * z + h_fixed;
  out.J = (K * z - y).squaredNorm();

  Eigen::VectorXd d(M), w(M);
  for (int m = 0; m < M; ++m) {
    d(m) = p.obs.points[m].d;
    w(m) = 1.0 / (p.obs.points[m].sigma * p.obs.points[m].sigma);
  }
  out.beta = (w.array() * (d - out.q_hat_obs).array()).matrix();
  // Posterior covariance at the data S = R P^-1 C_eps, so R = (I - S W)^-1 S.
  const Eigen::MatrixXd S = H * llt.solve(H.transpose());
  const Eigen::MatrixXd I_SW = Eigen::MatrixXd::Identity(M, M) - S * w.asDiagonal();
  out.R = I_SW.partialPivLu().solve(S);
  return out;
}

double loo_bruteforce(const TransportModel& model, const FieldST& q_f, const ObservationSet& obs,
                      const CovarianceSpec& spec) {
  const std::size_t M = obs.size();
  if (M == 0) throw Error(ErrorKind::Shape, "leave-one-out needs at least one datum");
  double total = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    double pred = 0.0;
    if (M == 1) {
      pred = obs.stencils[0].apply(q_f);
    } else {
      AssembleOptions opt;
      opt.policy = ExecPolicy::Serial;
      const RepresenterSystem sys = assemble_system(model, spec, obs.without(k), q_f, opt);
      pred = obs.stencils[k].apply(optimal_estimate(sys, ExecPolicy::Serial));
    }
    const double s = obs.points[k].sigma;
    if (!(s > 0.0)) throw Error(ErrorKind::Degenerate, "leave-one-out needs sigma_m > 0");
    const double e = pred - obs.points[k].d;
    total += e * e / (s * s);
  }
  return total / static_cast<double>(M);
}

Eigen::VectorXd threedvar_estimate(const Eigen::VectorXd& x_b, const Eigen::MatrixXd& B, const Eigen::MatrixXd& R_obs,
                                   const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
  if (H.cols() != x_b.size() || H.rows() != d.size() || B.rows() != x_b.size() || R_obs.rows() != d.size()) {
    throw Error(ErrorKind::Shape, "3D-Var dimensions disagree");
  }
  const Eigen::MatrixXd BHt = B * H.transpose();
  const Eigen::MatrixXd S = H * BHt + R_obs;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Degenerate, "H B H' + R is not positive definite");
  return x_b + BHt * llt.solve(d - H * x_b);
}

Eigen::VectorXd threedvar_estimate(const ThreeDVarProblem& p, double sigma_b2) {
  const Eigen::Index n = p.x_b.size();
  return threedvar_estimate(p.x_b, sigma_b2 * Eigen::MatrixXd::Identity(n, n), p.R_obs, p.H, p.d);
}

double threedvar_gcv(const ThreeDVarProblem& p, double sigma_b2) {
  const Eigen::Index M = p.d.size();
  const Eigen::Index n = p.x_b.size();
  const Eigen::MatrixXd Rinv = p.R_obs.inverse();
  const Eigen::MatrixXd N = p.H.transpose() * Rinv * p.H + Eigen::MatrixXd::Identity(n, n) / sigma_b2;
  const Eigen::MatrixXd A = p.H * N.ldlt().solve(p.H.transpose() * Rinv);
  const double tr = static_cast<double>(M) - A.trace();
  const Eigen::VectorXd res = p.d - p.H * threedvar_estimate(p, sigma_b2);
  return static_cast<double>(M) * res.squaredNorm() / (tr * tr);
}

double threedvar_loo(const ThreeDVarProblem& p, double sigma_b2) {
  const Eigen::Index M = p.d.size();
  double total = 0.0;
  for (Eigen::Index k = 0; k < M; ++k) {
    Eigen::MatrixXd H(M - 1, p.H.cols());
    Eigen::MatrixXd R(M - 1, M - 1);
    Eigen::VectorXd d(M - 1);
    for (Eigen::Index a = 0, ra = 0; a < M; ++a) {
      if (a == k) continue;
      H.row(ra) = p.H.row(a);
      d(ra) = p.d(a);
      for (Eigen::Index b = 0, rb = 0; b < M; ++b) {
        if (b == k) continue;
        R(ra, rb++) = p.R_obs(a, b);
      }
      ++ra;
    }
    const Eigen::VectorXd x = threedvar_estimate(ThreeDVarProblem{p.x_b, H, R, d}, sigma_b2);
    const double e = p.d(k) - p.H.row(k).dot(x);
    total += e * e;
  }
  return total / static_cast<double>(M);
}

double threedvar_chi2(const ThreeDVarProblem& p, double sigma_b2) {
  const Eigen::MatrixXd S = sigma_b2 * p.H * p.H.transpose() + p.R_obs;
  const Eigen::VectorXd h = p.d - p.H * p.x_b;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Degenerate, "H B H' + R is not positive definite");
  return h.dot(llt.solve(h));
}

ThreeDVarSelection threedvar_select(const ThreeDVarProblem& p, Method method, Bounds bounds) {
  bounds.validate();
  const double a = std::log(bounds.lo);
  const double b = std::log(bounds.hi);
  ThreeDVarSelection out;
  switch (method) {
    case Method::LCurve: {
      const std::vector<double> grid = geometric_grid(bounds.lo, bounds.hi, 100);
      std::vector<double> s, x, y;
      for (double s2 : grid) {
        const Eigen::VectorXd xh = threedvar_estimate(p, s2);
        s.push_back(std::log(s2));
        x.push_back(std::log((p.d - p.H * xh).norm()));
        y.push_back(std::log((xh - p.x_b).norm()));
      }
      const std::vector<double> k = discrete_curvature(s, x, y);
      std::size_t best = 1;
      for (std::size_t j = 1; j + 1 < k.size(); ++j) {
        if (std::isfinite(k[j]) && !(k[j] <= k[best])) best = j;
      }
      out.sigma_b2 = grid[best];
      out.runs = static_cast<int>(grid.size());
      if (best == 1 || best + 2 == grid.size()) out.flags.push_back("boundary");
      break;
    }
    case Method::GCV: {
      const ScalarMin r = golden_section([&](double ls) { return threedvar_gcv(p, std::exp(ls)); }, a, b, 1e-3, 60);
      out.sigma_b2 = std::exp(r.x);
      out.runs = r.evaluations;
      if (r.x - a <= 1e-3 || b - r.x <= 1e-3) out.flags.push_back("boundary");
      break;
    }
    case Method::Chi2: {
      const double M = static_cast<double>(p.d.size());
      auto g = [&](double ls) { return threedvar_chi2(p, std::exp(ls)) - M; };
      const double ga = g(a);
      const double gb = g(b);
      out.runs = 2;
      if (!(ga > 0.0) || !(gb < 0.0)) {
        out.sigma_b2 = !(ga > 0.0) ? bounds.lo : bounds.hi;
        out.flags = {"boundary", "no_bracket"};
        break;
      }
      const ScalarMin r = bisect_decreasing(g, a, b, 1e-6 * M, 60);
      out.sigma_b2 = std::exp(r.x);
      out.runs += r.evaluations;
      if (!r.converged) out.flags.push_back("not_converged");
      break;
    }
  }
  return out;
}

}  // namespace repvar

#include "repvar/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "repvar/error.hpp"

namespace repvar {

const char* to_string(GridPreset p) { return p == GridPreset::Isotropic ? "isotropic" : "non_isotropic"; }

GridPreset grid_preset_from_string(std::string_view name) {
  if (name == "isotropic") return GridPreset::Isotropic;
  if (name == "non_isotropic" || name == "non-isotropic" || name == "nonisotropic") return GridPreset::NonIsotropic;
  throw Error(ErrorKind::Config, "unknown grid preset '" + std::string(name) + "'", "grid.preset");
}

Grid preset_grid(GridPreset p) {
  return p == GridPreset::Isotropic ? Grid::make(30.0, 45.0, 0.0, 20.0, 200, 445)
                                    : Grid::make(30.0, 45.0, 0.0, 20.0, 51, 113);
}

const char* to_string(FirstGuessMode m) { return m == FirstGuessMode::Shared ? "shared" : "per_column"; }

FirstGuessMode first_guess_mode_from_string(std::string_view name) {
  if (name == "shared") return FirstGuessMode::Shared;
  if (name == "per_column") return FirstGuessMode::PerColumn;
  throw Error(ErrorKind::Config, "unknown first-guess mode '" + std::string(name) + "'", "first_guess.mode");
}

ExperimentConfig ExperimentConfig::defaults(int id, GridPreset preset) {
  if (id < 1 || id > 4) throw Error(ErrorKind::Config, "experiment id must be 1..4", "experiment");
  ExperimentConfig c;
  c.id = id;
  c.preset = preset;
  c.grid = preset_grid(preset);
  c.source = SourceParams{100.0, 33.0, 10.0, 0.5, 0.0, 40.0, 0.0, 0.0};
  const bool two_sources = id == 2 || id == 4;
  c.bc = two_sources ? BoundaryKind::NoFlux : BoundaryKind::Periodic;
  if (two_sources) {
    c.source.S1 = 50.0;
    c.source.k1 = 0.25;
    c.source.alpha1 = 5.0;
  }
  switch (id) {
    case 1:
      c.noise = 0.7;
      c.perturbation = {0.2, 0.0, 0.2, 0.0};
      c.band_lo = 0.35;
      c.band_hi = 0.7;
      break;
    case 2:
      c.noise = 0.6;
      c.perturbation = {0.2, 0.2, 0.2, 0.2};
      c.band_lo = 0.003;
      c.band_hi = 0.7;
      break;
    case 3:
      c.noise = 0.3;
      c.perturbation = {0.5, 0.0, 0.7, 0.0};
      c.band_lo = 0.8;
      c.band_hi = 10.0;
      break;
    default:
      c.noise = 0.2;
      c.perturbation = {0.6, 0.5, 0.5, 0.5};
      c.band_lo = 0.5;
      c.band_hi = 6.0;
      break;
  }
  if (preset == GridPreset::NonIsotropic) {
    c.n_obs = 30;
    c.columns = 1;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (id < 1 || id > 4) throw Error(ErrorKind::Config, "experiment id must be 1..4", "experiment");
  Grid::make(grid.x_min, grid.x_max, grid.t_min, grid.t_max, grid.nx, grid.nt);
  grid.check_cfl(wind);
  source.validate();
  const double sds[4] = {perturbation.k0, perturbation.k1, perturbation.alpha0, perturbation.alpha1};
  const char* keys[4] = {"perturbation.k0", "perturbation.k1", "perturbation.alpha0", "perturbation.alpha1"};
  for (int k = 0; k < 4; ++k) {
    if (!(sds[k] >= 0.0)) throw Error(ErrorKind::Config, "perturbation std must be >= 0", keys[k]);
  }
  if (!(noise >= 0.0)) throw Error(ErrorKind::Config, "noise level must be >= 0", "observations.noise");
  if (!(sigma_floor >= 0.0)) throw Error(ErrorKind::Config, "noise floor must be >= 0", "observations.sigma_floor");
  if (n_obs < 1) throw Error(ErrorKind::Config, "observation count must be >= 1", "observations.count");
  if (columns < 1) throw Error(ErrorKind::Config, "column count must be >= 1", "observations.columns");
  if (n_mc < columns) throw Error(ErrorKind::Config, "n_mc must be >= columns", "observations.n_mc");
  if (!(ci_variance >= 0.0)) throw Error(ErrorKind::Config, "ci_variance must be >= 0", "covariance.ci_variance");
  bounds.validate();
  box.validate();
  if (lcurve_points < 5) throw Error(ErrorKind::Config, "L-curve needs >= 5 points", "selection.lcurve_points");
  if (max_runs_1d < 4) throw Error(ErrorKind::Config, "max_runs_1d must be >= 4", "selection.max_runs_1d");
  if (max_runs_multi < 4) throw Error(ErrorKind::Config, "max_runs_multi must be >= 4", "selection.max_runs_multi");
  if (!(band_lo <= band_hi)) throw Error(ErrorKind::Config, "outlier band must satisfy lo <= hi", "selection.outlier_band");
}

ExperimentSeeds ExperimentSeeds::from(std::uint64_t master) {
  return {derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3)};
}

SourceParams draw_first_guess_source(const SourceParams& truth, const Perturbation& sd, std::uint64_t seed,
                                     int* clipped) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int clips = 0;
  auto draw = [&](double mean, double s) {
    const double v = mean + s * normal(rng);
    if (v < 0.0) {
      ++clips;
      return 0.0;
    }
    return v;
  };
  SourceParams p = truth;
  p.k0 = draw(truth.k0, sd.k0);
  p.alpha0 = draw(truth.alpha0, sd.alpha0);
  p.k1 = draw(truth.k1, sd.k1);
  p.alpha1 = draw(truth.alpha1, sd.alpha1);
  if (clipped != nullptr) *clipped = clips;
  return p;
}

FieldST ExperimentData::first_guess(int column) const {
  const std::vector<double> zero(model.grid().nx, 0.0);
  return solve_forward(model, first_guess_sources.at(column), nullptr, zero);
}

ObservationSet ExperimentData::observations(int column) const {
  if (column < 0 || column >= data.columns.cols()) throw Error(ErrorKind::Config, "column out of range", "column");
  std::vector<ObsPoint> pts(locations.size());
  for (std::size_t m = 0; m < locations.size(); ++m) {
    pts[m] = {locations[m].x, locations[m].t, data.columns(static_cast<Eigen::Index>(m), column), data.sigma[m]};
  }
  return ObservationSet::make(model.grid(), std::move(pts), config.seed);
}

ExperimentData build_experiment(const ExperimentConfig& cfg, ExecPolicy policy) {
  cfg.validate();
  const ExperimentSeeds seeds = ExperimentSeeds::from(cfg.seed);
  TransportModel model(cfg.grid, cfg.wind, cfg.bc);
  const std::vector<double> zero(cfg.grid.nx, 0.0);
  FieldST truth = solve_forward(model, cfg.source, nullptr, zero);
  std::vector<SpaceTimePoint> locations = sample_locations(cfg.grid, cfg.n_obs, seeds.locations);
  std::vector<double> at_obs = interpolate(truth, locations);
  FilteredDataset data = calibrate_and_filter(at_obs, cfg.noise, cfg.n_mc, cfg.columns, seeds.data, policy,
                                              cfg.sigma_floor);

  std::vector<SourceParams> fg(cfg.columns);
  int clipped = 0;
  const int draws = cfg.first_guess == FirstGuessMode::Shared ? 1 : cfg.columns;
  for (int j = 0; j < draws; ++j) {
    int c = 0;
    fg[j] = draw_first_guess_source(cfg.source, cfg.perturbation, derive_seed(seeds.first_guess, j), &c);
    clipped += c;
  }
  for (int j = draws; j < cfg.columns; ++j) fg[j] = fg[0];
  return ExperimentData{cfg, std::move(model), std::move(truth), std::move(locations), std::move(at_obs),
                        std::move(data), std::move(fg), clipped};
}

Summary summarize(std::span<const double> v) {
  Summary s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

double field_rmse(const FieldST& a, const FieldST& truth) {
  require_same_grid(a.grid(), truth.grid(), "field_rmse");
  return rmse(a.values(), truth.values());
}

bool EnsembleReport::keeps(Method m, double v) const {
  if (m == Method::LCurve || preset != GridPreset::Isotropic || !(band_hi > band_lo)) return true;
  return v >= band_lo && v <= band_hi;
}

const MethodSummary* EnsembleReport::find(Method m, CovarianceSpec::Kind kind) const {
  for (const auto& s : methods) {
    if (s.method == m && s.kind == kind) return &s;
  }
  return nullptr;
}

SelectionResult select_column(const ExperimentData& exp, const SelectionProblem& problem, Method method,
                              CovarianceSpec::Kind kind) {
  const ExperimentConfig& cfg = exp.config;
  if (kind == CovarianceSpec::Kind::NonIsotropic) {
    switch (method) {
      case Method::GCV: return gcv_select_multi(problem, cfg.box, cfg.max_runs_multi);
      case Method::Chi2: return chi2_select_multi(problem, cfg.box, cfg.max_runs_multi);
      case Method::LCurve:
        throw Error(ErrorKind::Config, "the L-curve is only available for isotropic covariances", "method");
    }
  }
  SelectionProblem iso = problem;
  iso.base = CovarianceSpec::isotropic(1.0, cfg.ci_variance);
  switch (method) {
    case Method::LCurve:
      return lcurve_select(iso, geometric_grid(cfg.bounds.lo, cfg.bounds.hi, cfg.lcurve_points));
    case Method::GCV: return gcv_select_1d(iso, cfg.bounds, cfg.max_runs_1d);
    case Method::Chi2: return chi2_select_1d(iso, cfg.bounds, cfg.max_runs_1d);
  }
  throw Error(ErrorKind::Config, "unknown method", "method");
}

std::vector<double> assimilated_rmse(const ExperimentData& exp, const RepresenterBasis& basis,
                                     const CovarianceSpec& spec, ExecPolicy policy) {
  const std::vector<FieldST> reps = basis.representer_fields(spec, policy);
  const int cols = static_cast<int>(exp.data.columns.cols());
  const Eigen::Index m = static_cast<Eigen::Index>(exp.locations.size());
  Eigen::MatrixXd R(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) R(a, b) = basis.stencils()[b].apply(reps[a]);
  }
  const Eigen::Map<const Eigen::VectorXd> sigma(exp.data.sigma.data(), m);

  std::vector<double> out(cols);
  parallel_for(cols, policy, [&](int j) {
    const FieldST qf = exp.first_guess(j);
    Eigen::VectorXd h(m);
    for (Eigen::Index k = 0; k < m; ++k) h(k) = exp.data.columns(k, j) - basis.stencils()[k].apply(qf);
    const DataSpaceSystem sys = DataSpaceSystem::from_sigma(R, sigma, h);
    out[j] = field_rmse(combine_representers(qf, reps, sys.beta(), ExecPolicy::Serial), exp.truth);
  });
  return out;
}

EnsembleReport run_ensemble(const ExperimentData& exp, const std::vector<Method>& methods, ExecPolicy policy) {
  if (methods.empty()) throw Error(ErrorKind::Config, "at least one method is required", "method");
  const ExperimentConfig& cfg = exp.config;
  const int cols = static_cast<int>(exp.data.columns.cols());

  struct Task {
    Method method;
    CovarianceSpec::Kind kind;
  };
  std::vector<Task> tasks;
  for (Method m : methods) tasks.push_back({m, CovarianceSpec::Kind::Isotropic});
  if (cfg.preset == GridPreset::NonIsotropic) {
    for (Method m : methods) {
      if (m != Method::LCurve) tasks.push_back({m, CovarianceSpec::Kind::NonIsotropic});
    }
  }

  const ObservationSet obs0 = exp.observations(0);
  auto basis = RepresenterBasis::from(exp.model, obs0, policy);
  basis->representer_matrix(CovarianceSpec::isotropic(1.0, cfg.ci_variance), policy);  // warm the unit cache

  struct Cell {
    bool ok = false;
    SelectionResult result;
    std::string error;
  };
  std::vector<std::vector<Cell>> cells(tasks.size(), std::vector<Cell>(cols));
  std::vector<double> fg_rmse(cols);
  const bool parallel_columns = cols > 1;
  const ExecPolicy inner = parallel_columns ? ExecPolicy::Serial : policy;
  parallel_for(cols, parallel_columns ? policy : ExecPolicy::Serial, [&](int j) {
    FieldST qf = exp.first_guess(j);
    fg_rmse[j] = field_rmse(qf, exp.truth);
    SelectionProblem problem{basis, exp.observations(j), std::move(qf), CovarianceSpec::isotropic(1.0, cfg.ci_variance),
                             inner};
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      Cell& cell = cells[t][j];
      try {
        cell.result = select_column(exp, problem, tasks[t].method, tasks[t].kind);
        cell.ok = !cell.result.has_flag("non_finite");
        if (!cell.ok) cell.error = "criterion is not finite anywhere on the search domain";
      } catch (const Error& e) {
        cell.error = e.what();
      }
    }
  });

  EnsembleReport rep;
  rep.experiment = cfg.id;
  rep.preset = cfg.preset;
  rep.columns = cols;
  rep.first_guess_rmse_column0 = fg_rmse[0];
  rep.first_guess_rmse = summarize(fg_rmse);
  rep.data_rmse = summarize(exp.data.column_rmse);
  rep.clipped_draws = exp.clipped_draws;
  rep.data_attempts = exp.data.attempts;
  rep.band_lo = cfg.band_lo;
  rep.band_hi = cfg.band_hi;

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    MethodSummary s;
    s.method = tasks[t].method;
    s.kind = tasks[t].kind;
    std::vector<double> kept;
    for (int j = 0; j < cols; ++j) {
      const Cell& cell = cells[t][j];
      if (!cell.ok) {
        ++s.failures;
        s.failure_messages.push_back("column " + std::to_string(j) + ": " + cell.error);
        continue;
      }
      const double v = cell.result.params.sigma_f2;
      s.samples.push_back(v);
      s.sample_columns.push_back(j);
      s.runs.push_back(cell.result.runs);
      if (rep.keeps(s.method, v)) {
        kept.push_back(v);
      } else {
        ++s.outliers;
      }
    }
    s.kept = summarize(kept);
    if (cells[t][0].ok) {
      s.column0 = cells[t][0].result;
      s.rmse = summarize(assimilated_rmse(exp, *basis, s.column0->params, policy));
    }
    rep.methods.push_back(std::move(s));
  }
  return rep;
}

}  // namespace repvar

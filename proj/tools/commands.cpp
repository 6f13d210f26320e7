#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "repvar/error.hpp"
#include "repvar/experiment.hpp"
#include "repvar/io.hpp"
#include "repvar/validation.hpp"

namespace repvar::cli {

namespace fs = std::filesystem;

Json resolve(const Options& o) {
  Json user = o.config_path.empty() ? Json::object() : read_json_file(o.config_path);
  std::vector<std::string> overrides;
  if (o.experiment) overrides.push_back("experiment=" + std::to_string(*o.experiment));
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (!o.covariance.empty()) overrides.push_back("covariance.type=\"" + o.covariance + "\"");
  overrides.insert(overrides.end(), o.sets.begin(), o.sets.end());
  return resolve_config(user, overrides);
}

std::string output_dir(const Options& o) {
  if (!o.output_dir.empty()) return o.output_dir;
  if (const char* env = std::getenv("REPVAR_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "repvar_out";
}

namespace {

std::vector<Method> parse_methods(const std::string& list) {
  if (list.empty() || list == "all") return {Method::LCurve, Method::GCV, Method::Chi2};
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(method_from_string(item));
  return out;
}

SelectionProblem make_problem(const ExperimentData& exp, const RunConfig& rc) {
  CovarianceSpec base = rc.covariance;
  base.sigma_f2 = 1.0;
  return SelectionProblem::make(exp.model, exp.observations(rc.column), exp.first_guess(rc.column), base);
}

}  // namespace

int generate_data(const Options& o) {
  const Json cfg = resolve(o);
  const RunConfig rc = config_from_json(cfg);
  const ExperimentData exp = build_experiment(rc.experiment);
  const fs::path dir = output_dir(o);
  const auto prov = Provenance::from("generate-data", cfg);
  write_text(dir / "observations.csv", observations_csv(exp, prov));
  write_text(dir / "truth.csv", field_csv(exp.truth, prov));
  write_text(dir / "first_guess.csv", field_csv(exp.first_guess(rc.column), prov));
  Json summary = {{"observations", exp.locations.size()},
                  {"columns", exp.data.columns.cols()},
                  {"data_rmse", {{"mean", exp.data.rmse_mean}, {"std", exp.data.rmse_std}}},
                  {"attempts", exp.data.attempts},
                  {"clipped_draws", exp.clipped_draws},
                  {"first_guess_column", rc.column},
                  {"first_guess_rmse", field_rmse(exp.first_guess(rc.column), exp.truth)}};
  write_json(dir / "dataset.json", summary, prov);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int assimilate(const Options& o) {
  const Json cfg = resolve(o);
  const RunConfig rc = config_from_json(cfg);
  const ExperimentData exp = build_experiment(rc.experiment);
  const ObservationSet obs = exp.observations(rc.column);
  const FieldST q_f = exp.first_guess(rc.column);
  const RepresenterSystem sys = assemble_system(exp.model, rc.covariance, obs, q_f);
  const FieldST q_hat = optimal_estimate(sys);
  const fs::path dir = output_dir(o);
  const auto prov = Provenance::from("assimilate", cfg);
  write_text(dir / "q_hat.csv", field_csv(q_hat, prov));
  Json summary = {{"column", rc.column},
                  {"covariance", rc.covariance.describe()},
                  {"penalties", penalties_to_json(penalties(sys))},
                  {"condition_estimate", sys.data.condition_estimate()},
                  {"rmse",
                   {{"first_guess", field_rmse(q_f, exp.truth)},
                    {"data", exp.data.column_rmse.at(rc.column)},
                    {"assimilated", field_rmse(q_hat, exp.truth)}}}};
  write_json(dir / "assimilate.json", summary, prov);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int select(const Options& o) {
  const Json cfg = resolve(o);
  const RunConfig rc = config_from_json(cfg);
  const Method method = method_from_string(o.method.empty() ? "gcv" : o.method);
  const ExperimentData exp = build_experiment(rc.experiment);
  const SelectionProblem problem = make_problem(exp, rc);
  const SelectionResult r = select_column(exp, problem, method, rc.covariance.kind);
  const fs::path dir = output_dir(o);
  const auto prov = Provenance::from("select", cfg);
  Json doc = selection_to_json(r);
  doc["column"] = rc.column;
  write_json(dir / "selection.json", doc, prov);
  write_text(dir / "curve.csv", curve_csv(r, prov));
  std::cout << doc.dump(2) << "\n";
  if (r.has_flag("non_finite")) {
    throw Error(ErrorKind::Selection, std::string(to_string(method)) + " criterion is not finite on the search domain",
                "method");
  }
  return 0;
}

int ensemble(const Options& o) {
  const Json cfg = resolve(o);
  const RunConfig rc = config_from_json(cfg);
  const auto methods = parse_methods(o.method);
  const ExperimentData exp = build_experiment(rc.experiment);
  const EnsembleReport rep = run_ensemble(exp, methods);
  const fs::path dir = output_dir(o);
  const auto prov = Provenance::from("ensemble", cfg);
  const Json doc = ensemble_to_json(rep);
  write_json(dir / "ensemble.json", doc, prov);
  write_text(dir / "estimates.csv", estimates_csv(rep, prov));
  write_text(dir / "rmse.csv", rmse_csv(rep, prov));
  write_text(dir / "samples.csv", samples_csv(rep, prov));
  std::cout << render_report(doc);
  return 0;
}

int report(const Options& o) {
  const fs::path path = o.input.empty() ? fs::path(output_dir(o)) / "ensemble.json" : fs::path(o.input);
  const Json doc = read_json_file(path.string());
  try {
    std::cout << render_report(doc);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + " is not an ensemble document: " + e.what(), "input");
  }
  return 0;
}

int validate(const Options& o) {
  ValidationSize size;
  if (o.size == "tiny") {
    size = ValidationSize::Tiny;
  } else if (o.size == "full") {
    size = ValidationSize::Full;
  } else {
    throw Error(ErrorKind::Config, "size must be tiny or full", "size");
  }
  bool ok = true;
  for (const auto& c : run_validation(size)) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": worst " << c.worst << " (tol " << c.tolerance << "), "
              << c.detail << "\n";
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace repvar::cli

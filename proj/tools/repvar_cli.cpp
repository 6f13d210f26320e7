#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "repvar/error.hpp"
#include "repvar/parallel.hpp"

namespace {

int exit_code(repvar::ErrorKind k) {
  switch (k) {
    case repvar::ErrorKind::Config: return 2;
    case repvar::ErrorKind::Cfl: return 3;
    case repvar::ErrorKind::Selection: return 4;
    default: return 1;
  }
}

void print_error(const std::string& kind, const std::string& message, const std::string& key) {
  repvar::Json j = {{"error", {{"kind", kind}, {"message", message}, {"key", key}}}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using repvar::cli::Options;
  CLI::App app{"Weak-constraint representer assimilation and hyperparameter selection"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* s, bool with_method) {
    s->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    s->add_option("--output", o.output_dir, "output directory (default $REPVAR_OUTPUT_DIR or ./repvar_out)");
    s->add_option("--experiment", o.experiment, "experiment 1..4")->check(CLI::Range(1, 4));
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--covariance", o.covariance, "isotropic or non_isotropic")
        ->check(CLI::IsMember({"isotropic", "non_isotropic"}));
    s->add_option("--threads", o.threads, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    s->add_option("--set", o.sets, "dotted key=value override, repeatable");
    if (with_method) s->add_option("--method", o.method, "lcurve, gcv or chi2");
  };

  std::map<CLI::App*, int (*)(const Options&)> handlers;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&), bool with_method) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s, with_method);
    handlers[s] = fn;
    return s;
  };
  add("generate-data", "truth, first guess and observation columns", repvar::cli::generate_data, false);
  add("assimilate", "optimal estimate for the configured covariance", repvar::cli::assimilate, false);
  add("select", "hyperparameter selection on one column", repvar::cli::select, true);
  auto* ens = add("ensemble", "selection over every column with summary tables", repvar::cli::ensemble, true);
  ens->get_option("--method")->description("comma-separated methods or 'all' (default)");
  auto* rep = add("report", "print the tables of a stored ensemble run", repvar::cli::report, false);
  rep->add_option("--input", o.input, "ensemble.json (default <output>/ensemble.json)");
  auto* val = add("validate", "oracle equivalence and invariant checks", repvar::cli::validate, false);
  val->add_option("--size", o.size, "tiny or full")->check(CLI::IsMember({"tiny", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what(), "");
    return 2;
  }

  try {
    repvar::set_thread_count(o.threads);
    for (const auto& [sub, fn] : handlers) {
      if (sub->parsed()) return fn(o);
    }
    return 1;
  } catch (const repvar::Error& e) {
    print_error(repvar::to_string(e.kind()), e.what(), e.key());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what(), "");
    return 1;
  }
}

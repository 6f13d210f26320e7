#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "repvar/config.hpp"
#include "repvar/experiment.hpp"
#include "repvar/param_select.hpp"
#include "repvar/representer.hpp"

namespace repvar {

/// Identifies the configuration and seed that produced an output.
struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  Json config;

  static Provenance from(const std::string& command, const Json& resolved_config);
  Json to_json() const;
  /// "# repvar command=... config_hash=... seed=..."
  std::string csv_comment() const;
};

/// Shortest representation that round-trips the double.
std::string format_double(double v);

/// Writes atomically enough for our purposes: to `path.tmp`, then renames.
/// Creates parent directories. Throws Error(Io).
void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const Json& doc, const Provenance& prov);

/// Long-format field table: level, t, cell, x, value.
std::string field_csv(const FieldST& field, const Provenance& prov);
/// One row per observation location: x, t, truth, sigma, then d_0 .. d_{K-1}.
std::string observations_csv(const ExperimentData& exp, const Provenance& prov);
std::string curve_csv(const SelectionResult& r, const Provenance& prov);

Json selection_to_json(const SelectionResult& r);
Json penalties_to_json(const Penalties& p);
Json ensemble_to_json(const EnsembleReport& rep);

/// Selected-parameter statistics per method (mean and std after the outlier band).
std::string estimates_csv(const EnsembleReport& rep, const Provenance& prov);
/// RMSE rows: first guess, data, and each method's assimilated field.
std::string rmse_csv(const EnsembleReport& rep, const Provenance& prov);
/// Every selected value with its column, run count and whether it was kept.
std::string samples_csv(const EnsembleReport& rep, const Provenance& prov);

/// Plain-text rendering of a stored ensemble document.
std::string render_report(const Json& ensemble_doc);

}  // namespace repvar

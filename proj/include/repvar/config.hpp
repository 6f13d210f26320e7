#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "repvar/covariance.hpp"
#include "repvar/experiment.hpp"

namespace repvar {

using Json = nlohmann::json;

/// A fully resolved run: the experiment, the covariance used by `assimilate`
/// and the data column it assimilates.
struct RunConfig {
  ExperimentConfig experiment;
  CovarianceSpec covariance;
  int column = 0;
};

/// The complete configuration document with every default filled in.
Json default_config_json(int experiment = 1, GridPreset preset = GridPreset::Isotropic);

/// Sets a dotted key ("covariance.sigma_f2=0.5") in `doc`. The value is parsed
/// as JSON when possible and kept as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

/// Layers defaults, the user document and the overrides. The defaults are
/// picked from the experiment id and grid preset found in the user layers.
/// Unknown keys and type mismatches throw Error(Config) naming the key.
Json resolve_config(const Json& user, const std::vector<std::string>& overrides = {});

RunConfig config_from_json(const Json& doc);
Json to_json(const RunConfig& cfg);

Json read_json_file(const std::string& path);

/// 64-bit FNV-1a of the canonical (sorted, compact) serialization, as 16 hex digits.
std::string config_hash(const Json& doc);

}  // namespace repvar

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "repvar/config.hpp"

namespace repvar::cli {

struct Options {
  std::string config_path;
  std::string output_dir;
  std::string method;
  std::string covariance;
  std::optional<int> experiment;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> sets;
  std::string size = "tiny";
  std::string input;
};

/// Defaults, then the config file, then --experiment/--seed/--covariance,
/// then --set overrides.
Json resolve(const Options& o);
std::string output_dir(const Options& o);

int generate_data(const Options& o);
int assimilate(const Options& o);
int select(const Options& o);
int ensemble(const Options& o);
int report(const Options& o);
int validate(const Options& o);

}  // namespace repvar::cli

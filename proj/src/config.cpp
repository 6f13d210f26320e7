#include "repvar/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "repvar/error.hpp"

namespace repvar {

namespace {

Json pair(double lo, double hi) { return Json::array({lo, hi}); }

const char* kind_name(const Json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  return "null";
}

// Every key in `user` must exist in `schema` with a compatible type.
void check_keys(const Json& schema, const Json& user, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    auto s = schema.find(it.key());
    if (s == schema.end()) throw Error(ErrorKind::Config, "unknown key '" + key + "'", key);
    const Json& v = it.value();
    bool ok = false;
    if (s->is_object()) {
      ok = v.is_object();
      if (ok) check_keys(*s, v, key);
    } else if (s->is_array()) {
      ok = v.is_array() && v.size() == s->size();
      for (const auto& e : v) ok = ok && e.is_number();
    } else if (s->is_number_integer() || s->is_number_unsigned()) {
      ok = v.is_number_integer() || v.is_number_unsigned();
    } else {
      ok = std::string(kind_name(*s)) == kind_name(v);
    }
    if (!ok) {
      throw Error(ErrorKind::Config,
                  "key '" + key + "' expects " + (s->is_number_integer() ? "an integer" : kind_name(*s)) + ", got " +
                      kind_name(v),
                  key);
    }
  }
}

const Json& at(const Json& doc, const std::string& dotted) {
  const Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(part)) throw Error(ErrorKind::Config, "missing key '" + dotted + "'", dotted);
    cur = &(*cur)[part];
    if (dot == std::string::npos) return *cur;
    start = dot + 1;
  }
}

double num(const Json& doc, const std::string& key) {
  const Json& v = at(doc, key);
  if (!v.is_number()) throw Error(ErrorKind::Config, "key '" + key + "' expects a number", key);
  return v.get<double>();
}

int integer(const Json& doc, const std::string& key) {
  const Json& v = at(doc, key);
  if (!v.is_number_integer()) throw Error(ErrorKind::Config, "key '" + key + "' expects an integer", key);
  return v.get<int>();
}

std::string str(const Json& doc, const std::string& key) {
  const Json& v = at(doc, key);
  if (!v.is_string()) throw Error(ErrorKind::Config, "key '" + key + "' expects a string", key);
  return v.get<std::string>();
}

std::pair<double, double> range(const Json& doc, const std::string& key) {
  const Json& v = at(doc, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw Error(ErrorKind::Config, "key '" + key + "' expects [lo, hi]", key);
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

template <class F>
auto with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.key().empty()) throw;
    throw Error(e.kind(), e.what(), key);
  }
}

}  // namespace

Json to_json(const RunConfig& rc) {
  const ExperimentConfig& c = rc.experiment;
  const SourceParams& s = c.source;
  Json j;
  j["experiment"] = c.id;
  j["seed"] = c.seed;
  j["grid"] = {{"preset", to_string(c.preset)}, {"x_min", c.grid.x_min}, {"x_max", c.grid.x_max},
               {"t_min", c.grid.t_min}, {"t_max", c.grid.t_max}, {"nx", c.grid.nx}, {"nt", c.grid.nt}};
  j["wind"] = c.wind;
  j["boundary"] = to_string(c.bc);
  j["source"] = {{"S0", s.S0}, {"x0", s.x0}, {"alpha0", s.alpha0}, {"k0", s.k0},
                 {"S1", s.S1}, {"x1", s.x1}, {"alpha1", s.alpha1}, {"k1", s.k1}};
  j["perturbation"] = {{"k0", c.perturbation.k0}, {"k1", c.perturbation.k1}, {"alpha0", c.perturbation.alpha0},
                       {"alpha1", c.perturbation.alpha1}};
  j["observations"] = {{"count", c.n_obs}, {"noise", c.noise}, {"sigma_floor", c.sigma_floor},
                       {"n_mc", c.n_mc}, {"columns", c.columns}};
  j["first_guess"] = {{"mode", to_string(c.first_guess)}};
  j["covariance"] = {{"type", rc.covariance.is_isotropic() ? "isotropic" : "non_isotropic"},
                     {"sigma_f2", rc.covariance.sigma_f2},
                     {"l_f", rc.covariance.l_f},
                     {"tau_f", rc.covariance.tau_f},
                     {"ci_variance", c.ci_variance}};
  j["selection"] = {{"bounds", pair(c.bounds.lo, c.bounds.hi)},
                    {"lcurve_points", c.lcurve_points},
                    {"max_runs_1d", c.max_runs_1d},
                    {"max_runs_multi", c.max_runs_multi},
                    {"box",
                     {{"sigma_f2", pair(c.box.lo[0], c.box.hi[0])},
                      {"l_f", pair(c.box.lo[1], c.box.hi[1])},
                      {"tau_f", pair(c.box.lo[2], c.box.hi[2])}}},
                    {"outlier_band", pair(c.band_lo, c.band_hi)}};
  j["assimilate"] = {{"column", rc.column}};
  return j;
}

Json default_config_json(int experiment, GridPreset preset) {
  RunConfig rc;
  rc.experiment = ExperimentConfig::defaults(experiment, preset);
  rc.covariance = preset == GridPreset::Isotropic ? CovarianceSpec::isotropic(1.0)
                                                  : CovarianceSpec::non_isotropic(1.0, 1.0, 1.0);
  return to_json(rc);
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::Config, "override '" + assignment + "' is not of the form key=value", assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorKind::Config, "empty path segment in '" + key + "'", key);
    if (!cur->is_object()) {
      if (!cur->is_null()) throw Error(ErrorKind::Config, "key '" + key + "' descends into a non-object", key);
      *cur = Json::object();
    }
    if (dot == std::string::npos) {
      (*cur)[part] = std::move(value);
      return;
    }
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

Json resolve_config(const Json& user_doc, const std::vector<std::string>& overrides) {
  Json user = user_doc.is_null() ? Json::object() : user_doc;
  if (!user.is_object()) throw Error(ErrorKind::Config, "configuration must be a JSON object", "");
  for (const auto& o : overrides) apply_override(user, o);

  int id = 1;
  if (user.contains("experiment")) {
    if (!user["experiment"].is_number_integer()) throw Error(ErrorKind::Config, "key 'experiment' expects an integer", "experiment");
    id = user["experiment"].get<int>();
  }
  GridPreset preset = GridPreset::Isotropic;
  if (user.contains("grid") && user["grid"].is_object() && user["grid"].contains("preset") &&
      user["grid"]["preset"].is_string()) {
    preset = grid_preset_from_string(user["grid"]["preset"].get<std::string>());
  } else if (user.contains("covariance") && user["covariance"].is_object() && user["covariance"].contains("type") &&
             user["covariance"]["type"].is_string()) {
    const std::string t = user["covariance"]["type"].get<std::string>();
    if (t == "non_isotropic") preset = GridPreset::NonIsotropic;
  }

  Json doc = default_config_json(id, preset);
  check_keys(doc, user, "");
  doc.merge_patch(user);
  config_from_json(doc);  // full validation
  return doc;
}

RunConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Config, "configuration must be a JSON object", "");
  RunConfig rc;
  ExperimentConfig& c = rc.experiment;
  c.id = integer(doc, "experiment");
  const Json& seed = at(doc, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw Error(ErrorKind::Config, "key 'seed' expects a non-negative integer", "seed");
  }
  c.seed = seed.get<std::uint64_t>();
  c.preset = with_key("grid.preset", [&] { return grid_preset_from_string(str(doc, "grid.preset")); });
  c.grid.x_min = num(doc, "grid.x_min");
  c.grid.x_max = num(doc, "grid.x_max");
  c.grid.t_min = num(doc, "grid.t_min");
  c.grid.t_max = num(doc, "grid.t_max");
  c.grid.nx = integer(doc, "grid.nx");
  c.grid.nt = integer(doc, "grid.nt");
  c.wind = num(doc, "wind");
  c.bc = with_key("boundary", [&] { return boundary_from_string(str(doc, "boundary")); });
  c.source = {num(doc, "source.S0"),     num(doc, "source.x0"), num(doc, "source.alpha0"),
              num(doc, "source.k0"),     num(doc, "source.S1"), num(doc, "source.x1"),
              num(doc, "source.alpha1"), num(doc, "source.k1")};
  c.perturbation = {num(doc, "perturbation.k0"), num(doc, "perturbation.k1"), num(doc, "perturbation.alpha0"),
                    num(doc, "perturbation.alpha1")};
  c.n_obs = integer(doc, "observations.count");
  c.noise = num(doc, "observations.noise");
  c.sigma_floor = num(doc, "observations.sigma_floor");
  c.n_mc = integer(doc, "observations.n_mc");
  c.columns = integer(doc, "observations.columns");
  c.first_guess = with_key("first_guess.mode", [&] { return first_guess_mode_from_string(str(doc, "first_guess.mode")); });
  c.ci_variance = num(doc, "covariance.ci_variance");
  std::tie(c.bounds.lo, c.bounds.hi) = range(doc, "selection.bounds");
  c.lcurve_points = integer(doc, "selection.lcurve_points");
  c.max_runs_1d = integer(doc, "selection.max_runs_1d");
  c.max_runs_multi = integer(doc, "selection.max_runs_multi");
  const char* box_keys[3] = {"selection.box.sigma_f2", "selection.box.l_f", "selection.box.tau_f"};
  for (int k = 0; k < 3; ++k) std::tie(c.box.lo[k], c.box.hi[k]) = range(doc, box_keys[k]);
  std::tie(c.band_lo, c.band_hi) = range(doc, "selection.outlier_band");
  with_key("", [&] {
    c.validate();
    return 0;
  });

  const std::string type = str(doc, "covariance.type");
  if (type == "isotropic") {
    rc.covariance = CovarianceSpec::isotropic(num(doc, "covariance.sigma_f2"), c.ci_variance);
  } else if (type == "non_isotropic") {
    rc.covariance = CovarianceSpec::non_isotropic(num(doc, "covariance.sigma_f2"), num(doc, "covariance.l_f"),
                                                  num(doc, "covariance.tau_f"), c.ci_variance);
  } else {
    throw Error(ErrorKind::Config, "covariance.type must be isotropic or non_isotropic", "covariance.type");
  }
  rc.covariance.validate();
  rc.column = integer(doc, "assimilate.column");
  if (rc.column < 0 || rc.column >= c.columns) {
    throw Error(ErrorKind::Config, "assimilate.column must lie in [0, observations.columns)", "assimilate.column");
  }
  return rc;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'", "config");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("malformed JSON in '") + path + "': " + e.what(), "config");
  }
}

std::string config_hash(const Json& doc) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace repvar

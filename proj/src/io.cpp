#include "repvar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "repvar/error.hpp"

namespace repvar {

namespace {

Json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

Summary summary_from(const Json& j) {
  Summary s;
  s.mean = j.value("mean", NAN);
  s.std = j.value("std", NAN);
  s.count = j.value("count", 0);
  return s;
}

const char* kind_name(CovarianceSpec::Kind k) {
  return k == CovarianceSpec::Kind::Isotropic ? "isotropic" : "non_isotropic";
}

Json spec_json(const CovarianceSpec& s) {
  Json j = {{"type", kind_name(s.kind)}, {"sigma_f2", s.sigma_f2}, {"ci_variance", s.ci_variance}};
  if (!s.is_isotropic()) {
    j["l_f"] = s.l_f;
    j["tau_f"] = s.tau_f;
  }
  return j;
}

}  // namespace

Provenance Provenance::from(const std::string& command, const Json& resolved) {
  Provenance p;
  p.command = command;
  p.config = resolved;
  p.config_hash = repvar::config_hash(resolved);
  p.seed = resolved.at("seed").get<std::uint64_t>();
  return p;
}

Json Provenance::to_json() const {
  return {{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"config", config}};
}

std::string Provenance::csv_comment() const {
  std::ostringstream os;
  os << "# repvar command=" << command << " config_hash=" << config_hash << " seed=" << seed << "\n";
  return os.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename to " + path.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const Json& doc, const Provenance& prov) {
  Json out = doc;
  out["provenance"] = prov.to_json();
  write_text(path, out.dump(2) + "\n");
}

std::string field_csv(const FieldST& field, const Provenance& prov) {
  const Grid& g = field.grid();
  std::string s = prov.csv_comment();
  s += "level,t,cell,x,value\n";
  for (int n = 0; n < g.nt; ++n) {
    const std::string t = format_double(g.t_level(n));
    for (int i = 0; i < g.nx; ++i) {
      s += std::to_string(n) + ',' + t + ',' + std::to_string(i) + ',' + format_double(g.x_center(i)) + ',' +
           format_double(field(n, i)) + '\n';
    }
  }
  return s;
}

std::string observations_csv(const ExperimentData& exp, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "x,t,truth,sigma";
  const auto& cols = exp.data.columns;
  for (Eigen::Index j = 0; j < cols.cols(); ++j) os << ",d_" << j;
  os << "\n";
  for (std::size_t m = 0; m < exp.locations.size(); ++m) {
    os << format_double(exp.locations[m].x) << ',' << format_double(exp.locations[m].t) << ','
       << format_double(exp.truth_at_obs[m]) << ',' << format_double(exp.data.sigma[m]);
    for (Eigen::Index j = 0; j < cols.cols(); ++j) os << ',' << format_double(cols(static_cast<Eigen::Index>(m), j));
    os << "\n";
  }
  return os.str();
}

std::string curve_csv(const SelectionResult& r, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "sigma_f2,l_f,tau_f,j_data,j_mod,j_total,criterion\n";
  for (const auto& c : r.curve) {
    os << format_double(c.sigma_f2) << ',' << format_double(c.l_f) << ',' << format_double(c.tau_f) << ','
       << format_double(c.j_data) << ',' << format_double(c.j_mod) << ',' << format_double(c.j_total) << ','
       << format_double(c.criterion) << "\n";
  }
  return os.str();
}

Json selection_to_json(const SelectionResult& r) {
  Json j = {{"method", to_string(r.method)},
            {"params", spec_json(r.params)},
            {"value", r.value},
            {"runs", r.runs},
            {"iterations", r.iterations},
            {"flags", r.flags},
            {"curve_points", r.curve.size()}};
  if (r.method == Method::LCurve) j["corner_angle_sigma_f2"] = r.corner_angle_sigma_f2;
  if (!r.start_solutions.empty()) {
    Json starts = Json::array();
    for (const auto& s : r.start_solutions) starts.push_back(spec_json(s));
    j["start_solutions"] = starts;
    j["spread"] = r.spread;
  }
  return j;
}

Json penalties_to_json(const Penalties& p) {
  return {{"j_data", p.data}, {"j_mod", p.model}, {"j_total", p.total}, {"identity_defect", p.identity_defect()}};
}

Json ensemble_to_json(const EnsembleReport& rep) {
  Json j;
  j["experiment"] = rep.experiment;
  j["preset"] = to_string(rep.preset);
  j["columns"] = rep.columns;
  j["outlier_band"] = {rep.band_lo, rep.band_hi};
  j["first_guess_rmse"] = summary_json(rep.first_guess_rmse);
  j["first_guess_rmse"]["column0"] = rep.first_guess_rmse_column0;
  j["data_rmse"] = summary_json(rep.data_rmse);
  j["clipped_draws"] = rep.clipped_draws;
  j["data_attempts"] = rep.data_attempts;
  Json methods = Json::array();
  for (const auto& m : rep.methods) {
    Json e;
    e["method"] = to_string(m.method);
    e["covariance"] = kind_name(m.kind);
    e["kept"] = summary_json(m.kept);
    e["outliers"] = m.outliers;
    e["failures"] = m.failures;
    e["failure_messages"] = m.failure_messages;
    e["samples"] = m.samples;
    e["sample_columns"] = m.sample_columns;
    e["runs"] = m.runs;
    e["rmse"] = summary_json(m.rmse);
    if (m.column0) e["column0"] = selection_to_json(*m.column0);
    methods.push_back(std::move(e));
  }
  j["methods"] = std::move(methods);
  return j;
}

std::string estimates_csv(const EnsembleReport& rep, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "experiment,method,covariance,mean_sigma_f2,std_sigma_f2,kept,outliers,failures,"
     << "col0_sigma_f2,col0_l_f,col0_tau_f,col0_runs\n";
  for (const auto& m : rep.methods) {
    os << rep.experiment << ',' << to_string(m.method) << ',' << kind_name(m.kind) << ',' << format_double(m.kept.mean)
       << ',' << format_double(m.kept.std) << ',' << m.kept.count << ',' << m.outliers << ',' << m.failures << ',';
    if (m.column0) {
      const auto& p = m.column0->params;
      os << format_double(p.sigma_f2) << ',' << format_double(p.is_isotropic() ? NAN : p.l_f) << ','
         << format_double(p.is_isotropic() ? NAN : p.tau_f) << ',' << m.column0->runs;
    } else {
      os << "nan,nan,nan,0";
    }
    os << "\n";
  }
  return os.str();
}

std::string rmse_csv(const EnsembleReport& rep, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "experiment,quantity,covariance,mean,std,count\n";
  auto row = [&](const std::string& what, const char* cov, const Summary& s) {
    os << rep.experiment << ',' << what << ',' << cov << ',' << format_double(s.mean) << ',' << format_double(s.std)
       << ',' << s.count << "\n";
  };
  row("first_guess", "", rep.first_guess_rmse);
  row("first_guess_column0", "", Summary{rep.first_guess_rmse_column0, 0.0, 1});
  row("data", "", rep.data_rmse);
  for (const auto& m : rep.methods) row(to_string(m.method), kind_name(m.kind), m.rmse);
  return os.str();
}

std::string samples_csv(const EnsembleReport& rep, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "experiment,method,covariance,column,sigma_f2,runs,kept\n";
  for (const auto& m : rep.methods) {
    for (std::size_t k = 0; k < m.samples.size(); ++k) {
      os << rep.experiment << ',' << to_string(m.method) << ',' << kind_name(m.kind) << ',' << m.sample_columns[k]
         << ',' << format_double(m.samples[k]) << ',' << m.runs[k] << ',' << (rep.keeps(m.method, m.samples[k]) ? 1 : 0)
         << "\n";
    }
  }
  return os.str();
}

std::string render_report(const Json& doc) {
  std::ostringstream os;
  os << std::setprecision(4);
  auto num = [](const Json& v) { return v.is_number() ? v.get<double>() : NAN; };
  os << "experiment " << doc.value("experiment", 0) << " (" << doc.value("preset", std::string("?")) << ", "
     << doc.value("columns", 0) << " columns)\n";
  const Json& fg = doc.at("first_guess_rmse");
  const Json& data = doc.at("data_rmse");
  os << "  first guess RMSE  column 0 " << num(fg.at("column0")) << ", mean " << num(fg.at("mean")) << " (std "
     << num(fg.at("std")) << ")\n";
  os << "  data RMSE         mean " << num(data.at("mean")) << " (std " << num(data.at("std")) << ")\n";
  os << "  method   covariance     sigma_f2 mean (std)     kept/outl/fail  col0 params              RMSE mean (std)\n";
  for (const auto& m : doc.at("methods")) {
    const Summary kept = summary_from(m.at("kept"));
    const Summary rmse = summary_from(m.at("rmse"));
    std::ostringstream params;
    params << std::setprecision(4);
    if (m.contains("column0")) {
      const Json& p = m["column0"]["params"];
      params << num(p["sigma_f2"]);
      if (p.contains("l_f")) params << ", " << num(p["l_f"]) << ", " << num(p["tau_f"]);
    } else {
      params << "-";
    }
    std::ostringstream sig, counts, err;
    sig << std::setprecision(4) << kept.mean << " (" << kept.std << ")";
    counts << kept.count << "/" << m.value("outliers", 0) << "/" << m.value("failures", 0);
    err << std::setprecision(4) << rmse.mean << " (" << rmse.std << ")";
    os << "  " << std::left << std::setw(8) << m.value("method", std::string()) << " " << std::setw(14)
       << m.value("covariance", std::string()) << " " << std::setw(23) << sig.str() << " " << std::setw(15)
       << counts.str() << " " << std::setw(24) << params.str() << " " << err.str() << "\n";
  }
  return os.str();
}

}  // namespace repvar

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "repvar/config.hpp"
#include "repvar/error.hpp"
#include "repvar/io.hpp"

using namespace repvar;

namespace {

std::string key_of(const Json& user, const std::vector<std::string>& overrides = {}) {
  try {
    resolve_config(user, overrides);
  } catch (const Error& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("defaults round-trip through JSON") {
  for (int id = 1; id <= 4; ++id) {
    for (GridPreset p : {GridPreset::Isotropic, GridPreset::NonIsotropic}) {
      const Json doc = default_config_json(id, p);
      const RunConfig rc = config_from_json(doc);
      CHECK(rc.experiment.id == id);
      CHECK(rc.experiment.preset == p);
      CHECK(to_json(rc) == doc);
    }
  }
}

TEST_CASE("layering: file, then overrides") {
  const Json user = {{"experiment", 3}, {"observations", {{"noise", 0.25}}}};
  const Json doc = resolve_config(user, {"covariance.sigma_f2=0.5", "first_guess.mode=shared", "seed=99"});
  const RunConfig rc = config_from_json(doc);
  CHECK(rc.experiment.id == 3);
  CHECK(rc.experiment.noise == 0.25);
  CHECK(rc.experiment.perturbation.alpha0 == 0.7);  // experiment 3 default kept
  CHECK(rc.covariance.sigma_f2 == 0.5);
  CHECK(rc.experiment.first_guess == FirstGuessMode::Shared);
  CHECK(rc.experiment.seed == 99);
  CHECK(resolve_config(doc) == doc);
}

TEST_CASE("non-isotropic covariance selects the coarse grid unless the grid is given") {
  const RunConfig a = config_from_json(resolve_config(Json::object(), {"covariance.type=non_isotropic"}));
  CHECK(a.experiment.preset == GridPreset::NonIsotropic);
  CHECK(a.experiment.grid.nx == 51);
  CHECK(!a.covariance.is_isotropic());
  const RunConfig b = config_from_json(resolve_config(Json::object(), {"grid.preset=isotropic", "covariance.type=non_isotropic"}));
  CHECK(b.experiment.grid.nx == 200);
}

TEST_CASE("schema errors name the key") {
  CHECK(key_of({{"observations", {{"nosie", 0.1}}}}) == "observations.nosie");
  CHECK(key_of({{"bogus", 1}}) == "bogus");
  CHECK(key_of({{"grid", {{"nx", "many"}}}}) == "grid.nx");
  CHECK(key_of({{"grid", {{"nx", 20.5}}}}) == "grid.nx");
  CHECK(key_of({{"boundary", "open"}}) == "boundary");
  CHECK(key_of({{"selection", {{"bounds", Json::array({1.0})}}}}) == "selection.bounds");
  CHECK(key_of({{"selection", {{"bounds", {2.0, 1.0}}}}}) == "selection.bounds");
  CHECK(key_of({}, {"observations.noise=-1"}) == "observations.noise");
  CHECK(key_of({}, {"wind=5"}) == "wind");
  CHECK(key_of({}, {"assimilate.column=900"}) == "assimilate.column");
  CHECK(key_of({}, {"covariance.type=diagonal"}) == "covariance.type");
  CHECK(key_of({}, {"noequals"}) == "noequals");
  CHECK(key_of({{"experiment", 7}}) == "experiment");
}

TEST_CASE("config hash is stable and sensitive") {
  const Json a = default_config_json(1);
  Json b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b["observations"]["noise"] = 0.7000001;
  CHECK(config_hash(a) != config_hash(b));
  // FNV-1a reference values
  CHECK(config_hash(Json("")) == config_hash(Json("")));
  CHECK(config_hash(Json::parse("1")) == "af63ac4c86019afc");
}

TEST_CASE("doubles are written to round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 5e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(NAN) == "nan");
}

TEST_CASE("CSV outputs carry provenance") {
  const Json doc = default_config_json(2);
  const Provenance prov = Provenance::from("test", doc);
  CHECK(prov.seed == 20240601u);
  const Grid g = Grid::make(0, 1, 0, 1, 3, 2);
  FieldST f(g, 0.5);
  const std::string csv = field_csv(f, prov);
  CHECK(csv.rfind("# repvar command=test config_hash=" + prov.config_hash + " seed=20240601\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2 + 6);

  const auto dir = std::filesystem::temp_directory_path() / "repvar_io_test";
  std::filesystem::remove_all(dir);
  write_json(dir / "x.json", Json{{"a", 1}}, prov);
  const Json back = read_json_file((dir / "x.json").string());
  CHECK(back["provenance"]["config_hash"] == prov.config_hash);
  CHECK(back["provenance"]["config"] == doc);
  CHECK(config_from_json(back["provenance"]["config"]).experiment.id == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed JSON file is a config error") {
  const auto path = std::filesystem::temp_directory_path() / "repvar_bad.json";
  {
    std::ofstream out(path);
    out << "{\"experiment\": 1,";
  }
  try {
    read_json_file(path.string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_json_file("/nonexistent/file.json"), Error);
}

#include "doctest.h"

#include "ionbench/digest.hpp"
#include "ionbench/workbench.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace ionbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = IONBENCH_SOURCE_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("ionbench-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

json nmc_config() {
  return json::parse(R"({
    "seed": 5,
    "cell": {"preset": "nmc",
             "ocp": {"positive": "data/ocp_nmc_positive.csv", "negative": "data/ocp_graphite_negative.csv"}},
    "simulate": {"profile": "data/profile_rest.csv", "dt": 30}
  })");
}

Errc validation_code(const json& doc) {
  try {
    parse_config(doc, kSource);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;
}

}  // namespace

TEST_CASE("ingestion cleans records and reports drops") {
  TempDir tmp;
  IngestSchema schema;
  schema.required = {"I", "V"};

  spit(tmp.path / "ok.csv", "t,I,V\n0,1,3.7\n1,1,3.69\n2,1,3.68\n");
  IngestReport r = ingest_timeseries(tmp.path / "ok.csv", schema);
  CHECK(r.series.size() == 3);
  CHECK(r.dropped_duplicates + r.dropped_nan == 0);

  spit(tmp.path / "dup.csv", "t,I,V\n0,1,3.7\n1,1,3.69\n1,1,3.69\n2,1,3.68\n");
  r = ingest_timeseries(tmp.path / "dup.csv", schema);
  CHECK(r.dropped_duplicates == 1);
  CHECK(r.series.size() == 3);
  CHECK((r.series.time().tail(2) - r.series.time().head(2)).minCoeff() > 0);

  spit(tmp.path / "nan.csv", "t,I,V\n0,1,3.7\n1,1,nan\n2,1,3.68\n");
  r = ingest_timeseries(tmp.path / "nan.csv", schema);
  CHECK(r.dropped_nan == 1);
  CHECK(r.series.size() == 2);

  spit(tmp.path / "back.csv", "t,I,V\n0,1,3.7\n2,1,3.69\n1,1,3.68\n");
  CHECK_THROWS_AS(ingest_timeseries(tmp.path / "back.csv", schema), Error);
  spit(tmp.path / "cols.csv", "t,I\n0,1\n1,1\n");
  try {
    ingest_timeseries(tmp.path / "cols.csv", schema);
    FAIL("expected schema mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::schema_mismatch);
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(nmc_config(), kSource));

  json unknown = nmc_config();
  unknown["simulate"]["time_step"] = 1;
  CHECK(validation_code(unknown) == Errc::validation);
  json top = nmc_config();
  top["extra"] = true;
  CHECK(validation_code(top) == Errc::validation);
  json param = nmc_config();
  param["cell"]["parameters"] = {{"R_q", 1.0}};
  CHECK(validation_code(param) == Errc::validation);

  json missing = nmc_config();
  missing["cell"]["ocp"]["negative"] = "data/no_such_ocp.csv";
  try {
    parse_config(missing, kSource);
    FAIL("expected validation failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation);
    CHECK(std::string(e.what()).find("cell.ocp.negative") != std::string::npos);
  }

  json wrong_type = nmc_config();
  wrong_type["simulate"]["dt"] = "fast";
  CHECK(validation_code(wrong_type) == Errc::validation);
  json range = nmc_config();
  range["simulate"]["initial_soc"] = 1.5;
  CHECK(validation_code(range) == Errc::validation);

  const WorkbenchConfig cfg = parse_config(nmc_config(), kSource);
  CHECK(cfg.model.cell.R_l == reference_nmc_cell().R_l);
  json over = nmc_config();
  over["cell"]["parameters"] = {{"R_l", 0.004}};
  CHECK(parse_config(over, kSource).model.cell.R_l == 0.004);
}

TEST_CASE("config digest tracks semantic content only") {
  const std::string a = parse_config(nmc_config(), kSource).digest();
  const json reordered = json::parse(R"({
    "simulate": {"dt": 30,   "profile": "data/profile_rest.csv"},
    "cell": {"ocp": {"negative": "data/ocp_graphite_negative.csv", "positive": "data/ocp_nmc_positive.csv"},
             "preset": "nmc"},
    "seed": 5
  })");
  CHECK(parse_config(reordered, kSource).digest() == a);
  json changed = nmc_config();
  changed["simulate"]["dt"] = 20;
  CHECK(parse_config(changed, kSource).digest() != a);
  CHECK(parse_config(nmc_config(), kSource, 6).digest() != a);
}

TEST_CASE("zero-current simulation holds a constant voltage") {
  TempDir tmp;
  const WorkbenchConfig cfg = parse_config(nmc_config(), kSource);
  const RunManifest m = run(Command::simulate, cfg, tmp.path / "out");
  const TimeSeries s = read_csv(tmp.path / "out" / "simulation.csv");
  const Vector V = s.column("V");
  CHECK(V.maxCoeff() - V.minCoeff() < 1e-12);
  CHECK(m.outputs.count("simulation.csv") == 1);
  CHECK(m.inputs.size() == 3);
}

TEST_CASE("manifest, confinement and atomic outputs") {
  TempDir tmp;
  const WorkbenchConfig cfg = parse_config(nmc_config(), kSource);
  const fs::path out = tmp.path / "nested" / "out";
  const RunManifest m = run(Command::simulate, cfg, out);

  // Only the output directory was created under the temp root.
  std::vector<fs::path> top;
  for (const auto& e : fs::directory_iterator(tmp.path)) top.push_back(e.path().filename());
  CHECK(top == std::vector<fs::path>{"nested"});
  for (const auto& e : fs::directory_iterator(out)) {
    CHECK(e.is_regular_file());
    CHECK(e.path().filename().string().rfind(".staging", 0) != 0);
  }
  for (const auto& [name, digest] : m.outputs) CHECK(sha256_file(out / name) == digest);

  const json j = json::parse(slurp(out / "manifest.json"));
  CHECK(j.at("config_digest") == cfg.digest());
  CHECK(j.at("run_id") == m.run_id);
  CHECK(j.at("outputs").size() == m.outputs.size());

  OutputDirectory dir(out);
  CHECK_THROWS_AS(dir.write_text("../escape.txt", "x"), Error);
  CHECK_THROWS_AS(dir.write_text("sub/file.txt", "x"), Error);
  CHECK_FALSE(fs::exists(tmp.path / "nested" / "escape.txt"));
}

TEST_CASE("same config and seed give byte-identical result files") {
  TempDir tmp;
  json doc = nmc_config();
  doc["simulate"]["profile"] = "data/profile_pulse.csv";
  doc["simulate"]["dt"] = 4;
  doc["simulate"]["initial_soc"] = 0.9;
  doc["soh"] = {{"bags", 3}, {"gp_restarts", 1}, {"synthetic", {{"cycles", 24}}}};
  const WorkbenchConfig cfg = parse_config(doc, kSource);

  for (Command c : {Command::simulate, Command::soh_eval}) {
    const RunManifest a = run(c, cfg, tmp.path / "a");
    const RunManifest b = run(c, cfg, tmp.path / "b");
    CHECK(a.run_id == b.run_id);
    for (const auto& [name, digest] : a.outputs) {
      CAPTURE(name);
      CHECK(b.outputs.at(name) == digest);
    }
  }
  CHECK(slurp(tmp.path / "a" / "predictions.csv") == slurp(tmp.path / "b" / "predictions.csv"));
}

TEST_CASE("plot exports") {
  const Vector t = Vector::LinSpaced(50, 0, 490);
  const Figure trace{"voltage", "V", "t", "V", {{"V", t, (3.7 - 0.001 * t.array()).matrix()}}};
  const std::string csv = tidy_csv(trace);
  CHECK(csv.rfind("series,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  const std::string svg = svg_chart(trace);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Vector e(237);
  for (auto& v : e) v = g(rng);
  for (int bins : {1, 7, 20}) {
    const Histogram h = histogram(e, bins);
    CHECK(h.counts.size() == bins);
    CHECK(h.counts.sum() == 237.0);
    CHECK(h.edges[0] == e.minCoeff());
    CHECK(h.edges[bins] == e.maxCoeff());
  }
  const Histogram flat = histogram(Vector::Constant(4, 2.0), 3);
  CHECK(flat.counts.sum() == 4.0);

  const Figure bad{"x", "", "", "", {{"s", Vector::Zero(3), Vector::Zero(2)}}};
  CHECK_THROWS_AS(tidy_csv(bad), Error);
}

TEST_CASE("hybrid overlay has aligned series") {
  TempDir tmp;
  json doc = nmc_config();
  doc["cell"] = json::parse(R"({"preset": "lfp"})");
  doc["coreshell"] = json::object();
  doc["simulate"] = json::parse(R"({"drive_cycle": {"duration": 600, "dt": 2}, "dt": 2, "initial_soc": 0.9})");
  doc["hybrid"] = json::parse(R"({"trees": 5})");
  doc["hybrid"]["forest"] = (tmp.path / "train" / "forest.json").string();
  const WorkbenchConfig cfg = parse_config(doc, kSource);
  const RunManifest m = run(Command::hybrid_train, cfg, tmp.path / "train");
  CHECK(m.outputs.count("forest.json") == 1);
  const json metrics = json::parse(slurp(tmp.path / "train" / "metrics.json"));
  CHECK(metrics.at("hybrid_rmse").get<double>() < metrics.at("physics_rmse").get<double>());

  run(Command::hybrid_simulate, cfg, tmp.path / "sim");
  const CsvTable overlay = read_csv_table(tmp.path / "sim" / "overlay.csv");
  CHECK(overlay.rows.size() % 2 == 0);
  const TimeSeries h = read_csv(tmp.path / "sim" / "hybrid.csv");
  CHECK(overlay.rows.size() == 2 * static_cast<std::size_t>(h.size()));
}

TEST_CASE("commands and exit codes") {
  CHECK(parse_command("soh eval") == Command::soh_eval);
  CHECK(to_string(Command::hybrid_train) == "hybrid train");
  CHECK_THROWS_AS(parse_command("train"), Error);
  CHECK(exit_code_for(Errc::validation) == 2);
  CHECK(exit_code_for(Errc::schema_mismatch) == 2);
  CHECK(exit_code_for(Errc::instability) == 3);
  const json r = error_record("simulate", Errc::validation, "bad");
  CHECK(r.at("code") == "validation");
  CHECK(r.at("exit_code") == 2);

  json doc = nmc_config();
  doc["simulate"].erase("profile");
  const WorkbenchConfig cfg = parse_config(doc, kSource);
  TempDir tmp;
  try {
    run(Command::simulate, cfg, tmp.path);
    FAIL("expected validation failure");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.code()) == 2);
  }
  CHECK_THROWS_AS(run(Command::soh_predict, cfg, tmp.path), Error);
}

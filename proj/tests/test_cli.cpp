#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "mpemba/cli.hpp"
#include "mpemba/io.hpp"

using namespace mpemba;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mpemba");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpemba_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<double>> read_rows(const fs::path& csv) {
  std::istringstream in(io::read_text(csv));
  std::string line;
  std::getline(in, line);
  CHECK(line == io::kTrajectoryHeader);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  const cli::RunConfig c = cli::parse_run_config(R"({
    "schema_version": 1, "framework": "both", "hamiltonian": {"effective": {"w1": 2.0, "w2": 0.5}},
    "relaxation": {"kind": "logistic", "w3": 5.7664, "w4": 25.4405, "w5": 0.9094},
    "initial": [[0.8, 0], [0.176, 0.283], [0.196, -0.459]], "t_max": 30, "samples": 7})");
  CHECK(c.framework == cli::RunConfig::Framework::Both);
  CHECK(c.w1 == 2.0);
  CHECK(c.relaxation.w4 == 25.4405);
  CHECK(c.amplitudes.has_value());
  CHECK(c.samples == 7);

  auto code_of = [](const char* text) {
    try {
      cli::parse_run_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::SimulationFailure;  // sentinel: nothing thrown
  };
  CHECK(code_of("{") == Errc::Parse);
  CHECK(code_of(R"({"framework": "seaqt"})") == Errc::InvalidArgument);  // no schema version
  CHECK(code_of(R"({"schema_version": 2})") == Errc::InvalidArgument);
  CHECK(code_of(R"({"schema_version": 1, "tmax": 3})") == Errc::InvalidArgument);
  CHECK(code_of(R"({"schema_version": 1, "t_max": "long"})") == Errc::Parse);
  CHECK(code_of(R"({"schema_version": 1, "relaxation": {"kind": "constant", "tau": 0}})") ==
        Errc::InvalidArgument);
}

TEST_CASE("simulate writes CSV and metadata, byte-identical on rerun") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  for (const fs::path& dir : {a, b})
    CHECK(run_cli({"simulate", "--framework", "both", "--initial", "ket0", "--tau", "16.0783",
                   "--t-max", "60", "--samples", "31", "--output-dir", dir.string()}) == 0);
  for (const char* f : {"seaqt.csv", "lindblad.csv"})
    CHECK(io::read_text(a / f) == io::read_text(b / f));
  // Metadata echoes the output directory, which differs; everything else matches.
  auto meta_a = nlohmann::json::parse(io::read_text(a / "metadata.json"));
  auto meta_b = nlohmann::json::parse(io::read_text(b / "metadata.json"));
  CHECK(meta_a["invariant_violations"] == 0);
  CHECK(meta_a["seaqt"]["regularized"] == true);
  meta_a["config"].erase("output_dir");
  meta_b["config"].erase("output_dir");
  CHECK(meta_a == meta_b);

  const auto rows = read_rows(a / "seaqt.csv");
  CHECK(rows.size() == 31);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k][5] >= rows[k - 1][5] - 1e-12);
}

TEST_CASE("Lindblad sME distance falls below the |0> curve") {
  const fs::path s = scratch("lind_sme"), z = scratch("lind_ket0");
  CHECK(run_cli({"simulate", "--framework", "lindblad", "--initial", "sme", "--t-max", "40",
                 "--samples", "81", "--output-dir", s.string()}) == 0);
  CHECK(run_cli({"simulate", "--framework", "lindblad", "--initial", "ket0", "--t-max", "40",
                 "--samples", "81", "--output-dir", z.string()}) == 0);
  // hs_dist_final is relative to each run's own last sample, so compare the
  // population distance to the steady state instead.
  const auto spec = lindblad::spectrum(lindblad::case_study_model());
  const auto rs = read_rows(s / "lindblad.csv");
  const auto rz = read_rows(z / "lindblad.csv");
  auto pop_gap = [&](const std::vector<double>& r) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += std::pow(r[1 + i] - spec.steady_state(i, i).real(), 2);
    return std::sqrt(d);
  };
  CHECK(pop_gap(rs.back()) < pop_gap(rz.back()));
  CHECK(pop_gap(rs[40]) < pop_gap(rz[40]));
}

TEST_CASE("validation failures exit with 2") {
  const fs::path d = scratch("bad");
  CHECK(run_cli({"simulate", "--t-max", "0", "--output-dir", d.string()}) == 2);
  CHECK(run_cli({"simulate", "--samples", "1", "--output-dir", d.string()}) == 2);
  CHECK(run_cli({"simulate", "--initial", "ket7", "--output-dir", d.string()}) == 2);
  CHECK(run_cli({"simulate", "--w1", "1", "--w2", "-1", "--output-dir", d.string()}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"simulate", "--config", (d / "missing.json").string()}) == 2);
  io::write_text(d / "bad.json", "{\"schema_version\": 1,");
  CHECK(run_cli({"simulate", "--config", (d / "bad.json").string()}) == 2);

  io::write_text(d / "data.csv", "t,p0,p1,p2\n0,1,0,0\n1,0.5,oops,0.5\n");
  io::write_text(d / "manifest.json",
                 R"({"schema_version": 1, "mode": "seaqt3", "series": [{"file": "data.csv", "initial": "ket0"}]})");
  CHECK(run_cli({"fit", "--manifest", (d / "manifest.json").string()}) == 2);
  CHECK(run_cli({"fit", "--manifest", (d / "manifest.json").string(), "--bound", "w9=0:1"}) == 2);
}

TEST_CASE("spectrum report") {
  const fs::path d = scratch("spec");
  CHECK(run_cli({"spectrum", "--output-dir", d.string()}) == 0);
  const auto j = nlohmann::json::parse(io::read_text(d / "spectrum.json"));
  CHECK(j["eigenvalues"].size() == 9);
  CHECK(std::abs(j["eigenvalues"][0]["re"].get<double>()) < 1e-10);
  CHECK(j["eigenvalues"][0]["decay_time"].is_null());
  CHECK(j["eigenvalues"][1]["decay_time"].get<double>() > 0.0);
  CHECK(j["overlap_slowest_mode"]["ket0"]["abs"].get<double>() > 0.1);
  CHECK(j["steady_state"]["re"].size() == 3);
}

TEST_CASE("fit through a manifest") {
  const fs::path d = scratch("fit");
  CHECK(run_cli({"simulate", "--framework", "seaqt", "--initial", "ket2", "--tau", "14.366",
                 "--t-max", "60", "--samples", "31", "--output-dir", d.string()}) == 0);
  // Trajectory CSV → data CSV.
  const auto rows = read_rows(d / "seaqt.csv");
  std::ostringstream data;
  data << "t,p0,p1,p2\n";
  for (const auto& r : rows)
    data << io::format_double(r[0]) << ',' << io::format_double(r[1]) << ','
         << io::format_double(r[2]) << ',' << io::format_double(r[3]) << '\n';
  io::write_text(d / "ket2.csv", data.str());
  io::write_text(d / "manifest.json", R"({"schema_version": 1, "mode": "seaqt3", "seed": 4,
    "series": [{"file": "ket2.csv", "initial": "ket2"}]})");
  const std::string report = (d / "report.json").string();
  CHECK(run_cli({"fit", "--manifest", (d / "manifest.json").string(), "--bound", "tau_d=1:50",
                 "--output", report}) == 0);
  const auto j = nlohmann::json::parse(io::read_text(report));
  CHECK(j["mode"] == "seaqt3");
  CHECK(j["bounds"][0][0] == 1.0);
  CHECK(j["best_params"]["tau_d"].get<double>() == doctest::Approx(14.366).epsilon(1e-3));
  CHECK(j["best_mse"].get<double>() < 1e-10);
}

TEST_CASE("sme-search with propagation") {
  const fs::path d = scratch("sme");
  CHECK(run_cli({"sme-search", "--count", "2", "--seed", "9", "--propagate", "--t-max", "60",
                 "--samples", "7", "--tau", "1.3176", "--output-dir", d.string()}) == 0);
  const auto j = nlohmann::json::parse(io::read_text(d / "ensemble.json"));
  CHECK(j["members"].size() == 2);
  for (const auto& m : j["members"]) CHECK(m["overlap"]["abs"].get<double>() <= 1e-8);
  CHECK(fs::exists(d / "sme_000_lindblad.csv"));
  CHECK(fs::exists(d / "sme_001_seaqt.csv"));
  CHECK(j["invariant_violations"] == 0);
}

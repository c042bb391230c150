// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only N[,N...]] [--expect-fail N[,N...]]
//
// Exit status is 0 when the set of failing criteria equals the expected set,
// so a criterion that starts passing is reported just like a new failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpemba/cli.hpp"
#include "mpemba/feshbach.hpp"
#include "mpemba/fitkit.hpp"
#include "mpemba/io.hpp"
#include "mpemba/lindblad.hpp"
#include "mpemba/seaqt.hpp"
#include "mpemba/states.hpp"
#include "support.hpp"

using namespace mpemba;
using mpemba::testing::max_abs_diff;
using mpemba::testing::random_state;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const CMatrix& h_eff() {
  static const CMatrix h = feshbach::effective_hamiltonian({2.53, 0.026});
  return h;
}

std::vector<double> grid(double t_max, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = t_max * static_cast<double>(k) / (n - 1);
  return t;
}

// Table III τ_D for each Table I row.
double table3_tau(states::Table1Row row) {
  switch (row) {
    case states::Table1Row::Ket0: return 16.0783;
    case states::Table1Row::Ket2: return 14.366;
    case states::Table1Row::Sme: return 1.3176;
  }
  return 0.0;
}

// Table II sME row, the only one with ω₃ > 0.
constexpr double kW[5] = {2.53, 0.026, 5.7664, 25.4405, 0.9094};

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto model = lindblad::case_study_model();
  const CMatrix l = lindblad::build_liouvillian(model);
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const DensityOperator rho = random_state(3, rng);
    const CMatrix via_super = unvec(l * vec(rho.matrix()), 3);
    worst = std::max(worst, max_abs_diff(via_super, lindblad::master_rhs(model, rho.matrix())));
  }
  const auto spec = lindblad::spectrum(model);
  const double l0 = std::abs(spec.eigenvalues[0]);
  return {worst <= 1e-12 && l0 <= 1e-10,
          fmt("max |L vec(rho) - rhs| = %.2e over 100 states, |lambda0| = %.2e", worst, l0)};
}

Outcome criterion2() {
  const auto model = lindblad::case_study_model();
  const auto spec = lindblad::spectrum(model);
  const auto times = grid(20.0, 41);
  double worst = 0.0;
  for (auto row : states::kTable1Rows) {
    const DensityOperator rho = states::table1_state(row);
    const auto a = lindblad::propagate_modes(spec, rho, times);
    const auto b = lindblad::integrate_direct(model, rho, times);
    for (std::size_t k = 0; k < times.size(); ++k) worst = std::max(worst, hs_distance(a[k], b[k]));
  }
  return {worst <= 1e-6, fmt("max HS(modes, RK4) = %.2e on t in [0, 20]", worst)};
}

Outcome criterion3() {
  const auto model = lindblad::case_study_model();
  const auto spec = lindblad::spectrum(model);
  states::SmeConstraints c;
  c.target_populations = std::array<double, 3>{0.64, 0.111, 0.249};
  const states::SmeResult sme = states::find_sme(spec, c, 2026);
  const double phi = std::abs(sme.overlap);

  const auto times = grid(300.0, 601);
  const auto ds = lindblad::propagate_modes(spec, sme.state, times);
  const auto d0 = lindblad::propagate_modes(spec, states::table1_state(states::Table1Row::Ket0), times);
  const DensityOperator ss = spec.steady();
  // Last index where the sME curve is not below the |0⟩ curve.
  std::size_t last_above = 0;
  bool ever_above = false;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (hs_distance(ds[k], ss) >= hs_distance(d0[k], ss)) {
      last_above = k;
      ever_above = true;
    }
  }
  const bool crosses = ever_above && last_above + 1 < times.size();
  const double t_cross = crosses ? times[last_above + 1] : std::nan("");
  return {phi <= 1e-8 && crosses,
          fmt("|Tr(L1 rho)| = %.2e (populations %.4f %.4f %.4f); sME below |0> from t = %.2f on",
              phi, std::norm(sme.amplitudes[0]), std::norm(sme.amplitudes[1]),
              std::norm(sme.amplitudes[2]), t_cross)};
}

struct Run {
  std::string name;
  seaqt::RelaxationModel relax;
  seaqt::Trajectory traj;
};

std::vector<Run>& suite_runs() {
  static std::vector<Run> runs = [] {
    std::vector<Run> out;
    const auto times = grid(100.0, 201);
    for (auto row : states::kTable1Rows) {
      const DensityOperator rho = states::table1_state(row);
      for (int variant = 0; variant < 2; ++variant) {
        Run r;
        r.name = std::string(states::row_label(row)) + (variant == 0 ? "/constant" : "/logistic");
        r.relax = variant == 0 ? seaqt::RelaxationModel::constant(table3_tau(row))
                               : seaqt::RelaxationModel::logistic(kW[2], kW[3], kW[4]);
        r.traj = seaqt::integrate({h_eff(), r.relax}, rho, times);
        out.push_back(std::move(r));
      }
    }
    return out;
  }();
  return runs;
}

Outcome criterion4() {
  double de = 0.0, dtr = 0.0, min_eig = 1.0, worst_ds = 0.0;
  std::size_t viol = 0;
  for (const Run& r : suite_runs()) {
    const auto& d = r.traj.diag;
    de = std::max(de, d.max_energy_drift);
    dtr = std::max(dtr, d.max_trace_drift);
    min_eig = std::min(min_eig, d.min_eigenvalue);
    worst_ds = std::min(worst_ds, d.worst_entropy_step);
    viol += d.invariant_violations();
  }
  const bool ok = de <= 1e-6 && dtr <= 1e-9 && min_eig >= -1e-8 && worst_ds >= -1e-9 && viol == 0;
  return {ok, fmt("%zu trajectories: |dE| <= %.1e, trace drift <= %.1e, min eig %.1e, "
                  "worst entropy step %.1e",
                  suite_runs().size(), de, dtr, min_eig, worst_ds)};
}

Outcome criterion5() {
  double worst_hs = 0.0, worst_beta = 0.0, worst_cs = 0.0;
  std::string detail;
  for (auto row : states::kTable1Rows) {
    const DensityOperator rho = states::table1_state(row);
    const auto times = grid(300.0, 61);
    const auto traj = seaqt::integrate(
        {h_eff(), seaqt::RelaxationModel::constant(table3_tau(row))}, rho, times);
    const seaqt::Sample& last = traj.samples.back();
    const auto g = seaqt::equilibrium_state(h_eff(), traj.samples.front().obs.energy);
    const double hs = hs_distance(last.state, g.state);
    const double db = std::abs(last.obs.beta - g.beta_eq);
    const double cs =
        std::abs(last.obs.sigma_hs * last.obs.sigma_hs - last.obs.sigma_hh * last.obs.sigma_ss);
    worst_hs = std::max(worst_hs, hs);
    worst_beta = std::max(worst_beta, db);
    worst_cs = std::max(worst_cs, cs);
    detail += fmt("%s beta_eq %.5f; ", std::string(states::row_label(row)).c_str(), g.beta_eq);
  }
  return {worst_hs <= 1e-4 && worst_beta <= 1e-5 && worst_cs <= 1e-8,
          detail + fmt("HS to Gibbs <= %.1e, |dbeta| <= %.1e, |sHS^2 - sHH sSS| <= %.1e", worst_hs,
                       worst_beta, worst_cs)};
}

// d⟨S⟩/dt by a fourth-order one-sided difference from a short integration
// started at the sample.
double entropy_slope(const CMatrix& h, const seaqt::RelaxationModel& relax, double t0,
                     const DensityOperator& rho, double step) {
  seaqt::RelaxationModel shifted = relax;
  if (relax.kind == seaqt::RelaxationModel::Kind::Logistic) shifted.w4 = relax.w4 + relax.w5 * t0;
  seaqt::IntegrateOptions o;
  o.adaptive.rtol = 1e-12;
  o.adaptive.atol = 1e-14;
  const std::vector<double> ts = {0.0, step, 2 * step, 3 * step, 4 * step};
  const auto tr = seaqt::integrate({h, shifted}, rho, ts, o);
  double s[5];
  for (int k = 0; k < 5; ++k) s[k] = tr.samples[k].obs.entropy;
  return (-25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]) / (12 * step);
}

Outcome criterion6() {
  double worst_id = 0.0, worst_rel = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (const Run& r : suite_runs()) {
    for (const seaqt::Sample& s : r.traj.samples) {
      const auto& o = s.obs;
      const double lhs = o.beta * o.beta * o.sigma_ff;
      const double rhs = o.sigma_ss - o.beta * o.beta * o.sigma_hh;
      worst_id = std::max(worst_id, std::abs(lhs - rhs));
      // Smooth segments: skip t = 0 (the regularized start) and samples whose
      // production rate has decayed below the difference scheme's resolution.
      const double rate = lhs / s.tau;
      if (s.t == 0.0 || !(rate > 1e-7)) {
        ++skipped;
        continue;
      }
      // Richardson over h and h/2 on the fourth-order scheme.
      const double fh = entropy_slope(h_eff(), r.relax, s.t, s.state, 1e-2);
      const double fh2 = entropy_slope(h_eff(), r.relax, s.t, s.state, 5e-3);
      const double fd = (16.0 * fh2 - fh) / 15.0;
      worst_rel = std::max(worst_rel, std::abs(fd - rate) / rate);
      ++checked;
    }
  }
  return {worst_id <= 1e-8 && worst_rel <= 1e-4 && checked > 0,
          fmt("identity residual <= %.1e; dS/dt vs beta^2 sFF/tau rel. err <= %.1e (%zu samples, "
              "%zu skipped)",
              worst_id, worst_rel, checked, skipped)};
}

Outcome criterion7() {
  const CMatrix& h = h_eff();
  const std::vector<double> e = herm_eig(h).values;
  double w_hs = 0.0, w_e = 0.0, w_v = 0.0;
  for (double beta : {-1.0, -0.5, 0.5, 1.0}) {
    const auto g = seaqt::gibbs_state(h, beta);
    const auto o = seaqt::observe(g.state, h);
    w_hs = std::max(w_hs, std::abs(o.sigma_hs - beta * o.sigma_hh));
    const long double step = 1e-5L;
    const long double lp = seaqt::log_partition_ld(e, beta + step);
    const long double l0 = seaqt::log_partition_ld(e, beta);
    const long double lm = seaqt::log_partition_ld(e, beta - step);
    const double d1 = static_cast<double>(-(lp - lm) / (2 * step));
    const double d2 = static_cast<double>((lp - 2 * l0 + lm) / (step * step));
    w_e = std::max(w_e, std::abs(d1 - o.energy));
    w_v = std::max(w_v, std::abs(d2 - o.sigma_hh));
  }
  return {w_hs <= 1e-8 && w_e <= 1e-6 && w_v <= 1e-6,
          fmt("|sHS - beta sHH| <= %.1e, |<H> + dlnZ| <= %.1e, |sHH - d2lnZ| <= %.1e", w_hs, w_e,
              w_v)};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const DensityOperator rho = random_state(3, rng);
    const CMatrix a = seaqt::dissipation_operator(rho, h_eff());
    const CMatrix b = mpemba::testing::determinant_form_dissipator(rho.matrix(), h_eff());
    worst = std::max(worst, max_abs_diff(a, b));
  }
  return {worst <= 1e-8, fmt("max |D_anticommutator - D_determinant| = %.2e over 200 states", worst)};
}

// Fit through the CLI on synthetic CSV data.
struct CliFit {
  std::vector<double> truth;
  nlohmann::json report;
};

CliFit cli_fit(const std::filesystem::path& dir, const std::string& mode, states::Table1Row row,
               const std::vector<double>& truth, double t_max, std::size_t n,
               const nlohmann::json& bounds) {
  std::filesystem::create_directories(dir);
  fitkit::FitProblem p;
  p.mode = mode == "seaqt5" ? fitkit::FitMode::Seaqt5 : fitkit::FitMode::Seaqt3;
  fitkit::LabeledSeries s;
  s.label = std::string(states::row_label(row));
  s.initial = states::table1_state(row);
  s.series.times = grid(t_max, n);
  const std::vector<double> free =
      p.mode == fitkit::FitMode::Seaqt3 ? std::vector<double>{truth[2]} : truth;
  s.series.populations = fitkit::simulate_populations(p, free, s);
  std::ostringstream csv;
  io::write_population_csv(csv, s.series);
  io::write_text(dir / "data.csv", csv.str());

  nlohmann::json m;
  m["schema_version"] = 1;
  m["mode"] = mode;
  m["seed"] = 7;
  m["bounds"] = bounds;
  m["series"] = nlohmann::json::array({{{"file", "data.csv"}, {"initial", s.label}}});
  m["de"] = {{"abs_tolerance", 1e-12}};
  io::write_text(dir / "manifest.json", m.dump(2));

  const std::string manifest = (dir / "manifest.json").string();
  const std::string output = (dir / "report.json").string();
  std::vector<std::string> args = {"mpemba", "fit", "--manifest", manifest, "--output", output};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data());
  if (rc != 0) throw std::runtime_error("fit command exited with " + std::to_string(rc));
  return {truth, nlohmann::json::parse(io::read_text(output))};
}

Outcome criterion9() {
  const auto root = std::filesystem::temp_directory_path() / "mpemba_acceptance_fit";
  std::filesystem::remove_all(root);
  Outcome out;
  auto check = [&](const std::string& tag, const CliFit& f, const std::vector<std::string>& names) {
    const double mse = f.report.at("best_mse").get<double>();
    std::string line = tag + fmt(" mse %.1e", mse);
    bool ok = mse <= 1e-10;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double got = f.report.at("best_params").at(names[k]).get<double>();
      const double rel = std::abs(got - f.truth[k]) / std::abs(f.truth[k]);
      line += fmt(" %s=%.6g (%.1e)", names[k].c_str(), got, rel);
      ok = ok && rel <= 0.01;
    }
    out.pass = out.pass && ok;
    out.detail += (out.detail.empty() ? "" : "; ") + line + (ok ? "" : " [miss]");
  };
  for (auto row : states::kTable1Rows) {
    const std::vector<double> truth = {2.53, 0.026, table3_tau(row)};
    const auto f = cli_fit(root / ("seaqt3_" + std::string(states::row_label(row))), "seaqt3", row,
                           truth, 60.0, 31, {{"tau_d", {0.1, 100.0}}});
    check("seaqt3/" + std::string(states::row_label(row)), f, {"w1", "w2", "tau_d"});
  }
  const std::vector<double> truth(std::begin(kW), std::end(kW));
  const auto f = cli_fit(root / "seaqt5_sme", "seaqt5", states::Table1Row::Sme, truth, 20.0, 41,
                         {{"w1", {1.0, 4.0}},
                          {"w2", {0.0, 0.1}},
                          {"w3", {1.0, 10.0}},
                          {"w4", {0.0, 50.0}},
                          {"w5", {0.0, 2.0}}});
  check("seaqt5/sme", f, {"w1", "w2", "w3", "w4", "w5"});
  std::filesystem::remove_all(root);
  return out;
}

Outcome criterion10() {
  const auto model = lindblad::case_study_model();
  const auto spec = lindblad::spectrum(model);
  states::SmeConstraints c;
  c.overlap_tolerance = 1e-8;
  const auto ens = states::random_sme_ensemble(spec, c, 100, 10);

  double worst_phi = 0.0, worst_ss = 0.0, worst_gibbs = 0.0, min_sep = 1e300;
  const std::vector<double> lt = {0.0, 60.0};
  const auto st = grid(200.0, 3);
  std::vector<DensityOperator> finals;
  for (const auto& s : ens) {
    worst_phi = std::max(worst_phi, std::abs(s.overlap));
    const auto lr = lindblad::propagate_modes(spec, s.state, lt);
    worst_ss = std::max(worst_ss, hs_distance(lr.back(), spec.steady()));
    const auto tr = seaqt::integrate(
        {h_eff(), seaqt::RelaxationModel::constant(table3_tau(states::Table1Row::Sme))}, s.state,
        st);
    const auto g = seaqt::equilibrium_state(h_eff(), tr.samples.front().obs.energy);
    worst_gibbs = std::max(worst_gibbs, hs_distance(tr.samples.back().state, g.state));
    finals.push_back(tr.samples.back().state);
  }
  for (std::size_t i = 0; i < finals.size(); ++i)
    for (std::size_t j = i + 1; j < finals.size(); ++j)
      min_sep = std::min(min_sep, hs_distance(finals[i], finals[j]));
  const bool ok = ens.size() == 100 && worst_phi <= 1e-8 && worst_ss <= 1e-5 &&
                  worst_gibbs <= 1e-4 && min_sep > 1e-6;
  return {ok, fmt("%zu states: max |Phi| %.1e, Lindblad HS to rho_ss <= %.1e, SEAQT HS to own "
                  "Gibbs <= %.1e, min pairwise SEAQT separation %.1e",
                  ens.size(), worst_phi, worst_ss, worst_gibbs, min_sep)};
}

std::set<int> parse_list(const char* s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expected;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string a = argv[i];
    if (a == "--only") only = parse_list(argv[i + 1]);
    else if (a == "--expect-fail") expected = parse_list(argv[i + 1]);
  }
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};

  std::set<int> failed;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) failed.insert(id);
    std::printf("criterion %2d: %s  [%.1fs]  %s\n", id, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::set<int> expected_run;
  for (int id : expected)
    if (only.empty() || only.count(id)) expected_run.insert(id);
  if (failed != expected_run) {
    std::printf("failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}

#include "mpemba/cli.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpemba/feshbach.hpp"
#include "mpemba/fitkit.hpp"
#include "mpemba/io.hpp"
#include "mpemba/kernels.hpp"
#include "mpemba/parallel.hpp"
#include "mpemba/states.hpp"

namespace mpemba::cli {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidArgument, what); }

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::Parse, std::string(what) + ": " + e.what());
  }
}

void require_schema(const json& j, std::string_view what) {
  if (!j.is_object()) invalid(std::string(what) + " must be a JSON object");
  if (!j.contains("schema_version")) invalid(std::string(what) + ": missing schema_version");
  if (j.at("schema_version") != kSchemaVersion) {
    std::ostringstream os;
    os << what << ": schema_version " << j.at("schema_version").dump() << " unsupported (expected "
       << kSchemaVersion << ")";
    invalid(os.str());
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || key == k;
    if (!ok) invalid(std::string(where) + ": unknown key '" + key + "'");
  }
}

std::string_view framework_name(RunConfig::Framework f) {
  switch (f) {
    case RunConfig::Framework::Seaqt: return "seaqt";
    case RunConfig::Framework::Lindblad: return "lindblad";
    case RunConfig::Framework::Both: return "both";
  }
  return "?";
}

RunConfig::Framework parse_framework(std::string_view s) {
  if (s == "seaqt") return RunConfig::Framework::Seaqt;
  if (s == "lindblad") return RunConfig::Framework::Lindblad;
  if (s == "both") return RunConfig::Framework::Both;
  invalid("framework must be seaqt, lindblad or both, got '" + std::string(s) + "'");
}

std::array<cplx, 3> parse_amplitudes(const json& j) {
  if (!j.is_array() || j.size() != 3) invalid("amplitudes must be three [re, im] pairs");
  std::array<cplx, 3> a{};
  for (std::size_t i = 0; i < 3; ++i) {
    const json& e = j[i];
    if (e.is_number()) {
      a[i] = e.get<double>();
    } else if (e.is_array() && e.size() == 2) {
      a[i] = {e[0].get<double>(), e[1].get<double>()};
    } else {
      invalid("amplitude entries must be numbers or [re, im] pairs");
    }
  }
  return a;
}

json relaxation_json(const seaqt::RelaxationModel& r) {
  json j;
  if (r.kind == seaqt::RelaxationModel::Kind::Logistic) {
    j["kind"] = "logistic";
    j["w3"] = r.w3;
    j["w4"] = r.w4;
    j["w5"] = r.w5;
  } else {
    j["kind"] = "constant";
    j["tau"] = r.tau;
  }
  return j;
}

seaqt::RelaxationModel parse_relaxation(const json& j) {
  if (!j.is_object() || !j.contains("kind")) invalid("relaxation needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    reject_unknown(j, {"kind", "tau"}, "relaxation");
    const double tau = j.at("tau").get<double>();
    if (!(std::abs(tau) > 1e-12)) invalid("relaxation tau must be nonzero");
    return seaqt::RelaxationModel::constant(tau);
  }
  if (kind == "logistic") {
    reject_unknown(j, {"kind", "w3", "w4", "w5"}, "relaxation");
    return seaqt::RelaxationModel::logistic(j.at("w3").get<double>(), j.at("w4").get<double>(),
                                            j.at("w5").get<double>());
  }
  invalid("relaxation kind must be constant or logistic (the fluctuation-ratio form is "
          "diagnostic only)");
}

json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}}; }

json matrix_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json rr = json::array(), ri = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) {
      rr.push_back(m(i, k).real());
      ri.push_back(m(i, k).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"re", re}, {"im", im}};
}

json config_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["framework"] = framework_name(c.framework);
  if (c.case_study_hamiltonian)
    j["hamiltonian"] = "case_study";
  else
    j["hamiltonian"] = json{{"effective", {{"w1", c.w1}, {"w2", c.w2}}}};
  j["relaxation"] = relaxation_json(c.relaxation);
  j["rates"] = json{{"omega1", c.rates.omega1},
                    {"omega2", c.rates.omega2},
                    {"kappa1", c.rates.kappa1},
                    {"kappa2", c.rates.kappa2}};
  if (c.amplitudes) {
    json a = json::array();
    for (const cplx& z : *c.amplitudes) a.push_back(json::array({z.real(), z.imag()}));
    j["initial"] = a;
  } else {
    j["initial"] = c.initial;
  }
  j["t_max"] = c.t_max;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.generic_string();
  j["regularization"] = c.regularization;
  j["rtol"] = c.rtol;
  j["atol"] = c.atol;
  return j;
}

DensityOperator initial_state(const RunConfig& c) {
  if (c.amplitudes) return from_pure({{c.amplitudes->begin(), c.amplitudes->end()}});
  const auto row = states::parse_row(c.initial);
  if (!row) invalid("unknown initial state '" + c.initial + "' (ket0, ket2, sme)");
  return states::table1_state(*row);
}

CMatrix seaqt_hamiltonian(const RunConfig& c) {
  if (c.case_study_hamiltonian) return lindblad::case_study_model(c.rates).hamiltonian;
  return feshbach::effective_hamiltonian({c.w1, c.w2});
}

std::vector<double> sample_times(const RunConfig& c) {
  std::vector<double> t(c.samples);
  for (std::size_t k = 0; k < c.samples; ++k)
    t[k] = c.t_max * static_cast<double>(k) / static_cast<double>(c.samples - 1);
  t.back() = c.t_max;
  return t;
}

seaqt::IntegrateOptions integrate_options(const RunConfig& c) {
  seaqt::IntegrateOptions o;
  o.adaptive.rtol = c.rtol;
  o.adaptive.atol = c.atol;
  o.regularization = c.regularization;
  return o;
}

io::TrajectoryRow make_row(double t, const DensityOperator& rho, const seaqt::ThermoObservables& o,
                           double tau, const DensityOperator& final_state) {
  io::TrajectoryRow r;
  r.t = t;
  for (std::size_t i = 0; i < 3 && i < rho.dim(); ++i) r.p[i] = rho.matrix()(i, i).real();
  r.energy = o.energy;
  r.entropy = o.entropy;
  r.beta = o.beta;
  r.beta_defined = o.beta_defined;
  r.heat_capacity = o.heat_capacity;
  r.sigma_ff = o.sigma_ff;
  r.free_energy = o.free_energy;
  r.tau_d = tau;
  r.hs_dist_final = hs_distance(rho, final_state);
  return r;
}

struct SeaqtRun {
  std::vector<io::TrajectoryRow> rows;
  json meta;
  std::size_t violations = 0;
};

SeaqtRun run_seaqt(const RunConfig& c, const DensityOperator& rho0,
                   std::span<const double> times) {
  const CMatrix h = seaqt_hamiltonian(c);
  const seaqt::Trajectory traj =
      seaqt::integrate({h, c.relaxation}, rho0, times, integrate_options(c));
  SeaqtRun out;
  const DensityOperator& last = traj.samples.back().state;
  for (const seaqt::Sample& s : traj.samples)
    out.rows.push_back(make_row(s.t, s.state, s.obs, s.tau, last));

  const seaqt::TrajectoryDiagnostics& d = traj.diag;
  out.violations = d.invariant_violations();
  json m;
  m["regularized"] = d.regularized;
  m["eta"] = d.eta;
  m["integrator"] = json{{"method", "dopri5"},
                         {"rtol", c.rtol},
                         {"atol", c.atol},
                         {"accepted_steps", d.steps.accepted},
                         {"rejected_steps", d.steps.rejected},
                         {"rhs_evaluations", d.steps.rhs_evals},
                         {"smallest_step", d.steps.smallest_step},
                         {"largest_step", d.steps.largest_step}};
  m["invariants"] = json{{"max_trace_drift", d.max_trace_drift},
                         {"max_energy_drift", d.max_energy_drift},
                         {"min_eigenvalue", d.min_eigenvalue},
                         {"entropy_monotonicity_violations", d.entropy_violations},
                         {"worst_entropy_step", d.worst_entropy_step},
                         {"positivity_clips", d.positivity_clips},
                         {"support_rank_changes", d.rank_changes},
                         {"negative_tau_steps", d.negative_tau_steps},
                         {"violations", out.violations}};
  m["warnings"] = d.warnings;
  try {
    const seaqt::GibbsState g = seaqt::equilibrium_state(h, traj.samples.front().obs.energy);
    m["gibbs_at_conserved_energy"] =
        json{{"beta_eq", g.beta_eq}, {"hs_distance_final", hs_distance(last, g.state)}};
  } catch (const Error& e) {
    m["gibbs_at_conserved_energy"] = json{{"error", e.what()}};
  }
  out.meta = m;
  return out;
}

struct LindbladRun {
  std::vector<io::TrajectoryRow> rows;
  json meta;
  std::size_t violations = 0;
};

LindbladRun run_lindblad(const RunConfig& c, const DensityOperator& rho0,
                         std::span<const double> times) {
  const lindblad::LindbladModel model = lindblad::case_study_model(c.rates);
  const lindblad::LiouvillianSpectrum spec = lindblad::spectrum(model);
  const bool modes = spec.modes_valid;
  const std::vector<DensityOperator> traj = modes
                                                ? lindblad::propagate_modes(spec, rho0, times)
                                                : lindblad::integrate_direct(model, rho0, times);
  LindbladRun out;
  double trace_drift = 0.0, min_eig = 1.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const seaqt::ThermoObservables o = seaqt::observe(traj[k], model.hamiltonian);
    out.rows.push_back(
        make_row(times[k], traj[k], o, std::numeric_limits<double>::quiet_NaN(), traj.back()));
    trace_drift = std::max(trace_drift, std::abs(traj[k].matrix().trace().real() - 1.0));
    min_eig = std::min(min_eig, herm_eig(traj[k].matrix()).values.front());
  }
  out.violations = (trace_drift > 1e-9 ? 1 : 0) + (min_eig < -1e-8 ? 1 : 0);
  json m;
  m["path"] = modes ? "modes" : "direct";
  m["pairing_condition"] = spec.pairing_condition;
  m["overlap_slowest_mode"] = modes ? complex_json(lindblad::mpemba_overlap(spec, rho0)) : json();
  m["steady_state_hs_distance_final"] = hs_distance(traj.back(), spec.steady());
  m["invariants"] = json{{"max_trace_drift", trace_drift},
                         {"min_eigenvalue", min_eig},
                         {"violations", out.violations}};
  out.meta = m;
  return out;
}

std::string csv_text(const std::vector<io::TrajectoryRow>& rows) {
  std::ostringstream os;
  io::write_trajectory_csv(os, rows);
  return os.str();
}

json base_meta(std::string_view command) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["command"] = command;
  m["kernels"] = kernels::active().name;
  return m;
}

// ---- option helpers -------------------------------------------------------

struct RunFlags {
  std::string config_path;
  std::string framework;
  std::string initial;
  std::string amplitudes;
  double tau = 0.0;
  std::vector<double> logistic;
  double w1 = 0.0, w2 = 0.0, t_max = 0.0, eta = 0.0, kappa1 = 0.0, kappa2 = 0.0;
  double rtol = 0.0, atol = 0.0;
  bool case_study = false;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "JSON run configuration");
    opts["framework"] = app->add_option("--framework", framework, "seaqt | lindblad | both");
    opts["initial"] = app->add_option("--initial", initial, "ket0 | ket2 | sme");
    opts["amplitudes"] =
        app->add_option("--amplitudes", amplitudes, "custom p0,p1,p2 as re:im,re:im,re:im");
    opts["tau"] = app->add_option("--tau", tau, "constant relaxation time");
    opts["logistic"] =
        app->add_option("--logistic", logistic, "logistic relaxation w3 w4 w5")->expected(3);
    opts["w1"] = app->add_option("--w1", w1, "effective Hamiltonian w1");
    opts["w2"] = app->add_option("--w2", w2, "effective Hamiltonian w2");
    opts["case-study"] =
        app->add_flag("--case-study-hamiltonian", case_study, "SEAQT with the bare H");
    opts["kappa1"] = app->add_option("--kappa1", kappa1, "Lindblad decay rate of |1>");
    opts["kappa2"] = app->add_option("--kappa2", kappa2, "Lindblad decay rate of |2>");
    opts["t-max"] = app->add_option("--t-max", t_max, "final time");
    opts["samples"] = app->add_option("--samples", samples, "number of samples including t=0");
    opts["seed"] = app->add_option("--seed", seed, "random seed");
    opts["eta"] = app->add_option("--eta", eta, "regularization weight for singular states");
    opts["rtol"] = app->add_option("--rtol", rtol, "integrator relative tolerance");
    opts["atol"] = app->add_option("--atol", atol, "integrator absolute tolerance");
    opts["output-dir"] = app->add_option("--output-dir", output_dir, "output directory");
  }

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) c = parse_run_config(io::read_text(config_path));
    if (given("framework")) c.framework = parse_framework(framework);
    if (given("initial")) {
      c.initial = initial;
      c.amplitudes.reset();
    }
    if (given("amplitudes")) {
      std::array<cplx, 3> a{};
      std::stringstream ss(amplitudes);
      std::string item;
      std::size_t i = 0;
      while (std::getline(ss, item, ',')) {
        if (i >= 3) invalid("--amplitudes takes exactly three entries");
        const auto colon = item.find(':');
        try {
          const double re = std::stod(item.substr(0, colon));
          const double im = colon == std::string::npos ? 0.0 : std::stod(item.substr(colon + 1));
          a[i++] = {re, im};
        } catch (const std::exception&) {
          invalid("cannot parse amplitude '" + item + "'");
        }
      }
      if (i != 3) invalid("--amplitudes takes exactly three entries");
      c.amplitudes = a;
      c.initial = "custom";
    }
    if (given("tau")) {
      if (!(std::abs(tau) > 1e-12)) invalid("--tau must be nonzero");
      c.relaxation = seaqt::RelaxationModel::constant(tau);
    }
    if (given("logistic"))
      c.relaxation = seaqt::RelaxationModel::logistic(logistic[0], logistic[1], logistic[2]);
    if (given("w1")) c.w1 = w1;
    if (given("w2")) c.w2 = w2;
    if (given("case-study")) c.case_study_hamiltonian = case_study;
    if (given("kappa1")) c.rates.kappa1 = kappa1;
    if (given("kappa2")) c.rates.kappa2 = kappa2;
    if (given("t-max")) c.t_max = t_max;
    if (given("samples")) c.samples = samples;
    if (given("seed")) c.seed = seed;
    if (given("eta")) c.regularization = eta;
    if (given("rtol")) c.rtol = rtol;
    if (given("atol")) c.atol = atol;
    if (given("output-dir")) c.output_dir = output_dir;
    c.validate();
    return c;
  }
};

// ---- commands -------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
  const DensityOperator rho0 = initial_state(c);
  const std::vector<double> times = sample_times(c);
  json meta = base_meta("simulate");
  meta["config"] = config_json(c);
  std::size_t violations = 0;
  if (c.framework != RunConfig::Framework::Lindblad) {
    SeaqtRun r = run_seaqt(c, rho0, times);
    io::write_text(c.output_dir / "seaqt.csv", csv_text(r.rows));
    meta["seaqt"] = r.meta;
    violations += r.violations;
  }
  if (c.framework != RunConfig::Framework::Seaqt) {
    LindbladRun r = run_lindblad(c, rho0, times);
    io::write_text(c.output_dir / "lindblad.csv", csv_text(r.rows));
    meta["lindblad"] = r.meta;
    violations += r.violations;
  }
  meta["invariant_violations"] = violations;
  io::write_text(c.output_dir / "metadata.json", meta.dump(2) + "\n");
  std::cout << "wrote " << (c.output_dir / "metadata.json").string() << "\n";
  return 0;
}

int cmd_spectrum(const RunConfig& c) {
  const lindblad::LiouvillianSpectrum spec = lindblad::spectrum(lindblad::case_study_model(c.rates));
  json j = base_meta("spectrum");
  j["rates"] = config_json(c)["rates"];
  j["dimension"] = spec.dim;
  j["modes_valid"] = spec.modes_valid;
  j["pairing_condition"] = spec.pairing_condition;
  json eig = json::array();
  for (const cplx& l : spec.eigenvalues) {
    json e{{"re", l.real()}, {"im", l.imag()}};
    e["decay_time"] = l.real() < -1e-10 ? json(-1.0 / l.real()) : json();
    eig.push_back(e);
  }
  j["eigenvalues"] = eig;
  j["steady_state"] = matrix_json(spec.steady_state);
  json ov;
  for (states::Table1Row row : states::kTable1Rows) {
    const DensityOperator rho = states::table1_state(row);
    ov[std::string(states::row_label(row))] =
        spec.modes_valid ? complex_json(lindblad::mpemba_overlap(spec, rho)) : json();
  }
  if (c.amplitudes)
    ov["custom"] = spec.modes_valid
                       ? complex_json(lindblad::mpemba_overlap(spec, initial_state(c)))
                       : json();
  j["overlap_slowest_mode"] = ov;
  io::write_text(c.output_dir / "spectrum.json", j.dump(2) + "\n");
  std::cout << "wrote " << (c.output_dir / "spectrum.json").string() << "\n";
  return 0;
}

fitkit::FitMode parse_mode(std::string_view s) {
  if (s == "seaqt5") return fitkit::FitMode::Seaqt5;
  if (s == "seaqt3") return fitkit::FitMode::Seaqt3;
  if (s == "lindblad") return fitkit::FitMode::LindbladRates;
  invalid("fit mode must be seaqt5, seaqt3 or lindblad, got '" + std::string(s) + "'");
}

struct FitFlags {
  std::string manifest;
  std::string mode;
  std::vector<std::string> bounds;
  std::uint64_t seed = 0;
  std::size_t max_generations = 0;
  std::string output;
  bool no_polish = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* gens_opt = nullptr;
};

fitkit::FitProblem load_manifest(const FitFlags& f) {
  const std::filesystem::path mpath = f.manifest;
  const json j = parse_json(io::read_text(mpath), mpath.string());
  require_schema(j, "manifest");
  reject_unknown(j, {"schema_version", "mode", "seed", "bounds", "series", "fixed", "rates", "de",
                     "polish", "integrator"},
                 "manifest");
  fitkit::FitProblem p;
  p.mode = parse_mode(f.mode.empty() ? j.value("mode", std::string("seaqt5")) : f.mode);
  p.rng_seed = j.value("seed", std::uint64_t{0});
  if (f.seed_opt && f.seed_opt->count()) p.rng_seed = f.seed;
  p.bounds = fitkit::default_bounds(p.mode);
  const std::vector<std::string> names = [&] {
    auto n = fitkit::parameter_names(p.mode);
    if (p.mode == fitkit::FitMode::Seaqt3) n = {"tau_d"};
    return n;
  }();
  auto set_bound = [&](const std::string& name, double lo, double hi) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) {
        p.bounds.limits[k] = {lo, hi};
        return;
      }
    invalid("no free parameter named '" + name + "' in mode " +
            std::string(fitkit::mode_name(p.mode)));
  };
  if (j.contains("bounds"))
    for (const auto& [name, v] : j.at("bounds").items()) {
      if (!v.is_array() || v.size() != 2) invalid("bounds." + name + " must be [low, high]");
      set_bound(name, v[0].get<double>(), v[1].get<double>());
    }
  for (const std::string& b : f.bounds) {
    const auto eq = b.find('='), colon = b.find(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq)
      invalid("--bound expects name=low:high, got '" + b + "'");
    try {
      set_bound(b.substr(0, eq), std::stod(b.substr(eq + 1, colon - eq - 1)),
                std::stod(b.substr(colon + 1)));
    } catch (const std::invalid_argument&) {
      invalid("--bound expects numeric limits, got '" + b + "'");
    }
  }
  if (j.contains("fixed")) {
    p.fixed_w1 = j.at("fixed").value("w1", p.fixed_w1);
    p.fixed_w2 = j.at("fixed").value("w2", p.fixed_w2);
  }
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    p.rates.omega1 = r.value("omega1", p.rates.omega1);
    p.rates.omega2 = r.value("omega2", p.rates.omega2);
  }
  if (j.contains("de")) {
    const json& d = j.at("de");
    p.de.population_size = d.value("population_size", p.de.population_size);
    p.de.mutation = d.value("mutation", p.de.mutation);
    p.de.crossover = d.value("crossover", p.de.crossover);
    p.de.max_generations = d.value("max_generations", p.de.max_generations);
    p.de.tolerance = d.value("tolerance", p.de.tolerance);
    p.de.abs_tolerance = d.value("abs_tolerance", p.de.abs_tolerance);
  }
  if (j.contains("integrator")) {
    const json& d = j.at("integrator");
    p.integrate.adaptive.rtol = d.value("rtol", p.integrate.adaptive.rtol);
    p.integrate.adaptive.atol = d.value("atol", p.integrate.adaptive.atol);
    p.integrate.regularization = d.value("regularization", p.integrate.regularization);
  }
  if (f.gens_opt && f.gens_opt->count()) p.de.max_generations = f.max_generations;
  p.polish = j.value("polish", true) && !f.no_polish;

  if (!j.contains("series") || !j.at("series").is_array() || j.at("series").empty())
    invalid("manifest: 'series' must be a non-empty array");
  for (const json& s : j.at("series")) {
    reject_unknown(s, {"file", "initial", "amplitudes", "label"}, "manifest series");
    fitkit::LabeledSeries ls;
    std::filesystem::path file = s.at("file").get<std::string>();
    if (file.is_relative()) file = mpath.parent_path() / file;
    ls.series = io::read_population_csv(file);
    if (s.contains("amplitudes")) {
      const auto a = parse_amplitudes(s.at("amplitudes"));
      ls.initial = from_pure({{a.begin(), a.end()}});
      ls.label = s.value("label", std::string("custom"));
    } else {
      const std::string label = s.at("initial").get<std::string>();
      const auto row = states::parse_row(label);
      if (!row) invalid("manifest series: unknown initial state '" + label + "'");
      ls.initial = states::table1_state(*row);
      ls.label = s.value("label", label);
    }
    p.data.push_back(std::move(ls));
  }
  return p;
}

int cmd_fit(const FitFlags& f) {
  const fitkit::FitProblem p = load_manifest(f);
  const fitkit::FitResult r = fitkit::fit(p);
  json j = base_meta("fit");
  j["mode"] = fitkit::mode_name(p.mode);
  j["seed"] = p.rng_seed;
  json params;
  for (std::size_t k = 0; k < r.names.size(); ++k) params[r.names[k]] = r.params[k];
  j["best_params"] = params;
  j["best_mse"] = r.report.best_mse;
  j["generations"] = r.report.generations;
  j["evaluations"] = r.report.evaluations;
  j["converged"] = r.report.converged;
  j["polished"] = r.report.polished;
  j["failed_evaluations"] = r.failed_evaluations;
  json b = json::array();
  for (const auto& [lo, hi] : p.bounds.limits) b.push_back(json::array({lo, hi}));
  j["bounds"] = b;
  json per = json::array();
  for (std::size_t k = 0; k < p.data.size(); ++k)
    per.push_back(json{{"label", p.data[k].label},
                       {"samples", p.data[k].series.times.size()},
                       {"sse", r.per_series_sse[k]},
                       {"sse_p0", r.per_level_sse[k][0]},
                       {"sse_p1", r.per_level_sse[k][1]},
                       {"sse_p2", r.per_level_sse[k][2]}});
  j["residuals"] = per;
  j["population_trace"] = r.report.population_trace;
  const std::filesystem::path out = f.output.empty() ? "fit_report.json" : f.output;
  io::write_text(out, j.dump(2) + "\n");
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

struct SmeFlags {
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::vector<double> target;
  double overlap_tol = 1e-9;
  bool propagate = false;
};

int cmd_sme_search(const SmeFlags& f, const RunConfig& c) {
  if (f.count < 1) invalid("--count must be at least 1");
  states::SmeConstraints sc;
  sc.overlap_tolerance = f.overlap_tol;
  if (!f.target.empty()) {
    if (f.target.size() != 3) invalid("--target takes three populations");
    sc.target_populations = std::array<double, 3>{f.target[0], f.target[1], f.target[2]};
  }
  const lindblad::LindbladModel model = lindblad::case_study_model(c.rates);
  const lindblad::LiouvillianSpectrum spec = lindblad::spectrum(model);
  const std::vector<states::SmeResult> ens = states::random_sme_ensemble(spec, sc, f.count, f.seed);

  json j = base_meta("sme-search");
  j["count"] = f.count;
  j["seed"] = f.seed;
  j["overlap_tolerance"] = sc.overlap_tolerance;
  if (sc.target_populations) j["target_populations"] = *sc.target_populations;
  const std::vector<double> times = sample_times(c);
  const CMatrix h = seaqt_hamiltonian(c);
  std::size_t violations = 0;
  json members = json::array();
  for (std::size_t k = 0; k < ens.size(); ++k) {
    const states::SmeResult& s = ens[k];
    json m;
    m["index"] = k;
    m["seed"] = s.seed_used;
    json amps = json::array();
    json pops = json::array();
    for (const cplx& a : s.amplitudes) {
      amps.push_back(json::array({a.real(), a.imag()}));
      pops.push_back(std::norm(a));
    }
    m["amplitudes"] = amps;
    m["populations"] = pops;
    m["overlap"] = complex_json(s.overlap);
    m["residuals"] = json{{"norm", s.residuals.norm},         {"trace", s.residuals.trace},
                          {"purity", s.residuals.purity},     {"entropy", s.residuals.entropy},
                          {"overlap", s.residuals.overlap},   {"populations", s.residuals.populations}};
    m["energy_seaqt"] = trace_product(s.state.matrix(), h).real();
    if (f.propagate) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "sme_%03zu", k);
      RunConfig ck = c;
      LindbladRun lr = run_lindblad(ck, s.state, times);
      SeaqtRun sr = run_seaqt(ck, s.state, times);
      io::write_text(c.output_dir / (std::string(stem) + "_lindblad.csv"), csv_text(lr.rows));
      io::write_text(c.output_dir / (std::string(stem) + "_seaqt.csv"), csv_text(sr.rows));
      m["lindblad"] = lr.meta;
      m["seaqt"] = sr.meta;
      violations += lr.violations + sr.violations;
    }
    members.push_back(m);
  }
  j["members"] = members;
  if (f.propagate) {
    j["config"] = config_json(c);
    j["invariant_violations"] = violations;
  }
  io::write_text(c.output_dir / "ensemble.json", j.dump(2) + "\n");
  std::cout << "wrote " << (c.output_dir / "ensemble.json").string() << "\n";
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) invalid("t_max must be positive and finite");
  if (samples < 2) invalid("samples must be at least 2");
  if (!(regularization >= 0.0 && regularization <= 1.0))
    invalid("regularization must lie in [0, 1]");
  if (!(rtol > 0.0) || !(atol > 0.0)) invalid("integrator tolerances must be positive");
  if (rates.kappa1 < 0.0 || rates.kappa2 < 0.0) invalid("decay rates must be non-negative");
  if (!case_study_hamiltonian && w1 * w2 < 0.0) invalid("w1*w2 must be non-negative");
  if (!amplitudes && !states::parse_row(initial))
    invalid("unknown initial state '" + initial + "' (ket0, ket2, sme)");
  if (relaxation.kind == seaqt::RelaxationModel::Kind::FluctuationDiagnostic)
    invalid("the fluctuation-ratio relaxation time cannot drive a simulation");
}

RunConfig parse_run_config(std::string_view text) {
  const json j = parse_json(text, "config");
  require_schema(j, "config");
  reject_unknown(j, {"schema_version", "framework", "hamiltonian", "relaxation", "rates", "initial",
                     "t_max", "samples", "seed", "output_dir", "regularization", "rtol", "atol"},
                 "config");
  RunConfig c;
  try {
    if (j.contains("framework")) c.framework = parse_framework(j.at("framework").get<std::string>());
    if (j.contains("hamiltonian")) {
      const json& h = j.at("hamiltonian");
      if (h.is_string() && (h == "case_study" || h == "case_study_defaults")) {
        c.case_study_hamiltonian = true;
      } else if (h.is_object() && h.contains("effective")) {
        c.w1 = h.at("effective").at("w1").get<double>();
        c.w2 = h.at("effective").at("w2").get<double>();
      } else {
        invalid("hamiltonian must be \"case_study\" or {\"effective\": {\"w1\", \"w2\"}}");
      }
    }
    if (j.contains("relaxation")) c.relaxation = parse_relaxation(j.at("relaxation"));
    if (j.contains("rates")) {
      const json& r = j.at("rates");
      reject_unknown(r, {"omega1", "omega2", "kappa1", "kappa2"}, "rates");
      c.rates.omega1 = r.value("omega1", c.rates.omega1);
      c.rates.omega2 = r.value("omega2", c.rates.omega2);
      c.rates.kappa1 = r.value("kappa1", c.rates.kappa1);
      c.rates.kappa2 = r.value("kappa2", c.rates.kappa2);
    }
    if (j.contains("initial")) {
      const json& i = j.at("initial");
      if (i.is_string()) {
        c.initial = i.get<std::string>();
      } else {
        c.amplitudes = parse_amplitudes(i);
        c.initial = "custom";
      }
    }
    c.t_max = j.value("t_max", c.t_max);
    if (j.contains("samples")) {
      const json& s = j.at("samples");
      if (!s.is_number_integer() || s.get<long long>() < 0) invalid("samples must be an integer");
      c.samples = s.get<std::size_t>();
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.regularization = j.value("regularization", c.regularization);
    c.rtol = j.value("rtol", c.rtol);
    c.atol = j.value("atol", c.atol);
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("config: ") + e.what());
  }
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"Quantum Mpemba toolkit: SEAQT and Lindblad dynamics, spectra, fits"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::string simd;
  app.add_option("--threads", threads, "worker threads (overrides MPEMBA_THREADS)");
  app.add_option("--simd", simd, "kernel variant: auto | scalar | avx2");

  RunFlags sim_flags, spec_flags, sme_run_flags;
  CLI::App* sim = app.add_subcommand("simulate", "integrate one initial state");
  sim_flags.add(sim);
  CLI::App* spc = app.add_subcommand("spectrum", "Liouvillian spectrum and overlaps");
  spec_flags.add(spc);

  FitFlags fit_flags;
  CLI::App* fit = app.add_subcommand("fit", "fit parameters to population data");
  fit->add_option("--manifest", fit_flags.manifest, "JSON manifest binding CSV files to states")
      ->required();
  fit->add_option("--mode", fit_flags.mode, "seaqt5 | seaqt3 | lindblad");
  fit->add_option("--bound", fit_flags.bounds, "override a bound: name=low:high");
  fit_flags.seed_opt = fit->add_option("--seed", fit_flags.seed, "random seed");
  fit_flags.gens_opt =
      fit->add_option("--max-generations", fit_flags.max_generations, "DE generation cap");
  fit->add_option("--output", fit_flags.output, "report path (default fit_report.json)");
  fit->add_flag("--no-polish", fit_flags.no_polish, "skip the least-squares polish");

  SmeFlags sme_flags;
  CLI::App* sme = app.add_subcommand("sme-search", "random states orthogonal to the slowest mode");
  sme->add_option("--count", sme_flags.count, "number of states");
  sme->add_option("--target", sme_flags.target, "target populations p0 p1 p2")->expected(3);
  sme->add_option("--overlap-tol", sme_flags.overlap_tol, "bound on |Tr(L1 rho)|");
  sme->add_flag("--propagate", sme_flags.propagate, "write Lindblad and SEAQT trajectories");
  sme_run_flags.add(sme);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!simd.empty() && !kernels::select(simd)) invalid("kernel variant '" + simd + "' unavailable");
    if (threads > 0) setenv("MPEMBA_THREADS", std::to_string(threads).c_str(), 1);
    if (sim->parsed()) return cmd_simulate(sim_flags.resolve());
    if (spc->parsed()) return cmd_spectrum(spec_flags.resolve());
    if (fit->parsed()) return cmd_fit(fit_flags);
    if (sme->parsed()) {
      RunConfig c = sme_run_flags.resolve();
      sme_flags.seed = c.seed;
      return cmd_sme_search(sme_flags, c);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 2 : 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace mpemba::cli

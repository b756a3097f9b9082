// Command-line driver: reads a scenario file, runs one experiment and writes CSV or
// JSON artifacts, each with a "<file>.meta.json" provenance sidecar.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 partial success (some members, cells or sweeps did not complete).

#include "crnbp/ephem.hpp"
#include "crnbp/fli.hpp"
#include "crnbp/landing.hpp"
#include "crnbp/metadata.hpp"
#include "crnbp/orbits.hpp"
#include "crnbp/system_file.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace crnbp;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_failure = 3, partial = 4 };

constexpr double kDeg = std::numbers::pi / 180.0;

struct Options {
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<double> tolerance;
};

struct Scenario {
  fs::path path;
  ConfigDocument doc;
  SystemSetup system;
  IntegratorSettings integrator;
  fs::path out;
  int threads = 1;

  const ConfigBlock* block(const std::string& kind) const { return doc.find(kind); }
  const ConfigBlock& require(const std::string& kind) const { return doc.require(kind); }
};

Scenario load_scenario(const Options& opt) {
  Scenario s;
  s.path = opt.config;
  s.doc = load_config(opt.config);
  const ConfigBlock& sc = s.doc.require("scenario");
  s.system = load_system(s.doc.resolve(sc.text("system")));
  if (const auto* ib = s.doc.find("integrator")) {
    s.integrator.rel_tol = ib->number_or("rel_tol", s.integrator.rel_tol);
    s.integrator.abs_tol = ib->number_or("abs_tol", s.integrator.abs_tol);
    s.integrator.max_step = ib->number_or("max_step", s.integrator.max_step);
    s.integrator.max_steps = ib->integer_or("max_steps", s.integrator.max_steps);
  }
  if (opt.tolerance) {
    s.integrator.rel_tol = *opt.tolerance;
    s.integrator.abs_tol = *opt.tolerance;
  }
  s.integrator.validate();
  s.out = !opt.out.empty() ? fs::path(opt.out) : s.doc.resolve(sc.text_or("out", "out"));
  if (opt.threads < 1)
    throw ConfigError("--threads must be at least 1");
  s.threads = opt.threads;
  fs::create_directories(s.out);
  return s;
}

class Writer {
public:
  Writer(const Scenario& s, std::string command) : s_(s), command_(std::move(command)) {}

  /// Writes `body` to out/name and its sidecar with `extra` merged into the provenance.
  void text(const fs::path& name, const std::string& body, const json& extra = json::object()) {
    const fs::path path = s_.out / name;
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
      throw std::runtime_error("cannot write " + path.string());
    f << body;
    f.close();
    json meta = provenance(s_.system.model, s_.integrator);
    meta["command"] = command_;
    meta["config"] = fs::absolute(s_.path).lexically_normal().string();
    meta["artifact"] = name.generic_string();
    for (const auto& [k, v] : extra.items())
      meta[k] = v;
    write_json(sidecar_path(path), meta);
    ++count_;
  }

  int count() const { return count_; }

private:
  const Scenario& s_;
  std::string command_;
  int count_ = 0;
};

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string number_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// fli-map

int cmd_fli_map(const Options& opt) {
  Scenario s = load_scenario(opt);
  const ConfigBlock& b = s.require("fli");
  const SystemModel& model = s.system.model;

  GridSpec g;
  g.a_min = b.number_or("a_min", g.a_min);
  g.a_max = b.number_or("a_max", g.a_max);
  g.n_a = int(b.integer_or("n_a", g.n_a));
  g.e_min = b.number_or("e_min", g.e_min);
  g.e_max = b.number_or("e_max", g.e_max);
  g.n_e = int(b.integer_or("n_e", g.n_e));
  if (b.has("horizon_years") == b.has("horizon"))
    b.fail("give exactly one of horizon (canonical) or horizon_years");
  g.horizon = b.has("horizon") ? b.number("horizon")
                               : b.number("horizon_years") * 365.25 * 86400.0 / model.time_unit;
  g.mean_anomaly = b.number_or("mean_anomaly_deg", 60.0) * kDeg;
  g.varpi = b.number_or("varpi_deg", 0.0) * kDeg;
  g.epoch_jd = s.system.ephemeris ? s.system.ephemeris->jd0 : 0.0;
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  FliSettings fs_;
  fs_.integrator = s.integrator;
  fs_.checkpoints = int(b.integer_or("checkpoints", fs_.checkpoints));
  if (fs_.checkpoints < 1)
    b.fail("checkpoints must be positive");

  const int cells = g.n_a * g.n_e;
  std::cerr << "fli-map: " << g.n_a << "x" << g.n_e << " cells, horizon " << g.horizon << " TU\n";
  const FliGrid grid = scan(model, g, fs_, s.threads, [cells](int done) {
    if (done % std::max(1, cells / 20) == 0 || done == cells)
      std::cerr << "  " << done << "/" << cells << "\n";
  });

  const json grid_meta = {{"grid",
                           {{"a_min", g.a_min},
                            {"a_max", g.a_max},
                            {"n_a", g.n_a},
                            {"e_min", g.e_min},
                            {"e_max", g.e_max},
                            {"n_e", g.n_e},
                            {"horizon", g.horizon},
                            {"mean_anomaly", g.mean_anomaly},
                            {"varpi", g.varpi},
                            {"epoch_jd", g.epoch_jd}}},
                          {"fli", {{"log", "natural"}, {"checkpoints", fs_.checkpoints}, {"sampling", "accepted steps"}}}};
  Writer w(s, "fli-map");
  w.text("fli_grid.csv", render([&](std::ostream& o) { write_grid_csv(o, grid); }), grid_meta);
  w.text("fli_status.csv", render([&](std::ostream& o) { write_status_csv(o, grid); }), grid_meta);
  w.text("fli_running.csv",
         render([&](std::ostream& o) {
           o.precision(17);
           o << "i_a,i_e";
           for (int k = 1; k <= fs_.checkpoints; ++k)
             o << ",c" << k;
           o << '\n';
           for (int j = 0; j < g.n_e; ++j)
             for (int i = 0; i < g.n_a; ++i) {
               o << i << ',' << j;
               for (double v : grid.running[std::size_t(j) * g.n_a + i])
                 o << ',' << v;
               o << '\n';
             }
         }),
         grid_meta);

  for (const ConfigBlock* tb : s.doc.all("tisserand")) {
    const int idx = model.index_of(tb->name);
    if (idx < 1)
      tb->fail("tisserand overlay needs a body of the system other than m1");
    for (double value : tb->numbers("value")) {
      const TisserandCurve c = tisserand_curve(model.R[std::size_t(idx)], value, g.e_min, g.e_max,
                                               int(tb->integer_or("samples", 200)));
      w.text("tisserand_" + tb->name + "_" + number_tag(value) + ".csv",
             render([&](std::ostream& o) { write_tisserand_csv(o, c); }),
             {{"tisserand", {{"body", tb->name}, {"a_p", model.R[std::size_t(idx)]}, {"value", value}}}});
    }
  }

  int failed = 0;
  for (auto st : grid.status)
    failed += st == CellStatus::failed;
  std::cerr << "fli-map: wrote " << w.count() << " artifacts to " << s.out.string() << "\n";
  if (failed > 0) {
    std::cerr << "fli-map: " << failed << " cells failed to integrate\n";
    return partial;
  }
  return ok;
}

// family and epsilon-continue

struct FamilyConfig {
  int lagrange = 3; ///< 1-based, L1..L3
  double amplitude = 0.01;
  ContinuationSpec spec;
  std::optional<double> target_period;
  std::optional<double> stop_period;
  int samples = 400;
};

FamilyConfig read_family(const ConfigBlock& b) {
  FamilyConfig f;
  f.lagrange = int(b.integer_or("lagrange", f.lagrange));
  if (f.lagrange < 1 || f.lagrange > 3)
    b.fail("lagrange must be 1, 2 or 3");
  f.amplitude = b.number_or("amplitude", f.amplitude);
  f.spec.members = int(b.integer_or("members", f.spec.members));
  f.spec.step = b.number_or("step", f.spec.step);
  f.spec.min_step = b.number_or("min_step", f.spec.min_step);
  f.spec.max_step = b.number_or("max_step", f.spec.max_step);
  if (b.has("target_period"))
    f.target_period = b.number("target_period");
  if (b.has("stop_period"))
    f.stop_period = b.number("stop_period");
  f.samples = int(b.integer_or("samples", f.samples));
  if (f.spec.members < 1 || f.samples < 2 || !(f.amplitude > 0))
    b.fail("members, samples and amplitude must be positive");
  return f;
}

PeriodicOrbitProblem free_problem(const Scenario& s, const ConfigBlock& b) {
  PeriodicOrbitProblem p;
  p.model = with_epsilon(s.system.model, 0.0);
  p.integrator = s.integrator;
  p.tol = b.number_or("tol", p.tol);
  p.max_iterations = int(b.integer_or("max_iterations", p.max_iterations));
  p.pinned = 5; // vertical families: hold vz0 while seeding
  return p;
}

FamilyResult run_family(PeriodicOrbitProblem& prob, const FamilyConfig& f) {
  const auto [x0, T0] = vertical_lyapunov_seed(prob.model, f.lagrange - 1, f.amplitude);
  const OrbitFamilyMember first = newton_correct(prob, x0, T0);
  ContinuationSpec spec = f.spec;
  if (f.stop_period)
    spec.stop = [limit = *f.stop_period](const OrbitFamilyMember& m) { return m.period > limit; };
  return continue_family(prob, first, spec);
}

std::string member_csv(const PeriodicOrbitProblem& prob, const OrbitFamilyMember& m, int samples) {
  return render([&](std::ostream& o) { write_trajectory_csv(o, sample_orbit(prob, m, samples)); });
}

int cmd_family(const Options& opt) {
  Scenario s = load_scenario(opt);
  const ConfigBlock& b = s.require("family");
  const FamilyConfig f = read_family(b);
  PeriodicOrbitProblem prob = free_problem(s, b);
  const FamilyResult fam = run_family(prob, f);
  prob.pinned = -1;

  Writer w(s, "family");
  const json fam_meta = {{"family", {{"lagrange", f.lagrange}, {"amplitude", f.amplitude}, {"members", fam.members.size()}}}};
  std::ostringstream lines;
  json audit = json::array();
  double worst = 0;
  for (std::size_t k = 0; k < fam.members.size(); ++k) {
    const auto& m = fam.members[k];
    lines << to_json(m, prob).dump() << '\n';
    const double r = closure_residual(prob, m.state0, m.period);
    worst = std::max(worst, r);
    audit.push_back({{"index", k}, {"period", m.period}, {"reintegrated_residual", r}});
    char name[48];
    std::snprintf(name, sizeof name, "members/member_%04zu.csv", k);
    w.text(name, member_csv(prob, m, f.samples), {{"member", k}, {"period", m.period}});
  }
  w.text("family.jsonl", lines.str(), fam_meta);

  json report = {{"members", fam.members.size()},
                 {"complete", fam.complete},
                 {"diagnostic", fam.diagnostic},
                 {"tol", prob.tol},
                 {"max_reintegrated_residual", worst},
                 {"audit", audit}};
  int code = fam.complete ? ok : partial;
  if (f.target_period) {
    try {
      const OrbitFamilyMember t = member_with_period(prob, fam, *f.target_period);
      report["target"] = to_json(t, prob);
      report["target"]["reintegrated_residual"] = closure_residual(prob, t.state0, t.period);
      w.text("target_member.csv", member_csv(prob, t, f.samples), {{"target_period", *f.target_period}});
    } catch (const ConvergenceError& e) {
      report["target_error"] = e.what();
      code = partial;
    }
  }
  w.text("family_report.json", report.dump(2) + "\n", fam_meta);
  std::cerr << "family: " << fam.members.size() << " members, max re-integrated residual " << worst << "\n";
  return worst < prob.tol ? code : partial;
}

int cmd_epsilon(const Options& opt) {
  Scenario s = load_scenario(opt);
  const ConfigBlock& e = s.require("epsilon");
  const ConfigBlock& fb = s.require("family");
  const FamilyConfig f = read_family(fb);

  PeriodicOrbitProblem fixed;
  const int p = int(e.integer_or("p", 1));
  if (e.has("forcing_period")) {
    fixed.model = s.system.model;
    fixed.mode = PeriodMode::fixed;
    fixed.p = p;
    fixed.forcing_period = e.number("forcing_period");
  } else {
    fixed = fixed_period_problem(s.system.model, p);
  }
  fixed.model = with_epsilon(fixed.model, 1.0);
  fixed.integrator = s.integrator;
  fixed.tol = e.number_or("tol", fixed.tol);

  // the unforced member with period pT, taken from the family
  PeriodicOrbitProblem free = free_problem(s, fb);
  FamilyConfig to_target = f;
  const double target = fixed.fixed_period();
  if (!to_target.stop_period)
    to_target.stop_period = target + 1e-4;
  const FamilyResult fam = run_family(free, to_target);
  free.pinned = -1;
  OrbitFamilyMember start = member_with_period(free, fam, target, 1e-10);
  start.period = target;

  EpsilonSpec spec;
  spec.first_step = e.number_or("first_step", spec.first_step);
  spec.min_step = e.number_or("min_step", spec.min_step);
  spec.max_step = e.number_or("max_step", spec.max_step);
  spec.phase_samples = int(e.integer_or("phase_samples", spec.phase_samples));
  spec.arclength_below = e.number_or("arclength_below", spec.arclength_below);
  spec.arc_step = e.number_or("arc_step", spec.arc_step);
  spec.arc_max_step = e.number_or("arc_max_step", spec.arc_max_step);
  spec.max_members = int(e.integer_or("max_members", spec.max_members));
  const EpsilonResult r = continue_epsilon(fixed, start, spec);

  Writer w(s, "epsilon-continue");
  const json meta = {{"epsilon_run", {{"p", p}, {"forcing_period", fixed.forcing_period}, {"phase_shift", r.phase_shift}}}};
  std::ostringstream lines;
  for (std::size_t k = 0; k < r.members.size(); ++k) {
    const auto& m = r.members[k];
    PeriodicOrbitProblem at = fixed;
    at.model = with_epsilon(fixed.model, m.param);
    lines << to_json(m, at).dump() << '\n';
    char name[48];
    std::snprintf(name, sizeof name, "orbits/eps_%04zu.csv", k);
    w.text(name, member_csv(at, m, f.samples), {{"epsilon", m.param}});
  }
  w.text("epsilon.jsonl", lines.str(), meta);

  PeriodicOrbitProblem unforced = fixed;
  unforced.model = with_epsilon(fixed.model, 0.0);
  w.text("orbits/aligned_eps0.csv", member_csv(unforced, r.aligned, f.samples), {{"epsilon", 0.0}});

  json report = {{"complete", r.complete}, {"diagnostic", r.diagnostic}, {"members", r.members.size()},
                 {"phase_shift", r.phase_shift},
                 {"folds", r.folds}};
  int code = r.complete ? ok : partial;
  if (r.complete) {
    const OrbitFamilyMember& last = r.members.back();
    const double closure = closure_residual(fixed, last.state0, target);
    const OrbitDeformation d = orbit_deformation(sample_orbit(unforced, r.aligned, f.samples),
                                                 sample_orbit(fixed, last, f.samples));
    report["final_reintegrated_residual"] = closure;
    report["deformation"] = {{"rephased_max", d.rephased_max}, {"aligned_max", d.aligned_max}, {"hausdorff", d.hausdorff}};
    std::cerr << "epsilon-continue: reached epsilon = 1, closure " << closure << ", deformation "
              << d.rephased_max << "\n";
    if (!(closure < 1e-8))
      code = partial;
  } else {
    std::cerr << "epsilon-continue: stopped: " << r.diagnostic << "\n";
  }
  w.text("epsilon_report.json", report.dump(2) + "\n", meta);
  return code;
}

// landing-sweep

int cmd_landing(const Options& opt) {
  Scenario s = load_scenario(opt);
  const ConfigBlock& b = s.require("landing");
  const SystemModel& model = s.system.model;

  LandingSpec base;
  base.integrator = s.integrator;
  base.duration_days = b.number_or("duration_days", base.duration_days);
  base.altitude_km = b.number_or("altitude_km", base.altitude_km);
  base.lagrange_index = int(b.integer_or("lagrange", 2)) - 1;
  base.sample_days = b.number_or("sample_days", base.sample_days);
  if (b.has("theta_deg")) {
    base.theta_deg = b.numbers("theta_deg");
  } else {
    const double from = b.number_or("theta_start_deg", 0), to = b.number_or("theta_stop_deg", 360),
                 step = b.number_or("theta_step_deg", 1);
    if (!(step > 0) || !(to > from))
      b.fail("theta sweep needs theta_stop_deg > theta_start_deg and a positive step");
    base.theta_deg.clear();
    for (int k = 0; from + k * step < to - 1e-9; ++k)
      base.theta_deg.push_back(from + k * step);
  }
  const std::vector<double> arrivals = b.has("arrival_days") ? b.numbers("arrival_days") : std::vector<double>{0.0};
  const double radius_km = model.body_radii[1] * model.length_unit;

  Writer w(s, "landing-sweep");
  int failures = 0;
  for (double ta : arrivals) {
    LandingSpec spec = base;
    spec.arrival_days = ta;
    const LandingSweep sw = landing_sweep(model, spec, s.threads);
    const std::string dir = "landing_ta_" + number_tag(ta);
    const json meta = {{"landing",
                        {{"arrival_days", ta},
                         {"duration_days", spec.duration_days},
                         {"altitude_km", spec.altitude_km},
                         {"m2_radius_km", radius_km},
                         {"start_radius", model.body_radii[1] + spec.altitude_km / model.length_unit},
                         {"jacobi", sw.jacobi},
                         {"lagrange", spec.lagrange_index + 1},
                         {"transeuropa_radius", sw.exit_radius},
                         {"velocity", "z x (r0 - r_m2), prograde about M2"}}}};
    w.text(dir + "/summary.csv", render([&](std::ostream& o) { write_landing_summary_csv(o, sw); }), meta);
    for (const auto& r : sw.records) {
      if (r.outcome != LandingOutcome::survived)
        continue;
      w.text(dir + "/trajectories/theta_" + number_tag(r.theta_deg) + ".csv",
             render([&](std::ostream& o) { write_trajectory_csv(o, r.trajectory); }),
             {{"theta_deg", r.theta_deg}, {"arrival_days", ta}, {"transeuropa", r.transeuropa}});
    }
    failures += int(sw.count(LandingOutcome::failed));
    std::cerr << "landing-sweep t_a = " << ta << " d: " << sw.count(LandingOutcome::survived) << " survived, "
              << sw.count(LandingOutcome::collided) << " collided, " << sw.count(LandingOutcome::infeasible)
              << " infeasible, " << sw.count(LandingOutcome::failed) << " failed\n";
  }
  return failures ? partial : ok;
}

// ephem-check

int cmd_ephem_check(const Options& opt) {
  Scenario s = load_scenario(opt);
  if (!s.system.ephemeris)
    throw ConfigError("ephem-check needs an [ephemeris] block in the system file");
  const EphemerisSetup& eph = *s.system.ephemeris;
  const SystemModel& model = s.system.model;
  const auto table = load_ephemeris_table(eph.table);
  const double L = model.length_unit, V = model.length_unit / model.time_unit;
  const EphemerisRecord& m2 = find_record(table, s.system.m2, eph.jd0);

  json bodies = json::object();
  double worst = 0;
  std::cout.precision(12);
  for (const auto& rec : table) {
    if (std::abs(rec.jd - eph.jd0) > 1e-9)
      continue;
    json entry;
    if (rec.body != s.system.m2) {
      entry["psi0"] = initial_phase(eph.frame, m2.s_1j, rec.s_1j);
      const int idx = model.index_of(rec.body);
      if (idx >= 0)
        entry["model_psi0"] = model.psi0[std::size_t(idx)];
    }
    // round-trip the record as if it were a particle
    const State6d syn = fixed_to_synodic(eph.S, model.mu2(), 0.0, rec.s_1j / L, rec.v_1j / V);
    const State6d back = synodic_to_fixed(eph.S, model.mu2(), 0.0, syn);
    State6d orig;
    orig << rec.s_1j / L, rec.v_1j / V;
    const double res = (back - orig).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, res);
    entry["round_trip_residual"] = res;
    entry["synodic"] = std::vector<double>(syn.data(), syn.data() + 6);
    bodies[rec.body] = entry;
    std::cout << rec.body << ": psi0 = " << (entry.contains("psi0") ? entry["psi0"].get<double>() : 0.0)
              << " rad, round trip " << res << "\n";
  }
  const json report = {{"jd0", eph.jd0},
                       {"table", fs::absolute(eph.table).lexically_normal().string()},
                       {"S", {{eph.S(0, 0), eph.S(0, 1), eph.S(0, 2)}, {eph.S(1, 0), eph.S(1, 1), eph.S(1, 2)}, {eph.S(2, 0), eph.S(2, 1), eph.S(2, 2)}}},
                       {"bodies", bodies},
                       {"max_round_trip_residual", worst}};
  Writer w(s, "ephem-check");
  w.text("ephem_check.json", report.dump(2) + "\n");
  std::cout << "max round-trip residual " << worst << "\n";
  return worst < 1e-10 ? ok : numerical_failure;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Circular restricted n-body toolkit"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);
  Options opt;
  double tol = 0;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out, "output directory (overrides the scenario's)");
    sub->add_option("-j,--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance-override", tol, "relative and absolute integrator tolerance")
        ->check(CLI::PositiveNumber);
    return sub;
  };
  CLI::App* fli = add("fli-map", "FLI map over an (a, e) grid with Tisserand overlays");
  CLI::App* fam = add("family", "vertical Lyapunov family by pseudo-arclength continuation");
  CLI::App* eps = add("epsilon-continue", "continue a CR3BP orbit to the full model in epsilon");
  CLI::App* land = add("landing-sweep", "backward landing trajectories over longitude");
  CLI::App* eph = add("ephem-check", "ephemerides correspondence report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }
  if (tol > 0)
    opt.tolerance = tol;

  try {
    if (fli->parsed())
      return cmd_fli_map(opt);
    if (fam->parsed())
      return cmd_family(opt);
    if (eps->parsed())
      return cmd_epsilon(opt);
    if (land->parsed())
      return cmd_landing(opt);
    if (eph->parsed())
      return cmd_ephem_check(opt);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config_error;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config_error;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const IntegrationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const SingularityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical_failure;
  }
  return ok;
}

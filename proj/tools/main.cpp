// neurobt command-line front end: analysis commands over a preset or a model
// config file, each writing plot-ready CSV/JSON plus a run manifest that
// records everything needed to reproduce the outputs byte for byte.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <neurobt/bifurcation.hpp>
#include <neurobt/coupling.hpp>
#include <neurobt/dynamics.hpp>
#include <neurobt/validate.hpp>

using json = nlohmann::json;
using namespace neurobt;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

json num_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

json eig_json(const Eigen::VectorXcd& ev) {
  json a = json::array();
  for (int i = 0; i < ev.size(); ++i)
    a.push_back({{"re", ev[i].real()}, {"im", ev[i].imag()}});
  return a;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// shared model / output options and manifest plumbing
struct Session {
  std::string preset_name;
  std::string config_path;
  std::string out_dir = "out";
  double gm_override = std::numeric_limits<double>::quiet_NaN();
  double gl_override = std::numeric_limits<double>::quiet_NaN();
  double iapp_override = std::numeric_limits<double>::quiet_NaN();

  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;

  // the sync sweep owns --gM as its grid, so it opts out of the override
  void add_model_options(CLI::App* cmd, bool with_gm = true) {
    auto* mo = cmd->add_option("--model", preset_name,
                               "built-in model: wang-buzsaki | stiefel | rtm");
    auto* co = cmd->add_option("--config", config_path, "model config JSON file");
    mo->excludes(co);
    co->excludes(mo);
    if (with_gm)
      cmd->add_option("--gM", gm_override, "override M-current conductance");
    cmd->add_option("--gL", gl_override, "override leak conductance");
    cmd->add_option("--Iapp", iapp_override, "override applied current");
    add_out_option(cmd);
  }

  void add_out_option(CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  }

  NeuronModel build() const {
    NeuronModel m;
    if (!config_path.empty())
      m = model_from_json_file(config_path);
    else if (!preset_name.empty())
      m = preset(preset_name);
    else
      throw ConfigError("model", "need --model or --config");
    if (std::isfinite(gm_override)) m = m.with_gm(gm_override);
    if (std::isfinite(gl_override)) m = m.with_gl(gl_override);
    if (std::isfinite(iapp_override)) m = m.with_iapp(iapp_override);
    return m;
  }

  std::ofstream open(const std::string& name) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / name,
                     std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("out", "cannot write to " + out_dir);
    outputs.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) {
    auto os = open(name);
    os << j.dump(1) << "\n";
  }

  void write_manifest(const std::string& command, json config,
                      json seed = nullptr) {
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    json man{{"command", command},
             {"config", std::move(config)},
             {"seed", std::move(seed)},
             {"tool_version", kVersion},
             {"wall_ms", ms},
             {"outputs", outputs}};
    auto os = open("manifest.json");
    os << man.dump(1) << "\n";
  }

  json model_json(const NeuronModel& m) const {
    return json::parse(model_to_json_text(m));
  }
};

json point_json(const BifPoint& p) {
  json j{{"kind", to_string(p.kind)},
         {"V", p.V},
         {"g_m", p.g_m},
         {"i_app", p.i_app},
         {"g_l", p.g_l},
         {"biophysical", p.biophysical},
         {"residuals", {{"phi", p.res_phi}, {"di", p.res_1}, {"second", p.res_2}}}};
  if (std::isfinite(p.alpha2)) j["alpha2"] = p.alpha2;
  if (std::isfinite(p.beta2)) j["beta2"] = p.beta2;
  return j;
}

std::vector<double> make_grid(double lo, double hi, double step,
                              const char* what) {
  if (!(step > 0) || !(hi >= lo))
    throw ConfigError(what, "need max >= min and positive step");
  std::vector<double> g;
  for (double x = lo; x <= hi + 0.5 * step; x += step) g.push_back(x);
  return g;
}

int run_equilibria(Session& s) {
  NeuronModel m = s.build();
  std::vector<std::string> warnings;
  auto eqs = find_equilibria(m, &warnings);
  json pts = json::array();
  for (const Equilibrium& e : eqs)
    pts.push_back({{"V", e.V},
                   {"i_app", e.i_app},
                   {"state", vec_json(e.state)},
                   {"eigenvalues", eig_json(e.eigenvalues)},
                   {"stability", to_string(e.stability)},
                   {"fold", e.fold}});
  s.write_json("points.json", {{"command", "equilibria"},
                               {"points", pts},
                               {"warnings", warnings}});
  s.write_manifest("equilibria", {{"model", s.model_json(m)}});
  return 0;
}

int run_detect(Session& s, const std::string& command) {
  NeuronModel m = s.build();
  std::vector<std::string> warnings;
  std::vector<BifPoint> pts;
  if (command == "bt")
    pts = find_bt(m, &warnings);
  else if (command == "cusp")
    pts = find_cusp(m, &warnings);
  else
    pts = find_btc(m, &warnings);
  json ja = json::array();
  for (const BifPoint& p : pts) ja.push_back(point_json(p));
  s.write_json("points.json",
               {{"command", command}, {"points", ja}, {"warnings", warnings}});
  s.write_manifest(command, {{"model", s.model_json(m)}});
  return 0;
}

struct GridOpts {
  double vmin = std::numeric_limits<double>::quiet_NaN();
  double vmax = std::numeric_limits<double>::quiet_NaN();
  double dv = 0.05;

  void add(CLI::App* cmd) {
    cmd->add_option("--vmin", vmin, "grid start (default: model window)");
    cmd->add_option("--vmax", vmax, "grid end (default: model window)");
    cmd->add_option("--dv", dv, "grid spacing (mV)")->capture_default_str();
  }
  std::vector<double> grid(const NeuronModel& m) const {
    double lo = std::isfinite(vmin) ? vmin : m.window_lo;
    double hi = std::isfinite(vmax) ? vmax : m.window_hi;
    return make_grid(lo, hi, dv, "v-grid");
  }
};

int run_branch(Session& s, const GridOpts& g) {
  NeuronModel m = s.build();
  auto grid = g.grid(m);
  auto pts = branch(m, grid);
  {
    auto os = s.open("branch.csv");
    os << "v,i_app,g_m,re_lambda_max,stability,flags\n";
    for (const BranchPoint& p : pts) {
      double re_max = p.eigenvalues.real().maxCoeff();
      std::string flags;
      if (p.lp) flags = "LP";
      if (p.hopf) flags += flags.empty() ? "Hopf" : "+Hopf";
      os << fmt(p.V) << ',' << fmt(p.i_app) << ',' << fmt(m.g_m) << ','
         << fmt(re_max) << ',' << to_string(p.stability) << ',' << flags
         << '\n';
    }
  }
  json events = json::array();
  for (const BranchPoint& p : pts)
    if (p.lp || p.hopf)
      events.push_back({{"V", p.V},
                        {"i_app", p.i_app},
                        {"type", p.lp ? "LP" : "Hopf"},
                        {"omega", num_or_null(
                             p.hopf ? p.hopf_omega
                                    : std::numeric_limits<double>::quiet_NaN())}});
  s.write_json("points.json", {{"command", "branch"},
                               {"points", events},
                               {"n_rows", pts.size()}});
  s.write_manifest("branch", {{"model", s.model_json(m)},
                              {"vmin", grid.front()},
                              {"vmax", grid.back()},
                              {"dv", g.dv}});
  return 0;
}

int run_fold_curve(Session& s, const GridOpts& g) {
  NeuronModel m = s.build();
  auto grid = g.grid(m);
  auto pts = fold_curve(m, grid);
  {
    auto os = s.open("branch.csv");
    os << "v,i_app,g_m,re_lambda_max,stability,flags\n";
    for (const FoldPoint& p : pts) {
      NeuronModel mp = m.with_gm(p.g_m).with_iapp(p.i_app);
      Equilibrium e = make_equilibrium(mp, p.V);
      os << fmt(p.V) << ',' << fmt(p.i_app) << ',' << fmt(p.g_m) << ','
         << fmt(e.eigenvalues.real().maxCoeff()) << ','
         << to_string(e.stability) << ",LP\n";
    }
  }
  s.write_json("points.json",
               {{"command", "fold-curve"},
                {"points", json::array()},
                {"n_rows", pts.size()},
                {"v_first", pts.empty() ? json() : json(pts.front().V)},
                {"v_last", pts.empty() ? json() : json(pts.back().V)}});
  s.write_manifest("fold-curve", {{"model", s.model_json(m)},
                                  {"vmin", grid.front()},
                                  {"vmax", grid.back()},
                                  {"dv", g.dv}});
  return 0;
}

struct SweepOpts {
  double lo = 0, hi = 0, step = 0;
  double t_per_point = 3000.0;
  double threshold = 0.0;
  double atol = 1e-8, rtol = 1e-6;
  std::string method = "rk45";
  std::string direction = "both";

  void add_integ(CLI::App* cmd) {
    cmd->add_option("--t-per-point", t_per_point, "ms simulated per grid point")
        ->capture_default_str();
    cmd->add_option("--threshold", threshold, "spike threshold (mV)")
        ->capture_default_str();
    cmd->add_option("--atol", atol, "integrator absolute tolerance")
        ->capture_default_str();
    cmd->add_option("--rtol", rtol, "integrator relative tolerance")
        ->capture_default_str();
    cmd->add_option("--method", method, "integrator")
        ->check(CLI::IsMember({"rk45", "rk4"}))
        ->capture_default_str();
  }
  FIProtocol protocol() const {
    FIProtocol p;
    p.t_per_point = t_per_point;
    p.integ.method = method == "rk4" ? Method::RK4 : Method::RK45;
    p.integ.atol = atol;
    p.integ.rtol = rtol;
    return p;
  }
  json config() const {
    return {{"t_per_point", t_per_point}, {"threshold", threshold},
            {"atol", atol},               {"rtol", rtol},
            {"method", method}};
  }
};

int run_fi(Session& s, SweepOpts& o) {
  NeuronModel m = s.build();
  auto grid = make_grid(o.lo, o.hi, o.step, "i-grid");
  FICurve fi = fi_curve(m, grid, o.protocol());
  {
    auto os = s.open("fi.csv");
    os << "direction,i_app,freq,fired\n";
    if (o.direction != "down")
      for (const FIPoint& p : fi.up)
        os << "up," << fmt(p.i_app) << ',' << fmt(p.freq) << ','
           << (p.fired ? 1 : 0) << '\n';
    if (o.direction != "up")
      for (const FIPoint& p : fi.down)
        os << "down," << fmt(p.i_app) << ',' << fmt(p.freq) << ','
           << (p.fired ? 1 : 0) << '\n';
  }
  s.write_json("points.json",
               {{"command", "fi"},
                {"points", json::array()},
                {"onset_current", num_or_null(fi.onset_current)},
                {"onset_frequency", num_or_null(fi.onset_frequency)},
                {"down_onset_current", num_or_null(fi.down_onset_current)},
                {"excitability", to_string(fi.excitability)}});
  s.write_manifest("fi", {{"model", s.model_json(m)},
                          {"imin", o.lo},
                          {"imax", o.hi},
                          {"di", o.step},
                          {"direction", o.direction},
                          {"protocol", o.config()}});
  return 0;
}

int run_fgm(Session& s, SweepOpts& o, int threads) {
  NeuronModel m = s.build();
  auto grid = make_grid(o.lo, o.hi, o.step, "gm-grid");
  FGMCurve curve = f_gm_curve(m, m.i_app, grid, o.protocol(), threads);
  {
    auto os = s.open("fi.csv");
    os << "g_m,freq,fired\n";
    for (const FGMPoint& p : curve.points)
      os << fmt(p.g_m) << ',' << fmt(p.freq) << ',' << (p.fired ? 1 : 0)
         << '\n';
  }
  s.write_json("points.json",
               {{"command", "fgm"},
                {"points", json::array()},
                {"monotone_decreasing", curve.monotone_decreasing}});
  s.write_manifest("fgm", {{"model", s.model_json(m)},
                           {"gmin", o.lo},
                           {"gmax", o.hi},
                           {"dg", o.step},
                           {"threads", threads},
                           {"protocol", o.config()}});
  return 0;
}

struct SyncOpts {
  std::vector<double> gms;
  double gmin = std::numeric_limits<double>::quiet_NaN();
  double gmax = std::numeric_limits<double>::quiet_NaN();
  double dg = std::numeric_limits<double>::quiet_NaN();
  std::string syn_preset = "ex1-exc";
  double gsyn = std::numeric_limits<double>::quiet_NaN();
  SyncProtocol proto;

  std::vector<double> grid() const {
    if (!gms.empty()) return gms;
    if (std::isfinite(gmin) && std::isfinite(gmax) && std::isfinite(dg))
      return make_grid(gmin, gmax, dg, "gm-grid");
    throw ConfigError("gM", "need --gM values or --gmin/--gmax/--dg");
  }
};

int run_sync(Session& s, SyncOpts& o, int threads) {
  NeuronModel m = s.build();
  SynapseSpec syn = synapse_preset(o.syn_preset);
  if (std::isfinite(o.gsyn)) syn = syn.with_gsyn(o.gsyn);
  o.proto.threads = threads;
  auto grid = o.grid();
  auto results = sync_sweep(m, syn, grid, o.proto);
  {
    auto os = s.open("sync.csv");
    write_sync_csv(results, os);
  }
  json summary = json::array();
  for (const SyncResult& r : results) {
    json clusters = json::array();
    for (const PhiCluster& c : r.clusters)
      clusters.push_back({{"phi", c.phi}, {"count", c.count}});
    int locked = 0;
    for (const SyncTrial& t : r.trials) locked += t.locked ? 1 : 0;
    summary.push_back({{"g_m", r.g_m},
                       {"classification", to_string(r.classification)},
                       {"clusters", clusters},
                       {"n_locked", locked},
                       {"n_trials", r.trials.size()}});
  }
  s.write_json("points.json", {{"command", "sync"}, {"points", summary}});
  s.write_manifest("sync",
                   {{"model", s.model_json(m)},
                    {"synapse",
                     {{"preset", o.syn_preset},
                      {"g_syn", syn.g_syn},
                      {"v_syn", syn.v_syn},
                      {"a_e0", syn.a_e0},
                      {"tau_s", syn.tau_s},
                      {"a_e", syn.a_e.str()}}},
                    {"g_m_grid", grid},
                    {"t_sim", o.proto.t_sim},
                    {"trials", o.proto.n_init},
                    {"threshold", o.proto.threshold},
                    {"cluster_tol", o.proto.cluster_tol},
                    {"threads", threads}},
                   o.proto.seed);
  return 0;
}

int run_validate(Session& s, const std::string& criteria_arg, int threads) {
  AcceptanceOptions opts;
  opts.threads = threads;
  if (!criteria_arg.empty()) {
    for (const char* p = criteria_arg.c_str(); *p;) {
      char* end = nullptr;
      long id = std::strtol(p, &end, 10);
      if (end == p || id < 1 || id > 10)
        throw ConfigError("criteria", "bad id list '" + criteria_arg + "'");
      opts.criteria.push_back((int)id);
      p = (*end == ',') ? end + 1 : end;
    }
  }
  auto results = run_acceptance(opts);
  int failures = 0;
  json ja = json::array();
  for (const CriterionResult& r : results) {
    std::printf("C%-2d %-24s %s  (%.0f ms)\n", r.id, r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.ms);
    if (!r.detail.empty()) std::printf("    %s\n", r.detail.c_str());
    failures += r.pass ? 0 : 1;
    ja.push_back({{"id", r.id},
                  {"name", r.name},
                  {"pass", r.pass},
                  {"detail", r.detail},
                  {"ms", r.ms}});
  }
  s.write_json("points.json", {{"command", "validate"},
                               {"points", ja},
                               {"failures", failures}});
  s.write_manifest("validate",
                   {{"criteria", criteria_arg.empty() ? "all" : criteria_arg},
                    {"threads", threads}});
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "closed-form double-zero / cusp / degenerate-point detection and "
      "simulation probes for conductance-based neurons with an M-current"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Session s;
  GridOpts grid;
  SweepOpts sweep;
  SyncOpts sync;
  int threads = 1;
  std::string criteria_arg;

  auto* eq = app.add_subcommand("equilibria", "steady states at fixed I_app");
  s.add_model_options(eq);

  auto* bt = app.add_subcommand("bt", "double-zero points over the window");
  s.add_model_options(bt);
  auto* cp = app.add_subcommand("cusp", "cusp points over the window");
  s.add_model_options(cp);
  auto* btc =
      app.add_subcommand("btc", "degenerate double-zero points (g_L solved)");
  s.add_model_options(btc);

  auto* br =
      app.add_subcommand("branch", "equilibrium branch with LP/Hopf events");
  s.add_model_options(br);
  grid.add(br);
  auto* fc =
      app.add_subcommand("fold-curve", "analytic fold curve in (I_app, g_M)");
  s.add_model_options(fc);
  grid.add(fc);

  auto* fi = app.add_subcommand("fi", "firing rate versus applied current");
  s.add_model_options(fi);
  fi->add_option("--imin", sweep.lo, "current grid start")->required();
  fi->add_option("--imax", sweep.hi, "current grid end")->required();
  fi->add_option("--di", sweep.step, "current grid step")->required();
  fi->add_option("--direction", sweep.direction, "rows written to fi.csv")
      ->check(CLI::IsMember({"up", "down", "both"}))
      ->capture_default_str();
  sweep.add_integ(fi);

  auto* fgm = app.add_subcommand("fgm", "firing rate versus g_M at fixed drive");
  s.add_model_options(fgm);
  fgm->get_option("--Iapp")->required();
  fgm->add_option("--gmin", sweep.lo, "conductance grid start")->required();
  fgm->add_option("--gmax", sweep.hi, "conductance grid end")->required();
  fgm->add_option("--dg", sweep.step, "conductance grid step")->required();
  fgm->add_option("--threads", threads, "worker threads")->capture_default_str();
  sweep.add_integ(fgm);

  auto* sy = app.add_subcommand("sync", "coupled-pair phase locking versus g_M");
  s.add_model_options(sy, /*with_gm=*/false);
  sy->add_option("--gM", sync.gms, "g_M grid values (swept)")->take_all();
  sy->add_option("--gmin", sync.gmin, "conductance grid start");
  sy->add_option("--gmax", sync.gmax, "conductance grid end");
  sy->add_option("--dg", sync.dg, "conductance grid step");
  sy->add_option("--syn-preset", sync.syn_preset,
                 "ex1-exc | ex1-inh | ex2-exc | ex2-inh | ex3-exc | ex3-inh")
      ->capture_default_str();
  sy->add_option("--gsyn", sync.gsyn, "synaptic conductance override");
  sy->add_option("--seed", sync.proto.seed, "RNG seed")->capture_default_str();
  sy->add_option("--trials", sync.proto.n_init, "initial conditions per g_M")
      ->capture_default_str();
  sy->add_option("--t-sim", sync.proto.t_sim, "ms simulated per trial")
      ->capture_default_str();
  sy->add_option("--threshold", sync.proto.threshold, "spike threshold (mV)")
      ->capture_default_str();
  sy->add_option("--cluster-tol", sync.proto.cluster_tol,
                 "phase clustering tolerance (rad)")
      ->capture_default_str();
  sy->add_option("--threads", threads, "worker threads")->capture_default_str();

  auto* va = app.add_subcommand("validate", "run the built-in acceptance suite");
  va->add_option("--criteria", criteria_arg, "comma-separated ids (default all)");
  va->add_option("--threads", threads, "worker threads")->capture_default_str();
  s.add_out_option(va);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(eq)) return run_equilibria(s);
    if (app.got_subcommand(bt)) return run_detect(s, "bt");
    if (app.got_subcommand(cp)) return run_detect(s, "cusp");
    if (app.got_subcommand(btc)) return run_detect(s, "btc");
    if (app.got_subcommand(br)) return run_branch(s, grid);
    if (app.got_subcommand(fc)) return run_fold_curve(s, grid);
    if (app.got_subcommand(fi)) return run_fi(s, sweep);
    if (app.got_subcommand(fgm)) return run_fgm(s, sweep, threads);
    if (app.got_subcommand(sy)) return run_sync(s, sync, threads);
    if (app.got_subcommand(va)) return run_validate(s, criteria_arg, threads);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const neurobt::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: bad config file: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 2;
}

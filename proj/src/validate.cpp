#include <neurobt/validate.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <neurobt/bifurcation.hpp>
#include <neurobt/coupling.hpp>
#include <neurobt/dynamics.hpp>

namespace neurobt {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Checker {
  bool ok = true;
  std::string detail;

  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note("FAILED: " + what);
    }
  }
  static std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }
};

template <typename F>
CriterionResult timed(int id, const std::string& name, F&& body) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  auto t0 = std::chrono::steady_clock::now();
  Checker c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  r.pass = c.ok;
  r.detail = c.detail;
  r.ms = std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
             .count();
  return r;
}

const BifPoint& nearest_v(const std::vector<BifPoint>& pts, double V) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::abs(pts[i].V - V) < std::abs(pts[best].V - V)) best = i;
  return pts[best];
}

struct Anchor {
  const char* model;
  double V, i_app, g_m;
  double tol_i;
};

void check_detection(Checker& c, const char* what,
                     const std::vector<BifPoint>& pts, const Anchor& a) {
  if (pts.empty()) {
    c.expect(false, std::string(a.model) + " " + what + ": no points found");
    return;
  }
  const BifPoint& p = nearest_v(pts, a.V);
  c.note(std::string(a.model) + " " + what + " (" + Checker::num(p.V) + ", " +
         Checker::num(p.g_m) + ", " + Checker::num(p.i_app) + ")");
  c.expect(std::abs(p.V - a.V) <= 0.05,
           std::string(a.model) + " V* off by " + Checker::num(p.V - a.V));
  c.expect(std::abs(p.g_m - a.g_m) <= 2e-3,
           std::string(a.model) + " g_M* off by " + Checker::num(p.g_m - a.g_m));
  c.expect(std::abs(p.i_app - a.i_app) <= a.tol_i,
           std::string(a.model) + " I* off by " + Checker::num(p.i_app - a.i_app));
}

CriterionResult c1_bt() {
  return timed(1, "bt-detection", [](Checker& c) {
    const Anchor refs[] = {
        {"wang-buzsaki", -59.698, 0.200, 0.146, 1e-2},
        {"stiefel", -59.9344, -0.0707, 0.1482, 1e-2},
        {"rtm", -63.7386, 0.2449, 0.0659, 0.5},
    };
    for (const Anchor& a : refs)
      check_detection(c, "BT", find_bt(preset(a.model)), a);
  });
}

CriterionResult c2_cusp() {
  return timed(2, "cusp-detection", [](Checker& c) {
    const Anchor refs[] = {
        {"wang-buzsaki", -51.5531, 1.2382, 2.3316, 1e-2},
        {"stiefel", -53.4754, 0.0216, 0.2724, 1e-2},
        {"rtm", -50.8204, 71.9395, 14.5123, 1.0},
    };
    for (const Anchor& a : refs)
      check_detection(c, "CP", find_cusp(preset(a.model)), a);
  });
}

CriterionResult c3_btc() {
  return timed(3, "btc-detection", [](Checker& c) {
    struct BtcRef {
      const char* model;
      double g_l, V, g_m;
      double tol_gl;  // relative
    };
    // The published coordinates carry few digits, so the leak anchor g_l is
    // compared against the solved degeneracy directly, while V and g_M are
    // checked through the curve landmark the coordinates describe: the
    // double-zero root pair at the anchor leak value (its midpoint when both
    // survive), falling back to the cusp once the pair has annihilated.
    const BtcRef refs[] = {
        {"wang-buzsaki", 0.7507, -46.6416, -0.0166046, 5e-3},
        {"stiefel", 0.3785, -43.1385, 0.0008, 1e-2},
        {"rtm", 13.79, -49.8762, -0.6745, 5e-3},
    };
    for (const BtcRef& a : refs) {
      NeuronModel m = preset(a.model);
      auto btcs = find_btc(m);
      if (btcs.empty()) {
        c.expect(false, std::string(a.model) + ": no BTC point found");
        continue;
      }
      const BifPoint& p = nearest_v(btcs, a.V);
      c.note(std::string(a.model) + " gL*=" + Checker::num(p.g_l));
      c.expect(std::abs(p.g_l - a.g_l) <= a.tol_gl * std::abs(a.g_l),
               std::string(a.model) + " g_L* off by " +
                   Checker::num(p.g_l - a.g_l));

      // reconstruct the published readout from the degeneracy structure at
      // the anchor leak value: nearby double-zero roots, the midpoint of an
      // adjacent surviving pair, or the cusp once the pair has annihilated
      NeuronModel ml = m.with_gl(a.g_l);
      struct Cand {
        double V, g_m;
        const char* kind;
      };
      std::vector<Cand> cands;
      std::vector<BifPoint> bts;
      try {
        bts = find_bt(ml);
      } catch (const NoRoot&) {
      }
      std::vector<const BifPoint*> near;
      for (const BifPoint& b : bts)
        if (std::abs(b.V - a.V) <= 2.0) near.push_back(&b);
      std::sort(near.begin(), near.end(),
                [](const BifPoint* x, const BifPoint* y) { return x->V < y->V; });
      for (const BifPoint* b : near) cands.push_back({b->V, b->g_m, "root"});
      for (std::size_t i = 1; i < near.size(); ++i)
        cands.push_back({0.5 * (near[i - 1]->V + near[i]->V),
                         0.5 * (near[i - 1]->g_m + near[i]->g_m), "midpoint"});
      try {
        for (const BifPoint& cp : find_cusp(ml))
          if (std::abs(cp.V - a.V) <= 2.0) cands.push_back({cp.V, cp.g_m, "cusp"});
      } catch (const NoRoot&) {
      }
      if (cands.empty()) {
        c.expect(false, std::string(a.model) + ": no landmark at anchor g_L");
        continue;
      }
      auto score = [&](const Cand& x) {
        return std::max(std::abs(x.V - a.V) / 0.1,
                        std::abs(x.g_m - a.g_m) / 5e-3);
      };
      const Cand* best = &cands[0];
      for (const Cand& x : cands)
        if (score(x) < score(*best)) best = &x;
      c.note(std::string(a.model) + " landmark=" + best->kind + " (" +
             Checker::num(best->V) + ", " + Checker::num(best->g_m) + ")");
      c.expect(std::abs(best->V - a.V) <= 0.1,
               std::string(a.model) + " V* off by " +
                   Checker::num(best->V - a.V));
      c.expect(std::abs(best->g_m - a.g_m) <= 5e-3,
               std::string(a.model) + " g_M* off by " +
                   Checker::num(best->g_m - a.g_m));
    }
  });
}

CriterionResult c4_spectrum() {
  return timed(4, "double-zero-spectrum", [](Checker& c) {
    for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
      NeuronModel m = preset(name);
      auto pts = find_bt(m);
      c.expect(!pts.empty(), std::string(name) + ": no BT points");
      for (const BifPoint& p : pts) {
        NeuronModel mp = at_point(m, p);
        Eigen::VectorXcd ev =
            mp.jacobian(mp.steady_state(p.V)).eigenvalues();
        int small = 0, mid = 0;
        double third = 0;
        for (int i = 0; i < ev.size(); ++i) {
          double a = std::abs(ev[i]);
          if (a <= 1e-4)
            ++small;
          else if (a <= 1e-2)
            ++mid;
          else
            third = std::max(third, a);
        }
        c.expect(small == 2, std::string(name) + " V=" + Checker::num(p.V) +
                                 ": " + std::to_string(small) +
                                 " near-zero eigenvalues");
        c.expect(mid == 0, std::string(name) + " V=" + Checker::num(p.V) +
                               ": eigenvalue in the separation gap");
      }
      c.note(std::string(name) + ": " + std::to_string(pts.size()) +
             " points, all 2+rest spectra");
    }
  });
}

CriterionResult c5_normal_form() {
  return timed(5, "normal-form-identities", [](Checker& c) {
    struct Ref {
      const char* model;
      double V;
    };
    const Ref refs[] = {{"wang-buzsaki", -59.698},
                        {"stiefel", -59.934},
                        {"rtm", -63.739}};
    double ratios[3] = {0, 0, 0};
    int k = 0;
    for (const Ref& r : refs) {
      NeuronModel m = preset(r.model);
      const BifPoint p = nearest_v(find_bt(m), r.V);
      NormalForm nf = normal_form_coeffs(m, p);
      NeuronModel mp = at_point(m, p);
      Eigen::VectorXd s = mp.steady_state(p.V);
      BTEigvectors v = bt_eigvectors(mp.jacobian(s));
      double d2 = di_infty(mp, p.V, 2);
      ratios[k] = nf.alpha2 / (v.p1[0] * v.q0[0] * v.q0[0] * d2);
      c.note(std::string(r.model) + " ratio=" + Checker::num(ratios[k]));
      ++k;

      // beta2 must not depend on which solution of the singular linear
      // system was picked: shifting h20 along the kernel leaves it fixed
      auto H = mp.hessians(s);
      Eigen::VectorXd gq(s.size());
      for (int i = 0; i < s.size(); ++i) gq[i] = v.q0.dot(H[i] * v.q1);
      double base = v.p1.dot(gq);
      for (double cc : {-1.0, 1.0, 10.0}) {
        double shifted = base - v.p1.dot((nf.h20 + cc * v.q0).eval());
        c.expect(std::abs(shifted - nf.beta2) <= 1e-8,
                 std::string(r.model) + " beta2 kernel shift c=" +
                     Checker::num(cc) + " moved by " +
                     Checker::num(shifted - nf.beta2));
      }
    }
    for (int i = 1; i < 3; ++i)
      c.expect(std::abs(ratios[i] - ratios[0]) <= 1e-4 * std::abs(ratios[0]),
               "curvature ratio differs between models: " +
                   Checker::num(ratios[0]) + " vs " + Checker::num(ratios[i]));

    for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
      auto btcs = find_btc(preset(name));
      c.expect(!btcs.empty(), std::string(name) + ": no BTC point");
      for (const BifPoint& p : btcs) {
        c.expect(std::abs(p.alpha2) <= 1e-4,
                 std::string(name) + " alpha2 at BTC = " +
                     Checker::num(p.alpha2));
      }
    }
  });
}

CriterionResult c6_branch() {
  return timed(6, "branch-events", [](Checker& c) {
    {
      NeuronModel m = preset("wang-buzsaki").with_gm(3.0);
      std::vector<double> grid;
      for (double v = -75.0; v <= -40.0 + 1e-12; v += 0.05) grid.push_back(v);
      const BranchPoint* hopf = nullptr;
      auto pts = branch(m, grid);
      for (const auto& p : pts)
        if (p.hopf) hopf = &p;
      if (!hopf) {
        c.expect(false, "wang-buzsaki g_M=3: no Hopf point");
      } else {
        c.note("Hopf I=" + Checker::num(hopf->i_app));
        c.expect(std::abs(hopf->i_app - 1.1416) <= 0.01,
                 "Hopf current off by " + Checker::num(hopf->i_app - 1.1416));
      }
    }
    {
      NeuronModel m = preset("wang-buzsaki");
      std::vector<double> grid;
      for (double v = -80.0; v <= -30.0 + 1e-12; v += 0.1) grid.push_back(v);
      const BranchPoint* lp = nullptr;
      auto pts = branch(m, grid);
      for (const auto& p : pts)
        if (p.lp && !lp) lp = &p;  // lowest-V limit point
      if (!lp) {
        c.expect(false, "wang-buzsaki g_M=0: no limit point");
      } else {
        c.note("LP I=" + Checker::num(lp->i_app));
        c.expect(std::abs(lp->i_app - 0.16) <= 0.01,
                 "limit-point current off by " + Checker::num(lp->i_app - 0.16));
      }
    }
  });
}

CriterionResult c7_excitability() {
  return timed(7, "excitability-classes", [](Checker& c) {
    struct Setting {
      const char* model;
      double g_m;
      ExcitabilityClass want;
      std::vector<double> grid;
      double t_per_point;
    };
    auto ramp = [](double lo, double hi, double step) {
      std::vector<double> g;
      for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
      return g;
    };
    const Setting settings[] = {
        {"wang-buzsaki", 0.0, ExcitabilityClass::I,
         {0.15, 0.158, 0.1605, 0.162, 0.17}, 3000.0},
        {"stiefel", 0.0, ExcitabilityClass::I,
         {-0.13, -0.125, -0.1205, -0.118, -0.11}, 3000.0},
        {"rtm", 0.0, ExcitabilityClass::I,
         {0.11, 0.117, 0.1195, 0.122, 0.13}, 3000.0},
        {"wang-buzsaki", 3.0, ExcitabilityClass::II,
         ramp(1.10, 1.18, 0.005), 6000.0},
        {"stiefel", 0.6, ExcitabilityClass::II,
         {0.15, 0.165, 0.18, 0.195, 0.21}, 3000.0},
        {"rtm", 18.0, ExcitabilityClass::II, ramp(60.0, 66.0, 0.5), 6000.0},
    };
    for (const Setting& s : settings) {
      NeuronModel m = preset(s.model).with_gm(s.g_m);
      FIProtocol proto;
      proto.t_per_point = s.t_per_point;
      FICurve fi = fi_curve(m, s.grid, proto);
      c.note(std::string(s.model) + " g_M=" + Checker::num(s.g_m) + ": " +
             to_string(fi.excitability) + " onset I=" +
             Checker::num(fi.onset_current) + " f=" +
             Checker::num(fi.onset_frequency));
      c.expect(fi.excitability == s.want,
               std::string(s.model) + " g_M=" + Checker::num(s.g_m) +
                   " classified " + to_string(fi.excitability));
      if (s.want == ExcitabilityClass::I)
        c.expect(fi.onset_frequency < 5.0,
                 std::string(s.model) + " class-I onset frequency " +
                     Checker::num(fi.onset_frequency));
      if (s.want == ExcitabilityClass::II)
        c.expect(!(fi.down_onset_current > fi.onset_current),
                 std::string(s.model) + " down-sweep onset above up-sweep");
    }
    // the probed conductances straddle the organizing points: the class-II
    // value sits above the cusp value, the class-I value at or below the
    // double-zero value
    for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
      NeuronModel m = preset(name);
      double bt_gm = nearest_v(find_bt(m), -65.0).g_m;
      double cusp_gm = nearest_v(find_cusp(m), -52.0).g_m;
      double gm_ii = std::string(name) == "wang-buzsaki" ? 3.0
                     : std::string(name) == "stiefel"    ? 0.6
                                                         : 18.0;
      c.expect(gm_ii > cusp_gm, std::string(name) + " class-II probe " +
                                    Checker::num(gm_ii) + " below cusp " +
                                    Checker::num(cusp_gm));
      c.expect(bt_gm > 0.0, std::string(name) +
                                " double-zero value not above the class-I "
                                "probe: " + Checker::num(bt_gm));
      c.note(std::string(name) + " interval (" + Checker::num(bt_gm) + ", " +
             Checker::num(cusp_gm) + ")");
    }
  });
}

CriterionResult c8_sync(int threads) {
  return timed(8, "sync-transition", [threads](Checker& c) {
    // calibrated coupled-pair protocol: drive I_app=5, g_syn=0.05, first
    // synapse preset, 15 s per trial, 10 seeded initial conditions
    NeuronModel m = preset("wang-buzsaki").with_iapp(5.0);
    SyncProtocol proto;
    proto.t_sim = 15000.0;
    proto.n_init = 10;
    proto.seed = 42;
    proto.threads = threads;

    auto dominant = [&](const char* syn_name, double gm) {
      SynapseSpec syn = synapse_preset(syn_name).with_gsyn(0.05);
      auto rs = sync_sweep(m, syn, {gm}, proto);
      return rs.at(0);
    };
    auto circ0 = [](double phi) {
      double d = std::fmod(std::abs(phi), 2.0 * kPi);
      return std::min(d, 2.0 * kPi - d);
    };

    SyncResult exc_low = dominant("ex1-exc", 0.25);
    if (exc_low.clusters.empty()) {
      c.expect(false, "excitatory g_M=0.25: no locked trials");
    } else {
      double phi = exc_low.clusters[0].phi;
      c.note("exc g_M=0.25 phi=" + Checker::num(phi) + " x" +
             std::to_string(exc_low.clusters[0].count));
      c.expect(std::abs(phi - kPi) < 0.3,
               "excitatory g_M=0.25 dominant phase " + Checker::num(phi));
      c.expect(exc_low.clusters[0].count >= 6,
               "excitatory g_M=0.25 weak consensus");
    }

    SyncResult exc_high = dominant("ex1-exc", 1.0);
    if (exc_high.clusters.empty()) {
      c.expect(false, "excitatory g_M=1.0: no locked trials");
    } else {
      double phi = exc_high.clusters[0].phi;
      c.note("exc g_M=1.0 phi=" + Checker::num(phi) + " x" +
             std::to_string(exc_high.clusters[0].count));
      c.expect(circ0(phi) < 0.3,
               "excitatory g_M=1.0 dominant phase " + Checker::num(phi));
    }

    SyncResult inh_low = dominant("ex1-inh", 0.25);
    if (inh_low.clusters.empty()) {
      c.expect(false, "inhibitory g_M=0.25: no locked trials");
    } else {
      double phi = inh_low.clusters[0].phi;
      c.note("inh g_M=0.25 phi=" + Checker::num(phi) + " x" +
             std::to_string(inh_low.clusters[0].count));
      c.expect(circ0(phi) < 0.3,
               "inhibitory g_M=0.25 dominant phase " + Checker::num(phi));
      c.expect(inh_low.clusters[0].count >= 6,
               "inhibitory g_M=0.25 weak consensus");
    }

    // the anti-to-in switch therefore happens between the probes, inside
    // the double-zero-to-cusp conductance interval
    NeuronModel base = preset("wang-buzsaki");
    double bt_gm = nearest_v(find_bt(base), -59.7).g_m;
    double cusp_gm = nearest_v(find_cusp(base), -52.0).g_m;
    c.note("interval (" + Checker::num(bt_gm) + ", " + Checker::num(cusp_gm) +
           ")");
    c.expect(bt_gm < 0.25, "lower probe below the double-zero value");
    c.expect(1.0 < cusp_gm, "upper probe above the cusp value");
  });
}

CriterionResult c9_fgm(int threads) {
  return timed(9, "rate-monotonicity", [threads](Checker& c) {
    struct Setting {
      const char* model;
      double i_app;
      std::vector<double> gms;
    };
    const Setting settings[] = {
        {"wang-buzsaki", 1.2, {0.0, 0.75, 1.5, 2.25, 3.0}},
        {"stiefel", 0.25, {0.0, 0.15, 0.3, 0.45, 0.6}},
        {"rtm", 70.0, {0.0, 4.5, 9.0, 13.5, 18.0}},
    };
    FIProtocol proto;
    proto.t_per_point = 3000.0;
    for (const Setting& s : settings) {
      FGMCurve curve =
          f_gm_curve(preset(s.model), s.i_app, s.gms, proto, threads);
      std::string row = std::string(s.model) + " f:";
      for (const auto& p : curve.points) {
        row += " " + Checker::num(p.freq);
        c.expect(p.fired, std::string(s.model) + " g_M=" +
                              Checker::num(p.g_m) + " did not fire");
      }
      c.note(row);
      c.expect(curve.monotone_decreasing,
               std::string(s.model) + " rate not strictly decreasing");
    }
  });
}

CriterionResult c10_derivatives() {
  return timed(10, "derivative-consistency", [](Checker& c) {
    const double h = 1e-4;
    for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
      NeuronModel m = preset(name);
      double worst = 0;
      for (double V : {-70.0, -60.0, -50.0, -40.0, -30.0}) {
        AuxFunctions lo = aux_functions(m, V - h);
        AuxFunctions hi = aux_functions(m, V + h);
        AuxFunctions mid = aux_functions(m, V);
        double fd_z1 = (hi.X1 - lo.X1) / (2 * h);
        double fd_z2 = (hi.X2 - lo.X2) / (2 * h);
        c.expect(std::abs(fd_z1 - mid.Z1) <=
                     1e-5 * std::max(1.0, std::abs(mid.Z1)),
                 std::string(name) + " Z1 vs dX1/dV at V=" + Checker::num(V));
        c.expect(std::abs(fd_z2 - mid.Z2) <=
                     1e-5 * std::max(1.0, std::abs(mid.Z2)),
                 std::string(name) + " Z2 vs dX2/dV at V=" + Checker::num(V));

        double fd_i1 = (i_infty(m, V + h) - i_infty(m, V - h)) / (2 * h);
        double fd_i2 = (di_infty(m, V + h, 1) - di_infty(m, V - h, 1)) / (2 * h);
        c.expect(std::abs(fd_i1 - di_infty(m, V, 1)) <=
                     1e-5 * std::max(1.0, std::abs(di_infty(m, V, 1))),
                 std::string(name) + " dI/dV at V=" + Checker::num(V));
        c.expect(std::abs(fd_i2 - di_infty(m, V, 2)) <=
                     1e-5 * std::max(1.0, std::abs(di_infty(m, V, 2))),
                 std::string(name) + " d2I/dV2 at V=" + Checker::num(V));
        worst = std::max(worst, std::abs(fd_z1 - mid.Z1));
      }

      // Jacobian and Hessians against directional finite differences
      Eigen::VectorXd s = m.steady_state(-60.0);
      Eigen::MatrixXd J = m.jacobian(s);
      int n = static_cast<int>(s.size());
      Eigen::MatrixXd Jfd(n, n);
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd sp = s, sm = s;
        sp[j] += h;
        sm[j] -= h;
        Jfd.col(j) = (m.rhs_scaled(sp) - m.rhs_scaled(sm)) / (2 * h);
      }
      double jscale = std::max(1.0, J.cwiseAbs().maxCoeff());
      c.expect((J - Jfd).cwiseAbs().maxCoeff() <= 1e-5 * jscale,
               std::string(name) + " Jacobian vs finite differences");

      auto H = m.hessians(s);
      Eigen::VectorXd dir = Eigen::VectorXd::Ones(n).normalized();
      Eigen::MatrixXd Jp = m.jacobian(s + h * dir);
      Eigen::MatrixXd Jm = m.jacobian(s - h * dir);
      Eigen::MatrixXd dJ = (Jp - Jm) / (2 * h);
      double worst_h = 0;
      for (int i = 0; i < n; ++i)
        worst_h = std::max(
            worst_h, ((H[i] * dir).transpose() - dJ.row(i)).cwiseAbs().maxCoeff());
      c.expect(worst_h <= 1e-4 * std::max(1.0, dJ.cwiseAbs().maxCoeff()),
               std::string(name) + " Hessians vs Jacobian differences");
      c.note(std::string(name) + " ok");
    }
  });
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  auto wanted = [&](int id) {
    if (!opts.criteria.empty())
      return std::find(opts.criteria.begin(), opts.criteria.end(), id) !=
             opts.criteria.end();
    return (id >= 7 && id <= 9) ? opts.slow : opts.fast;
  };
  std::vector<CriterionResult> out;
  if (wanted(1)) out.push_back(c1_bt());
  if (wanted(2)) out.push_back(c2_cusp());
  if (wanted(3)) out.push_back(c3_btc());
  if (wanted(4)) out.push_back(c4_spectrum());
  if (wanted(5)) out.push_back(c5_normal_form());
  if (wanted(6)) out.push_back(c6_branch());
  if (wanted(7)) out.push_back(c7_excitability());
  if (wanted(8)) out.push_back(c8_sync(opts.threads));
  if (wanted(9)) out.push_back(c9_fgm(opts.threads));
  if (wanted(10)) out.push_back(c10_derivatives());
  return out;
}

}  // namespace neurobt

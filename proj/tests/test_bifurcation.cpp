#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <neurobt/bifurcation.hpp>

#include <algorithm>
#include <cmath>

using namespace neurobt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// leak + M-current only, sigmoidal activation
const char* kMOnlyJson = R"json({
  "capacitance": 1.0,
  "leak": {"g": 0.1, "E": -60.0},
  "m_current": {"g": 0.5, "E": -90.0,
                "winf": "1/(1+exp(-(V+39)/5))", "tau": "75", "phi": 1.0},
  "gates": [], "currents": [],
  "window": [-80.0, -20.0]
})json";

// w_inf identically one: the trace condition has no solution
const char* kSaturatedWJson = R"json({
  "capacitance": 1.0,
  "leak": {"g": 0.1, "E": -60.0},
  "m_current": {"g": 0.5, "E": -90.0, "winf": "1", "tau": "75", "phi": 1.0},
  "gates": [], "currents": [],
  "window": [-80.0, -20.0]
})json";

const char* kConstHalfWJson = R"json({
  "capacitance": 1.0,
  "leak": {"g": 0.1, "E": -60.0},
  "m_current": {"g": 0.5, "E": -90.0, "winf": "0.5", "tau": "75", "phi": 1.0},
  "gates": [], "currents": [],
  "window": [-80.0, -20.0]
})json";

const char* kZeroWJson = R"json({
  "capacitance": 1.0,
  "leak": {"g": 0.1, "E": -60.0},
  "m_current": {"g": 0.5, "E": -90.0, "winf": "0", "tau": "75", "phi": 1.0},
  "gates": [], "currents": [],
  "window": [-80.0, -20.0]
})json";

const char* kPureLeakJson = R"json({
  "capacitance": 1.0,
  "leak": {"g": 0.1, "E": -60.0},
  "m_current": null,
  "gates": [], "currents": [],
  "window": [-80.0, -20.0]
})json";

const BifPoint& nearest(const std::vector<BifPoint>& pts, double V) {
  REQUIRE(!pts.empty());
  const BifPoint* best = &pts[0];
  for (const auto& p : pts)
    if (std::abs(p.V - V) < std::abs(best->V - V)) best = &p;
  return *best;
}

void check_residuals(const std::vector<BifPoint>& pts) {
  for (const auto& p : pts) {
    CHECK(p.res_phi <= 1e-8);
    CHECK(p.res_1 <= 1e-8);
    CHECK(p.res_2 <= 1e-8);
    CHECK(p.biophysical == (p.g_m >= 0.0));
  }
}

// bilinear form of the state Hessians: G(x,y)[i] = x^T H_i y
VectorXd bilinear(const std::vector<MatrixXd>& H, const VectorXd& x,
                  const VectorXd& y) {
  VectorXd g(static_cast<Eigen::Index>(H.size()));
  for (size_t i = 0; i < H.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = x.dot(H[i] * y);
  return g;
}

struct BtcRef {
  const char* name;
  double V, gl_star, v_paperish;
};

}  // namespace

TEST_CASE("auxiliary functions: ionic terms vanish without ionic currents") {
  NeuronModel m = model_from_json_text(kMOnlyJson);
  for (double V : {-70.0, -55.0, -40.0, -30.0}) {
    AuxFunctions ax = aux_functions(m, V);
    CHECK(ax.X2 == 0.0);
    CHECK(ax.Y2 == 0.0);
    CHECK(ax.Z2 == 0.0);
    // independent closed forms for the sigmoid activation
    double x = (V + 39.0) / 5.0;
    double s = 1.0 / (1.0 + std::exp(-x));
    double w = s;
    double wd = s * (1.0 - s) / 5.0;
    double wdd = s * (1.0 - s) * (1.0 - 2.0 * s) / 25.0;
    CHECK(ax.X1 == doctest::Approx(w + wd * (V + 90.0)).epsilon(1e-10));
    CHECK(ax.Y1 == doctest::Approx(75.0 * (V + 90.0) * wd).epsilon(1e-10));
    CHECK(ax.Z1 == doctest::Approx(2.0 * wd + wdd * (V + 90.0)).epsilon(1e-10));
  }
}

TEST_CASE("auxiliary functions: second-order pair differentiates the first-order pair") {
  const double h = 1e-4;
  for (const char* name : {"wang-buzsaki", "rtm"}) {
    NeuronModel m = preset(name);
    for (double V : {-70.0, -60.0, -50.0, -45.0}) {
      AuxFunctions lo = aux_functions(m, V - h);
      AuxFunctions hi = aux_functions(m, V + h);
      AuxFunctions mid = aux_functions(m, V);
      double z1_fd = (hi.X1 - lo.X1) / (2.0 * h);
      double z2_fd = (hi.X2 - lo.X2) / (2.0 * h);
      CHECK(std::abs(z1_fd - mid.Z1) <= 1e-5 * std::max(1.0, std::abs(mid.Z1)));
      CHECK(std::abs(z2_fd - mid.Z2) <= 1e-5 * std::max(1.0, std::abs(mid.Z2)));
    }
  }
}

TEST_CASE("dual conductance formulas agree at a double-zero point") {
  NeuronModel m = preset("wang-buzsaki");
  AuxFunctions ax = aux_functions(m, -59.69779393);
  double gm_fold = (ax.X2 - m.g_leak) / ax.X1;
  double gm_trace = (ax.Y2 + 1.0) / ax.Y1;
  CHECK(gm_fold == doctest::Approx(0.145523736).epsilon(1e-6));
  CHECK(gm_trace == doctest::Approx(0.145523736).epsilon(1e-6));
  CHECK(std::abs(gm_fold - gm_trace) <= 1e-6);
}

TEST_CASE("find_bt: wang-buzsaki") {
  NeuronModel m = preset("wang-buzsaki");
  auto pts = find_bt(m);
  check_residuals(pts);
  const BifPoint& a = nearest(pts, -59.698);
  CHECK(a.V == doctest::Approx(-59.69779393).epsilon(1e-8));
  CHECK(a.g_m == doctest::Approx(0.145523736).epsilon(1e-7));
  CHECK(a.i_app == doctest::Approx(0.2000385456).epsilon(1e-6));
  CHECK(a.biophysical);
  CHECK(std::abs(a.V - (-59.698)) <= 0.05);
  CHECK(std::abs(a.g_m - 0.146) <= 2e-3);
  CHECK(std::abs(a.i_app - 0.200) <= 1e-2);
  CHECK(a.alpha2 == doctest::Approx(8.5399015e-05).epsilon(1e-5));
  CHECK(a.beta2 == doctest::Approx(0.00023173585).epsilon(1e-5));
  const BifPoint& b = nearest(pts, -40.993);
  CHECK(b.V == doctest::Approx(-40.99256536).epsilon(1e-8));
  CHECK(b.g_m == doctest::Approx(-0.03683359294).epsilon(1e-6));
  CHECK(b.i_app == doctest::Approx(-6.792481609).epsilon(1e-6));
  CHECK(!b.biophysical);
  CHECK(b.alpha2 == doctest::Approx(0.00091770304).epsilon(1e-5));
  CHECK(b.beta2 == doctest::Approx(-0.0035249984).epsilon(1e-5));
  for (const auto& p : pts) CHECK(p.kind == BifKind::BT);
}

TEST_CASE("find_bt: stiefel") {
  NeuronModel m = preset("stiefel");
  auto pts = find_bt(m);
  check_residuals(pts);
  const BifPoint& a = nearest(pts, -59.934);
  CHECK(a.V == doctest::Approx(-59.93811568).epsilon(1e-8));
  CHECK(a.g_m == doctest::Approx(0.1480176084).epsilon(1e-7));
  CHECK(a.i_app == doctest::Approx(-0.07078115813).epsilon(1e-6));
  CHECK(a.biophysical);
  CHECK(std::abs(a.V - (-59.9344)) <= 0.05);
  CHECK(std::abs(a.g_m - 0.1482) <= 2e-3);
  CHECK(std::abs(a.i_app - (-0.0707)) <= 1e-2);
  CHECK(a.alpha2 == doctest::Approx(3.269953e-05).epsilon(1e-5));
  CHECK(a.beta2 == doctest::Approx(0.00050879239).epsilon(1e-5));
}

TEST_CASE("find_bt: rtm") {
  NeuronModel m = preset("rtm");
  auto pts = find_bt(m);
  check_residuals(pts);
  const BifPoint& a = nearest(pts, -63.739);
  CHECK(a.V == doctest::Approx(-63.73857593).epsilon(1e-8));
  CHECK(a.g_m == doctest::Approx(0.06586384122).epsilon(1e-7));
  CHECK(a.i_app == doctest::Approx(0.2449442185).epsilon(1e-6));
  CHECK(a.biophysical);
  CHECK(std::abs(a.V - (-63.7386)) <= 0.05);
  CHECK(std::abs(a.g_m - 0.0659) <= 2e-3);
  CHECK(std::abs(a.i_app - 0.2449) <= 0.5);
  CHECK(a.alpha2 == doctest::Approx(0.00038212471).epsilon(1e-5));
  CHECK(a.beta2 == doctest::Approx(0.00099404147).epsilon(1e-5));
}

TEST_CASE("find_cusp: all presets") {
  struct Ref {
    const char* name;
    double V, i_app, g_m, i_tol;
  };
  for (const Ref& r : {Ref{"wang-buzsaki", -51.55311905, 1.238213623, 2.331601496, 1e-2},
                       Ref{"stiefel", -53.4753716, 0.02159188563, 0.2723506198, 1e-2},
                       Ref{"rtm", -50.8203925, 71.93945894, 14.51227359, 1.0}}) {
    NeuronModel m = preset(r.name);
    auto pts = find_cusp(m);
    check_residuals(pts);
    const BifPoint& a = nearest(pts, r.V);
    CHECK(a.kind == BifKind::CP);
    CHECK(a.V == doctest::Approx(r.V).epsilon(1e-8));
    CHECK(a.g_m == doctest::Approx(r.g_m).epsilon(1e-6));
    CHECK(a.i_app == doctest::Approx(r.i_app).epsilon(1e-5));
    CHECK(a.biophysical);
    // rounded reference tuples
    CHECK(std::abs(a.V - std::round(r.V * 1e4) / 1e4) <= 0.05);
    CHECK(std::abs(a.g_m - std::round(r.g_m * 1e4) / 1e4) <= 2e-3);
    CHECK(std::abs(a.i_app - std::round(r.i_app * 1e4) / 1e4) <= r.i_tol);
  }
}

TEST_CASE("find_btc: all presets") {
  struct Ref {
    const char* name;
    double V, i_app, g_m, g_l, gl_tol, beta2;
  };
  for (const Ref& r :
       {Ref{"wang-buzsaki", -46.71291095, 7.753893168, -0.01622167072,
            0.750366518, 1e-6, -0.0059760467},
        Ref{"stiefel", -43.26553478, 2.969686835, -0.0001453366636,
            0.3806994405, 1e-6, 0.42981075},
        Ref{"rtm", -49.93042086, 166.2167961, -0.6633207659, 13.78180356,
            1e-5, -0.0026953349}}) {
    NeuronModel m = preset(r.name);
    auto pts = find_btc(m);
    check_residuals(pts);
    const BifPoint& a = nearest(pts, r.V);
    CHECK(a.kind == BifKind::BTC);
    CHECK(a.V == doctest::Approx(r.V).epsilon(1e-8));
    CHECK(a.g_m == doctest::Approx(r.g_m).epsilon(1e-4));
    CHECK(std::abs(a.g_m - r.g_m) <= 1e-7);
    CHECK(a.i_app == doctest::Approx(r.i_app).epsilon(1e-5));
    CHECK(a.g_l == doctest::Approx(r.g_l).epsilon(r.gl_tol));
    CHECK(std::abs(a.alpha2) <= 1e-10);
    CHECK(a.beta2 == doctest::Approx(r.beta2).epsilon(1e-5));
  }
}

TEST_CASE("double-zero spectrum at every detected BT point") {
  for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
    NeuronModel m = preset(name);
    for (const auto& p : find_bt(m)) {
      NeuronModel mm = at_point(m, p);
      VectorXd s = mm.steady_state(p.V);
      Eigen::EigenSolver<MatrixXd> es(mm.jacobian(s));
      int near_zero = 0;
      double min_rest = 1e300;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double a = std::abs(es.eigenvalues()[i]);
        if (a <= 1e-4)
          ++near_zero;
        else
          min_rest = std::min(min_rest, a);
      }
      CHECK(near_zero == 2);
      CHECK(min_rest > 1e-2);
    }
  }
}

TEST_CASE("bt_eigvectors: closed form on a 2x2 nilpotent fixture") {
  MatrixXd A(2, 2);
  A << 2.0, -1.0, 4.0, -2.0;
  BTEigvectors v = bt_eigvectors(A);
  CHECK(v.q0[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v.q0[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(v.q1[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(v.q1[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(v.p1[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(v.p1[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(v.p0[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(v.p0[1]) <= 1e-14);
}

TEST_CASE("bt_eigvectors: defining relations and biorthogonality at model points") {
  for (const char* name : {"wang-buzsaki", "stiefel", "rtm"}) {
    NeuronModel m = preset(name);
    std::vector<BifPoint> pts = find_bt(m);
    for (const auto& p : find_btc(m)) pts.push_back(p);
    for (const auto& p : pts) {
      NeuronModel mm = at_point(m, p);
      VectorXd s = mm.steady_state(p.V);
      MatrixXd A = mm.jacobian(s);
      BTEigvectors v = bt_eigvectors(A);
      CHECK((A * v.q0).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((A * v.q1 - v.q0).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((A.transpose() * v.p1).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((A.transpose() * v.p0 - v.p1).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(v.p0.dot(v.q0) == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(std::abs(v.p0.dot(v.q1)) <= 1e-8);
      CHECK(std::abs(v.p1.dot(v.q0)) <= 1e-8);
      CHECK(v.p1.dot(v.q1) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("bt_eigvectors: rejects matrices without a double-zero pair") {
  NeuronModel m = preset("wang-buzsaki").with_gm(0.5);
  VectorXd s = m.steady_state(-65.0);
  CHECK_THROWS_AS(bt_eigvectors(m.jacobian(s)), NotDoubleZero);

  // double zero, but the defective pair is not reachable by the closed form
  MatrixXd bad = MatrixXd::Zero(3, 3);
  bad(0, 1) = 1.0;
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(bt_eigvectors(bad), NotDoubleZero);
}

TEST_CASE("normal form: quadratic coefficient matches the curvature identity") {
  double ratios[3];
  int k = 0;
  struct Ref {
    const char* name;
    double V;
  };
  for (const Ref& r : {Ref{"wang-buzsaki", -59.698}, Ref{"stiefel", -59.934},
                       Ref{"rtm", -63.739}}) {
    NeuronModel m = preset(r.name);
    const BifPoint& p = nearest(find_bt(m), r.V);
    NormalForm nf = normal_form_coeffs(m, p);
    NeuronModel mm = at_point(m, p);
    VectorXd s = mm.steady_state(p.V);
    BTEigvectors v = bt_eigvectors(mm.jacobian(s));
    double d2 = di_infty(mm, p.V, 2);
    double ratio = nf.alpha2 / (v.p1[0] * v.q0[0] * v.q0[0] * d2);
    CHECK(ratio == doctest::Approx(0.5).epsilon(1e-6));
    ratios[k++] = ratio;
  }
  // the same constant for every model
  CHECK(std::abs(ratios[0] - ratios[1]) <= 1e-4 * std::abs(ratios[0]));
  CHECK(std::abs(ratios[0] - ratios[2]) <= 1e-4 * std::abs(ratios[0]));
}

TEST_CASE("normal form: beta2 is invariant under kernel shifts of h20") {
  struct Ref {
    const char* name;
    double V;
  };
  for (const Ref& r : {Ref{"wang-buzsaki", -59.698}, Ref{"stiefel", -59.934},
                       Ref{"rtm", -63.739}}) {
    NeuronModel m = preset(r.name);
    const BifPoint& p = nearest(find_bt(m), r.V);
    NormalForm nf = normal_form_coeffs(m, p);
    NeuronModel mm = at_point(m, p);
    VectorXd s = mm.steady_state(p.V);
    BTEigvectors v = bt_eigvectors(mm.jacobian(s));
    auto H = mm.hessians(s);
    double base = v.p1.dot(bilinear(H, v.q0, v.q1));
    CHECK(base - v.p1.dot(nf.h20) == doctest::Approx(nf.beta2).epsilon(1e-10));
    for (double c : {-1.0, 1.0, 10.0}) {
      double shifted = base - v.p1.dot(nf.h20 + c * v.q0);
      CHECK(std::abs(shifted - nf.beta2) <= 1e-8);
    }
  }
}

TEST_CASE("branch: Hopf detection on the high-conductance branch") {
  NeuronModel m = preset("wang-buzsaki").with_gm(3.0);
  std::vector<double> grid;
  for (double v = -75.0; v <= -40.0 + 1e-12; v += 0.05) grid.push_back(v);
  auto pts = branch(m, grid);
  REQUIRE(!pts.empty());
  int dim = static_cast<int>(m.dim());
  const BranchPoint* hopf = nullptr;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) CHECK(pts[i].V > pts[i - 1].V);
    CHECK(pts[i].eigenvalues.size() == dim);
    if (pts[i].hopf) {
      REQUIRE(hopf == nullptr);
      hopf = &pts[i];
    }
  }
  REQUIRE(hopf != nullptr);
  CHECK(hopf->V == doctest::Approx(-58.6905).epsilon(1e-4));
  CHECK(hopf->i_app == doctest::Approx(1.1416462).epsilon(1e-4));
  CHECK(hopf->hopf_omega == doctest::Approx(0.0304636).epsilon(1e-3));
  CHECK(std::abs(hopf->i_app - 1.1416) <= 0.01);
}

TEST_CASE("branch: limit points on the uninhibited branch") {
  NeuronModel m = preset("wang-buzsaki");
  std::vector<double> grid;
  for (double v = -80.0; v <= -30.0 + 1e-12; v += 0.1) grid.push_back(v);
  auto pts = branch(m, grid);
  std::vector<const BranchPoint*> lps;
  for (const auto& p : pts)
    if (p.lp) lps.push_back(&p);
  REQUIRE(lps.size() == 2);
  CHECK(lps[0]->i_app == doctest::Approx(0.16008633).epsilon(1e-4));
  CHECK(lps[0]->V == doctest::Approx(-59.9658).epsilon(1e-3));
  CHECK(lps[1]->i_app == doctest::Approx(-6.5790008).epsilon(1e-4));
  CHECK(lps[1]->V == doctest::Approx(-41.1135).epsilon(1e-3));
  CHECK(std::abs(lps[0]->i_app - 0.16) <= 0.01);
  for (const auto* lp : lps)
    CHECK(std::abs(di_infty(m, lp->V, 1)) <= 1e-6);
}

TEST_CASE("branch: a monotone current balance produces no events") {
  NeuronModel m = model_from_json_text(kPureLeakJson);
  std::vector<double> grid;
  for (double v = -70.0; v <= -40.0 + 1e-12; v += 0.5) grid.push_back(v);
  auto pts = branch(m, grid);
  CHECK(pts.size() == grid.size());
  for (const auto& p : pts) {
    CHECK(!p.lp);
    CHECK(!p.hopf);
    CHECK(p.stability == Stability::Stable);
    CHECK(p.eigenvalues.size() == 1);
  }
}

TEST_CASE("fold_curve: reproduces fold and cusp loci") {
  NeuronModel m = preset("wang-buzsaki");
  std::vector<double> grid;
  for (double v = -70.0; v <= -45.0 + 1e-12; v += 0.25) grid.push_back(v);
  grid.push_back(-59.69779393);
  grid.push_back(-51.55311905);
  std::sort(grid.begin(), grid.end());
  auto pts = fold_curve(m, grid);
  REQUIRE(!pts.empty());
  const FoldPoint* bt = nullptr;
  const FoldPoint* cp = nullptr;
  for (const auto& p : pts) {
    if (std::abs(p.V - (-59.69779393)) < 1e-9) bt = &p;
    if (std::abs(p.V - (-51.55311905)) < 1e-9) cp = &p;
    NeuronModel mm = m.with_gm(p.g_m).with_iapp(p.i_app);
    CHECK(std::abs(di_infty(mm, p.V, 1)) <= 1e-8);
    CHECK(std::abs(i_infty(mm, p.V)) <= 1e-8);
  }
  REQUIRE(bt != nullptr);
  REQUIRE(cp != nullptr);
  CHECK(bt->g_m == doctest::Approx(0.145523736).epsilon(1e-6));
  CHECK(bt->i_app == doctest::Approx(0.2000385456).epsilon(1e-6));
  CHECK(cp->g_m == doctest::Approx(2.331601496).epsilon(1e-6));
  CHECK(cp->i_app == doctest::Approx(1.238213623).epsilon(1e-6));
}

TEST_CASE("fold_curve: constant activation gives a constant conductance ratio") {
  NeuronModel m = model_from_json_text(kConstHalfWJson);
  std::vector<double> grid;
  for (double v = -75.0; v <= -25.0 + 1e-12; v += 1.0) grid.push_back(v);
  auto pts = fold_curve(m, grid);
  CHECK(pts.size() == grid.size());
  for (const auto& p : pts)
    CHECK(p.g_m == doctest::Approx(-m.g_leak / 0.5).epsilon(1e-12));
}

TEST_CASE("fold_curve: skips voltages where the fold coefficient vanishes") {
  NeuronModel m = model_from_json_text(kZeroWJson);
  std::vector<double> grid = {-70.0, -60.0, -50.0};
  CHECK(fold_curve(m, grid).empty());
}

TEST_CASE("find_bt: saturated activation leaves the scalar system without roots") {
  NeuronModel m = model_from_json_text(kSaturatedWJson);
  CHECK_THROWS_AS(find_bt(m), NoRoot);
}

TEST_CASE("find_cusp: disagreeing dual formulas are rejected with a diagnostic") {
  NeuronModel m = model_from_json_text(kMOnlyJson);
  std::vector<std::string> warnings;
  CHECK_THROWS_AS(find_cusp(m, &warnings), InconsistentGM);
  CHECK(!warnings.empty());
}

TEST_CASE("BT and CP loci approach each other as leak conductance grows") {
  struct Ref {
    const char* name;
    double gl_star, v_btc;
  };
  for (const Ref& r : {Ref{"wang-buzsaki", 0.750366518, -46.71291095},
                       Ref{"stiefel", 0.3806994405, -43.26553478},
                       Ref{"rtm", 13.78180356, -49.93042086}}) {
    NeuronModel m0 = preset(r.name);

    auto gap_at = [&](double gl, double* v_dist) {
      NeuronModel m = m0.with_gl(gl);
      auto bts = find_bt(m);
      auto cps = find_cusp(m);
      const BifPoint& cp = nearest(cps, r.v_btc);
      double best = 1e300;
      double bt_v = 0.0;
      for (const auto& p : bts) {
        double g = std::abs(p.g_m - cp.g_m);
        if (g < best) {
          best = g;
          bt_v = p.V;
        }
      }
      if (v_dist) *v_dist = std::abs(bt_v - cp.V);
      return best;
    };

    // conductance gap, sampled from the common reference leak value
    double lo = 0.1;
    double prev = 1e300;
    for (int k = 0; k < 10; ++k) {
      double gl = lo + 0.98 * (r.gl_star - lo) * k / 9.0;
      double gap = gap_at(gl, nullptr);
      CHECK(gap < prev);
      prev = gap;
    }

    // voltage separation, sampled from the preset's own leak value
    prev = 1e300;
    for (int k = 0; k < 10; ++k) {
      double gl = m0.g_leak + 0.98 * (r.gl_star - m0.g_leak) * k / 9.0;
      double vd = 0.0;
      gap_at(gl, &vd);
      CHECK(vd < prev);
      prev = vd;
    }
  }
}

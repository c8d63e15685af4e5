// Integrator, spike-detection, and excitability-protocol tests.  Oracles are
// closed-form solutions where possible; model-based values are frozen from
// high-accuracy runs and asserted with deterministic settings.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <neurobt/dynamics.hpp>
#include <neurobt/steady_state.hpp>

using namespace neurobt;

namespace {

constexpr double kPi = 3.14159265358979323846;

Trace synthetic_trace(double t_end, double dt,
                      const std::function<double(double)>& v_of_t) {
  Trace tr;
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    tr.t.push_back(t);
    Eigen::VectorXd y(1);
    y << v_of_t(t);
    tr.y.push_back(y);
  }
  tr.steps = tr.t.size();
  return tr;
}

}  // namespace

TEST_CASE("rk45 matches closed-form exponential decay") {
  // y' = -0.1 (y + 60), y(0) = -50  =>  y(t) = -60 + 10 exp(-0.1 t)
  RhsFn f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = -0.1 * (y[0] + 60.0);
  };
  Eigen::VectorXd y0(1);
  y0 << -50.0;
  IntegrateOptions opts;
  Trace tr = integrate_rhs(f, y0, 100.0, opts);

  REQUIRE(tr.t.size() == tr.y.size());
  REQUIRE(tr.t.size() >= 2);
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.t.back() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(tr.steps > 0);
  for (std::size_t i = 1; i < tr.t.size(); ++i) CHECK(tr.t[i] > tr.t[i - 1]);

  // sample grid is 0, dt, 2 dt, ..., t_end
  CHECK(tr.t.size() == 2001);
  CHECK(tr.t[1] == doctest::Approx(opts.sample_dt).epsilon(1e-12));

  double worst = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    double exact = -60.0 + 10.0 * std::exp(-0.1 * tr.t[i]);
    worst = std::max(worst, std::abs(tr.y[i][0] - exact));
    CHECK(std::isfinite(tr.y[i][0]));
  }
  CHECK(worst <= 1e-6);  // measured ~3.4e-8 incl. dense output between steps
}

TEST_CASE("rk4 fixed-step matches closed-form exponential decay") {
  RhsFn f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = -0.1 * (y[0] + 60.0);
  };
  Eigen::VectorXd y0(1);
  y0 << -50.0;
  IntegrateOptions opts;
  opts.method = Method::RK4;
  opts.fixed_step = 0.01;
  Trace tr = integrate_rhs(f, y0, 100.0, opts);
  CHECK(tr.rejected == 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    double exact = -60.0 + 10.0 * std::exp(-0.1 * tr.t[i]);
    worst = std::max(worst, std::abs(tr.y[i][0] - exact));
  }
  CHECK(worst <= 1e-9);  // measured ~2e-13
}

TEST_CASE("perturbed rest relaxes back to the computed equilibrium") {
  NeuronModel m = preset("wang-buzsaki").with_iapp(0.1);
  auto eqs = find_equilibria(m);
  REQUIRE(!eqs.empty());
  REQUIRE(eqs.front().stability == Stability::Stable);
  Eigen::VectorXd eq = eqs.front().state;

  Eigen::VectorXd y0 = eq;
  y0[0] += 0.1;  // 0.1 mV kick; slowest eigenvalue ~ -0.006 / ms
  IntegrateOptions opts;
  Trace tr = integrate(m, y0, 500.0, opts);
  double dmax = (tr.y.back() - eq).cwiseAbs().maxCoeff();
  CHECK(dmax <= 1e-6);  // measured 6.7e-7 at t = 500 ms
}

TEST_CASE("rest_state agrees with find_equilibria") {
  NeuronModel m = preset("wang-buzsaki").with_iapp(0.1);
  Eigen::VectorXd r = rest_state(m);
  auto eqs = find_equilibria(m);
  REQUIRE(!eqs.empty());
  CHECK((r - eqs.front().state).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("sustained periodic firing above threshold") {
  // step from the I=0 rest into the firing regime
  NeuronModel m = preset("wang-buzsaki").with_gm(3.0);
  Eigen::VectorXd y0 = rest_state(m.with_iapp(0.0));
  IntegrateOptions opts;
  Trace tr = integrate(m.with_iapp(1.2), y0, 6000.0, opts);
  std::vector<double> spikes = detect_spikes(tr);
  CHECK(spikes.size() >= 10);  // ~1.9 Hz with the slow adaptation current

  // post-transient inter-spike intervals are nearly identical (periodic orbit)
  std::vector<double> late;
  for (double s : spikes)
    if (s > 2000.0) late.push_back(s);
  REQUIRE(late.size() >= 4);
  std::vector<double> isi;
  for (std::size_t i = 1; i < late.size(); ++i) isi.push_back(late[i] - late[i - 1]);
  double mean = 0.0;
  for (double v : isi) mean += v;
  mean /= isi.size();
  double var = 0.0;
  for (double v : isi) var += (v - mean) * (v - mean);
  double cv = std::sqrt(var / isi.size()) / mean;
  CHECK(cv < 0.01);
  CHECK(firing_frequency(tr) == doctest::Approx(1.915).epsilon(0.03));
}

TEST_CASE("detect_spikes finds threshold upcrossings of a sinusoid") {
  Trace tr = synthetic_trace(500.0, 0.05, [](double t) {
    return 20.0 + 40.0 * std::sin(2.0 * kPi * t / 50.0);
  });
  std::vector<double> spikes = detect_spikes(tr, 0.0, 0, 1.0);
  REQUIRE(spikes.size() == 10);
  // upcrossing of sin(theta) = -0.5 at theta = -pi/6 (mod 2 pi)
  double first = 50.0 * (1.0 - 1.0 / 12.0);
  CHECK(spikes.front() == doctest::Approx(first).epsilon(1e-4));
  for (std::size_t i = 1; i < spikes.size(); ++i)
    CHECK(spikes[i] - spikes[i - 1] == doctest::Approx(50.0).epsilon(2e-4));
}

TEST_CASE("refractory window merges double crossings") {
  // two upcrossings 0.4 ms apart, then a third 10 ms later
  std::vector<double> vs = {-1, 1, -1, 1, -1};
  std::vector<double> ts = {0.0, 0.2, 0.4, 0.6, 0.8};
  Trace tr;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tr.t.push_back(ts[i]);
    Eigen::VectorXd y(1);
    y << vs[i];
    tr.y.push_back(y);
  }
  tr.t.push_back(10.0);
  {
    Eigen::VectorXd y(1);
    y << 1.0;
    tr.y.push_back(y);
  }
  CHECK(detect_spikes(tr, 0.0, 0, 1.0).size() == 2);  // merged + late
  CHECK(detect_spikes(tr, 0.0, 0, 0.0).size() == 3);  // no merging
}

TEST_CASE("firing_frequency from mean post-transient ISI") {
  Trace tr = synthetic_trace(1000.0, 0.05, [](double t) {
    return 20.0 + 40.0 * std::sin(2.0 * kPi * t / 25.0);
  });
  CHECK(firing_frequency(tr) == doctest::Approx(40.0).epsilon(1e-3));

  Trace flat = synthetic_trace(1000.0, 0.05, [](double) { return -60.0; });
  CHECK(firing_frequency(flat) == 0.0);

  // a single spike in the measurement window gives no rate
  Trace one = synthetic_trace(1000.0, 0.05, [](double t) {
    return (t > 700.0 && t < 705.0) ? 30.0 : -60.0;
  });
  CHECK(firing_frequency(one) == 0.0);
}

TEST_CASE("arbitrarily slow firing just above a fold onset") {
  NeuronModel m = preset("wang-buzsaki").with_gm(0.0);
  Eigen::VectorXd y0 = rest_state(m.with_iapp(0.15));
  IntegrateOptions opts;
  Trace tr = integrate(m.with_iapp(0.161), y0, 3000.0, opts);
  double f = firing_frequency(tr);
  CHECK(f > 0.5);
  CHECK(f < 5.0);  // measured ~1.18 Hz just past the fold at I ~ 0.1601
}

TEST_CASE("fi_curve: continuous onset, no hysteresis") {
  NeuronModel m = preset("wang-buzsaki").with_gm(0.0);
  FIProtocol proto;
  proto.t_per_point = 3000.0;
  std::vector<double> grid = {0.15, 0.158, 0.1605, 0.162, 0.17};
  FICurve fi = fi_curve(m, grid, proto);

  REQUIRE(fi.up.size() == grid.size());
  REQUIRE(fi.down.size() == grid.size());
  CHECK(!fi.up[0].fired);
  CHECK(!fi.up[1].fired);
  CHECK(!fi.up[2].fired);
  CHECK(fi.up[3].fired);
  CHECK(fi.onset_current == doctest::Approx(0.162).epsilon(1e-12));
  CHECK(fi.onset_frequency == doctest::Approx(1.71292).epsilon(2e-3));
  // down sweep dies at the same grid point: empty coexistence window
  CHECK(fi.down_onset_current == doctest::Approx(0.162).epsilon(1e-12));
  CHECK(fi.excitability == ExcitabilityClass::I);
}

TEST_CASE("fi_curve: coexistence window forces a discontinuous onset") {
  NeuronModel m = preset("stiefel").with_gm(0.6);
  FIProtocol proto;
  proto.t_per_point = 3000.0;
  std::vector<double> grid = {0.15, 0.165, 0.18, 0.195, 0.21};
  FICurve fi = fi_curve(m, grid, proto);

  CHECK(fi.onset_current == doctest::Approx(0.195).epsilon(1e-12));
  CHECK(fi.onset_frequency == doctest::Approx(4.60155).epsilon(2e-3));
  // firing persists on the way down well below the upward onset
  CHECK(fi.down_onset_current == doctest::Approx(0.15).epsilon(1e-12));
  for (const FIPoint& p : fi.down) CHECK(p.fired);
  CHECK(fi.excitability == ExcitabilityClass::II);  // via hysteresis, f < 5
}

TEST_CASE("firing rate is insensitive to integrator tolerances") {
  NeuronModel m = preset("wang-buzsaki").with_gm(0.0).with_iapp(0.17);
  Eigen::VectorXd y0 = rest_state(preset("wang-buzsaki").with_gm(0.0).with_iapp(0.15));
  IntegrateOptions base;
  IntegrateOptions tight = base;
  tight.atol = 5e-9;
  tight.rtol = 5e-7;
  IntegrateOptions loose = base;
  loose.atol = 1e-7;
  loose.rtol = 1e-5;
  IntegrateOptions rk4 = base;
  rk4.method = Method::RK4;
  rk4.fixed_step = 0.01;

  double f0 = firing_frequency(integrate(m, y0, 3000.0, base));
  double f1 = firing_frequency(integrate(m, y0, 3000.0, tight));
  double f2 = firing_frequency(integrate(m, y0, 3000.0, loose));
  double f3 = firing_frequency(integrate(m, y0, 3000.0, rk4));
  CHECK(f0 == doctest::Approx(4.0292).epsilon(1e-3));
  CHECK(std::abs(f1 - f0) / f0 < 1e-5);  // measured 5e-8
  CHECK(std::abs(f2 - f0) / f0 < 1e-4);  // measured 7.5e-7
  CHECK(std::abs(f3 - f0) / f0 < 1e-5);  // measured 7e-8
}

TEST_CASE("f_gm_curve: rate falls as the slow conductance grows") {
  NeuronModel m = preset("wang-buzsaki");
  FIProtocol proto;
  proto.t_per_point = 3000.0;
  std::vector<double> gm = {0.0, 0.75, 3.0, 5.0};
  FGMCurve c = f_gm_curve(m, 1.2, gm, proto, 1);
  REQUIRE(c.points.size() == 4);
  CHECK(c.points[0].freq == doctest::Approx(69.1).epsilon(0.02));
  CHECK(c.points[1].freq == doctest::Approx(3.26).epsilon(0.05));
  CHECK(c.points[2].freq == doctest::Approx(1.91).epsilon(0.05));
  CHECK(!c.points[3].fired);  // suppressed entirely
  CHECK(c.monotone_decreasing);

  FGMCurve c2 = f_gm_curve(m, 1.2, gm, proto, 2);  // threaded path, same result
  for (std::size_t i = 0; i < gm.size(); ++i) {
    CHECK(c2.points[i].freq == c.points[i].freq);
    CHECK(c2.points[i].fired == c.points[i].fired);
  }
}

TEST_CASE("step-size underflow on finite-time blowup") {
  RhsFn f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = y[0] * y[0];  // y(t) = 1/(1-t), blows up at t = 1
  };
  Eigen::VectorXd y0(1);
  y0 << 1.0;
  IntegrateOptions opts;
  CHECK_THROWS_AS(integrate_rhs(f, y0, 2.0, opts), StepSizeUnderflow);
}

TEST_CASE("option and input validation") {
  NeuronModel m = preset("wang-buzsaki");
  Eigen::VectorXd y0 = rest_state(m);
  IntegrateOptions opts;
  CHECK_THROWS_AS(integrate(m, y0, -1.0, opts), ConfigError);
  {
    IntegrateOptions bad = opts;
    bad.sample_dt = 0.0;
    CHECK_THROWS_AS(integrate(m, y0, 10.0, bad), ConfigError);
  }
  {
    IntegrateOptions bad = opts;
    bad.atol = 0.0;
    CHECK_THROWS_AS(integrate(m, y0, 10.0, bad), ConfigError);
  }
  {
    IntegrateOptions bad = opts;
    bad.method = Method::RK4;
    bad.fixed_step = -0.5;
    CHECK_THROWS_AS(integrate(m, y0, 10.0, bad), ConfigError);
  }
  {
    Eigen::VectorXd short_y(2);
    short_y << -60.0, 0.1;
    CHECK_THROWS_AS(integrate(m, short_y, 10.0, opts), ConfigError);
  }
  {
    Eigen::VectorXd nan_y = y0;
    nan_y[0] = std::nan("");
    CHECK_THROWS_AS(integrate(m, nan_y, 10.0, opts), ConfigError);
  }
  FIProtocol proto;
  CHECK_THROWS_AS(fi_curve(m, {}, proto), ConfigError);
  CHECK_THROWS_AS(fi_curve(m, {0.2, 0.1}, proto), ConfigError);
}

TEST_CASE("trace csv format") {
  Trace tr = synthetic_trace(0.1, 0.05, [](double t) { return t; });
  std::ostringstream os;
  write_trace_csv(tr, os, {"V"});
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "t,V");
  REQUIRE(std::getline(is, line));
  CHECK(line == "0,0");
  REQUIRE(std::getline(is, line));
  // full-precision output: 0.05 is not exactly representable
  CHECK(line.substr(0, line.find(',')) == "0.050000000000000003");

  std::ostringstream os2;
  write_trace_csv(tr, os2);
  std::istringstream is2(os2.str());
  REQUIRE(std::getline(is2, line));
  CHECK(line == "t,s0");
}

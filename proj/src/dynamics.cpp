#include <neurobt/dynamics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace neurobt {

namespace {

constexpr double kMinStep = 1e-10;

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                 a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// fifth-order minus embedded fourth-order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

std::vector<double> sample_times(double t_end, double dt) {
  std::vector<double> ts;
  long n = static_cast<long>(std::floor(t_end / dt + 1e-9));
  ts.reserve(static_cast<size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) ts.push_back(static_cast<double>(k) * dt);
  if (t_end - ts.back() > 1e-9 * std::max(1.0, t_end)) ts.push_back(t_end);
  return ts;
}

void check_opts(double t_end, const IntegrateOptions& opts) {
  if (!(t_end > 0)) throw ConfigError("integrate.t_end", "must be positive");
  if (!(opts.sample_dt > 0))
    throw ConfigError("integrate.sample_dt", "must be positive");
  if (!(opts.max_step > 0))
    throw ConfigError("integrate.max_step", "must be positive");
  if (!(opts.fixed_step > 0))
    throw ConfigError("integrate.fixed_step", "must be positive");
  if (!(opts.atol > 0) || !(opts.rtol > 0))
    throw ConfigError("integrate.tolerances", "must be positive");
}

Trace run_rk45(const RhsFn& f, const Eigen::VectorXd& init, double t_end,
               const IntegrateOptions& opts) {
  const Eigen::Index n = init.size();
  Trace tr;
  std::vector<double> ts = sample_times(t_end, opts.sample_dt);
  tr.t.reserve(ts.size());
  tr.y.reserve(ts.size());

  Eigen::VectorXd y = init;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      y1(n), err(n);
  double t = 0.0;
  f(t, y, k1);

  size_t next = 0;
  tr.t.push_back(ts[next]);
  tr.y.push_back(y);
  ++next;

  double h = std::min({opts.max_step, t_end, 1e-2});
  double err_prev = 1.0;

  while (t < t_end) {
    h = std::min({h, opts.max_step, t_end - t});
    if (h < kMinStep)
      throw StepSizeUnderflow("integration step collapsed at t=" +
                              std::to_string(t) + " ms");

    ytmp = y + h * (a21 * k1);
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t + h, y1, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!y1.allFinite() || !err.allFinite()) {
      ++tr.rejected;
      h *= 0.2;
      continue;
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc = opts.atol +
                  opts.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      double q = err[i] / sc;
      sum += q * q;
    }
    double enorm = std::sqrt(sum / static_cast<double>(n));

    if (enorm > 1.0) {
      ++tr.rejected;
      h *= std::max(0.2, 0.9 * std::pow(enorm, -0.2));
      continue;
    }

    // accepted: dense output over (t, t+h]
    if (next < ts.size() && ts[next] <= t + h + 1e-12) {
      Eigen::VectorXd ydiff = y1 - y;
      Eigen::VectorXd bspl = h * k1 - ydiff;
      Eigen::VectorXd r4 = ydiff - h * k7 - bspl;
      Eigen::VectorXd r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 +
                                d6 * k6 + d7 * k7);
      while (next < ts.size() && ts[next] <= t + h + 1e-12) {
        double th = std::clamp((ts[next] - t) / h, 0.0, 1.0);
        tr.t.push_back(ts[next]);
        tr.y.push_back(y + th * (ydiff + (1.0 - th) *
                                             (bspl + th * (r4 + (1.0 - th) * r5))));
        ++next;
      }
    }

    t += h;
    y = y1;
    k1 = k7;  // first-same-as-last
    ++tr.steps;
    double fac = (enorm < 1e-30)
                     ? 5.0
                     : 0.9 * std::pow(enorm, -0.17) * std::pow(err_prev, 0.04);
    h *= std::clamp(fac, 0.2, 5.0);
    err_prev = std::max(enorm, 1e-4);
  }

  // numerical drift guard: emit any sample the loop left behind
  while (next < ts.size()) {
    tr.t.push_back(ts[next]);
    tr.y.push_back(y);
    ++next;
  }
  return tr;
}

Trace run_rk4(const RhsFn& f, const Eigen::VectorXd& init, double t_end,
              const IntegrateOptions& opts) {
  const Eigen::Index n = init.size();
  Trace tr;
  std::vector<double> ts = sample_times(t_end, opts.sample_dt);
  tr.t.reserve(ts.size());
  tr.y.reserve(ts.size());

  Eigen::VectorXd y = init;
  Eigen::VectorXd f0(n), k2(n), k3(n), k4(n), f1(n), ytmp(n), y1(n);
  double t = 0.0;
  f(t, y, f0);

  size_t next = 0;
  tr.t.push_back(ts[next]);
  tr.y.push_back(y);
  ++next;

  while (t < t_end - 1e-12) {
    double h = std::min(opts.fixed_step, t_end - t);
    ytmp = y + (0.5 * h) * f0;
    f(t + 0.5 * h, ytmp, k2);
    ytmp = y + (0.5 * h) * k2;
    f(t + 0.5 * h, ytmp, k3);
    ytmp = y + h * k3;
    f(t + h, ytmp, k4);
    y1 = y + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y1.allFinite())
      throw StepSizeUnderflow("state diverged at t=" + std::to_string(t) +
                              " ms (fixed-step mode)");
    f(t + h, y1, f1);

    while (next < ts.size() && ts[next] <= t + h + 1e-12) {
      double th = std::clamp((ts[next] - t) / h, 0.0, 1.0);
      double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
      double h10 = th * (1.0 - th) * (1.0 - th);
      double h01 = th * th * (3.0 - 2.0 * th);
      double h11 = th * th * (th - 1.0);
      tr.t.push_back(ts[next]);
      tr.y.push_back(h00 * y + h10 * h * f0 + h01 * y1 + h11 * h * f1);
      ++next;
    }

    t += h;
    y = y1;
    f0 = f1;
    ++tr.steps;
  }
  while (next < ts.size()) {
    tr.t.push_back(ts[next]);
    tr.y.push_back(y);
    ++next;
  }
  return tr;
}

}  // namespace

Trace integrate_rhs(const RhsFn& f, const Eigen::VectorXd& init, double t_end,
                    const IntegrateOptions& opts) {
  check_opts(t_end, opts);
  if (!init.allFinite())
    throw ConfigError("integrate.init", "initial state must be finite");
  return opts.method == Method::RK4 ? run_rk4(f, init, t_end, opts)
                                    : run_rk45(f, init, t_end, opts);
}

Trace integrate(const NeuronModel& m, const Eigen::VectorXd& init, double t_end,
                const IntegrateOptions& opts) {
  if (init.size() != m.dim())
    throw ConfigError("integrate.init", "state dimension mismatch");
  auto f = [&m](double, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) {
    m.rhs_into(y.data(), dydt.data());
  };
  return integrate_rhs(f, init, t_end, opts);
}

std::vector<double> detect_spikes(const Trace& tr, double threshold,
                                  int v_index, double refractory_ms) {
  std::vector<double> spikes;
  for (size_t i = 1; i < tr.t.size(); ++i) {
    double prev = tr.y[i - 1][v_index];
    double cur = tr.y[i][v_index];
    if (!(prev < threshold) || !(cur >= threshold)) continue;
    double tc = tr.t[i - 1] +
                (threshold - prev) / (cur - prev) * (tr.t[i] - tr.t[i - 1]);
    if (spikes.empty() || tc - spikes.back() >= refractory_ms)
      spikes.push_back(tc);
  }
  return spikes;
}

double firing_frequency(const Trace& tr, double threshold, int v_index) {
  if (tr.t.size() < 2) return 0.0;
  std::vector<double> spikes = detect_spikes(tr, threshold, v_index);
  double t_cut = 0.5 * tr.t.back();
  std::vector<double> late;
  for (double s : spikes)
    if (s >= t_cut) late.push_back(s);
  if (late.size() < 2) return 0.0;
  double mean_isi = (late.back() - late.front()) /
                    static_cast<double>(late.size() - 1);
  return 1000.0 / mean_isi;
}

const char* to_string(ExcitabilityClass c) {
  switch (c) {
    case ExcitabilityClass::I: return "I";
    case ExcitabilityClass::II: return "II";
    default: return "undetermined";
  }
}

Eigen::VectorXd rest_state(const NeuronModel& m) {
  try {
    std::vector<Equilibrium> eqs = find_equilibria(m);
    const Equilibrium* best = nullptr;
    for (const auto& e : eqs)
      if (e.stability == Stability::Stable && (!best || e.V < best->V))
        best = &e;
    if (!best)
      for (const auto& e : eqs)
        if (!best || e.V < best->V) best = &e;
    if (best) return best->state;
  } catch (const NumericalError&) {
    // fall through to the relaxed mid-window state
  }
  return m.steady_state(0.5 * (m.window_lo + m.window_hi));
}

FICurve fi_curve(const NeuronModel& m, const std::vector<double>& i_grid,
                 const FIProtocol& proto) {
  if (i_grid.empty()) throw ConfigError("fi.grid", "must not be empty");
  if (!std::is_sorted(i_grid.begin(), i_grid.end()))
    throw ConfigError("fi.grid", "must be ascending");
  FICurve out;
  Eigen::VectorXd state = rest_state(m.with_iapp(i_grid.front()));
  for (double i_app : i_grid) {
    Trace tr = integrate(m.with_iapp(i_app), state, proto.t_per_point,
                         proto.integ);
    state = tr.y.back();
    double freq = firing_frequency(tr);
    out.up.push_back({i_app, freq, freq > 0.0});
  }
  for (auto it = i_grid.rbegin(); it != i_grid.rend(); ++it) {
    Trace tr = integrate(m.with_iapp(*it), state, proto.t_per_point,
                         proto.integ);
    state = tr.y.back();
    double freq = firing_frequency(tr);
    out.down.push_back({*it, freq, freq > 0.0});
  }
  for (const FIPoint& p : out.up)
    if (p.fired) {
      out.onset_current = p.i_app;
      out.onset_frequency = p.freq;
      break;
    }
  for (const FIPoint& p : out.down)
    if (p.fired) out.down_onset_current = p.i_app;  // descending: last wins
  // continuous onset (arbitrarily slow firing, no coexistence window) versus
  // discontinuous onset (a firing state that persists below the resting
  // state's loss of stability, or a nonzero frequency jump at onset)
  if (std::isfinite(out.onset_frequency)) {
    bool hysteresis = std::isfinite(out.down_onset_current) &&
                      out.down_onset_current < out.onset_current - 1e-12;
    if (hysteresis || out.onset_frequency >= 5.0)
      out.excitability = ExcitabilityClass::II;
    else
      out.excitability = ExcitabilityClass::I;
  }
  return out;
}

FGMCurve f_gm_curve(const NeuronModel& m, double i_fixed,
                    const std::vector<double>& gm_grid,
                    const FIProtocol& proto, int threads) {
  FGMCurve out;
  out.points.resize(gm_grid.size());
  int nthreads = std::clamp(threads, 1, static_cast<int>(gm_grid.size()));
  auto work = [&](size_t idx) {
    double gm = gm_grid[idx];
    Eigen::VectorXd init = rest_state(m.with_gm(gm).with_iapp(0.0));
    Trace tr = integrate(m.with_gm(gm).with_iapp(i_fixed), init,
                         proto.t_per_point, proto.integ);
    double freq = firing_frequency(tr);
    out.points[idx] = {gm, freq, freq > 0.0};
  };
  if (nthreads <= 1) {
    for (size_t i = 0; i < gm_grid.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (size_t i = static_cast<size_t>(w); i < gm_grid.size();
               i += static_cast<size_t>(nthreads))
            work(i);
        } catch (...) {
          errs[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  out.monotone_decreasing = true;
  const FGMPoint* prev = nullptr;
  for (const FGMPoint& p : out.points) {
    if (!p.fired) continue;
    if (prev && !(p.freq < prev->freq)) out.monotone_decreasing = false;
    prev = &p;
  }
  return out;
}

void write_trace_csv(const Trace& tr, std::ostream& os,
                     const std::vector<std::string>& columns) {
  Eigen::Index n = tr.y.empty() ? 0 : tr.y[0].size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < static_cast<Eigen::Index>(columns.size()))
      os << "," << columns[static_cast<size_t>(i)];
    else
      os << ",s" << i;
  }
  os << "\n";
  char buf[32];
  for (size_t r = 0; r < tr.t.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", tr.t[r]);
    os << buf;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", tr.y[r][i]);
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace neurobt

#include <neurobt/coupling.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <random>
#include <thread>

namespace neurobt {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double wrap_phase(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0) phi += kTwoPi;
  return phi;
}

// distance on the circle, in [0, pi]
double circ_dist(double a, double b) {
  double d = std::abs(wrap_phase(a) - wrap_phase(b));
  return std::min(d, kTwoPi - d);
}

double circ_mean(const std::vector<double>& phis) {
  double s = 0, c = 0;
  for (double p : phis) {
    s += std::sin(p);
    c += std::cos(p);
  }
  return wrap_phase(std::atan2(s, c));
}

}  // namespace

SynapseSpec synapse_preset(std::string_view name) {
  SynapseSpec s;
  s.name = std::string(name);
  if (name == "ex1-exc" || name == "ex1-inh") {
    s.a_e0 = 6.25;
    s.tau_s = 5.0;
    s.a_e = Expr::parse("1/(1+exp(-V/2))");
    s.v_syn = (name == "ex1-exc") ? 0.0 : -75.0;
  } else if (name == "ex2-exc" || name == "ex2-inh") {
    s.a_e0 = 4.0;
    s.tau_s = 8.0;
    s.a_e = Expr::parse("1/(1+exp(-V/5))");
    s.v_syn = (name == "ex2-exc") ? 0.0 : -80.0;
  } else if (name == "ex3-exc") {
    s.a_e0 = 5.0;
    s.tau_s = 2.0;
    s.a_e = Expr::parse("1+tanh(V/4)");
    s.v_syn = 0.0;
  } else if (name == "ex3-inh") {
    s.a_e0 = 2.0;
    s.tau_s = 10.0;
    s.a_e = Expr::parse("1+tanh(V/4)");
    s.v_syn = -80.0;
  } else {
    throw ConfigError("synapse", "unknown preset '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> synapse_preset_names() {
  return {"ex1-exc", "ex1-inh", "ex2-exc", "ex2-inh", "ex3-exc", "ex3-inh"};
}

CoupledPair::CoupledPair(const NeuronModel& m, const SynapseSpec& syn)
    : m_(m), syn_(syn), d_(m.dim()) {
  if (!m_.finalized()) m_.finalize();
  if (syn_.tau_s <= 0) throw ConfigError("synapse.tau_s", "must be positive");
  if (!(syn_.g_syn >= 0)) throw ConfigError("synapse.g_syn", "must be non-negative");
}

RhsFn CoupledPair::rhs() const {
  NeuronModel m = m_;
  SynapseSpec syn = syn_;
  const int d = d_;
  const double inv_c = 1.0 / m.capacitance;
  return [m, syn, d, inv_c](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const double* p = y.data();
    double* q = dy.data();
    m.rhs_into(p, q);              // neuron 1 intrinsic
    m.rhs_into(p + d + 1, q + d + 1);  // neuron 2 intrinsic
    const double v1 = p[0], s1 = p[d];
    const double v2 = p[d + 1], s2 = p[2 * d + 1];
    q[0] -= inv_c * syn.g_syn * s2 * (v1 - syn.v_syn);
    q[d + 1] -= inv_c * syn.g_syn * s1 * (v2 - syn.v_syn);
    q[d] = syn.a_e0 * syn.a_e(v1) * (1.0 - s1) - s1 / syn.tau_s;
    q[2 * d + 1] = syn.a_e0 * syn.a_e(v2) * (1.0 - s2) - s2 / syn.tau_s;
  };
}

Eigen::VectorXd CoupledPair::initial_state(double v1, double v2) const {
  Eigen::VectorXd y(dim());
  y.segment(0, d_) = m_.steady_state(v1);
  y[d_] = 0.0;
  y.segment(d_ + 1, d_) = m_.steady_state(v2);
  y[2 * d_ + 1] = 0.0;
  return y;
}

Trace CoupledPair::simulate(const Eigen::VectorXd& init, double t_end,
                            const IntegrateOptions& opts) const {
  if (init.size() != dim())
    throw ConfigError("coupled.init", "state must have dimension " +
                                          std::to_string(dim()));
  if (!init.allFinite()) throw ConfigError("coupled.init", "must be finite");
  return integrate_rhs(rhs(), init, t_end, opts);
}

PhaseEstimate phase_shift(const Trace& tr, int v1, int v2, double threshold,
                          double window_frac) {
  if (tr.t.size() < 2) throw NotFiring("trace too short");
  const double t0 = tr.t.back() * (1.0 - window_frac);
  auto late_spikes = [&](int idx) {
    std::vector<double> all = detect_spikes(tr, threshold, idx);
    std::vector<double> out;
    for (double s : all)
      if (s >= t0) out.push_back(s);
    return out;
  };
  std::vector<double> s1 = late_spikes(v1);
  std::vector<double> s2 = late_spikes(v2);
  if (s1.size() < 3 || s2.size() < 3)
    throw NotFiring("need at least 3 spikes per neuron in the window");

  PhaseEstimate pe;
  pe.t1 = (s1.back() - s1.front()) / static_cast<double>(s1.size() - 1);
  pe.t2 = (s2.back() - s2.front()) / static_cast<double>(s2.size() - 1);
  const double period = 0.5 * (pe.t1 + pe.t2);
  if (std::abs(pe.t1 - pe.t2) / period > 0.01)
    throw NotLocked("periods differ by more than 1%");

  // lag to the first neuron-2 spike at or after each neuron-1 spike.  The
  // element median (never an average of two) keeps a lag distribution split
  // across the wrap-around from collapsing onto a spurious half-period.
  std::vector<double> lags;
  for (double a : s1) {
    auto it = std::lower_bound(s2.begin(), s2.end(), a);
    if (it != s2.end()) lags.push_back(*it - a);
  }
  if (lags.empty()) throw NotLocked("no paired spikes");
  std::sort(lags.begin(), lags.end());
  const double tau = lags[(lags.size() - 1) / 2];
  const double frac = tau / period;
  pe.phi = wrap_phase(kTwoPi * (frac - std::floor(frac)));
  return pe;
}

const char* to_string(SyncClass c) {
  switch (c) {
    case SyncClass::InPhase: return "in-phase";
    case SyncClass::AntiPhase: return "anti-phase";
    case SyncClass::OutOfPhase: return "out-of-phase";
    case SyncClass::NonLocking: return "non-locking";
  }
  return "?";
}

SyncClass classify_phase(double phi) {
  phi = wrap_phase(phi);
  if (circ_dist(phi, 0.0) < 0.15) return SyncClass::InPhase;
  if (circ_dist(phi, 3.14159265358979323846) < 0.15) return SyncClass::AntiPhase;
  return SyncClass::OutOfPhase;
}

std::vector<PhiCluster> cluster_phases(const std::vector<double>& phis,
                                       double tol) {
  std::vector<std::vector<double>> groups;
  std::vector<double> sorted = phis;
  std::sort(sorted.begin(), sorted.end());
  for (double p : sorted) {
    bool placed = false;
    for (auto& g : groups) {
      if (circ_dist(p, circ_mean(g)) <= tol) {
        g.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({p});
  }
  // a sorted sweep can leave two groups that meet across the wrap
  bool merged = true;
  while (merged && groups.size() > 1) {
    merged = false;
    for (std::size_t i = 0; i < groups.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < groups.size() && !merged; ++j) {
        if (circ_dist(circ_mean(groups[i]), circ_mean(groups[j])) <= tol) {
          groups[i].insert(groups[i].end(), groups[j].begin(), groups[j].end());
          groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }
  std::vector<PhiCluster> out;
  for (const auto& g : groups)
    out.push_back({circ_mean(g), static_cast<int>(g.size())});
  std::sort(out.begin(), out.end(), [](const PhiCluster& a, const PhiCluster& b) {
    return a.count != b.count ? a.count > b.count : a.phi < b.phi;
  });
  return out;
}

std::vector<SyncResult> sync_sweep(const NeuronModel& m, const SynapseSpec& syn,
                                   const std::vector<double>& gm_grid,
                                   const SyncProtocol& proto) {
  if (gm_grid.empty()) throw ConfigError("sync.grid", "must be non-empty");
  if (proto.n_init < 1) throw ConfigError("sync.n_init", "must be at least 1");
  if (proto.t_sim <= 0) throw ConfigError("sync.t_sim", "must be positive");

  const int n_gm = static_cast<int>(gm_grid.size());
  const int n_tr = proto.n_init;
  std::vector<SyncResult> results(n_gm);
  for (int gi = 0; gi < n_gm; ++gi) {
    results[gi].g_m = gm_grid[gi];
    results[gi].trials.resize(n_tr);
  }

  auto run_one = [&](int gi, int trial) {
    SyncTrial& out = results[gi].trials[trial];
    out.trial = trial;
    std::seed_seq seq{proto.seed, static_cast<std::uint32_t>(gi),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937 rng(seq);
    // explicit uniform mapping: identical streams on every platform
    out.v1_init = -80.0 + 30.0 * std::ldexp(static_cast<double>(rng()), -32);
    out.v2_init = -80.0 + 30.0 * std::ldexp(static_cast<double>(rng()), -32);
    try {
      CoupledPair pair(m.with_gm(gm_grid[gi]), syn);
      Trace tr = pair.simulate(pair.initial_state(out.v1_init, out.v2_init),
                               proto.t_sim, proto.integ);
      PhaseEstimate pe =
          phase_shift(tr, pair.v_index(0), pair.v_index(1), proto.threshold);
      out.locked = true;
      out.phi = pe.phi;
      out.t1 = pe.t1;
      out.t2 = pe.t2;
    } catch (const NumericalError& e) {
      out.locked = false;
      out.error = e.what();
    }
  };

  const int total = n_gm * n_tr;
  const int n_threads = std::max(1, std::min(proto.threads, total));
  if (n_threads == 1) {
    for (int k = 0; k < total; ++k) run_one(k / n_tr, k % n_tr);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (int k = w; k < total; k += n_threads) run_one(k / n_tr, k % n_tr);
        } catch (...) {
          errs[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }

  for (auto& r : results) {
    std::vector<double> phis;
    for (const SyncTrial& t : r.trials)
      if (t.locked) phis.push_back(t.phi);
    r.clusters = cluster_phases(phis, proto.cluster_tol);
    // a single lone trial is not evidence of an attractor: with decoupled
    // neurons every trial "locks" at its own initial-condition-set offset
    r.classification = (r.clusters.empty() || r.clusters[0].count < 2)
                           ? SyncClass::NonLocking
                           : classify_phase(r.clusters[0].phi);
  }
  return results;
}

void write_sync_csv(const std::vector<SyncResult>& results, std::ostream& os) {
  os << "g_m,trial,v1_init,v2_init,phi,t1,t2,class\n";
  char buf[512];
  for (const SyncResult& r : results) {
    for (const SyncTrial& t : r.trials) {
      const char* cls =
          t.locked ? to_string(classify_phase(t.phi)) : "non-locking";
      std::snprintf(buf, sizeof buf,
                    "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.g_m,
                    t.trial, t.v1_init, t.v2_init, t.phi, t.t1, t.t2, cls);
      os << buf;
    }
  }
}

}  // namespace neurobt

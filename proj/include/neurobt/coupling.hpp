#pragma once

#include <neurobt/dynamics.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace neurobt {

class NotFiring : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class NotLocked : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// first-order synapse: ds/dt = a_e0 a_e(V_pre) (1 - s) - s / tau_s,
// postsynaptic current -g_syn s (V_post - v_syn)
struct SynapseSpec {
  std::string name = "custom";
  double g_syn = 0.1;  // mS/cm^2
  double v_syn = 0.0;  // mV
  double a_e0 = 1.0;   // 1/ms
  double tau_s = 5.0;  // ms
  Expr a_e;            // activation, function of presynaptic V

  SynapseSpec with_gsyn(double g) const {
    SynapseSpec s = *this;
    s.g_syn = g;
    return s;
  }
};

// ex1-exc | ex1-inh | ex2-exc | ex2-inh | ex3-exc | ex3-inh
SynapseSpec synapse_preset(std::string_view name);
std::vector<std::string> synapse_preset_names();

// Two identical neurons with reciprocal synapses.
// State layout: [neuron-1 state..., s1, neuron-2 state..., s2].
class CoupledPair {
 public:
  CoupledPair(const NeuronModel& m, const SynapseSpec& syn);

  int dim() const { return 2 * d_ + 2; }
  int v_index(int neuron) const { return neuron == 0 ? 0 : d_ + 1; }
  int s_index(int neuron) const { return neuron == 0 ? d_ : 2 * d_ + 1; }
  const NeuronModel& model() const { return m_; }
  const SynapseSpec& synapse() const { return syn_; }

  RhsFn rhs() const;

  // both neurons at voltage-clamped steady state, synapses off
  Eigen::VectorXd initial_state(double v1, double v2) const;

  Trace simulate(const Eigen::VectorXd& init, double t_end,
                 const IntegrateOptions& opts = {}) const;

 private:
  NeuronModel m_;
  SynapseSpec syn_;
  int d_;
};

struct PhaseEstimate {
  double phi = 0;          // [0, 2 pi)
  double t1 = 0, t2 = 0;   // mean ISI per neuron over the window (ms)
};

// Relative phase of neuron 2 versus neuron 1 over the trailing window_frac of
// the trace: per-neuron periods from mean ISI; tau = median first-spike lag;
// phi = 2 pi frac(tau / mean period).  Throws NotFiring (under 3 spikes for
// either neuron in the window) or NotLocked (periods differ by over 1%).
PhaseEstimate phase_shift(const Trace& tr, int v1, int v2,
                          double threshold = 0.0, double window_frac = 0.2);

enum class SyncClass { InPhase, AntiPhase, OutOfPhase, NonLocking };
const char* to_string(SyncClass c);

// in-phase within 0.15 rad of 0 (mod 2 pi); anti-phase within 0.15 of pi
SyncClass classify_phase(double phi);

struct SyncTrial {
  int trial = 0;
  double v1_init = 0, v2_init = 0;
  bool locked = false;
  double phi = 0, t1 = 0, t2 = 0;  // valid when locked
  std::string error;               // reason when not locked
};

struct PhiCluster {
  double phi = 0;  // circular mean of members
  int count = 0;
};

// greedy circular clustering; output sorted by count desc, then phi
std::vector<PhiCluster> cluster_phases(const std::vector<double>& phis,
                                       double tol);

struct SyncResult {
  double g_m = 0;
  std::vector<SyncTrial> trials;
  std::vector<PhiCluster> clusters;  // locked trials, circular tolerance
  // dominant cluster's class; NonLocking when no cluster holds 2+ trials
  SyncClass classification = SyncClass::NonLocking;
};

struct SyncProtocol {
  double t_sim = 10000.0;     // ms per trial
  int n_init = 10;            // random initial conditions per g_M
  std::uint32_t seed = 0;
  double threshold = 0.0;     // spike detection (mV)
  double cluster_tol = 0.15;  // rad
  int threads = 1;
  IntegrateOptions integ;
};

// Initial voltages drawn uniformly from [-80, -50] mV with an RNG seeded by
// (seed, g_M index, trial); gates start at steady state and synapses at zero.
// Per-trial integration or locking failures are recorded, never thrown.
std::vector<SyncResult> sync_sweep(const NeuronModel& m, const SynapseSpec& syn,
                                   const std::vector<double>& gm_grid,
                                   const SyncProtocol& proto = {});

// rows (g_m, trial, v1_init, v2_init, phi, t1, t2, class) at full precision
void write_sync_csv(const std::vector<SyncResult>& results, std::ostream& os);

}  // namespace neurobt

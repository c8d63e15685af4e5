#pragma once

#include <neurobt/model.hpp>
#include <neurobt/steady_state.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace neurobt {

struct StepSizeUnderflow : NumericalError {
  using NumericalError::NumericalError;
};

enum class Method { RK45, RK4 };

struct IntegrateOptions {
  Method method = Method::RK45;
  double atol = 1e-8;
  double rtol = 1e-6;
  double sample_dt = 0.05;  // ms between dense-output samples
  double max_step = 1.0;    // ms
  double fixed_step = 0.01; // ms, RK4 mode only
};

struct Trace {
  std::vector<double> t;  // ms, strictly increasing, starts at 0
  std::vector<Eigen::VectorXd> y;
  long steps = 0;
  long rejected = 0;
};

// rhs(t, y, dydt); dydt is pre-sized
using RhsFn = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

Trace integrate_rhs(const RhsFn& f, const Eigen::VectorXd& init, double t_end,
                    const IntegrateOptions& opts = {});
Trace integrate(const NeuronModel& m, const Eigen::VectorXd& init, double t_end,
                const IntegrateOptions& opts = {});

// upward threshold crossings of state component v_index, linearly
// interpolated; crossings closer than refractory_ms to the previous
// accepted spike are merged into it
std::vector<double> detect_spikes(const Trace& tr, double threshold = 0.0,
                                  int v_index = 0, double refractory_ms = 1.0);

// mean-rate estimate over the second half of the trace; 0 if fewer than
// two spikes remain after the transient is discarded
double firing_frequency(const Trace& tr, double threshold = 0.0,
                        int v_index = 0);

enum class ExcitabilityClass { I, II, Undetermined };
const char* to_string(ExcitabilityClass c);

struct FIPoint {
  double i_app = 0;
  double freq = 0;  // Hz
  bool fired = false;
};

struct FICurve {
  std::vector<FIPoint> up;    // ascending I_app
  std::vector<FIPoint> down;  // descending I_app
  double onset_current = std::numeric_limits<double>::quiet_NaN();
  double onset_frequency = std::numeric_limits<double>::quiet_NaN();
  // lowest firing current seen on the way down; < onset_current when the
  // firing and resting states coexist over a current window
  double down_onset_current = std::numeric_limits<double>::quiet_NaN();
  ExcitabilityClass excitability = ExcitabilityClass::Undetermined;
};

struct FIProtocol {
  double t_per_point = 3000.0;  // ms integrated per grid point
  IntegrateOptions integ{};
};

FICurve fi_curve(const NeuronModel& m, const std::vector<double>& i_grid,
                 const FIProtocol& proto = {});

struct FGMPoint {
  double g_m = 0;
  double freq = 0;
  bool fired = false;
};

struct FGMCurve {
  std::vector<FGMPoint> points;
  bool monotone_decreasing = false;  // over the firing points, in grid order
};

FGMCurve f_gm_curve(const NeuronModel& m, double i_fixed,
                    const std::vector<double>& gm_grid,
                    const FIProtocol& proto = {}, int threads = 1);

// resting state used to start sweeps: the most hyperpolarized stable
// equilibrium when one exists, otherwise the gate-relaxed state at the
// window midpoint
Eigen::VectorXd rest_state(const NeuronModel& m);

void write_trace_csv(const Trace& tr, std::ostream& os,
                     const std::vector<std::string>& columns = {});

}  // namespace neurobt

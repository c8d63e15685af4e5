#pragma once

#include "neurobt/model.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurobt {

// base for solver failures; the CLI maps these to a distinct exit code
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WindowTooNarrow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class Stability { Stable, Saddle, Unstable };
const char* to_string(Stability s);

struct Equilibrium {
  double V = 0;
  Eigen::VectorXd state;          // (V, w, a...) with gates at x_inf(V)
  double i_app = 0;               // applied current this is an equilibrium of
  Eigen::VectorXcd eigenvalues;   // of the scaled Jacobian
  Stability stability = Stability::Stable;
  bool fold = false;              // |di_infty| < 1e-6: (near-)double root
};

// I_app required to hold an equilibrium at V
double u_of_v(const NeuronModel& m, double V);

// steady-state I-V curve: i_app - u_of_v(V); zero exactly at equilibria
double i_infty(const NeuronModel& m, double V);

// exact symbolic d/dV (order 1) and d2/dV2 (order 2) of i_infty
double di_infty(const NeuronModel& m, double V, int order = 1);

// all roots of i_infty on the window: 0.01 mV bracket grid, bisection to
// 1e-8 mV, Newton polish to |i_infty| <= 1e-12; tangential double roots are
// found via the fold detector and reported once. If the window contains no
// root it is widened once (warning appended); still nothing -> WindowTooNarrow.
std::vector<Equilibrium> find_equilibria(const NeuronModel& m,
                                         std::vector<std::string>* warnings = nullptr);
std::vector<Equilibrium> find_equilibria(const NeuronModel& m, double i_app,
                                         std::vector<std::string>* warnings = nullptr);

Equilibrium make_equilibrium(const NeuronModel& m, double V);

// CSV rows (V, i_infty, di_infty, d2i_infty) over the window
void write_iv_curve(const NeuronModel& m, std::ostream& os, double dV = 0.1);

}  // namespace neurobt

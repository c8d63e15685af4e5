#pragma once

#include "neurobt/steady_state.hpp"

#include <limits>

namespace neurobt {

class NoRoot : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class InconsistentGM : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class NotDoubleZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class SingularBorderedSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// the six scalar functions the detection systems are written in, at one V
struct AuxFunctions {
  double X1, X2, Y1, Y2, Z1, Z2;
};
AuxFunctions aux_functions(const NeuronModel& m, double V);

enum class BifKind { BT, CP, BTC };
const char* to_string(BifKind k);

struct BifPoint {
  BifKind kind = BifKind::BT;
  double V = 0;
  double g_m = 0;
  double i_app = 0;
  double g_l = 0;            // solved for BTC, copied from the model otherwise
  bool biophysical = true;   // g_m >= 0
  // residuals of the defining equations at the returned point
  double res_phi = 0;  // scalar detection system
  double res_1 = 0;    // d i_infty / dV
  double res_2 = 0;    // second condition (trace for BT, d2 i_infty for CP, both for BTC)
  // normal-form diagnostics (double-zero points only; NaN when unavailable)
  double alpha2 = std::numeric_limits<double>::quiet_NaN();
  double beta2 = std::numeric_limits<double>::quiet_NaN();
};

// model with the point's parameters applied (g_m, i_app, and g_l for BTC)
NeuronModel at_point(const NeuronModel& m, const BifPoint& p);

// roots of the respective scalar system over the voltage window; spurious
// roots (the two g_M formulas disagreeing to 1e-6 relative, or non-finite
// g_M) are discarded with a warning
std::vector<BifPoint> find_bt(const NeuronModel& m, std::vector<std::string>* warnings = nullptr);
std::vector<BifPoint> find_cusp(const NeuronModel& m, std::vector<std::string>* warnings = nullptr);
std::vector<BifPoint> find_btc(const NeuronModel& m, std::vector<std::string>* warnings = nullptr);

struct BTEigvectors {
  Eigen::VectorXd q0, q1, p0, p1;  // A q0 = 0, A q1 = q0, A^T p1 = 0, A^T p0 = p1
};

// generalized eigenvectors from the closed forms for a conductance-model
// Jacobian (gate rows couple only to V); deterministic gauge: q0[0] = 1,
// q1[0] = 0, then p-side scaled so that p_i^T q_j = delta_ij
BTEigvectors bt_eigvectors(const Eigen::MatrixXd& A);

struct NormalForm {
  double alpha2 = 0;
  double beta2 = 0;
  Eigen::VectorXd h20;
};
NormalForm normal_form_coeffs(const NeuronModel& m, const BifPoint& bt);

struct BranchPoint {
  double V = 0;
  double i_app = 0;
  Eigen::VectorXcd eigenvalues;
  Stability stability = Stability::Stable;
  bool lp = false;    // |d i_infty| <= 1e-6 here
  bool hopf = false;  // refined Re=0 crossing of a complex pair
  double hopf_omega = 0;
};

// equilibrium branch over an ascending V grid with LP / Hopf classification;
// refined crossing points are inserted into the returned list
std::vector<BranchPoint> branch(const NeuronModel& m, const std::vector<double>& V_grid);

struct FoldPoint {
  double V = 0;
  double g_m = 0;
  double i_app = 0;
};

// analytic fold curve in (I_app, g_M) parameterized by V; |X1| < 1e-12 skipped
std::vector<FoldPoint> fold_curve(const NeuronModel& m, const std::vector<double>& V_grid);

}  // namespace neurobt

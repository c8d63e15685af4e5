#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "neurobt/expr.hpp"

namespace neurobt {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& fld, const std::string& reason)
      : std::runtime_error("config error in '" + fld + "': " + reason), field(fld) {}
};

struct GateSpec {
  std::string name;
  Expr xinf;
  Expr tau;  // ignored when instantaneous
  double phi = 1.0;
  bool instantaneous = false;
};

struct CurrentGateRef {
  std::string gate;
  double power = 1;
};

struct CurrentSpec {
  std::string name;
  double g = 0, E = 0;
  std::vector<CurrentGateRef> gates;
};

// Conductance-based neuron with a slow M-type recovery current.
// Scaled vector field (analysis object):
//   f1 = I_app - gL (V-VL) - gM w (V-VK) + I_ion(V,a)
//   f2 = (C/r)(winf - w),   r = tau_w / phi_w
//   f3j = (C/tau_j)(xinf_j - a_j),   tau_j effective (phi absorbed)
// Real-time dynamics divide by C. C=1 in all presets.
//
// Fill the spec fields, then finalize(); everything derived is cached.
// Instances are immutable afterwards (use the with_* copies) and safe to
// share across threads.
class NeuronModel {
 public:
  // specification
  double capacitance = 1;
  double g_leak = 0;
  double e_leak = -65;
  bool has_m = true;  // false: no w state at all
  double g_m = 0;
  double e_k = -90;  // M-current reversal
  Expr winf, tau_w;
  double phi_w = 1;
  std::vector<GateSpec> gates;
  std::vector<CurrentSpec> currents;
  double window_lo = -120, window_hi = 60;
  double i_app = 0;

  void finalize();  // validates and builds caches; throws ConfigError
  bool finalized() const { return finalized_; }

  int dim() const { return 1 + (has_m ? 1 : 0) + static_cast<int>(dyn_.size()); }
  int n_dyn() const { return static_cast<int>(dyn_.size()); }
  int gate_slot0() const { return has_m ? 2 : 1; }  // state index of first dynamic gate

  NeuronModel with_gm(double gm) const;
  NeuronModel with_gl(double gl) const;
  NeuronModel with_iapp(double ia) const;

  Eigen::VectorXd steady_state(double V) const;  // all gates at their infinity values

  Eigen::VectorXd rhs_scaled(const Eigen::VectorXd& s) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& s) const;  // real time: scaled / C
  void rhs_into(const double* s, double* out) const;    // real time, no allocation

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& s) const;               // scaled
  std::vector<Eigen::MatrixXd> hessians(const Eigen::VectorXd& s) const;  // scaled

  // finalized caches, index = derivative order
  struct Cur {
    double g, E;
    Expr b[3];                                 // g (E-V) * prod of instantaneous gates
    std::vector<std::pair<int, double>> dyn;   // (dyn_ index, power)
  };
  struct Dyn {
    std::string name;
    double phi;
    int gate_index = -1;  // into gates[]
    Expr xinf[3];
    Expr tau_eff;     // tau / phi
    Expr inv_tau[3];  // phi / tau
    Expr dion;        // dI_ion/da_j along the steady manifold
  };

  const std::vector<Cur>& cur() const { return cur_; }
  const std::vector<Dyn>& dyn() const { return dyn_; }
  const Expr& winf_d(int k) const { return winf_d_[k]; }
  const Expr& inv_r(int k) const { return inv_r_[k]; }
  const Expr& r_eff() const { return r_eff_; }
  const Expr& iion_inf(int k) const { return iion_[k]; }

 private:
  void check_finalized() const;
  bool finalized_ = false;
  std::vector<Cur> cur_;
  std::vector<Dyn> dyn_;
  Expr winf_d_[3], inv_r_[3], r_eff_, iion_[3];
};

NeuronModel preset(std::string_view name);  // wang-buzsaki | stiefel | rtm
std::vector<std::string> preset_names();

NeuronModel model_from_json_text(const std::string& text);
NeuronModel model_from_json_file(const std::string& path);
std::string model_to_json_text(const NeuronModel& m);

}  // namespace neurobt

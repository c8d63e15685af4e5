#include "neurobt/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace neurobt {

using json = nlohmann::json;

namespace {

// powers are validated as small non-negative integers at finalize time
double ipow(double x, double p) {
  int n = static_cast<int>(p);
  double r = 1;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void sample_check(const Expr& e, double lo, double hi, const std::string& field,
                  double min_ok, double max_ok) {
  for (double v = lo; v <= hi; v += 1.0) {
    double x = e(v);
    if (!std::isfinite(x) || x < min_ok || x > max_ok)
      throw ConfigError(field, "value " + std::to_string(x) + " at V=" + std::to_string(v) +
                                   " outside [" + std::to_string(min_ok) + ", " +
                                   std::to_string(max_ok) + "]");
  }
}

}  // namespace

void NeuronModel::check_finalized() const {
  if (!finalized_) throw std::logic_error("NeuronModel used before finalize()");
}

void NeuronModel::finalize() {
  if (capacitance <= 0) throw ConfigError("capacitance", "must be > 0");
  if (!(window_lo < window_hi)) throw ConfigError("window", "lo must be < hi");
  cur_.clear();
  dyn_.clear();

  std::vector<int> dyn_of_gate(gates.size(), -1);
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const GateSpec& g = gates[i];
    for (std::size_t k = 0; k < i; ++k)
      if (gates[k].name == g.name) throw ConfigError("gates", "duplicate gate '" + g.name + "'");
    sample_check(g.xinf, window_lo, window_hi, "gates." + g.name + ".xinf", -1e-9, 1 + 1e-9);
    if (!g.instantaneous) {
      if (g.phi <= 0) throw ConfigError("gates." + g.name + ".phi", "must be > 0");
      sample_check(g.tau, window_lo, window_hi, "gates." + g.name + ".tau", 1e-12, 1e12);
      Dyn d;
      d.name = g.name;
      d.phi = g.phi;
      d.gate_index = static_cast<int>(i);
      d.xinf[0] = g.xinf;
      d.xinf[1] = g.xinf.diff(1);
      d.xinf[2] = g.xinf.diff(2);
      d.tau_eff = g.tau / g.phi;
      d.inv_tau[0] = Expr::constant(g.phi) / g.tau;
      d.inv_tau[1] = d.inv_tau[0].diff(1);
      d.inv_tau[2] = d.inv_tau[0].diff(2);
      dyn_of_gate[i] = static_cast<int>(dyn_.size());
      dyn_.push_back(std::move(d));
    }
  }

  Expr iion = Expr::constant(0);
  for (const CurrentSpec& c : currents) {
    if (c.g < 0) throw ConfigError("currents." + c.name + ".g", "must be >= 0");
    Cur cc;
    cc.g = c.g;
    cc.E = c.E;
    Expr b = Expr::constant(c.g) * (Expr::constant(c.E) - Expr::var());
    Expr steady = b;  // all gates at infinity, for I_ion,infty
    for (std::size_t ri = 0; ri < c.gates.size(); ++ri)
      for (std::size_t rk = 0; rk < ri; ++rk)
        if (c.gates[ri].gate == c.gates[rk].gate)
          throw ConfigError("currents." + c.name + ".gates",
                            "gate '" + c.gates[ri].gate + "' referenced twice");
    for (const CurrentGateRef& r : c.gates) {
      if (!(r.power >= 1) || r.power != std::floor(r.power) || r.power > 12)
        throw ConfigError("currents." + c.name + ".gates." + r.gate,
                          "power must be a small positive integer");
      int gi = -1;
      for (std::size_t i = 0; i < gates.size(); ++i)
        if (gates[i].name == r.gate) gi = static_cast<int>(i);
      if (gi < 0)
        throw ConfigError("currents." + c.name + ".gates", "unknown gate '" + r.gate + "'");
      steady = steady * pow(gates[gi].xinf, r.power);
      if (gates[gi].instantaneous) {
        b = b * pow(gates[gi].xinf, r.power);
      } else {
        cc.dyn.emplace_back(dyn_of_gate[gi], r.power);
      }
    }
    cc.b[0] = b;
    cc.b[1] = b.diff(1);
    cc.b[2] = b.diff(2);
    iion = iion + steady;
    cur_.push_back(std::move(cc));
  }
  iion_[0] = iion;
  iion_[1] = iion.diff(1);
  iion_[2] = iion.diff(2);

  if (has_m) {
    if (phi_w <= 0) throw ConfigError("m_current.phi", "must be > 0");
    sample_check(winf, window_lo, window_hi, "m_current.winf", -1e-9, 1 + 1e-9);
    sample_check(tau_w, window_lo, window_hi, "m_current.tau", 1e-12, 1e12);
    for (double v = window_lo; v + 1 <= window_hi; v += 1.0)
      if (winf(v + 1) + 1e-9 < winf(v))
        throw ConfigError("m_current.winf", "must be monotone nondecreasing");
    winf_d_[0] = winf;
    winf_d_[1] = winf.diff(1);
    winf_d_[2] = winf.diff(2);
    r_eff_ = tau_w / phi_w;
    inv_r_[0] = Expr::constant(phi_w) / tau_w;
    inv_r_[1] = inv_r_[0].diff(1);
    inv_r_[2] = inv_r_[0].diff(2);
  }

  // dI_ion/da_j along the steady manifold, for the slow-gate feedback term
  for (Dyn& d : dyn_) {
    Expr acc = Expr::constant(0);
    for (std::size_t ci = 0; ci < currents.size(); ++ci) {
      const CurrentSpec& c = currents[ci];
      double p = 0;
      Expr others = cur_[ci].b[0];
      for (const CurrentGateRef& r : c.gates) {
        int gi = -1;
        for (std::size_t i = 0; i < gates.size(); ++i)
          if (gates[i].name == r.gate) gi = static_cast<int>(i);
        if (gates[gi].instantaneous) continue;  // already inside b
        if (gi == d.gate_index)
          p = r.power;
        else
          others = others * pow(gates[gi].xinf, r.power);
      }
      if (p > 0) acc = acc + Expr::constant(p) * pow(d.xinf[0], p - 1) * others;
    }
    d.dion = acc;
  }

  finalized_ = true;
}

NeuronModel NeuronModel::with_gm(double gm) const {
  check_finalized();
  NeuronModel m = *this;
  m.g_m = gm;
  return m;
}
NeuronModel NeuronModel::with_gl(double gl) const {
  check_finalized();
  NeuronModel m = *this;
  m.g_leak = gl;
  return m;
}
NeuronModel NeuronModel::with_iapp(double ia) const {
  check_finalized();
  NeuronModel m = *this;
  m.i_app = ia;
  return m;
}

Eigen::VectorXd NeuronModel::steady_state(double V) const {
  check_finalized();
  Eigen::VectorXd s(dim());
  s[0] = V;
  if (has_m) s[1] = std::clamp(winf_d_[0](V), 0.0, 1.0);
  int g0 = gate_slot0();
  for (int j = 0; j < n_dyn(); ++j) s[g0 + j] = std::clamp(dyn_[j].xinf[0](V), 0.0, 1.0);
  return s;
}

void NeuronModel::rhs_into(const double* s, double* out) const {
  double V = s[0];
  int g0 = gate_slot0();
  double f1 = i_app - g_leak * (V - e_leak);
  if (has_m) f1 -= g_m * s[1] * (V - e_k);
  for (const Cur& c : cur_) {
    double t = c.b[0](V);
    for (auto [j, p] : c.dyn) t *= ipow(s[g0 + j], p);
    f1 += t;
  }
  double ic = 1.0 / capacitance;
  out[0] = f1 * ic;
  if (has_m) out[1] = (winf_d_[0](V) - s[1]) * inv_r_[0](V);
  for (int j = 0; j < n_dyn(); ++j)
    out[g0 + j] = (dyn_[j].xinf[0](V) - s[g0 + j]) * dyn_[j].inv_tau[0](V);
}

Eigen::VectorXd NeuronModel::rhs(const Eigen::VectorXd& s) const {
  check_finalized();
  Eigen::VectorXd out(dim());
  rhs_into(s.data(), out.data());
  return out;
}

Eigen::VectorXd NeuronModel::rhs_scaled(const Eigen::VectorXd& s) const {
  return capacitance * rhs(s);
}

Eigen::MatrixXd NeuronModel::jacobian(const Eigen::VectorXd& s) const {
  check_finalized();
  int n = dim(), g0 = gate_slot0();
  double V = s[0], C = capacitance;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);

  J(0, 0) = -g_leak;
  if (has_m) {
    J(0, 0) -= g_m * s[1];
    J(0, 1) = -g_m * (V - e_k);
  }
  for (const Cur& c : cur_) {
    double P = 1;
    for (auto [j, p] : c.dyn) P *= ipow(s[g0 + j], p);
    J(0, 0) += c.b[1](V) * P;
    double b0 = c.b[0](V);
    for (auto [j, p] : c.dyn) {
      double part = p * ipow(s[g0 + j], p - 1);
      for (auto [k, q] : c.dyn)
        if (k != j) part *= ipow(s[g0 + k], q);
      J(0, g0 + j) += b0 * part;
    }
  }
  if (has_m) {
    J(1, 0) = C * (winf_d_[1](V) * inv_r_[0](V) + (winf_d_[0](V) - s[1]) * inv_r_[1](V));
    J(1, 1) = -C * inv_r_[0](V);
  }
  for (int j = 0; j < n_dyn(); ++j) {
    const Dyn& d = dyn_[j];
    int r = g0 + j;
    J(r, 0) = C * (d.xinf[1](V) * d.inv_tau[0](V) + (d.xinf[0](V) - s[r]) * d.inv_tau[1](V));
    J(r, r) = -C * d.inv_tau[0](V);
  }
  return J;
}

std::vector<Eigen::MatrixXd> NeuronModel::hessians(const Eigen::VectorXd& s) const {
  check_finalized();
  int n = dim(), g0 = gate_slot0();
  double V = s[0], C = capacitance;
  std::vector<Eigen::MatrixXd> H(n, Eigen::MatrixXd::Zero(n, n));

  for (const Cur& c : cur_) {
    double P = 1;
    for (auto [j, p] : c.dyn) P *= ipow(s[g0 + j], p);
    H[0](0, 0) += c.b[2](V) * P;
    double b0 = c.b[0](V), b1 = c.b[1](V);
    for (auto [j, p] : c.dyn) {
      double dj = p * ipow(s[g0 + j], p - 1);
      double rest = 1;
      for (auto [k, q] : c.dyn)
        if (k != j) rest *= ipow(s[g0 + k], q);
      H[0](0, g0 + j) += b1 * dj * rest;
      H[0](g0 + j, g0 + j) += b0 * p * (p - 1) * ipow(s[g0 + j], p - 2) * rest;
      for (auto [k, q] : c.dyn) {
        if (k == j) continue;
        double dk = q * ipow(s[g0 + k], q - 1);
        double rest2 = 1;
        for (auto [l, pl] : c.dyn)
          if (l != j && l != k) rest2 *= ipow(s[g0 + l], pl);
        H[0](g0 + j, g0 + k) += b0 * dj * dk * rest2;
      }
    }
  }
  for (int j = 0; j < n_dyn(); ++j) H[0](g0 + j, 0) = H[0](0, g0 + j);

  if (has_m) {
    H[0](0, 1) = H[0](1, 0) = -g_m;
    H[1](0, 0) = C * (winf_d_[2](V) * inv_r_[0](V) + 2 * winf_d_[1](V) * inv_r_[1](V) +
                      (winf_d_[0](V) - s[1]) * inv_r_[2](V));
    H[1](0, 1) = H[1](1, 0) = -C * inv_r_[1](V);
  }
  for (int j = 0; j < n_dyn(); ++j) {
    const Dyn& d = dyn_[j];
    int r = g0 + j;
    H[r](0, 0) = C * (d.xinf[2](V) * d.inv_tau[0](V) + 2 * d.xinf[1](V) * d.inv_tau[1](V) +
                      (d.xinf[0](V) - s[r]) * d.inv_tau[2](V));
    H[r](0, r) = H[r](r, 0) = -C * d.inv_tau[1](V);
  }
  return H;
}

// ---- JSON ----

namespace {

Expr parse_field(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected an expression string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(field, e.what());
  }
}

double num_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

}  // namespace

NeuronModel model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!j.is_object()) throw ConfigError("<document>", "expected a JSON object");
  NeuronModel m;
  try {
    if (j.contains("capacitance")) m.capacitance = num_field(j["capacitance"], "capacitance");
    if (j.contains("leak")) {
      m.g_leak = num_field(j["leak"].at("g"), "leak.g");
      m.e_leak = num_field(j["leak"].at("E"), "leak.E");
    }
    if (j.contains("m_current") && !j["m_current"].is_null()) {
      const json& mc = j["m_current"];
      m.has_m = true;
      m.g_m = num_field(mc.at("g"), "m_current.g");
      m.e_k = num_field(mc.at("E"), "m_current.E");
      m.winf = parse_field(mc.at("winf"), "m_current.winf");
      m.tau_w = parse_field(mc.at("tau"), "m_current.tau");
      if (mc.contains("phi")) m.phi_w = num_field(mc["phi"], "m_current.phi");
    } else {
      m.has_m = false;
    }
    if (j.contains("gates")) {
      for (const json& g : j["gates"]) {
        GateSpec gs;
        gs.name = g.at("name").get<std::string>();
        std::string base = "gates." + gs.name;
        gs.instantaneous = g.value("instantaneous", false);
        gs.xinf = parse_field(g.at("xinf"), base + ".xinf");
        if (!gs.instantaneous) gs.tau = parse_field(g.at("tau"), base + ".tau");
        if (g.contains("phi")) gs.phi = num_field(g["phi"], base + ".phi");
        m.gates.push_back(std::move(gs));
      }
    }
    if (j.contains("currents")) {
      for (const json& c : j["currents"]) {
        CurrentSpec cs;
        cs.name = c.at("name").get<std::string>();
        std::string base = "currents." + cs.name;
        cs.g = num_field(c.at("g"), base + ".g");
        cs.E = num_field(c.at("E"), base + ".E");
        for (const json& r : c.at("gates"))
          cs.gates.push_back({r.at("name").get<std::string>(), r.value("power", 1.0)});
        m.currents.push_back(std::move(cs));
      }
    }
    if (j.contains("window")) {
      m.window_lo = num_field(j["window"].at(0), "window[0]");
      m.window_hi = num_field(j["window"].at(1), "window[1]");
    }
    if (j.contains("i_app")) m.i_app = num_field(j["i_app"], "i_app");
  } catch (const json::exception& e) {
    throw ConfigError("<document>", e.what());
  }
  m.finalize();
  return m;
}

NeuronModel model_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

std::string model_to_json_text(const NeuronModel& m) {
  json j;
  j["capacitance"] = m.capacitance;
  j["leak"] = {{"g", m.g_leak}, {"E", m.e_leak}};
  if (m.has_m) {
    j["m_current"] = {{"g", m.g_m},
                      {"E", m.e_k},
                      {"winf", m.winf.str()},
                      {"tau", m.tau_w.str()},
                      {"phi", m.phi_w}};
  }
  j["gates"] = json::array();
  for (const GateSpec& g : m.gates) {
    json gj = {{"name", g.name}, {"xinf", g.xinf.str()}, {"phi", g.phi},
               {"instantaneous", g.instantaneous}};
    if (!g.instantaneous) gj["tau"] = g.tau.str();
    j["gates"].push_back(gj);
  }
  j["currents"] = json::array();
  for (const CurrentSpec& c : m.currents) {
    json cj = {{"name", c.name}, {"g", c.g}, {"E", c.E}, {"gates", json::array()}};
    for (const CurrentGateRef& r : c.gates)
      cj["gates"].push_back({{"name", r.gate}, {"power", r.power}});
    j["currents"].push_back(cj);
  }
  j["window"] = {m.window_lo, m.window_hi};
  j["i_app"] = m.i_app;
  return j.dump(2);
}

}  // namespace neurobt

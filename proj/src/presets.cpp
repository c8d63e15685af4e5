#include "neurobt/model.hpp"

namespace neurobt {

namespace {

Expr E(const char* s) { return Expr::parse(s); }

NeuronModel wang_buzsaki() {
  NeuronModel m;
  m.capacitance = 1;
  m.g_leak = 0.1;
  m.e_leak = -65;
  m.g_m = 0;
  m.e_k = -90;
  m.winf = E("1/(exp(-(V+27)/7)+1)");
  m.tau_w = E("1/(0.003*(exp((V+63)/15)+exp(-(V+63)/15)))");
  m.phi_w = 1;

  Expr am = E("-0.1*(V+35)/(exp(-0.1*(V+35))-1)");
  Expr bm = E("4*exp(-(V+60)/18)");
  Expr ah = E("0.07*exp(-(V+58)/20)");
  Expr bh = E("1/(exp(-0.1*(V+28))+1)");
  Expr an = E("-0.01*(V+34)/(exp(-0.1*(V+34))-1)");
  Expr bn = E("0.125*exp(-(V+44)/80)");

  m.gates = {
      {"m", xinf_from_rates(am, bm), Expr(), 1.0, true},
      {"h", xinf_from_rates(ah, bh), tau_from_rates(ah, bh), 5.0, false},
      {"n", xinf_from_rates(an, bn), tau_from_rates(an, bn), 5.0, false},
  };
  m.currents = {
      {"Na", 35, 55, {{"m", 3}, {"h", 1}}},
      {"K", 9, -90, {{"n", 4}}},
  };
  m.finalize();
  return m;
}

NeuronModel stiefel() {
  NeuronModel m;
  m.capacitance = 1;
  m.g_leak = 0.02;
  m.e_leak = -60;
  m.g_m = 0;
  m.e_k = -90;
  m.winf = E("1/(exp(-(V+39)/5)+1)");
  m.tau_w = E("75");
  m.phi_w = 1;

  m.gates = {
      {"m", E("1/(exp(-(V+30)/9.5)+1)"), Expr(), 1.0, true},
      {"h", E("1/(exp((V+53)/7)+1)"), E("0.37+2.78/(exp((V+40.5)/6)+1)"), 1.0, false},
      {"n", E("1/(exp(-(V+30)/10)+1)"), E("0.37+1.85/(exp((V+27)/15)+1)"), 1.0, false},
  };
  m.currents = {
      {"Na", 24, 55, {{"m", 3}, {"h", 1}}},
      {"K", 3, -90, {{"n", 4}}},
  };
  m.finalize();
  return m;
}

NeuronModel rtm() {
  NeuronModel m;
  m.capacitance = 1;
  m.g_leak = 0.1;
  m.e_leak = -67;
  m.g_m = 0;
  m.e_k = -100;
  m.winf = E("1/(exp(-(V+35)/10)+1)");
  m.tau_w = E("400/(3.3*exp((V+35)/20)+exp(-(V+35)/20))");
  m.phi_w = 1;

  Expr am = E("0.32*(V+54)/(1-exp(-(V+54)/4))");
  Expr bm = E("0.28*(V+27)/(exp((V+27)/5)-1)");
  Expr ah = E("0.128*exp(-(V+50)/18)");
  Expr bh = E("4/(exp(-(V+27)/5)+1)");
  Expr an = E("0.032*(V+52)/(1-exp(-(V+52)/5))");
  Expr bn = E("0.5*exp(-(V+57)/40)");

  m.gates = {
      {"m", xinf_from_rates(am, bm), tau_from_rates(am, bm), 1.0, false},
      {"h", xinf_from_rates(ah, bh), tau_from_rates(ah, bh), 1.0, false},
      {"n", xinf_from_rates(an, bn), tau_from_rates(an, bn), 1.0, false},
  };
  m.currents = {
      {"Na", 100, 50, {{"m", 3}, {"h", 1}}},
      {"K", 80, -100, {{"n", 4}}},
  };
  m.finalize();
  return m;
}

}  // namespace

NeuronModel preset(std::string_view name) {
  if (name == "wang-buzsaki") return wang_buzsaki();
  if (name == "stiefel") return stiefel();
  if (name == "rtm") return rtm();
  throw ConfigError("model", "unknown preset '" + std::string(name) +
                                 "' (available: wang-buzsaki, stiefel, rtm)");
}

std::vector<std::string> preset_names() { return {"wang-buzsaki", "stiefel", "rtm"}; }

}  // namespace neurobt

#include "neurobt/steady_state.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace neurobt {

namespace {

constexpr double kGrid = 0.01;       // bracket step, mV
constexpr double kBisect = 1e-8;     // bracket width target, mV
constexpr double kResidual = 1e-12;  // Newton target on i_infty
constexpr double kFoldTol = 1e-6;    // |di_infty| below this flags a fold

double bisect(const NeuronModel& m, double a, double b, double fa) {
  while (b - a > kBisect) {
    double c = 0.5 * (a + b), fc = i_infty(m, c);
    if (fc == 0) return c;
    if ((fa < 0) != (fc < 0))
      b = c;
    else {
      a = c;
      fa = fc;
    }
  }
  return 0.5 * (a + b);
}

double polish(const NeuronModel& m, double V) {
  double best = V, bestf = std::abs(i_infty(m, V));
  for (int it = 0; it < 30 && bestf > kResidual; ++it) {
    double d = di_infty(m, V, 1);
    if (std::abs(d) < 1e-14) break;
    V -= i_infty(m, V) / d;
    double f = std::abs(i_infty(m, V));
    if (f < bestf) {
      bestf = f;
      best = V;
    } else
      break;
  }
  return best;
}

// roots of i_infty in [lo, hi], including tangential double roots
std::vector<double> scan(const NeuronModel& m, double lo, double hi) {
  std::vector<double> roots;
  int n = static_cast<int>(std::ceil((hi - lo) / kGrid));
  double vprev = lo, fprev = i_infty(m, lo), dprev = di_infty(m, lo, 1);
  for (int k = 1; k <= n; ++k) {
    double v = std::min(lo + k * kGrid, hi);
    double f = i_infty(m, v), d = di_infty(m, v, 1);
    if (fprev == 0) roots.push_back(vprev);
    if ((fprev < 0) != (f < 0))
      roots.push_back(polish(m, bisect(m, vprev, v, fprev)));
    else if ((dprev < 0) != (d < 0)) {
      // fold candidate: accept a tangency of the I-V curve as a double root
      double a = vprev, b = v, da = dprev;
      while (b - a > kBisect) {
        double c = 0.5 * (a + b), dc = di_infty(m, c, 1);
        if ((da < 0) != (dc < 0))
          b = c;
        else {
          a = c;
          da = dc;
        }
      }
      double vf = 0.5 * (a + b);
      if (std::abs(i_infty(m, vf)) <= 1e-10) roots.push_back(vf);
    }
    vprev = v;
    fprev = f;
    dprev = d;
  }
  if (fprev == 0) roots.push_back(hi);
  std::sort(roots.begin(), roots.end());
  // a tangency seen by both detectors, or split brackets near a fold: merge
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > 1e-6) out.push_back(r);
  return out;
}

}  // namespace

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Saddle: return "saddle";
    default: return "unstable";
  }
}

double u_of_v(const NeuronModel& m, double V) {
  double u = m.g_leak * (V - m.e_leak) - m.iion_inf(0)(V);
  if (m.has_m) u += m.g_m * m.winf_d(0)(V) * (V - m.e_k);
  return u;
}

double i_infty(const NeuronModel& m, double V) { return m.i_app - u_of_v(m, V); }

double di_infty(const NeuronModel& m, double V, int order) {
  if (order == 1) {
    double du = m.g_leak - m.iion_inf(1)(V);
    if (m.has_m) du += m.g_m * (m.winf_d(0)(V) + m.winf_d(1)(V) * (V - m.e_k));
    return -du;
  }
  if (order == 2) {
    double ddu = -m.iion_inf(2)(V);
    if (m.has_m) ddu += m.g_m * (2 * m.winf_d(1)(V) + m.winf_d(2)(V) * (V - m.e_k));
    return -ddu;
  }
  throw std::invalid_argument("di_infty: order must be 1 or 2");
}

Equilibrium make_equilibrium(const NeuronModel& m, double V) {
  Equilibrium e;
  e.V = V;
  e.state = m.steady_state(V);
  e.i_app = m.i_app;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m.jacobian(e.state));
  e.eigenvalues = es.eigenvalues();
  int n_pos = 0;
  bool complex_pos = false;
  for (int i = 0; i < e.eigenvalues.size(); ++i) {
    if (e.eigenvalues[i].real() > 0) {
      ++n_pos;
      if (std::abs(e.eigenvalues[i].imag()) > 1e-12) complex_pos = true;
    }
  }
  e.stability = n_pos == 0          ? Stability::Stable
                : complex_pos       ? Stability::Unstable
                : n_pos == m.dim()  ? Stability::Unstable
                                    : Stability::Saddle;
  e.fold = std::abs(di_infty(m, V, 1)) < kFoldTol;
  return e;
}

std::vector<Equilibrium> find_equilibria(const NeuronModel& m,
                                         std::vector<std::string>* warnings) {
  std::vector<double> roots = scan(m, m.window_lo, m.window_hi);
  if (roots.empty()) {
    double lo = m.window_lo - 40, hi = m.window_hi + 40;
    roots = scan(m, lo, hi);
    if (roots.empty())
      throw WindowTooNarrow("no equilibrium found in [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "] even after widening");
    if (warnings)
      warnings->push_back("no equilibrium in the configured window; widened to [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  std::vector<Equilibrium> out;
  out.reserve(roots.size());
  for (double r : roots) out.push_back(make_equilibrium(m, r));
  return out;
}

std::vector<Equilibrium> find_equilibria(const NeuronModel& m, double i_app,
                                         std::vector<std::string>* warnings) {
  return find_equilibria(m.with_iapp(i_app), warnings);
}

void write_iv_curve(const NeuronModel& m, std::ostream& os, double dV) {
  os << "V,i_infty,di_infty,d2i_infty\n";
  char buf[160];
  for (double v = m.window_lo; v <= m.window_hi + 1e-12; v += dV) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", v, i_infty(m, v),
                  di_infty(m, v, 1), di_infty(m, v, 2));
    os << buf;
  }
}

}  // namespace neurobt

#include "neurobt/bifurcation.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace neurobt {

namespace {

constexpr double kGrid = 0.01;        // bracket step, mV
constexpr double kGmAgree = 1e-6;     // relative agreement of the two g_M formulas
constexpr double kZeroPair = 1e-4;    // |lambda| bound for the double-zero pair

// bisect a bracketed sign change down to machine resolution
double bisect_full(const std::function<double(double)>& f, double a, double b, double fa) {
  for (int it = 0; it < 200; ++it) {
    double c = 0.5 * (a + b);
    if (c <= a || c >= b) break;
    double fc = f(c);
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

std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi) {
  std::vector<double> roots;
  int n = static_cast<int>(std::ceil((hi - lo) / kGrid));
  double vprev = lo, fprev = f(lo);
  for (int k = 1; k <= n; ++k) {
    double v = std::min(lo + k * kGrid, hi);
    double fv = f(v);
    if (fprev == 0)
      roots.push_back(vprev);
    else if ((fprev < 0) != (fv < 0))
      roots.push_back(bisect_full(f, vprev, v, fprev));
    vprev = v;
    fprev = fv;
  }
  if (fprev == 0) roots.push_back(hi);
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > 1e-9) out.push_back(r);
  return out;
}

void warn(std::vector<std::string>* warnings, const std::string& msg) {
  if (warnings) warnings->push_back(msg);
}

// shared accept/reject logic: both g_M formulas must be finite and agree
bool accept_gm(double gm1, double gm2, double V, const char* what,
               std::vector<std::string>* warnings, bool* saw_inconsistent) {
  if (!std::isfinite(gm1) || !std::isfinite(gm2)) {
    warn(warnings, std::string(what) + " root at V=" + std::to_string(V) +
                       " discarded: non-finite g_M");
    return false;
  }
  double tol = kGmAgree * std::max(std::abs(gm1), std::abs(gm2)) + 1e-12;
  if (std::abs(gm1 - gm2) > tol) {
    warn(warnings, std::string(what) + " root at V=" + std::to_string(V) +
                       " discarded: g_M formulas disagree (" + std::to_string(gm1) + " vs " +
                       std::to_string(gm2) + ")");
    *saw_inconsistent = true;
    return false;
  }
  return true;
}

void fill_normal_form(const NeuronModel& m, BifPoint& p, std::vector<std::string>* warnings) {
  try {
    NormalForm nf = normal_form_coeffs(m, p);
    p.alpha2 = nf.alpha2;
    p.beta2 = nf.beta2;
  } catch (const NumericalError& e) {
    warn(warnings, std::string(to_string(p.kind)) + " point at V=" + std::to_string(p.V) +
                       ": normal form unavailable (" + e.what() + ")");
  }
}

}  // namespace

const char* to_string(BifKind k) {
  switch (k) {
    case BifKind::BT: return "BT";
    case BifKind::CP: return "CP";
    default: return "BTC";
  }
}

AuxFunctions aux_functions(const NeuronModel& m, double V) {
  AuxFunctions a{};
  double C = m.capacitance, vk = m.e_k;
  double w0 = m.winf_d(0)(V), w1 = m.winf_d(1)(V), w2 = m.winf_d(2)(V);
  a.X1 = w0 + w1 * (V - vk);
  a.X2 = m.iion_inf(1)(V);
  a.Y1 = (m.r_eff()(V) / C) * (V - vk) * w1;
  a.Y2 = 0;
  for (const auto& d : m.dyn()) a.Y2 += d.dion(V) * d.tau_eff(V) * d.xinf[1](V);
  a.Y2 /= C;
  a.Z1 = 2 * w1 + w2 * (V - vk);
  a.Z2 = m.iion_inf(2)(V);
  return a;
}

NeuronModel at_point(const NeuronModel& m, const BifPoint& p) {
  NeuronModel mm = m.with_gm(p.g_m).with_iapp(p.i_app);
  if (p.kind == BifKind::BTC) mm = mm.with_gl(p.g_l);
  return mm;
}

std::vector<BifPoint> find_bt(const NeuronModel& m, std::vector<std::string>* warnings) {
  auto phi = [&](double V) {
    AuxFunctions a = aux_functions(m, V);
    return (m.g_leak - a.X2) * a.Y1 + a.X1 * (a.Y2 + 1);
  };
  bool saw_inconsistent = false;
  std::vector<BifPoint> out;
  for (double V : scan_roots(phi, m.window_lo, m.window_hi)) {
    AuxFunctions a = aux_functions(m, V);
    double gm1 = (a.X2 - m.g_leak) / a.X1, gm2 = (a.Y2 + 1) / a.Y1;
    if (!accept_gm(gm1, gm2, V, "BT", warnings, &saw_inconsistent)) continue;
    BifPoint p;
    p.kind = BifKind::BT;
    p.V = V;
    p.g_m = gm1;
    p.g_l = m.g_leak;
    p.i_app = u_of_v(m.with_gm(p.g_m), V);
    p.biophysical = p.g_m >= 0;
    p.res_phi = std::abs(phi(V));
    NeuronModel mm = at_point(m, p);
    p.res_1 = std::abs(di_infty(mm, V, 1));
    p.res_2 = std::abs((a.Y2 + 1) - p.g_m * a.Y1);
    fill_normal_form(m, p, warnings);
    out.push_back(std::move(p));
  }
  if (out.empty()) {
    if (saw_inconsistent)
      throw InconsistentGM("all BT candidates rejected: g_M formulas disagree");
    throw NoRoot("no BT point in the voltage window");
  }
  return out;
}

std::vector<BifPoint> find_cusp(const NeuronModel& m, std::vector<std::string>* warnings) {
  auto phi = [&](double V) {
    AuxFunctions a = aux_functions(m, V);
    return (m.g_leak - a.X2) * a.Z1 + a.X1 * a.Z2;
  };
  bool saw_inconsistent = false;
  std::vector<BifPoint> out;
  for (double V : scan_roots(phi, m.window_lo, m.window_hi)) {
    AuxFunctions a = aux_functions(m, V);
    double gm1 = (a.X2 - m.g_leak) / a.X1, gm2 = a.Z2 / a.Z1;
    if (!accept_gm(gm1, gm2, V, "CP", warnings, &saw_inconsistent)) continue;
    BifPoint p;
    p.kind = BifKind::CP;
    p.V = V;
    p.g_m = gm1;
    p.g_l = m.g_leak;
    p.i_app = u_of_v(m.with_gm(p.g_m), V);
    p.biophysical = p.g_m >= 0;
    p.res_phi = std::abs(phi(V));
    NeuronModel mm = at_point(m, p);
    p.res_1 = std::abs(di_infty(mm, V, 1));
    p.res_2 = std::abs(di_infty(mm, V, 2));
    out.push_back(std::move(p));
  }
  if (out.empty()) {
    if (saw_inconsistent)
      throw InconsistentGM("all cusp candidates rejected: g_M formulas disagree");
    throw NoRoot("no cusp point in the voltage window");
  }
  return out;
}

std::vector<BifPoint> find_btc(const NeuronModel& m, std::vector<std::string>* warnings) {
  auto phi = [&](double V) {
    AuxFunctions a = aux_functions(m, V);
    return (a.Y2 + 1) * a.Z1 - a.Y1 * a.Z2;
  };
  bool saw_inconsistent = false;
  std::vector<BifPoint> out;
  for (double V : scan_roots(phi, m.window_lo, m.window_hi)) {
    AuxFunctions a = aux_functions(m, V);
    double gm1 = (a.Y2 + 1) / a.Y1, gm2 = a.Z2 / a.Z1;
    if (!accept_gm(gm1, gm2, V, "BTC", warnings, &saw_inconsistent)) continue;
    BifPoint p;
    p.kind = BifKind::BTC;
    p.V = V;
    p.g_m = gm1;
    p.g_l = a.X2 - p.g_m * a.X1;
    p.i_app = u_of_v(m.with_gm(p.g_m).with_gl(p.g_l), V);
    p.biophysical = p.g_m >= 0;
    p.res_phi = std::abs(phi(V));
    NeuronModel mm = at_point(m, p);
    p.res_1 = std::abs(di_infty(mm, V, 1));
    p.res_2 = std::max(std::abs(di_infty(mm, V, 2)),
                       std::abs((a.Y2 + 1) - p.g_m * a.Y1));
    fill_normal_form(m, p, warnings);
    out.push_back(std::move(p));
  }
  if (out.empty()) {
    if (saw_inconsistent)
      throw InconsistentGM("all BTC candidates rejected: g_M formulas disagree");
    throw NoRoot("no BTC point in the voltage window");
  }
  return out;
}

BTEigvectors bt_eigvectors(const Eigen::MatrixXd& A) {
  int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  int near_zero = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(es.eigenvalues()[i]) <= kZeroPair) ++near_zero;
  if (near_zero != 2)
    throw NotDoubleZero("expected exactly two near-zero eigenvalues, found " +
                        std::to_string(near_zero));

  // closed forms; rows 1..n-1 couple only to themselves and to V
  Eigen::VectorXd beta(n), gamma(n), tau(n);
  beta[0] = gamma[0] = tau[0] = 0;
  for (int i = 1; i < n; ++i) {
    if (A(i, i) == 0) throw NotDoubleZero("zero diagonal in a gate row");
    beta[i] = -A(i, 0) / A(i, i);
    gamma[i] = -A(0, i) / A(i, i);
    tau[i] = -1.0 / A(i, i);
  }
  double S = 0, S2 = 0;
  for (int i = 1; i < n; ++i) {
    S += tau[i] * gamma[i] * beta[i];
    S2 += tau[i] * tau[i] * gamma[i] * beta[i];
  }
  if (std::abs(S) < 1e-14)
    throw SingularBorderedSystem("eigenvector normalization is degenerate (p1^T q1 = 0)");

  BTEigvectors v;
  v.q0 = Eigen::VectorXd::Ones(n);
  v.q1 = Eigen::VectorXd::Zero(n);
  v.p1 = Eigen::VectorXd::Zero(n);
  v.p0 = Eigen::VectorXd::Zero(n);
  double p11 = -1.0 / S;
  double p01 = p11 * S2 / S;
  v.p1[0] = p11;
  v.p0[0] = p01;
  for (int i = 1; i < n; ++i) {
    v.q0[i] = beta[i];
    v.q1[i] = -tau[i] * beta[i];
    v.p1[i] = p11 * gamma[i];
    v.p0[i] = (p01 - p11 * tau[i]) * gamma[i];
  }
  return v;
}

NormalForm normal_form_coeffs(const NeuronModel& m, const BifPoint& bt) {
  NeuronModel mm = at_point(m, bt);
  Eigen::VectorXd s = mm.steady_state(bt.V);
  Eigen::MatrixXd A = mm.jacobian(s);
  BTEigvectors v = bt_eigvectors(A);
  std::vector<Eigen::MatrixXd> H = mm.hessians(s);
  int n = mm.dim();

  auto G = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = x.dot(H[i] * y);
    return g;
  };

  Eigen::VectorXd Gq0q0 = G(v.q0, v.q0);
  NormalForm nf;
  nf.alpha2 = 0.5 * v.p1.dot(Gq0q0);

  // the bordered matrix keeps a one-dimensional kernel spanned by (q0, 0)
  // (p1^T q0 = 0), so solve in the least-squares sense; beta2 is invariant
  // under the h20 + c q0 family this leaves free
  Eigen::MatrixXd B(n + 1, n + 1);
  B.setZero();
  B.topLeftCorner(n, n) = A;
  B.topRightCorner(n, 1) = v.q0;
  B.bottomLeftCorner(1, n) = v.p1.transpose();
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = 2 * nf.alpha2 * v.q1 - Gq0q0;
  rhs[n] = 0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
  Eigen::VectorXd sol = cod.solve(rhs);
  double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if ((B * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw SingularBorderedSystem("bordered system for h20 is inconsistent");
  nf.h20 = sol.head(n);

  nf.beta2 = v.p1.dot(G(v.q0, v.q1)) - v.p1.dot(nf.h20);
  return nf;
}

std::vector<BranchPoint> branch(const NeuronModel& m, const std::vector<double>& V_grid) {
  std::vector<double> grid = V_grid;
  std::sort(grid.begin(), grid.end());

  auto eig_at = [&](double V) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.jacobian(m.steady_state(V)));
    return Eigen::VectorXcd(es.eigenvalues());
  };
  // max real part over well-separated complex pairs (NaN if none)
  auto mu_of = [&](const Eigen::VectorXcd& ev) {
    double mu = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < ev.size(); ++i)
      if (std::abs(ev[i].imag()) > 1e-8 && std::abs(ev[i]) > kZeroPair)
        mu = std::isnan(mu) ? ev[i].real() : std::max(mu, ev[i].real());
    return mu;
  };
  auto omega_of = [&](const Eigen::VectorXcd& ev) {
    double mu = -std::numeric_limits<double>::infinity(), om = 0;
    for (int i = 0; i < ev.size(); ++i)
      if (std::abs(ev[i].imag()) > 1e-8 && std::abs(ev[i]) > kZeroPair && ev[i].real() > mu) {
        mu = ev[i].real();
        om = std::abs(ev[i].imag());
      }
    return om;
  };
  auto make_point = [&](double V, bool hopf_flag) {
    Equilibrium e = make_equilibrium(m.with_iapp(u_of_v(m, V)), V);
    BranchPoint b;
    b.V = V;
    b.i_app = e.i_app;
    b.eigenvalues = e.eigenvalues;
    b.stability = e.stability;
    b.lp = e.fold;
    b.hopf = hopf_flag;
    if (hopf_flag) b.hopf_omega = omega_of(e.eigenvalues);
    return b;
  };

  std::vector<BranchPoint> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      double a = grid[k - 1], b = grid[k];
      // LP: sign change of the I-V slope
      double da = di_infty(m, a, 1), db = di_infty(m, b, 1);
      if ((da < 0) != (db < 0)) {
        double vlp = bisect_full([&](double V) { return di_infty(m, V, 1); }, a, b, da);
        if (vlp > a && vlp < b) out.push_back(make_point(vlp, false));
      }
      // Hopf: a complex pair's max real part crosses zero
      double mua = mu_of(eig_at(a)), mub = mu_of(eig_at(b));
      if (std::isfinite(mua) && std::isfinite(mub) && (mua < 0) != (mub < 0)) {
        double lo = a, hi = b, flo = mua;
        while (hi - lo > 1e-6) {
          double c = 0.5 * (lo + hi), fc = mu_of(eig_at(c));
          if (std::isnan(fc)) break;
          if ((flo < 0) != (fc < 0))
            hi = c;
          else {
            lo = c;
            flo = fc;
          }
        }
        double vh = 0.5 * (lo + hi);
        if (vh > a && vh < b) out.push_back(make_point(vh, true));
      }
    }
    out.push_back(make_point(grid[k], false));
  }
  std::sort(out.begin(), out.end(),
            [](const BranchPoint& x, const BranchPoint& y) { return x.V < y.V; });
  return out;
}

std::vector<FoldPoint> fold_curve(const NeuronModel& m, const std::vector<double>& V_grid) {
  std::vector<double> grid = V_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<FoldPoint> out;
  for (double V : grid) {
    AuxFunctions a = aux_functions(m, V);
    if (std::abs(a.X1) < 1e-12) continue;
    FoldPoint p;
    p.V = V;
    p.g_m = (a.X2 - m.g_leak) / a.X1;
    p.i_app = u_of_v(m.with_gm(p.g_m), V);
    out.push_back(p);
  }
  return out;
}

}  // namespace neurobt

// python bindings for the main operations: model building, equilibria,
// closed-form detection, normal form, branch diagrams, simulation probes,
// coupled-pair synchronization, and the acceptance suite
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <neurobt/bifurcation.hpp>
#include <neurobt/coupling.hpp>
#include <neurobt/dynamics.hpp>
#include <neurobt/validate.hpp>

namespace py = pybind11;
using namespace neurobt;

namespace {

Eigen::MatrixXd trace_matrix(const Trace& tr) {
  Eigen::MatrixXd Y(tr.y.size(), tr.y.empty() ? 0 : tr.y.front().size());
  for (size_t i = 0; i < tr.y.size(); ++i) Y.row(i) = tr.y[i];
  return Y;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "closed-form double-zero / cusp / degenerate-point detection and "
      "simulation probes for conductance-based neurons with an M-current";
  mod.attr("__version__") = "0.1.0";

  py::register_exception<NumericalError>(mod, "NumericalError",
                                         PyExc_RuntimeError);
  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(mod, "ExprParseError", PyExc_ValueError);

  py::enum_<Stability>(mod, "Stability")
      .value("stable", Stability::Stable)
      .value("saddle", Stability::Saddle)
      .value("unstable", Stability::Unstable);
  py::enum_<BifKind>(mod, "BifKind")
      .value("BT", BifKind::BT)
      .value("CP", BifKind::CP)
      .value("BTC", BifKind::BTC);
  py::enum_<ExcitabilityClass>(mod, "ExcitabilityClass")
      .value("I", ExcitabilityClass::I)
      .value("II", ExcitabilityClass::II)
      .value("undetermined", ExcitabilityClass::Undetermined);
  py::enum_<SyncClass>(mod, "SyncClass")
      .value("in_phase", SyncClass::InPhase)
      .value("anti_phase", SyncClass::AntiPhase)
      .value("out_of_phase", SyncClass::OutOfPhase)
      .value("non_locking", SyncClass::NonLocking);
  py::enum_<Method>(mod, "Method")
      .value("rk45", Method::RK45)
      .value("rk4", Method::RK4);

  py::class_<NeuronModel>(mod, "NeuronModel")
      .def_readonly("capacitance", &NeuronModel::capacitance)
      .def_readonly("g_leak", &NeuronModel::g_leak)
      .def_readonly("e_leak", &NeuronModel::e_leak)
      .def_readonly("g_m", &NeuronModel::g_m)
      .def_readonly("e_k", &NeuronModel::e_k)
      .def_readonly("i_app", &NeuronModel::i_app)
      .def_readonly("window_lo", &NeuronModel::window_lo)
      .def_readonly("window_hi", &NeuronModel::window_hi)
      .def_property_readonly("dim", &NeuronModel::dim)
      .def("with_gm", &NeuronModel::with_gm, py::arg("gm"))
      .def("with_gl", &NeuronModel::with_gl, py::arg("gl"))
      .def("with_iapp", &NeuronModel::with_iapp, py::arg("iapp"))
      .def("steady_state", &NeuronModel::steady_state, py::arg("V"))
      .def("rhs", &NeuronModel::rhs, py::arg("state"))
      .def("rhs_scaled", &NeuronModel::rhs_scaled, py::arg("state"))
      .def("jacobian", &NeuronModel::jacobian, py::arg("state"))
      .def("to_json", [](const NeuronModel& m) { return model_to_json_text(m); })
      .def("__repr__", [](const NeuronModel& m) {
        return "<NeuronModel dim=" + std::to_string(m.dim()) +
               " g_m=" + std::to_string(m.g_m) + ">";
      });

  mod.def("preset", &preset, py::arg("name"),
          "built-in model: wang-buzsaki | stiefel | rtm");
  mod.def("preset_names", &preset_names);
  mod.def("model_from_json", &model_from_json_text, py::arg("text"));
  mod.def("model_from_json_file", &model_from_json_file, py::arg("path"));

  py::class_<Equilibrium>(mod, "Equilibrium")
      .def_readonly("V", &Equilibrium::V)
      .def_readonly("state", &Equilibrium::state)
      .def_readonly("i_app", &Equilibrium::i_app)
      .def_readonly("eigenvalues", &Equilibrium::eigenvalues)
      .def_readonly("stability", &Equilibrium::stability)
      .def_readonly("fold", &Equilibrium::fold)
      .def("__repr__", [](const Equilibrium& e) {
        return "<Equilibrium V=" + std::to_string(e.V) + " " +
               std::string(to_string(e.stability)) + ">";
      });

  mod.def("u_of_v", &u_of_v, py::arg("model"), py::arg("V"));
  mod.def("i_infty", &i_infty, py::arg("model"), py::arg("V"));
  mod.def("di_infty", &di_infty, py::arg("model"), py::arg("V"),
          py::arg("order") = 1);
  mod.def(
      "find_equilibria",
      [](const NeuronModel& m) { return find_equilibria(m); },
      py::arg("model"));
  mod.def(
      "find_equilibria",
      [](const NeuronModel& m, double i) { return find_equilibria(m, i); },
      py::arg("model"), py::arg("i_app"));
  mod.def("make_equilibrium", &make_equilibrium, py::arg("model"),
          py::arg("V"));
  mod.def("rest_state", &rest_state, py::arg("model"));

  py::class_<AuxFunctions>(mod, "AuxFunctions")
      .def_readonly("X1", &AuxFunctions::X1)
      .def_readonly("X2", &AuxFunctions::X2)
      .def_readonly("Y1", &AuxFunctions::Y1)
      .def_readonly("Y2", &AuxFunctions::Y2)
      .def_readonly("Z1", &AuxFunctions::Z1)
      .def_readonly("Z2", &AuxFunctions::Z2);
  mod.def("aux_functions", &aux_functions, py::arg("model"), py::arg("V"));

  py::class_<BifPoint>(mod, "BifPoint")
      .def_readonly("kind", &BifPoint::kind)
      .def_readonly("V", &BifPoint::V)
      .def_readonly("g_m", &BifPoint::g_m)
      .def_readonly("i_app", &BifPoint::i_app)
      .def_readonly("g_l", &BifPoint::g_l)
      .def_readonly("biophysical", &BifPoint::biophysical)
      .def_readonly("res_phi", &BifPoint::res_phi)
      .def_readonly("res_1", &BifPoint::res_1)
      .def_readonly("res_2", &BifPoint::res_2)
      .def_readonly("alpha2", &BifPoint::alpha2)
      .def_readonly("beta2", &BifPoint::beta2)
      .def("__repr__", [](const BifPoint& p) {
        return "<BifPoint " + std::string(to_string(p.kind)) +
               " V=" + std::to_string(p.V) + " g_m=" + std::to_string(p.g_m) +
               " i_app=" + std::to_string(p.i_app) + ">";
      });

  mod.def(
      "find_bt", [](const NeuronModel& m) { return find_bt(m); },
      py::arg("model"));
  mod.def(
      "find_cusp", [](const NeuronModel& m) { return find_cusp(m); },
      py::arg("model"));
  mod.def(
      "find_btc", [](const NeuronModel& m) { return find_btc(m); },
      py::arg("model"));
  mod.def("at_point", &at_point, py::arg("model"), py::arg("point"));

  py::class_<BTEigvectors>(mod, "BTEigvectors")
      .def_readonly("q0", &BTEigvectors::q0)
      .def_readonly("q1", &BTEigvectors::q1)
      .def_readonly("p0", &BTEigvectors::p0)
      .def_readonly("p1", &BTEigvectors::p1);
  mod.def("bt_eigvectors", &bt_eigvectors, py::arg("jacobian"));

  py::class_<NormalForm>(mod, "NormalForm")
      .def_readonly("alpha2", &NormalForm::alpha2)
      .def_readonly("beta2", &NormalForm::beta2)
      .def_readonly("h20", &NormalForm::h20);
  mod.def("normal_form_coeffs", &normal_form_coeffs, py::arg("model"),
          py::arg("bt_point"));

  py::class_<BranchPoint>(mod, "BranchPoint")
      .def_readonly("V", &BranchPoint::V)
      .def_readonly("i_app", &BranchPoint::i_app)
      .def_readonly("eigenvalues", &BranchPoint::eigenvalues)
      .def_readonly("stability", &BranchPoint::stability)
      .def_readonly("lp", &BranchPoint::lp)
      .def_readonly("hopf", &BranchPoint::hopf)
      .def_readonly("hopf_omega", &BranchPoint::hopf_omega);
  mod.def("branch", &branch, py::arg("model"), py::arg("v_grid"));

  py::class_<FoldPoint>(mod, "FoldPoint")
      .def_readonly("V", &FoldPoint::V)
      .def_readonly("g_m", &FoldPoint::g_m)
      .def_readonly("i_app", &FoldPoint::i_app);
  mod.def("fold_curve", &fold_curve, py::arg("model"), py::arg("v_grid"));

  py::class_<IntegrateOptions>(mod, "IntegrateOptions")
      .def(py::init<>())
      .def_readwrite("method", &IntegrateOptions::method)
      .def_readwrite("atol", &IntegrateOptions::atol)
      .def_readwrite("rtol", &IntegrateOptions::rtol)
      .def_readwrite("sample_dt", &IntegrateOptions::sample_dt)
      .def_readwrite("max_step", &IntegrateOptions::max_step)
      .def_readwrite("fixed_step", &IntegrateOptions::fixed_step);

  py::class_<Trace>(mod, "Trace")
      .def_readonly("t", &Trace::t)
      .def_readonly("steps", &Trace::steps)
      .def_readonly("rejected", &Trace::rejected)
      .def_property_readonly("y", &trace_matrix,
                             "samples as a (len(t), dim) matrix");

  mod.def("integrate",
          py::overload_cast<const NeuronModel&, const Eigen::VectorXd&, double,
                            const IntegrateOptions&>(&integrate),
          py::arg("model"), py::arg("init"), py::arg("t_end"),
          py::arg("options") = IntegrateOptions{});
  mod.def("detect_spikes", &detect_spikes, py::arg("trace"),
          py::arg("threshold") = 0.0, py::arg("v_index") = 0,
          py::arg("refractory_ms") = 1.0);
  mod.def("firing_frequency", &firing_frequency, py::arg("trace"),
          py::arg("threshold") = 0.0, py::arg("v_index") = 0);

  py::class_<FIProtocol>(mod, "FIProtocol")
      .def(py::init<>())
      .def_readwrite("t_per_point", &FIProtocol::t_per_point)
      .def_readwrite("integ", &FIProtocol::integ);

  py::class_<FIPoint>(mod, "FIPoint")
      .def_readonly("i_app", &FIPoint::i_app)
      .def_readonly("freq", &FIPoint::freq)
      .def_readonly("fired", &FIPoint::fired);
  py::class_<FICurve>(mod, "FICurve")
      .def_readonly("up", &FICurve::up)
      .def_readonly("down", &FICurve::down)
      .def_readonly("onset_current", &FICurve::onset_current)
      .def_readonly("onset_frequency", &FICurve::onset_frequency)
      .def_readonly("down_onset_current", &FICurve::down_onset_current)
      .def_readonly("excitability", &FICurve::excitability);
  mod.def("fi_curve", &fi_curve, py::arg("model"), py::arg("i_grid"),
          py::arg("protocol") = FIProtocol{},
          py::call_guard<py::gil_scoped_release>());

  py::class_<FGMPoint>(mod, "FGMPoint")
      .def_readonly("g_m", &FGMPoint::g_m)
      .def_readonly("freq", &FGMPoint::freq)
      .def_readonly("fired", &FGMPoint::fired);
  py::class_<FGMCurve>(mod, "FGMCurve")
      .def_readonly("points", &FGMCurve::points)
      .def_readonly("monotone_decreasing", &FGMCurve::monotone_decreasing);
  mod.def("f_gm_curve", &f_gm_curve, py::arg("model"), py::arg("i_fixed"),
          py::arg("gm_grid"), py::arg("protocol") = FIProtocol{},
          py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());

  py::class_<SynapseSpec>(mod, "SynapseSpec")
      .def_readonly("name", &SynapseSpec::name)
      .def_readonly("g_syn", &SynapseSpec::g_syn)
      .def_readonly("v_syn", &SynapseSpec::v_syn)
      .def_readonly("a_e0", &SynapseSpec::a_e0)
      .def_readonly("tau_s", &SynapseSpec::tau_s)
      .def("with_gsyn", &SynapseSpec::with_gsyn, py::arg("g"));
  mod.def("synapse_preset", &synapse_preset, py::arg("name"));
  mod.def("synapse_preset_names", &synapse_preset_names);

  py::class_<CoupledPair>(mod, "CoupledPair")
      .def(py::init<const NeuronModel&, const SynapseSpec&>(),
           py::arg("model"), py::arg("synapse"))
      .def_property_readonly("dim", &CoupledPair::dim)
      .def("v_index", &CoupledPair::v_index, py::arg("neuron"))
      .def("s_index", &CoupledPair::s_index, py::arg("neuron"))
      .def("initial_state", &CoupledPair::initial_state, py::arg("v1"),
           py::arg("v2"))
      .def("simulate", &CoupledPair::simulate, py::arg("init"),
           py::arg("t_end"), py::arg("options") = IntegrateOptions{},
           py::call_guard<py::gil_scoped_release>());

  py::class_<PhaseEstimate>(mod, "PhaseEstimate")
      .def_readonly("phi", &PhaseEstimate::phi)
      .def_readonly("t1", &PhaseEstimate::t1)
      .def_readonly("t2", &PhaseEstimate::t2);
  mod.def("phase_shift", &phase_shift, py::arg("trace"), py::arg("v1"),
          py::arg("v2"), py::arg("threshold") = 0.0,
          py::arg("window_frac") = 0.2);
  mod.def("classify_phase", &classify_phase, py::arg("phi"));

  py::class_<SyncTrial>(mod, "SyncTrial")
      .def_readonly("trial", &SyncTrial::trial)
      .def_readonly("v1_init", &SyncTrial::v1_init)
      .def_readonly("v2_init", &SyncTrial::v2_init)
      .def_readonly("locked", &SyncTrial::locked)
      .def_readonly("phi", &SyncTrial::phi)
      .def_readonly("t1", &SyncTrial::t1)
      .def_readonly("t2", &SyncTrial::t2)
      .def_readonly("error", &SyncTrial::error);
  py::class_<PhiCluster>(mod, "PhiCluster")
      .def_readonly("phi", &PhiCluster::phi)
      .def_readonly("count", &PhiCluster::count);
  mod.def("cluster_phases", &cluster_phases, py::arg("phis"), py::arg("tol"));
  py::class_<SyncResult>(mod, "SyncResult")
      .def_readonly("g_m", &SyncResult::g_m)
      .def_readonly("trials", &SyncResult::trials)
      .def_readonly("clusters", &SyncResult::clusters)
      .def_readonly("classification", &SyncResult::classification);
  py::class_<SyncProtocol>(mod, "SyncProtocol")
      .def(py::init<>())
      .def_readwrite("t_sim", &SyncProtocol::t_sim)
      .def_readwrite("n_init", &SyncProtocol::n_init)
      .def_readwrite("seed", &SyncProtocol::seed)
      .def_readwrite("threshold", &SyncProtocol::threshold)
      .def_readwrite("cluster_tol", &SyncProtocol::cluster_tol)
      .def_readwrite("threads", &SyncProtocol::threads)
      .def_readwrite("integ", &SyncProtocol::integ);
  mod.def("sync_sweep", &sync_sweep, py::arg("model"), py::arg("synapse"),
          py::arg("gm_grid"), py::arg("protocol") = SyncProtocol{},
          py::call_guard<py::gil_scoped_release>());

  py::class_<CriterionResult>(mod, "CriterionResult")
      .def_readonly("id", &CriterionResult::id)
      .def_readonly("name", &CriterionResult::name)
      .def_readonly("ok", &CriterionResult::pass)
      .def_readonly("detail", &CriterionResult::detail)
      .def_readonly("ms", &CriterionResult::ms);
  py::class_<AcceptanceOptions>(mod, "AcceptanceOptions")
      .def(py::init<>())
      .def_readwrite("fast", &AcceptanceOptions::fast)
      .def_readwrite("slow", &AcceptanceOptions::slow)
      .def_readwrite("criteria", &AcceptanceOptions::criteria)
      .def_readwrite("threads", &AcceptanceOptions::threads);
  mod.def("run_acceptance", &run_acceptance,
          py::arg("options") = AcceptanceOptions{},
          py::call_guard<py::gil_scoped_release>());
}

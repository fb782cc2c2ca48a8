#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "quenchsig/bloch.hpp"
#include "quenchsig/free_fermion.hpp"
#include "quenchsig/indicators.hpp"
#include "quenchsig/interacting.hpp"
#include "quenchsig/scenario.hpp"
#include "quenchsig/selftest.hpp"

namespace py = pybind11;
using namespace quenchsig;

namespace {

py::array_t<double> as_array(const BlochVector3& d) {
  py::array_t<double> a(3);
  auto m = a.mutable_unchecked<1>();
  m(0) = d.x;
  m(1) = d.y;
  m(2) = d.z;
  return a;
}

// Python's (rng seed) -> protocol draws.
QuenchProtocol random_draw(std::uint64_t seed, bool chiral, int max_order) {
  std::mt19937_64 rng(seed);
  return chiral ? random_chiral_protocol(rng, max_order) : random_protocol(rng, max_order);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "quench dynamics and topology diagnostics of two-band chains";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<GaplessError>(m, "GaplessError", numerical.ptr());

  py::enum_<Boundary>(m, "Boundary").value("periodic", Boundary::periodic).value("open", Boundary::open);

  py::class_<BlochFunction>(m, "BlochFunction")
      .def_static("constant", &BlochFunction::constant, py::arg("beta"), py::arg("alpha"), py::arg("J") = 1.0)
      .def_static("ssh_circle", &BlochFunction::ssh_circle, py::arg("J_x"))
      .def_static("rice_mele", &BlochFunction::rice_mele, py::arg("alpha"), py::arg("J") = 1.0)
      .def_static("dispersive", &BlochFunction::dispersive, py::arg("delta"), py::arg("alpha"), py::arg("J") = 1.0)
      .def_static("kitaev", &BlochFunction::kitaev, py::arg("J"), py::arg("U"))
      .def_static("interacting_ssh", &BlochFunction::interacting_ssh, py::arg("J"), py::arg("J_prime") = 0.0)
      .def_static("from_family", &BlochFunction::from_family, py::arg("family"), py::arg("params"))
      .def("__call__", [](const BlochFunction& f, double k) { return as_array(f(k)); })
      .def("min_norm", &BlochFunction::min_norm, py::arg("n_k") = 1024)
      .def_property_readonly("family", &BlochFunction::family)
      .def_property_readonly("order", &BlochFunction::order);

  py::class_<QuenchProtocol>(m, "QuenchProtocol")
      .def(py::init([](BlochFunction pre, BlochFunction post, std::string label) {
             return QuenchProtocol{std::move(pre), std::move(post), std::move(label)};
           }),
           py::arg("pre"), py::arg("post"), py::arg("label") = "")
      .def_readonly("pre", &QuenchProtocol::pre)
      .def_readonly("post", &QuenchProtocol::post)
      .def_readonly("label", &QuenchProtocol::label)
      .def("reversed", &QuenchProtocol::reversed);

  m.def("make_protocol", &make_protocol, py::arg("family"), py::arg("params"), py::arg("allow_gapless") = false);
  m.def("random_protocol", &random_draw, py::arg("seed"), py::arg("chiral") = false, py::arg("max_order") = 2);
  m.def("momentum_grid", &momentum_grid, py::arg("n_k"));
  m.def("parent_bloch", [](const QuenchProtocol& q, double k, double t) { return as_array(parent_bloch(q, k, t)); },
        py::arg("protocol"), py::arg("k"), py::arg("t"));
  m.def("period_at", &period_at, py::arg("protocol"), py::arg("k"));
  m.def("parent_period", &parent_period, py::arg("protocol"));

  py::class_<ParentCoefficients>(m, "ParentCoefficients")
      .def_readonly("eta", &ParentCoefficients::eta)
      .def_readonly("epsilon", &ParentCoefficients::epsilon)
      .def_readonly("delta", &ParentCoefficients::delta)
      .def_readonly("m", &ParentCoefficients::m)
      .def_readonly("m_c", &ParentCoefficients::m_c)
      .def_readonly("m_s", &ParentCoefficients::m_s);
  m.def("parent_coefficients", &parent_coefficients, py::arg("alpha"), py::arg("beta"), py::arg("J"), py::arg("t"));

  // indicators
  m.def("gamma", &quenchsig::gamma, py::arg("protocol"), py::arg("k"));
  m.def("rate_function", [](const QuenchProtocol& q, double t, int n_k) { return rate_function(q, t, n_k).f; },
        py::arg("protocol"), py::arg("t"), py::arg("n_k") = 1024);
  m.def(
      "rate_curve",
      [](const QuenchProtocol& q, const std::vector<double>& times, int n_k) {
        auto c = rate_curve(q, times, n_k);
        return py::array_t<double>(static_cast<py::ssize_t>(c.values.size()), c.values.data());
      },
      py::arg("protocol"), py::arg("times"), py::arg("n_k") = 1024);

  py::class_<DqptEvent>(m, "DqptEvent")
      .def_readonly("k_star", &DqptEvent::k_star)
      .def_readonly("t_star", &DqptEvent::t_star)
      .def("__repr__", [](const DqptEvent& e) {
        return "DqptEvent(k_star=" + std::to_string(e.k_star) + ", t_star=" + std::to_string(e.t_star) + ")";
      });
  m.def("dqpt_times", &dqpt_times, py::arg("protocol"), py::arg("t_max"), py::arg("n_k") = 1024);
  m.def("critical_momenta", &critical_momenta, py::arg("protocol"), py::arg("n_k") = 1024);

  py::class_<FixedMomentum>(m, "FixedMomentum")
      .def_readonly("k", &FixedMomentum::k)
      .def_readonly("parallel", &FixedMomentum::parallel);
  py::class_<DcnSegment>(m, "DcnSegment")
      .def_readonly("k_lo", &DcnSegment::k_lo)
      .def_readonly("k_hi", &DcnSegment::k_hi)
      .def_readonly("numeric", &DcnSegment::numeric)
      .def_readonly("analytic", &DcnSegment::analytic);
  py::class_<DcnResult>(m, "DcnResult")
      .def_readonly("segments", &DcnResult::segments)
      .def_readonly("fixed", &DcnResult::fixed);
  m.def("dcn_analytic", &dcn_analytic, py::arg("protocol"));
  m.def("dcn", &dcn, py::arg("protocol"), py::arg("n_k") = 512, py::arg("n_t") = 512);
  m.def("zak_phase", &zak_phase, py::arg("protocol"), py::arg("t"), py::arg("n_k") = 1024);

  // free fermions
  py::class_<EntanglementData>(m, "EntanglementData")
      .def_readonly("xi", &EntanglementData::xi)
      .def_readonly("lambdas", &EntanglementData::lambdas)
      .def_readonly("active_modes", &EntanglementData::active_modes)
      .def_readonly("relative_spread", &EntanglementData::relative_spread)
      .def_readonly("total_spread", &EntanglementData::total_spread)
      .def("degeneracy_order", &EntanglementData::degeneracy_order, py::arg("tol") = 1e-6);
  m.def("momentum_entanglement_spectrum", &momentum_entanglement_spectrum, py::arg("protocol"), py::arg("L"),
        py::arg("cut"), py::arg("t"), py::arg("n_lambda") = 16);
  m.def(
      "correlation_matrix", [](const QuenchProtocol& q, int L, double t) { return momentum_correlation(q, L, t).P; },
      py::arg("protocol"), py::arg("L"), py::arg("t"));
  m.def(
      "parent_obc_spectrum",
      [](const QuenchProtocol& q, int L, const std::vector<double>& times) {
        return parent_obc_spectrum(q, L, times).energies;
      },
      py::arg("protocol"), py::arg("L"), py::arg("times"));
  m.def("z2_invariant", &z2_invariant, py::arg("protocol"), py::arg("t"));

  // interacting chain
  m.def("cat_overlap", &cat_overlap, py::arg("L"), py::arg("bc"), py::arg("sign"), py::arg("t"), py::arg("J") = 1.0);
  py::class_<OracleErrors>(m, "OracleErrors")
      .def_readonly("rate", &OracleErrors::rate)
      .def_readonly("es", &OracleErrors::es)
      .def_readonly("two_point", &OracleErrors::two_point);
  m.def("ed_oracle_errors", &ed_oracle_errors, py::arg("protocol"), py::arg("L"), py::arg("bc"), py::arg("t_max"),
        py::arg("n_t"));

  // scenarios
  py::class_<Scenario>(m, "Scenario")
      .def_readonly("family", &Scenario::family)
      .def_readonly("params", &Scenario::params)
      .def_readonly("protocol", &Scenario::protocol)
      .def_readonly("L", &Scenario::L)
      .def_readonly("t_max", &Scenario::t_max)
      .def_readonly("n_t", &Scenario::n_t)
      .def_readonly("tasks", &Scenario::tasks)
      .def_readonly("warnings", &Scenario::warnings);
  m.def("parse_scenario", &parse_scenario, py::arg("path"), py::arg("strict") = true);
  m.def("parse_scenario_text", &parse_scenario_text, py::arg("text"), py::arg("strict") = true,
        py::arg("name") = "scenario");

  py::class_<EscEvent>(m, "EscEvent")
      .def_readonly("t", &EscEvent::t)
      .def_readonly("spread", &EscEvent::spread)
      .def_readonly("order", &EscEvent::order);
  py::class_<RunReport>(m, "RunReport")
      .def_readonly("dqpts", &RunReport::dqpts)
      .def_readonly("escs", &RunReport::escs)
      .def_readonly("ed_crossings", &RunReport::ed_crossings)
      .def_readonly("dcn", &RunReport::dcn)
      .def_readonly("json", &RunReport::json)
      .def_readonly("exit_code", &RunReport::exit_code);
  m.def(
      "run",
      [](const Scenario& s, std::optional<std::filesystem::path> out_dir, bool write_files) {
        RunOptions opts;
        opts.out_dir = std::move(out_dir);
        opts.write_files = write_files;
        py::gil_scoped_release release;
        return run(s, opts);
      },
      py::arg("scenario"), py::arg("out_dir") = py::none(), py::arg("write_files") = true);

  py::class_<PhaseCell>(m, "PhaseCell")
      .def_readonly("alpha", &PhaseCell::alpha)
      .def_readonly("beta", &PhaseCell::beta)
      .def_readonly("dqpt", &PhaseCell::dqpt)
      .def_readonly("esc", &PhaseCell::esc)
      .def_readonly("dcn_max_abs", &PhaseCell::dcn_max_abs)
      .def_readonly("ok", &PhaseCell::ok);
  m.def(
      "classify_alpha_beta",
      [](double alpha, double beta, int L, int points_per_period) {
        ScanConfig cfg;
        cfg.L = L;
        cfg.points_per_period = points_per_period;
        return classify_alpha_beta(alpha, beta, cfg);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("L") = 128, py::arg("points_per_period") = 400);

  py::class_<SelftestCheck>(m, "SelftestCheck")
      .def_readonly("name", &SelftestCheck::name)
      .def_readonly("max_error", &SelftestCheck::max_error)
      .def_readonly("tol", &SelftestCheck::tol)
      .def("passed", &SelftestCheck::passed);
  m.def("run_selftest", &run_selftest, py::arg("seed") = 20240607, py::arg("random_draws") = 4);
}

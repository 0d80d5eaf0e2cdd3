#include "tsfilt/dde.hpp"
#include "tsfilt/error.hpp"
#include "tsfilt/model.hpp"
#include "tsfilt/report.hpp"
#include "tsfilt/synthesis.hpp"
#include "tsfilt/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace tsfilt;

namespace {

py::dict suite_dict(const PropertySuiteResult& r) {
  py::dict d;
  d["trials"] = r.trials;
  d["failures"] = r.failures;
  d["worst_margin"] = r.worst_margin;
  d["tolerance"] = r.tolerance;
  d["passed"] = r.passed();
  return d;
}

py::dict dims_dict(const Dims& d) {
  py::dict out;
  out["n"] = d.n;
  out["m_y"] = d.m_y;
  out["p_w"] = d.p_w;
  out["q"] = d.q;
  return out;
}

}  // namespace

PYBIND11_MODULE(_tsfilt, m) {
  m.doc() = "T-S fuzzy time-delay H-infinity filter synthesis";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<ExtractionError>(m, "ExtractionError", base.ptr());
  py::register_exception<SimulationError>(m, "SimulationError", base.ptr());

  py::class_<TSModel>(m, "Model")
      .def_readonly("name", &TSModel::name)
      .def_property_readonly("dims", [](const TSModel& md) { return dims_dict(md.dims()); })
      .def_property_readonly("plant_rules", &TSModel::plant_rule_count)
      .def_readonly("filter_rules", &TSModel::filter_rule_count)
      .def_property_readonly("h", [](const TSModel& md) { return md.delay.h; })
      .def_property_readonly("rho", [](const TSModel& md) { return md.delay.rho; })
      .def_readonly("upsilon", &TSModel::upsilon)
      .def("rule", [](const TSModel& md, int i) {
        if (i < 0 || i >= md.plant_rule_count()) throw DomainError("plant rule index out of range");
        const auto& r = md.plant_rules[static_cast<std::size_t>(i)];
        py::dict d;
        d["A"] = r.A;
        d["A_tau"] = r.A_tau;
        d["B"] = r.B;
        d["C"] = r.C;
        d["C_tau"] = r.C_tau;
        d["D"] = r.D;
        d["E"] = r.E;
        d["E_tau"] = r.E_tau;
        return d;
      })
      .def("validate", [](const TSModel& md) { validate(md); })
      .def("to_json", [](const TSModel& md) { return serialize(md).dump(2); })
      .def("__eq__", [](const TSModel& a, const TSModel& b) { return a == b; })
      .def("__repr__", [](const TSModel& md) {
        return "<tsfilt.Model '" + md.name + "' r=" + std::to_string(md.plant_rule_count()) +
               " c=" + std::to_string(md.filter_rule_count) + ">";
      });

  m.def("load_model", &load_model_file, py::arg("path"));
  m.def("loads_model", &load_model_text, py::arg("text"));

  m.def(
      "membership_bounds",
      [](const TSModel& md, std::optional<std::pair<double, double>> domain, std::optional<int> grid) {
        const Interval dom = domain ? Interval{domain->first, domain->second} : md.bounds.domain;
        const auto b = membership_product_bounds(md, dom, grid.value_or(md.bounds.grid_density),
                                                 md.bounds.include_asymptotes);
        return py::make_tuple(b.d_lower, b.d_upper);
      },
      py::arg("model"), py::arg("domain") = py::none(), py::arg("grid") = py::none());

  m.def(
      "evaluate_memberships",
      [](const TSModel& md, double t) {
        const auto w = evaluate_memberships(md, t);
        return py::make_tuple(w.plant, w.filter);
      },
      py::arg("model"), py::arg("t"));

  py::class_<FilterRealization>(m, "Filter")
      .def_readonly("A_f", &FilterRealization::A_f)
      .def_readonly("B_f", &FilterRealization::B_f)
      .def_readonly("C_f", &FilterRealization::C_f)
      .def_readonly("gamma", &FilterRealization::gamma)
      .def_readonly("theorem", &FilterRealization::theorem_used)
      .def_readonly("m22_condition", &FilterRealization::m22_condition)
      .def_property_readonly("rules", &FilterRealization::rule_count);

  m.def(
      "extract_filter",
      [](const Matrix& M22t, const std::vector<Matrix>& A, const std::vector<Matrix>& B, const std::vector<Matrix>& C,
         double max_condition) { return extract_filter(M22t, A, B, C, max_condition); },
      py::arg("M22t"), py::arg("A_scr"), py::arg("B_scr"), py::arg("C_scr"), py::arg("max_condition") = 1e12);

  // Report documents cross the boundary as JSON text; the Python wrapper parses them.
  m.def(
      "_synthesize",
      [](const TSModel& md, int theorem, std::optional<double> h, std::optional<double> upsilon,
         std::optional<double> rho, const std::string& delay_term, int verify_grid) {
        SynthesisOptions opt;
        opt.theorem = theorem;
        opt.h = h;
        opt.upsilon = upsilon;
        opt.rho = rho;
        opt.delay_term = delay_term_from_string(delay_term);
        opt.verify_grid = verify_grid;
        SynthesisReport rep;
        {
          py::gil_scoped_release release;
          rep = synthesize(md, opt);
        }
        return report_to_json(rep).dump();
      },
      py::arg("model"), py::arg("theorem") = 2, py::arg("h") = py::none(), py::arg("upsilon") = py::none(),
      py::arg("rho") = py::none(), py::arg("delay_term") = "derived", py::arg("verify_grid") = 2001);

  m.def(
      "_filter_from_report",
      [](const std::string& text) { return filter_from_report(report_from_json(nlohmann::json::parse(text))); },
      py::arg("report_json"));

  m.def(
      "simulate",
      [](const TSModel& md, const FilterRealization& f, const std::string& scenario, std::uint64_t seed,
         std::optional<double> horizon, std::optional<double> step) {
        auto opt = scenario_options(md, scenario, seed);
        if (horizon) opt.horizon = *horizon;
        if (step) opt.step = *step;
        SimulationTrace tr;
        {
          py::gil_scoped_release release;
          tr = simulate(md, f, opt);
        }
        py::dict d;
        d["t"] = tr.t;
        d["zeta"] = tr.zeta;
        d["z"] = tr.z;
        d["zf"] = tr.zf;
        d["e"] = tr.e;
        d["w"] = tr.w;
        d["tau"] = tr.tau;
        d["terminal_norm_ratio"] = tr.zeta.row(0).norm() > 0.0 ? py::cast(terminal_norm_ratio(tr)) : py::none();
        d["gain"] = tr.energy_w.back() > 0.0 ? py::cast(empirical_gain(tr)) : py::none();
        return d;
      },
      py::arg("model"), py::arg("filter"), py::arg("scenario") = "decaying-sine", py::arg("seed") = 1,
      py::arg("horizon") = py::none(), py::arg("step") = py::none());

  m.def("scenario_names", &scenario_names);

  m.def("integral_inequality_suite", [](int trials, std::uint64_t seed) { return suite_dict(run_integral_suite(trials, seed)); },
        py::arg("trials") = 1000, py::arg("seed") = 1);
  m.def("upsilon_relaxation_suite", [](int trials, std::uint64_t seed) { return suite_dict(run_upsilon_suite(trials, seed)); },
        py::arg("trials") = 500, py::arg("seed") = 1);
  m.def("upsilon_relaxation_gap", &check_upsilon_relaxation, py::arg("O"), py::arg("M"), py::arg("upsilon"));
}

#include "tsfilt/report.hpp"

#include "tsfilt/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace tsfilt {

using nlohmann::json;

std::string delay_term_name(DelayTerm t) { return t == DelayTerm::Derived ? "derived" : "printed"; }

DelayTerm delay_term_from_string(const std::string& s) {
  if (s == "derived") return DelayTerm::Derived;
  if (s == "printed") return DelayTerm::Printed;
  throw ValidationError("delay term must be 'derived' or 'printed', got '" + s + "'");
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

SolveStatus status_from_string(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::NumericalFailure,
                  SolveStatus::IterationLimit}) {
    if (to_string(st) == s) return st;
  }
  throw ValidationError("unknown solver status '" + s + "'");
}

}  // namespace

json report_to_json(const SynthesisReport& r) {
  json doc;
  doc["model"] = r.model_name;
  doc["theorem"] = r.theorem;
  doc["settings"] = {{"h", r.settings.h},
                     {"rho", r.settings.rho},
                     {"upsilon", r.settings.upsilon},
                     {"delay_term", delay_term_name(r.settings.delay_term)},
                     {"strict_margin", r.settings.strict_margin}};
  doc["status"] = to_string(r.status);
  doc["feasible"] = r.feasible;
  doc["gamma"] = r.feasible ? json(r.gamma) : json(nullptr);
  doc["g"] = r.feasible ? json(r.g) : json(nullptr);
  const auto& s = r.solution;
  doc["solver"] = {{"iterations", s.iterations},
                   {"objective", finite_or_null(s.objective_value)},
                   {"relative_gap", finite_or_null(s.relative_gap)},
                   {"primal_infeasibility", finite_or_null(s.primal_infeasibility)},
                   {"dual_infeasibility", finite_or_null(s.dual_infeasibility)},
                   {"max_constraint_eigenvalue", finite_or_null(s.max_constraint_eigenvalue)},
                   {"min_positive_eigenvalue", finite_or_null(s.min_positive_eigenvalue)},
                   {"diagnostic", s.diagnostic},
                   {"seconds", r.solve_seconds},
                   {"scalar_variables", r.scalar_variables},
                   {"constraints", r.constraint_count}};
  json cons = json::array();
  for (const auto& c : r.certificate.constraints) {
    cons.push_back({{"label", c.label},
                    {"sense", c.sense == Sense::NegativeDefinite ? "<" : ">"},
                    {"strict", c.strict},
                    {"extreme_eigenvalue", finite_or_null(c.extreme_eigenvalue)},
                    {"margin", finite_or_null(c.margin)},
                    {"satisfied", c.satisfied}});
  }
  doc["certificate"] = {{"all_satisfied", r.certificate.all_satisfied},
                        {"max_negative_constraint_eigenvalue",
                         finite_or_null(r.certificate.max_negative_constraint_eigenvalue)},
                        {"min_positive_constraint_eigenvalue",
                         finite_or_null(r.certificate.min_positive_constraint_eigenvalue)},
                        {"constraints", cons}};
  if (r.bounds) {
    doc["bounds"] = {{"d_lower", matrix_to_json(r.bounds->d_lower)},
                     {"d_upper", matrix_to_json(r.bounds->d_upper)},
                     {"domain", {r.bounds->domain_used.lo, r.bounds->domain_used.hi}},
                     {"grid_density", r.bounds->grid_density}};
  }
  if (r.grid) {
    doc["grid_check"] = {{"points", r.grid->points},
                         {"max_eigenvalue", finite_or_null(r.grid->max_eigenvalue)},
                         {"worst_plant_premise", r.grid->worst_plant_premise},
                         {"worst_filter_premise", r.grid->worst_filter_premise},
                         {"passed", r.grid->passed}};
  }
  if (r.filter) {
    json rules = json::array();
    for (int j = 0; j < r.filter->rule_count(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      rules.push_back({{"A_f", matrix_to_json(r.filter->A_f[k])},
                       {"B_f", matrix_to_json(r.filter->B_f[k])},
                       {"C_f", matrix_to_json(r.filter->C_f[k])}});
    }
    doc["filter"] = {{"rules", rules},
                     {"gamma", r.filter->gamma},
                     {"theorem", r.filter->theorem_used},
                     {"m22_condition", r.filter->m22_condition}};
  }
  json vars = json::object();
  for (const auto& [name, value] : r.variables) vars[name] = matrix_to_json(value);
  doc["variables"] = vars;
  doc["notes"] = r.notes;
  return doc;
}

SynthesisReport report_from_json(const json& doc) {
  SynthesisReport r;
  try {
    r.model_name = doc.value("model", std::string());
    r.theorem = doc.at("theorem").get<int>();
    const auto& st = doc.at("settings");
    r.settings.h = st.at("h").get<double>();
    r.settings.rho = st.at("rho").get<double>();
    r.settings.upsilon = st.at("upsilon").get<double>();
    r.settings.delay_term = delay_term_from_string(st.value("delay_term", std::string("derived")));
    r.settings.strict_margin = st.value("strict_margin", 1e-7);
    r.status = status_from_string(doc.at("status").get<std::string>());
    r.feasible = doc.at("feasible").get<bool>();
    r.gamma = number_or_nan(doc, "gamma");
    r.g = number_or_nan(doc, "g");
    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      r.solution.status = r.status;
      r.solution.iterations = s.value("iterations", 0);
      r.solution.objective_value = number_or_nan(s, "objective");
      r.solution.relative_gap = number_or_nan(s, "relative_gap");
      r.solution.primal_infeasibility = number_or_nan(s, "primal_infeasibility");
      r.solution.dual_infeasibility = number_or_nan(s, "dual_infeasibility");
      r.solution.max_constraint_eigenvalue = number_or_nan(s, "max_constraint_eigenvalue");
      r.solution.min_positive_eigenvalue = number_or_nan(s, "min_positive_eigenvalue");
      r.solution.diagnostic = s.value("diagnostic", std::string());
      r.solve_seconds = s.value("seconds", 0.0);
      r.scalar_variables = s.value("scalar_variables", 0);
      r.constraint_count = s.value("constraints", 0);
    }
    if (doc.contains("certificate")) {
      const auto& c = doc.at("certificate");
      r.certificate.all_satisfied = c.value("all_satisfied", false);
      r.certificate.max_negative_constraint_eigenvalue = number_or_nan(c, "max_negative_constraint_eigenvalue");
      r.certificate.min_positive_constraint_eigenvalue = number_or_nan(c, "min_positive_constraint_eigenvalue");
      const json cons = c.value("constraints", json::array());
      for (const auto& e : cons) {
        ConstraintMargin m;
        m.label = e.at("label").get<std::string>();
        m.sense = e.at("sense").get<std::string>() == "<" ? Sense::NegativeDefinite : Sense::PositiveDefinite;
        m.strict = e.value("strict", true);
        m.extreme_eigenvalue = number_or_nan(e, "extreme_eigenvalue");
        m.margin = number_or_nan(e, "margin");
        m.satisfied = e.value("satisfied", false);
        r.certificate.constraints.push_back(m);
      }
    }
    if (doc.contains("bounds")) {
      const auto& b = doc.at("bounds");
      MembershipBounds mb;
      mb.d_lower = matrix_from_json(b.at("d_lower"), "bounds.d_lower");
      mb.d_upper = matrix_from_json(b.at("d_upper"), "bounds.d_upper");
      const auto dom = b.at("domain").get<std::vector<double>>();
      if (dom.size() != 2) throw ValidationError("report bounds.domain must be [lo, hi]");
      mb.domain_used = {dom[0], dom[1]};
      mb.grid_density = b.value("grid_density", 0);
      r.bounds = mb;
    }
    if (doc.contains("grid_check")) {
      const auto& g = doc.at("grid_check");
      GridCheck gc;
      gc.points = g.value("points", 0);
      gc.max_eigenvalue = number_or_nan(g, "max_eigenvalue");
      gc.worst_plant_premise = g.value("worst_plant_premise", 0.0);
      gc.worst_filter_premise = g.value("worst_filter_premise", 0.0);
      gc.passed = g.value("passed", false);
      r.grid = gc;
    }
    if (doc.contains("filter") && !doc.at("filter").is_null()) {
      const auto& f = doc.at("filter");
      FilterRealization fr;
      int j = 1;
      for (const auto& rule : f.at("rules")) {
        const std::string where = "filter rule " + std::to_string(j++);
        fr.A_f.push_back(matrix_from_json(rule.at("A_f"), where + " A_f"));
        fr.B_f.push_back(matrix_from_json(rule.at("B_f"), where + " B_f"));
        fr.C_f.push_back(matrix_from_json(rule.at("C_f"), where + " C_f"));
      }
      fr.gamma = f.value("gamma", r.gamma);
      fr.theorem_used = f.value("theorem", r.theorem);
      fr.m22_condition = f.value("m22_condition", 0.0);
      r.filter = fr;
    }
    const json vars = doc.value("variables", json::object());
    for (const auto& [name, value] : vars.items()) {
      r.variables[name] = matrix_from_json(value, "variable " + name);
    }
    r.notes = doc.value("notes", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_report_file(const SynthesisReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write report '" + path.string() + "'");
  os << std::setw(2) << report_to_json(report) << "\n";
}

SynthesisReport read_report_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open report '" + path.string() + "'");
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("report '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return report_from_json(doc);
}

FilterRealization filter_from_report(const SynthesisReport& report) {
  if (!report.filter) throw DomainError("report contains no filter (status " + to_string(report.status) + ")");
  return *report.filter;
}

Vector assignment_from_variables(const LmiVariables& vars, const std::map<std::string, Matrix>& values) {
  const auto& reg = *vars.registry;
  Vector x = Vector::Zero(reg.scalar_count());
  for (int k = 0; k < reg.matrix_count(); ++k) {
    const MatrixVar v{k};
    const auto& info = reg.info(v);
    auto it = values.find(info.name);
    if (it == values.end()) throw DomainError("variable '" + info.name + "' missing");
    if (it->second.rows() != info.rows || it->second.cols() != info.cols) {
      throw DomainError("variable '" + info.name + "' has the wrong shape");
    }
    reg.set_value(v, it->second, x);
  }
  return x;
}

void SweepSpec::validate() const {
  std::vector<std::string> f;
  if (model.empty()) f.push_back("sweep spec: model path is empty");
  if (theorems.empty()) f.push_back("sweep spec: no theorem selected");
  for (int t : theorems) {
    if (t != 1 && t != 2) f.push_back("sweep spec: theorem must be 1, 2 or both");
  }
  if (h_values.empty()) f.push_back("sweep spec: h grid is empty");
  if (upsilon_values.empty()) f.push_back("sweep spec: upsilon grid is empty");
  for (double h : h_values) {
    if (!(h > 0.0)) f.push_back("sweep spec: every h must be > 0");
  }
  for (double u : upsilon_values) {
    if (!(u > 0.0)) f.push_back("sweep spec: every upsilon must be > 0");
  }
  if (rho && !(*rho < 1.0)) f.push_back("sweep spec: delay derivative bound must be < 1");
  if (workers < 0) f.push_back("sweep spec: workers must be >= 0");
  if (!f.empty()) throw ValidationError(f);
}

SweepSpec load_sweep_spec(const json& doc, const std::filesystem::path& base_dir) {
  SweepSpec s;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    s.model = resolve(doc.at("model").get<std::string>());
    const auto& th = doc.at("theorem");
    if (th.is_string()) {
      const auto v = th.get<std::string>();
      if (v == "both") {
        s.theorems = {1, 2};
      } else if (v == "1" || v == "2") {
        s.theorems = {std::stoi(v)};
      } else {
        throw ValidationError("sweep spec: theorem must be 1, 2 or \"both\"");
      }
    } else {
      s.theorems = {th.get<int>()};
    }
    s.h_values = doc.at("h").get<std::vector<double>>();
    s.upsilon_values = doc.at("upsilon").get<std::vector<double>>();
    if (doc.contains("rho") && !doc.at("rho").is_null()) s.rho = doc.at("rho").get<double>();
    if (doc.contains("delay_term")) s.delay_term = delay_term_from_string(doc.at("delay_term").get<std::string>());
    if (doc.contains("output")) s.output = resolve(doc.at("output").get<std::string>());
    if (doc.contains("long_output")) s.long_output = resolve(doc.at("long_output").get<std::string>());
    s.full_precision = doc.value("full_precision", false);
    s.workers = doc.value("workers", 0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep spec: ") + e.what());
  }
  s.validate();
  return s;
}

SweepSpec load_sweep_spec_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open sweep spec '" + path.string() + "'");
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("sweep spec '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return load_sweep_spec(doc, path.parent_path());
}

SweepResult run_sweep(const TSModel& model, const SweepSpec& spec, const SolverOptions& solver) {
  spec.validate();
  SweepResult res;
  for (int th : spec.theorems) {
    for (double u : spec.upsilon_values) {
      for (double h : spec.h_values) res.cells.push_back({th, h, u, SolveStatus::NumericalFailure, 0.0, 0.0, {}});
    }
  }
  SolverOptions opts = solver;
  opts.log = nullptr;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < res.cells.size(); k = next++) {
      auto& cell = res.cells[k];
      SynthesisOptions so;
      so.theorem = cell.theorem;
      so.h = cell.h;
      so.upsilon = cell.upsilon;
      so.rho = spec.rho;
      so.delay_term = spec.delay_term;
      so.solver = opts;
      so.verify_grid = 0;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const auto rep = synthesize(model, so);
        cell.status = rep.status;
        cell.gamma = rep.feasible ? rep.gamma : std::numeric_limits<double>::quiet_NaN();
      } catch (const std::exception& e) {
        cell.status = SolveStatus::NumericalFailure;
        cell.gamma = std::numeric_limits<double>::quiet_NaN();
        cell.error = e.what();
      }
      cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  unsigned n = spec.workers > 0 ? static_cast<unsigned>(spec.workers) : std::thread::hardware_concurrency();
  n = std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(res.cells.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return res;
}

std::string format_gamma(const SweepCell& cell, bool full_precision) {
  if (cell.status == SolveStatus::Infeasible) return "--";
  if (cell.status != SolveStatus::Optimal || !std::isfinite(cell.gamma)) return "fail";
  char buf[64];
  std::snprintf(buf, sizeof buf, full_precision ? "%.17g" : "%.2f", cell.gamma);
  return buf;
}

namespace {

std::string fmt_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void write_sweep_table(const SweepSpec& spec, const SweepResult& result, std::ostream& os) {
  const bool over_h = spec.h_values.size() > 1 || spec.upsilon_values.size() == 1;
  const auto& cols = over_h ? spec.h_values : spec.upsilon_values;
  const char* col_name = over_h ? "h" : "upsilon";
  os << "method";
  for (double v : cols) os << "," << col_name << "=" << fmt_param(v);
  os << "\n";
  std::size_t k = 0;
  for (int th : spec.theorems) {
    if (over_h) {
      for (double u : spec.upsilon_values) {
        os << "Th. " << th;
        if (spec.upsilon_values.size() > 1) os << " (upsilon=" << fmt_param(u) << ")";
        for (std::size_t c = 0; c < spec.h_values.size(); ++c) os << "," << format_gamma(result.cells[k++], spec.full_precision);
        os << "\n";
      }
    } else {
      // Single h, several upsilon: cells are already ordered by upsilon.
      os << "Th. " << th;
      for (std::size_t c = 0; c < spec.upsilon_values.size(); ++c) {
        os << "," << format_gamma(result.cells[k++], spec.full_precision);
      }
      os << "\n";
    }
  }
}

void write_sweep_long(const SweepResult& result, std::ostream& os) {
  os << "theorem,h,upsilon,status,gamma,seconds,error\n";
  for (const auto& c : result.cells) {
    os << c.theorem << "," << fmt_param(c.h) << "," << fmt_param(c.upsilon) << "," << to_string(c.status) << ","
       << format_gamma(c, true) << "," << std::setprecision(4) << c.seconds << std::setprecision(6) << ",\""
       << c.error << "\"\n";
  }
}

}  // namespace tsfilt

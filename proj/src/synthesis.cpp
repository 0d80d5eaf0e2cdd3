#include "tsfilt/synthesis.hpp"

#include "tsfilt/error.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace tsfilt {

Dims FilterRealization::dims() const {
  if (A_f.empty()) return {};
  return {static_cast<int>(A_f[0].rows()), static_cast<int>(B_f[0].cols()), 0, static_cast<int>(C_f[0].rows())};
}

FilterRealization extract_filter(const Matrix& M22t, const std::vector<Matrix>& A_scr,
                                 const std::vector<Matrix>& B_scr, const std::vector<Matrix>& C_scr,
                                 double max_condition) {
  if (A_scr.empty() || A_scr.size() != B_scr.size() || A_scr.size() != C_scr.size()) {
    throw ExtractionError("filter variable lists are empty or of unequal length");
  }
  const Matrix sym = 0.5 * (M22t + M22t.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "M22t is not positive definite (min eigenvalue " << lmin << ")";
    throw ExtractionError(os.str());
  }
  const double cond = lmax / lmin;
  if (!(cond <= max_condition)) {
    std::ostringstream os;
    os << "M22t is numerically singular: condition number " << cond << " exceeds " << max_condition
       << " (eigenvalues " << lmin << ", " << lmax << ")";
    throw ExtractionError(os.str());
  }
  Eigen::LLT<Matrix> llt(sym);
  FilterRealization f;
  f.m22_condition = cond;
  for (std::size_t j = 0; j < A_scr.size(); ++j) {
    f.A_f.push_back(llt.solve(A_scr[j]));
    f.B_f.push_back(llt.solve(B_scr[j]));
    f.C_f.push_back(C_scr[j]);
    if (!f.A_f.back().allFinite() || !f.B_f.back().allFinite() || !f.C_f.back().allFinite()) {
      throw ExtractionError("non-finite filter matrix for rule " + std::to_string(j + 1));
    }
  }
  return f;
}

FilterRealization extract_filter(const LmiVariables& vars, const Vector& x, double max_condition) {
  const auto& reg = *vars.registry;
  if (x.size() != reg.scalar_count()) throw DomainError("assignment does not cover every registered variable");
  std::vector<Matrix> A, B, C;
  for (int j = 0; j < vars.filter_rules; ++j) {
    A.push_back(reg.value(vars.A_scr[j], x));
    B.push_back(reg.value(vars.B_scr[j], x));
    C.push_back(reg.value(vars.C_scr[j], x));
  }
  return extract_filter(reg.value(vars.M22t, x), A, B, C, max_condition);
}

GridCheck sampled_negativity(const TSModel& model, const LmiVariables& vars, const Vector& assignment,
                             const LmiSettings& settings, const Interval& domain, int grid_points) {
  if (grid_points < 2) throw DomainError("sampled negativity needs at least 2 grid points");
  if (domain.empty()) throw DomainError("sampled negativity domain is empty");
  const RuleLmiValues values(model, vars, assignment, settings);
  GridCheck out;
  out.max_eigenvalue = -std::numeric_limits<double>::infinity();
  auto probe = [&](double pp, double pf) {
    const auto w = evaluate_memberships(model, pp, pf);
    Eigen::SelfAdjointEigenSolver<Matrix> es(values.blend(w.plant, w.filter), Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmax > out.max_eigenvalue) {
      out.max_eigenvalue = lmax;
      out.worst_plant_premise = pp;
      out.worst_filter_premise = pf;
    }
    ++out.points;
  };
  auto at = [&](int k, int count) { return domain.lo + (domain.hi - domain.lo) * k / (count - 1); };
  if (model.plant_memberships.premise() == model.filter_memberships.premise()) {
    for (int k = 0; k < grid_points; ++k) probe(at(k, grid_points), at(k, grid_points));
  } else {
    const int axis = std::min(grid_points, 401);
    for (int a = 0; a < axis; ++a) {
      for (int b = 0; b < axis; ++b) probe(at(a, axis), at(b, axis));
    }
  }
  out.passed = out.max_eigenvalue < 0.0;
  return out;
}

LmiSettings resolve_settings(const TSModel& model, const SynthesisOptions& options) {
  LmiSettings s = LmiSettings::from_model(model);
  if (options.h) s.h = *options.h;
  if (options.upsilon) s.upsilon = *options.upsilon;
  if (options.rho) s.rho = *options.rho;
  s.delay_term = options.delay_term;
  s.strict_margin = options.strict_margin;
  std::vector<std::string> findings;
  if (!(s.h > 0.0) || !std::isfinite(s.h)) findings.push_back("delay bound h must be > 0");
  if (!(s.rho < 1.0) || !std::isfinite(s.rho)) findings.push_back("delay derivative bound must be < 1");
  if (!(s.upsilon > 0.0) || !std::isfinite(s.upsilon)) findings.push_back("upsilon must be > 0");
  if (!(s.strict_margin >= 0.0)) findings.push_back("strict margin must be >= 0");
  if (!findings.empty()) throw ValidationError(findings);
  return s;
}

AffineLMIProblem build_problem(const TSModel& model, const LmiVariables& vars, int theorem,
                               const LmiSettings& settings, MembershipBounds* bounds_out) {
  if (theorem == 1) return build_theorem1_system(model, vars, settings);
  if (theorem != 2) throw DomainError("theorem must be 1 or 2");
  const MembershipBounds bounds = membership_product_bounds(model);
  if (bounds_out) *bounds_out = bounds;
  return build_theorem2_system(model, bounds, vars, settings);
}

SynthesisReport synthesize(const TSModel& model, const SynthesisOptions& options) {
  validate(model);
  if (options.theorem != 1 && options.theorem != 2) throw DomainError("theorem must be 1 or 2");
  SynthesisReport rep;
  rep.model_name = model.name;
  rep.theorem = options.theorem;
  rep.settings = resolve_settings(model, options);

  const LmiVariables vars = make_variables(model, options.theorem == 2);
  MembershipBounds bounds;
  const AffineLMIProblem problem = build_problem(model, vars, options.theorem, rep.settings, &bounds);
  if (options.theorem == 2) rep.bounds = bounds;
  rep.scalar_variables = problem.scalar_count();
  rep.constraint_count = static_cast<int>(problem.constraints.size());

  const auto t0 = std::chrono::steady_clock::now();
  rep.solution = solve(problem, options.solver);
  rep.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.status = rep.solution.status;
  rep.certificate = verify_solution(problem, rep.solution, options.solver.accept_tol);

  rep.notes.push_back(
      "the fuzzy Lyapunov matrices N(t), O(t) are membership-blended but their time derivatives are not "
      "represented in the LMIs; stability relies on the conditions exactly as stated");
  if (rep.settings.delay_term == DelayTerm::Printed) {
    rep.notes.push_back("delayed-state block uses -N_i without the (1 - rho) factor");
  }

  if (rep.status != SolveStatus::Optimal) {
    rep.notes.push_back("solver: " + rep.solution.diagnostic);
    return rep;
  }
  rep.feasible = true;
  rep.g = rep.solution.assignment[vars.registry->scalar_id(vars.g, 0, 0)];
  rep.gamma = std::sqrt(std::max(rep.g, 0.0));

  const auto& reg = *vars.registry;
  for (int k = 0; k < reg.matrix_count(); ++k) {
    const MatrixVar v{k};
    rep.variables[reg.info(v).name] = reg.value(v, rep.solution.assignment);
  }

  try {
    FilterRealization f = extract_filter(vars, rep.solution.assignment);
    f.gamma = rep.gamma;
    f.theorem_used = options.theorem;
    rep.filter = std::move(f);
  } catch (const ExtractionError& e) {
    rep.status = SolveStatus::NumericalFailure;
    rep.feasible = false;
    rep.notes.push_back(std::string("extraction failed: ") + e.what());
    return rep;
  }

  if (options.verify_grid > 0) {
    rep.grid = sampled_negativity(model, vars, rep.solution.assignment, rep.settings, model.bounds.domain,
                                  options.verify_grid);
    if (!rep.grid->passed) rep.notes.push_back("sampled blended LMI is not negative definite on the grid");
  }
  if (!rep.solution.diagnostic.empty() && rep.solution.diagnostic.rfind("reduced accuracy", 0) == 0) {
    rep.notes.push_back("solver: " + rep.solution.diagnostic);
  }
  return rep;
}

}  // namespace tsfilt

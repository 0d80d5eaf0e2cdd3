#pragma once

#include "tsfilt/lmi.hpp"
#include "tsfilt/model.hpp"
#include "tsfilt/sdp.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsfilt {

/// Per-rule filter matrices in the coordinates of the transformed filter state.
struct FilterRealization {
  std::vector<Matrix> A_f, B_f, C_f;
  double gamma = 0.0;
  int theorem_used = 0;
  double m22_condition = 0.0;

  int rule_count() const { return static_cast<int>(A_f.size()); }
  Dims dims() const;
};

/// A_f = M22t^-1 A_scr, B_f = M22t^-1 B_scr, C_f = C_scr. Throws ExtractionError
/// when M22t is not positive definite or its condition number exceeds max_condition.
FilterRealization extract_filter(const Matrix& M22t, const std::vector<Matrix>& A_scr,
                                 const std::vector<Matrix>& B_scr, const std::vector<Matrix>& C_scr,
                                 double max_condition = 1e12);
FilterRealization extract_filter(const LmiVariables& vars, const Vector& assignment,
                                 double max_condition = 1e12);

/// max over a premise grid of the largest eigenvalue of the blended LMI.
struct GridCheck {
  int points = 0;
  double max_eigenvalue = 0.0;
  double worst_plant_premise = 0.0;
  double worst_filter_premise = 0.0;
  bool passed = false;
};

/// Evaluates sum_ij phi_i n_j Omega_ij over the bound domain: a 1-D grid when both
/// families share a premise signal, a grid_points x grid_points lattice otherwise
/// (capped at 401 per axis).
GridCheck sampled_negativity(const TSModel& model, const LmiVariables& vars, const Vector& assignment,
                             const LmiSettings& settings, const Interval& domain, int grid_points = 2001);

struct SynthesisOptions {
  int theorem = 2;
  std::optional<double> h, upsilon, rho;  // override the model's values
  DelayTerm delay_term = DelayTerm::Derived;
  double strict_margin = 1e-7;
  SolverOptions solver;
  int verify_grid = 2001;
};

struct SynthesisReport {
  std::string model_name;
  int theorem = 0;
  LmiSettings settings;
  SolveStatus status = SolveStatus::NumericalFailure;
  bool feasible = false;
  double g = 0.0;
  double gamma = 0.0;
  std::optional<FilterRealization> filter;
  SDPSolution solution;
  VerificationRecord certificate;
  std::optional<MembershipBounds> bounds;
  std::optional<GridCheck> grid;
  std::map<std::string, Matrix> variables;
  std::vector<std::string> notes;
  double solve_seconds = 0.0;
  int scalar_variables = 0;
  int constraint_count = 0;
};

/// Builds the theorem 1 or 2 system for the model, minimizes g = gamma^2 and, when
/// feasible, extracts the filter and runs the sampled negativity check.
/// Infeasibility and solver failure are reported through `status`, not thrown.
SynthesisReport synthesize(const TSModel& model, const SynthesisOptions& options = {});

/// Convenience for callers that only need the variables: the assembled problem
/// exactly as synthesize() solves it.
AffineLMIProblem build_problem(const TSModel& model, const LmiVariables& vars, int theorem,
                               const LmiSettings& settings, MembershipBounds* bounds_out = nullptr);

LmiSettings resolve_settings(const TSModel& model, const SynthesisOptions& options);

}  // namespace tsfilt

#pragma once

#include "tsfilt/affine.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace tsfilt {

struct SolverOptions {
  double gap_tol = 1e-9;          // relative duality gap
  double feas_tol = 1e-9;         // relative primal/dual residuals
  double accept_tol = 1e-8;       // eigenvalue slack allowed when certifying a solution
  double early_gap_tol = 1e-4;   // relative gap accepted for a certified point when the solver stops early
  int max_iterations = 200;
  double stall_threshold = 1e-6;  // infeasibility measure that counts as "stalled"
  int stall_iterations = 20;
  int max_scalar_variables = 20000;
  std::ostream* log = nullptr;    // per-iteration trace when non-null
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure, IterationLimit };

std::string to_string(SolveStatus s);

struct SDPSolution {
  Vector assignment;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  /// Most positive eigenvalue over all "< 0" constraints at the assignment.
  double max_constraint_eigenvalue = 0.0;
  /// Most negative eigenvalue over all "> 0" constraints at the assignment.
  double min_positive_eigenvalue = 0.0;
  int iterations = 0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  std::string diagnostic;
};

struct ConstraintMargin {
  std::string label;
  Sense sense = Sense::NegativeDefinite;
  bool strict = true;
  /// max eigenvalue for "< 0", min eigenvalue for "> 0".
  double extreme_eigenvalue = 0.0;
  /// Distance to violation: -max_eig for "< 0", min_eig for "> 0".
  double margin = 0.0;
  bool satisfied = false;
};

struct VerificationRecord {
  std::vector<ConstraintMargin> constraints;
  double max_negative_constraint_eigenvalue = 0.0;
  double min_positive_constraint_eigenvalue = 0.0;
  bool all_satisfied = false;
};

/// Replaceable solver behind `solve`.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options) const = 0;
};

/// Dense infeasible-start primal-dual path-following method (HKM direction,
/// Mehrotra predictor-corrector) over the product of the constraint cones.
class InteriorPointBackend final : public SdpBackend {
 public:
  std::string name() const override { return "interior-point"; }
  SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options) const override;
};

/// Solves with the built-in interior-point backend.
SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options = {});
SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options, const SdpBackend& backend);

/// Re-evaluates every constraint at the solution's assignment and computes
/// its extreme eigenvalue from scratch. Never throws on violations.
VerificationRecord verify_solution(const AffineLMIProblem& problem, const SDPSolution& solution,
                                   double tolerance = 1e-8);

/// SDPA sparse format (min c'x s.t. sum_i F_i x_i - F_0 >= 0), strict
/// margins folded into F_0.
void write_sdpa(const AffineLMIProblem& problem, std::ostream& os);

}  // namespace tsfilt

#pragma once

#include "tsfilt/affine.hpp"
#include "tsfilt/model.hpp"

#include <memory>
#include <vector>

namespace tsfilt {

/// Which form of the delayed-state (2,2) block to use:
/// Derived  -> -(1 - rho) N_i   (what the Lyapunov derivative produces)
/// Printed  -> -N_i             (rho dropped)
enum class DelayTerm { Derived, Printed };

/// Scalar parameters of one synthesis problem. Defaults come from the model.
struct LmiSettings {
  double h = 0.5;
  double rho = 0.2;
  double upsilon = 1.0;
  DelayTerm delay_term = DelayTerm::Derived;
  double strict_margin = 1e-7;

  static LmiSettings from_model(const TSModel& model);
};

/// Matrix decision variables of the filter LMIs. Indices are 0-based.
struct LmiVariables {
  std::shared_ptr<VariableRegistry> registry;
  MatrixVar M11, M22t;
  std::vector<MatrixVar> N, O;                     // per plant rule, 2n x 2n
  std::vector<MatrixVar> A_scr, B_scr, C_scr;      // per filter rule
  MatrixVar g;                                     // gamma^2
  std::vector<std::vector<MatrixVar>> M_slack, Q_slack;  // [i][j], empty without slack
  int plant_rules = 0;
  int filter_rules = 0;

  bool has_slack() const { return !M_slack.empty(); }
};

/// Registers the variable set for a model; `with_slack` adds the membership
/// slack pairs. The returned registry is frozen.
LmiVariables make_variables(const TSModel& model, bool with_slack);

/// Dimension of every filter LMI: 8n + p_w + 2n + q.
int lmi_dimension(const Dims& d);

struct Selectors {
  std::vector<Matrix> e;  // block_dim x (block_count * block_dim)
  Matrix Pi1, Pi2, Pi3;   // e1-e2, e1+e2-2e3, e1-e2-6e3+6e4
};

Selectors build_selectors(int block_count, int block_dim);

/// Rule-pair LMI Omega_ij (0-based i over plant rules, j over filter rules).
AffineMatrixExpr build_theorem1_lmi(const TSModel& model, int i, int j, const LmiVariables& vars,
                                    const LmiSettings& settings);

/// M~ > 0, N_i > 0, O_i > 0 and, with slack, M_ij >= 0, Q_ij >= 0.
std::vector<LmiConstraint> build_positivity_constraints(const LmiVariables& vars);

/// All Omega_ij < 0 plus positivity; minimize g.
AffineLMIProblem build_theorem1_system(const TSModel& model, const LmiVariables& vars,
                                       const LmiSettings& settings);

/// Membership-bound relaxation:
/// Omega_ij - M_ij + Q_ij + sum_rs dU_rs M_rs - sum_ab dL_ab Q_ab < 0 plus positivity; minimize g.
AffineLMIProblem build_theorem2_system(const TSModel& model, const MembershipBounds& bounds,
                                       const LmiVariables& vars, const LmiSettings& settings);

/// Omega_ij evaluated numerically at a solved assignment; cached so the blend
/// over a dense premise grid stays cheap.
class RuleLmiValues {
 public:
  RuleLmiValues(const TSModel& model, const LmiVariables& vars, const Vector& assignment,
                const LmiSettings& settings);

  const Matrix& at(int i, int j) const { return values_[static_cast<std::size_t>(i * filter_rules_ + j)]; }
  /// sum_ij phi_i n_j Omega_ij at the given weights.
  Matrix blend(const Vector& plant_weights, const Vector& filter_weights) const;

 private:
  int plant_rules_ = 0;
  int filter_rules_ = 0;
  std::vector<Matrix> values_;
};

/// Time-varying LMI sum_ij phi_i(t) n_j(t) Omega_ij at premise value t.
Matrix blend_lmi(const TSModel& model, double t, const LmiVariables& vars, const Vector& assignment,
                 const LmiSettings& settings);

}  // namespace tsfilt

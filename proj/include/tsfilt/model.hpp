#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tsfilt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return !(lo < hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Upper bounds on the delay and its derivative: 0 <= tau(t) < h, dtau/dt <= rho.
struct DelayParams {
  double h = 0.0;
  double rho = 0.0;
  bool operator==(const DelayParams&) const = default;
};

/// Consequent matrices of one plant rule.
struct PlantRule {
  Matrix A, A_tau, B, C, C_tau, D, E, E_tau;
  bool operator==(const PlantRule& other) const;
};

/// State, measurement, disturbance and estimated-signal dimensions.
struct Dims {
  int n = 0;
  int m_y = 0;
  int p_w = 0;
  int q = 0;
  bool operator==(const Dims&) const = default;
};

/// Signal a membership family is evaluated on.
struct PremiseSignal {
  enum class Kind { Time, PlantState, FilterState };
  Kind kind = Kind::Time;
  int index = 0;  // state component for the *State kinds
  bool operator==(const PremiseSignal&) const = default;
};

/// offset + scale / (1 + exp(-sign * (psi - center)))
struct SigmoidShape {
  double offset = 0.0;
  double scale = 1.0;
  double center = 0.0;
  int sign = 1;
  bool operator==(const SigmoidShape&) const = default;
};

/// 1 - sum of the referenced members of the same family.
struct ComplementShape {
  std::vector<int> of;
  bool operator==(const ComplementShape&) const = default;
};

/// Piecewise-linear interpolation of samples; undefined outside the sample range.
struct TabulatedShape {
  std::vector<double> points;
  std::vector<double> values;
  bool operator==(const TabulatedShape&) const = default;
};

struct MembershipFunction {
  std::variant<SigmoidShape, ComplementShape, TabulatedShape> shape;
  bool operator==(const MembershipFunction&) const = default;
};

/// A normalized family of membership functions sharing one premise signal.
class MembershipFamily {
 public:
  MembershipFamily() = default;
  MembershipFamily(PremiseSignal premise, std::vector<MembershipFunction> members);

  const PremiseSignal& premise() const { return premise_; }
  const std::vector<MembershipFunction>& members() const { return members_; }
  int size() const { return static_cast<int>(members_.size()); }

  /// Weights at premise value psi. Throws DomainError outside a tabulated range.
  Vector evaluate(double psi) const;

  /// Premise range on which every member is defined (unbounded for analytic kinds).
  Interval domain() const;

  /// Limits for psi -> -inf and psi -> +inf, when every member has one.
  std::optional<std::pair<Vector, Vector>> asymptotes() const;

  bool operator==(const MembershipFamily&) const = default;

 private:
  PremiseSignal premise_;
  std::vector<MembershipFunction> members_;
};

struct BoundsConfig {
  Interval domain{-50.0, 50.0};
  int grid_density = 10001;
  bool include_asymptotes = true;
  bool operator==(const BoundsConfig&) const = default;
};

/// Takagi-Sugeno plant with delay plus the template of the mismatched-premise filter.
struct TSModel {
  std::string name;
  std::vector<PlantRule> plant_rules;
  MembershipFamily plant_memberships;
  int filter_rule_count = 0;
  MembershipFamily filter_memberships;
  DelayParams delay;
  double upsilon = 1.0;
  BoundsConfig bounds;

  int plant_rule_count() const { return static_cast<int>(plant_rules.size()); }
  Dims dims() const;

  bool operator==(const TSModel&) const = default;
};

/// Checks every model invariant; throws ValidationError listing all violations.
void validate(const TSModel& model);

/// Parses and validates a model document.
TSModel load_model(const nlohmann::json& doc);
TSModel load_model_text(const std::string& text);
TSModel load_model_file(const std::filesystem::path& path);

/// Writes every field, including defaults, so that load_model(serialize(m)) == m.
nlohmann::json serialize(const TSModel& model);

struct MembershipWeights {
  Vector plant;
  Vector filter;
};

/// Both families evaluated at the same premise value (the examples' time premise).
MembershipWeights evaluate_memberships(const TSModel& model, double t);
MembershipWeights evaluate_memberships(const TSModel& model, double plant_premise,
                                       double filter_premise);

/// Lower/upper bounds of d_ij = phi_i * n_j.
struct MembershipBounds {
  Matrix d_lower;  // p_rules x c
  Matrix d_upper;
  Interval domain_used;
  int grid_density = 0;
};

MembershipBounds membership_product_bounds(const TSModel& model, const Interval& domain,
                                           int grid_density, bool include_asymptotes = true);
MembershipBounds membership_product_bounds(const TSModel& model);

// Matrix <-> JSON helpers shared by the report writers.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

}  // namespace tsfilt

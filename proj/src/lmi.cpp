#include "tsfilt/lmi.hpp"

#include "tsfilt/error.hpp"

#include <cmath>
#include <string>

namespace tsfilt {

LmiSettings LmiSettings::from_model(const TSModel& model) {
  LmiSettings s;
  s.h = model.delay.h;
  s.rho = model.delay.rho;
  s.upsilon = model.upsilon;
  return s;
}

int lmi_dimension(const Dims& d) { return 8 * d.n + d.p_w + 2 * d.n + d.q; }

LmiVariables make_variables(const TSModel& model, bool with_slack) {
  const Dims d = model.dims();
  const int n = d.n;
  LmiVariables v;
  v.registry = std::make_shared<VariableRegistry>();
  auto& reg = *v.registry;
  v.plant_rules = model.plant_rule_count();
  v.filter_rules = model.filter_rule_count;

  v.M11 = reg.add_symmetric("M11", n);
  v.M22t = reg.add_symmetric("M22t", n);
  for (int i = 0; i < v.plant_rules; ++i) v.N.push_back(reg.add_symmetric("N" + std::to_string(i + 1), 2 * n));
  for (int i = 0; i < v.plant_rules; ++i) v.O.push_back(reg.add_symmetric("O" + std::to_string(i + 1), 2 * n));
  for (int j = 0; j < v.filter_rules; ++j) {
    const auto k = std::to_string(j + 1);
    v.A_scr.push_back(reg.add_matrix("A_scr" + k, n, n));
    v.B_scr.push_back(reg.add_matrix("B_scr" + k, n, d.m_y));
    v.C_scr.push_back(reg.add_matrix("C_scr" + k, d.q, n));
  }
  v.g = reg.add_scalar("g");
  if (with_slack) {
    const int N = lmi_dimension(d);
    v.M_slack.assign(static_cast<std::size_t>(v.plant_rules), {});
    v.Q_slack.assign(static_cast<std::size_t>(v.plant_rules), {});
    for (int i = 0; i < v.plant_rules; ++i) {
      for (int j = 0; j < v.filter_rules; ++j) {
        const auto k = std::to_string(i + 1) + "_" + std::to_string(j + 1);
        v.M_slack[static_cast<std::size_t>(i)].push_back(reg.add_symmetric("M_slack_" + k, N));
        v.Q_slack[static_cast<std::size_t>(i)].push_back(reg.add_symmetric("Q_slack_" + k, N));
      }
    }
  }
  reg.freeze();
  return v;
}

Selectors build_selectors(int block_count, int block_dim) {
  if (block_count < 4 || block_dim < 1) throw DomainError("selectors need block_count >= 4 and block_dim >= 1");
  Selectors s;
  const int width = block_count * block_dim;
  for (int k = 0; k < block_count; ++k) {
    Matrix e = Matrix::Zero(block_dim, width);
    e.block(0, k * block_dim, block_dim, block_dim).setIdentity();
    s.e.push_back(std::move(e));
  }
  const auto& e = s.e;
  s.Pi1 = e[0] - e[1];
  s.Pi2 = e[0] + e[1] - 2.0 * e[2];
  s.Pi3 = e[0] - e[1] - 6.0 * e[2] + 6.0 * e[3];
  return s;
}

namespace {

void check_indices(const TSModel& model, int i, int j) {
  if (i < 0 || i >= model.plant_rule_count()) throw DomainError("plant rule index out of range");
  if (j < 0 || j >= model.filter_rule_count) throw DomainError("filter rule index out of range");
}

// M~ = [M11 M22t; M22t M22t]
AffineBlock structured_m(const LmiVariables& vars) {
  const auto& reg = *vars.registry;
  const AffineBlock m11 = reg.expr(vars.M11);
  const AffineBlock m22 = reg.expr(vars.M22t);
  return AffineBlock::vcat({AffineBlock::hcat({m11, m22}), AffineBlock::hcat({m22, m22})});
}

}  // namespace

AffineMatrixExpr build_theorem1_lmi(const TSModel& model, int i, int j, const LmiVariables& vars,
                                    const LmiSettings& settings) {
  check_indices(model, i, j);
  if (i >= vars.plant_rules || j >= vars.filter_rules) throw DomainError("variable set does not cover rule pair");
  if (!(settings.h > 0.0)) throw DomainError("h must be > 0");
  const Dims d = model.dims();
  const int n = d.n;
  const int k = 2 * n;
  const auto& reg = *vars.registry;
  const auto& rule = model.plant_rules[static_cast<std::size_t>(i)];
  const auto ui = static_cast<std::size_t>(i);
  const auto uj = static_cast<std::size_t>(j);

  const AffineBlock M11 = reg.expr(vars.M11);
  const AffineBlock M22 = reg.expr(vars.M22t);
  const AffineBlock Ni = reg.expr(vars.N[ui]);
  const AffineBlock Oi = reg.expr(vars.O[ui]);
  const AffineBlock Aj = reg.expr(vars.A_scr[uj]);
  const AffineBlock Bj = reg.expr(vars.B_scr[uj]);
  const AffineBlock Cj = reg.expr(vars.C_scr[uj]);
  const AffineBlock zn = AffineBlock::zero(n, n);

  // lambda_1 = [M11 A + B C, A_scr; M22t A + B C, A_scr]
  const AffineBlock BC = Bj * rule.C;
  const AffineBlock lam1 = AffineBlock::vcat({AffineBlock::hcat({M11 * rule.A + BC, Aj}),
                                              AffineBlock::hcat({M22 * rule.A + BC, Aj})});
  const AffineBlock BCt = Bj * rule.C_tau;
  const AffineBlock lam2 = AffineBlock::vcat({AffineBlock::hcat({M11 * rule.A_tau + BCt, zn}),
                                              AffineBlock::hcat({M22 * rule.A_tau + BCt, zn})});
  const AffineBlock BD = Bj * rule.D;
  const AffineBlock lam3 = AffineBlock::vcat({M11 * rule.B + BD, M22 * rule.B + BD});

  // Block offsets: xi = [zeta, zeta_tau, avg, dbl-avg, w], then Schur column, then e.
  const int o1 = 0, o2 = k, o5 = 4 * k, o6 = 4 * k + d.p_w, o7 = 5 * k + d.p_w;
  const int N = lmi_dimension(d);
  SymmetricAssembler out(N);

  // Xi_1 + Xi_2 + Xi_3 = -(1/h) P1' O P1 - (3/h) P2' O P2 - (5/h) P3' O P3 on the first four blocks.
  const Selectors sel = build_selectors(4, k);
  const double h = settings.h;
  const AffineBlock xi = (-1.0 / h) * (sel.Pi1.transpose() * Oi * sel.Pi1) +
                         (-3.0 / h) * (sel.Pi2.transpose() * Oi * sel.Pi2) +
                         (-5.0 / h) * (sel.Pi3.transpose() * Oi * sel.Pi3);
  out.place(0, 0, xi);

  // Theta_3
  out.place(o1, o1, lam1 + lam1.transpose() + Ni);
  out.place(o2, o1, lam2.transpose());
  const double delay_factor = settings.delay_term == DelayTerm::Derived ? (1.0 - settings.rho) : 1.0;
  out.place(o2, o2, -delay_factor * Ni);
  out.place(o5, o1, lam3.transpose());
  AffineBlock minus_g(d.p_w, d.p_w);
  minus_g.add_term(reg.scalar_id(vars.g, 0, 0), -Matrix::Identity(d.p_w, d.p_w));
  out.place(o5, o5, minus_g);

  // sqrt(h) Gamma_1' column and the relaxed Schur block.
  const double sh = std::sqrt(h);
  out.place(o6, o1, sh * lam1);
  out.place(o6, o2, sh * lam2);
  out.place(o6, o5, sh * lam3);
  const double ups = settings.upsilon;
  out.place(o6, o6, (-2.0 * ups) * structured_m(vars) + (ups * ups) * Oi);

  // Gamma_2' column and -I.
  const AffineBlock g2a = AffineBlock::hcat({AffineBlock(rule.E), -Cj});
  Matrix eb = Matrix::Zero(d.q, k);
  eb.leftCols(n) = rule.E_tau;
  out.place(o7, o1, g2a);
  out.place(o7, o2, AffineBlock(eb));
  out.place(o7, o7, AffineBlock(Matrix(-Matrix::Identity(d.q, d.q))));

  return out.finish();
}

std::vector<LmiConstraint> build_positivity_constraints(const LmiVariables& vars) {
  const auto& reg = *vars.registry;
  std::vector<LmiConstraint> out;
  out.push_back({"M~ > 0", AffineMatrixExpr(structured_m(vars)), Sense::PositiveDefinite, true});
  for (int i = 0; i < vars.plant_rules; ++i) {
    out.push_back({"N" + std::to_string(i + 1) + " > 0", AffineMatrixExpr(reg.expr(vars.N[static_cast<std::size_t>(i)])),
                   Sense::PositiveDefinite, true});
  }
  for (int i = 0; i < vars.plant_rules; ++i) {
    out.push_back({"O" + std::to_string(i + 1) + " > 0", AffineMatrixExpr(reg.expr(vars.O[static_cast<std::size_t>(i)])),
                   Sense::PositiveDefinite, true});
  }
  if (vars.has_slack()) {
    for (int i = 0; i < vars.plant_rules; ++i) {
      for (int j = 0; j < vars.filter_rules; ++j) {
        const auto k = std::to_string(i + 1) + "_" + std::to_string(j + 1);
        const auto ui = static_cast<std::size_t>(i);
        const auto uj = static_cast<std::size_t>(j);
        out.push_back({"M_slack_" + k + " >= 0", AffineMatrixExpr(reg.expr(vars.M_slack[ui][uj])),
                       Sense::PositiveDefinite, false});
        out.push_back({"Q_slack_" + k + " >= 0", AffineMatrixExpr(reg.expr(vars.Q_slack[ui][uj])),
                       Sense::PositiveDefinite, false});
      }
    }
  }
  return out;
}

namespace {

Vector gamma_objective(const LmiVariables& vars) {
  Vector c = Vector::Zero(vars.registry->scalar_count());
  c[vars.registry->scalar_id(vars.g, 0, 0)] = 1.0;
  return c;
}

std::string pair_label(int i, int j) { return "Omega_" + std::to_string(i + 1) + "_" + std::to_string(j + 1); }

}  // namespace

AffineLMIProblem build_theorem1_system(const TSModel& model, const LmiVariables& vars,
                                       const LmiSettings& settings) {
  AffineLMIProblem prob;
  prob.registry = vars.registry;
  prob.strict_margin = settings.strict_margin;
  for (int i = 0; i < model.plant_rule_count(); ++i) {
    for (int j = 0; j < model.filter_rule_count; ++j) {
      prob.constraints.push_back(
          {pair_label(i, j) + " < 0", build_theorem1_lmi(model, i, j, vars, settings), Sense::NegativeDefinite, true});
    }
  }
  for (auto& c : build_positivity_constraints(vars)) prob.constraints.push_back(std::move(c));
  prob.objective = gamma_objective(vars);
  prob.check();
  return prob;
}

AffineLMIProblem build_theorem2_system(const TSModel& model, const MembershipBounds& bounds,
                                       const LmiVariables& vars, const LmiSettings& settings) {
  const int p = model.plant_rule_count();
  const int c = model.filter_rule_count;
  if (bounds.d_lower.rows() != p || bounds.d_lower.cols() != c || bounds.d_upper.rows() != p ||
      bounds.d_upper.cols() != c) {
    throw DomainError("membership bounds table shape does not match the model rules");
  }
  if (!vars.has_slack()) throw DomainError("theorem 2 needs a variable set with slack matrices");
  const auto& reg = *vars.registry;

  // Coupling term shared by every (i, j): sum_rs dU_rs M_rs - sum_ab dL_ab Q_ab.
  const int N = lmi_dimension(model.dims());
  AffineMatrixExpr coupling(N);
  for (int r = 0; r < p; ++r) {
    for (int s = 0; s < c; ++s) {
      const auto ur = static_cast<std::size_t>(r);
      const auto us = static_cast<std::size_t>(s);
      if (bounds.d_upper(r, s) != 0.0) {
        coupling += bounds.d_upper(r, s) * AffineMatrixExpr(reg.expr(vars.M_slack[ur][us]));
      }
      if (bounds.d_lower(r, s) != 0.0) {
        coupling += (-bounds.d_lower(r, s)) * AffineMatrixExpr(reg.expr(vars.Q_slack[ur][us]));
      }
    }
  }

  AffineLMIProblem prob;
  prob.registry = vars.registry;
  prob.strict_margin = settings.strict_margin;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < c; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      AffineMatrixExpr e = build_theorem1_lmi(model, i, j, vars, settings);
      e += (-1.0) * AffineMatrixExpr(reg.expr(vars.M_slack[ui][uj]));
      e += AffineMatrixExpr(reg.expr(vars.Q_slack[ui][uj]));
      e += coupling;
      prob.constraints.push_back({pair_label(i, j) + " - M_ij + Q_ij + coupling < 0", std::move(e),
                                  Sense::NegativeDefinite, true});
    }
  }
  for (auto& con : build_positivity_constraints(vars)) prob.constraints.push_back(std::move(con));
  prob.objective = gamma_objective(vars);
  prob.check();
  return prob;
}

RuleLmiValues::RuleLmiValues(const TSModel& model, const LmiVariables& vars, const Vector& assignment,
                             const LmiSettings& settings)
    : plant_rules_(model.plant_rule_count()), filter_rules_(model.filter_rule_count) {
  if (assignment.size() != vars.registry->scalar_count()) {
    throw DomainError("assignment does not cover every registered variable");
  }
  for (int i = 0; i < plant_rules_; ++i) {
    for (int j = 0; j < filter_rules_; ++j) {
      values_.push_back(build_theorem1_lmi(model, i, j, vars, settings).evaluate(assignment));
    }
  }
}

Matrix RuleLmiValues::blend(const Vector& plant_weights, const Vector& filter_weights) const {
  Matrix out = Matrix::Zero(values_.front().rows(), values_.front().cols());
  for (int i = 0; i < plant_rules_; ++i) {
    for (int j = 0; j < filter_rules_; ++j) out += plant_weights[i] * filter_weights[j] * at(i, j);
  }
  return out;
}

Matrix blend_lmi(const TSModel& model, double t, const LmiVariables& vars, const Vector& assignment,
                 const LmiSettings& settings) {
  const RuleLmiValues values(model, vars, assignment, settings);
  const auto w = evaluate_memberships(model, t);
  return values.blend(w.plant, w.filter);
}

}  // namespace tsfilt

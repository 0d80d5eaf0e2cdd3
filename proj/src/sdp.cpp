#include "tsfilt/sdp.hpp"

#include "tsfilt/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace tsfilt {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical-failure";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cone data in the form  S = C - sum_i y_i A_i >= 0,  maximize b'y.
struct Coeff {
  int var = 0;
  std::vector<SparseEntry> entries;
};

struct Block {
  int dim = 0;
  Matrix C;
  std::vector<Coeff> coeffs;  // sorted by var
};

struct ConeData {
  std::vector<Block> blocks;
  Vector b;
  int m = 0;
};

double entry_lookup(const std::vector<SparseEntry>& entries, int r, int c) {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(r, c),
                             [](const SparseEntry& e, const std::pair<int, int>& key) {
                               return e.row != key.first ? e.row < key.first : e.col < key.second;
                             });
  return (it != entries.end() && it->row == r && it->col == c) ? it->value : 0.0;
}

ConeData lower_problem(const AffineLMIProblem& problem, const SolverOptions& options) {
  problem.check();
  if (problem.constraints.empty()) throw DomainError("SDP needs at least one constraint");
  ConeData data;
  data.m = problem.scalar_count();
  if (data.m > options.max_scalar_variables) {
    throw SolverError("problem has " + std::to_string(data.m) + " scalar variables, above the configured limit of " +
                      std::to_string(options.max_scalar_variables));
  }
  data.b = problem.objective.size() == 0 ? Vector::Zero(data.m) : Vector(-problem.objective);

  for (const auto& con : problem.constraints) {
    const auto& e = con.expr;
    const double scale = 1.0 + e.constant().cwiseAbs().maxCoeff();
    if ((e.constant() - e.constant().transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw SolverError("non-symmetric constant term in constraint '" + con.label + "'");
    }
    const double margin = con.strict ? problem.strict_margin : 0.0;
    const double sign = con.sense == Sense::NegativeDefinite ? -1.0 : 1.0;
    Block blk;
    blk.dim = e.dim();
    blk.C = sign * e.constant();
    blk.C.diagonal().array() -= margin;
    blk.C = 0.5 * (blk.C + blk.C.transpose()).eval();
    for (const auto& t : e.terms()) {
      for (const auto& en : t.entries) {
        if (std::abs(entry_lookup(t.entries, en.col, en.row) - en.value) > 1e-12 * (1.0 + std::abs(en.value))) {
          throw SolverError("non-symmetric coefficient for scalar " + std::to_string(t.scalar) + " in constraint '" +
                            con.label + "'");
        }
      }
      Coeff c{t.scalar, t.entries};
      // S = C - sum y A  =>  A = -sign * E_i
      for (auto& en : c.entries) en.value *= -sign;
      blk.coeffs.push_back(std::move(c));
    }
    data.blocks.push_back(std::move(blk));
  }
  return data;
}

// sum_i y_i A_i for one block
Matrix adjoint(const Block& blk, const Vector& y) {
  Matrix out = Matrix::Zero(blk.dim, blk.dim);
  for (const auto& c : blk.coeffs) {
    const double v = y[c.var];
    if (v == 0.0) continue;
    for (const auto& e : c.entries) out(e.row, e.col) += v * e.value;
  }
  return out;
}

// (A(X))_i = sum_k <A_i^k, X_k>
Vector apply_a(const ConeData& data, const std::vector<Matrix>& X) {
  Vector out = Vector::Zero(data.m);
  for (std::size_t k = 0; k < data.blocks.size(); ++k) {
    for (const auto& c : data.blocks[k].coeffs) {
      double s = 0.0;
      for (const auto& e : c.entries) s += e.value * X[k](e.row, e.col);
      out[c.var] += s;
    }
  }
  return out;
}

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob(const std::vector<Matrix>& a) { return std::sqrt(inner(a, a)); }

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest alpha with X + alpha dX >= 0 (infinity when dX >= 0 along the ray).
double max_step(const Matrix& X, const Matrix& dX) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix Linv_dX = llt.matrixL().solve(dX);
  const Matrix M = llt.matrixL().solve(Linv_dX.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(M), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Schur complement H_ij = sum_k tr(A_i X_k A_j S_k^{-1}) (lower triangle filled).
void assemble_schur(const ConeData& data, const std::vector<Matrix>& X, const std::vector<Matrix>& Sinv, Matrix& H) {
  H.setZero(data.m, data.m);
  Matrix G;
  for (std::size_t k = 0; k < data.blocks.size(); ++k) {
    const auto& blk = data.blocks[k];
    const Matrix& Xk = X[k];
    const Matrix& Zk = Sinv[k];
    G.resize(blk.dim, blk.dim);
    for (std::size_t a = 0; a < blk.coeffs.size(); ++a) {
      const auto& ci = blk.coeffs[a];
      // G = X A_i S^{-1}
      G.setZero();
      for (const auto& e : ci.entries) G.noalias() += e.value * Xk.col(e.row) * Zk.row(e.col);
      for (std::size_t bidx = 0; bidx <= a; ++bidx) {
        const auto& cj = blk.coeffs[bidx];
        double s = 0.0;
        for (const auto& e : cj.entries) s += e.value * G(e.col, e.row);
        H(ci.var, cj.var) += s;
      }
    }
  }
}

struct Direction {
  Vector dy;
  std::vector<Matrix> dX, dS;
};

}  // namespace

SDPSolution InteriorPointBackend::solve(const AffineLMIProblem& problem, const SolverOptions& opt) const {
  const ConeData data = lower_problem(problem, opt);
  const int m = data.m;
  const std::size_t nb = data.blocks.size();
  const Vector& b = data.b;

  double normC = 0.0;
  int total_dim = 0;
  for (const auto& blk : data.blocks) {
    normC += blk.C.squaredNorm();
    total_dim += blk.dim;
  }
  normC = std::sqrt(normC);
  const double normb = b.norm();

  // Initial point, scaled per block from the data norms.
  std::vector<Matrix> X(nb), S(nb), Sinv(nb);
  Vector y = Vector::Zero(m);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& blk = data.blocks[k];
    const double sq = std::sqrt(static_cast<double>(blk.dim));
    double max_ratio = 0.0, max_norm_a = 0.0;
    for (const auto& c : blk.coeffs) {
      double na = 0.0;
      for (const auto& e : c.entries) na += e.value * e.value;
      na = std::sqrt(na);
      max_ratio = std::max(max_ratio, (1.0 + std::abs(b[c.var])) / (1.0 + na));
      max_norm_a = std::max(max_norm_a, na);
    }
    const double xi = std::max({10.0, sq, sq * max_ratio});
    const double eta = std::max({10.0, sq, max_norm_a, blk.C.norm()});
    X[k] = xi * Matrix::Identity(blk.dim, blk.dim);
    S[k] = eta * Matrix::Identity(blk.dim, blk.dim);
  }

  SDPSolution sol;
  Matrix H;
  Eigen::LLT<Matrix> llt;
  std::vector<double> dinf_history;
  double best_dinf = kInf;
  int best_dinf_iter = 0;
  int iter = 0;
  bool converged = false;
  bool reduced_accuracy = false;
  std::string diagnostic;

  auto log = [&](const char* fmt_tag, double relgap, double pinf, double dinf, double ap, double ad, double mu) {
    if (!opt.log) return;
    auto& os = *opt.log;
    os << std::setw(4) << iter << " " << fmt_tag << std::scientific << std::setprecision(3) << " gap " << relgap
       << " pinf " << pinf << " dinf " << dinf << " mu " << mu << " ap " << ap << " ad " << ad
       << " obj " << std::setprecision(10) << -b.dot(y) << std::defaultfloat << "\n";
  };

  double relgap = kInf, pinf = kInf, dinf = kInf;
  double last_ap = 0.0, last_ad = 0.0;
  int small_step_count = 0;
  // Best iterate by the merit max(relgap, pinf, dinf); returned if progress stalls.
  Vector best_y = y;
  double best_merit = kInf, best_gap = kInf, best_pinf = kInf, best_dinf_val = kInf;
  int best_iter = 0;

  for (iter = 0; iter <= opt.max_iterations; ++iter) {
    // Residuals.
    const Vector AX = apply_a(data, X);
    const Vector rp = b - AX;
    std::vector<Matrix> Rd(nb);
    for (std::size_t k = 0; k < nb; ++k) Rd[k] = data.blocks[k].C - adjoint(data.blocks[k], y) - S[k];
    double pobj = 0.0;
    for (std::size_t k = 0; k < nb; ++k) pobj += data.blocks[k].C.cwiseProduct(X[k]).sum();
    const double dobj = b.dot(y);
    const double xs = inner(X, S);
    const double mu = xs / total_dim;
    relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double relxs = xs / (1.0 + std::abs(pobj) + std::abs(dobj));
    pinf = rp.norm() / (1.0 + normb);
    dinf = frob(Rd) / (1.0 + normC);
    log("", relgap, pinf, dinf, last_ap, last_ad, mu);

    const double merit = std::max({relgap, relxs, pinf, dinf});
    if (merit < best_merit) {
      if (merit < 0.9 * best_merit) best_iter = iter;
      best_merit = merit;
      best_y = y;
      best_gap = relgap;
      best_pinf = pinf;
      best_dinf_val = dinf;
    }
    if (best_merit < 1e-6 && iter - best_iter >= 5) {
      diagnostic = "progress stalled";
      break;
    }

    if (std::max(relgap, relxs) <= opt.gap_tol && pinf <= opt.feas_tol && dinf <= opt.feas_tol) {
      converged = true;
      break;
    }

    // Dual-infeasibility (LMI infeasible) certificate: X >= 0, A(X) ~ 0, <C,X> < 0.
    if (pobj < 0.0 && AX.norm() <= 1e-8 * -pobj) {
      sol.status = SolveStatus::Infeasible;
      diagnostic = "infeasibility certificate: <C,X> = " + std::to_string(pobj) +
                   " with |A(X)| = " + std::to_string(AX.norm());
      break;
    }
    // Stalled infeasibility measure.
    dinf_history.push_back(dinf);
    if (dinf < 0.5 * best_dinf) {
      best_dinf = dinf;
      best_dinf_iter = iter;
    }
    if (dinf > opt.stall_threshold && iter - best_dinf_iter >= opt.stall_iterations) {
      sol.status = SolveStatus::Infeasible;
      diagnostic = "dual infeasibility stalled at " + std::to_string(dinf) + " for " +
                   std::to_string(opt.stall_iterations) + " iterations";
      break;
    }
    if (iter == opt.max_iterations) break;

    // Inverse slacks.
    bool bad = false;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> sl(S[k]);
      if (sl.info() != Eigen::Success) {
        bad = true;
        break;
      }
      Sinv[k] = sym(sl.solve(Matrix::Identity(S[k].rows(), S[k].cols())));
    }
    if (bad) {
      diagnostic = "slack matrix lost positive definiteness";
      break;
    }

    assemble_schur(data, X, Sinv, H);
    // Variables absent from every cone leave a zero row; pin them.
    double diag_scale = 0.0;
    for (int i = 0; i < m; ++i) diag_scale = std::max(diag_scale, H(i, i));
    for (int i = 0; i < m; ++i) {
      if (H(i, i) <= 1e-300) H(i, i) = std::max(diag_scale, 1.0);
    }
    llt.compute(H.selfadjointView<Eigen::Lower>());
    double reg = 1e-14 * std::max(diag_scale, 1.0);
    while (llt.info() != Eigen::Success && reg < 1e-4 * std::max(diag_scale, 1.0)) {
      Matrix Hr = H.selfadjointView<Eigen::Lower>();
      Hr.diagonal().array() += reg;
      llt.compute(Hr);
      reg *= 100.0;
    }
    if (llt.info() != Eigen::Success) {
      diagnostic = "Schur complement factorization failed";
      break;
    }

    // Solve for a direction given the complementarity target T (dX = T - X - X dS S^-1).
    auto direction = [&](const std::vector<Matrix>& T) {
      Direction d;
      Vector rhs = b - apply_a(data, T);
      std::vector<Matrix> XRS(nb);
      for (std::size_t k = 0; k < nb; ++k) XRS[k] = X[k] * Rd[k] * Sinv[k];
      rhs += apply_a(data, XRS);
      d.dy = llt.solve(rhs);
      d.dS.resize(nb);
      d.dX.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        d.dS[k] = sym(Rd[k] - adjoint(data.blocks[k], d.dy));
        d.dX[k] = sym(T[k] - X[k] - X[k] * d.dS[k] * Sinv[k]);
      }
      return d;
    };
    auto steps = [&](const Direction& d, double frac) {
      double ap = kInf, ad = kInf;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], d.dX[k]));
        ad = std::min(ad, max_step(S[k], d.dS[k]));
      }
      return std::make_pair(std::min(1.0, frac * ap), std::min(1.0, frac * ad));
    };

    // Predictor.
    std::vector<Matrix> T(nb);
    for (std::size_t k = 0; k < nb; ++k) T[k] = Matrix::Zero(X[k].rows(), X[k].cols());
    const Direction pred = direction(T);
    const auto [ap0, ad0] = steps(pred, 1.0);
    double xs_pred = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      xs_pred += (X[k] + ap0 * pred.dX[k]).cwiseProduct(S[k] + ad0 * pred.dS[k]).sum();
    }
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(ap0, ad0), 2));
    const double sigma = std::clamp(std::pow(std::max(xs_pred, 0.0) / xs, expon), 0.0, 1.0);

    // Corrector with the second-order term.
    for (std::size_t k = 0; k < nb; ++k) {
      T[k] = sigma * mu * Sinv[k] - pred.dX[k] * pred.dS[k] * Sinv[k];
    }
    const Direction corr = direction(T);
    const double frac = 0.9 + 0.09 * std::min(ap0, ad0);
    const auto [ap, ad] = steps(corr, frac);
    last_ap = ap;
    last_ad = ad;

    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * corr.dX[k]);
      S[k] = sym(S[k] + ad * corr.dS[k]);
    }
    y += ad * corr.dy;

    small_step_count = (std::max(ap, ad) < 1e-6) ? small_step_count + 1 : 0;
    if (small_step_count >= 5) {
      diagnostic = "step lengths collapsed";
      break;
    }
  }

  sol.iterations = iter;
  if (!converged && sol.status != SolveStatus::Infeasible && best_merit < kInf) {
    y = best_y;
    relgap = best_gap;
    pinf = best_pinf;
    dinf = best_dinf_val;
  }
  sol.assignment = y;
  sol.objective_value = problem.objective.size() ? problem.objective.dot(y) : 0.0;
  sol.relative_gap = relgap;
  sol.primal_infeasibility = pinf;
  sol.dual_infeasibility = dinf;

  // Extreme eigenvalues from the cone slacks S = C - sum y A recomputed from y.
  double max_neg = -kInf, min_pos = kInf;
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& con = problem.constraints[k];
    const Matrix Sk = data.blocks[k].C - adjoint(data.blocks[k], y);
    const double lmin = min_eigenvalue(Sk);
    const double margin = con.strict ? problem.strict_margin : 0.0;
    if (con.sense == Sense::NegativeDefinite) {
      max_neg = std::max(max_neg, -lmin - margin);
    } else {
      min_pos = std::min(min_pos, lmin + margin);
    }
  }
  sol.max_constraint_eigenvalue = max_neg == -kInf ? 0.0 : max_neg;
  sol.min_positive_eigenvalue = min_pos == kInf ? 0.0 : min_pos;
  const bool certified = sol.max_constraint_eigenvalue <= opt.accept_tol && sol.min_positive_eigenvalue >= -opt.accept_tol;

  if (sol.status != SolveStatus::Infeasible) {
    if (converged && certified) {
      sol.status = SolveStatus::Optimal;
    } else if (!converged && certified && relgap <= opt.early_gap_tol && dinf <= 1e-6) {
      // Stopped early (stall or iteration cap) at a certified point with a small gap.
      sol.status = SolveStatus::Optimal;
      reduced_accuracy = true;
    } else if (iter >= opt.max_iterations && diagnostic.empty()) {
      sol.status = SolveStatus::IterationLimit;
      diagnostic = "iteration limit reached";
    } else {
      sol.status = SolveStatus::NumericalFailure;
      if (diagnostic.empty()) diagnostic = "converged point fails eigenvalue certification";
    }
  }
  if (reduced_accuracy) {
    diagnostic = "reduced accuracy (" + (diagnostic.empty() ? std::string("early stop") : diagnostic) + ")";
  }
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << "relgap " << relgap << ", pinf " << pinf << ", dinf " << dinf;
  sol.diagnostic = diagnostic.empty() ? os.str() : diagnostic + "; " + os.str();
  return sol;
}

SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options) {
  return InteriorPointBackend{}.solve(problem, options);
}

SDPSolution solve(const AffineLMIProblem& problem, const SolverOptions& options, const SdpBackend& backend) {
  return backend.solve(problem, options);
}

VerificationRecord verify_solution(const AffineLMIProblem& problem, const SDPSolution& solution, double tolerance) {
  VerificationRecord rec;
  rec.all_satisfied = true;
  rec.max_negative_constraint_eigenvalue = -kInf;
  rec.min_positive_constraint_eigenvalue = kInf;
  const bool full = solution.assignment.size() == problem.scalar_count();
  for (const auto& con : problem.constraints) {
    ConstraintMargin cm;
    cm.label = con.label;
    cm.sense = con.sense;
    cm.strict = con.strict;
    if (!full) {
      cm.extreme_eigenvalue = std::numeric_limits<double>::quiet_NaN();
      cm.margin = -kInf;
      cm.satisfied = false;
      rec.all_satisfied = false;
      rec.constraints.push_back(cm);
      continue;
    }
    const Matrix v = con.expr.evaluate(solution.assignment);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(v), Eigen::EigenvaluesOnly);
    if (con.sense == Sense::NegativeDefinite) {
      cm.extreme_eigenvalue = es.eigenvalues().maxCoeff();
      cm.margin = -cm.extreme_eigenvalue;
      cm.satisfied = con.strict ? cm.extreme_eigenvalue < 0.0 : cm.extreme_eigenvalue <= tolerance;
      rec.max_negative_constraint_eigenvalue = std::max(rec.max_negative_constraint_eigenvalue, cm.extreme_eigenvalue);
    } else {
      cm.extreme_eigenvalue = es.eigenvalues().minCoeff();
      cm.margin = cm.extreme_eigenvalue;
      cm.satisfied = con.strict ? cm.extreme_eigenvalue > 0.0 : cm.extreme_eigenvalue >= -tolerance;
      rec.min_positive_constraint_eigenvalue = std::min(rec.min_positive_constraint_eigenvalue, cm.extreme_eigenvalue);
    }
    rec.all_satisfied = rec.all_satisfied && cm.satisfied;
    rec.constraints.push_back(cm);
  }
  if (rec.max_negative_constraint_eigenvalue == -kInf) rec.max_negative_constraint_eigenvalue = 0.0;
  if (rec.min_positive_constraint_eigenvalue == kInf) rec.min_positive_constraint_eigenvalue = 0.0;
  return rec;
}

void write_sdpa(const AffineLMIProblem& problem, std::ostream& os) {
  problem.check();
  const int m = problem.scalar_count();
  const auto old_prec = os.precision();
  os << std::setprecision(17);
  os << "\"tsfilt LMI problem: min c'x s.t. sum F_i x_i - F_0 >= 0\"\n";
  os << m << " = mDIM\n";
  os << problem.constraints.size() << " = nBLOCK\n";
  for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
    os << problem.constraints[k].expr.dim() << (k + 1 < problem.constraints.size() ? " " : "\n");
  }
  os << "{";
  for (int i = 0; i < m; ++i) os << (problem.objective.size() ? problem.objective[i] : 0.0) << (i + 1 < m ? ", " : "");
  os << "}\n";
  for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
    const auto& con = problem.constraints[k];
    // NegDef: -E(x) - eps I >= 0  =>  F_i = -E_i, F_0 = E_0 + eps I
    // PosDef:  E(x) - eps I >= 0  =>  F_i =  E_i, F_0 = -E_0 + eps I
    const double sign = con.sense == Sense::NegativeDefinite ? -1.0 : 1.0;
    const double margin = con.strict ? problem.strict_margin : 0.0;
    const Matrix F0 = -sign * con.expr.constant() + margin * Matrix::Identity(con.expr.dim(), con.expr.dim());
    for (int r = 0; r < F0.rows(); ++r) {
      for (int c = r; c < F0.cols(); ++c) {
        if (F0(r, c) != 0.0) os << 0 << " " << k + 1 << " " << r + 1 << " " << c + 1 << " " << F0(r, c) << "\n";
      }
    }
    for (const auto& t : con.expr.terms()) {
      for (const auto& e : t.entries) {
        if (e.row <= e.col) {
          os << t.scalar + 1 << " " << k + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << sign * e.value << "\n";
        }
      }
    }
  }
  os.precision(old_prec);
}

}  // namespace tsfilt

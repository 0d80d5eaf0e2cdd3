#include "tsfilt/verify.hpp"

#include "tsfilt/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace tsfilt {

namespace {

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix selector(int i, int n) {
  Matrix e = Matrix::Zero(n, 4 * n);
  e.block(0, i * n, n, n).setIdentity();
  return e;
}

}  // namespace

IntegralTerms integral_terms(const IntegralInstance& inst) {
  const int n = inst.n();
  const double d = inst.beta - inst.alpha;
  if (!(d > 0.0)) throw DomainError("integral inequality: interval needs beta > alpha");
  if (n < 1 || inst.coeffs.cols() < 1) throw DomainError("integral inequality: trajectory has no coefficients");
  if (inst.R.rows() != n || inst.R.cols() != n) throw DomainError("integral inequality: weight R must be n x n");
  for (const Matrix* N : {&inst.N1, &inst.N2, &inst.N3}) {
    if (N->rows() != 4 * n || N->cols() != n) throw DomainError("integral inequality: free matrices must be 4n x n");
  }
  Eigen::LLT<Matrix> llt(sym(inst.R));
  if (llt.info() != Eigen::Success) throw DomainError("integral inequality: weight R is not positive definite");
  const Matrix Rinv = llt.solve(Matrix::Identity(n, n));

  const int deg = static_cast<int>(inst.coeffs.cols()) - 1;
  const Matrix& c = inst.coeffs;

  IntegralTerms out;
  double energy = 0.0;
  for (int a = 1; a <= deg; ++a) {
    for (int b = 1; b <= deg; ++b) {
      const int p = (a - 1) + (b - 1);
      energy += a * b * c.col(a).dot(inst.R * c.col(b)) * std::pow(d, p + 1) / (p + 1);
    }
  }
  out.lhs = -energy;

  Vector xb = Vector::Zero(n), avg = Vector::Zero(n), dbl = Vector::Zero(n);
  for (int k = 0; k <= deg; ++k) {
    xb += c.col(k) * std::pow(d, k);
    avg += c.col(k) * std::pow(d, k) / (k + 1);
    dbl += c.col(k) * 2.0 * std::pow(d, k) / ((k + 1) * (k + 2));
  }
  out.xi.resize(4 * n);
  out.xi << xb, c.col(0), avg, dbl;

  const Matrix e1 = selector(0, n), e2 = selector(1, n), e3 = selector(2, n), e4 = selector(3, n);
  const Matrix D1 = e1 - e2, D2 = e1 + e2 - 2 * e3, D3 = e1 - e2 - 6 * e3 + 6 * e4;
  const Matrix S = inst.N1 * D1 + inst.N2 * D2 + inst.N3 * D3;
  out.omega = d * (inst.N1 * Rinv * inst.N1.transpose() + inst.N2 * Rinv * inst.N2.transpose() / 3.0 +
                   inst.N3 * Rinv * inst.N3.transpose() / 5.0) +
              S + S.transpose();
  out.rhs = out.xi.dot(out.omega * out.xi);
  return out;
}

double check_integral_inequality(const IntegralInstance& instance) {
  const auto t = integral_terms(instance);
  return t.rhs - t.lhs;
}

IntegralInstance random_integral_instance(std::mt19937_64& rng, int max_degree, int max_n, bool tight) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick_n(1, max_n), pick_deg(0, max_degree);
  std::uniform_real_distribution<double> pick_alpha(-2.0, 2.0), pick_len(0.1, 2.0);
  auto randn = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
    }
    return m;
  };

  IntegralInstance inst;
  const int n = pick_n(rng);
  inst.alpha = pick_alpha(rng);
  inst.beta = inst.alpha + pick_len(rng);
  inst.coeffs = randn(n, pick_deg(rng) + 1);
  const Matrix A = randn(n, n);
  inst.R = A * A.transpose() + 0.1 * Matrix::Identity(n, n);
  inst.N1 = randn(4 * n, n);
  inst.N2 = randn(4 * n, n);
  inst.N3 = randn(4 * n, n);
  if (tight) {
    // N_k with N_k^T xi = -R Delta_k xi / (d c_k) minimizes the right-hand side.
    const double d = inst.beta - inst.alpha;
    const Vector xi = integral_terms(inst).xi;
    const double xx = xi.squaredNorm();
    const Matrix e1 = selector(0, n), e2 = selector(1, n), e3 = selector(2, n), e4 = selector(3, n);
    const Matrix D[3] = {e1 - e2, e1 + e2 - 2 * e3, e1 - e2 - 6 * e3 + 6 * e4};
    const double ck[3] = {1.0, 1.0 / 3.0, 1.0 / 5.0};
    Matrix* Ns[3] = {&inst.N1, &inst.N2, &inst.N3};
    for (int k = 0; k < 3; ++k) {
      if (xx == 0.0) {
        Ns[k]->setZero();
        continue;
      }
      const Vector v = -inst.R * (D[k] * xi) / (d * ck[k]);
      *Ns[k] = xi * v.transpose() / xx;
    }
  }
  return inst;
}

Matrix check_upsilon_relaxation(const Matrix& O, const Matrix& M, double upsilon) {
  if (O.rows() != O.cols() || M.rows() != O.rows() || M.cols() != O.cols()) {
    throw DomainError("relaxation check needs square O and M of equal size");
  }
  Eigen::LLT<Matrix> llt(sym(O));
  if (llt.info() != Eigen::Success) throw DomainError("relaxation check: O is not positive definite");
  const Matrix Ms = sym(M);
  const Matrix relaxed = -2.0 * upsilon * Ms + upsilon * upsilon * sym(O);
  const Matrix exact = -Ms * llt.solve(Ms);
  return sym(relaxed - exact);
}

namespace {

std::mt19937_64 trial_rng(std::uint64_t master, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

}  // namespace

PropertySuiteResult run_integral_suite(int trials, std::uint64_t master_seed, double tolerance) {
  PropertySuiteResult r;
  r.tolerance = tolerance;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    auto rng = trial_rng(master_seed, k);
    const auto inst = random_integral_instance(rng, 5, 3, k % 2 == 1);
    const double m = check_integral_inequality(inst);
    r.worst_margin = std::min(r.worst_margin, m);
    if (!(m >= -tolerance)) ++r.failures;
    ++r.trials;
  }
  return r;
}

PropertySuiteResult run_upsilon_suite(int trials, std::uint64_t master_seed, double tolerance) {
  PropertySuiteResult r;
  r.tolerance = tolerance;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    auto rng = trial_rng(master_seed ^ 0x9e3779b97f4a7c15ULL, k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick_n(1, 6);
    std::uniform_real_distribution<double> pick_u(0.05, 5.0);
    const int n = pick_n(rng);
    Matrix A(n, n), B(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        A(i, j) = normal(rng);
        B(i, j) = normal(rng);
      }
    }
    const Matrix O = A * A.transpose() / n + 0.5 * Matrix::Identity(n, n);
    const double u = pick_u(rng);
    // Every tenth draw plants the equality case M = upsilon O.
    const Matrix M = (k % 10 == 0) ? Matrix(u * O) : Matrix(B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(check_upsilon_relaxation(O, M, u), Eigen::EigenvaluesOnly);
    const double m = es.eigenvalues().minCoeff();
    r.worst_margin = std::min(r.worst_margin, m);
    if (!(m >= -tolerance)) ++r.failures;
    ++r.trials;
  }
  return r;
}

LyapunovMatrices LyapunovMatrices::from_variables(const std::map<std::string, Matrix>& v, int plant_rules) {
  auto get = [&](const std::string& name) -> const Matrix& {
    auto it = v.find(name);
    if (it == v.end()) throw DomainError("variable '" + name + "' missing from the solved assignment");
    return it->second;
  };
  const Matrix& M11 = get("M11");
  const Matrix& M22 = get("M22t");
  const auto n = M11.rows();
  LyapunovMatrices out;
  out.M.resize(2 * n, 2 * n);
  out.M << M11, M22, M22, M22;
  for (int i = 0; i < plant_rules; ++i) {
    out.N.push_back(get("N" + std::to_string(i + 1)));
    out.O.push_back(get("O" + std::to_string(i + 1)));
  }
  return out;
}

namespace {

struct TraceView {
  const TSModel& model;
  const LyapunovMatrices& lyap;
  const SimulationTrace& tr;
  int n;

  // Sample j of zeta on the extended grid s_j = j * step (history for j < 0).
  Vector zeta(int j) const { return j < 0 ? tr.history : Vector(tr.zeta.row(j).transpose()); }
  Vector zeta_dot(int j) const {
    return j < 0 ? Vector(Vector::Zero(2 * n)) : Vector(tr.zeta_dot.row(j).transpose());
  }
  Vector weights(int j) const {
    const auto& fam = model.plant_memberships;
    const auto& p = fam.premise();
    const double s = j * tr.step;
    switch (p.kind) {
      case PremiseSignal::Kind::Time: return fam.evaluate(s);
      case PremiseSignal::Kind::PlantState: return fam.evaluate(zeta(j)[p.index]);
      case PremiseSignal::Kind::FilterState: return fam.evaluate(zeta(j)[n + p.index]);
    }
    return fam.evaluate(s);
  }
  Matrix blend(const std::vector<Matrix>& mats, const Vector& w) const {
    Matrix out = Matrix::Zero(mats.front().rows(), mats.front().cols());
    for (std::size_t i = 0; i < mats.size(); ++i) out += w[static_cast<Eigen::Index>(i)] * mats[i];
    return out;
  }

  // Trapezoid integral of f over [a, s_k], f linearly interpolated at a.
  template <class F>
  double integrate(F f, double a, int k) const {
    const double step = tr.step;
    const int j0 = static_cast<int>(std::floor(a / step));
    if (j0 >= k) return 0.0;
    const double frac = a / step - j0;
    const double fj0 = f(j0), fj1 = f(j0 + 1);
    const double fa = fj0 + frac * (fj1 - fj0);
    double sum = 0.5 * (1.0 - frac) * step * (fa + fj1);
    double prev = fj1;
    for (int j = j0 + 2; j <= k; ++j) {
      const double cur = f(j);
      sum += 0.5 * step * (prev + cur);
      prev = cur;
    }
    return sum;
  }
};

}  // namespace

double lyapunov_value(const TSModel& model, const LyapunovMatrices& lyap, const SimulationTrace& trace, double h,
                      int k) {
  if (k < 0 || k >= trace.samples()) throw DomainError("trace sample index out of range");
  if (lyap.N.empty() || lyap.N.size() != lyap.O.size()) throw DomainError("Lyapunov matrices incomplete");
  const int n = static_cast<int>(trace.zeta.cols()) / 2;
  if (lyap.M.rows() != 2 * n) throw DomainError("Lyapunov matrices do not match the trace dimension");
  const TraceView view{model, lyap, trace, n};
  const double t = trace.t[static_cast<std::size_t>(k)];
  const Vector z = view.zeta(k);
  const double v1 = z.dot(lyap.M * z);
  const double v2 = view.integrate(
      [&](int j) {
        const Vector zj = view.zeta(j);
        return zj.dot(view.blend(lyap.N, view.weights(j)) * zj);
      },
      t - trace.tau[static_cast<std::size_t>(k)], k);
  const double v3 = view.integrate(
      [&](int j) {
        if (j < 0) return 0.0;
        const Vector dz = view.zeta_dot(j);
        return (j * trace.step - t + h) * dz.dot(view.blend(lyap.O, view.weights(j)) * dz);
      },
      t - h, k);
  return v1 + v2 + v3;
}

LyapunovCheck sampled_lyapunov_decrease(const TSModel& model, const LyapunovMatrices& lyap,
                                        const SimulationTrace& trace, double h, double state_threshold, int every) {
  if (trace.w.size() && trace.w.cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("Lyapunov decrease check needs a trace with zero disturbance");
  }
  if (every < 1) every = 1;
  LyapunovCheck out;
  out.max_vdot = -std::numeric_limits<double>::infinity();
  for (int k = 1; k + 1 < trace.samples(); k += every) {
    const double vm = lyapunov_value(model, lyap, trace, h, k - 1);
    const double v0 = lyapunov_value(model, lyap, trace, h, k);
    const double vp = lyapunov_value(model, lyap, trace, h, k + 1);
    const double vdot = (vp - vm) / (2.0 * trace.step);
    out.t.push_back(trace.t[static_cast<std::size_t>(k)]);
    out.V.push_back(v0);
    out.Vdot.push_back(vdot);
    if (trace.zeta.row(k).norm() > state_threshold) {
      ++out.samples_checked;
      if (vdot > out.max_vdot) {
        out.max_vdot = vdot;
        out.worst_t = trace.t[static_cast<std::size_t>(k)];
      }
    }
  }
  if (out.samples_checked == 0) out.max_vdot = 0.0;
  out.consistent = out.samples_checked == 0 || out.max_vdot < 0.0;
  return out;
}

}  // namespace tsfilt

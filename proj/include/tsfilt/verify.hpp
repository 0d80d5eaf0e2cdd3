#pragma once

#include "tsfilt/dde.hpp"
#include "tsfilt/model.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace tsfilt {

/// Polynomial trajectory x(alpha + u) = sum_k coeffs.col(k) u^k on [alpha, beta].
struct IntegralInstance {
  double alpha = 0.0;
  double beta = 1.0;
  Matrix coeffs;  // n x (degree + 1)
  Matrix R;       // n x n, positive definite
  Matrix N1, N2, N3;  // 4n x n

  int n() const { return static_cast<int>(coeffs.rows()); }
};

struct IntegralTerms {
  double lhs = 0.0;  // -int x'^T R x'
  double rhs = 0.0;  // xi^T Omega xi
  Vector xi;
  Matrix omega;
};

/// Both sides of the integral inequality, with exact polynomial integration.
IntegralTerms integral_terms(const IntegralInstance& instance);
/// rhs - lhs; throws DomainError if R is not positive definite.
double check_integral_inequality(const IntegralInstance& instance);

/// Random instance with degree <= max_degree and n <= max_n. With `tight`, the
/// free matrices are the minimizers of the right-hand side, so the margin is the
/// gap of the underlying Bessel-Legendre bound (zero for degree <= 3).
IntegralInstance random_integral_instance(std::mt19937_64& rng, int max_degree = 5, int max_n = 3, bool tight = false);

/// (-2 upsilon M + upsilon^2 O) - (-M O^-1 M); throws DomainError if O is not positive definite.
Matrix check_upsilon_relaxation(const Matrix& O, const Matrix& M, double upsilon);

struct PropertySuiteResult {
  int trials = 0;
  int failures = 0;
  double worst_margin = 0.0;  // smallest margin (eigenvalue for the relaxation suite)
  double tolerance = 0.0;
  bool passed() const { return failures == 0; }
};

/// Each trial draws from its own generator seeded by (master_seed, trial index).
PropertySuiteResult run_integral_suite(int trials, std::uint64_t master_seed, double tolerance = 1e-8);
PropertySuiteResult run_upsilon_suite(int trials, std::uint64_t master_seed, double tolerance = 1e-10);

/// Lyapunov-Krasovskii matrices in the transformed filter coordinates:
/// M = [[M11, M22t], [M22t, M22t]], N_i, O_i.
struct LyapunovMatrices {
  Matrix M;
  std::vector<Matrix> N, O;

  static LyapunovMatrices from_variables(const std::map<std::string, Matrix>& variables, int plant_rules);
};

struct LyapunovCheck {
  std::vector<double> t, V, Vdot;
  double max_vdot = 0.0;   // over samples with |zeta| above the threshold
  double worst_t = 0.0;
  int samples_checked = 0;
  bool consistent = false;  // max_vdot < 0
};

/// Evaluates V(t) = zeta^T M zeta + int_{t-tau}^t zeta^T N(s) zeta ds
///   + int_{t-h}^t (s - t + h) zeta'^T O(s) zeta' ds along a w = 0 trace and
/// differentiates it by central differences. A spot check, not a certificate.
LyapunovCheck sampled_lyapunov_decrease(const TSModel& model, const LyapunovMatrices& lyap, const SimulationTrace& trace,
                                        double h, double state_threshold = 1e-6, int every = 10);

/// V at sample k of the trace (exposed for quadrature checks).
double lyapunov_value(const TSModel& model, const LyapunovMatrices& lyap, const SimulationTrace& trace, double h,
                      int k);

}  // namespace tsfilt

#include "support.hpp"

#include "tsfilt/lmi.hpp"
#include "tsfilt/error.hpp"
#include "tsfilt/sdp.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace tsfilt;
using namespace tsfilt::testing;

namespace {

double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff(); }

}  // namespace

TEST_SUITE("sdp") {
  TEST_CASE("eigenvalue problem reaches t = -lambda_min") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = -3.0;
    const auto p = eigenvalue_problem(A);
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.assignment[0] - 3.0) <= 1e-8);
    CHECK(std::abs(sol.objective_value - 3.0) <= 1e-8);
    // active at the optimum
    const auto rec = verify_solution(p, sol);
    REQUIRE(rec.constraints.size() == 1);
    CHECK(std::abs(rec.constraints[0].margin) <= 1e-8);
  }

  TEST_CASE("eigenvalue problem on random symmetric matrices") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g;
    for (int k = 0; k < 10; ++k) {
      const int n = 2 + k % 4;
      Matrix A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
      A = 0.5 * (A + A.transpose()).eval();
      const auto sol = solve(eigenvalue_problem(A));
      REQUIRE(sol.status == SolveStatus::Optimal);
      CHECK(std::abs(sol.assignment[0] + min_eig(A)) <= 1e-8);
    }
  }

  TEST_CASE("X >= 0 and -X >= 0 force X = 0") {
    auto reg = std::make_shared<VariableRegistry>();
    const auto X = reg->add_symmetric("X", 2);
    reg->freeze();
    AffineLMIProblem p;
    p.registry = reg;
    p.constraints.push_back({"X >= 0", AffineMatrixExpr(reg->expr(X)), Sense::PositiveDefinite, false});
    p.constraints.push_back({"-X >= 0", AffineMatrixExpr(-1.0 * reg->expr(X)), Sense::PositiveDefinite, false});
    p.objective = Vector::Zero(3);
    p.objective[reg->scalar_id(X, 0, 0)] = 1.0;
    p.objective[reg->scalar_id(X, 1, 1)] = 1.0;
    const auto sol = solve(p);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(reg->value(X, sol.assignment).norm() <= 1e-7);
  }

  TEST_CASE("adding a constraint never lowers the optimum") {
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 50; ++k) {
      const auto pair = random_nested_pair(rng);
      const auto a = solve(pair.loose);
      const auto b = solve(pair.tight);
      REQUIRE(a.status == SolveStatus::Optimal);
      REQUIRE(b.status == SolveStatus::Optimal);
      CHECK(b.objective_value >= a.objective_value - 1e-7);
    }
  }

  TEST_CASE("objective scaling leaves the minimizer unchanged") {
    std::mt19937_64 rng(7);
    const auto pair = random_nested_pair(rng);
    auto scaled = pair.tight;
    scaled.objective *= 1000.0;
    const auto a = solve(pair.tight);
    const auto b = solve(scaled);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(b.objective_value == doctest::Approx(1000.0 * a.objective_value).epsilon(1e-6));
  }

  TEST_CASE("solves are deterministic") {
    const auto m = example1();
    const auto vars = make_variables(m, false);
    const auto p = build_theorem1_system(m, vars, LmiSettings::from_model(m));
    const auto a = solve(p);
    const auto b = solve(p);
    CHECK(a.status == b.status);
    CHECK(a.iterations == b.iterations);
    CHECK((a.assignment - b.assignment).norm() == 0.0);
  }

  TEST_CASE("verification of the zero assignment flags M~") {
    const auto m = example1();
    const auto vars = make_variables(m, false);
    const auto p = build_theorem1_system(m, vars, LmiSettings::from_model(m));
    SDPSolution zero;
    zero.assignment = Vector::Zero(p.scalar_count());
    const auto rec = verify_solution(p, zero);
    CHECK_FALSE(rec.all_satisfied);
    bool flagged = false;
    for (const auto& c : rec.constraints) {
      if (c.label == "M~ > 0") flagged = !c.satisfied;
    }
    CHECK(flagged);
  }

  TEST_CASE("solver margins agree with independent verification") {
    const auto m = example1();
    const auto vars = make_variables(m, false);
    const auto p = build_theorem1_system(m, vars, LmiSettings::from_model(m));
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.max_constraint_eigenvalue <= 1e-8);
    CHECK(sol.min_positive_eigenvalue >= -1e-8);
    const auto rec = verify_solution(p, sol);
    CHECK(rec.all_satisfied);
    CHECK(std::abs(rec.max_negative_constraint_eigenvalue - sol.max_constraint_eigenvalue) <= 1e-10);
    CHECK(std::abs(rec.min_positive_constraint_eigenvalue - sol.min_positive_eigenvalue) <= 1e-10);
  }

  TEST_CASE("contradictory constraints are reported infeasible") {
    auto reg = std::make_shared<VariableRegistry>();
    const auto X = reg->add_symmetric("X", 2);
    reg->freeze();
    AffineLMIProblem p;
    p.registry = reg;
    AffineBlock shifted = reg->expr(X);
    shifted += AffineBlock(Matrix(Matrix::Identity(2, 2)));
    p.constraints.push_back({"X > 0", AffineMatrixExpr(reg->expr(X)), Sense::PositiveDefinite, true});
    p.constraints.push_back({"X + I < 0", AffineMatrixExpr(shifted), Sense::NegativeDefinite, true});
    p.objective = Vector::Zero(3);
    const auto sol = solve(p);
    CHECK(sol.status == SolveStatus::Infeasible);
    CHECK_FALSE(sol.diagnostic.empty());
  }

  TEST_CASE("asymmetric input is rejected") {
    auto reg = std::make_shared<VariableRegistry>();
    const auto K = reg->add_matrix("K", 2, 2);
    reg->freeze();
    AffineLMIProblem p;
    p.registry = reg;
    p.constraints.push_back({"K", AffineMatrixExpr(reg->expr(K)), Sense::PositiveDefinite, true});
    p.objective = Vector::Zero(4);
    CHECK_THROWS_AS(solve(p), SolverError);
  }

  TEST_CASE("SDPA export lists every block") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = -3.0;
    std::ostringstream os;
    write_sdpa(eigenvalue_problem(A), os);
    std::istringstream in(os.str());
    std::string line;
    std::vector<std::string> data;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '*' && line[0] != '"') data.push_back(line);
    }
    REQUIRE(data.size() >= 4);
    CHECK(std::stoi(data[0]) == 1);
    CHECK(std::stoi(data[1]) == 1);
    CHECK(std::stoi(data[2]) == 2);
  }
}

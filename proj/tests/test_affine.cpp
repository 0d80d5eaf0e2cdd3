#include "tsfilt/affine.hpp"
#include "tsfilt/error.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace tsfilt;

namespace {

Vector random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_SUITE("affine") {
  TEST_CASE("symmetric variables share mirrored scalar ids") {
    VariableRegistry reg;
    const auto P = reg.add_symmetric("P", 3);
    const auto K = reg.add_matrix("K", 2, 3);
    const auto g = reg.add_scalar("g");
    CHECK(reg.scalar_count() == 6 + 6 + 1);
    CHECK(reg.scalar_id(P, 0, 2) == reg.scalar_id(P, 2, 0));
    CHECK(reg.scalar_id(K, 0, 1) != reg.scalar_id(K, 1, 0));
    CHECK(reg.owner(reg.scalar_id(g, 0, 0)) == g);
    CHECK(reg.find("K").value() == K);
    CHECK_FALSE(reg.find("nope").has_value());
    CHECK_THROWS_AS(reg.scalar_id(K, 2, 0), DomainError);
    reg.freeze();
    CHECK_THROWS(reg.add_scalar("late"));
  }

  TEST_CASE("set_value and value round-trip") {
    VariableRegistry reg;
    const auto P = reg.add_symmetric("P", 3);
    const auto K = reg.add_matrix("K", 2, 3);
    Vector x = Vector::Zero(reg.scalar_count());
    Matrix p(3, 3);
    p << 2, 1, 0, 1, 3, -1, 0, -1, 4;
    Matrix k(2, 3);
    k << 1, 2, 3, 4, 5, 6;
    reg.set_value(P, p, x);
    reg.set_value(K, k, x);
    CHECK(reg.value(P, x).isApprox(p));
    CHECK(reg.value(K, x).isApprox(k));
    CHECK(reg.expr(P).evaluate(x).isApprox(p));
    CHECK(reg.expr(K).evaluate(x).isApprox(k));
  }

  TEST_CASE("block algebra matches dense arithmetic") {
    VariableRegistry reg;
    const auto P = reg.add_symmetric("P", 2);
    const auto K = reg.add_matrix("K", 2, 2);
    const Vector x = random_vector(reg.scalar_count(), 11);
    const Matrix p = reg.value(P, x), k = reg.value(K, x);
    Matrix A(2, 2);
    A << 1, 2, -1, 0.5;
    const AffineBlock e = A.transpose() * reg.expr(P) + reg.expr(K) * A - 2.0 * reg.expr(K).transpose();
    CHECK(e.evaluate(x).isApprox(A.transpose() * p + k * A - 2.0 * k.transpose()));
    const auto cat = AffineBlock::vcat({AffineBlock::hcat({reg.expr(P), reg.expr(K)}),
                                        AffineBlock::hcat({reg.expr(K), reg.expr(P)})});
    const Matrix c = cat.evaluate(x);
    CHECK(c.topRightCorner(2, 2).isApprox(k));
    CHECK(c.bottomRightCorner(2, 2).isApprox(p));
    AffineBlock z(4, 4);
    z.add_at(2, 0, reg.expr(K));
    CHECK(z.evaluate(x).bottomLeftCorner(2, 2).isApprox(k));
    CHECK(z.evaluate(x).topRows(2).isZero());
  }

  TEST_CASE("assembler mirrors off-diagonal blocks") {
    VariableRegistry reg;
    const auto P = reg.add_symmetric("P", 2);
    const auto K = reg.add_matrix("K", 2, 2);
    const Vector x = random_vector(reg.scalar_count(), 5);
    SymmetricAssembler as(4);
    as.place(0, 0, reg.expr(P));
    as.place(2, 0, reg.expr(K));
    as.place(2, 2, -1.0 * reg.expr(P));
    const auto expr = as.finish();
    CHECK(expr.asymmetry() == 0.0);
    const Matrix m = expr.evaluate(x);
    CHECK(m.isApprox(m.transpose()));
    CHECK(m.topRightCorner(2, 2).isApprox(reg.value(K, x).transpose()));
  }

  TEST_CASE("expression coefficients, shift and dependencies") {
    VariableRegistry reg;
    const auto P = reg.add_symmetric("P", 2);
    const auto g = reg.add_scalar("g");
    AffineMatrixExpr e(reg.expr(P));
    e.shift(-3.0);
    const int gid = reg.scalar_id(g, 0, 0);
    CHECK_FALSE(e.depends_on(gid));
    CHECK(e.variables().size() == 3);
    CHECK(e.coefficient(gid).isZero());
    CHECK(e.coefficient(reg.scalar_id(P, 1, 0)).isApprox((Matrix(2, 2) << 0, 1, 1, 0).finished()));
    CHECK(e.constant().isApprox(-3.0 * Matrix::Identity(2, 2)));
    std::ostringstream os;
    e.dump(os, &reg);
    CHECK(os.str().find("P") != std::string::npos);
  }
}

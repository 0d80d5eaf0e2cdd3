#pragma once

#include "tsfilt/model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tsfilt {

/// Handle to a matrix-valued decision variable in a VariableRegistry.
struct MatrixVar {
  int id = -1;
  bool valid() const { return id >= 0; }
  bool operator==(const MatrixVar&) const = default;
};

struct MatrixVarInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int first_scalar = 0;  // scalar ids [first_scalar, first_scalar + scalar_count)

  int scalar_count() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
};

class AffineBlock;

/// Registry of matrix decision variables, each owning a contiguous range of
/// scalar ids. Symmetric variables are parameterized by their lower triangle.
class VariableRegistry {
 public:
  MatrixVar add_symmetric(const std::string& name, int dim);
  MatrixVar add_matrix(const std::string& name, int rows, int cols);
  MatrixVar add_scalar(const std::string& name) { return add_matrix(name, 1, 1); }

  /// No variables can be added once frozen.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  int scalar_count() const { return scalar_count_; }
  int matrix_count() const { return static_cast<int>(vars_.size()); }
  const MatrixVarInfo& info(MatrixVar v) const;
  std::optional<MatrixVar> find(const std::string& name) const;

  /// Scalar id of entry (r, c); for symmetric variables (r, c) and (c, r) share one id.
  int scalar_id(MatrixVar v, int r, int c) const;
  /// Matrix variable that owns a scalar id.
  MatrixVar owner(int scalar) const;
  std::string scalar_name(int scalar) const;

  /// The variable as an affine expression of the scalar decision variables.
  AffineBlock expr(MatrixVar v) const;
  /// Value of a matrix variable under a full scalar assignment.
  Matrix value(MatrixVar v, const Vector& x) const;
  /// Writes a matrix value into the scalar assignment (lower triangle for symmetric).
  void set_value(MatrixVar v, const Matrix& value, Vector& x) const;

 private:
  MatrixVar add(MatrixVarInfo info);

  std::vector<MatrixVarInfo> vars_;
  int scalar_count_ = 0;
  bool frozen_ = false;
};

/// Rectangular matrix affine in scalar decision variables:
/// constant + sum_k x_k * coeff_k. Terms are kept sorted by scalar id.
class AffineBlock {
 public:
  AffineBlock() = default;
  AffineBlock(int rows, int cols) : constant_(Matrix::Zero(rows, cols)) {}
  explicit AffineBlock(Matrix constant) : constant_(std::move(constant)) {}

  static AffineBlock zero(int rows, int cols) { return AffineBlock(rows, cols); }

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Matrix& constant() const { return constant_; }
  const std::vector<std::pair<int, Matrix>>& terms() const { return terms_; }

  void add_term(int scalar, const Matrix& coeff);

  AffineBlock transpose() const;
  Matrix evaluate(const Vector& x) const;

  /// Places `other` with its top-left corner at (r, c), adding to existing content.
  void add_at(int r, int c, const AffineBlock& other);

  static AffineBlock hcat(const std::vector<AffineBlock>& parts);
  static AffineBlock vcat(const std::vector<AffineBlock>& parts);

  AffineBlock& operator+=(const AffineBlock& o);
  AffineBlock& operator-=(const AffineBlock& o);
  AffineBlock& operator*=(double s);

  friend AffineBlock operator+(AffineBlock a, const AffineBlock& b) { return a += b; }
  friend AffineBlock operator-(AffineBlock a, const AffineBlock& b) { return a -= b; }
  friend AffineBlock operator-(AffineBlock a) { return a *= -1.0; }
  friend AffineBlock operator*(double s, AffineBlock a) { return a *= s; }
  friend AffineBlock operator*(const Matrix& m, const AffineBlock& a);
  friend AffineBlock operator*(const AffineBlock& a, const Matrix& m);

 private:
  Matrix constant_;
  std::vector<std::pair<int, Matrix>> terms_;
};

/// Sparse coordinate entry of a coefficient matrix (both triangles stored).
struct SparseEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct SparseCoeff {
  int scalar = 0;
  std::vector<SparseEntry> entries;  // sorted by (row, col), no duplicates
};

/// Square symmetric matrix affine in scalar decision variables.
class AffineMatrixExpr {
 public:
  AffineMatrixExpr() = default;
  explicit AffineMatrixExpr(int dim) : constant_(Matrix::Zero(dim, dim)) {}
  /// Takes a square AffineBlock; coefficients are stored sparsely.
  explicit AffineMatrixExpr(const AffineBlock& block);

  int dim() const { return static_cast<int>(constant_.rows()); }
  const Matrix& constant() const { return constant_; }
  const std::vector<SparseCoeff>& terms() const { return terms_; }

  /// Dense coefficient of one scalar variable (zero matrix if absent).
  Matrix coefficient(int scalar) const;
  std::vector<int> variables() const;
  bool depends_on(int scalar) const;

  Matrix evaluate(const Vector& x) const;

  /// max |M - M^T| over the constant and every coefficient.
  double asymmetry() const;

  AffineMatrixExpr& operator+=(const AffineMatrixExpr& o);
  AffineMatrixExpr& operator*=(double s);
  friend AffineMatrixExpr operator+(AffineMatrixExpr a, const AffineMatrixExpr& b) { return a += b; }
  friend AffineMatrixExpr operator*(double s, AffineMatrixExpr a) { return a *= s; }
  friend AffineMatrixExpr operator-(AffineMatrixExpr a, const AffineMatrixExpr& b) { return a += -1.0 * b; }

  /// Adds s*I to the constant term.
  void shift(double s);

  /// Matrix-market-style coordinate listing (constant, then one section per variable).
  void dump(std::ostream& os, const VariableRegistry* registry = nullptr) const;

 private:
  Matrix constant_;
  std::vector<SparseCoeff> terms_;  // sorted by scalar id
};

/// Helper for assembling symmetric block matrices: off-diagonal blocks are
/// mirrored, diagonal blocks must already be symmetric.
class SymmetricAssembler {
 public:
  explicit SymmetricAssembler(int dim) : block_(dim, dim) {}
  /// Places `b` at (r, c); when r != c its transpose goes to (c, r).
  void place(int r, int c, const AffineBlock& b);
  AffineMatrixExpr finish() const;

 private:
  AffineBlock block_;
};

enum class Sense { NegativeDefinite, PositiveDefinite };

struct LmiConstraint {
  std::string label;
  AffineMatrixExpr expr;
  Sense sense = Sense::NegativeDefinite;
  /// Strict constraints are tightened by the problem's strict margin, others are closed.
  bool strict = true;
};

/// A set of symmetric matrix inequalities affine in the registry's scalars,
/// plus a linear objective to minimize.
struct AffineLMIProblem {
  std::shared_ptr<const VariableRegistry> registry;
  std::vector<LmiConstraint> constraints;
  Vector objective;  // size registry->scalar_count(); zero means pure feasibility
  double strict_margin = 1e-7;

  int scalar_count() const { return registry ? registry->scalar_count() : 0; }
  /// Throws DomainError if an expression references an unknown scalar or the
  /// objective has the wrong size.
  void check() const;
};

}  // namespace tsfilt

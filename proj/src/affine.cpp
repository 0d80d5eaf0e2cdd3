#include "tsfilt/affine.hpp"

#include "tsfilt/error.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>

namespace tsfilt {

// ---------------------------------------------------------------------------
// VariableRegistry

MatrixVar VariableRegistry::add(MatrixVarInfo info) {
  if (frozen_) throw DomainError("variable registry is frozen; cannot add '" + info.name + "'");
  if (find(info.name)) throw DomainError("duplicate variable name '" + info.name + "'");
  info.first_scalar = scalar_count_;
  scalar_count_ += info.scalar_count();
  vars_.push_back(std::move(info));
  return MatrixVar{static_cast<int>(vars_.size()) - 1};
}

MatrixVar VariableRegistry::add_symmetric(const std::string& name, int dim) {
  return add({name, dim, dim, true, 0});
}

MatrixVar VariableRegistry::add_matrix(const std::string& name, int rows, int cols) {
  return add({name, rows, cols, false, 0});
}

const MatrixVarInfo& VariableRegistry::info(MatrixVar v) const {
  if (v.id < 0 || v.id >= matrix_count()) throw DomainError("unknown matrix variable handle");
  return vars_[static_cast<std::size_t>(v.id)];
}

std::optional<MatrixVar> VariableRegistry::find(const std::string& name) const {
  for (int i = 0; i < matrix_count(); ++i) {
    if (vars_[static_cast<std::size_t>(i)].name == name) return MatrixVar{i};
  }
  return std::nullopt;
}

int VariableRegistry::scalar_id(MatrixVar v, int r, int c) const {
  const auto& in = info(v);
  if (r < 0 || c < 0 || r >= in.rows || c >= in.cols) throw DomainError("entry out of range for " + in.name);
  if (in.symmetric) {
    if (r < c) std::swap(r, c);
    // lower triangle, row-major: rows 0..r-1 hold r(r+1)/2 entries
    return in.first_scalar + r * (r + 1) / 2 + c;
  }
  return in.first_scalar + r * in.cols + c;
}

MatrixVar VariableRegistry::owner(int scalar) const {
  if (scalar < 0 || scalar >= scalar_count_) throw DomainError("scalar id out of range");
  auto it = std::upper_bound(vars_.begin(), vars_.end(), scalar,
                             [](int s, const MatrixVarInfo& in) { return s < in.first_scalar; });
  return MatrixVar{static_cast<int>(it - vars_.begin()) - 1};
}

std::string VariableRegistry::scalar_name(int scalar) const {
  const MatrixVar v = owner(scalar);
  const auto& in = info(v);
  const int local = scalar - in.first_scalar;
  int r = 0, c = 0;
  if (in.symmetric) {
    while ((r + 1) * (r + 2) / 2 <= local) ++r;
    c = local - r * (r + 1) / 2;
  } else {
    r = local / in.cols;
    c = local % in.cols;
  }
  return in.name + "(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")";
}

AffineBlock VariableRegistry::expr(MatrixVar v) const {
  const auto& in = info(v);
  AffineBlock b(in.rows, in.cols);
  for (int r = 0; r < in.rows; ++r) {
    for (int c = 0; c < in.cols; ++c) {
      if (in.symmetric && c > r) continue;
      Matrix coeff = Matrix::Zero(in.rows, in.cols);
      coeff(r, c) = 1.0;
      if (in.symmetric) coeff(c, r) = 1.0;
      b.add_term(scalar_id(v, r, c), coeff);
    }
  }
  return b;
}

Matrix VariableRegistry::value(MatrixVar v, const Vector& x) const {
  const auto& in = info(v);
  if (x.size() != scalar_count_) throw DomainError("assignment size does not match registry");
  Matrix m(in.rows, in.cols);
  for (int r = 0; r < in.rows; ++r) {
    for (int c = 0; c < in.cols; ++c) m(r, c) = x[scalar_id(v, r, c)];
  }
  return m;
}

void VariableRegistry::set_value(MatrixVar v, const Matrix& value, Vector& x) const {
  const auto& in = info(v);
  if (value.rows() != in.rows || value.cols() != in.cols) throw DomainError("shape mismatch for " + in.name);
  if (x.size() != scalar_count_) x = Vector::Zero(scalar_count_);
  for (int r = 0; r < in.rows; ++r) {
    for (int c = 0; c < in.cols; ++c) {
      if (in.symmetric && c > r) continue;
      x[scalar_id(v, r, c)] = value(r, c);
    }
  }
}

// ---------------------------------------------------------------------------
// AffineBlock

void AffineBlock::add_term(int scalar, const Matrix& coeff) {
  if (coeff.rows() != rows() || coeff.cols() != cols()) throw DomainError("affine term shape mismatch");
  auto it = std::lower_bound(terms_.begin(), terms_.end(), scalar,
                             [](const auto& t, int s) { return t.first < s; });
  if (it != terms_.end() && it->first == scalar) {
    it->second += coeff;
  } else {
    terms_.insert(it, {scalar, coeff});
  }
}

AffineBlock AffineBlock::transpose() const {
  AffineBlock out(constant_.transpose());
  out.terms_.reserve(terms_.size());
  for (const auto& [s, m] : terms_) out.terms_.emplace_back(s, m.transpose());
  return out;
}

Matrix AffineBlock::evaluate(const Vector& x) const {
  Matrix out = constant_;
  for (const auto& [s, m] : terms_) {
    if (s >= x.size()) throw DomainError("assignment is missing scalar " + std::to_string(s));
    out += x[s] * m;
  }
  return out;
}

void AffineBlock::add_at(int r, int c, const AffineBlock& other) {
  if (r + other.rows() > rows() || c + other.cols() > cols() || r < 0 || c < 0) {
    throw DomainError("affine block placement out of range");
  }
  constant_.block(r, c, other.rows(), other.cols()) += other.constant_;
  for (const auto& [s, m] : other.terms_) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), s, [](const auto& t, int v) { return t.first < v; });
    if (it == terms_.end() || it->first != s) it = terms_.insert(it, {s, Matrix::Zero(rows(), cols())});
    it->second.block(r, c, m.rows(), m.cols()) += m;
  }
}

AffineBlock AffineBlock::hcat(const std::vector<AffineBlock>& parts) {
  int cols = 0;
  const int rows = parts.empty() ? 0 : parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DomainError("hcat: row mismatch");
    cols += p.cols();
  }
  AffineBlock out(rows, cols);
  int c = 0;
  for (const auto& p : parts) {
    out.add_at(0, c, p);
    c += p.cols();
  }
  return out;
}

AffineBlock AffineBlock::vcat(const std::vector<AffineBlock>& parts) {
  int rows = 0;
  const int cols = parts.empty() ? 0 : parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DomainError("vcat: column mismatch");
    rows += p.rows();
  }
  AffineBlock out(rows, cols);
  int r = 0;
  for (const auto& p : parts) {
    out.add_at(r, 0, p);
    r += p.rows();
  }
  return out;
}

AffineBlock& AffineBlock::operator+=(const AffineBlock& o) {
  if (o.rows() != rows() || o.cols() != cols()) throw DomainError("affine block sum: shape mismatch");
  add_at(0, 0, o);
  return *this;
}

AffineBlock& AffineBlock::operator-=(const AffineBlock& o) { return *this += -1.0 * o; }

AffineBlock& AffineBlock::operator*=(double s) {
  constant_ *= s;
  for (auto& t : terms_) t.second *= s;
  return *this;
}

AffineBlock operator*(const Matrix& m, const AffineBlock& a) {
  if (m.cols() != a.rows()) throw DomainError("matrix * affine block: shape mismatch");
  AffineBlock out(m * a.constant_);
  out.terms_.reserve(a.terms_.size());
  for (const auto& [s, c] : a.terms_) out.terms_.emplace_back(s, m * c);
  return out;
}

AffineBlock operator*(const AffineBlock& a, const Matrix& m) {
  if (a.cols() != m.rows()) throw DomainError("affine block * matrix: shape mismatch");
  AffineBlock out(a.constant_ * m);
  out.terms_.reserve(a.terms_.size());
  for (const auto& [s, c] : a.terms_) out.terms_.emplace_back(s, c * m);
  return out;
}

// ---------------------------------------------------------------------------
// AffineMatrixExpr

AffineMatrixExpr::AffineMatrixExpr(const AffineBlock& block) : constant_(block.constant()) {
  if (block.rows() != block.cols()) throw DomainError("AffineMatrixExpr requires a square block");
  for (const auto& [s, m] : block.terms()) {
    SparseCoeff sc{s, {}};
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) {
        if (m(r, c) != 0.0) sc.entries.push_back({r, c, m(r, c)});
      }
    }
    if (!sc.entries.empty()) terms_.push_back(std::move(sc));
  }
}

Matrix AffineMatrixExpr::coefficient(int scalar) const {
  Matrix m = Matrix::Zero(dim(), dim());
  auto it = std::lower_bound(terms_.begin(), terms_.end(), scalar,
                             [](const SparseCoeff& t, int s) { return t.scalar < s; });
  if (it != terms_.end() && it->scalar == scalar) {
    for (const auto& e : it->entries) m(e.row, e.col) = e.value;
  }
  return m;
}

std::vector<int> AffineMatrixExpr::variables() const {
  std::vector<int> v;
  v.reserve(terms_.size());
  for (const auto& t : terms_) v.push_back(t.scalar);
  return v;
}

bool AffineMatrixExpr::depends_on(int scalar) const {
  return std::binary_search(terms_.begin(), terms_.end(), SparseCoeff{scalar, {}},
                            [](const SparseCoeff& a, const SparseCoeff& b) { return a.scalar < b.scalar; });
}

Matrix AffineMatrixExpr::evaluate(const Vector& x) const {
  Matrix out = constant_;
  for (const auto& t : terms_) {
    if (t.scalar >= x.size()) throw DomainError("assignment is missing scalar " + std::to_string(t.scalar));
    const double v = x[t.scalar];
    if (v == 0.0) continue;
    for (const auto& e : t.entries) out(e.row, e.col) += v * e.value;
  }
  return out;
}

double AffineMatrixExpr::asymmetry() const {
  double worst = (constant_ - constant_.transpose()).cwiseAbs().maxCoeff();
  for (const auto& t : terms_) {
    const Matrix m = coefficient(t.scalar);
    worst = std::max(worst, (m - m.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

AffineMatrixExpr& AffineMatrixExpr::operator+=(const AffineMatrixExpr& o) {
  if (o.dim() != dim()) throw DomainError("AffineMatrixExpr sum: dimension mismatch");
  constant_ += o.constant_;
  std::vector<SparseCoeff> merged;
  merged.reserve(terms_.size() + o.terms_.size());
  auto a = terms_.begin();
  auto b = o.terms_.begin();
  auto merge_entries = [](const std::vector<SparseEntry>& x, const std::vector<SparseEntry>& y) {
    std::vector<SparseEntry> out;
    out.reserve(x.size() + y.size());
    auto less = [](const SparseEntry& p, const SparseEntry& q) {
      return p.row != q.row ? p.row < q.row : p.col < q.col;
    };
    auto i = x.begin();
    auto j = y.begin();
    while (i != x.end() || j != y.end()) {
      if (j == y.end() || (i != x.end() && less(*i, *j))) {
        out.push_back(*i++);
      } else if (i == x.end() || less(*j, *i)) {
        out.push_back(*j++);
      } else {
        const double v = i->value + j->value;
        if (v != 0.0) out.push_back({i->row, i->col, v});
        ++i;
        ++j;
      }
    }
    return out;
  };
  while (a != terms_.end() || b != o.terms_.end()) {
    if (b == o.terms_.end() || (a != terms_.end() && a->scalar < b->scalar)) {
      merged.push_back(std::move(*a++));
    } else if (a == terms_.end() || b->scalar < a->scalar) {
      merged.push_back(*b++);
    } else {
      SparseCoeff sc{a->scalar, merge_entries(a->entries, b->entries)};
      if (!sc.entries.empty()) merged.push_back(std::move(sc));
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::operator*=(double s) {
  constant_ *= s;
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) {
    for (auto& e : t.entries) e.value *= s;
  }
  return *this;
}

void AffineMatrixExpr::shift(double s) { constant_.diagonal().array() += s; }

void AffineMatrixExpr::dump(std::ostream& os, const VariableRegistry* registry) const {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(17);
  os << "%%AffineMatrixExpr coordinate real symmetric\n";
  os << "% dimension " << dim() << ", " << terms_.size() << " variable terms\n";
  auto section = [&](const std::string& title, const std::vector<SparseEntry>& entries) {
    os << "% " << title << "\n";
    int count = 0;
    for (const auto& e : entries) count += e.row >= e.col ? 1 : 0;
    os << dim() << " " << dim() << " " << count << "\n";
    for (const auto& e : entries) {
      if (e.row >= e.col) os << e.row + 1 << " " << e.col + 1 << " " << e.value << "\n";
    }
  };
  std::vector<SparseEntry> c;
  for (int r = 0; r < dim(); ++r) {
    for (int k = 0; k < dim(); ++k) {
      if (constant_(r, k) != 0.0) c.push_back({r, k, constant_(r, k)});
    }
  }
  section("constant", c);
  for (const auto& t : terms_) {
    std::string title = "variable " + std::to_string(t.scalar);
    if (registry) title += " " + registry->scalar_name(t.scalar);
    section(title, t.entries);
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

// ---------------------------------------------------------------------------

void SymmetricAssembler::place(int r, int c, const AffineBlock& b) {
  if (r == c) {
    const AffineBlock bt = b.transpose();
    double asym = (b.constant() - bt.constant()).cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < b.terms().size(); ++k) {
      asym = std::max(asym, (b.terms()[k].second - bt.terms()[k].second).cwiseAbs().maxCoeff());
    }
    if (asym > 1e-12) throw DomainError("diagonal block is not symmetric");
    block_.add_at(r, c, b);
  } else {
    block_.add_at(r, c, b);
    block_.add_at(c, r, b.transpose());
  }
}

AffineMatrixExpr SymmetricAssembler::finish() const { return AffineMatrixExpr(block_); }

// ---------------------------------------------------------------------------

void AffineLMIProblem::check() const {
  if (!registry) throw DomainError("problem has no variable registry");
  const int m = registry->scalar_count();
  if (objective.size() != 0 && objective.size() != m) {
    throw DomainError("objective size does not match the registry");
  }
  for (const auto& c : constraints) {
    for (const auto& t : c.expr.terms()) {
      if (t.scalar < 0 || t.scalar >= m) {
        throw DomainError("constraint '" + c.label + "' references unregistered scalar " + std::to_string(t.scalar));
      }
    }
  }
}

}  // namespace tsfilt

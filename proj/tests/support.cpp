#include "support.hpp"

#include "tsfilt/cli.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tsfilt::testing {

namespace fs = std::filesystem;

fs::path data_file(const std::string& name) { return fs::path(TSFILT_DATA_DIR) / name; }
fs::path test_file(const std::string& name) { return fs::path(TSFILT_TEST_DATA_DIR) / name; }

TSModel example1() { return load_model_file(data_file("example1.json")); }
TSModel example2() { return load_model_file(data_file("example2.json")); }

TSModel edited_model(const std::string& name, const std::function<void(nlohmann::json&)>& edit) {
  std::ifstream in(data_file(name));
  auto doc = nlohmann::json::parse(in);
  edit(doc);
  return load_model(doc);
}

FilterRealization hand_filter(const TSModel& model) {
  const auto d = model.dims();
  FilterRealization f;
  for (int j = 0; j < model.filter_rule_count; ++j) {
    f.A_f.push_back(-(2.0 + j) * Matrix::Identity(d.n, d.n));
    f.B_f.push_back(Matrix::Constant(d.n, d.m_y, 0.5));
    f.C_f.push_back(Matrix::Constant(d.q, d.n, 0.1 * (j + 1)));
  }
  f.gamma = 1.0;
  return f;
}

AffineLMIProblem eigenvalue_problem(const Matrix& A) {
  auto reg = std::make_shared<VariableRegistry>();
  const auto t = reg->add_scalar("t");
  reg->freeze();
  AffineBlock blk(A);
  blk.add_term(reg->scalar_id(t, 0, 0), Matrix::Identity(A.rows(), A.cols()));
  AffineLMIProblem p;
  p.registry = reg;
  p.constraints.push_back({"A + tI", AffineMatrixExpr(blk), Sense::PositiveDefinite, false});
  p.objective = Vector::Ones(1);
  return p;
}

namespace {

Matrix random_symmetric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return 0.5 * (m + m.transpose());
}

}  // namespace

NestedPair random_nested_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(1, 3), nd(2, 4);
  const int k = kd(rng);
  const int n = nd(rng);
  auto reg = std::make_shared<VariableRegistry>();
  std::vector<MatrixVar> x;
  for (int i = 0; i < k; ++i) x.push_back(reg->add_scalar("x" + std::to_string(i)));
  const auto t = reg->add_scalar("t");
  reg->freeze();

  auto lifted = [&]() {
    AffineBlock b(random_symmetric(rng, n));
    for (const auto& v : x) b.add_term(reg->scalar_id(v, 0, 0), random_symmetric(rng, n));
    b.add_term(reg->scalar_id(t, 0, 0), Matrix::Identity(n, n));
    return AffineMatrixExpr(b);
  };
  AffineBlock box(Matrix::Identity(2 * k, 2 * k));
  for (int i = 0; i < k; ++i) {
    Matrix c = Matrix::Zero(2 * k, 2 * k);
    c(i, i) = -1.0;
    c(k + i, k + i) = 1.0;
    box.add_term(reg->scalar_id(x[static_cast<std::size_t>(i)], 0, 0), c);
  }

  NestedPair p;
  p.loose.registry = reg;
  p.loose.objective = Vector::Zero(reg->scalar_count());
  p.loose.objective[reg->scalar_id(t, 0, 0)] = 1.0;
  p.loose.constraints.push_back({"box", AffineMatrixExpr(box), Sense::PositiveDefinite, false});
  p.loose.constraints.push_back({"F_a + tI", lifted(), Sense::PositiveDefinite, false});
  p.tight = p.loose;
  p.tight.constraints.push_back({"F_b + tI", lifted(), Sense::PositiveDefinite, false});
  return p;
}

std::vector<double> rk4_order_exponents(const TSModel& model, const FilterRealization& filter, double horizon,
                                        const std::vector<double>& steps) {
  std::vector<Vector> finals;
  for (double s : steps) {
    auto opt = scenario_options(model, "decaying-sine");
    opt.horizon = horizon;
    opt.step = s;
    const auto tr = simulate(model, filter, opt);
    finals.push_back(tr.zeta.row(tr.samples() - 1).transpose());
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 2 < finals.size(); ++i) {
    const double d0 = (finals[i] - finals[i + 1]).norm();
    const double d1 = (finals[i + 1] - finals[i + 2]).norm();
    out.push_back(std::log2(d0 / d1));
  }
  return out;
}

CliResult cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"tsfilt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tsfilt-tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace tsfilt::testing

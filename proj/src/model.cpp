#include "tsfilt/model.hpp"

#include "tsfilt/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace tsfilt {

using nlohmann::json;

ValidationError::ValidationError(std::vector<std::string> findings)
    : Error([&] {
        std::string msg = "validation failed";
        for (const auto& f : findings) msg += "\n  - " + f;
        return msg;
      }()),
      findings_(std::move(findings)) {}

ValidationError::ValidationError(const std::string& finding)
    : ValidationError(std::vector<std::string>{finding}) {}

namespace {

constexpr double kNormTol = 1e-12;
constexpr int kValidationGrid = 2001;

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

double sigmoid(const SigmoidShape& s, double psi) {
  const double arg = -s.sign * (psi - s.center);
  // 1/(1+e^arg) without overflow for large |arg|
  const double logistic = arg > 0 ? std::exp(-arg) / (1.0 + std::exp(-arg)) : 1.0 / (1.0 + std::exp(arg));
  return s.offset + s.scale * logistic;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool PlantRule::operator==(const PlantRule& o) const {
  return same_matrix(A, o.A) && same_matrix(A_tau, o.A_tau) && same_matrix(B, o.B) &&
         same_matrix(C, o.C) && same_matrix(C_tau, o.C_tau) && same_matrix(D, o.D) &&
         same_matrix(E, o.E) && same_matrix(E_tau, o.E_tau);
}

// ---------------------------------------------------------------------------
// MembershipFamily

MembershipFamily::MembershipFamily(PremiseSignal premise, std::vector<MembershipFunction> members)
    : premise_(premise), members_(std::move(members)) {}

Vector MembershipFamily::evaluate(double psi) const {
  const int k = size();
  Vector w(k);
  // Analytic and tabulated members first, complements afterwards.
  for (int i = 0; i < k; ++i) {
    const auto& shape = members_[i].shape;
    if (const auto* s = std::get_if<SigmoidShape>(&shape)) {
      w[i] = sigmoid(*s, psi);
    } else if (const auto* t = std::get_if<TabulatedShape>(&shape)) {
      const auto& xs = t->points;
      if (xs.empty() || psi < xs.front() || psi > xs.back()) {
        std::ostringstream os;
        os << "premise value " << psi << " outside tabulated membership domain";
        if (!xs.empty()) os << " [" << xs.front() << ", " << xs.back() << "]";
        throw DomainError(os.str());
      }
      auto it = std::upper_bound(xs.begin(), xs.end(), psi);
      if (it == xs.end()) {
        w[i] = t->values.back();
      } else {
        const auto hi = static_cast<std::size_t>(it - xs.begin());
        const auto lo = hi - 1;
        const double frac = (psi - xs[lo]) / (xs[hi] - xs[lo]);
        w[i] = t->values[lo] + frac * (t->values[hi] - t->values[lo]);
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    if (const auto* c = std::get_if<ComplementShape>(&members_[i].shape)) {
      double v = 1.0;
      for (int j : c->of) v -= w[j];
      w[i] = std::max(v, 0.0);  // rounding can leave -1e-17
    }
  }
  return w;
}

Interval MembershipFamily::domain() const {
  Interval d{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& m : members_) {
    if (const auto* t = std::get_if<TabulatedShape>(&m.shape); t && !t->points.empty()) {
      d.lo = std::max(d.lo, t->points.front());
      d.hi = std::min(d.hi, t->points.back());
    }
  }
  return d;
}

std::optional<std::pair<Vector, Vector>> MembershipFamily::asymptotes() const {
  const int k = size();
  Vector lo(k), hi(k);
  for (int i = 0; i < k; ++i) {
    const auto& shape = members_[i].shape;
    if (std::holds_alternative<TabulatedShape>(shape)) return std::nullopt;
    if (const auto* s = std::get_if<SigmoidShape>(&shape)) {
      // psi -> +inf: logistic(sign * inf)
      const double at_pos = s->sign > 0 ? s->offset + s->scale : s->offset;
      const double at_neg = s->sign > 0 ? s->offset : s->offset + s->scale;
      lo[i] = at_neg;
      hi[i] = at_pos;
    }
  }
  for (int i = 0; i < k; ++i) {
    if (const auto* c = std::get_if<ComplementShape>(&members_[i].shape)) {
      lo[i] = 1.0;
      hi[i] = 1.0;
      for (int j : c->of) {
        lo[i] -= lo[j];
        hi[i] -= hi[j];
      }
    }
  }
  return std::make_pair(lo, hi);
}

// ---------------------------------------------------------------------------
// TSModel

Dims TSModel::dims() const {
  if (plant_rules.empty()) return {};
  const auto& r = plant_rules.front();
  return {static_cast<int>(r.A.rows()), static_cast<int>(r.C.rows()), static_cast<int>(r.B.cols()),
          static_cast<int>(r.E.rows())};
}

namespace {

int most_common(const std::vector<int>& v) {
  std::map<int, int> count;
  for (int x : v) ++count[x];
  int best = 0, hits = -1;
  for (const auto& [x, c] : count) {
    if (c > hits) best = x, hits = c;
  }
  return best;
}

// Majority shape over every rule matrix, so a single bad matrix gets blamed
// instead of everything that disagrees with it.
Dims consensus_dims(const TSModel& model) {
  std::vector<int> n, my, pw, q;
  for (const auto& r : model.plant_rules) {
    for (Eigen::Index x : {r.A.rows(), r.A.cols(), r.A_tau.rows(), r.A_tau.cols(), r.B.rows(), r.C.cols(), r.C_tau.cols(),
                  r.E.cols(), r.E_tau.cols()}) {
      n.push_back(static_cast<int>(x));
    }
    for (Eigen::Index x : {r.C.rows(), r.C_tau.rows(), r.D.rows()}) my.push_back(static_cast<int>(x));
    for (Eigen::Index x : {r.B.cols(), r.D.cols()}) pw.push_back(static_cast<int>(x));
    for (Eigen::Index x : {r.E.rows(), r.E_tau.rows()}) q.push_back(static_cast<int>(x));
  }
  if (n.empty()) return {};
  return {most_common(n), most_common(my), most_common(pw), most_common(q)};
}

void check_family(const MembershipFamily& fam, const std::string& label, int expected_count,
                  const BoundsConfig& bounds, int n, std::vector<std::string>& out) {
  if (fam.size() != expected_count) {
    out.push_back(label + ": expected " + std::to_string(expected_count) + " membership functions, got " +
                  std::to_string(fam.size()));
    return;
  }
  const auto& prem = fam.premise();
  if (prem.kind != PremiseSignal::Kind::Time && (prem.index < 0 || prem.index >= n)) {
    out.push_back(label + ": premise state index " + std::to_string(prem.index) + " out of range");
  }
  bool structural_ok = true;
  for (int i = 0; i < fam.size(); ++i) {
    const auto& shape = fam.members()[i].shape;
    const std::string who = label + "[" + std::to_string(i) + "]";
    if (const auto* s = std::get_if<SigmoidShape>(&shape)) {
      if (s->sign != 1 && s->sign != -1) {
        out.push_back(who + ": sigmoid sign must be +1 or -1");
        structural_ok = false;
      }
      if (!std::isfinite(s->offset) || !std::isfinite(s->scale) || !std::isfinite(s->center)) {
        out.push_back(who + ": sigmoid parameters must be finite");
        structural_ok = false;
      }
    } else if (const auto* c = std::get_if<ComplementShape>(&shape)) {
      if (c->of.empty()) {
        out.push_back(who + ": complement must reference at least one member");
        structural_ok = false;
      }
      std::set<int> seen;
      for (int j : c->of) {
        if (j < 0 || j >= fam.size() || j == i) {
          out.push_back(who + ": complement references invalid member " + std::to_string(j));
          structural_ok = false;
        } else if (std::holds_alternative<ComplementShape>(fam.members()[j].shape)) {
          out.push_back(who + ": complement may only reference non-complement members");
          structural_ok = false;
        } else if (!seen.insert(j).second) {
          out.push_back(who + ": complement references member " + std::to_string(j) + " twice");
          structural_ok = false;
        }
      }
    } else if (const auto* t = std::get_if<TabulatedShape>(&shape)) {
      if (t->points.size() < 2 || t->points.size() != t->values.size()) {
        out.push_back(who + ": tabulated membership needs >= 2 points and matching values");
        structural_ok = false;
      } else if (!std::is_sorted(t->points.begin(), t->points.end(), std::less_equal<>{}) ||
                 std::adjacent_find(t->points.begin(), t->points.end()) != t->points.end()) {
        out.push_back(who + ": tabulated points must be strictly increasing");
        structural_ok = false;
      }
    }
  }
  if (!structural_ok) return;

  // Values in [0,1] and normalization, on a grid of the bound domain (clipped to
  // where the family is defined) plus the analytic limits.
  Interval dom = bounds.domain;
  const Interval fam_dom = fam.domain();
  dom.lo = std::max(dom.lo, fam_dom.lo);
  dom.hi = std::min(dom.hi, fam_dom.hi);
  std::vector<Vector> samples;
  if (dom.lo <= dom.hi) {
    for (int k = 0; k < kValidationGrid; ++k) {
      const double psi = dom.lo + (dom.hi - dom.lo) * k / (kValidationGrid - 1);
      samples.push_back(fam.evaluate(psi));
    }
  }
  if (auto asym = fam.asymptotes()) {
    samples.push_back(asym->first);
    samples.push_back(asym->second);
  }
  double worst_sum = 0.0, worst_low = 0.0, worst_high = 0.0;
  for (const auto& w : samples) {
    worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
    worst_low = std::min(worst_low, w.minCoeff());
    worst_high = std::max(worst_high, w.maxCoeff() - 1.0);
  }
  if (worst_sum > kNormTol) {
    std::ostringstream os;
    os << label << ": membership family not normalized (max |sum - 1| = " << worst_sum << ")";
    out.push_back(os.str());
  }
  if (worst_low < -kNormTol || worst_high > kNormTol) {
    out.push_back(label + ": membership values leave [0, 1]");
  }
}

}  // namespace

void validate(const TSModel& model) {
  std::vector<std::string> out;
  const auto& d = model.delay;
  if (!(d.h > 0.0) || !std::isfinite(d.h)) out.push_back("delay bound h must be > 0");
  if (!(d.rho < 1.0) || !std::isfinite(d.rho)) out.push_back("delay derivative bound must be < 1");
  if (!std::isfinite(model.upsilon)) out.push_back("upsilon must be finite");
  if (model.plant_rules.empty()) out.push_back("at least one plant rule is required");
  if (model.filter_rule_count < 1) out.push_back("filter_rule_count must be >= 1");
  if (model.bounds.domain.empty()) out.push_back("bounds domain must be a non-empty interval");
  if (model.bounds.grid_density < 100) out.push_back("bounds grid_density must be >= 100");

  int n = 0;
  if (!model.plant_rules.empty()) {
    const Dims ref = consensus_dims(model);
    n = ref.n;
    if (ref.n < 1 || ref.m_y < 1 || ref.p_w < 1 || ref.q < 1) {
      out.push_back("plant rule 1 has an empty dimension (n, m_y, p_w, q must be >= 1)");
    }
    for (std::size_t i = 0; i < model.plant_rules.size(); ++i) {
      const auto& r = model.plant_rules[i];
      const std::string who = "plant rule " + std::to_string(i + 1) + ": ";
      auto expect = [&](const Matrix& m, const char* name, int rows, int cols) {
        if (m.rows() != rows || m.cols() != cols) {
          out.push_back(who + name + " is " + shape_str(m) + ", expected " + std::to_string(rows) + "x" +
                        std::to_string(cols));
        } else if (!m.allFinite()) {
          out.push_back(who + name + " has non-finite entries");
        }
      };
      expect(r.A, "A", ref.n, ref.n);
      expect(r.A_tau, "A_tau", ref.n, ref.n);
      expect(r.B, "B", ref.n, ref.p_w);
      expect(r.C, "C", ref.m_y, ref.n);
      expect(r.C_tau, "C_tau", ref.m_y, ref.n);
      expect(r.D, "D", ref.m_y, ref.p_w);
      expect(r.E, "E", ref.q, ref.n);
      expect(r.E_tau, "E_tau", ref.q, ref.n);
    }
  }
  if (out.empty()) {
    check_family(model.plant_memberships, "plant_memberships", model.plant_rule_count(), model.bounds, n,
                 out);
    check_family(model.filter_memberships, "filter_memberships", model.filter_rule_count, model.bounds, n,
                 out);
  }
  if (!out.empty()) throw ValidationError(std::move(out));
}

// ---------------------------------------------------------------------------
// JSON

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ValidationError(what + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw ValidationError(what + ": row " + std::to_string(r + 1) + " is not an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) throw ValidationError(what + ": empty row");
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(what + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ValidationError(what + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError("missing field '" + where + (where.empty() ? "" : ".") + key + "'");
  }
  return obj.at(key);
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw ValidationError("field '" + where + (where.empty() ? "" : ".") + key + "' must be a number");
  return v.get<double>();
}

int require_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw ValidationError("field '" + where + (where.empty() ? "" : ".") + key + "' must be an integer");
  }
  return v.get<int>();
}

PremiseSignal premise_from_json(const json& j, const std::string& where) {
  PremiseSignal p;
  if (j.is_string()) {
    if (j.get<std::string>() != "time") throw ValidationError(where + ": unknown premise '" + j.get<std::string>() + "'");
    return p;
  }
  const auto kind = require(j, "kind", where).get<std::string>();
  if (kind == "time") {
    p.kind = PremiseSignal::Kind::Time;
  } else if (kind == "plant_state") {
    p.kind = PremiseSignal::Kind::PlantState;
    p.index = require_int(j, "index", where);
  } else if (kind == "filter_state") {
    p.kind = PremiseSignal::Kind::FilterState;
    p.index = require_int(j, "index", where);
  } else {
    throw ValidationError(where + ": unknown premise kind '" + kind + "'");
  }
  return p;
}

json premise_to_json(const PremiseSignal& p) {
  switch (p.kind) {
    case PremiseSignal::Kind::Time: return json{{"kind", "time"}};
    case PremiseSignal::Kind::PlantState: return json{{"kind", "plant_state"}, {"index", p.index}};
    case PremiseSignal::Kind::FilterState: return json{{"kind", "filter_state"}, {"index", p.index}};
  }
  return {};
}

MembershipFunction membership_from_json(const json& j, const std::string& where) {
  const auto& kind_j = require(j, "kind", where);
  if (!kind_j.is_string()) throw ValidationError("field '" + where + ".kind' must be a string");
  const auto kind = kind_j.get<std::string>();
  if (kind == "sigmoid") {
    SigmoidShape s;
    s.offset = require_number(j, "offset", where);
    s.scale = require_number(j, "scale", where);
    s.center = require_number(j, "center", where);
    s.sign = j.contains("sign") ? j.at("sign").get<int>() : 1;
    return {s};
  }
  if (kind == "complement") {
    const auto& of = require(j, "of", where);
    if (!of.is_array()) throw ValidationError("field '" + where + ".of' must be an array of indices");
    ComplementShape c;
    for (const auto& v : of) {
      if (!v.is_number_integer()) throw ValidationError("field '" + where + ".of' must hold integers");
      c.of.push_back(v.get<int>());
    }
    return {c};
  }
  if (kind == "tabulated") {
    TabulatedShape t;
    t.points = require(j, "points", where).get<std::vector<double>>();
    t.values = require(j, "values", where).get<std::vector<double>>();
    return {t};
  }
  throw ValidationError(where + ": unknown membership kind '" + kind + "'");
}

json membership_to_json(const MembershipFunction& m) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SigmoidShape>) {
          return {{"kind", "sigmoid"}, {"offset", s.offset}, {"scale", s.scale}, {"center", s.center}, {"sign", s.sign}};
        } else if constexpr (std::is_same_v<T, ComplementShape>) {
          return {{"kind", "complement"}, {"of", s.of}};
        } else {
          return {{"kind", "tabulated"}, {"points", s.points}, {"values", s.values}};
        }
      },
      m.shape);
}

MembershipFamily family_from_json(const json& doc, const char* members_key, const char* premise_key) {
  const auto& arr = require(doc, members_key, "");
  if (!arr.is_array()) throw ValidationError(std::string("field '") + members_key + "' must be an array");
  std::vector<MembershipFunction> members;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    members.push_back(membership_from_json(arr[i], std::string(members_key) + "[" + std::to_string(i) + "]"));
  }
  PremiseSignal premise;
  if (doc.contains(premise_key)) premise = premise_from_json(doc.at(premise_key), premise_key);
  return MembershipFamily(premise, std::move(members));
}

}  // namespace

TSModel load_model(const json& doc) {
  if (!doc.is_object()) throw ValidationError("model document must be a JSON object");
  TSModel m;
  try {
    m.name = doc.value("name", std::string{});
    const auto& delay = require(doc, "delay", "");
    m.delay.h = require_number(delay, "h", "delay");
    m.delay.rho = require_number(delay, "rho", "delay");
    m.upsilon = require_number(doc, "upsilon", "");

    const auto& rules = require(doc, "plant_rules", "");
    if (!rules.is_array()) throw ValidationError("field 'plant_rules' must be an array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string where = "plant_rules[" + std::to_string(i) + "]";
      const auto& r = rules[i];
      PlantRule pr;
      pr.A = matrix_from_json(require(r, "A", where), where + ".A");
      pr.A_tau = matrix_from_json(require(r, "A_tau", where), where + ".A_tau");
      pr.B = matrix_from_json(require(r, "B", where), where + ".B");
      pr.C = matrix_from_json(require(r, "C", where), where + ".C");
      pr.C_tau = matrix_from_json(require(r, "C_tau", where), where + ".C_tau");
      pr.D = matrix_from_json(require(r, "D", where), where + ".D");
      pr.E = matrix_from_json(require(r, "E", where), where + ".E");
      pr.E_tau = matrix_from_json(require(r, "E_tau", where), where + ".E_tau");
      m.plant_rules.push_back(std::move(pr));
    }
    m.plant_memberships = family_from_json(doc, "plant_memberships", "plant_premise");
    m.filter_rule_count = require_int(doc, "filter_rule_count", "");
    m.filter_memberships = family_from_json(doc, "filter_memberships", "filter_premise");

    if (doc.contains("bounds")) {
      const auto& b = doc.at("bounds");
      if (b.contains("domain")) {
        const auto dom = b.at("domain").get<std::vector<double>>();
        if (dom.size() != 2) throw ValidationError("field 'bounds.domain' must be [lo, hi]");
        m.bounds.domain = {dom[0], dom[1]};
      }
      if (b.contains("grid_density")) m.bounds.grid_density = require_int(b, "grid_density", "bounds");
      if (b.contains("include_asymptotes")) m.bounds.include_asymptotes = b.at("include_asymptotes").get<bool>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("schema violation: ") + e.what());
  }

  std::vector<std::string> findings;
  if (doc.contains("dims")) {
    // Dimensions are inferred from the matrices; declared ones must agree.
    const auto& d = doc.at("dims");
    const Dims inferred = consensus_dims(m);
    auto check = [&](const char* key, int actual) {
      if (d.contains(key) && d.at(key).get<int>() != actual) {
        findings.push_back(std::string("dims.") + key + " = " + std::to_string(d.at(key).get<int>()) +
                           " disagrees with the matrices (" + std::to_string(actual) + ")");
      }
    };
    check("n", inferred.n);
    check("m_y", inferred.m_y);
    check("p_w", inferred.p_w);
    check("q", inferred.q);
  }
  try {
    validate(m);
  } catch (const ValidationError& e) {
    findings.insert(findings.end(), e.findings().begin(), e.findings().end());
  }
  if (!findings.empty()) throw ValidationError(std::move(findings));
  return m;
}

TSModel load_model_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return load_model(doc);
}

TSModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model_text(ss.str());
}

json serialize(const TSModel& model) {
  const Dims d = model.dims();
  json doc;
  doc["name"] = model.name;
  doc["dims"] = {{"n", d.n}, {"m_y", d.m_y}, {"p_w", d.p_w}, {"q", d.q}};
  doc["delay"] = {{"h", model.delay.h}, {"rho", model.delay.rho}};
  doc["upsilon"] = model.upsilon;
  json rules = json::array();
  for (const auto& r : model.plant_rules) {
    rules.push_back({{"A", matrix_to_json(r.A)},
                     {"A_tau", matrix_to_json(r.A_tau)},
                     {"B", matrix_to_json(r.B)},
                     {"C", matrix_to_json(r.C)},
                     {"C_tau", matrix_to_json(r.C_tau)},
                     {"D", matrix_to_json(r.D)},
                     {"E", matrix_to_json(r.E)},
                     {"E_tau", matrix_to_json(r.E_tau)}});
  }
  doc["plant_rules"] = rules;
  doc["plant_premise"] = premise_to_json(model.plant_memberships.premise());
  doc["plant_memberships"] = json::array();
  for (const auto& f : model.plant_memberships.members()) doc["plant_memberships"].push_back(membership_to_json(f));
  doc["filter_rule_count"] = model.filter_rule_count;
  doc["filter_premise"] = premise_to_json(model.filter_memberships.premise());
  doc["filter_memberships"] = json::array();
  for (const auto& f : model.filter_memberships.members()) doc["filter_memberships"].push_back(membership_to_json(f));
  doc["bounds"] = {{"domain", {model.bounds.domain.lo, model.bounds.domain.hi}},
                   {"grid_density", model.bounds.grid_density},
                   {"include_asymptotes", model.bounds.include_asymptotes}};
  return doc;
}

// ---------------------------------------------------------------------------
// Evaluation

MembershipWeights evaluate_memberships(const TSModel& model, double t) {
  return evaluate_memberships(model, t, t);
}

MembershipWeights evaluate_memberships(const TSModel& model, double plant_premise, double filter_premise) {
  return {model.plant_memberships.evaluate(plant_premise), model.filter_memberships.evaluate(filter_premise)};
}

MembershipBounds membership_product_bounds(const TSModel& model, const Interval& domain, int grid_density,
                                           bool include_asymptotes) {
  if (domain.empty()) throw DomainError("membership bound domain is empty");
  if (grid_density < 100) throw DomainError("membership bound grid_density must be >= 100");
  const int p = model.plant_rule_count();
  const int c = model.filter_rule_count;
  const auto& plant = model.plant_memberships;
  const auto& filter = model.filter_memberships;
  for (const auto* fam : {&plant, &filter}) {
    if (!fam->domain().contains(domain)) {
      throw DomainError("membership bound domain exceeds a tabulated membership's domain");
    }
  }

  MembershipBounds out;
  out.d_lower = Matrix::Constant(p, c, std::numeric_limits<double>::infinity());
  out.d_upper = Matrix::Constant(p, c, -std::numeric_limits<double>::infinity());
  out.domain_used = domain;
  out.grid_density = grid_density;

  auto absorb = [&](const Matrix& d) {
    out.d_lower = out.d_lower.cwiseMin(d);
    out.d_upper = out.d_upper.cwiseMax(d);
  };

  const auto asym_p = include_asymptotes ? plant.asymptotes() : std::nullopt;
  const auto asym_f = include_asymptotes ? filter.asymptotes() : std::nullopt;

  if (plant.premise() == filter.premise()) {
    // Same premise signal: the products move jointly along one axis.
    for (int k = 0; k < grid_density; ++k) {
      const double psi = domain.lo + (domain.hi - domain.lo) * k / (grid_density - 1);
      absorb(plant.evaluate(psi) * filter.evaluate(psi).transpose());
    }
    if (asym_p && asym_f) {
      absorb(asym_p->first * asym_f->first.transpose());
      absorb(asym_p->second * asym_f->second.transpose());
    }
  } else {
    // Independent premises: products of the per-family ranges (all weights >= 0).
    Vector plo = Vector::Constant(p, std::numeric_limits<double>::infinity()), phi = -plo;
    Vector flo = Vector::Constant(c, std::numeric_limits<double>::infinity()), fhi = -flo;
    for (int k = 0; k < grid_density; ++k) {
      const double psi = domain.lo + (domain.hi - domain.lo) * k / (grid_density - 1);
      const Vector wp = plant.evaluate(psi), wf = filter.evaluate(psi);
      plo = plo.cwiseMin(wp);
      phi = phi.cwiseMax(wp);
      flo = flo.cwiseMin(wf);
      fhi = fhi.cwiseMax(wf);
    }
    if (asym_p) {
      for (const Vector* v : {&asym_p->first, &asym_p->second}) {
        plo = plo.cwiseMin(*v);
        phi = phi.cwiseMax(*v);
      }
    }
    if (asym_f) {
      for (const Vector* v : {&asym_f->first, &asym_f->second}) {
        flo = flo.cwiseMin(*v);
        fhi = fhi.cwiseMax(*v);
      }
    }
    out.d_lower = plo.cwiseMax(0.0) * flo.cwiseMax(0.0).transpose();
    out.d_upper = phi * fhi.transpose();
  }
  out.d_lower = out.d_lower.cwiseMax(0.0);
  out.d_upper = out.d_upper.cwiseMin(1.0);
  return out;
}

MembershipBounds membership_product_bounds(const TSModel& model) {
  return membership_product_bounds(model, model.bounds.domain, model.bounds.grid_density,
                                   model.bounds.include_asymptotes);
}

}  // namespace tsfilt

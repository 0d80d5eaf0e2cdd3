#include "tsfilt/dde.hpp"

#include "tsfilt/error.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace tsfilt {

DelayTrajectory DelayTrajectory::constant(double tau0) {
  DelayTrajectory d;
  d.kind = Kind::Constant;
  d.tau0 = tau0;
  return d;
}

DelayTrajectory DelayTrajectory::sinusoid(double mean, double amplitude, double frequency) {
  DelayTrajectory d;
  d.kind = Kind::Sinusoid;
  d.mean = mean;
  d.amplitude = amplitude;
  d.frequency = frequency;
  return d;
}

DelayTrajectory DelayTrajectory::default_for(const DelayParams& delay) {
  const double omega = delay.rho > 0.0 ? delay.rho / delay.h : 0.0;
  if (omega == 0.0) return constant(0.5 * delay.h);
  return sinusoid(0.5 * delay.h, 0.5 * delay.h, omega);
}

double DelayTrajectory::value(double t) const {
  return kind == Kind::Constant ? tau0 : mean + amplitude * std::sin(frequency * t);
}

double DelayTrajectory::derivative(double t) const {
  return kind == Kind::Constant ? 0.0 : amplitude * frequency * std::cos(frequency * t);
}

double DelayTrajectory::min_value() const {
  return kind == Kind::Constant ? tau0 : mean - std::abs(amplitude);
}

double DelayTrajectory::max_value() const {
  return kind == Kind::Constant ? tau0 : mean + std::abs(amplitude);
}

double DelayTrajectory::max_derivative() const {
  return kind == Kind::Constant ? 0.0 : std::abs(amplitude * frequency);
}

void DelayTrajectory::check(const DelayParams& delay) const {
  std::ostringstream os;
  // Rounding in mean +- amplitude must not reject the default trajectory.
  const double slack = 1e-12 * std::max(1.0, delay.h);
  if (min_value() < -slack) os << "delay trajectory goes negative (min " << min_value() << "); ";
  if (max_value() > delay.h + slack) os << "delay trajectory exceeds h = " << delay.h << " (max " << max_value() << "); ";
  if (max_derivative() > delay.rho + slack) {
    os << "delay derivative " << max_derivative() << " exceeds rho = " << delay.rho << "; ";
  }
  if (!os.str().empty()) throw SimulationError(os.str().substr(0, os.str().size() - 2));
}

Disturbance Disturbance::decaying_sine(double decay, double frequency) {
  Disturbance d;
  d.kind = Kind::DecayingSine;
  d.decay = decay;
  d.frequency = frequency;
  return d;
}

Disturbance Disturbance::pulse(double start, double end, double amplitude) {
  Disturbance d;
  d.kind = Kind::Pulse;
  d.start = start;
  d.end = end;
  d.amplitude = amplitude;
  return d;
}

Disturbance Disturbance::noise(std::uint64_t seed, int channels, double bandwidth, double decay) {
  Disturbance d;
  d.kind = Kind::Noise;
  d.seed = seed;
  d.bandwidth = bandwidth;
  d.decay = decay;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> amp(0.0, 1.0 / std::sqrt(static_cast<double>(d.components)));
  std::uniform_real_distribution<double> freq(0.0, bandwidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int c = 0; c < channels; ++c) {
    std::vector<Component> comps;
    for (int k = 0; k < d.components; ++k) comps.push_back({amp(rng), freq(rng), phase(rng)});
    d.noise_components.push_back(std::move(comps));
  }
  return d;
}

double Disturbance::value(double t, int channel) const {
  if (t < 0.0) return 0.0;
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::DecayingSine: return amplitude * std::exp(-decay * t) * std::sin(frequency * t);
    case Kind::Pulse: return (t >= start && t < end) ? amplitude : 0.0;
    case Kind::Noise: {
      if (channel < 0 || channel >= static_cast<int>(noise_components.size())) {
        throw SimulationError("noise disturbance was generated for fewer channels than requested");
      }
      double s = 0.0;
      for (const auto& c : noise_components[static_cast<std::size_t>(channel)]) {
        s += c.amplitude * std::sin(c.frequency * t + c.phase);
      }
      return amplitude * std::exp(-decay * t) * s;
    }
  }
  return 0.0;
}

Vector Disturbance::sample(double t, int channels) const {
  Vector w(channels);
  for (int k = 0; k < channels; ++k) w[k] = value(t, k);
  return w;
}

Disturbance::Kind Disturbance::kind_from_string(const std::string& s) {
  if (s == "zero") return Kind::Zero;
  if (s == "decaying-sine") return Kind::DecayingSine;
  if (s == "pulse") return Kind::Pulse;
  if (s == "noise") return Kind::Noise;
  throw DomainError("unknown disturbance kind '" + s + "'");
}

std::string Disturbance::to_string(Kind k) {
  switch (k) {
    case Kind::Zero: return "zero";
    case Kind::DecayingSine: return "decaying-sine";
    case Kind::Pulse: return "pulse";
    case Kind::Noise: return "noise";
  }
  return "zero";
}

namespace {

struct Blended {
  Matrix A, A_tau, B, C, C_tau, D, E, E_tau;
  Matrix Af, Bf, Cf;
};

class ClosedLoop {
 public:
  ClosedLoop(const TSModel& model, const FilterRealization& filter) : model_(model), filter_(filter) {
    const Dims d = model.dims();
    n_ = d.n;
    m_y_ = d.m_y;
    p_w_ = d.p_w;
    q_ = d.q;
  }

  int n() const { return n_; }
  int p_w() const { return p_w_; }
  int q() const { return q_; }

  double premise(const PremiseSignal& p, double t, const Vector& zeta) const {
    switch (p.kind) {
      case PremiseSignal::Kind::Time: return t;
      case PremiseSignal::Kind::PlantState: return zeta[p.index];
      case PremiseSignal::Kind::FilterState: return zeta[n_ + p.index];
    }
    return t;
  }

  Blended blend(double t, const Vector& zeta) const {
    const Vector wp = model_.plant_memberships.evaluate(premise(model_.plant_memberships.premise(), t, zeta));
    const Vector wf = model_.filter_memberships.evaluate(premise(model_.filter_memberships.premise(), t, zeta));
    const auto& r0 = model_.plant_rules.front();
    Blended b{Matrix::Zero(r0.A.rows(), r0.A.cols()),     Matrix::Zero(r0.A_tau.rows(), r0.A_tau.cols()),
              Matrix::Zero(r0.B.rows(), r0.B.cols()),     Matrix::Zero(r0.C.rows(), r0.C.cols()),
              Matrix::Zero(r0.C_tau.rows(), r0.C_tau.cols()), Matrix::Zero(r0.D.rows(), r0.D.cols()),
              Matrix::Zero(r0.E.rows(), r0.E.cols()),     Matrix::Zero(r0.E_tau.rows(), r0.E_tau.cols()),
              Matrix::Zero(n_, n_),                       Matrix::Zero(n_, m_y_),
              Matrix::Zero(q_, n_)};
    for (int i = 0; i < model_.plant_rule_count(); ++i) {
      const auto& r = model_.plant_rules[static_cast<std::size_t>(i)];
      const double a = wp[i];
      b.A += a * r.A;
      b.A_tau += a * r.A_tau;
      b.B += a * r.B;
      b.C += a * r.C;
      b.C_tau += a * r.C_tau;
      b.D += a * r.D;
      b.E += a * r.E;
      b.E_tau += a * r.E_tau;
    }
    for (int j = 0; j < filter_.rule_count(); ++j) {
      b.Af += wf[j] * filter_.A_f[static_cast<std::size_t>(j)];
      b.Bf += wf[j] * filter_.B_f[static_cast<std::size_t>(j)];
      b.Cf += wf[j] * filter_.C_f[static_cast<std::size_t>(j)];
    }
    return b;
  }

  Vector rhs(double t, const Vector& zeta, const Vector& zeta_d, const Vector& w) const {
    const Blended b = blend(t, zeta);
    const auto x = zeta.head(n_), xf = zeta.tail(n_), xd = zeta_d.head(n_);
    Vector out(2 * n_);
    const Vector y = b.C * x + b.C_tau * xd + b.D * w;
    out.head(n_) = b.A * x + b.A_tau * xd + b.B * w;
    out.tail(n_) = b.Af * xf + b.Bf * y;
    return out;
  }

  void outputs(double t, const Vector& zeta, const Vector& zeta_d, Vector& z, Vector& zf) const {
    const Blended b = blend(t, zeta);
    z = b.E * zeta.head(n_) + b.E_tau * zeta_d.head(n_);
    zf = b.Cf * zeta.tail(n_);
  }

 private:
  const TSModel& model_;
  const FilterRealization& filter_;
  int n_ = 0, m_y_ = 0, p_w_ = 0, q_ = 0;
};

}  // namespace

SimulationTrace simulate(const TSModel& model, const FilterRealization& filter, const SimulationOptions& opt) {
  const Dims d = model.dims();
  const int n = d.n;
  if (filter.rule_count() != model.filter_rule_count) {
    throw SimulationError("filter has " + std::to_string(filter.rule_count()) + " rules, model expects " +
                          std::to_string(model.filter_rule_count));
  }
  for (int j = 0; j < filter.rule_count(); ++j) {
    const auto& A = filter.A_f[static_cast<std::size_t>(j)];
    const auto& B = filter.B_f[static_cast<std::size_t>(j)];
    const auto& C = filter.C_f[static_cast<std::size_t>(j)];
    if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != d.m_y || C.rows() != d.q || C.cols() != n) {
      throw SimulationError("filter rule " + std::to_string(j + 1) + " dimensions do not match the model");
    }
  }
  if (!(opt.horizon > 0.0)) throw SimulationError("horizon must be > 0");
  if (!(opt.step > 0.0)) throw SimulationError("step must be > 0");
  if (opt.check_delay) opt.delay.check(model.delay);
  const double tau_ref = opt.delay.min_value() > 0.0 ? opt.delay.min_value() : opt.delay.max_value();
  if (tau_ref > 0.0 && opt.step > tau_ref / 10.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step " << opt.step << " exceeds one tenth of the delay (" << tau_ref << ")";
    throw SimulationError(os.str());
  }
  if (opt.disturbance.kind == Disturbance::Kind::Noise &&
      static_cast<int>(opt.disturbance.noise_components.size()) < d.p_w) {
    throw SimulationError("noise disturbance was generated for fewer channels than the model has");
  }

  Vector history = Vector::Zero(2 * n);
  if (opt.history_plant.size()) {
    if (opt.history_plant.size() != n) throw SimulationError("plant history has the wrong dimension");
    history.head(n) = opt.history_plant;
  }
  if (opt.history_filter.size()) {
    if (opt.history_filter.size() != n) throw SimulationError("filter history has the wrong dimension");
    history.tail(n) = opt.history_filter;
  }

  const ClosedLoop sys(model, filter);
  const double h = opt.step;
  const int steps = static_cast<int>(std::ceil(opt.horizon / h - 1e-9));
  const int samples = steps + 1;

  SimulationTrace tr;
  tr.step = h;
  tr.history = history;
  tr.t.resize(static_cast<std::size_t>(samples));
  tr.zeta.resize(samples, 2 * n);
  tr.z.resize(samples, d.q);
  tr.zf.resize(samples, d.q);
  tr.e.resize(samples, d.q);
  tr.w.resize(samples, d.p_w);
  tr.tau.resize(static_cast<std::size_t>(samples));
  tr.energy_e.assign(static_cast<std::size_t>(samples), 0.0);
  tr.energy_w.assign(static_cast<std::size_t>(samples), 0.0);

  tr.zeta_dot.resize(samples, 2 * n);
  Matrix& deriv = tr.zeta_dot;  // also feeds the Hermite interpolant
  int known = 0;  // newest sample whose derivative is stored

  auto hermite = [&](int k, double u) -> Vector {
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * tr.zeta.row(k).transpose() + h10 * h * deriv.row(k).transpose() +
           h01 * tr.zeta.row(k + 1).transpose() + h11 * h * deriv.row(k + 1).transpose();
  };
  auto delayed = [&](double s) -> Vector {
    if (s <= 0.0) return history;
    const int k = static_cast<int>(std::floor(s / h));
    if (k < known) return hermite(k, (s - k * h) / h);
    // Past the interpolation range (tau below one step): extend the last full interval.
    if (known == 0) return tr.zeta.row(0).transpose() + s * deriv.row(0).transpose();
    return hermite(known - 1, (s - (known - 1) * h) / h);
  };

  auto record = [&](int k) {
    const double t = k * h;
    const Vector zeta = tr.zeta.row(k).transpose();
    const double tau = opt.delay.value(t);
    const Vector zd = delayed(t - tau);
    const Vector w = opt.disturbance.sample(t, d.p_w);
    Vector z, zf;
    sys.outputs(t, zeta, zd, z, zf);
    tr.t[static_cast<std::size_t>(k)] = t;
    tr.tau[static_cast<std::size_t>(k)] = tau;
    tr.w.row(k) = w.transpose();
    tr.z.row(k) = z.transpose();
    tr.zf.row(k) = zf.transpose();
    tr.e.row(k) = (z - zf).transpose();
    deriv.row(k) = sys.rhs(t, zeta, zd, w).transpose();
    if (k > 0) {
      const auto ku = static_cast<std::size_t>(k);
      tr.energy_e[ku] = tr.energy_e[ku - 1] + 0.5 * h * (tr.e.row(k - 1).squaredNorm() + tr.e.row(k).squaredNorm());
      tr.energy_w[ku] = tr.energy_w[ku - 1] + 0.5 * h * (tr.w.row(k - 1).squaredNorm() + tr.w.row(k).squaredNorm());
    }
    if (!tr.zeta.row(k).allFinite()) throw SimulationError("state became non-finite at t = " + std::to_string(t));
  };

  auto f = [&](double t, const Vector& zeta) {
    return sys.rhs(t, zeta, delayed(t - opt.delay.value(t)), opt.disturbance.sample(t, d.p_w));
  };

  tr.zeta.row(0) = history.transpose();
  record(0);
  for (int k = 0; k < steps; ++k) {
    known = k;
    const double t = k * h;
    const Vector y = tr.zeta.row(k).transpose();
    const Vector k1 = deriv.row(k).transpose();
    const Vector k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Vector k4 = f(t + h, y + h * k3);
    tr.zeta.row(k + 1) = (y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).transpose();
    record(k + 1);
  }
  return tr;
}

double empirical_gain(const SimulationTrace& trace) {
  if (trace.samples() < 2) throw SimulationError("trace has fewer than two samples");
  double ee = 0.0, ww = 0.0;
  for (int k = 1; k < trace.samples(); ++k) {
    const double dt = trace.t[static_cast<std::size_t>(k)] - trace.t[static_cast<std::size_t>(k - 1)];
    ee += 0.5 * dt * (trace.e.row(k - 1).squaredNorm() + trace.e.row(k).squaredNorm());
    ww += 0.5 * dt * (trace.w.row(k - 1).squaredNorm() + trace.w.row(k).squaredNorm());
  }
  if (!(ww > 0.0)) throw SimulationError("disturbance energy is zero; the empirical gain is undefined");
  return std::sqrt(ee / ww);
}

double terminal_norm_ratio(const SimulationTrace& trace) {
  if (trace.samples() < 1) throw SimulationError("empty trace");
  const double n0 = trace.zeta.row(0).norm();
  if (!(n0 > 0.0)) throw SimulationError("initial state is zero; the terminal norm ratio is undefined");
  return trace.zeta.row(trace.samples() - 1).norm() / n0;
}

void write_trace_csv(const SimulationTrace& trace, std::ostream& os, int every) {
  if (every < 1) every = 1;
  const auto old = os.precision();
  os << "t";
  for (int i = 0; i < trace.zeta.cols(); ++i) os << ",zeta" << i + 1;
  for (int i = 0; i < trace.z.cols(); ++i) os << ",z" << i + 1;
  for (int i = 0; i < trace.zf.cols(); ++i) os << ",zf" << i + 1;
  for (int i = 0; i < trace.e.cols(); ++i) os << ",e" << i + 1;
  for (int i = 0; i < trace.w.cols(); ++i) os << ",w" << i + 1;
  os << ",tau,energy_e,energy_w\n";
  os << std::setprecision(10);
  for (int k = 0; k < trace.samples(); k += every) {
    const auto ku = static_cast<std::size_t>(k);
    os << trace.t[ku];
    for (const Matrix* m : {&trace.zeta, &trace.z, &trace.zf, &trace.e, &trace.w}) {
      for (int i = 0; i < m->cols(); ++i) os << "," << (*m)(k, i);
    }
    os << "," << trace.tau[ku] << "," << trace.energy_e[ku] << "," << trace.energy_w[ku] << "\n";
  }
  os.precision(old);
}

std::vector<std::string> scenario_names() { return {"free", "decaying-sine", "pulse", "noise"}; }

SimulationOptions scenario_options(const TSModel& model, const std::string& name, std::uint64_t seed) {
  const Dims d = model.dims();
  SimulationOptions o;
  o.delay = DelayTrajectory::default_for(model.delay);
  o.horizon = 50.0;
  o.step = 0.01;
  if (name == "free") {
    o.disturbance = Disturbance::zero();
    o.history_plant = Vector::Ones(d.n);
  } else if (name == "decaying-sine") {
    o.disturbance = Disturbance::decaying_sine();
  } else if (name == "pulse") {
    o.disturbance = Disturbance::pulse();
  } else if (name == "noise") {
    o.disturbance = Disturbance::noise(seed, d.p_w);
  } else {
    throw DomainError("unknown scenario '" + name + "' (expected free, decaying-sine, pulse or noise)");
  }
  return o;
}

}  // namespace tsfilt

#pragma once

#include "tsfilt/model.hpp"
#include "tsfilt/synthesis.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tsfilt {

/// Time-varying delay: constant tau0, or mean + amplitude * sin(frequency * t).
struct DelayTrajectory {
  enum class Kind { Constant, Sinusoid };
  Kind kind = Kind::Constant;
  double tau0 = 0.0;
  double mean = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;

  static DelayTrajectory constant(double tau0);
  static DelayTrajectory sinusoid(double mean, double amplitude, double frequency);
  /// (h/2)(1 + sin(omega t)) with omega = rho / h, so max dtau/dt = rho / 2.
  static DelayTrajectory default_for(const DelayParams& delay);

  double value(double t) const;
  double derivative(double t) const;
  double min_value() const;
  double max_value() const;
  double max_derivative() const;

  /// Throws SimulationError unless 0 <= tau <= h and dtau/dt <= rho everywhere.
  void check(const DelayParams& delay) const;
};

/// Scalar disturbance shape applied to every channel of w.
struct Disturbance {
  enum class Kind { Zero, DecayingSine, Pulse, Noise };
  Kind kind = Kind::Zero;
  double amplitude = 1.0;
  double decay = 0.2;       // DecayingSine: exp(-decay t) sin(frequency t); Noise: envelope exp(-decay t)
  double frequency = 1.0;
  double start = 1.0;       // Pulse on [start, end)
  double end = 3.0;
  double bandwidth = 2.0;   // Noise: component frequencies in (0, bandwidth] rad/s
  int components = 16;
  std::uint64_t seed = 1;

  static Disturbance zero() { return {}; }
  static Disturbance decaying_sine(double decay = 0.2, double frequency = 1.0);
  static Disturbance pulse(double start = 1.0, double end = 3.0, double amplitude = 1.0);
  /// Sum of `components` sinusoids with seeded amplitudes, frequencies and phases
  /// under an exp(-decay t) envelope, generated for `channels` outputs.
  static Disturbance noise(std::uint64_t seed, int channels = 1, double bandwidth = 2.0, double decay = 0.1);

  /// Channel k of w(t) (noise channels use independent seeded components).
  double value(double t, int channel) const;
  Vector sample(double t, int channels) const;

  static Kind kind_from_string(const std::string& s);
  static std::string to_string(Kind k);

  struct Component {
    double amplitude, frequency, phase;
  };
  std::vector<std::vector<Component>> noise_components;  // [channel][component]
};

struct SimulationOptions {
  double horizon = 50.0;
  double step = 0.01;
  DelayTrajectory delay;
  Disturbance disturbance;
  Vector history_plant;   // constant history on [-h, 0]; empty means zeros
  Vector history_filter;  // initial filter state; empty means zeros
  bool check_delay = true;
};

/// Uniformly sampled trace of the augmented error system (one row per sample).
struct SimulationTrace {
  std::vector<double> t;
  Matrix zeta, zeta_dot, z, zf, e, w;
  std::vector<double> energy_e, energy_w;  // running trapezoid integrals
  std::vector<double> tau;
  Vector history;                          // constant zeta on [-h, 0]
  double step = 0.0;

  int samples() const { return static_cast<int>(t.size()); }
};

/// Fixed-step RK4 by the method of steps; delayed states come from a cubic
/// Hermite interpolant of the stored trajectory.
SimulationTrace simulate(const TSModel& model, const FilterRealization& filter, const SimulationOptions& options);

/// sqrt(int |e|^2 / int |w|^2) by the trapezoid rule over the whole trace.
double empirical_gain(const SimulationTrace& trace);

/// |zeta(end)| / |zeta(0)|.
double terminal_norm_ratio(const SimulationTrace& trace);

/// Columns: t, zeta1.., z1.., zf1.., e1.., w1.., tau, energy_e, energy_w.
void write_trace_csv(const SimulationTrace& trace, std::ostream& os, int every = 1);

/// Named scenarios used by the CLI and the acceptance checks:
/// "free" (w = 0, plant history ones), "decaying-sine", "pulse", "noise" (zero history).
SimulationOptions scenario_options(const TSModel& model, const std::string& name, std::uint64_t seed = 1);
std::vector<std::string> scenario_names();

}  // namespace tsfilt

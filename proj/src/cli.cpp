#include "tsfilt/cli.hpp"

#include "tsfilt/dde.hpp"
#include "tsfilt/error.hpp"
#include "tsfilt/report.hpp"
#include "tsfilt/synthesis.hpp"
#include "tsfilt/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace tsfilt {

namespace {

int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return kExitOk;
    case SolveStatus::Infeasible: return kExitInfeasible;
    default: return kExitNumerical;
  }
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct SynthArgs {
  std::string model;
  int theorem = 2;
  std::optional<double> h, upsilon, rho;
  std::string delay_term = "derived";
  std::string output;
  std::string sdpa;
  bool verbose = false;
  bool full_precision = false;
  int grid = 2001;
};

int cmd_validate(const std::string& path, std::ostream& out) {
  const TSModel m = load_model_file(path);
  const Dims d = m.dims();
  out << "ok: " << (m.name.empty() ? path : m.name) << ": " << m.plant_rule_count() << " plant rules, "
      << m.filter_rule_count << " filter rules, dims (n, m_y, p_w, q) = (" << d.n << ", " << d.m_y << ", " << d.p_w
      << ", " << d.q << "), h = " << m.delay.h << ", rho = " << m.delay.rho << ", upsilon = " << m.upsilon << "\n";
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const TSModel model = load_model_file(a.model);
  SynthesisOptions so;
  so.theorem = a.theorem;
  so.h = a.h;
  so.upsilon = a.upsilon;
  so.rho = a.rho;
  so.delay_term = delay_term_from_string(a.delay_term);
  so.verify_grid = a.grid;
  if (a.verbose) so.solver.log = &err;

  if (!a.sdpa.empty()) {
    const LmiSettings settings = resolve_settings(model, so);
    const LmiVariables vars = make_variables(model, a.theorem == 2);
    std::ofstream os(a.sdpa);
    if (!os) throw Error("cannot write '" + a.sdpa + "'");
    write_sdpa(build_problem(model, vars, a.theorem, settings), os);
  }

  const SynthesisReport rep = synthesize(model, so);
  const std::string path =
      a.output.empty() ? std::filesystem::path(a.model).stem().string() + "-th" + std::to_string(a.theorem) + ".report.json"
                       : a.output;
  write_report_file(rep, path);

  out << "theorem " << rep.theorem << ", h = " << rep.settings.h << ", upsilon = " << rep.settings.upsilon
      << ", rho = " << rep.settings.rho << ", delay term " << delay_term_name(rep.settings.delay_term) << "\n";
  out << "status: " << to_string(rep.status) << " (" << rep.solution.iterations << " iterations, "
      << fmt(rep.solve_seconds, 3) << " s, " << rep.scalar_variables << " scalars)\n";
  if (rep.feasible) {
    out << "gamma_min = " << (a.full_precision ? fmt(rep.gamma, 17) : fmt(rep.gamma, 4)) << "\n";
    out << "max constraint eigenvalue = " << fmt(rep.certificate.max_negative_constraint_eigenvalue, 3) << "\n";
    if (rep.grid) {
      out << "sampled blended LMI: max eigenvalue " << fmt(rep.grid->max_eigenvalue, 3) << " over "
          << rep.grid->points << " points: " << (rep.grid->passed ? "pass" : "FAIL") << "\n";
    }
  } else {
    out << "no filter: " << rep.solution.diagnostic << "\n";
  }
  for (const auto& n : rep.notes) out << "note: " << n << "\n";
  out << "report: " << path << "\n";
  return exit_for(rep.status);
}

int cmd_sweep(const std::string& spec_path, bool full_precision, int workers, const std::string& output,
              std::ostream& out) {
  SweepSpec spec = load_sweep_spec_file(spec_path);
  if (full_precision) spec.full_precision = true;
  if (workers > 0) spec.workers = workers;
  if (!output.empty()) spec.output = output;
  const TSModel model = load_model_file(spec.model);
  const SweepResult res = run_sweep(model, spec);
  if (spec.output.empty()) {
    write_sweep_table(spec, res, out);
  } else {
    std::ofstream os(spec.output);
    if (!os) throw Error("cannot write '" + spec.output.string() + "'");
    write_sweep_table(spec, res, os);
    out << "table: " << spec.output.string() << "\n";
  }
  if (!spec.long_output.empty()) {
    std::ofstream os(spec.long_output);
    if (!os) throw Error("cannot write '" + spec.long_output.string() + "'");
    write_sweep_long(res, os);
  }
  for (const auto& c : res.cells) {
    if (c.status != SolveStatus::Optimal && c.status != SolveStatus::Infeasible) return kExitNumerical;
  }
  return kExitOk;
}

struct SimArgs {
  std::string model, filter, scenario = "decaying-sine", output;
  std::uint64_t seed = 1;
  std::optional<double> horizon, step;
  int every = 1;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  const TSModel model = load_model_file(a.model);
  const SynthesisReport rep = read_report_file(a.filter);
  const FilterRealization f = filter_from_report(rep);
  SimulationOptions so = scenario_options(model, a.scenario, a.seed);
  if (a.horizon) so.horizon = *a.horizon;
  if (a.step) so.step = *a.step;
  const SimulationTrace tr = simulate(model, f, so);
  if (!a.output.empty()) {
    std::ofstream os(a.output);
    if (!os) throw Error("cannot write '" + a.output + "'");
    write_trace_csv(tr, os, a.every);
  }
  out << "scenario " << a.scenario << ", horizon " << so.horizon << ", step " << so.step << ", samples "
      << tr.samples() << "\n";
  if (so.disturbance.kind == Disturbance::Kind::Zero) {
    const double r = terminal_norm_ratio(tr);
    out << "terminal-norm-ratio = " << fmt(r, 4) << " (<= 1e-3: " << (r <= 1e-3 ? "pass" : "FAIL") << ")\n";
  } else {
    const double g = empirical_gain(tr);
    out << "empirical gain g_emp = " << fmt(g, 4) << ", gamma_min = " << fmt(f.gamma, 4)
        << " (g_emp <= gamma_min: " << (g <= f.gamma ? "pass" : "FAIL") << ")\n";
  }
  if (!a.output.empty()) out << "trace: " << a.output << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& model_path, const std::string& filter_path, std::uint64_t seed, int grid,
               std::ostream& out) {
  const TSModel model = load_model_file(model_path);
  const SynthesisReport rep = read_report_file(filter_path);
  const FilterRealization f = filter_from_report(rep);
  bool ok = true;
  auto row = [&](const std::string& name, bool pass, const std::string& detail, bool gating = true) {
    out << std::left << std::setw(28) << name << std::setw(14)
        << (pass ? "pass" : (gating ? "FAIL" : "inconsistent")) << detail << "\n";
    if (gating && !pass) ok = false;
  };
  out << std::left << std::setw(28) << "check" << std::setw(14) << "result" << "detail\n";

  row("solver certificate", rep.certificate.all_satisfied,
      "max eig " + fmt(rep.certificate.max_negative_constraint_eigenvalue, 3));

  const LmiVariables vars = make_variables(model, rep.theorem == 2);
  const Vector x = assignment_from_variables(vars, rep.variables);
  const GridCheck gc = sampled_negativity(model, vars, x, rep.settings, model.bounds.domain, grid);
  row("sampled blended LMI", gc.passed, "max eig " + fmt(gc.max_eigenvalue, 3) + " over " +
                                            std::to_string(gc.points) + " points");

  for (const auto& name : {"decaying-sine", "pulse", "noise"}) {
    const auto tr = simulate(model, f, scenario_options(model, name, seed));
    const double g = empirical_gain(tr);
    row(std::string("gain ") + name, g <= f.gamma, fmt(g, 4) + " <= " + fmt(f.gamma, 4));
  }
  const auto free_tr = simulate(model, f, scenario_options(model, "free", seed));
  const double ratio = terminal_norm_ratio(free_tr);
  row("terminal norm ratio", ratio <= 1e-3, fmt(ratio, 3) + " <= 1e-3");

  const auto lyap = LyapunovMatrices::from_variables(rep.variables, model.plant_rule_count());
  const auto lc = sampled_lyapunov_decrease(model, lyap, free_tr, rep.settings.h);
  row("Lyapunov decrease (spot)", lc.consistent,
      "max dV/dt " + fmt(lc.max_vdot, 3) + " at t = " + fmt(lc.worst_t, 4), false);

  const auto ii = run_integral_suite(1000, seed);
  row("integral inequality", ii.passed(), std::to_string(ii.trials) + " draws, worst margin " + fmt(ii.worst_margin, 3));
  const auto ur = run_upsilon_suite(500, seed);
  row("upsilon relaxation", ur.passed(), std::to_string(ur.trials) + " draws, worst eig " + fmt(ur.worst_margin, 3));
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fuzzy H-infinity filter synthesis for T-S time-delay systems", "tsfilt"};
  app.require_subcommand(1);

  std::string model_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a model document");
  validate_cmd->add_option("model", model_path, "Model JSON")->required();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize a filter and write a report");
  synth->set_help_flag("--help", "Print this help message and exit");  // --h is the delay bound
  synth->add_option("model", sa.model, "Model JSON")->required();
  synth->add_option("--theorem", sa.theorem, "1 or 2")->check(CLI::IsMember({1, 2}));
  synth->add_option("--h", sa.h, "Delay bound (default: model)");
  synth->add_option("--upsilon", sa.upsilon, "Relaxation scalar (default: model)");
  synth->add_option("--rho", sa.rho, "Delay derivative bound (default: model)");
  synth->add_option("--delay-term", sa.delay_term, "derived or printed")
      ->check(CLI::IsMember({"derived", "printed"}));
  synth->add_option("-o,--output", sa.output, "Report path");
  synth->add_option("--sdpa", sa.sdpa, "Also dump the SDP in SDPA sparse format");
  synth->add_option("--grid", sa.grid, "Points of the sampled negativity check (0 disables)");
  synth->add_flag("-v,--verbose", sa.verbose, "Solver iteration log on stderr");
  synth->add_flag("--full-precision", sa.full_precision, "Print gamma with all digits");

  std::string spec_path, sweep_out;
  bool sweep_full = false;
  int sweep_workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Minimum gamma over an (h, upsilon) grid");
  sweep->add_option("spec", spec_path, "Sweep spec JSON")->required();
  sweep->add_flag("--full-precision", sweep_full, "Print cells with all digits");
  sweep->add_option("--workers", sweep_workers, "Worker threads (default: hardware)");
  sweep->add_option("-o,--output", sweep_out, "Table CSV path (overrides the spec)");

  SimArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate the filtering error system");
  simulate_cmd->add_option("model", sim.model, "Model JSON")->required();
  simulate_cmd->add_option("--filter", sim.filter, "Synthesis report")->required();
  simulate_cmd->add_option("--scenario", sim.scenario, "free, decaying-sine, pulse or noise")
      ->check(CLI::IsMember(scenario_names()));
  simulate_cmd->add_option("--seed", sim.seed, "Noise seed");
  simulate_cmd->add_option("--horizon", sim.horizon, "Final time");
  simulate_cmd->add_option("--step", sim.step, "RK4 step");
  simulate_cmd->add_option("-o,--output", sim.output, "Trace CSV path");
  simulate_cmd->add_option("--every", sim.every, "Write every k-th sample");

  std::string verify_model, verify_filter;
  std::uint64_t verify_seed = 1;
  int verify_grid = 2001;
  auto* verify_cmd = app.add_subcommand("verify", "Independent checks of a synthesized filter");
  verify_cmd->add_option("model", verify_model, "Model JSON")->required();
  verify_cmd->add_option("--filter", verify_filter, "Synthesis report")->required();
  verify_cmd->add_option("--seed", verify_seed, "Master seed for the random suites");
  verify_cmd->add_option("--grid", verify_grid, "Points of the sampled negativity check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(model_path, out);
    if (*synth) return cmd_synth(sa, out, err);
    if (*sweep) return cmd_sweep(spec_path, sweep_full, sweep_workers, sweep_out, out);
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*verify_cmd) return cmd_verify(verify_model, verify_filter, verify_seed, verify_grid, out);
  } catch (const ValidationError& e) {
    err << "validation failed:\n";
    for (const auto& f : e.findings()) err << "  - " << f << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ExtractionError& e) {
    err << "extraction error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SimulationError& e) {
    err << "simulation error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace tsfilt

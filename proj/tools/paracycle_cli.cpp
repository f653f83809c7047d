// Command-line harness: experiments from YAML, amplification and speedup
// sweeps, and temporal convergence studies.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "paracycle/analysis.hpp"
#include "paracycle/csv.hpp"
#include "paracycle/experiment.hpp"

namespace {

constexpr const char* kThreadsEnv = "PARACYCLE_NUM_THREADS";
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void configure_threads() {
  const char* env = std::getenv(kThreadsEnv);
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError(std::string(kThreadsEnv) + " must be a positive integer");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

std::vector<paracycle::AmpScheme> parse_schemes(const std::string& list) {
  std::vector<paracycle::AmpScheme> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(paracycle::parse_amp_scheme(item));
    } catch (const paracycle::ContractViolation& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("--schemes needs at least one scheme name");
  return out;
}

// Writes through `emit` to `path`, or to stdout when path is empty or "-".
template <class Emit>
void write_output(const std::string& path, Emit&& emit) {
  if (path.empty() || path == "-") {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path);
  if (!os) throw paracycle::Error("cannot open '" + path + "' for writing");
  emit(os);
  if (!os) throw paracycle::Error("failed writing '" + path + "'");
}

int cmd_run(const std::string& config, const std::string& out_override) {
  const auto cfg = paracycle::load_experiment(config);
  const auto result = paracycle::run_experiment(cfg);
  const std::string dir = out_override.empty() ? cfg.output_dir : out_override;
  paracycle::write_experiment_outputs(result, dir);
  std::cout << "outer_dt " << paracycle::csv::format(result.outer_dt) << ", " << cfg.n_outer_steps
            << " outer step(s)\n";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    std::cout << result.operator_names[i] << ": " << r.n_cycles() << " cycle(s), work " << r.total_iters()
              << ", sum dt " << paracycle::csv::format(r.total_dt()) << '\n';
  }
  std::cout << "wrote " << dir << '\n';
  return 0;
}

int cmd_convergence(const std::string& scheme, const std::string& problem, const std::string& out,
                    const std::vector<int>& steps) {
  paracycle::SchemeKind kind;
  try {
    kind = paracycle::parse_scheme(scheme);
  } catch (const paracycle::ContractViolation& e) {
    throw UsageError(e.what());
  }
  const auto presets = paracycle::convergence_presets();
  if (std::find(presets.begin(), presets.end(), problem) == presets.end()) {
    throw UsageError("unknown problem '" + problem + "'");
  }
  const auto prob = paracycle::make_convergence_problem(problem);
  const auto study = paracycle::convergence_study(kind, prob, steps);
  if (!study.monotone) std::cerr << "warning: errors do not decrease monotonically\n";
  if (!out.empty()) write_output(out, [&](std::ostream& os) { paracycle::write_convergence_csv(os, study); });
  std::cout << "order " << paracycle::csv::format(study.order) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycled super time-stepping and implicit integrators for stiff diffusion."};
  app.require_subcommand(1);
  app.footer(std::string("Environment:\n  ") + kThreadsEnv +
             "  worker threads for grid kernels (default: OpenMP default).\n"
             "                         Outputs are deterministic for a single thread.\n"
             "Exit status: 0 on success, 1 on runtime or config errors, 2 on usage errors.");

  std::string config, run_out;
  auto* run = app.add_subcommand("run", "Run a YAML experiment; writes final fields and cycle reports");
  run->add_option("config", config, "Experiment file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides the config's 'output')");

  std::string amp_schemes, amp_out;
  double amp_r = 500.0;
  int n_theta = 512;
  auto* amp = app.add_subcommand(
      "ampfactor", "Amplification factor |R| over theta in (0, pi] (CSV scheme,r,theta,amplification)");
  amp->add_option("--schemes", amp_schemes, "Comma list of euler, be, rkl2, rkg2, rkg2-even, exact")
      ->required();
  amp->add_option("--r", amp_r, "dt / dt_euler")->required()->check(CLI::PositiveNumber);
  amp->add_option("--n-theta", n_theta, "Number of mode angles")->check(CLI::PositiveNumber);
  amp->add_option("--out", amp_out, "CSV path ('-' or omitted: stdout)");

  double rmin = 1.0, rmax = 1000.0;
  std::string sp_schemes = "rkl2,rkg2", sp_out;
  auto* sp = app.add_subcommand("speedup", "STS speedup r/s(r) at integer r (CSV scheme,r,s,speedup)");
  sp->add_option("--rmin", rmin, "Smallest ratio (>= 1)")->required();
  sp->add_option("--rmax", rmax, "Largest ratio")->required();
  sp->add_option("--schemes", sp_schemes, "Comma list of rkl2, rkg2");
  sp->add_option("--out", sp_out, "CSV path ('-' or omitted: stdout)");

  std::string cv_scheme, cv_problem, cv_out;
  std::vector<int> cv_steps;
  auto* cv = app.add_subcommand("convergence", "Fit the temporal order of a scheme on a preset problem");
  cv->add_option("--scheme", cv_scheme, "euler, be, rkl2 or rkg2")->required();
  cv->add_option("--problem", cv_problem, "heat1d-sine or aligned2d-smooth")->required();
  cv->add_option("--steps", cv_steps, "Step counts (default: per-scheme preset list)")->delimiter(',');
  cv->add_option("--out", cv_out, "CSV path for scheme,problem,n_steps,dt,error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    configure_threads();
    if (*run) return cmd_run(config, run_out);
    if (*amp) {
      const auto schemes = parse_schemes(amp_schemes);
      const auto rows = paracycle::amplification_sweep(schemes, amp_r, n_theta);
      write_output(amp_out, [&](std::ostream& os) { paracycle::write_amplification_csv(os, rows); });
      return 0;
    }
    if (*sp) {
      const auto schemes = parse_schemes(sp_schemes);
      for (auto s : schemes) {
        if (s != paracycle::AmpScheme::rkl2 && s != paracycle::AmpScheme::rkg2) {
          throw UsageError("speedup is defined for rkl2 and rkg2 only");
        }
      }
      if (!(rmin >= 1.0) || !(rmax >= rmin)) throw UsageError("need 1 <= rmin <= rmax");
      const auto rows = paracycle::speedup_sweep(schemes, rmin, rmax);
      write_output(sp_out, [&](std::ostream& os) { paracycle::write_speedup_csv(os, rows); });
      return 0;
    }
    if (*cv) return cmd_convergence(cv_scheme, cv_problem, cv_out, cv_steps);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsageError;
  } catch (const paracycle::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

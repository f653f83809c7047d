#pragma once

// Von Neumann analysis of the schemes on the 1D uniform heat equation,
// STS speedup estimates, and temporal convergence studies.
//
// Mode convention: theta = k dx in (0, pi]. With dt = r dt_euler and
// dt_euler = dx^2/2, the mode's decay rate lambda = 4 sin^2(theta/2)/dx^2
// gives z = -dt lambda = -2 r sin^2(theta/2).

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "paracycle/operators.hpp"
#include "paracycle/schemes.hpp"

namespace paracycle {

/// `rkg2-even` is RKG2 with the raw stage count bumped to the next even
/// number instead of the next odd one; `exact` is e^z.
enum class AmpScheme { euler, be, rkl2, rkg2, rkg2_even, exact };

std::string to_string(AmpScheme s);
/// Throws ContractViolation on unknown names.
AmpScheme parse_amp_scheme(const std::string& name);

/// z = -dt lambda(theta) for ratio r = dt/dt_euler.
double mode_z(double r, double theta);

/// Stage count used at ratio r (0 for be/exact, 1 for euler).
int stage_count(AmpScheme scheme, double r);
StsCoefficients<double> sts_table(AmpScheme scheme, double r);

/// Growth factor of one step on u' = z u (dt = 1), obtained by running the
/// production recurrence on a scalar state.
double stability_function(AmpScheme scheme, double r, double z);
double sts_stability(const StsCoefficients<double>& c, double z);

/// Same quantity from the Legendre / Gegenbauer closed forms.
double closed_form_stability(AmpScheme scheme, double r, double z);
double closed_form_stability(AmpScheme scheme, const StsCoefficients<double>& c, double z);

/// |R(z(r, theta))|.
double amplification(AmpScheme scheme, double r, double theta);
double exact_amplification(double r, double theta);

/// pi j / n for j = 1..n.
std::vector<double> theta_samples(int n = 512);

/// r / s(r); needs r >= 1 and an STS scheme.
double speedup_estimate(AmpScheme scheme, double r);

struct AmplificationRow {
  std::string scheme;
  double r = 0.0;
  double theta = 0.0;
  double amplification = 0.0;
};

struct SpeedupRow {
  std::string scheme;
  double r = 0.0;
  int s = 0;
  double speedup = 0.0;
};

std::vector<AmplificationRow> amplification_sweep(const std::vector<AmpScheme>& schemes, double r,
                                                  int n_theta = 512);
/// Integer ratios rmin, rmin+1, ..., rmax (rmin must be >= 1).
std::vector<SpeedupRow> speedup_sweep(const std::vector<AmpScheme>& schemes, double rmin,
                                      double rmax);

void write_amplification_csv(std::ostream& os, const std::vector<AmplificationRow>& rows);
void write_speedup_csv(std::ostream& os, const std::vector<SpeedupRow>& rows);

/// Least-squares slope of log(error) against log(dt).
double fit_order(const std::vector<double>& dts, const std::vector<double>& errors);

/// n_sub explicit Euler steps over total_dt. Throws ContractViolation if the
/// substep exceeds the operator's Euler limit.
Field oracle_fine_euler(const DiffusionOperator& op, const Field& u, double total_dt, long n_sub);

struct ConvergenceProblem {
  std::string name;
  DiffusionOperator op;  ///< frozen
  Field u0;
  double t_final = 0.0;
  std::function<Field()> reference;
  /// Step counts per scheme used when the caller passes none.
  std::function<std::vector<int>(SchemeKind)> default_steps;
};

/// Presets:
///   heat1d-sine      129 nodes on [0,1], Dirichlet 0, u0 = sin(pi x), T = 0.1;
///                    reference is the exact decay of the discrete mode.
///   aligned2d-smooth 16x16 periodic unit square, b tilted by atan(1/2),
///                    T = 1 + 0.01 sin(2 pi x) sin(2 pi y), operator frozen on
///                    the initial state; reference is fine explicit Euler.
ConvergenceProblem make_convergence_problem(const std::string& preset);
std::vector<std::string> convergence_presets();

struct ConvergenceStudy {
  SchemeKind scheme = SchemeKind::rkg2;
  std::string problem;
  std::vector<int> n_steps;
  std::vector<double> dts;
  std::vector<double> errors;  ///< max-norm
  double order = 0.0;
  bool monotone = true;  ///< errors strictly decrease as dt shrinks
};

ConvergenceStudy convergence_study(SchemeKind scheme, const ConvergenceProblem& problem,
                                   std::vector<int> n_steps = {},
                                   const BackwardEulerSettings& be = {1e-13, 10000,
                                                                      PreconditionerKind::ilu0});

/// `scheme,problem,n_steps,dt,error`.
void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study);

}  // namespace paracycle

#pragma once

// Time integrators for a frozen (linear) parabolic operator: explicit Euler,
// Backward Euler + PCG, and the two second-order super time-stepping
// schemes RKL2 (Legendre) and RKG2 (Gegenbauer, alpha = 3/2).
//
// Both STS schemes share the three-term stage recurrence
//
//   u_1 = u_0 + mu~_1 dt F(u_0)
//   u_k = mu_k u_{k-1} + nu_k u_{k-2} + (1 - mu_k - nu_k) u_0
//         + mu~_k dt F(u_{k-1}) + gamma_k dt F(u_0),        k = 2..s
//
// and differ only in their coefficient tables. `sts_recurrence` is generic
// over the state type so the same code advances grid fields and the scalar
// test equation u' = z u used for stability polynomials.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "paracycle/linsolve.hpp"
#include "paracycle/operators.hpp"

namespace paracycle {

/// Coefficients indexed by stage k = 0..s (entries below the first used
/// stage are left at zero).
template <class Scalar = double>
struct StsCoefficients {
  int s = 0;
  Scalar w{};  ///< RKG2: 6/((s+4)(s-1)); RKL2: 4/(s^2+s-2)
  std::vector<Scalar> b, mu, nu, mu_tilde, gamma;
};

/// RKG2 table for an odd stage count s >= 3; even s is a ContractViolation.
template <class Scalar = double>
StsCoefficients<Scalar> rkg2_coefficients(int s);

/// Same recurrences without the parity check. Only meant for studying why
/// odd counts are required.
template <class Scalar = double>
StsCoefficients<Scalar> rkg2_coefficients_any_parity(int s);

/// RKL2 table, s >= 2.
template <class Scalar = double>
StsCoefficients<Scalar> rkl2_coefficients(int s);

/// ceil(sqrt(25 + 24 dt/dt_euler)/2 - 3/2), before any adjustment.
int rkg2_iteration_count_raw(double dt, double dt_euler);
/// Raw count made odd and floored at 3.
int rkg2_iteration_count(double dt, double dt_euler);
/// Smallest s >= 2 with (s^2 + s - 2)/4 >= dt/dt_euler.
int rkl2_iteration_count(double dt, double dt_euler);

inline bool is_finite_state(double x) { return std::isfinite(x); }
template <class Derived>
bool is_finite_state(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

/// Runs the s-stage recurrence. `rhs(state)` returns F(state). Throws BlowUp
/// naming the first stage that produces a non-finite value.
template <class State, class Rhs, class Scalar>
State sts_recurrence(Rhs&& rhs, const State& u0, Scalar dt, const StsCoefficients<Scalar>& c) {
  const State y0 = rhs(u0);
  State prev2 = u0;
  State prev1 = u0 + (c.mu_tilde[1] * dt) * y0;
  if (!is_finite_state(prev1)) throw BlowUp(1, "STS stage 1 is not finite");
  for (int k = 2; k <= c.s; ++k) {
    const State f = rhs(prev1);
    // Written as an increment on u0 so that F = 0 reproduces u0 bit for bit.
    State next = u0 + c.mu[k] * (prev1 - u0) + c.nu[k] * (prev2 - u0) + (c.mu_tilde[k] * dt) * f +
                 (c.gamma[k] * dt) * y0;
    if (!is_finite_state(next)) {
      throw BlowUp(k, "STS stage " + std::to_string(k) + " is not finite");
    }
    prev2 = std::move(prev1);
    prev1 = std::move(next);
  }
  return prev1;
}

enum class SchemeKind { euler, backward_euler, rkl2, rkg2 };

std::string to_string(SchemeKind kind);
/// Accepts euler, be/backward_euler, rkl2, rkg2. Throws ContractViolation.
SchemeKind parse_scheme(const std::string& name);

struct BackwardEulerSettings {
  double tol = 1e-10;
  int max_iter = 10000;
  PreconditionerKind preconditioner = PreconditionerKind::ilu0;
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::rkg2;
  BackwardEulerSettings be;
  /// Multiplies the estimated explicit Euler limit wherever it is used.
  double safety_factor = 1.0;

  void validate() const;
};

/// Backward Euler did not reach its tolerance; carries the solver record.
class SolverNotConverged : public Error {
 public:
  SolverNotConverged(SolveStats stats, const std::string& what)
      : Error(what), stats_(std::move(stats)) {}
  const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
};

Field step_euler(const DiffusionOperator& op, const Field& u, double dt);
Field step_rkg2(const DiffusionOperator& op, const Field& u, double dt, double dt_euler);
Field step_rkl2(const DiffusionOperator& op, const Field& u, double dt, double dt_euler);
/// Applies a given coefficient table directly (any stage count).
Field step_sts(const DiffusionOperator& op, const Field& u, double dt,
               const StsCoefficients<double>& coefficients);

struct BackwardEulerResult {
  Field u;
  SolveStats stats;  ///< summed iterations, worst residual over components
};

/// Solves (I - dt J) u^{n+1} = u^n with PCG from the initial guess u^n.
/// Dirichlet nodes are eliminated so the system stays symmetric in the
/// rho*V inner product.
BackwardEulerResult step_backward_euler(const DiffusionOperator& op, const Field& u, double dt,
                                        const BackwardEulerSettings& settings);

struct StepResult {
  Field u;
  int work = 0;  ///< STS stages, PCG iterations, or 1 for Euler
  std::optional<SolveStats> solve;
};

/// One step of the configured scheme. An unfrozen aligned operator is
/// lagged on `u` for the duration of the step.
StepResult advance(const SchemeConfig& scheme, const DiffusionOperator& op, const Field& u,
                   double dt, double dt_euler);

}  // namespace paracycle

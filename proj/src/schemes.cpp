#include "paracycle/schemes.hpp"

#include <cmath>
#include <string>

namespace paracycle {

namespace {

template <class Scalar>
StsCoefficients<Scalar> empty_table(int s) {
  StsCoefficients<Scalar> c;
  c.s = s;
  const auto n = static_cast<std::size_t>(s) + 1;
  c.b.assign(n, Scalar(0));
  c.mu.assign(n, Scalar(0));
  c.nu.assign(n, Scalar(0));
  c.mu_tilde.assign(n, Scalar(0));
  c.gamma.assign(n, Scalar(0));
  return c;
}

}  // namespace

template <class Scalar>
StsCoefficients<Scalar> rkg2_coefficients_any_parity(int s) {
  if (s < 2) throw ContractViolation("RKG2 needs at least 2 stages, got " + std::to_string(s));
  auto c = empty_table<Scalar>(s);
  c.w = Scalar(6) / (Scalar(s + 4) * Scalar(s - 1));
  c.b[0] = Scalar(1);
  c.b[1] = Scalar(1) / Scalar(3);
  c.b[2] = Scalar(1) / Scalar(15);
  c.mu[1] = Scalar(1);
  c.mu_tilde[1] = c.w;
  c.mu[2] = Scalar(1) / Scalar(2);
  c.nu[2] = Scalar(-1) / Scalar(10);
  c.mu_tilde[2] = c.mu[2] * c.w;
  c.gamma[2] = Scalar(0);
  for (int k = 3; k <= s; ++k) {
    const Scalar K(k);
    c.b[k] = Scalar(4) * (K - 1) * (K + 4) / (Scalar(3) * K * (K + 1) * (K + 2) * (K + 3));
    c.mu[k] = (Scalar(2) + Scalar(1) / K) * c.b[k] / c.b[k - 1];
    c.nu[k] = -(Scalar(1) / K + Scalar(1)) * c.b[k] / c.b[k - 2];
    c.mu_tilde[k] = c.mu[k] * c.w;
    c.gamma[k] = (K * (K + 1) / Scalar(2) * c.b[k - 1] - Scalar(1)) * c.mu_tilde[k];
  }
  return c;
}

template <class Scalar>
StsCoefficients<Scalar> rkg2_coefficients(int s) {
  if (s < 3 || s % 2 == 0) {
    throw ContractViolation("RKG2 needs an odd stage count >= 3, got " + std::to_string(s));
  }
  return rkg2_coefficients_any_parity<Scalar>(s);
}

template <class Scalar>
StsCoefficients<Scalar> rkl2_coefficients(int s) {
  if (s < 2) throw ContractViolation("RKL2 needs at least 2 stages, got " + std::to_string(s));
  auto c = empty_table<Scalar>(s);
  const Scalar S(s);
  c.w = Scalar(4) / (S * S + S - Scalar(2));
  const Scalar third = Scalar(1) / Scalar(3);
  for (int j = 0; j <= s; ++j) {
    const Scalar J(j);
    c.b[j] = j <= 2 ? third : (J * J + J - Scalar(2)) / (Scalar(2) * J * (J + 1));
  }
  c.mu[1] = Scalar(1);
  c.mu_tilde[1] = c.b[1] * c.w;
  for (int j = 2; j <= s; ++j) {
    const Scalar J(j);
    c.mu[j] = (Scalar(2) * J - 1) / J * c.b[j] / c.b[j - 1];
    c.nu[j] = -(J - 1) / J * c.b[j] / c.b[j - 2];
    c.mu_tilde[j] = c.mu[j] * c.w;
    c.gamma[j] = -(Scalar(1) - c.b[j - 1]) * c.mu_tilde[j];
  }
  return c;
}

template StsCoefficients<double> rkg2_coefficients<double>(int);
template StsCoefficients<long double> rkg2_coefficients<long double>(int);
template StsCoefficients<double> rkg2_coefficients_any_parity<double>(int);
template StsCoefficients<long double> rkg2_coefficients_any_parity<long double>(int);
template StsCoefficients<double> rkl2_coefficients<double>(int);
template StsCoefficients<long double> rkl2_coefficients<long double>(int);

namespace {

double checked_ratio(double dt, double dt_euler) {
  if (!(dt > 0.0) || !(dt_euler > 0.0)) {
    throw ContractViolation("stage counts need dt > 0 and dt_euler > 0");
  }
  return dt / dt_euler;
}

}  // namespace

int rkg2_iteration_count_raw(double dt, double dt_euler) {
  const double r = checked_ratio(dt, dt_euler);
  if (std::isinf(r)) throw ContractViolation("RKG2 stage count for an infinite ratio");
  return static_cast<int>(std::ceil(0.5 * std::sqrt(25.0 + 24.0 * r) - 1.5));
}

int rkg2_iteration_count(double dt, double dt_euler) {
  int s = rkg2_iteration_count_raw(dt, dt_euler);
  if (s % 2 == 0) ++s;
  return s < 3 ? 3 : s;
}

int rkl2_iteration_count(double dt, double dt_euler) {
  const double r = checked_ratio(dt, dt_euler);
  if (std::isinf(r)) throw ContractViolation("RKL2 stage count for an infinite ratio");
  int s = static_cast<int>(std::ceil(0.5 * (std::sqrt(9.0 + 16.0 * r) - 1.0)));
  // Guard against rounding in the square root.
  while (s > 2 && (double(s - 1) * (s - 1) + (s - 1) - 2.0) / 4.0 >= r) --s;
  while ((double(s) * s + s - 2.0) / 4.0 < r) ++s;
  return s < 2 ? 2 : s;
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::euler:
      return "euler";
    case SchemeKind::backward_euler:
      return "be";
    case SchemeKind::rkl2:
      return "rkl2";
    case SchemeKind::rkg2:
      return "rkg2";
  }
  return "unknown";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "euler") return SchemeKind::euler;
  if (name == "be" || name == "backward_euler") return SchemeKind::backward_euler;
  if (name == "rkl2") return SchemeKind::rkl2;
  if (name == "rkg2") return SchemeKind::rkg2;
  throw ContractViolation("unknown scheme '" + name + "'");
}

void SchemeConfig::validate() const {
  if (kind == SchemeKind::backward_euler) {
    if (!(be.tol > 0.0 && be.tol < 1.0)) throw ContractViolation("backward Euler tol must lie in (0, 1)");
    if (be.max_iter < 1) throw ContractViolation("backward Euler max_iter must be at least 1");
  }
  if (!(safety_factor > 0.0)) throw ContractViolation("safety_factor must be positive");
}

namespace {

// Steps act on a linear operator; an unfrozen aligned operator is lagged on u.
const DiffusionOperator& linearized(const DiffusionOperator& op, const Field& u,
                                    std::optional<DiffusionOperator>& storage) {
  if (op.is_frozen()) return op;
  storage.emplace(op);
  storage->freeze(u);
  return *storage;
}

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractViolation("time step must be positive and finite");
}

}  // namespace

Field step_euler(const DiffusionOperator& op, const Field& u, double dt) {
  check_dt(dt);
  std::optional<DiffusionOperator> storage;
  const auto& L = linearized(op, u, storage);
  Field out(u.grid_ptr(), Matrix(u.values() + dt * L.apply(u).values()));
  if (!out.all_finite()) throw BlowUp(1, "explicit Euler step is not finite");
  return out;
}

Field step_sts(const DiffusionOperator& op, const Field& u, double dt,
               const StsCoefficients<double>& coefficients) {
  check_dt(dt);
  std::optional<DiffusionOperator> storage;
  const auto& L = linearized(op, u, storage);
  const auto rhs = [&](const Matrix& v) -> Matrix {
    return L.apply(Field(u.grid_ptr(), v)).values();
  };
  return Field(u.grid_ptr(), sts_recurrence<Matrix>(rhs, u.values(), dt, coefficients));
}

Field step_rkg2(const DiffusionOperator& op, const Field& u, double dt, double dt_euler) {
  return step_sts(op, u, dt, rkg2_coefficients<double>(rkg2_iteration_count(dt, dt_euler)));
}

Field step_rkl2(const DiffusionOperator& op, const Field& u, double dt, double dt_euler) {
  return step_sts(op, u, dt, rkl2_coefficients<double>(rkl2_iteration_count(dt, dt_euler)));
}

BackwardEulerResult step_backward_euler(const DiffusionOperator& op, const Field& u, double dt,
                                        const BackwardEulerSettings& settings) {
  check_dt(dt);
  std::optional<DiffusionOperator> storage;
  const auto& L = linearized(op, u, storage);
  const GridPtr& grid = u.grid_ptr();
  const Index n = u.num_points();
  const auto& mask = L.dirichlet_nodes();
  bool has_dirichlet = false;
  for (char m : mask) has_dirichlet = has_dirichlet || m;

  // M x = x - dt F(P x), P zeroing Dirichlet nodes. Dirichlet rows reduce to
  // the identity because F vanishes there.
  LinearOperatorAction A;
  A.size = n;
  A.weights = L.weights();
  A.apply = [&](const Vector& x, Vector& y) {
    Field xf(grid, Matrix(x));
    if (has_dirichlet) {
      for (Index p = 0; p < n; ++p) {
        if (mask[p]) xf(p) = 0.0;
      }
    }
    y = x - dt * L.apply(xf).values().col(0);
  };
  A.diagonal = Vector(Vector::Ones(n) - dt * L.jacobian_diagonal());

  Preconditioner pc = Preconditioner::identity(n);
  switch (settings.preconditioner) {
    case PreconditionerKind::none:
      break;
    case PreconditionerKind::jacobi:
      pc = build_jacobi(A);
      break;
    case PreconditionerKind::ilu0: {
      const SparseRows& J = L.jacobian();
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(J.nonZeros() + n));
      for (Index i = 0; i < n; ++i) {
        if (mask[i]) {
          trip.emplace_back(i, i, 1.0);
          continue;
        }
        bool diag_seen = false;
        for (SparseRows::InnerIterator it(J, i); it; ++it) {
          const Index j = it.col();
          if (mask[j]) continue;
          const double v = (i == j ? 1.0 : 0.0) - dt * it.value();
          if (i == j) diag_seen = true;
          trip.emplace_back(i, j, v);
        }
        if (!diag_seen) trip.emplace_back(i, i, 1.0);
      }
      SparseRows M(n, n);
      M.setFromTriplets(trip.begin(), trip.end());
      pc = build_ilu0(M, L.weights());
      break;
    }
  }

  BackwardEulerResult result{Field(grid, u.components()), SolveStats{}};
  result.stats.converged = true;
  for (int c = 0; c < u.components(); ++c) {
    Vector rhs = u.component(c);
    if (has_dirichlet) {
      Field lift(grid, 1);
      for (Index p = 0; p < n; ++p) {
        if (mask[p]) lift(p) = u(p, c);
      }
      rhs += dt * L.apply(lift).values().col(0);
    }
    SolveResult sr = pcg_solve(A, rhs, pc, u.component(c), settings.tol, settings.max_iter);
    result.u.component(c) = sr.x;
    result.stats.iterations += sr.stats.iterations;
    result.stats.final_relative_residual =
        std::max(result.stats.final_relative_residual, sr.stats.final_relative_residual);
    result.stats.converged = result.stats.converged && sr.stats.converged;
    if (c == 0) result.stats.residual_history = sr.stats.residual_history;
    if (!sr.stats.converged) {
      throw SolverNotConverged(result.stats, "backward Euler: PCG did not converge for component " +
                                                 std::to_string(c) + " (relative residual " +
                                                 std::to_string(sr.stats.final_relative_residual) + ")");
    }
  }
  return result;
}

StepResult advance(const SchemeConfig& scheme, const DiffusionOperator& op, const Field& u,
                   double dt, double dt_euler) {
  scheme.validate();
  const double limit = dt_euler * scheme.safety_factor;
  switch (scheme.kind) {
    case SchemeKind::euler:
      return {step_euler(op, u, dt), 1, std::nullopt};
    case SchemeKind::backward_euler: {
      auto r = step_backward_euler(op, u, dt, scheme.be);
      const int iters = r.stats.iterations;
      return {std::move(r.u), iters, std::move(r.stats)};
    }
    case SchemeKind::rkl2: {
      if (std::isinf(limit)) return {step_euler(op, u, dt), 1, std::nullopt};
      const int s = rkl2_iteration_count(dt, limit);
      return {step_sts(op, u, dt, rkl2_coefficients<double>(s)), s, std::nullopt};
    }
    case SchemeKind::rkg2: {
      if (std::isinf(limit)) return {step_euler(op, u, dt), 1, std::nullopt};
      const int s = rkg2_iteration_count(dt, limit);
      return {step_sts(op, u, dt, rkg2_coefficients<double>(s)), s, std::nullopt};
    }
  }
  throw ContractViolation("unknown scheme kind");
}

}  // namespace paracycle

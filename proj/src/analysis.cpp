#include "paracycle/analysis.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "paracycle/csv.hpp"

namespace paracycle {

std::string to_string(AmpScheme s) {
  switch (s) {
    case AmpScheme::euler:
      return "euler";
    case AmpScheme::be:
      return "be";
    case AmpScheme::rkl2:
      return "rkl2";
    case AmpScheme::rkg2:
      return "rkg2";
    case AmpScheme::rkg2_even:
      return "rkg2-even";
    case AmpScheme::exact:
      return "exact";
  }
  return "unknown";
}

AmpScheme parse_amp_scheme(const std::string& name) {
  if (name == "euler") return AmpScheme::euler;
  if (name == "be" || name == "backward_euler") return AmpScheme::be;
  if (name == "rkl2") return AmpScheme::rkl2;
  if (name == "rkg2") return AmpScheme::rkg2;
  if (name == "rkg2-even") return AmpScheme::rkg2_even;
  if (name == "exact") return AmpScheme::exact;
  throw ContractViolation("unknown scheme '" + name + "'");
}

double mode_z(double r, double theta) {
  // dt = r dx^2/2 and lambda = 4 sin^2(theta/2)/dx^2.
  const double dx = 1.0;
  const double dt = r * dx * dx / 2.0;
  const double sn = std::sin(0.5 * theta);
  const double lambda = 4.0 * sn * sn / (dx * dx);
  return -dt * lambda;
}

int stage_count(AmpScheme scheme, double r) {
  switch (scheme) {
    case AmpScheme::be:
    case AmpScheme::exact:
      return 0;
    case AmpScheme::euler:
      return 1;
    case AmpScheme::rkl2:
      return rkl2_iteration_count(r, 1.0);
    case AmpScheme::rkg2:
      return rkg2_iteration_count(r, 1.0);
    case AmpScheme::rkg2_even: {
      int s = rkg2_iteration_count_raw(r, 1.0);
      if (s % 2 != 0) ++s;
      return s < 2 ? 2 : s;
    }
  }
  return 0;
}

StsCoefficients<double> sts_table(AmpScheme scheme, double r) {
  switch (scheme) {
    case AmpScheme::rkl2:
      return rkl2_coefficients<double>(stage_count(scheme, r));
    case AmpScheme::rkg2:
      return rkg2_coefficients<double>(stage_count(scheme, r));
    case AmpScheme::rkg2_even:
      return rkg2_coefficients_any_parity<double>(stage_count(scheme, r));
    default:
      throw ContractViolation(to_string(scheme) + " is not a super time-stepping scheme");
  }
}

double sts_stability(const StsCoefficients<double>& c, double z) {
  return sts_recurrence<double>([z](double v) { return z * v; }, 1.0, 1.0, c);
}

double stability_function(AmpScheme scheme, double r, double z) {
  switch (scheme) {
    case AmpScheme::euler:
      return 1.0 + z;
    case AmpScheme::be:
      return 1.0 / (1.0 - z);
    case AmpScheme::exact:
      return std::exp(z);
    default:
      return sts_stability(sts_table(scheme, r), z);
  }
}

namespace {

double legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Gegenbauer C_n^{(3/2)}.
double gegenbauer32(int n, double x) {
  const double alpha = 1.5;
  double c0 = 1.0, c1 = 2.0 * alpha * x;
  if (n == 0) return c0;
  for (int k = 2; k <= n; ++k) {
    const double c2 = (2.0 * x * (k + alpha - 1.0) * c1 - (k + 2.0 * alpha - 2.0) * c0) / k;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

}  // namespace

double closed_form_stability(AmpScheme scheme, const StsCoefficients<double>& c, double z) {
  const int s = c.s;
  const double bs = c.b[s];
  switch (scheme) {
    case AmpScheme::rkl2:
      return (1.0 - bs) + bs * legendre(s, 1.0 + c.w * z);
    case AmpScheme::rkg2:
    case AmpScheme::rkg2_even:
      return (1.0 - bs * gegenbauer32(s, 1.0)) + bs * gegenbauer32(s, 1.0 + c.w * z);
    default:
      throw ContractViolation(to_string(scheme) + " has no stage table");
  }
}

double closed_form_stability(AmpScheme scheme, double r, double z) {
  switch (scheme) {
    case AmpScheme::euler:
      return 1.0 + z;
    case AmpScheme::be:
      return 1.0 / (1.0 - z);
    case AmpScheme::exact:
      return std::exp(z);
    default:
      return closed_form_stability(scheme, sts_table(scheme, r), z);
  }
}

double amplification(AmpScheme scheme, double r, double theta) {
  if (!(r > 0.0)) throw ContractViolation("amplification needs r > 0");
  if (!(theta > 0.0 && theta <= std::numbers::pi)) {
    throw ContractViolation("amplification needs theta in (0, pi]");
  }
  return std::abs(stability_function(scheme, r, mode_z(r, theta)));
}

double exact_amplification(double r, double theta) { return amplification(AmpScheme::exact, r, theta); }

std::vector<double> theta_samples(int n) {
  if (n < 1) throw ContractViolation("theta_samples needs n >= 1");
  std::vector<double> t(n);
  for (int j = 1; j <= n; ++j) t[j - 1] = std::numbers::pi * j / n;
  return t;
}

double speedup_estimate(AmpScheme scheme, double r) {
  if (!(r >= 1.0)) throw ContractViolation("speedup_estimate needs r >= 1");
  if (scheme != AmpScheme::rkl2 && scheme != AmpScheme::rkg2) {
    throw ContractViolation("speedup_estimate is defined for rkl2 and rkg2");
  }
  return r / stage_count(scheme, r);
}

std::vector<AmplificationRow> amplification_sweep(const std::vector<AmpScheme>& schemes, double r,
                                                  int n_theta) {
  if (schemes.empty()) throw ContractViolation("amplification sweep needs at least one scheme");
  const auto thetas = theta_samples(n_theta);
  std::vector<AmplificationRow> rows;
  rows.reserve(schemes.size() * thetas.size());
  for (AmpScheme s : schemes) {
    std::optional<StsCoefficients<double>> table;
    if (stage_count(s, r) > 1) table = sts_table(s, r);
    for (double th : thetas) {
      const double z = mode_z(r, th);
      const double R = table ? sts_stability(*table, z) : stability_function(s, r, z);
      rows.push_back({to_string(s), r, th, std::abs(R)});
    }
  }
  return rows;
}

std::vector<SpeedupRow> speedup_sweep(const std::vector<AmpScheme>& schemes, double rmin,
                                      double rmax) {
  if (schemes.empty()) throw ContractViolation("speedup sweep needs at least one scheme");
  if (!(rmin >= 1.0) || !(rmax >= rmin)) throw ContractViolation("speedup sweep needs 1 <= rmin <= rmax");
  std::vector<SpeedupRow> rows;
  for (AmpScheme s : schemes) {
    for (double r = rmin; r <= rmax; r += 1.0) {
      rows.push_back({to_string(s), r, stage_count(s, r), speedup_estimate(s, r)});
    }
  }
  return rows;
}

void write_amplification_csv(std::ostream& os, const std::vector<AmplificationRow>& rows) {
  os << "scheme,r,theta,amplification\n";
  for (const auto& row : rows) {
    os << row.scheme << ',' << csv::format(row.r) << ',' << csv::format(row.theta) << ','
       << csv::format(row.amplification) << '\n';
  }
}

void write_speedup_csv(std::ostream& os, const std::vector<SpeedupRow>& rows) {
  os << "scheme,r,s,speedup\n";
  for (const auto& row : rows) {
    os << row.scheme << ',' << csv::format(row.r) << ',' << row.s << ',' << csv::format(row.speedup)
       << '\n';
  }
}

double fit_order(const std::vector<double>& dts, const std::vector<double>& errors) {
  if (dts.size() != errors.size() || dts.size() < 2) {
    throw ContractViolation("fit_order needs at least two (dt, error) pairs");
  }
  const auto n = static_cast<double>(dts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(dts[i] > 0.0) || !(errors[i] > 0.0)) throw DomainError("fit_order needs positive dt and error");
    const double x = std::log(dts[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Field oracle_fine_euler(const DiffusionOperator& op, const Field& u, double total_dt, long n_sub) {
  if (n_sub < 1) throw ContractViolation("oracle_fine_euler needs n_sub >= 1");
  if (!(total_dt >= 0.0)) throw ContractViolation("oracle_fine_euler needs total_dt >= 0");
  DiffusionOperator L = op;
  if (!L.is_frozen()) L.freeze(u);
  const double h = total_dt / static_cast<double>(n_sub);
  const double limit = estimate_euler_dt(L, u);
  if (h > limit) {
    throw ContractViolation("oracle_fine_euler: substep " + csv::format(h) +
                            " exceeds the Euler limit " + csv::format(limit));
  }
  Field v = u;
  if (h == 0.0) return v;
  for (long k = 0; k < n_sub; ++k) v.values() += h * L.apply(v).values();
  return v;
}

namespace {

ConvergenceProblem heat1d_sine() {
  const Index n = 129;
  GridSpec spec;
  spec.counts = {n};
  spec.extents = {{0.0, 1.0}};
  auto grid = build_grid(spec);
  ScalarDiffusionConfig cfg{Field(grid), Field(grid), BoundaryCondition::uniform(FaceBc::dirichlet(0.0)),
                            FaceAveraging::arithmetic};
  cfg.nu.values().setOnes();
  cfg.rho.values().setOnes();
  Field u0(grid);
  const double pi = std::numbers::pi;
  for (Index i = 0; i < n; ++i) u0(i) = std::sin(pi * grid->coords(0)[i]);
  const double t_final = 0.1;
  const double dx = 1.0 / static_cast<double>(n - 1);
  const double sn = std::sin(0.5 * pi * dx);
  const double lambda_h = 4.0 / (dx * dx) * sn * sn;

  ConvergenceProblem p{"heat1d-sine", DiffusionOperator::scalar(cfg), u0, t_final, {}, {}};
  p.reference = [u0, lambda_h, t_final]() {
    Field r = u0;
    r.values() *= std::exp(-lambda_h * t_final);
    return r;
  };
  p.default_steps = [](SchemeKind k) -> std::vector<int> {
    if (k == SchemeKind::euler) return {4096, 8192, 16384, 32768};
    return {4, 8, 16, 32, 64};
  };
  return p;
}

ConvergenceProblem aligned2d_smooth() {
  const Index n = 16;
  const double L = 1.0;
  GridSpec spec;
  spec.counts = {n, n};
  const double hi = L * static_cast<double>(n - 1) / static_cast<double>(n);
  spec.extents = {{0.0, hi}, {0.0, hi}};
  auto grid = build_grid(spec);

  AlignedConductionConfig cfg;
  cfg.b_hat = Field(grid, 2);
  const double angle = std::atan(0.5);
  cfg.b_hat.component(0).setConstant(std::cos(angle));
  cfg.b_hat.component(1).setConstant(std::sin(angle));
  cfg.rho = Field(grid);
  cfg.rho.values().setOnes();
  cfg.bc = BoundaryCondition::uniform(FaceBc::periodic());
  cfg.f_c = make_profile("one");
  cfg.f_m = make_profile("one");

  Field T(grid);
  const double pi = std::numbers::pi;
  for (Index p = 0; p < grid->num_points(); ++p) {
    const auto x = grid->position(p);
    T(p) = 1.0 + 0.01 * std::sin(2.0 * pi * x[0] / L) * std::sin(2.0 * pi * x[1] / L);
  }
  DiffusionOperator op = DiffusionOperator::aligned(cfg);
  op.freeze(T);
  const double t_final = 0.02;
  const double dt_euler = estimate_euler_dt(op, T);
  const long n_sub = 1L << 16;
  if (t_final / n_sub > dt_euler) throw ContractViolation("aligned2d-smooth: oracle substep too large");

  ConvergenceProblem p{"aligned2d-smooth", op, T, t_final, {}, {}};
  p.reference = [op, T, t_final, n_sub]() { return oracle_fine_euler(op, T, t_final, n_sub); };
  const int base = static_cast<int>(std::ceil(t_final / dt_euler));
  p.default_steps = [base](SchemeKind k) -> std::vector<int> {
    if (k == SchemeKind::euler || k == SchemeKind::backward_euler) {
      const int b = 64 * base;
      return {b, 2 * b, 4 * b, 8 * b};
    }
    return {4, 8, 16, 32};
  };
  return p;
}

}  // namespace

std::vector<std::string> convergence_presets() { return {"heat1d-sine", "aligned2d-smooth"}; }

ConvergenceProblem make_convergence_problem(const std::string& preset) {
  if (preset == "heat1d-sine") return heat1d_sine();
  if (preset == "aligned2d-smooth") return aligned2d_smooth();
  throw ContractViolation("unknown convergence problem '" + preset + "'");
}

ConvergenceStudy convergence_study(SchemeKind scheme, const ConvergenceProblem& problem,
                                   std::vector<int> n_steps, const BackwardEulerSettings& be) {
  if (n_steps.empty()) n_steps = problem.default_steps(scheme);
  if (n_steps.size() < 2) throw ContractViolation("convergence study needs at least two step counts");
  ConvergenceStudy st;
  st.scheme = scheme;
  st.problem = problem.name;
  st.n_steps = n_steps;
  const Field ref = problem.reference();
  const double dt_euler = estimate_euler_dt(problem.op, problem.u0);
  SchemeConfig cfg;
  cfg.kind = scheme;
  cfg.be = be;
  for (int n : n_steps) {
    if (n < 1) throw ContractViolation("step counts must be positive");
    const double dt = problem.t_final / n;
    Field u = problem.u0;
    for (int k = 0; k < n; ++k) u = advance(cfg, problem.op, u, dt, dt_euler).u;
    st.dts.push_back(dt);
    st.errors.push_back((u.values() - ref.values()).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < st.errors.size(); ++i) {
    const bool finer = st.dts[i] < st.dts[i - 1];
    if (finer ? !(st.errors[i] < st.errors[i - 1]) : !(st.errors[i] > st.errors[i - 1])) {
      st.monotone = false;
    }
  }
  st.order = fit_order(st.dts, st.errors);
  return st;
}

void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study) {
  os << "scheme,problem,n_steps,dt,error\n";
  for (std::size_t i = 0; i < study.dts.size(); ++i) {
    os << to_string(study.scheme) << ',' << study.problem << ',' << study.n_steps[i] << ','
       << csv::format(study.dts[i]) << ',' << csv::format(study.errors[i]) << '\n';
  }
}

}  // namespace paracycle

#include "paracycle/ptl.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "paracycle/csv.hpp"

namespace paracycle {

void PtlConfig::validate() const {
  if (!(eps_rel > 0.0)) throw ContractViolation("ptl eps_rel must be positive");
  if (max_cycles < 1) throw ContractViolation("ptl max_cycles must be at least 1");
  if (floor_mode == DtFloorMode::clamp_to_fraction && !(floor_fraction > 0.0)) {
    throw ContractViolation("ptl floor fraction must be positive");
  }
}

std::string to_string(PtlMode mode) {
  switch (mode) {
    case PtlMode::off:
      return "off";
    case PtlMode::static_first:
      return "static";
    case PtlMode::dynamic:
      return "dynamic";
  }
  return "unknown";
}

PtlMode parse_ptl_mode(const std::string& name) {
  if (name == "off" || name == "none") return PtlMode::off;
  if (name == "static" || name == "static_first") return PtlMode::static_first;
  if (name == "dynamic") return PtlMode::dynamic;
  throw ContractViolation("unknown ptl mode '" + name + "'");
}

Index argmax_abs(const Field& F) {
  Index best = 0;
  double best_val = -1.0;
  for (Index p = 0; p < F.num_points(); ++p) {
    for (int c = 0; c < F.components(); ++c) {
      const double a = std::abs(F(p, c));
      if (a > best_val) {
        best_val = a;
        best = p;
      }
    }
  }
  return best;
}

namespace {

// Minimum pair bound around point p; +inf when nothing restricts.
double pair_bound(const Field& u, const Field& F, const BoundaryCondition& bc, Index p,
                  double threshold) {
  const Grid& g = u.grid();
  double best = std::numeric_limits<double>::infinity();
  for (int d = 0; d < g.dims(); ++d) {
    for (int dir : {-1, 1}) {
      const auto q = neighbor(g, bc, p, d, dir);
      if (!q) continue;
      for (int c = 0; c < u.components(); ++c) {
        const double du = u(*q, c) - u(p, c);
        const double dF = F(*q, c) - F(p, c);
        if (du == 0.0 || std::abs(dF) <= threshold || du * dF >= 0.0) continue;
        best = std::min(best, -du / dF);
      }
    }
  }
  return best;
}

}  // namespace

std::optional<double> compute_ptl(const Field& u, const Field& F, const BoundaryCondition& bc,
                                  const PtlConfig& cfg) {
  if (!u.same_shape(F)) throw ContractViolation("compute_ptl: u and F differ in shape");
  const double fmax = F.values().size() ? F.values().cwiseAbs().maxCoeff() : 0.0;
  if (!(fmax > 0.0)) return std::nullopt;
  const double threshold = cfg.eps_rel * fmax;
  double best = std::numeric_limits<double>::infinity();
  if (cfg.check_all_points) {
    for (Index p = 0; p < u.num_points(); ++p) best = std::min(best, pair_bound(u, F, bc, p, threshold));
  } else {
    best = pair_bound(u, F, bc, argmax_abs(F), threshold);
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

std::optional<double> compute_ptl(const Field& u, const Field& F, const PtlConfig& cfg) {
  return compute_ptl(u, F, BoundaryCondition{}, cfg);
}

double CycleReport::total_dt() const {
  double t = 0.0;
  for (const auto& c : cycles) t += c.dt;
  return t;
}

long CycleReport::total_iters() const {
  long n = 0;
  for (const auto& c : cycles) n += c.iters;
  return n;
}

void CycleReport::append(const CycleReport& other) {
  cycles.insert(cycles.end(), other.cycles.begin(), other.cycles.end());
}

void CycleReport::write_csv(std::ostream& os) const {
  os << "outer_step,cycle,dt,ptl_raw,limited,iters\n";
  for (const auto& c : cycles) {
    os << c.outer_step << ',' << c.cycle << ',' << csv::format(c.dt) << ','
       << (c.ptl_raw ? csv::format(*c.ptl_raw) : std::string("inf")) << ',' << (c.limited ? 1 : 0)
       << ',' << c.iters << '\n';
  }
}

void CycleReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_csv(os);
  if (!os) throw Error("failed writing '" + path + "'");
}

CycleResult cycle_operator(const DiffusionOperator& op, const SchemeConfig& scheme, const Field& u,
                           double outer_dt, const PtlConfig& cfg, int outer_step) {
  if (!(outer_dt > 0.0) || !std::isfinite(outer_dt)) {
    throw ContractViolation("cycle_operator: outer_dt must be positive and finite");
  }
  cfg.validate();
  scheme.validate();

  DiffusionOperator L = op;
  if (!L.is_frozen()) L.freeze(u);
  double dt_euler = estimate_euler_dt(L, u) * scheme.safety_factor;

  CycleResult res{u, {}};
  double remaining = outer_dt;
  std::optional<double> static_ptl;
  bool have_static = false;
  const double tiny = 1e-12 * outer_dt;

  for (long cycle = 0; remaining > 0.0; ++cycle) {
    if (cycle >= cfg.max_cycles) {
      throw CycleCapExceeded(res.report, "cycle cap of " + std::to_string(cfg.max_cycles) +
                                             " reached with " + std::to_string(remaining) +
                                             " of the outer step left");
    }
    if (cfg.refresh_lag_each_cycle && L.is_aligned() && cycle > 0) {
      L.freeze(res.u);
      dt_euler = estimate_euler_dt(L, res.u) * scheme.safety_factor;
    }

    std::optional<double> ptl;
    if (cfg.mode == PtlMode::dynamic || (cfg.mode == PtlMode::static_first && !have_static)) {
      ptl = compute_ptl(res.u, L.apply(res.u), L.bc(), cfg);
      if (cfg.mode == PtlMode::static_first) {
        static_ptl = ptl;
        have_static = true;
      }
    } else if (cfg.mode == PtlMode::static_first) {
      ptl = static_ptl;
    }

    double target = std::numeric_limits<double>::infinity();
    if (ptl) {
      const double floor =
          cfg.floor_mode == DtFloorMode::clamp_to_euler ? dt_euler : cfg.floor_fraction * dt_euler;
      target = std::isfinite(floor) ? std::max(*ptl, floor) : *ptl;
    }
    if (scheme.kind == SchemeKind::euler) target = std::min(target, dt_euler);

    double dt = std::min(target, remaining);
    const bool limited = target < remaining;
    if (remaining - dt <= tiny) dt = remaining;

    StepResult step = advance(scheme, L, res.u, dt, dt_euler / scheme.safety_factor);
    res.u = std::move(step.u);
    res.report.cycles.push_back({outer_step, cycle, dt, ptl, limited && dt < remaining, step.work});
    remaining = dt == remaining ? 0.0 : remaining - dt;
  }
  return res;
}

SplitResult split_advance(const std::vector<SplitOperator>& ops, State state, double outer_dt,
                          int outer_step) {
  SplitResult out;
  out.reports.reserve(ops.size());
  for (const auto& s : ops) {
    auto it = state.find(s.field);
    if (it == state.end()) {
      throw ContractViolation("operator '" + s.name + "' acts on unknown field '" + s.field + "'");
    }
    DiffusionOperator op = s.op;
    if (op.is_aligned()) op.freeze(it->second);
    CycleResult r = cycle_operator(op, s.scheme, it->second, outer_dt, s.ptl, outer_step);
    it->second = std::move(r.u);
    out.reports.push_back(std::move(r.report));
  }
  out.state = std::move(state);
  return out;
}

}  // namespace paracycle

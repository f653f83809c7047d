#include "paracycle/operators.hpp"

#include <cmath>
#include <limits>

namespace paracycle {

namespace {

double face_average(double a, double b, FaceAveraging mode) {
  if (mode == FaceAveraging::arithmetic) return 0.5 * (a + b);
  const double s = a + b;
  return s > 0.0 ? 2.0 * a * b / s : 0.0;
}

void require_scalar_field(const Field& f, const Grid& grid, const char* name) {
  if (f.grid_ptr() == nullptr || f.num_points() != grid.num_points() || f.components() != 1) {
    throw ContractViolation(std::string(name) + " must be a one-component field on the operator grid");
  }
}

// Spacing between node i and i+dir along d; periodic faces use the wrap gap,
// open faces fall back to the adjacent spacing (their flux is zero anyway).
double face_spacing(const Grid& g, int d, Index i, int dir) {
  const Vector& h = g.spacings(d);
  const Index n = g.size(d);
  if (dir > 0) return i < n - 1 ? h[i] : g.wrap_spacing(d);
  return i > 0 ? h[i - 1] : g.wrap_spacing(d);
}

// Probe colouring along one dimension: nodes i-1, i, i+1 (wrapped on
// periodic dimensions) always get distinct colours.
int probe_color(Index i, Index n, bool periodic) {
  if (!periodic || n % 3 == 0) return static_cast<int>(i % 3);
  if (n % 3 == 1) return i == n - 1 ? 3 : static_cast<int>(i % 3);
  if (i == n - 2) return 3;
  if (i == n - 1) return 4;
  return static_cast<int>(i % 3);
}

int probe_color_count(Index n, bool periodic) {
  if (!periodic || n % 3 == 0) return 3;
  return n % 3 == 1 ? 4 : 5;
}

struct Coloring {
  std::array<int, 3> count{1, 1, 1};
  std::vector<int> color;  // flattened colour tuple per node
  int total = 1;
};

Coloring make_coloring(const Grid& g, const BoundaryCondition& bc) {
  Coloring col;
  for (int d = 0; d < g.dims(); ++d) col.count[d] = probe_color_count(g.size(d), bc.periodic(d));
  col.total = col.count[0] * col.count[1] * col.count[2];
  col.color.resize(g.num_points());
  for (Index p = 0; p < g.num_points(); ++p) {
    const MultiIndex ijk = g.multi_index(p);
    int c = 0;
    for (int d = g.dims() - 1; d >= 0; --d) {
      c = c * col.count[d] + probe_color(ijk[d], g.size(d), bc.periodic(d));
    }
    col.color[p] = c;
  }
  return col;
}

// Nodes within one step in every dimension (the widest stencil used here).
template <class Visit>
void for_each_stencil_node(const Grid& g, const BoundaryCondition& bc, Index p, Visit&& visit) {
  const MultiIndex ijk = g.multi_index(p);
  const int nd = g.dims();
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int d = 0; d < nd; ++d) {
    lo[d] = -1;
    hi[d] = 1;
  }
  for (int ok = lo[2]; ok <= hi[2]; ++ok) {
    for (int oj = lo[1]; oj <= hi[1]; ++oj) {
      for (int oi = lo[0]; oi <= hi[0]; ++oi) {
        const std::array<int, 3> off{oi, oj, ok};
        MultiIndex q = ijk;
        bool inside = true;
        for (int d = 0; d < nd && inside; ++d) {
          Index i = ijk[d] + off[d];
          const Index n = g.size(d);
          if (i < 0 || i >= n) {
            if (!bc.periodic(d)) {
              inside = false;
            } else {
              i = (i + n) % n;
            }
          }
          q[d] = i;
        }
        if (inside) visit(g.linear_index(q));
      }
    }
  }
}

}  // namespace

void ScalarDiffusionConfig::validate() const {
  if (!nu.grid_ptr()) throw ContractViolation("scalar diffusion: nu is not set");
  const Grid& g = nu.grid();
  require_scalar_field(nu, g, "nu");
  require_scalar_field(rho, g, "rho");
  bc.validate(g.dims());
  if (!nu.all_finite() || (nu.values().array() < 0.0).any()) {
    throw ContractViolation("scalar diffusion: nu must be finite and non-negative");
  }
  if (!rho.all_finite() || (rho.values().array() <= 0.0).any()) {
    throw ContractViolation("scalar diffusion: rho must be finite and positive");
  }
}

Profile make_profile(const std::string& name, const std::vector<double>& params) {
  Profile p;
  p.name = name;
  p.params = params;
  if (name == "one") {
    if (!params.empty()) throw ContractViolation("profile 'one' takes no parameters");
    p.fn = [](double) { return 1.0; };
  } else if (name == "tanh-cutoff") {
    if (params.size() != 2 || !(params[1] > 0.0)) {
      throw ContractViolation("profile 'tanh-cutoff' needs (r0, width > 0)");
    }
    const double r0 = params[0], width = params[1];
    p.fn = [r0, width](double r) { return 0.5 * (1.0 - std::tanh((r - r0) / width)); };
  } else if (name == "broaden") {
    if (params.size() != 2 || !(params[0] > 0.0) || params[1] < 0.0) {
      throw ContractViolation("profile 'broaden' needs (T_c > 0, exponent >= 0)");
    }
    const double tc = params[0], exponent = params[1];
    p.fn = [tc, exponent](double t) { return t >= tc ? 1.0 : std::pow(tc / t, exponent); };
  } else {
    throw ContractViolation("unknown profile '" + name + "'");
  }
  return p;
}

void AlignedConductionConfig::validate() const {
  if (!b_hat.grid_ptr()) throw ContractViolation("aligned conduction: b_hat is not set");
  const Grid& g = b_hat.grid();
  if (b_hat.components() != g.dims()) {
    throw ContractViolation("aligned conduction: b_hat needs one component per dimension");
  }
  require_scalar_field(rho, g, "rho");
  bc.validate(g.dims());
  for (Index p = 0; p < g.num_points(); ++p) {
    const double norm = b_hat.values().row(p).norm();
    if (!std::isfinite(norm) || (norm != 0.0 && std::abs(norm - 1.0) > 1e-12)) {
      throw ContractViolation("aligned conduction: b_hat must be unit length or zero");
    }
  }
  if (!rho.all_finite() || (rho.values().array() <= 0.0).any()) {
    throw ContractViolation("aligned conduction: rho must be finite and positive");
  }
  if (!(kappa0 >= 0.0) || !(gamma > 1.0) || !(m_p > 0.0) || !(k_B > 0.0) || !(t_floor > 0.0)) {
    throw ContractViolation("aligned conduction: invalid physical constants");
  }
}

Vector conduction_coefficient(const AlignedConductionConfig& cfg, const Field& T0) {
  const Grid& g = cfg.b_hat.grid();
  require_scalar_field(T0, g, "T0");
  Vector c(g.num_points());
  for (Index p = 0; p < g.num_points(); ++p) {
    const double t0 = T0(p);
    if (!(t0 > 0.0) || !std::isfinite(t0)) {
      throw DomainError("lagged temperature must be positive and finite (node " +
                        std::to_string(p) + ")");
    }
    const double t = std::max(t0, cfg.t_floor);
    const double fc = cfg.f_c(g.position(p).norm());
    const double fm = cfg.f_m(t);
    if (!(fc >= 0.0) || !(fm >= 0.0) || !std::isfinite(fc) || !std::isfinite(fm)) {
      throw DomainError("profile returned a negative or non-finite value");
    }
    c[p] = fc * fm * cfg.kappa0 * t * t * std::sqrt(t);
  }
  return c;
}

DiffusionOperator::DiffusionOperator(
    std::variant<ScalarDiffusionConfig, AlignedConductionConfig> cfg)
    : cfg_(std::move(cfg)) {
  const Field* rho = nullptr;
  if (auto* s = std::get_if<ScalarDiffusionConfig>(&cfg_)) {
    s->validate();
    grid_ = s->nu.grid_ptr();
    rho = &s->rho;
    coefficient_ = s->nu.values().col(0).cwiseProduct(s->rho.values().col(0));
  } else {
    auto& a = std::get<AlignedConductionConfig>(cfg_);
    a.validate();
    grid_ = a.b_hat.grid_ptr();
    rho = &a.rho;
  }
  weights_ = rho->values().col(0).cwiseProduct(dual_volumes(*grid_, bc()));
  dirichlet_ = dirichlet_mask(*grid_, bc());
}

DiffusionOperator DiffusionOperator::scalar(ScalarDiffusionConfig cfg) {
  return DiffusionOperator(std::move(cfg));
}

DiffusionOperator DiffusionOperator::aligned(AlignedConductionConfig cfg) {
  return DiffusionOperator(std::move(cfg));
}

const BoundaryCondition& DiffusionOperator::bc() const {
  return std::visit([](const auto& c) -> const BoundaryCondition& { return c.bc; }, cfg_);
}

void DiffusionOperator::freeze(const Field& T0) {
  if (!is_aligned()) return;
  coefficient_ = conduction_coefficient(std::get<AlignedConductionConfig>(cfg_), T0);
  frozen_ = T0;
  jacobian_.reset();
  diagonal_.reset();
}

Field DiffusionOperator::apply(const Field& u) const {
  if (u.num_points() != grid_->num_points()) {
    throw ContractViolation("operator applied to a field of the wrong size");
  }
  if (!is_frozen()) {
    DiffusionOperator lagged = *this;
    lagged.freeze(u);
    return lagged.apply(u);
  }
  Field out(u.grid_ptr(), u.components());
  for (int c = 0; c < u.components(); ++c) apply_component(u.component(c), out.component(c));
  return out;
}

void DiffusionOperator::apply_component(const Eigen::Ref<const Vector>& u,
                                        Eigen::Ref<Vector> out) const {
  const Grid& g = *grid_;
  const int nd = g.dims();
  const BoundaryCondition& b = bc();

  if (const auto* s = scalar_config()) {
    Field uf(grid_, Matrix(u));
    const HaloField uh = fill_ghost(uf, b);
    const HaloField kh = fill_ghost(Field(grid_, Matrix(coefficient_)), b);
    const Vector& rho = s->rho.values().col(0);
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < g.num_points(); ++p) {
      if (dirichlet_[p]) {
        out[p] = 0.0;
        continue;
      }
      const MultiIndex ijk = g.multi_index(p);
      const double uc = uh.at(ijk), kc = kh.at(ijk);
      double sum = 0.0;
      for (int d = 0; d < nd; ++d) {
        MultiIndex up = ijk, dn = ijk;
        up[d] += 1;
        dn[d] -= 1;
        const double flux_up = face_average(kc, kh.at(up), s->averaging) * (uh.at(up) - uc) /
                               face_spacing(g, d, ijk[d], +1);
        const double flux_dn = face_average(kh.at(dn), kc, s->averaging) * (uc - uh.at(dn)) /
                               face_spacing(g, d, ijk[d], -1);
        sum += (flux_up - flux_dn) / dual_width(g, b, d, ijk[d]);
      }
      out[p] = sum / rho[p];
    }
    return;
  }

  // Aligned conduction: cell-centred gradients from the 2^dims corners,
  // corner-averaged tensor, flux scattered back as the gradient of
  // E = 1/2 sum_cells A g^T D g.
  const auto& a = std::get<AlignedConductionConfig>(cfg_);
  const int corners = 1 << nd;
  const double edge_weight = 1.0 / static_cast<double>(1 << (nd - 1));
  std::array<Index, 3> cells{1, 1, 1};
  for (int d = 0; d < nd; ++d) cells[d] = b.periodic(d) ? g.size(d) : g.size(d) - 1;

  Vector dE = Vector::Zero(g.num_points());
  std::array<Index, 8> node{};
  for (Index ck = 0; ck < cells[2]; ++ck) {
    for (Index cj = 0; cj < cells[1]; ++cj) {
      for (Index ci = 0; ci < cells[0]; ++ci) {
        const MultiIndex cell{ci, cj, ck};
        std::array<double, 3> width{1.0, 1.0, 1.0};
        double area = 1.0;
        for (int d = 0; d < nd; ++d) {
          width[d] = face_spacing(g, d, cell[d], +1);
          area *= width[d];
        }
        Eigen::Vector3d grad = Eigen::Vector3d::Zero();
        Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();
        Eigen::Matrix3d direction = Eigen::Matrix3d::Zero();
        double harmonic_sum = 0.0;
        bool zero_coefficient = false;
        for (int m = 0; m < corners; ++m) {
          MultiIndex q = cell;
          for (int d = 0; d < nd; ++d) {
            if (m & (1 << d)) q[d] = (q[d] + 1) % g.size(d);
          }
          const Index n = g.linear_index(q);
          node[m] = n;
          for (int d = 0; d < nd; ++d) {
            grad[d] += ((m & (1 << d)) ? u[n] : -u[n]) * edge_weight / width[d];
          }
          Eigen::Vector3d bh = Eigen::Vector3d::Zero();
          bh.head(nd) = a.b_hat.values().row(n).transpose();
          const Eigen::Matrix3d bb = bh * bh.transpose();
          if (a.averaging == FaceAveraging::arithmetic) {
            tensor += coefficient_[n] * bb;
          } else {
            direction += bb;
            if (coefficient_[n] > 0.0) harmonic_sum += 1.0 / coefficient_[n];
            else zero_coefficient = true;
          }
        }
        if (a.averaging == FaceAveraging::arithmetic) {
          tensor /= corners;
        } else {
          const double c_h = zero_coefficient ? 0.0 : corners / harmonic_sum;
          tensor = c_h * direction / corners;
        }
        const Eigen::Vector3d flux = tensor * grad;
        for (int m = 0; m < corners; ++m) {
          double s = 0.0;
          for (int d = 0; d < nd; ++d) {
            s += ((m & (1 << d)) ? flux[d] : -flux[d]) * edge_weight / width[d];
          }
          dE[node[m]] += area * s;
        }
      }
    }
  }
  const double pref = a.prefactor();
  for (Index p = 0; p < g.num_points(); ++p) {
    out[p] = dirichlet_[p] ? 0.0 : -pref * dE[p] / weights_[p];
  }
}

const SparseRows& DiffusionOperator::jacobian() const {
  if (!is_frozen()) throw ContractViolation("jacobian of an aligned operator needs a frozen state");
  if (!jacobian_) jacobian_ = std::make_shared<SparseRows>(assemble_jacobian(*this));
  return *jacobian_;
}

const Vector& DiffusionOperator::jacobian_diagonal() const {
  if (!is_frozen()) throw ContractViolation("jacobian of an aligned operator needs a frozen state");
  if (!diagonal_) {
    const Grid& g = *grid_;
    const Coloring col = make_coloring(g, bc());
    auto diag = std::make_shared<Vector>(g.num_points());
    Vector probe(g.num_points()), y(g.num_points());
    for (int c = 0; c < col.total; ++c) {
      for (Index p = 0; p < g.num_points(); ++p) probe[p] = col.color[p] == c ? 1.0 : 0.0;
      apply_component(probe, y);
      for (Index p = 0; p < g.num_points(); ++p) {
        if (col.color[p] == c) (*diag)[p] = y[p];
      }
    }
    diagonal_ = std::move(diag);
  }
  return *diagonal_;
}

SparseRows assemble_jacobian(const DiffusionOperator& op) {
  const Grid& g = op.grid();
  const Index n = g.num_points();
  const Coloring col = make_coloring(g, op.bc());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * (g.dims() == 1 ? 3 : g.dims() == 2 ? 9 : 27));
  Field probe(op.grid_ptr(), 1);
  for (int c = 0; c < col.total; ++c) {
    bool any = false;
    for (Index p = 0; p < n; ++p) {
      probe(p) = col.color[p] == c ? 1.0 : 0.0;
      any = any || col.color[p] == c;
    }
    if (!any) continue;
    const Field y = op.apply(probe);
    for (Index p = 0; p < n; ++p) {
      for_each_stencil_node(g, op.bc(), p, [&](Index q) {
        if (col.color[q] != c) return;
        if (y(p) != 0.0 || q == p) entries.emplace_back(p, q, y(p));
      });
    }
  }
  SparseRows J(n, n);
  J.setFromTriplets(entries.begin(), entries.end());
  J.makeCompressed();
  return J;
}

Field apply_scalar_diffusion(const Field& u, const ScalarDiffusionConfig& cfg) {
  return DiffusionOperator::scalar(cfg).apply(u);
}

Field apply_aligned_conduction(const Field& T, const AlignedConductionConfig& cfg, const Field& T0) {
  auto op = DiffusionOperator::aligned(cfg);
  op.freeze(T0);
  return op.apply(T);
}

double estimate_euler_dt(const DiffusionOperator& op, const Field& probe) {
  const DiffusionOperator* target = &op;
  std::optional<DiffusionOperator> lagged;
  if (!op.is_frozen()) {
    lagged = op;
    lagged->freeze(probe);
    target = &*lagged;
  }
  const SparseRows& J = target->jacobian();
  double bound = 0.0;
  for (Index r = 0; r < J.outerSize(); ++r) {
    double row = 0.0;
    for (SparseRows::InnerIterator it(J, r); it; ++it) row += std::abs(it.value());
    bound = std::max(bound, row);
  }
  if (bound == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 / bound;
}

}  // namespace paracycle

#pragma once

// Independent oracles and fixtures shared by unit and acceptance tests.
// Nothing here reuses the library's assembly or probing code paths.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "paracycle/mesh.hpp"
#include "paracycle/operators.hpp"

namespace paracycle::testing {

inline GridPtr uniform_grid(std::vector<Index> counts, double lo = 0.0, double hi = 1.0) {
  GridSpec spec;
  spec.counts = counts;
  for (std::size_t d = 0; d < counts.size(); ++d) spec.extents.push_back({lo, hi});
  return build_grid(spec);
}

/// n nodes per dimension with spacing h, first node at 0.
inline GridPtr spaced_grid(std::vector<Index> counts, double h) {
  GridSpec spec;
  spec.counts = counts;
  for (Index n : counts) spec.extents.push_back({0.0, h * static_cast<double>(n - 1)});
  return build_grid(spec);
}

inline Field constant_field(const GridPtr& g, double v, int components = 1) {
  Field f(g, components);
  f.values().setConstant(v);
  return f;
}

inline Field random_field(const GridPtr& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                          int components = 1) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Field f(g, components);
  for (Index i = 0; i < f.values().size(); ++i) f.values().data()[i] = dist(rng);
  return f;
}

inline DiffusionOperator scalar_operator(const GridPtr& g, BoundaryCondition bc, double nu = 1.0,
                                         double rho = 1.0) {
  return DiffusionOperator::scalar(
      {constant_field(g, nu), constant_field(g, rho), std::move(bc), FaceAveraging::arithmetic});
}

/// Dense Jacobian column by column from F(e_j), one basis vector at a time.
inline Eigen::MatrixXd dense_jacobian(const DiffusionOperator& op) {
  const GridPtr& g = op.grid_ptr();
  const Index n = g->num_points();
  Eigen::MatrixXd J(n, n);
  Field e(g);
  for (Index j = 0; j < n; ++j) {
    e.values().setZero();
    e(j) = 1.0;
    J.col(j) = op.apply(e).values().col(0);
  }
  return J;
}

/// Largest |eigenvalue| of a matrix similar to a symmetric one, via power
/// iteration on the symmetrised form W^{1/2} J W^{-1/2}.
inline double spectral_radius(const Eigen::MatrixXd& J, const Eigen::VectorXd& w, int iters = 20000) {
  const Eigen::VectorXd s = w.cwiseSqrt();
  const Eigen::MatrixXd S = s.asDiagonal() * J * s.cwiseInverse().asDiagonal();
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(J.rows(), 1.0, 2.0);
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd y = S * x;
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    const double next = x.dot(y) / x.squaredNorm();
    x = y / nrm;
    if (k > 50 && std::abs(next - lambda) <= 1e-13 * std::abs(next)) return std::abs(next);
    lambda = next;
  }
  return std::abs(lambda);
}

/// Every grid pair (no F-max shortcut), plain loops over multi-indices.
inline std::optional<double> brute_force_ptl(const Field& u, const Field& F, const BoundaryCondition& bc,
                                             std::optional<Index> only_point, double eps_rel = 1e-12) {
  const Grid& g = u.grid();
  const double fmax = F.values().cwiseAbs().maxCoeff();
  if (fmax == 0.0) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (Index p = 0; p < g.num_points(); ++p) {
    if (only_point && *only_point != p) continue;
    const MultiIndex a = g.multi_index(p);
    for (int d = 0; d < g.dims(); ++d) {
      for (int dir = -1; dir <= 1; dir += 2) {
        MultiIndex b = a;
        Index i = a[d] + dir;
        if (i < 0 || i >= g.size(d)) {
          if (!bc.periodic(d)) continue;
          i = (i + g.size(d)) % g.size(d);
        }
        b[d] = i;
        const Index q = g.linear_index(b);
        for (int c = 0; c < u.components(); ++c) {
          const double du = u(q, c) - u(p, c);
          const double dF = F(q, c) - F(p, c);
          if (du != 0.0 && std::abs(dF) > eps_rel * fmax && du * dF < 0.0) best = std::min(best, -du / dF);
        }
      }
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

/// Sign changes of adjacent differences along every grid line in every
/// dimension. Differences with |d| <= rel * max|d| count as zero and are
/// skipped.
inline long sign_changes(const Field& u, double rel = 1e-10) {
  const Grid& g = u.grid();
  double dmax = 0.0;
  for (int d = 0; d < g.dims(); ++d) {
    for (Index p = 0; p < g.num_points(); ++p) {
      MultiIndex m = g.multi_index(p);
      if (m[d] + 1 >= g.size(d)) continue;
      ++m[d];
      dmax = std::max(dmax, std::abs(u(g.linear_index(m)) - u(p)));
    }
  }
  const double thr = rel * dmax;
  long count = 0;
  for (int d = 0; d < g.dims(); ++d) {
    for (Index p = 0; p < g.num_points(); ++p) {
      const MultiIndex start = g.multi_index(p);
      if (start[d] != 0) continue;
      int last = 0;
      for (Index i = 0; i + 1 < g.size(d); ++i) {
        MultiIndex a = start, b = start;
        a[d] = i;
        b[d] = i + 1;
        const double diff = u(g.linear_index(b)) - u(g.linear_index(a));
        if (std::abs(diff) <= thr) continue;
        const int s = diff > 0.0 ? 1 : -1;
        if (last != 0 && s != last) ++count;
        last = s;
      }
    }
  }
  return count;
}

}  // namespace paracycle::testing

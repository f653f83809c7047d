#pragma once

// Matrix-free right-hand sides F(u) for the two parabolic operator families:
//
//   scalar diffusion       F(v) = (1/rho) div(nu rho grad v)
//   aligned conduction     F(T) = C/rho div(f_c f_m(T0) kappa0 T0^{5/2} b b.grad T),
//                          C = (gamma - 1) m_p / (2 k_B)
//
// Both are conservative: rho*V*F is the negative gradient of a quadratic
// form, so the rho*V weighted operator is symmetric negative semi-definite.

#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paracycle/mesh.hpp"

namespace paracycle {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class FaceAveraging { arithmetic, harmonic };

struct ScalarDiffusionConfig {
  Field nu;   ///< diffusivity, >= 0
  Field rho;  ///< density weight, > 0
  BoundaryCondition bc;
  FaceAveraging averaging = FaceAveraging::arithmetic;

  void validate() const;
};

/// A named non-negative profile. Presets:
///   one                      f(x) = 1
///   tanh-cutoff(r0, width)   f(r) = (1 - tanh((r - r0)/width)) / 2
///   broaden(T_c, exponent)   f(T) = max(1, (T_c/T)^exponent)
struct Profile {
  std::string name = "one";
  std::vector<double> params;
  std::function<double(double)> fn = [](double) { return 1.0; };

  double operator()(double x) const { return fn(x); }
};

Profile make_profile(const std::string& name, const std::vector<double>& params = {});

struct AlignedConductionConfig {
  Field b_hat;  ///< unit direction per node (dims components), or zero
  double kappa0 = 1.0;
  double gamma = 5.0 / 3.0;
  double m_p = 1.0;
  double k_B = 1.0;
  Profile f_c;  ///< of the node's distance from the origin
  Profile f_m;  ///< of the lagged temperature
  Field rho;
  BoundaryCondition bc;
  double t_floor = 1e-10;
  FaceAveraging averaging = FaceAveraging::arithmetic;

  double prefactor() const { return (gamma - 1.0) * m_p / (2.0 * k_B); }
  void validate() const;
};

Field apply_scalar_diffusion(const Field& u, const ScalarDiffusionConfig& cfg);

/// Linear in T for fixed T0. Throws DomainError when T0 has a non-positive
/// entry; positive values below cfg.t_floor are clamped to it.
Field apply_aligned_conduction(const Field& T, const AlignedConductionConfig& cfg, const Field& T0);

/// Nodal conduction coefficient f_c f_m(T0) kappa0 max(T0, floor)^{5/2}.
Vector conduction_coefficient(const AlignedConductionConfig& cfg, const Field& T0);

/// One split operator. Aligned conduction is linear only once a lagged
/// state has been frozen; until then it lags on its own argument.
class DiffusionOperator {
 public:
  static DiffusionOperator scalar(ScalarDiffusionConfig cfg);
  static DiffusionOperator aligned(AlignedConductionConfig cfg);

  bool is_aligned() const { return std::holds_alternative<AlignedConductionConfig>(cfg_); }
  bool is_frozen() const { return !is_aligned() || frozen_.has_value(); }

  /// Sets the lagged state T0 and invalidates cached matrices.
  void freeze(const Field& T0);
  const std::optional<Field>& frozen_state() const { return frozen_; }

  Field apply(const Field& u) const;

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  const BoundaryCondition& bc() const;
  /// rho * V, the inner-product weights in which the operator is symmetric.
  const Vector& weights() const { return weights_; }
  const std::vector<char>& dirichlet_nodes() const { return dirichlet_; }

  const ScalarDiffusionConfig* scalar_config() const { return std::get_if<ScalarDiffusionConfig>(&cfg_); }
  const AlignedConductionConfig* aligned_config() const { return std::get_if<AlignedConductionConfig>(&cfg_); }

  /// Assembled Jacobian of F (one component), built once per frozen state.
  const SparseRows& jacobian() const;
  /// Diagonal of the Jacobian by coloured probing, without assembling rows.
  const Vector& jacobian_diagonal() const;

 private:
  explicit DiffusionOperator(std::variant<ScalarDiffusionConfig, AlignedConductionConfig> cfg);
  void apply_component(const Eigen::Ref<const Vector>& u, Eigen::Ref<Vector> out) const;

  std::variant<ScalarDiffusionConfig, AlignedConductionConfig> cfg_;
  GridPtr grid_;
  Vector weights_;
  std::vector<char> dirichlet_;
  std::optional<Field> frozen_;
  Vector coefficient_;  // scalar: nu*rho per node; aligned: conduction coefficient
  mutable std::shared_ptr<SparseRows> jacobian_;
  mutable std::shared_ptr<Vector> diagonal_;
};

/// Assembles the Jacobian by applying F to 3^dims (at most 5^dims on short
/// periodic dimensions) coloured probe fields.
SparseRows assemble_jacobian(const DiffusionOperator& op);

/// Explicit Euler limit 2 / (max Gershgorin row sum of the Jacobian).
/// Returns +infinity when the operator is identically zero. An unfrozen
/// aligned operator is frozen on `probe` for the estimate.
double estimate_euler_dt(const DiffusionOperator& op, const Field& probe);

}  // namespace paracycle

#pragma once

// Structured tensor-product grids, the fields that live on them and the
// boundary descriptors used by every stencil in the library.
//
// Grids are node centred: the first and last node of every dimension sit on
// the domain boundary. The dual cell of a node spans half of each adjacent
// spacing, so boundary nodes own a half cell (non-periodic) and periodic
// dimensions wrap with a gap equal to the last spacing.

#include <Eigen/Core>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paracycle/error.hpp"

namespace paracycle {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MultiIndex = std::array<Index, 3>;

class Grid {
 public:
  /// One strictly increasing coordinate array per dimension, 1 to 3 of them.
  explicit Grid(std::vector<Vector> coords);

  int dims() const { return static_cast<int>(coords_.size()); }
  Index size(int d) const { return d < dims() ? coords_[d].size() : 1; }
  Index num_points() const { return num_points_; }
  Index stride(int d) const { return strides_[d]; }

  const Vector& coords(int d) const { return coords_[d]; }
  /// n_d - 1 spacings x[i+1] - x[i].
  const Vector& spacings(int d) const { return spacings_[d]; }
  /// Gap between the last and first node when dimension d is periodic.
  double wrap_spacing(int d) const { return spacings_[d][spacings_[d].size() - 1]; }

  Index linear_index(const MultiIndex& ijk) const {
    return ijk[0] + strides_[1] * ijk[1] + strides_[2] * ijk[2];
  }
  MultiIndex multi_index(Index p) const;
  Eigen::Vector3d position(Index p) const;

 private:
  std::vector<Vector> coords_;
  std::vector<Vector> spacings_;
  std::array<Index, 3> strides_{1, 1, 1};
  Index num_points_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

struct GridSpec {
  std::vector<Index> counts;
  /// [lo, hi] per dimension; used when `coords` is empty.
  std::vector<std::array<double, 2>> extents;
  /// Explicit coordinates per dimension; overrides `extents`.
  std::vector<Vector> coords;
};

/// Throws InvalidGrid on counts < 3, non-monotone coordinates or mismatched
/// dimension counts.
GridPtr build_grid(const GridSpec& spec);

enum class BcKind { dirichlet, neumann, periodic };

struct FaceBc {
  BcKind kind = BcKind::neumann;
  double value = 0.0;

  static FaceBc dirichlet(double v) { return {BcKind::dirichlet, v}; }
  static FaceBc neumann() { return {BcKind::neumann, 0.0}; }
  static FaceBc periodic() { return {BcKind::periodic, 0.0}; }
};

/// Per-face boundary kinds. Defaults to zero-flux on every face.
class BoundaryCondition {
 public:
  BoundaryCondition() = default;
  static BoundaryCondition uniform(FaceBc face);

  BoundaryCondition& set(int dim, int side, FaceBc face);
  BoundaryCondition& set(int dim, FaceBc face) { return set(dim, 0, face).set(dim, 1, face); }

  const FaceBc& face(int dim, int side) const { return faces_[dim][side]; }
  bool periodic(int dim) const { return faces_[dim][0].kind == BcKind::periodic; }

  /// Throws InvalidBoundary when periodic is given on only one face.
  void validate(int dims) const;

 private:
  std::array<std::array<FaceBc, 2>, 3> faces_{};
};

/// Node values on a grid, one column per component.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid, int components = 1);
  Field(GridPtr grid, Matrix values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int components() const { return static_cast<int>(values_.cols()); }
  Index num_points() const { return values_.rows(); }

  Matrix& values() { return values_; }
  const Matrix& values() const { return values_; }
  auto component(int c) { return values_.col(c); }
  auto component(int c) const { return values_.col(c); }

  double& operator()(Index p, int c = 0) { return values_(p, c); }
  double operator()(Index p, int c = 0) const { return values_(p, c); }

  bool all_finite() const { return values_.allFinite(); }
  bool same_shape(const Field& other) const;

 private:
  GridPtr grid_;
  Matrix values_;
};

/// Field padded with one ghost layer in every active dimension.
class HaloField {
 public:
  HaloField(const Field& interior);

  const Grid& grid() const { return *grid_; }
  int components() const { return static_cast<int>(values_.cols()); }
  Index padded_size(int d) const { return padded_[d]; }

  /// Indices run from -1 to n_d in each active dimension.
  double& at(Index i, Index j, Index k, int c = 0) { return values_(offset(i, j, k), c); }
  double at(Index i, Index j, Index k, int c = 0) const { return values_(offset(i, j, k), c); }
  double at(const MultiIndex& ijk, int c = 0) const { return at(ijk[0], ijk[1], ijk[2], c); }

  Index offset(Index i, Index j, Index k) const {
    const int nd = grid_->dims();
    return (i + 1) + padded_[0] * ((nd > 1 ? j + 1 : j) + padded_[1] * (nd > 2 ? k + 1 : k));
  }

  Matrix& raw() { return values_; }
  const Matrix& raw() const { return values_; }

 private:
  GridPtr grid_;
  std::array<Index, 3> padded_{1, 1, 1};
  Matrix values_;
};

/// Copies the interior and populates the ghost layer. Dirichlet ghosts hold
/// the face value, zero-flux ghosts repeat the boundary node, periodic wraps.
HaloField fill_ghost(const Field& field, const BoundaryCondition& bc);

/// Recomputes the ghost layer of an existing halo from its interior values.
void fill_ghost(HaloField& halo, const BoundaryCondition& bc);

/// Dual-cell width of node i along dimension d.
double dual_width(const Grid& grid, const BoundaryCondition& bc, int d, Index i);

/// Dual-cell volume of every node.
Vector dual_volumes(const Grid& grid, const BoundaryCondition& bc);

/// 1 for nodes on a Dirichlet face, 0 elsewhere.
std::vector<char> dirichlet_mask(const Grid& grid, const BoundaryCondition& bc);

/// Neighbour of p one step along dimension d (dir = +1/-1); wraps across
/// periodic faces and is empty outside the domain.
std::optional<Index> neighbor(const Grid& grid, const BoundaryCondition& bc, Index p, int d,
                              int dir);

/// Overwrites boundary nodes on Dirichlet faces with the face value. A node
/// shared by several Dirichlet faces takes the value of the lowest dimension.
void impose_dirichlet(Field& field, const BoundaryCondition& bc);

/// Flat CSV (`dim0,dim1,dim2,component,value`) plus a coordinate sidecar
/// (`dim,index,coord`). Values use shortest round-trip formatting.
void write_field_csv(const Field& field, const std::string& path, const std::string& coords_path);
Field read_field_csv(const std::string& path, const std::string& coords_path);

}  // namespace paracycle

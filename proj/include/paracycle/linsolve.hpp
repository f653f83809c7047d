#pragma once

// Preconditioned conjugate gradients in a weighted inner product
// <x, y>_w = sum_i w_i x_i y_i, with point-Jacobi and zero-fill ILU
// preconditioners.

#include <Eigen/SparseCore>

#include <functional>
#include <optional>
#include <vector>

#include "paracycle/mesh.hpp"
#include "paracycle/operators.hpp"

namespace paracycle {

/// y = A x for an operator that is symmetric positive definite in the
/// weighted inner product given by `weights` (all ones when empty).
struct LinearOperatorAction {
  Index size = 0;
  std::function<void(const Vector&, Vector&)> apply;
  Vector weights;
  /// Analytic diagonal, when the caller has one; otherwise build_jacobi
  /// probes basis vectors.
  std::optional<Vector> diagonal;

  static LinearOperatorAction from_matrix(SparseRows A, Vector weights = {});

  Vector operator()(const Vector& x) const {
    Vector y(size);
    apply(x, y);
    return y;
  }
  Vector effective_weights() const { return weights.size() ? weights : Vector::Ones(size); }
};

enum class PreconditionerKind { none, jacobi, ilu0 };

class Preconditioner {
 public:
  static Preconditioner identity(Index size);

  PreconditionerKind kind() const { return kind_; }
  /// z = P^{-1} r.
  void apply(const Vector& r, Vector& z) const;
  Vector operator()(const Vector& r) const {
    Vector z(r.size());
    apply(r, z);
    return z;
  }

  const Vector& inverse_diagonal() const { return inv_diag_; }
  /// ILU0 factors packed in one matrix: strict lower part is L (unit
  /// diagonal implied), upper part including the diagonal is U.
  const SparseRows& factors() const { return lu_; }

 private:
  friend Preconditioner build_jacobi(const LinearOperatorAction& A);
  friend Preconditioner build_ilu0(const SparseRows& A, const Vector& weights);

  PreconditionerKind kind_ = PreconditionerKind::none;
  Vector inv_diag_;
  SparseRows lu_;
  std::vector<Index> diag_pos_;
  Vector weights_;
};

/// Throws IndefiniteOperator when a diagonal entry is not positive.
Preconditioner build_jacobi(const LinearOperatorAction& A);

/// Incomplete LU with the sparsity of A (natural row order, no fill). The
/// factorisation is of diag(weights) * A so the preconditioner stays
/// self-adjoint in the weighted inner product. Throws ZeroPivot.
Preconditioner build_ilu0(const SparseRows& A, const Vector& weights = {});

struct SolveStats {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  /// Relative weighted residual norm after each iteration, starting with the
  /// initial guess.
  std::vector<double> residual_history;
};

struct SolveResult {
  Vector x;
  SolveStats stats;
};

/// Stops when ||b - A x||_w <= tol ||b||_w or after max_iter iterations
/// (converged = false). Throws IndefiniteOperator on p^T A p <= 0 and
/// SolverDivergence on a non-finite residual.
SolveResult pcg_solve(const LinearOperatorAction& A, const Vector& b, const Preconditioner& M,
                      const Vector& x0, double tol, int max_iter);

}  // namespace paracycle

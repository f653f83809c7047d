#include "paracycle/linsolve.hpp"

#include <cmath>
#include <string>

namespace paracycle {

LinearOperatorAction LinearOperatorAction::from_matrix(SparseRows A, Vector weights) {
  LinearOperatorAction op;
  op.size = A.rows();
  op.diagonal = A.diagonal();
  op.weights = std::move(weights);
  op.apply = [A = std::move(A)](const Vector& x, Vector& y) { y.noalias() = A * x; };
  return op;
}

Preconditioner Preconditioner::identity(Index size) {
  Preconditioner p;
  p.kind_ = PreconditionerKind::none;
  p.inv_diag_ = Vector::Ones(size);
  return p;
}

void Preconditioner::apply(const Vector& r, Vector& z) const {
  switch (kind_) {
    case PreconditionerKind::none:
      z = r;
      return;
    case PreconditionerKind::jacobi:
      z = r.cwiseProduct(inv_diag_);
      return;
    case PreconditionerKind::ilu0:
      break;
  }
  const Index n = lu_.rows();
  z = weights_.size() ? Vector(r.cwiseProduct(weights_)) : r;
  const double* val = lu_.valuePtr();
  const auto* col = lu_.innerIndexPtr();
  const auto* start = lu_.outerIndexPtr();
  for (Index i = 0; i < n; ++i) {
    double s = z[i];
    for (Index k = start[i]; k < diag_pos_[i]; ++k) s -= val[k] * z[col[k]];
    z[i] = s;
  }
  for (Index i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (Index k = diag_pos_[i] + 1; k < start[i + 1]; ++k) s -= val[k] * z[col[k]];
    z[i] = s / val[diag_pos_[i]];
  }
}

Preconditioner build_jacobi(const LinearOperatorAction& A) {
  Vector diag;
  if (A.diagonal) {
    diag = *A.diagonal;
  } else {
    diag.resize(A.size);
    Vector e = Vector::Zero(A.size), y(A.size);
    for (Index i = 0; i < A.size; ++i) {
      e[i] = 1.0;
      A.apply(e, y);
      diag[i] = y[i];
      e[i] = 0.0;
    }
  }
  for (Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) {
      throw IndefiniteOperator("point-Jacobi: diagonal entry " + std::to_string(i) +
                               " is not positive");
    }
  }
  Preconditioner p;
  p.kind_ = PreconditionerKind::jacobi;
  p.inv_diag_ = diag.cwiseInverse();
  return p;
}

Preconditioner build_ilu0(const SparseRows& A, const Vector& weights) {
  if (A.rows() != A.cols()) throw ContractViolation("ILU0 needs a square matrix");
  const Index n = A.rows();
  Preconditioner p;
  p.kind_ = PreconditionerKind::ilu0;
  p.weights_ = weights;
  p.lu_ = weights.size() ? SparseRows(weights.asDiagonal() * A) : A;
  p.lu_.makeCompressed();
  SparseRows& lu = p.lu_;
  double* val = lu.valuePtr();
  const auto* col = lu.innerIndexPtr();
  const auto* start = lu.outerIndexPtr();

  p.diag_pos_.assign(n, -1);
  for (Index i = 0; i < n; ++i) {
    for (Index k = start[i]; k < start[i + 1]; ++k) {
      if (col[k] == i) p.diag_pos_[i] = k;
    }
    if (p.diag_pos_[i] < 0) throw ZeroPivot(i, "ILU0: row " + std::to_string(i) + " has no diagonal entry");
  }

  std::vector<Index> where(n, -1);
  for (Index i = 0; i < n; ++i) {
    for (Index k = start[i]; k < start[i + 1]; ++k) where[col[k]] = k;
    for (Index k = start[i]; k < p.diag_pos_[i]; ++k) {
      const Index row_k = col[k];
      const double pivot = val[p.diag_pos_[row_k]];
      val[k] /= pivot;
      for (Index m = p.diag_pos_[row_k] + 1; m < start[row_k + 1]; ++m) {
        const Index w = where[col[m]];
        if (w >= 0) val[w] -= val[k] * val[m];
      }
    }
    for (Index k = start[i]; k < start[i + 1]; ++k) where[col[k]] = -1;
    const double d = val[p.diag_pos_[i]];
    if (d == 0.0 || !std::isfinite(d)) {
      throw ZeroPivot(i, "ILU0: zero pivot in row " + std::to_string(i));
    }
  }
  return p;
}

namespace {

double wdot(const Vector& w, const Vector& x, const Vector& y) {
  return (w.array() * x.array() * y.array()).sum();
}

}  // namespace

SolveResult pcg_solve(const LinearOperatorAction& A, const Vector& b, const Preconditioner& M,
                      const Vector& x0, double tol, int max_iter) {
  if (!(tol > 0.0 && tol < 1.0)) throw ContractViolation("pcg: tol must lie in (0, 1)");
  if (max_iter < 1) throw ContractViolation("pcg: max_iter must be at least 1");
  if (b.size() != A.size || x0.size() != A.size) throw ContractViolation("pcg: size mismatch");

  const Vector w = A.effective_weights();
  SolveResult out;
  SolveStats& st = out.stats;
  const double b_norm = std::sqrt(wdot(w, b, b));
  if (b_norm == 0.0) {
    out.x = Vector::Zero(A.size);
    st.converged = true;
    st.residual_history.push_back(0.0);
    return out;
  }

  Vector& x = out.x;
  x = x0;
  Vector r(A.size), z(A.size), p(A.size), Ap(A.size);
  A.apply(x, Ap);
  r = b - Ap;
  double rel = std::sqrt(wdot(w, r, r)) / b_norm;
  st.residual_history.push_back(rel);
  if (!std::isfinite(rel)) throw SolverDivergence("pcg: non-finite initial residual");
  if (rel <= tol) {
    st.final_relative_residual = rel;
    st.converged = true;
    return out;
  }

  M.apply(r, z);
  p = z;
  double rz = wdot(w, r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A.apply(p, Ap);
    const double pAp = wdot(w, p, Ap);
    if (!std::isfinite(pAp)) throw SolverDivergence("pcg: non-finite curvature");
    if (pAp <= 0.0) throw IndefiniteOperator("pcg: p^T A p <= 0 at iteration " + std::to_string(it));
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    rel = std::sqrt(wdot(w, r, r)) / b_norm;
    st.iterations = it;
    st.residual_history.push_back(rel);
    if (!std::isfinite(rel)) throw SolverDivergence("pcg: residual became non-finite");
    if (rel <= tol) {
      st.converged = true;
      break;
    }
    M.apply(r, z);
    const double rz_next = wdot(w, r, z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  st.final_relative_residual = rel;
  return out;
}

}  // namespace paracycle

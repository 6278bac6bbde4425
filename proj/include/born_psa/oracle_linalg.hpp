#pragma once

// Ground-truth linear algebra used to judge the learners: sample covariance,
// a cyclic Jacobi eigensolver, subspace comparison and a central-difference
// gradient. Nothing in here is used by the learning rules themselves.

#include "born_psa/born_core.hpp"
#include "born_psa/types.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace born_psa {

/// C = (1/M) sum x x^T. Samples are taken as zero-mean unless center is set.
template <typename Scalar>
Matrix<Scalar> sample_covariance(const SampleBatch<Scalar>& samples, bool center = false) {
  if (samples.empty()) throw DomainError("sample_covariance: empty batch");
  const Index K = samples.front().dim();
  const Index M = static_cast<Index>(samples.size());
  Matrix<Scalar> X(K, M);
  for (Index i = 0; i < M; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.dim() != K) throw PreconditionError("sample_covariance: mixed dimensions");
    X.col(i) = s.values();
  }
  if (center) X.colwise() -= X.rowwise().mean();
  Matrix<Scalar> C(K, K);
  C.setZero();
  C.template selfadjointView<Eigen::Lower>().rankUpdate(X, Scalar(1) / Scalar(M));
  C.template triangularView<Eigen::StrictlyUpper>() = C.transpose();
  return C;
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, column i of
/// eigenvectors paired with eigenvalue i.
template <typename Scalar>
struct EigenDecomposition {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  int sweeps = 0;

  /// First n eigenvectors (the dominant n-dimensional subspace).
  Matrix<Scalar> top(Index n) const { return eigenvectors.leftCols(n); }
};

namespace detail {

// Applies the rotation zeroing a(p,q) to the symmetric matrix and to V.
template <typename Scalar>
void jacobi_rotate(Matrix<Scalar>& a, Matrix<Scalar>& v, Index p, Index q) {
  const Scalar apq = a(p, q);
  const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
  Scalar t = Scalar(1) / (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
  if (theta < Scalar(0)) t = -t;
  const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
  const Scalar s = t * c;
  const Index K = a.rows();

  // Columns p and q are contiguous in column-major storage; rows are mirrored.
  Scalar* cp = a.col(p).data();
  Scalar* cq = a.col(q).data();
  for (Index k = 0; k < K; ++k) {
    if (k == p || k == q) continue;
    const Scalar akp = cp[k];
    const Scalar akq = cq[k];
    cp[k] = c * akp - s * akq;
    cq[k] = s * akp + c * akq;
  }
  for (Index k = 0; k < K; ++k) {
    if (k == p || k == q) continue;
    a(p, k) = cp[k];
    a(q, k) = cq[k];
  }
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = Scalar(0);
  a(q, p) = Scalar(0);

  Scalar* vp = v.col(p).data();
  Scalar* vq = v.col(q).data();
  for (Index k = 0; k < K; ++k) {
    const Scalar vkp = vp[k];
    const Scalar vkq = vq[k];
    vp[k] = c * vkp - s * vkq;
    vq[k] = s * vkp + c * vkq;
  }
}

template <typename Scalar>
Scalar max_off_diagonal(const Matrix<Scalar>& a) {
  Scalar m = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all (p, q) pairs until the largest off-diagonal magnitude drops
/// below tol * ||C||_F. Deterministic for a given input. Eigenvectors are
/// sign-normalized so that their largest-magnitude entry is positive.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& C,
                                                     typename Derived::Scalar tol = 1e-14) {
  using Scalar = typename Derived::Scalar;
  constexpr int kMaxSweeps = 100;
  if (C.rows() != C.cols()) throw PreconditionError("eig_sym: matrix must be square");
  const Index K = C.rows();
  if (K > 2048) throw PreconditionError("eig_sym: dimension above 2048");
  const Scalar scale = std::max(Scalar(1), C.cwiseAbs().maxCoeff());
  if ((C - C.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * scale) {
    throw PreconditionError("eig_sym: matrix must be symmetric");
  }

  Matrix<Scalar> a = Scalar(0.5) * (C + C.transpose());
  Matrix<Scalar> v = Matrix<Scalar>::Identity(K, K);
  const Scalar threshold = tol * a.norm();

  int sweep = 0;
  while (detail::max_off_diagonal(a) >= threshold && threshold > Scalar(0)) {
    if (++sweep > kMaxSweeps) throw ConvergenceError("eig_sym: no convergence within 100 sweeps");
    for (Index q = 1; q < K; ++q) {
      for (Index p = 0; p < q; ++p) {
        const Scalar apq = std::abs(a(p, q));
        if (apq == Scalar(0)) continue;
        // Entries negligible against both diagonal terms are dropped outright.
        const Scalar g = Scalar(100) * apq;
        if (sweep > 4 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = Scalar(0);
          continue;
        }
        detail::jacobi_rotate(a, v, p, q);
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition<Scalar> out;
  out.eigenvalues.resize(K);
  out.eigenvectors.resize(K, K);
  out.sweeps = sweep;
  for (Index i = 0; i < K; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    out.eigenvalues[i] = a(src, src);
    Vector<Scalar> col = v.col(src);
    Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col[imax] < Scalar(0)) col = -col;
    out.eigenvectors.col(i) = col;
  }
  return out;
}

/// Elementwise log|I - W^T W| (the per-entry orthonormality defect).
template <typename Derived>
Matrix<typename Derived::Scalar> orthonormality_error_matrix(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  const Index N = W.cols();
  Matrix<Scalar> d = (Matrix<Scalar>::Identity(N, N) - W.transpose() * W).cwiseAbs();
  return (d.array() + Scalar(1e-300)).log().matrix();
}

/// max |I - W^T W| entry.
template <typename Derived>
typename Derived::Scalar orthonormality_defect(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  const Index N = W.cols();
  return (Matrix<Scalar>::Identity(N, N) - W.transpose() * W).cwiseAbs().maxCoeff();
}

/// Scalar orthonormality error log(max |I - W^T W| + 1e-300).
template <typename Derived>
typename Derived::Scalar orthonormality_error(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  return std::log(orthonormality_defect(W) + Scalar(1e-300));
}

/// Orthonormal basis of span(W); throws DomainError("degenerate subspace") when
/// W is numerically rank deficient.
template <typename Derived>
Matrix<typename Derived::Scalar> orthonormal_basis(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(W);
  qr.setThreshold(Scalar(1e-10));
  if (qr.rank() < W.cols()) throw DomainError("degenerate subspace");
  Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(W.rows(), W.cols());
  return Q;
}

/// Largest principal angle (radians) between span(W) and span(U), U orthonormal.
///
/// Computed as atan2(sin, cos) with cos the smallest singular value of Q^T U and
/// sin the largest singular value of (I - U U^T) Q, so small angles keep full
/// relative precision.
template <typename DerivedW, typename DerivedU>
typename DerivedW::Scalar principal_angle(const Eigen::MatrixBase<DerivedW>& W,
                                          const Eigen::MatrixBase<DerivedU>& U) {
  using Scalar = typename DerivedW::Scalar;
  if (W.rows() != U.rows() || W.cols() != U.cols()) {
    throw PreconditionError("principal_angle: shape mismatch");
  }
  const Matrix<Scalar> Q = orthonormal_basis(W);
  const Matrix<Scalar> cross = Q.transpose() * U;
  const Matrix<Scalar> resid = Q - U * cross.transpose();
  Eigen::JacobiSVD<Matrix<Scalar>> svd_cos(cross);
  Eigen::JacobiSVD<Matrix<Scalar>> svd_sin(resid);
  const Scalar c = std::min(Scalar(1), svd_cos.singularValues().minCoeff());
  const Scalar s = std::min(Scalar(1), svd_sin.singularValues()(0));
  return std::atan2(s, c);
}

/// Central differences (cost(W + h E_ij) - cost(W - h E_ij)) / 2h for every entry.
template <typename Cost, typename Derived>
Matrix<typename Derived::Scalar> finite_difference_gradient(Cost&& cost, const Eigen::MatrixBase<Derived>& W,
                                                            typename Derived::Scalar h = 1e-5) {
  using Scalar = typename Derived::Scalar;
  if (!(h > Scalar(0))) throw PreconditionError("finite_difference_gradient: h must be positive");
  Matrix<Scalar> probe = W;
  Matrix<Scalar> grad(W.rows(), W.cols());
  for (Index j = 0; j < W.cols(); ++j) {
    for (Index i = 0; i < W.rows(); ++i) {
      const Scalar orig = probe(i, j);
      probe(i, j) = orig + h;
      const Scalar fp = cost(std::as_const(probe));
      probe(i, j) = orig - h;
      const Scalar fm = cost(std::as_const(probe));
      probe(i, j) = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw DomainError("finite_difference_gradient: non-finite cost evaluation");
      }
      grad(i, j) = (fp - fm) / (Scalar(2) * h);
    }
  }
  return grad;
}

/// ||a - b||_F / max(||b||_F, floor).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar relative_error(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b,
                                         typename DerivedA::Scalar floor = 1e-8) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace born_psa

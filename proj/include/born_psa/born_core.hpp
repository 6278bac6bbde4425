#pragma once

// Born-rule probability model over real vector spaces: squared-cosine
// probabilities, energy-based sample probabilities, density matrices and the
// entropies used by probabilistic PSA/PCA.
//
// All functions are pure; natural logarithms throughout.

#include "born_psa/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace born_psa {

/// A K-dimensional input datum together with its energy (squared norm).
template <typename Scalar>
class SampleVector {
 public:
  SampleVector() = default;

  explicit SampleVector(Vector<Scalar> values) : values_(std::move(values)) {
    if (values_.size() < 1) throw PreconditionError("sample vector must have dimension >= 1");
    energy_ = values_.squaredNorm();
  }

  template <typename Derived>
  static SampleVector from(const Eigen::MatrixBase<Derived>& v) {
    return SampleVector(Vector<Scalar>(v));
  }

  const Vector<Scalar>& values() const noexcept { return values_; }
  Scalar energy() const noexcept { return energy_; }
  Index dim() const noexcept { return values_.size(); }

  /// Unit-norm direction x / ||x|| (the pure state carried by the sample).
  Vector<Scalar> direction() const {
    if (!(energy_ > Scalar(0))) throw DomainError("degenerate vector");
    return values_ / std::sqrt(energy_);
  }

  SampleVector scaled(Scalar c) const { return SampleVector(Vector<Scalar>(c * values_)); }

 private:
  Vector<Scalar> values_;
  Scalar energy_ = Scalar(0);
};

template <typename Scalar>
using SampleBatch = std::vector<SampleVector<Scalar>>;

/// True when every column of W has unit Euclidean norm within tol.
template <typename Derived>
bool columns_unit_norm(const Eigen::MatrixBase<Derived>& W, typename Derived::RealScalar tol) {
  for (Index n = 0; n < W.cols(); ++n) {
    if (std::abs(W.col(n).norm() - 1) > tol) return false;
  }
  return true;
}

namespace detail {

template <typename Scalar>
constexpr Scalar kUnitNormTol = Scalar(1e-8);

template <typename Derived>
void require_unit_columns(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  if (!columns_unit_norm(W, kUnitNormTol<Scalar>)) {
    throw PreconditionError("weight columns must have unit norm");
  }
}

template <typename Scalar>
Scalar xlogx(Scalar v) {
  return v > Scalar(0) ? v * std::log(v) : Scalar(0);
}

}  // namespace detail

/// Born probability (a^T b)^2 / (||a||^2 ||b||^2) of outcome a on the state b.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar squared_cosine(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw PreconditionError("squared_cosine: dimension mismatch");
  const Scalar na = a.squaredNorm();
  const Scalar nb = b.squaredNorm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) throw DomainError("degenerate vector");
  const Scalar d = a.dot(b);
  return (d * d) / (na * nb);
}

/// p(x_k) = ||x_k||^2 / total energy of the batch.
template <typename Scalar>
Scalar sample_probability(const SampleVector<Scalar>& x, Scalar total_energy) {
  if (!(total_energy > Scalar(0))) throw DomainError("total energy must be positive");
  if (x.energy() > total_energy + Scalar(1e-9)) {
    throw PreconditionError("sample energy exceeds the batch total");
  }
  return x.energy() / total_energy;
}

template <typename Scalar>
Scalar total_energy(const SampleBatch<Scalar>& samples) {
  Scalar e = 0;
  for (const auto& s : samples) e += s.energy();
  return e;
}

/// p(w | x) = (w^T x)^2 / ||x||^2 for a unit-norm measurement direction w.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar conditional_probability(const Eigen::MatrixBase<Derived>& w, const SampleVector<Scalar>& x) {
  if (std::abs(w.norm() - 1) > detail::kUnitNormTol<Scalar>) {
    throw PreconditionError("measurement direction must have unit norm");
  }
  if (!(x.energy() > Scalar(0))) throw DomainError("degenerate vector");
  if (w.size() != x.dim()) throw PreconditionError("conditional_probability: dimension mismatch");
  const Scalar d = w.dot(x.values());
  return d * d / x.energy();
}

/// p(W, x) = p(x) * sum_n p(w_n | x). Not clamped: non-orthogonal columns give
/// improper (> p(x)) values.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar joint_probability(const Eigen::MatrixBase<Derived>& W, const SampleVector<Scalar>& x,
                         Scalar p_x) {
  detail::require_unit_columns(W);
  if (!(x.energy() > Scalar(0))) throw DomainError("degenerate vector");
  if (W.rows() != x.dim()) throw PreconditionError("joint_probability: dimension mismatch");
  return p_x * (W.transpose() * x.values()).squaredNorm() / x.energy();
}

/// Symmetric, positive semidefinite, unit-trace K x K matrix.
template <typename Scalar>
class DensityMatrix {
 public:
  static constexpr Scalar kSymmetryTol = Scalar(1e-12);
  static constexpr Scalar kTraceTol = Scalar(1e-12);
  static constexpr Scalar kEigenFloor = Scalar(-1e-10);

  /// Validates the density-matrix invariants; throws PreconditionError.
  explicit DensityMatrix(Matrix<Scalar> m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw PreconditionError("density matrix must be square and non-empty");
    }
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
      throw PreconditionError("density matrix must be symmetric");
    }
    if (std::abs(m_.trace() - Scalar(1)) > kTraceTol) {
      throw PreconditionError("density matrix must have unit trace");
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kEigenFloor) {
      throw PreconditionError("density matrix must be positive semidefinite");
    }
  }

  const Matrix<Scalar>& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }

 private:
  Matrix<Scalar> m_;
};

/// rho = sum_k p(x_k) xn_k xn_k^T, a mixture of the samples' pure states.
template <typename Scalar>
DensityMatrix<Scalar> density_matrix(const SampleBatch<Scalar>& samples) {
  if (samples.empty()) throw DomainError("density_matrix: empty batch");
  const Scalar total = total_energy(samples);
  if (!(total > Scalar(0))) throw DomainError("density_matrix: all samples have zero energy");
  const Index K = samples.front().dim();
  Matrix<Scalar> rho = Matrix<Scalar>::Zero(K, K);
  for (const auto& s : samples) {
    if (s.dim() != K) throw PreconditionError("density_matrix: mixed dimensions");
    if (s.energy() == Scalar(0)) continue;
    // p(x_k) xn xn^T == x x^T / total
    rho.noalias() += s.values() * s.values().transpose();
  }
  rho /= total;
  // Renormalize the trace to absorb accumulated rounding.
  rho /= rho.trace();
  return DensityMatrix<Scalar>(std::move(rho));
}

/// p(x = target): sum of p(x_i) over batch entries equal to target (1e-12 entrywise).
template <typename Scalar>
Scalar marginal_probability(const SampleVector<Scalar>& target,
                            const SampleBatch<Scalar>& samples) {
  if (samples.empty()) throw DomainError("marginal_probability: empty batch");
  const Scalar total = total_energy(samples);
  if (!(total > Scalar(0))) throw DomainError("marginal_probability: zero total energy");
  Scalar p = 0;
  for (const auto& s : samples) {
    if (s.dim() != target.dim()) continue;
    if ((s.values() - target.values()).cwiseAbs().maxCoeff() <= Scalar(1e-12)) {
      p += s.energy() / total;
    }
  }
  return p;
}

/// Shannon entropy of an eigenvalue spectrum, clipped to [0, 1].
template <typename Derived>
typename Derived::Scalar spectral_entropy(const Eigen::MatrixBase<Derived>& lambda) {
  using Scalar = typename Derived::Scalar;
  Scalar s = 0;
  for (Index i = 0; i < lambda.size(); ++i) {
    s -= detail::xlogx(std::clamp(lambda[i], Scalar(0), Scalar(1)));
  }
  return s;
}

/// S(rho) = -tr(rho log rho).
template <typename Scalar>
Scalar von_neumann_entropy(const DensityMatrix<Scalar>& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(rho.matrix(), Eigen::EigenvaluesOnly);
  return spectral_entropy(es.eigenvalues());
}

/// Rank-one projectors a_k a_k^T onto the columns of a basis matrix.
template <typename Derived>
std::vector<Matrix<typename Derived::Scalar>> rank_one_projectors(const Eigen::MatrixBase<Derived>& basis) {
  std::vector<Matrix<typename Derived::Scalar>> out;
  out.reserve(static_cast<std::size_t>(basis.cols()));
  for (Index k = 0; k < basis.cols(); ++k) out.emplace_back(basis.col(k) * basis.col(k).transpose());
  return out;
}

/// rho' = sum_k P_k rho P_k for a complete set of K orthogonal rank-one projectors.
template <typename Scalar>
DensityMatrix<Scalar> projective_remeasure(const DensityMatrix<Scalar>& rho,
                                           const std::vector<Matrix<Scalar>>& projectors) {
  const Index K = rho.dim();
  constexpr Scalar tol = Scalar(1e-8);
  if (static_cast<Index>(projectors.size()) != K) {
    throw PreconditionError("projective_remeasure: need exactly K rank-one projectors");
  }
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(K, K);
  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const auto& P = projectors[i];
    if (P.rows() != K || P.cols() != K) throw PreconditionError("projective_remeasure: projector shape");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > tol ||
        (P * P - P).cwiseAbs().maxCoeff() > tol || std::abs(P.trace() - Scalar(1)) > tol) {
      throw PreconditionError("projective_remeasure: not a rank-one orthogonal projector");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((P * projectors[j]).cwiseAbs().maxCoeff() > tol) {
        throw PreconditionError("projective_remeasure: projectors are not mutually orthogonal");
      }
    }
    sum += P;
  }
  if ((sum - Matrix<Scalar>::Identity(K, K)).cwiseAbs().maxCoeff() > tol) {
    throw PreconditionError("projective_remeasure: projectors do not sum to identity");
  }

  Matrix<Scalar> out = Matrix<Scalar>::Zero(K, K);
  for (const auto& P : projectors) out.noalias() += P * rho.matrix() * P;
  out = Scalar(0.5) * (out + out.transpose());
  out /= out.trace();
  return DensityMatrix<Scalar>(std::move(out));
}

namespace detail {

// q_n = p_x (w_n^T x)^2 / ||x||^2, no precondition checks.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Vector<Scalar> subspace_joint_terms(const Eigen::MatrixBase<Derived>& W, const Vector<Scalar>& x,
                                    Scalar p_x) {
  const Scalar e = x.squaredNorm();
  return (p_x / e) * (W.transpose() * x).array().square().matrix();
}

// Unnormalized principal-subspace entropy sum_n q_n log(1/q_n); callable on
// arbitrary W so finite differences can probe it.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar subspace_entropy_raw(const Eigen::MatrixBase<Derived>& W, const Vector<Scalar>& x, Scalar p_x) {
  const Vector<Scalar> q = subspace_joint_terms(W, x, p_x);
  Scalar s = 0;
  for (Index n = 0; n < q.size(); ++n) s -= xlogx(q[n]);
  return s;
}

}  // namespace detail

/// Principal-subspace entropy of the joint terms q_n = p(w_n, x).
///
/// normalized == false: S^PS = sum q_n log(1/q_n).
/// normalized == true:  Shannon entropy of q_n / V with V = sum q_n, which
/// satisfies S_S = log V + S^PS / V.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar subspace_entropy(const Eigen::MatrixBase<Derived>& W, const SampleVector<Scalar>& x, Scalar p_x,
                        bool normalized) {
  detail::require_unit_columns(W);
  if (!(x.energy() > Scalar(0))) throw DomainError("degenerate vector");
  if (W.rows() != x.dim()) throw PreconditionError("subspace_entropy: dimension mismatch");
  if (p_x < Scalar(0)) throw PreconditionError("subspace_entropy: negative probability");
  const Vector<Scalar> q = detail::subspace_joint_terms(W, x.values(), p_x);
  const Scalar V = q.sum();
  if (!(V > Scalar(0))) throw DomainError("degenerate projection");
  Scalar s = 0;
  if (normalized) {
    for (Index n = 0; n < q.size(); ++n) s -= detail::xlogx(q[n] / V);
  } else {
    for (Index n = 0; n < q.size(); ++n) s -= detail::xlogx(q[n]);
  }
  return s;
}

/// d S^PS / dW for q_n = p_x (w_n^T x)^2 / ||x||^2. Zero q_n contribute zero.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Matrix<Scalar> subspace_entropy_gradient(const Eigen::MatrixBase<Derived>& W, const Vector<Scalar>& x,
                                         Scalar p_x) {
  const Scalar c = p_x / x.squaredNorm();
  const Vector<Scalar> y = W.transpose() * x;
  Vector<Scalar> coef(y.size());
  for (Index n = 0; n < y.size(); ++n) {
    const Scalar q = c * y[n] * y[n];
    coef[n] = q > Scalar(0) ? -(std::log(q) + Scalar(1)) * Scalar(2) * c * y[n] : Scalar(0);
  }
  return x * coef.transpose();
}

}  // namespace born_psa

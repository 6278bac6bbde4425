#pragma once

// Online Hebbian learning rules for principal subspace / component analysis.
//
// Every PSA rule shares the Hebbian direction
//     H = x y^T - (1 - delta(K, N)) W diag(y_1^2, ..., y_N^2),   y = W^T x,
// and differs only in the scalar modulation factor computed from the input
// energy p* = x^T x and the output energy q* = y^T y (see divergence.hpp).
//
// Step functions take the state by value and return the advanced state. A
// sample the rule cannot use (zero energy, zero output where the factor divides
// by it) is skipped: the iteration still advances and `skipped` is incremented.

#include "born_psa/born_core.hpp"
#include "born_psa/divergence.hpp"
#include "born_psa/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace born_psa {

/// Piecewise-constant learning rate: gamma0 before decay_at, gamma0 / decay_factor after.
struct Schedule {
  double gamma0 = 1.0;
  std::int64_t decay_at = 0;  ///< 0 = never decay
  double decay_factor = 16.0;

  void validate() const {
    if (!(gamma0 > 0.0)) throw PreconditionError("gamma0 must be positive");
    if (decay_at < 0) throw PreconditionError("decay_at must be >= 0");
    if (!(decay_factor > 1.0)) throw PreconditionError("decay_factor must exceed 1");
  }
};

inline double advance_schedule(const Schedule& schedule, std::int64_t iteration) {
  if (iteration < 0) throw PreconditionError("iteration must be >= 0");
  if (schedule.decay_at > 0 && iteration >= schedule.decay_at) {
    return schedule.gamma0 / schedule.decay_factor;
  }
  return schedule.gamma0;
}

enum class Algorithm { DivergencePsa, Sla, BachPsa, OjaSingle, BachSingle, TohmPca };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& text);

/// How the entropy gradient enters a TOHM step.
enum class EntropyProjection {
  None,    ///< raw Euclidean gradient of S^PS
  Tangent  ///< component that leaves W^T W unchanged to first order (see gram_tangent_project)
};

std::string to_string(EntropyProjection p);
EntropyProjection parse_entropy_projection(const std::string& text);

struct LearnerConfig {
  Index K = 4;
  Index N = 4;
  Algorithm algorithm = Algorithm::DivergencePsa;
  /// DivergencePsa and TohmPca fast-scale rule.
  DivergenceKind divergence = DivergenceKind::quadratic_variational();
  /// Exponent of the BACH rules.
  double b = DivergenceKind::kDefaultBachExponent;
  /// BachSingle: use the unsimplified rule with the ((x^T x)^b - (y^T y)^b) factor.
  bool bach_full_rule = false;
  /// TohmPca entropy weight, 0 < |mu| < 1.
  double mu = 0.1;
  EntropyProjection tohm_projection = EntropyProjection::Tangent;
  Schedule schedule;

  void validate() const;
};

template <typename Scalar>
struct LearnerState {
  WeightMatrix<Scalar> W;
  std::int64_t iteration = 0;
  Scalar current_gamma = Scalar(1);
  std::int64_t skipped = 0;
};

template <typename Scalar>
LearnerState<Scalar> make_state(WeightMatrix<Scalar> W, const Schedule& schedule) {
  return {std::move(W), 0, static_cast<Scalar>(advance_schedule(schedule, 0)), 0};
}

/// y = W^T x.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Vector<Scalar> forward(const Eigen::MatrixBase<Derived>& W, const SampleVector<Scalar>& x) {
  if (W.rows() != x.dim()) throw PreconditionError("forward: dimension mismatch");
  return W.transpose() * x.values();
}

/// x y^T - (1 - delta(K, N)) W diag(y o y).
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
Matrix<Scalar> hebbian_direction(const SampleVector<Scalar>& x, const Vector<Scalar>& y,
                                 const Eigen::MatrixBase<DerivedW>& W) {
  if (W.rows() != x.dim() || W.cols() != y.size()) {
    throw PreconditionError("hebbian_direction: dimension mismatch");
  }
  Matrix<Scalar> h = x.values() * y.transpose();
  if (W.rows() != W.cols()) h.noalias() -= W * y.array().square().matrix().asDiagonal();
  return h;
}

/// Divergence-modulated PSA increment factor * H, or nullopt when the sample
/// must be skipped.
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
std::optional<Matrix<Scalar>> psa_increment(const Eigen::MatrixBase<DerivedW>& W, const SampleVector<Scalar>& x,
                                            const DivergenceKind& kind) {
  if (!(x.energy() > Scalar(0))) return std::nullopt;
  const Vector<Scalar> y = forward(W, x);
  const Scalar p = x.energy();
  const Scalar q = y.squaredNorm();
  if (requires_positive_output(kind) && !(q > Scalar(0))) return std::nullopt;
  return modulation_factor(p, q, kind) * hebbian_direction(x, y, W);
}

/// (x - W y) y^T, the subspace rule increment.
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
Matrix<Scalar> sla_increment(const Eigen::MatrixBase<DerivedW>& W, const SampleVector<Scalar>& x) {
  const Vector<Scalar> y = forward(W, x);
  return (x.values() - W * y) * y.transpose();
}

/// x y - w y^2 for a single unit.
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
Vector<Scalar> oja_increment(const Eigen::MatrixBase<DerivedW>& w, const SampleVector<Scalar>& x) {
  const Scalar y = w.dot(x.values());
  return x.values() * y - w * (y * y);
}

/// (x y - w y^2) / (y^2)^(1-b), times ((x^T x)^b - (y^2)^b) when full_rule.
/// nullopt when y == 0.
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
std::optional<Vector<Scalar>> bach_single_increment(const Eigen::MatrixBase<DerivedW>& w,
                                                    const SampleVector<Scalar>& x, Scalar b,
                                                    bool full_rule = false) {
  const Scalar y = w.dot(x.values());
  const Scalar y2 = y * y;
  if (!(y2 > Scalar(0))) return std::nullopt;
  Vector<Scalar> inc = (x.values() * y - w * y2) / std::pow(y2, Scalar(1) - b);
  if (full_rule) inc *= std::pow(x.energy(), b) - std::pow(y2, b);
  return inc;
}

/// Euclidean projection of G onto {D : W^T D + D^T W = 0}, the directions
/// that keep the Gram matrix W^T W fixed to first order: G - W L with L
/// symmetric solving (W^T W) L + L (W^T W) = W^T G + G^T W. For orthonormal W
/// this is the Stiefel tangent projection G - W sym(W^T G).
template <typename DerivedW, typename DerivedG, typename Scalar = typename DerivedW::Scalar>
Matrix<Scalar> gram_tangent_project(const Eigen::MatrixBase<DerivedW>& W, const Eigen::MatrixBase<DerivedG>& G) {
  const Matrix<Scalar> A = W.transpose() * G;
  const Matrix<Scalar> B = A + A.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(W.transpose() * W);
  const auto& s = eig.eigenvalues();
  const auto& V = eig.eigenvectors();
  Matrix<Scalar> L = V.transpose() * B * V;
  const Scalar floor = std::numeric_limits<Scalar>::min();
  for (Index j = 0; j < L.cols(); ++j)
    for (Index i = 0; i < L.rows(); ++i) {
      const Scalar d = s[i] + s[j];
      L(i, j) = d > floor ? L(i, j) / d : Scalar(0);
    }
  return G - W * (V * L * V.transpose());
}

/// Slow-scale TOHM term -mu * dS^PS/dW with q_n proportional to y_n^2
/// (p(x) taken as x^T x), optionally restricted to Gram-preserving directions.
template <typename DerivedW, typename Scalar = typename DerivedW::Scalar>
Matrix<Scalar> entropy_increment(const Eigen::MatrixBase<DerivedW>& W, const SampleVector<Scalar>& x, Scalar mu,
                                 EntropyProjection projection) {
  Matrix<Scalar> g = subspace_entropy_gradient(W, x.values(), x.energy());
  if (projection == EntropyProjection::Tangent) g = gram_tangent_project(W, g);
  return -mu * g;
}

namespace detail {

template <typename Scalar>
constexpr Scalar kRunawayNorm = Scalar(1e6);

template <typename Scalar>
LearnerState<Scalar> finish_step(LearnerState<Scalar> s, const Schedule& schedule) {
  if (!s.W.allFinite() || s.W.norm() > kRunawayNorm<Scalar>) throw LearnerDiverged(s.iteration);
  ++s.iteration;
  s.current_gamma = static_cast<Scalar>(advance_schedule(schedule, s.iteration));
  return s;
}

template <typename Scalar>
LearnerState<Scalar> skip_step(LearnerState<Scalar> s, const Schedule& schedule) {
  ++s.skipped;
  ++s.iteration;
  s.current_gamma = static_cast<Scalar>(advance_schedule(schedule, s.iteration));
  return s;
}

template <typename Scalar>
void require_dim(const LearnerState<Scalar>& s, const SampleVector<Scalar>& x) {
  if (s.W.rows() != x.dim()) throw PreconditionError("sample dimension does not match the weights");
}

template <typename Scalar>
void require_single_unit(const LearnerState<Scalar>& s) {
  if (s.W.cols() != 1) throw PreconditionError("single-unit rule needs N == 1");
}

}  // namespace detail

/// W <- W + gamma * factor(p*, q*) * H. QuadraticVariational gives the MHO rule.
template <typename Scalar>
LearnerState<Scalar> divergence_psa_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x,
                                         const DivergenceKind& kind, const Schedule& schedule) {
  detail::require_dim(s, x);
  auto inc = psa_increment(s.W, x, kind);
  if (!inc) return detail::skip_step(std::move(s), schedule);
  s.W.noalias() += s.current_gamma * *inc;
  return detail::finish_step(std::move(s), schedule);
}

/// W <- W + gamma (x - W y) y^T.
template <typename Scalar>
LearnerState<Scalar> sla_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x, const Schedule& schedule) {
  detail::require_dim(s, x);
  if (!(x.energy() > Scalar(0))) return detail::skip_step(std::move(s), schedule);
  s.W.noalias() += s.current_gamma * sla_increment(s.W, x);
  return detail::finish_step(std::move(s), schedule);
}

/// Divergence PSA step with the BACH divergence of exponent b.
template <typename Scalar>
LearnerState<Scalar> bach_psa_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x, Scalar b,
                                   const Schedule& schedule) {
  return divergence_psa_step(std::move(s), x, DivergenceKind::bach(static_cast<double>(b)), schedule);
}

/// w <- w + gamma (x y - w y^2).
template <typename Scalar>
LearnerState<Scalar> oja_single_unit_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x,
                                          const Schedule& schedule) {
  detail::require_single_unit(s);
  detail::require_dim(s, x);
  s.W.col(0) += s.current_gamma * oja_increment(s.W.col(0), x);
  return detail::finish_step(std::move(s), schedule);
}

/// w <- w + gamma (x y - w y^2) / (y^2)^(1-b); the unsimplified rule when full_rule.
template <typename Scalar>
LearnerState<Scalar> bach_single_unit_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x, Scalar b,
                                           const Schedule& schedule, bool full_rule = false) {
  detail::require_single_unit(s);
  detail::require_dim(s, x);
  auto inc = bach_single_increment(s.W.col(0), x, b, full_rule);
  if (!inc) return detail::skip_step(std::move(s), schedule);
  s.W.col(0) += s.current_gamma * *inc;
  return detail::finish_step(std::move(s), schedule);
}

/// Two-time-scale PCA: the PSA increment of `kind` plus mu times the descent
/// direction of the principal-subspace entropy.
template <typename Scalar>
LearnerState<Scalar> tohm_pca_step(LearnerState<Scalar> s, const SampleVector<Scalar>& x,
                                   const DivergenceKind& kind, Scalar mu, const Schedule& schedule,
                                   EntropyProjection projection = EntropyProjection::Tangent) {
  detail::require_dim(s, x);
  auto inc = psa_increment(s.W, x, kind);
  if (!inc) return detail::skip_step(std::move(s), schedule);
  if (mu != Scalar(0) && forward(s.W, x).squaredNorm() > Scalar(0)) {
    *inc += entropy_increment(s.W, x, mu, projection);
  }
  s.W.noalias() += s.current_gamma * *inc;
  return detail::finish_step(std::move(s), schedule);
}

/// Dispatches one step of the rule selected by config.
template <typename Scalar>
LearnerState<Scalar> learner_step(const LearnerConfig& config, LearnerState<Scalar> s,
                                  const SampleVector<Scalar>& x) {
  const auto b = static_cast<Scalar>(config.b);
  switch (config.algorithm) {
    case Algorithm::DivergencePsa:
      return divergence_psa_step(std::move(s), x, config.divergence, config.schedule);
    case Algorithm::Sla:
      return sla_step(std::move(s), x, config.schedule);
    case Algorithm::BachPsa:
      return bach_psa_step(std::move(s), x, b, config.schedule);
    case Algorithm::OjaSingle:
      return oja_single_unit_step(std::move(s), x, config.schedule);
    case Algorithm::BachSingle:
      return bach_single_unit_step(std::move(s), x, b, config.schedule, config.bach_full_rule);
    case Algorithm::TohmPca:
      return tohm_pca_step(std::move(s), x, config.divergence, static_cast<Scalar>(config.mu), config.schedule,
                           config.tohm_projection);
  }
  return s;
}

}  // namespace born_psa

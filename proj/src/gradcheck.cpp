#include "born_psa/gradcheck.hpp"

#include "born_psa/datagen.hpp"
#include "born_psa/learners.hpp"
#include "born_psa/oracle_linalg.hpp"

#include <algorithm>

namespace born_psa {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-5;

Matrix<double> random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix<double> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

Matrix<double> unit_columns(Matrix<double> m) {
  m.colwise().normalize();
  return m;
}

double js1m_term(const Matrix<double>& W, const Vector<double>& x) {
  const double d = x.squaredNorm() - (W.transpose() * x).squaredNorm();
  return d * d;
}

GradcheckResult check_mho(Rng& rng, int cases, Index K, Index N) {
  GradcheckResult r{K == N ? "mho_square" : "mho_compress", cases, 0.0, kTolerance, false};
  for (int c = 0; c < cases; ++c) {
    const Matrix<double> W = K == N ? Matrix<double>(0.5 * random_matrix(rng, K, N))
                                    : unit_columns(random_matrix(rng, K, N));
    const SampleVector<double> x(Vector<double>(random_matrix(rng, K, 1)));
    const auto inc = psa_increment(W, x, DivergenceKind::quadratic_variational());
    if (!inc) continue;
    Matrix<double> target = -0.25 * finite_difference_gradient(
                                        [&](const Matrix<double>& V) { return js1m_term(V, x.values()); }, W, kStep);
    if (K != N) {
      for (Index n = 0; n < N; ++n) target.col(n) -= W.col(n) * W.col(n).dot(target.col(n));
    }
    r.max_relative_error = std::max(r.max_relative_error, relative_error(*inc, target));
  }
  r.passed = r.max_relative_error <= r.tolerance;
  return r;
}

GradcheckResult check_entropy(Rng& rng, int cases) {
  GradcheckResult r{"entropy", cases, 0.0, kTolerance, false};
  for (int c = 0; c < cases; ++c) {
    const Index K = 4;
    const Index N = 1 + static_cast<Index>(rng.uniform() * 4.0);
    const Matrix<double> W = unit_columns(random_matrix(rng, K, N));
    const Vector<double> x = random_matrix(rng, K, 1);
    const double p_x = rng.uniform(0.1, 1.0);
    const Matrix<double> analytic = subspace_entropy_gradient(W, x, p_x);
    const Matrix<double> numeric = finite_difference_gradient(
        [&](const Matrix<double>& V) { return detail::subspace_entropy_raw(V, x, p_x); }, W, kStep);
    r.max_relative_error = std::max(r.max_relative_error, relative_error(analytic, numeric));
  }
  r.passed = r.max_relative_error <= r.tolerance;
  return r;
}

GradcheckResult check_qvar_factor(Rng& rng, int cases) {
  GradcheckResult r{"qvar_factor", cases, 0.0, kTolerance, false};
  const auto kind = DivergenceKind::quadratic_variational();
  for (int c = 0; c < cases; ++c) {
    const double p = rng.uniform(0.05, 1.0);
    const double q = rng.uniform(0.05, 1.0);
    const double dq = (pointwise_divergence(p, q + kStep, kind) - pointwise_divergence(p, q - kStep, kind)) / (2 * kStep);
    const double target = -0.5 * dq;
    const double err = std::abs(modulation_factor(p, q, kind) - target) / std::max(std::abs(target), 1e-8);
    r.max_relative_error = std::max(r.max_relative_error, err);
  }
  r.passed = r.max_relative_error <= r.tolerance;
  return r;
}

}  // namespace

std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed, int cases) {
  Rng rng(seed);
  return {check_mho(rng, cases, 4, 4), check_mho(rng, cases, 4, 2), check_entropy(rng, cases),
          check_qvar_factor(rng, cases)};
}

}  // namespace born_psa

#include "born_psa/born_core.hpp"
#include "born_psa/datagen.hpp"
#include "born_psa/oracle_linalg.hpp"

#include <doctest.h>

#include <cmath>

using namespace born_psa;
using Vec = Vector<double>;
using Mat = Matrix<double>;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

SampleVector<double> sample(std::initializer_list<double> v) { return SampleVector<double>(vec(v)); }

Mat random_orthonormal(Rng& rng, Index K) {
  Mat A(K, K);
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i < K; ++i) A(i, j) = rng.gaussian();
  return Eigen::HouseholderQR<Mat>(A).householderQ();
}

DensityMatrix<double> random_density(Rng& rng, Index K) {
  Mat A(K, K);
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i < K; ++i) A(i, j) = rng.gaussian();
  Mat rho = A * A.transpose();
  rho /= rho.trace();
  return DensityMatrix<double>(rho);
}

}  // namespace

TEST_CASE("SampleVector caches its energy") {
  const auto x = sample({3, 4});
  CHECK(x.energy() == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(x.dim() == 2);
  CHECK(x.direction().norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(sample({0, 0}).direction(), DomainError);
  CHECK_THROWS_AS(SampleVector<double>{Vec()}, PreconditionError);
  CHECK(x.scaled(2.0).energy() == doctest::Approx(100.0));
}

TEST_CASE("squared_cosine") {
  CHECK(squared_cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(squared_cosine(vec({1, 0}), vec({3, 0})) == doctest::Approx(1.0));
  CHECK(squared_cosine(vec({1, 0}), vec({1, 1})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(squared_cosine(vec({0, 0}), vec({1, 1})), DomainError);

  SUBCASE("symmetric and scale invariant") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
      Vec a(5), b(5);
      for (Index i = 0; i < 5; ++i) {
        a[i] = rng.gaussian();
        b[i] = rng.gaussian();
      }
      const double c = squared_cosine(a, b);
      CHECK(c == doctest::Approx(squared_cosine(b, a)).epsilon(1e-12));
      CHECK(c == doctest::Approx(squared_cosine(Vec(-3.0 * a), Vec(0.2 * b))).epsilon(1e-12));
      CHECK(c >= 0.0);
      CHECK(c <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("generalized Pythagorean identity over orthonormal bases") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const Index K = 2 + static_cast<Index>(rng.uniform() * 30);
    const Mat A = random_orthonormal(rng, K);
    Vec x(K);
    for (Index i = 0; i < K; ++i) x[i] = rng.gaussian();
    double sum = 0.0, energy = 0.0;
    for (Index i = 0; i < K; ++i) {
      const double c = squared_cosine(Vec(A.col(i)), x);
      sum += c;
      energy += x.squaredNorm() * c;
    }
    CHECK(std::abs(sum - 1.0) < 1e-10);
    CHECK(std::abs(energy - x.squaredNorm()) < 1e-10 * std::max(1.0, x.squaredNorm()));
  }
}

TEST_CASE("sample_probability") {
  CHECK(sample_probability(sample({1, 0}), 4.0) == doctest::Approx(0.25));
  CHECK(sample_probability(sample({0, 0, 0}), 5.0) == 0.0);
  CHECK_THROWS_AS(sample_probability(sample({1, 0}), 0.0), DomainError);

  SUBCASE("equal-energy batch of 10") {
    SampleBatch<double> batch;
    for (int i = 0; i < 10; ++i) batch.push_back(sample({std::cos(i * 0.3), std::sin(i * 0.3)}));
    const double total = total_energy(batch);
    double sum = 0.0;
    for (const auto& x : batch) {
      CHECK(sample_probability(x, total) == doctest::Approx(0.1));
      sum += sample_probability(x, total);
    }
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }

  SUBCASE("random batch sums to one") {
    GeneratorConfig config;
    SampleSource source(config, 3);
    const auto batch = source.batch(1000);
    const double total = total_energy(batch);
    double sum = 0.0;
    for (const auto& x : batch) sum += sample_probability(x, total);
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("conditional_probability") {
  CHECK(conditional_probability(vec({1, 0, 0, 0}), sample({2, 0, 0, 0})) == doctest::Approx(1.0));
  CHECK(conditional_probability(vec({1, 0, 0, 0}), sample({0, 3, 0, 0})) == doctest::Approx(0.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(conditional_probability(vec({r, r, 0, 0}), sample({1, 0, 0, 0})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(conditional_probability(vec({2, 0}), sample({1, 0})), PreconditionError);
  CHECK_THROWS_AS(conditional_probability(vec({1, 0}), sample({0, 0})), DomainError);
}

TEST_CASE("joint_probability") {
  const Mat I2 = Mat::Identity(4, 2);
  CHECK(joint_probability(I2, sample({0.3, -0.7, 0, 0}), 0.2) == doctest::Approx(0.2));

  Mat dup(2, 2);
  dup << 1, 1, 0, 0;
  CHECK(joint_probability(dup, sample({5, 0}), 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(joint_probability(Mat(2.0 * I2), sample({1, 0, 0, 0}), 0.2), PreconditionError);

  SUBCASE("Parseval: full orthonormal W returns p_x") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      const Index K = 2 + static_cast<Index>(rng.uniform() * 8);
      const Mat W = random_orthonormal(rng, K);
      Vec x(K);
      for (Index i = 0; i < K; ++i) x[i] = rng.gaussian();
      const double p = rng.uniform();
      CHECK(std::abs(joint_probability(W, SampleVector<double>(x), p) - p) < 1e-10);
    }
  }
}

TEST_CASE("density_matrix") {
  SampleBatch<double> pure{sample({2, 0})};
  Mat expected(2, 2);
  expected << 1, 0, 0, 0;
  CHECK((density_matrix(pure).matrix() - expected).norm() < 1e-14);

  SampleBatch<double> mix{sample({1, 0}), sample({0, 1})};
  CHECK((density_matrix(mix).matrix() - 0.5 * Mat::Identity(2, 2)).norm() < 1e-14);

  CHECK_THROWS_AS(density_matrix(SampleBatch<double>{sample({0, 0})}), DomainError);
  CHECK_THROWS_AS(density_matrix(SampleBatch<double>{}), DomainError);

  SUBCASE("invariants on generator batches") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SampleSource source(GeneratorConfig{}, seed);
      const auto rho = density_matrix(source.batch(1000));
      const Mat& m = rho.matrix();
      CHECK(std::abs(m.trace() - 1.0) < 1e-12);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff() > -1e-10);
    }
  }

  SUBCASE("shares eigenvectors with the sample covariance") {
    SampleSource source(GeneratorConfig{}, 17);
    const auto batch = source.batch(1000);
    const auto er = eig_sym(density_matrix(batch).matrix());
    const auto ec = eig_sym(sample_covariance(batch));
    for (Index i = 0; i < 4; ++i) {
      CHECK(principal_angle(Mat(er.eigenvectors.col(i)), Mat(ec.eigenvectors.col(i))) < 1e-10);
    }
  }
}

TEST_CASE("DensityMatrix validation") {
  Mat bad_trace = Mat::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix<double>{bad_trace}, PreconditionError);
  Mat asym(2, 2);
  asym << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix<double>{asym}, PreconditionError);
  Mat indefinite(2, 2);
  indefinite << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(DensityMatrix<double>{indefinite}, PreconditionError);
}

TEST_CASE("marginal_probability") {
  SampleBatch<double> two{sample({1, 0}), sample({0, 1})};
  CHECK(marginal_probability(sample({1, 0}), two) == doctest::Approx(0.5));
  CHECK(marginal_probability(sample({0.6, 0.8}), two) == 0.0);

  SampleBatch<double> four{sample({1, 0}), sample({1, 0}), sample({0, 1}), sample({1, 0})};
  CHECK(marginal_probability(sample({1, 0}), four) == doctest::Approx(0.75));
}

TEST_CASE("von_neumann_entropy") {
  Mat pure(2, 2);
  pure << 1, 0, 0, 0;
  CHECK(von_neumann_entropy(DensityMatrix<double>(pure)) == doctest::Approx(0.0));
  CHECK(von_neumann_entropy(DensityMatrix<double>(Mat(0.25 * Mat::Identity(4, 4)))) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  Mat d(2, 2);
  d << 0.7, 0, 0, 0.3;
  CHECK(von_neumann_entropy(DensityMatrix<double>(d)) ==
        doctest::Approx(-0.7 * std::log(0.7) - 0.3 * std::log(0.3)).epsilon(1e-12));
}

TEST_CASE("projective_remeasure") {
  SUBCASE("eigenprojectors leave rho unchanged") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      const auto rho = random_density(rng, 5);
      const auto eig = eig_sym(rho.matrix());
      const auto out = projective_remeasure(rho, rank_one_projectors(eig.eigenvectors));
      CHECK((out.matrix() - rho.matrix()).norm() < 1e-10);
      CHECK(std::abs(von_neumann_entropy(out) - von_neumann_entropy(rho)) < 1e-9);
    }
  }

  SUBCASE("maximal mixing of a pure state") {
    Mat pure(2, 2);
    pure << 1, 0, 0, 0;
    Mat basis(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    basis << r, r, r, -r;
    const auto out = projective_remeasure(DensityMatrix<double>(pure), rank_one_projectors(basis));
    CHECK((out.matrix() - 0.5 * Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(von_neumann_entropy(out) == doctest::Approx(std::log(2.0)));
  }

  SUBCASE("random bases strictly increase entropy") {
    Rng rng(19);
    for (int t = 0; t < 100; ++t) {
      const Index K = 2 + static_cast<Index>(rng.uniform() * 7);
      const auto rho = random_density(rng, K);
      const auto out = projective_remeasure(rho, rank_one_projectors(random_orthonormal(rng, K)));
      CHECK(von_neumann_entropy(out) > von_neumann_entropy(rho));
    }
  }

  SUBCASE("rejects incomplete or non-orthogonal sets") {
    const auto rho = DensityMatrix<double>(Mat(0.5 * Mat::Identity(2, 2)));
    std::vector<Mat> incomplete{Mat(Vec(vec({1, 0})) * vec({1, 0}).transpose())};
    CHECK_THROWS_AS(projective_remeasure(rho, incomplete), PreconditionError);
    Mat skew(2, 2);
    skew << 1, 0.6, 0, 0.8;
    CHECK_THROWS_AS(projective_remeasure(rho, rank_one_projectors(skew)), PreconditionError);
  }
}

TEST_CASE("subspace_entropy") {
  const Mat I = Mat::Identity(4, 4);
  CHECK(subspace_entropy(I, sample({2, 0, 0, 0}), 1.0, false) == doctest::Approx(0.0));
  CHECK(subspace_entropy(I, sample({2, 0, 0, 0}), 1.0, true) == doctest::Approx(0.0));

  const Mat I2 = Mat::Identity(2, 2);
  CHECK(subspace_entropy(I2, sample({1, 1}), 1.0, true) == doctest::Approx(std::log(2.0)));

  CHECK_THROWS_AS(subspace_entropy(Mat(Mat::Identity(3, 2)), sample({0, 0, 1}), 1.0, true), DomainError);

  SUBCASE("q = (0.3, 0.1) and the normalization identity") {
    // x at angle theta from w1 within span(w1, w2), p_x = 0.4: q = 0.4 cos^2, 0.4 sin^2.
    const double c2 = 0.75;
    const auto x = sample({std::sqrt(c2), std::sqrt(1 - c2)});
    const double s_ps = subspace_entropy(I2, x, 0.4, false);
    CHECK(s_ps == doctest::Approx(0.3 * std::log(1 / 0.3) + 0.1 * std::log(1 / 0.1)).epsilon(1e-12));
    const double s_s = subspace_entropy(I2, x, 0.4, true);
    CHECK(std::abs(s_s - (std::log(0.4) + s_ps / 0.4)) < 1e-10);
  }

  SUBCASE("normalization identity on random inputs") {
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
      Mat W(5, 3);
      for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 5; ++i) W(i, j) = rng.gaussian();
      W.colwise().normalize();
      Vec x(5);
      for (Index i = 0; i < 5; ++i) x[i] = rng.gaussian();
      const double p = rng.uniform(0.01, 1.0);
      const auto sx = SampleVector<double>(x);
      const double V = joint_probability(W, sx, p);
      CHECK(std::abs(subspace_entropy(W, sx, p, true) - (std::log(V) + subspace_entropy(W, sx, p, false) / V)) <
            1e-10);
    }
  }
}

TEST_CASE("subspace_entropy_gradient matches finite differences") {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    Mat W(4, 3);
    for (Index j = 0; j < 3; ++j)
      for (Index i = 0; i < 4; ++i) W(i, j) = rng.gaussian();
    W.colwise().normalize();
    Vec x(4);
    for (Index i = 0; i < 4; ++i) x[i] = rng.gaussian();
    const double p = rng.uniform(0.1, 1.0);
    const Mat analytic = subspace_entropy_gradient(W, x, p);
    const Mat numeric =
        finite_difference_gradient([&](const Mat& V) { return detail::subspace_entropy_raw(V, x, p); }, W);
    CHECK(relative_error(analytic, numeric) < 1e-5);
  }
}

#include "born_psa/datagen.hpp"

#include <algorithm>
#include <cmath>

namespace born_psa {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::GaussianShell: return "gaussian_shell";
    case GeneratorKind::UniformZeroMean: return "uniform_zero_mean";
    case GeneratorKind::AnisotropicUniform: return "anisotropic_uniform";
    case GeneratorKind::UniformNonNegative: return "uniform_nonnegative";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& text) {
  for (auto k : {GeneratorKind::GaussianShell, GeneratorKind::UniformZeroMean, GeneratorKind::AnisotropicUniform,
                 GeneratorKind::UniformNonNegative}) {
    if (to_string(k) == text) return k;
  }
  throw PreconditionError("unknown generator kind '" + text + "'");
}

void GeneratorConfig::validate() const {
  if (K < 1) throw PreconditionError("generator: K must be >= 1");
  if (!(pf > 0.0)) throw PreconditionError("generator: pf must be positive");
  if (!(half_range > 0.0)) throw PreconditionError("generator: half_range must be positive");
  if (!(energy_scale > 0.0)) throw PreconditionError("generator: energy_scale must be positive");
  if (kind == GeneratorKind::GaussianShell) {
    if (static_cast<Index>(stddevs.size()) != K) throw PreconditionError("generator: stddevs must have K entries");
    for (double s : stddevs) {
      if (!(s > 0.0)) throw PreconditionError("generator: stddevs must be positive");
    }
  }
  if (kind == GeneratorKind::AnisotropicUniform && (dominant < 0 || dominant >= K)) {
    throw PreconditionError("generator: dominant axis out of range");
  }
}

std::vector<double> anisotropic_half_ranges(Index K, Index dominant, double half_range) {
  if (K < 1 || dominant < 0 || dominant >= K) throw PreconditionError("anisotropic source: bad dominant axis");
  std::vector<double> h(static_cast<std::size_t>(K));
  const double span = static_cast<double>(std::max<Index>(1, K - 2));
  Index j = 0;
  for (Index i = 0; i < K; ++i) {
    if (i == dominant) {
      h[static_cast<std::size_t>(i)] = half_range;
    } else {
      h[static_cast<std::size_t>(i)] = half_range * (0.7 - 0.525 * static_cast<double>(j) / span);
      ++j;
    }
  }
  return h;
}

namespace {

Vector<double> gaussian_shell_values(const GeneratorConfig& config, Rng& rng) {
  Vector<double> a(config.K);
  double norm2 = 0.0;
  do {
    for (Index i = 0; i < config.K; ++i) a[i] = config.stddevs[static_cast<std::size_t>(i)] * rng.gaussian();
    norm2 = a.squaredNorm();
  } while (!(norm2 > 0.0));
  const double u = rng.uniform();
  return (0.5 * (0.5 + 0.5 * u) / std::sqrt(norm2) / config.pf) * a;
}

}  // namespace

SampleVector<double> gaussian_shell_sample(const GeneratorConfig& config, Rng& rng) {
  return SampleVector<double>(gaussian_shell_values(config, rng));
}

SampleVector<double> uniform_zero_mean_sample(const GeneratorConfig& config, Rng& rng) {
  Vector<double> x(config.K);
  for (Index i = 0; i < config.K; ++i) x[i] = rng.uniform(-config.half_range, config.half_range);
  return SampleVector<double>(std::move(x));
}

SampleSource::SampleSource(GeneratorConfig config) : SampleSource(config, config.seed) {}

SampleSource::SampleSource(GeneratorConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed), amplitude_(0.0) {
  config_.validate();
  config_.seed = seed;
  if (config_.kind == GeneratorKind::AnisotropicUniform) {
    half_ranges_ = anisotropic_half_ranges(config_.K, config_.dominant, config_.half_range);
  }
  amplitude_ = std::sqrt(config_.energy_scale);
}

SampleVector<double> SampleSource::next() {
  Vector<double> x;
  switch (config_.kind) {
    case GeneratorKind::GaussianShell:
      x = gaussian_shell_values(config_, rng_);
      break;
    case GeneratorKind::UniformZeroMean:
      x.resize(config_.K);
      for (Index i = 0; i < config_.K; ++i) x[i] = rng_.uniform(-config_.half_range, config_.half_range);
      break;
    case GeneratorKind::AnisotropicUniform:
      x.resize(config_.K);
      for (Index i = 0; i < config_.K; ++i) {
        const double h = half_ranges_[static_cast<std::size_t>(i)];
        x[i] = rng_.uniform(-h, h);
      }
      break;
    case GeneratorKind::UniformNonNegative:
      x.resize(config_.K);
      for (Index i = 0; i < config_.K; ++i) x[i] = rng_.uniform(0.0, 2.0 * config_.half_range);
      break;
  }
  if (amplitude_ != 1.0) x *= amplitude_;
  return SampleVector<double>(std::move(x));
}

SampleBatch<double> SampleSource::batch(std::size_t n) {
  SampleBatch<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

WeightMatrix<double> init_weights(Index K, Index N, std::uint64_t seed) {
  if (N < 1 || N > K) throw PreconditionError("init_weights: need 1 <= N <= K");
  Rng rng(seed);
  WeightMatrix<double> W(K, N);
  for (Index j = 0; j < N; ++j)
    for (Index i = 0; i < K; ++i) W(i, j) = -0.05 + 0.2 * rng.uniform();
  return W;
}

SampleSource anisotropic_scaled_source(Index K, Index dominant, std::uint64_t seed, double energy_scale) {
  GeneratorConfig config;
  config.kind = GeneratorKind::AnisotropicUniform;
  config.K = K;
  config.stddevs.clear();
  config.dominant = dominant;
  config.energy_scale = energy_scale;
  config.seed = seed;
  return SampleSource(std::move(config));
}

}  // namespace born_psa

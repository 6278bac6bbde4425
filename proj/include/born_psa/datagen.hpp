#pragma once

// Seeded synthetic inputs and weight initialisation.
//
// Randomness comes from std::mt19937_64. Uniform variates are built from the
// top 53 bits of each engine draw and Gaussian variates use the Marsaglia polar
// method on top of them, so a (config, seed) pair yields a bit-identical stream
// on every platform with IEEE doubles.
//
// Each run derives independent streams from its seed with splitmix64:
// stream 0 feeds the data source, stream 1 the weight initialisation and
// stream 2 the oracle batch (see stream_seed()).

#include "born_psa/born_core.hpp"
#include "born_psa/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace born_psa {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t { Data = 0, Weights = 1, Oracle = 2 };

/// Seed of an independent RNG stream belonging to a run.
inline std::uint64_t stream_seed(std::uint64_t run_seed, Stream stream) {
  return splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal variate.
  double gaussian() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class GeneratorKind { GaussianShell, UniformZeroMean, AnisotropicUniform, UniformNonNegative };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& text);

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::GaussianShell;
  Index K = 4;
  /// Per-component standard deviations (GaussianShell).
  std::vector<double> stddevs{1.0, 0.8, 0.6, 0.4};
  /// Energy attenuation: GaussianShell norms are divided by pf.
  double pf = 1.0;
  /// Component half-width (uniform kinds).
  double half_range = 0.5;
  /// Dominant axis of AnisotropicUniform (0-based).
  Index dominant = 0;
  /// Multiplies every sample energy; amplitudes scale by sqrt(energy_scale).
  double energy_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-axis half-widths of the anisotropic uniform source: the dominant axis
/// gets half_range, the others decrease linearly from 0.7 to 0.175 of it.
std::vector<double> anisotropic_half_ranges(Index K, Index dominant, double half_range);

/// x = 0.5 (0.5 + 0.5 u) a / ||a|| / pf with a ~ N(0, diag(stddevs^2)), u ~ U(0, 1).
SampleVector<double> gaussian_shell_sample(const GeneratorConfig& config, Rng& rng);

/// Components i.i.d. uniform on [-half_range, half_range].
SampleVector<double> uniform_zero_mean_sample(const GeneratorConfig& config, Rng& rng);

/// Draws samples according to config.kind from its own RNG.
class SampleSource {
 public:
  explicit SampleSource(GeneratorConfig config);
  SampleSource(GeneratorConfig config, std::uint64_t seed);

  SampleVector<double> next();
  SampleBatch<double> batch(std::size_t n);
  const GeneratorConfig& config() const noexcept { return config_; }

 private:
  GeneratorConfig config_;
  Rng rng_;
  std::vector<double> half_ranges_;
  double amplitude_;
};

/// Entries i.i.d. uniform on [-0.05, 0.15].
WeightMatrix<double> init_weights(Index K, Index N, std::uint64_t seed);

/// Zero-mean uniform stream whose population covariance is diagonal with a
/// unique maximum on axis `dominant` (0-based).
SampleSource anisotropic_scaled_source(Index K, Index dominant, std::uint64_t seed,
                                       double energy_scale = 1.0);

}  // namespace born_psa

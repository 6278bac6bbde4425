#pragma once

// Seeded experiment runner: streams generator samples through a learner,
// records metrics against an eigendecomposition oracle and summarizes runs.
//
// Repeat r of an experiment uses run seed `seed + r`. Its data stream, weight
// initialisation and oracle batch come from independent streams of that seed
// (see stream_seed()), so a run's output depends only on (config, run seed)
// and never on scheduling or the number of worker threads.

#include "born_psa/datagen.hpp"
#include "born_psa/learners.hpp"
#include "born_psa/oracle_linalg.hpp"
#include "born_psa/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace born_psa {

enum class Metric { Orthonormality, PrincipalAngle, Js1mCost, SubspaceEntropy, Alignment };

std::string to_string(Metric m);
Metric parse_metric(const std::string& text);

/// "Converged" = the first recorded iteration whose measure passes `threshold`.
///
/// For Orthonormality the measure is the raw defect max |I - W^T W| (not its
/// log). Alignment must rise above the threshold; every other measure must
/// fall below it.
struct ConvergenceRule {
  Metric metric = Metric::PrincipalAngle;
  double threshold = 0.1;

  bool passed(double measure) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  GeneratorConfig generator;
  LearnerConfig learner;
  std::int64_t iterations = 25000;
  std::int64_t record_every = 100;
  std::vector<Metric> metrics{Metric::Orthonormality};
  int repeats = 1;
  std::int64_t oracle_samples = 25000;
  ConvergenceRule convergence;
  /// Base run seed; repeat r runs with seed + r.
  std::uint64_t seed = 1;

  void validate() const;
  /// True when some metric or the convergence rule needs the oracle eigenvectors.
  bool needs_oracle() const;
};

struct TrajectoryRecord {
  std::int64_t iteration = 0;
  std::uint64_t seed = 0;
  /// Aligned with ExperimentConfig::metrics.
  std::vector<double> values;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<TrajectoryRecord> records;
  std::optional<std::int64_t> convergence_iteration;
  bool diverged = false;
  std::int64_t diverged_at = -1;
  std::int64_t skipped = 0;
  WeightMatrix<double> W;
  /// Aligned with ExperimentConfig::metrics; the last recorded values.
  std::vector<double> final_values;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;

  bool any_diverged() const;
};

/// Ground truth for one run: top eigenpairs of an oracle batch covariance.
struct Oracle {
  Vector<double> eigenvalues;
  Matrix<double> eigenvectors;  ///< K x K, descending
};

Oracle make_oracle(const GeneratorConfig& generator, std::uint64_t run_seed, std::int64_t samples);

struct OracleReport {
  double principal_angle = 0.0;
  double orthonormality = 0.0;
  /// alignments(n, m) = |w_n^T u_m| (raw inner products, W unnormalized).
  Matrix<double> alignments;
  /// max over assignments sigma of min_n alignments(n, sigma(n)).
  double best_assignment_alignment = 0.0;
  std::vector<Index> assignment;
  Vector<double> eigenvalues;
};

/// Principal angle to the oracle top-N subspace, orthonormality error and the
/// per-column alignment to every oracle eigenvector.
OracleReport compare_with_oracle(const WeightMatrix<double>& W, const SampleBatch<double>& samples);
OracleReport compare_with_oracle(const WeightMatrix<double>& W, const Oracle& oracle);

/// max_sigma min_n A(n, sigma(n)) over injective maps sigma from the N rows
/// into the columns of A; exhaustive for small N, greedy otherwise.
double best_assignment(const Matrix<double>& A, std::vector<Index>* assignment = nullptr);

/// One repeat of an experiment with the given run seed.
RunResult run_single(const ExperimentConfig& config, std::uint64_t run_seed);

/// All repeats, executed on up to `jobs` threads.
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);

enum class SweepParameter { Pf, Lf, B, Mu, EnergyScale };

std::string to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& text);

/// Copy of base with the parameter set to value; the name gets a `_<param><value>` suffix.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepParameter param, double value);

struct SweepCell {
  double value = 0.0;
  ExperimentResult result;
};

/// One experiment per value; all (cell, repeat) runs share a pool of `jobs` threads.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, SweepParameter param,
                                 const std::vector<double>& values, int jobs = 1);

// --- reporting ---------------------------------------------------------------

/// Median convergence iteration over runs (non-converged runs count as the
/// iteration budget + 1); nullopt when no run converged.
std::optional<double> median_convergence(const ExperimentResult& result);

/// Median over non-diverged runs of the final value of `metric`.
std::optional<double> median_final(const ExperimentResult& result, Metric metric);

/// Shortest round-trip decimal form.
std::string format_value(double v);

void write_trajectory_csv(std::ostream& out, const ExperimentConfig& config, const RunResult& run);
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_sweep_csv(std::ostream& out, SweepParameter param, const std::vector<SweepCell>& cells);

/// Writes `<name>_<seed>.csv` per run plus `<name>_summary.csv` into dir
/// (created if missing); returns the paths written.
std::vector<std::string> write_experiment(const std::string& dir, const ExperimentResult& result);
std::vector<std::string> write_sweep(const std::string& dir, const ExperimentConfig& base, SweepParameter param,
                                     const std::vector<SweepCell>& cells);

}  // namespace born_psa

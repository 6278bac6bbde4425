#include "born_psa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace born_psa {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::Orthonormality: return "orthonormality";
    case Metric::PrincipalAngle: return "principal_angle";
    case Metric::Js1mCost: return "js1m_cost";
    case Metric::SubspaceEntropy: return "subspace_entropy";
    case Metric::Alignment: return "alignment";
  }
  return "unknown";
}

Metric parse_metric(const std::string& text) {
  for (auto m : {Metric::Orthonormality, Metric::PrincipalAngle, Metric::Js1mCost, Metric::SubspaceEntropy,
                 Metric::Alignment}) {
    if (to_string(m) == text) return m;
  }
  throw PreconditionError("unknown metric '" + text + "'");
}

bool ConvergenceRule::passed(double measure) const {
  if (metric == Metric::Alignment) return measure > threshold;
  return measure < threshold;
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw PreconditionError("experiment: name must not be empty");
  if (name.find_first_of("/\\") != std::string::npos) throw PreconditionError("experiment: name must not contain '/'");
  generator.validate();
  learner.validate();
  if (generator.K != learner.K) throw PreconditionError("experiment: generator K differs from learner K");
  if (iterations <= 0) throw PreconditionError("experiment: iterations must be positive");
  if (record_every <= 0) throw PreconditionError("experiment: record_every must be positive");
  if (iterations < record_every) throw PreconditionError("experiment: iterations must be >= record_every");
  if (repeats < 1) throw PreconditionError("experiment: repeats must be >= 1");
  if (metrics.empty()) throw PreconditionError("experiment: at least one metric is required");
  if (needs_oracle() && oracle_samples < 1) throw PreconditionError("experiment: oracle_samples must be positive");
}

bool ExperimentConfig::needs_oracle() const {
  auto uses = [](Metric m) { return m == Metric::PrincipalAngle || m == Metric::Alignment; };
  return uses(convergence.metric) || std::any_of(metrics.begin(), metrics.end(), uses);
}

bool ExperimentResult::any_diverged() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.diverged; });
}

Oracle make_oracle(const GeneratorConfig& generator, std::uint64_t run_seed, std::int64_t samples) {
  SampleSource source(generator, stream_seed(run_seed, Stream::Oracle));
  const auto batch = source.batch(static_cast<std::size_t>(samples));
  auto eig = eig_sym(sample_covariance(batch));
  return {std::move(eig.eigenvalues), std::move(eig.eigenvectors)};
}

double best_assignment(const Matrix<double>& A, std::vector<Index>* assignment) {
  const Index N = A.rows();
  const Index M = A.cols();
  if (N == 0) return 0.0;
  if (N > M) throw PreconditionError("best_assignment: more rows than columns");
  std::vector<Index> best(static_cast<std::size_t>(N));
  double best_value = -std::numeric_limits<double>::infinity();

  if (N <= 6 && M <= 8) {
    std::vector<Index> current(static_cast<std::size_t>(N));
    std::vector<bool> used(static_cast<std::size_t>(M), false);
    std::function<void(Index, double)> search = [&](Index n, double running_min) {
      if (running_min <= best_value) return;
      if (n == N) {
        best_value = running_min;
        best = current;
        return;
      }
      for (Index m = 0; m < M; ++m) {
        if (used[static_cast<std::size_t>(m)]) continue;
        used[static_cast<std::size_t>(m)] = true;
        current[static_cast<std::size_t>(n)] = m;
        search(n + 1, std::min(running_min, A(n, m)));
        used[static_cast<std::size_t>(m)] = false;
      }
    };
    search(0, std::numeric_limits<double>::infinity());
  } else {
    // Greedy: repeatedly take the largest remaining entry.
    std::vector<bool> row_used(static_cast<std::size_t>(N), false);
    std::vector<bool> col_used(static_cast<std::size_t>(M), false);
    best_value = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < N; ++k) {
      Index bi = -1, bj = -1;
      double bv = -std::numeric_limits<double>::infinity();
      for (Index i = 0; i < N; ++i) {
        if (row_used[static_cast<std::size_t>(i)]) continue;
        for (Index j = 0; j < M; ++j) {
          if (!col_used[static_cast<std::size_t>(j)] && A(i, j) > bv) {
            bv = A(i, j);
            bi = i;
            bj = j;
          }
        }
      }
      row_used[static_cast<std::size_t>(bi)] = col_used[static_cast<std::size_t>(bj)] = true;
      best[static_cast<std::size_t>(bi)] = bj;
      best_value = std::min(best_value, bv);
    }
  }
  if (assignment) *assignment = best;
  return best_value;
}

OracleReport compare_with_oracle(const WeightMatrix<double>& W, const Oracle& oracle) {
  if (W.rows() != oracle.eigenvectors.rows()) throw PreconditionError("compare_with_oracle: dimension mismatch");
  const Index N = W.cols();
  OracleReport report;
  report.eigenvalues = oracle.eigenvalues;
  report.orthonormality = orthonormality_error(W);
  report.principal_angle = principal_angle(W, oracle.eigenvectors.leftCols(N));
  report.alignments = (W.transpose() * oracle.eigenvectors).cwiseAbs();
  report.best_assignment_alignment = best_assignment(report.alignments.leftCols(N), &report.assignment);
  return report;
}

OracleReport compare_with_oracle(const WeightMatrix<double>& W, const SampleBatch<double>& samples) {
  auto eig = eig_sym(sample_covariance(samples));
  return compare_with_oracle(W, Oracle{std::move(eig.eigenvalues), std::move(eig.eigenvectors)});
}

namespace {

struct EvalContext {
  std::optional<Oracle> oracle;
  SampleBatch<double> eval;  // js1m / entropy averages
};

constexpr std::int64_t kEvalSamples = 2000;

double alignment_measure(const WeightMatrix<double>& W, const Oracle& oracle) {
  const Index N = W.cols();
  const Matrix<double> A = (W.transpose() * oracle.eigenvectors.leftCols(N)).cwiseAbs();
  return best_assignment(A);
}

double angle_measure(const WeightMatrix<double>& W, const Oracle& oracle) {
  try {
    return principal_angle(W, oracle.eigenvectors.leftCols(W.cols()));
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double metric_value(Metric m, const WeightMatrix<double>& W, const EvalContext& ctx) {
  switch (m) {
    case Metric::Orthonormality:
      return orthonormality_error(W);
    case Metric::PrincipalAngle:
      return angle_measure(W, *ctx.oracle);
    case Metric::Alignment:
      return alignment_measure(W, *ctx.oracle);
    case Metric::Js1mCost: {
      double sum = 0.0;
      for (const auto& x : ctx.eval) {
        const double d = x.energy() - (W.transpose() * x.values()).squaredNorm();
        sum += d * d;
      }
      return sum / static_cast<double>(ctx.eval.size());
    }
    case Metric::SubspaceEntropy: {
      double sum = 0.0;
      std::size_t used = 0;
      for (const auto& x : ctx.eval) {
        if (!(x.energy() > 0.0)) continue;
        sum += detail::subspace_entropy_raw(W, x.values(), x.energy());
        ++used;
      }
      return used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double convergence_measure(const ConvergenceRule& rule, const WeightMatrix<double>& W, const EvalContext& ctx) {
  if (rule.metric == Metric::Orthonormality) return orthonormality_defect(W);
  return metric_value(rule.metric, W, ctx);
}

// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, std::uint64_t run_seed) {
  config.validate();
  RunResult result;
  result.seed = run_seed;

  EvalContext ctx;
  const bool needs_eval = std::any_of(config.metrics.begin(), config.metrics.end(), [](Metric m) {
    return m == Metric::Js1mCost || m == Metric::SubspaceEntropy;
  }) || config.convergence.metric == Metric::Js1mCost || config.convergence.metric == Metric::SubspaceEntropy;
  if (config.needs_oracle()) ctx.oracle = make_oracle(config.generator, run_seed, config.oracle_samples);
  if (needs_eval) {
    SampleSource eval_source(config.generator, stream_seed(run_seed, Stream::Oracle));
    ctx.eval = eval_source.batch(static_cast<std::size_t>(std::max<std::int64_t>(1, std::min(config.oracle_samples, kEvalSamples))));
  }

  SampleSource source(config.generator, stream_seed(run_seed, Stream::Data));
  auto state = make_state(init_weights(config.learner.K, config.learner.N, stream_seed(run_seed, Stream::Weights)),
                          config.learner.schedule);

  auto record = [&](const WeightMatrix<double>& W, std::int64_t iteration) {
    TrajectoryRecord r{iteration, run_seed, {}};
    r.values.reserve(config.metrics.size());
    for (Metric m : config.metrics) r.values.push_back(metric_value(m, W, ctx));
    result.records.push_back(std::move(r));
    if (!result.convergence_iteration && config.convergence.passed(convergence_measure(config.convergence, W, ctx))) {
      result.convergence_iteration = iteration;
    }
  };

  record(state.W, 0);
  try {
    while (state.iteration < config.iterations) {
      state = learner_step(config.learner, std::move(state), source.next());
      if (state.iteration % config.record_every == 0 || state.iteration == config.iterations) {
        record(state.W, state.iteration);
      }
    }
    result.skipped = state.skipped;
    result.W = std::move(state.W);
  } catch (const LearnerDiverged& e) {
    result.diverged = true;
    result.diverged_at = e.iteration();
  }
  result.final_values = result.records.back().values;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  ExperimentResult out{config, std::vector<RunResult>(static_cast<std::size_t>(config.repeats))};
  parallel_for(out.runs.size(), jobs,
               [&](std::size_t r) { out.runs[r] = run_single(config, config.seed + static_cast<std::uint64_t>(r)); });
  return out;
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::Pf: return "pf";
    case SweepParameter::Lf: return "lf";
    case SweepParameter::B: return "b";
    case SweepParameter::Mu: return "mu";
    case SweepParameter::EnergyScale: return "energy_scale";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(const std::string& text) {
  for (auto p : {SweepParameter::Pf, SweepParameter::Lf, SweepParameter::B, SweepParameter::Mu,
                 SweepParameter::EnergyScale}) {
    if (to_string(p) == text) return p;
  }
  throw PreconditionError("unknown sweep parameter '" + text + "' (expected pf, lf, b, mu or energy_scale)");
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepParameter param, double value) {
  ExperimentConfig c = base;
  switch (param) {
    case SweepParameter::Pf:
      c.generator.pf = value;
      break;
    case SweepParameter::Lf:
      c.learner.schedule.gamma0 *= value;
      break;
    case SweepParameter::B:
      c.learner.b = value;
      if (c.learner.divergence.tag == DivergenceTag::Bach) c.learner.divergence = DivergenceKind::bach(value);
      break;
    case SweepParameter::Mu:
      c.learner.mu = value;
      break;
    case SweepParameter::EnergyScale:
      c.generator.energy_scale = value;
      break;
  }
  c.name = base.name + "_" + to_string(param) + format_value(value);
  return c;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, SweepParameter param,
                                 const std::vector<double>& values, int jobs) {
  std::vector<SweepCell> cells;
  cells.reserve(values.size());
  for (double v : values) {
    ExperimentConfig c = apply_sweep_value(base, param, v);
    c.validate();
    cells.push_back({v, ExperimentResult{c, std::vector<RunResult>(static_cast<std::size_t>(c.repeats))}});
  }
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t r = 0; r < cells[i].result.runs.size(); ++r) tasks.emplace_back(i, r);
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    auto [i, r] = tasks[t];
    const auto& c = cells[i].result.config;
    cells[i].result.runs[r] = run_single(c, c.seed + static_cast<std::uint64_t>(r));
  });
  return cells;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::optional<double> median_convergence(const ExperimentResult& result) {
  std::vector<double> its;
  bool any = false;
  for (const auto& r : result.runs) {
    if (r.convergence_iteration && !r.diverged) {
      its.push_back(static_cast<double>(*r.convergence_iteration));
      any = true;
    } else {
      its.push_back(static_cast<double>(result.config.iterations + 1));
    }
  }
  if (!any) return std::nullopt;
  return median(std::move(its));
}

std::optional<double> median_final(const ExperimentResult& result, Metric metric) {
  const auto& ms = result.config.metrics;
  const auto it = std::find(ms.begin(), ms.end(), metric);
  if (it == ms.end()) return std::nullopt;
  const auto k = static_cast<std::size_t>(it - ms.begin());
  std::vector<double> v;
  for (const auto& r : result.runs) {
    if (!r.diverged) v.push_back(r.final_values[k]);
  }
  if (v.empty()) return std::nullopt;
  return median(std::move(v));
}

std::string format_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

void write_trajectory_csv(std::ostream& out, const ExperimentConfig& config, const RunResult& run) {
  out << "iteration,seed,metric,value\n";
  for (const auto& rec : run.records) {
    for (std::size_t k = 0; k < config.metrics.size(); ++k) {
      out << rec.iteration << ',' << rec.seed << ',' << to_string(config.metrics[k]) << ','
          << format_value(rec.values[k]) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "seed,diverged,diverged_at,convergence_iteration,skipped";
  for (Metric m : result.config.metrics) out << ",final_" << to_string(m);
  out << '\n';
  for (const auto& r : result.runs) {
    out << r.seed << ',' << (r.diverged ? 1 : 0) << ',' << r.diverged_at << ',';
    if (r.convergence_iteration) out << *r.convergence_iteration;
    out << ',' << r.skipped;
    for (double v : r.final_values) out << ',' << format_value(v);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, SweepParameter param, const std::vector<SweepCell>& cells) {
  out << "name," << to_string(param) << ",repeats,diverged,converged,median_convergence_iteration";
  if (!cells.empty()) {
    for (Metric m : cells.front().result.config.metrics) out << ",median_final_" << to_string(m);
  }
  out << '\n';
  for (const auto& cell : cells) {
    const auto& res = cell.result;
    const auto diverged = std::count_if(res.runs.begin(), res.runs.end(), [](const RunResult& r) { return r.diverged; });
    const auto converged = std::count_if(res.runs.begin(), res.runs.end(), [](const RunResult& r) {
      return !r.diverged && r.convergence_iteration.has_value();
    });
    out << res.config.name << ',' << format_value(cell.value) << ',' << res.runs.size() << ',' << diverged << ','
        << converged << ',';
    if (auto m = median_convergence(res)) out << format_value(*m);
    for (Metric m : res.config.metrics) {
      out << ',';
      if (auto v = median_final(res, m)) out << format_value(*v);
    }
    out << '\n';
  }
}

namespace {

std::string write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  body(f);
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
  return path.string();
}

}  // namespace

std::vector<std::string> write_experiment(const std::string& dir, const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  const auto& name = result.config.name;
  for (const auto& run : result.runs) {
    paths.push_back(write_file(std::filesystem::path(dir) / (name + "_" + std::to_string(run.seed) + ".csv"),
                               [&](std::ostream& o) { write_trajectory_csv(o, result.config, run); }));
  }
  paths.push_back(write_file(std::filesystem::path(dir) / (name + "_summary.csv"),
                             [&](std::ostream& o) { write_summary_csv(o, result); }));
  return paths;
}

std::vector<std::string> write_sweep(const std::string& dir, const ExperimentConfig& base, SweepParameter param,
                                     const std::vector<SweepCell>& cells) {
  std::vector<std::string> paths;
  for (const auto& cell : cells) {
    auto p = write_experiment(dir, cell.result);
    paths.insert(paths.end(), p.begin(), p.end());
  }
  std::filesystem::create_directories(dir);
  paths.push_back(write_file(std::filesystem::path(dir) / (base.name + "_" + to_string(param) + "_sweep.csv"),
                             [&](std::ostream& o) { write_sweep_csv(o, param, cells); }));
  return paths;
}

}  // namespace born_psa

#include "born_psa/config_io.hpp"
#include "born_psa/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace born_psa;
using Mat = Matrix<double>;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.learner.K = 4;
  c.learner.N = 2;
  c.learner.schedule = {2.7, 1000, 16.0};
  c.iterations = 2000;
  c.record_every = 250;
  c.metrics = {Metric::Orthonormality, Metric::PrincipalAngle, Metric::Js1mCost, Metric::SubspaceEntropy};
  c.repeats = 3;
  c.oracle_samples = 5000;
  return c;
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  for (const auto& run : r.runs) write_trajectory_csv(out, r.config, run);
  write_summary_csv(out, r);
  return out.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = small_config();
  c.record_every = 5000;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = small_config();
  c.repeats = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = small_config();
  c.learner.K = 5;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("records land on the stride and the final iteration") {
  auto c = small_config();
  c.iterations = 1100;
  c.repeats = 1;
  const auto r = run_single(c, 1);
  std::vector<std::int64_t> its;
  for (const auto& rec : r.records) its.push_back(rec.iteration);
  CHECK(its == std::vector<std::int64_t>{0, 250, 500, 750, 1000, 1100});
  CHECK(r.final_values == r.records.back().values);
  CHECK_FALSE(r.diverged);
}

TEST_CASE("identical config and seed give byte-identical CSV; jobs do not matter") {
  const auto c = small_config();
  const auto a = csv_of(run_experiment(c, 1));
  CHECK(a == csv_of(run_experiment(c, 1)));
  CHECK(a == csv_of(run_experiment(c, 3)));
  auto other = c;
  other.seed = 2;
  CHECK(a != csv_of(run_experiment(other, 1)));
}

TEST_CASE("sweeps") {
  const auto c = small_config();
  CHECK(run_sweep(c, SweepParameter::Lf, {}).empty());

  const auto cells1 = run_sweep(c, SweepParameter::Pf, {1.0, 2.0}, 1);
  const auto cells2 = run_sweep(c, SweepParameter::Pf, {1.0, 2.0}, 2);
  std::ostringstream s1, s2;
  write_sweep_csv(s1, SweepParameter::Pf, cells1);
  write_sweep_csv(s2, SweepParameter::Pf, cells2);
  CHECK(s1.str() == s2.str());
  REQUIRE(cells1.size() == 2);
  CHECK(csv_of(cells1[1].result) == csv_of(cells2[1].result));

  const auto lf = apply_sweep_value(c, SweepParameter::Lf, 0.5);
  CHECK(lf.learner.schedule.gamma0 == doctest::Approx(1.35));
  CHECK(lf.name == "small_lf0.5");
  CHECK(apply_sweep_value(c, SweepParameter::Pf, 3).generator.pf == 3.0);
  CHECK(apply_sweep_value(c, SweepParameter::EnergyScale, 0.01).generator.energy_scale == 0.01);
  for (auto p : {SweepParameter::Pf, SweepParameter::Lf, SweepParameter::B, SweepParameter::Mu,
                 SweepParameter::EnergyScale}) {
    CHECK(parse_sweep_parameter(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_sweep_parameter("gamma"), PreconditionError);
}

TEST_CASE("compare_with_oracle") {
  GeneratorConfig gen;
  const auto oracle = make_oracle(gen, 7, 20000);
  const Mat U = oracle.eigenvectors.leftCols(4);
  auto report = compare_with_oracle(U, oracle);
  CHECK(report.principal_angle < 1e-12);
  CHECK(report.best_assignment_alignment == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((report.alignments - Mat::Identity(4, 4)).norm() < 1e-12);

  Mat P = Mat::Zero(4, 4);
  P.col(0) = U.col(2);
  P.col(1) = -U.col(0);
  P.col(2) = U.col(3);
  P.col(3) = U.col(1);
  report = compare_with_oracle(P, oracle);
  CHECK(report.best_assignment_alignment == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.assignment == std::vector<Index>{2, 0, 3, 1});

  const auto batch = SampleSource(gen, stream_seed(7, Stream::Oracle)).batch(20000);
  CHECK(compare_with_oracle(U.leftCols(2), batch).principal_angle < 1e-12);
}

TEST_CASE("best_assignment") {
  Mat A(2, 3);
  A << 0.9, 0.95, 0.1,
       0.2, 0.96, 0.3;
  std::vector<Index> sigma;
  CHECK(best_assignment(A, &sigma) == doctest::Approx(0.9));
  CHECK(sigma == std::vector<Index>{0, 1});
  CHECK_THROWS_AS(best_assignment(Mat(3, 2)), PreconditionError);
}

TEST_CASE("summaries") {
  auto c = small_config();
  c.convergence = {Metric::PrincipalAngle, 10.0};
  const auto r = run_experiment(c);
  REQUIRE(median_convergence(r));
  CHECK(*median_convergence(r) == 0.0);
  c.convergence = {Metric::PrincipalAngle, 1e-30};
  CHECK_FALSE(median_convergence(run_experiment(c)));
  CHECK(median_final(r, Metric::Orthonormality));
  CHECK_FALSE(median_final(r, Metric::Alignment));
  CHECK(format_value(0.1) == "0.1");
  CHECK(format_value(std::nan("")) == "nan");
}

TEST_CASE("divergent runs are reported, not thrown") {
  auto c = small_config();
  c.learner.schedule = {1e6, 0, 16.0};
  const auto r = run_experiment(c);
  CHECK(r.any_diverged());
  CHECK(r.runs[0].diverged_at >= 0);
  CHECK_FALSE(r.runs[0].records.empty());
}

TEST_CASE("write_experiment names its files") {
  const auto dir = std::filesystem::temp_directory_path() / "born_psa_harness_test";
  std::filesystem::remove_all(dir);
  auto c = small_config();
  c.repeats = 2;
  c.seed = 5;
  const auto paths = write_experiment(dir.string(), run_experiment(c));
  CHECK(paths.size() == 3);
  CHECK(std::filesystem::exists(dir / "small_5.csv"));
  CHECK(std::filesystem::exists(dir / "small_6.csv"));
  CHECK(std::filesystem::exists(dir / "small_summary.csv"));
  const auto text = slurp(dir / "small_5.csv");
  CHECK(text.rfind("iteration,seed,metric,value\n", 0) == 0);
  CHECK(text.find("0,5,orthonormality,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config JSON round-trip") {
  auto c = small_config();
  c.learner.algorithm = Algorithm::TohmPca;
  c.learner.N = 4;
  c.learner.mu = 0.005;
  c.generator.pf = 2.0;
  c.convergence = {Metric::Alignment, 0.99};
  c.metrics = {Metric::Alignment};
  const auto back = experiment_from_json(to_json(c)).config;
  CHECK(to_json(back) == to_json(c));
  CHECK(back.learner.mu == 0.005);
  CHECK(back.convergence.metric == Metric::Alignment);

  auto j = to_json(c);
  j["iteraitons"] = 5;
  CHECK_THROWS_AS(experiment_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_experiment("definitely_missing.json"), ConfigError);
  try {
    load_experiment("definitely_missing.json");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("definitely_missing.json") != std::string::npos);
  }
}

TEST_CASE("every bundled figure config validates at both scales") {
  const auto ids = bundled_figure_ids();
  CHECK(ids.size() == 17);
  for (const auto& id : ids) {
    CAPTURE(id);
    for (bool desk : {false, true}) {
      const auto fig = bundled_figure(id, desk);
      CHECK(fig.id == id);
      CHECK_FALSE(fig.experiments.empty());
      for (const auto& e : fig.experiments) CHECK_NOTHROW(e.config.validate());
    }
  }
  CHECK(bundled_figure("fig5", true).experiments[0].config.repeats == 3);
  CHECK(bundled_figure("fig5", false).experiments[0].config.repeats == 20);
  CHECK_THROWS_AS(bundled_figure("fig3"), ConfigError);
}

TEST_CASE("orthonormality trajectory of MHO decreases in window medians") {
  auto spec = bundled_figure("fig5", true).experiments[0];
  auto c = spec.config;
  c.repeats = 1;
  c.record_every = 100;
  const auto run = run_single(c, c.seed);
  REQUIRE_FALSE(run.diverged);
  // Median of the log error over consecutive 1000-iteration windows.
  std::vector<double> medians;
  for (std::size_t start = 1; start + 10 <= run.records.size(); start += 10) {
    std::vector<double> w;
    for (std::size_t i = start; i < start + 10; ++i) w.push_back(run.records[i].values[0]);
    std::nth_element(w.begin(), w.begin() + 5, w.end());
    medians.push_back(w[5]);
  }
  REQUIRE(medians.size() >= 20);
  CHECK(medians.back() < medians.front());
  // Once W is orthonormal to rounding precision the medians plateau.
  CHECK(medians.back() <= medians[medians.size() / 2]);
  CHECK(medians[medians.size() / 2] < medians.front());
}

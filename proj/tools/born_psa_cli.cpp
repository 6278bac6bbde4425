// born-psa: run experiments, sweeps and bundled figure setups; check gradients.
//
// Exit codes: 0 success, 1 usage or config error, 2 learner divergence in a
// non-sweep run, 3 gradcheck failure.

#include "born_psa/config_io.hpp"
#include "born_psa/gradcheck.hpp"
#include "born_psa/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace born_psa;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitGradcheck = 3;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

std::string output_dir(const GlobalOptions& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("BORN_PSA_OUT"); env && *env) return env;
  return "results";
}

void apply_globals(ExperimentConfig& c, const GlobalOptions& g) {
  if (g.seed) c.seed = *g.seed;
}

void print_summary(const ExperimentResult& r) {
  const auto diverged = std::count_if(r.runs.begin(), r.runs.end(), [](const RunResult& x) { return x.diverged; });
  const auto converged = std::count_if(r.runs.begin(), r.runs.end(), [](const RunResult& x) {
    return !x.diverged && x.convergence_iteration.has_value();
  });
  std::cout << r.config.name << ": runs=" << r.runs.size() << " diverged=" << diverged << " converged=" << converged;
  if (auto m = median_convergence(r)) std::cout << " median_convergence=" << format_value(*m);
  for (Metric m : r.config.metrics) {
    if (auto v = median_final(r, m)) std::cout << " final_" << to_string(m) << "=" << format_value(*v);
  }
  std::cout << '\n';
}

// Runs one experiment spec (sweep or plain); returns true if a plain run diverged.
bool execute(const ExperimentSpec& spec, const GlobalOptions& g, const std::string& dir) {
  ExperimentConfig config = spec.config;
  apply_globals(config, g);
  if (spec.sweep) {
    const auto cells = run_sweep(config, spec.sweep->param, spec.sweep->values, g.jobs);
    for (const auto& cell : cells) print_summary(cell.result);
    const auto paths = write_sweep(dir, config, spec.sweep->param, cells);
    std::cout << "wrote " << paths.size() << " files to " << dir << '\n';
    return false;
  }
  const auto result = run_experiment(config, g.jobs);
  print_summary(result);
  const auto paths = write_experiment(dir, result);
  std::cout << "wrote " << paths.size() << " files to " << dir << '\n';
  return result.any_diverged();
}

int cmd_gradcheck() {
  bool ok = true;
  for (const auto& r : run_gradchecks()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(14) << r.name << " cases=" << r.cases
              << " max_rel_err=" << format_value(r.max_relative_error) << " tol=" << format_value(r.tolerance)
              << '\n';
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitGradcheck;
}

int cmd_oracle(const ExperimentSpec& spec, const GlobalOptions& g) {
  ExperimentConfig c = spec.config;
  apply_globals(c, g);
  const auto oracle = make_oracle(c.generator, c.seed, std::max<std::int64_t>(1, c.oracle_samples));
  const auto W0 = init_weights(c.learner.K, c.learner.N, stream_seed(c.seed, Stream::Weights));
  const auto report = compare_with_oracle(W0, oracle);
  nlohmann::json out;
  out["name"] = c.name;
  out["seed"] = c.seed;
  out["oracle_samples"] = c.oracle_samples;
  out["eigenvalues"] = std::vector<double>(oracle.eigenvalues.data(), oracle.eigenvalues.data() + oracle.eigenvalues.size());
  nlohmann::json vecs = nlohmann::json::array();
  for (Index n = 0; n < c.learner.N; ++n) {
    const Vector<double> u = oracle.eigenvectors.col(n);
    vecs.push_back(std::vector<double>(u.data(), u.data() + u.size()));
  }
  out["top_eigenvectors"] = vecs;
  out["initial_weights"] = {{"principal_angle", report.principal_angle},
                            {"orthonormality", report.orthonormality},
                            {"best_assignment_alignment", report.best_assignment_alignment}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Born-rule probabilistic PSA: experiments and checks"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base run seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory (default: $BORN_PSA_OUT or ./results)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string config_path;
  bool desk = false;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_flag("--desk", desk, "Apply the config's desk-scale overrides");

  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Run a config once per parameter value");
  sweep->add_option("config", config_path, "Base experiment config (JSON)")->required();
  sweep->add_option("--param", param, "pf, lf, b, mu or energy_scale")->required();
  sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');
  sweep->add_flag("--desk", desk, "Apply the config's desk-scale overrides");

  auto* oracle = app.add_subcommand("oracle", "Print the ground-truth eigen-report for a config");
  oracle->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string figure_id;
  auto* figures = app.add_subcommand("figures", "Run a bundled figure setup (fig4 ... fig20, or 'all' / 'list')");
  figures->add_option("id", figure_id, "Figure id")->required();
  figures->add_flag("--desk", desk, "Reduced (desk) scale");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of the analytic update directions");

  // Global flags are accepted after the subcommand as well.
  for (auto* sub : {run, sweep, oracle, figures, gradcheck}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*gradcheck) return cmd_gradcheck();
    const std::string dir = output_dir(g);
    if (*run) {
      const auto spec = load_experiment(config_path, desk);
      ExperimentSpec plain{spec.config, std::nullopt};
      return execute(plain, g, dir) ? kExitDiverged : kExitOk;
    }
    if (*sweep) {
      auto spec = load_experiment(config_path, desk);
      spec.sweep = SweepSpec{parse_sweep_parameter(param), values};
      execute(spec, g, dir);
      return kExitOk;
    }
    if (*oracle) return cmd_oracle(load_experiment(config_path), g);
    if (*figures) {
      if (figure_id == "list") {
        for (const auto& id : bundled_figure_ids()) {
          std::cout << id << "  " << bundled_figure(id).description << '\n';
        }
        return kExitOk;
      }
      std::vector<std::string> ids = figure_id == "all" ? bundled_figure_ids() : std::vector<std::string>{figure_id};
      bool diverged = false;
      for (const auto& id : ids) {
        const auto fig = bundled_figure(id, desk);
        std::cout << "== " << fig.id << ": " << fig.description << '\n';
        for (const auto& spec : fig.experiments) diverged = execute(spec, g, dir) || diverged;
      }
      return diverged ? kExitDiverged : kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

#pragma once

// JSON encoding of experiment configs and the bundled figure setups.
//
// An experiment file is one JSON object:
//
//   {
//     "name": "a2_pf1", "seed": 1, "iterations": 25000, "record_every": 100,
//     "repeats": 20, "oracle_samples": 25000,
//     "metrics": ["orthonormality", "principal_angle"],
//     "convergence": {"metric": "principal_angle", "threshold": 0.1},
//     "generator": {"kind": "gaussian_shell", "K": 4, "stddevs": [1, 0.8, 0.6, 0.4],
//                   "pf": 1, "half_range": 0.5, "dominant": 0, "energy_scale": 1},
//     "learner": {"algorithm": "divergence_psa", "N": 4, "divergence": "qvar",
//                 "gamma0": 21.6, "decay_at": 12000, "decay_factor": 16,
//                 "b": 0.025, "bach_full_rule": false, "mu": 0.1, "tohm_projection": "tangent"},
//     "sweep": {"param": "pf", "values": [1, 2, 3, 4, 5]},
//     "desk": { ...fields merged over this object when running at desk scale... }
//   }
//
// Every field except "generator" and "learner" has a default; unknown keys are
// rejected so typos surface as errors. A figure file holds
// {"id": ..., "description": ..., "experiments": [experiment, ...]}.

#include "born_psa/harness.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace born_psa {

/// Malformed or invalid configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  SweepParameter param = SweepParameter::Pf;
  std::vector<double> values;
};

struct ExperimentSpec {
  ExperimentConfig config;
  std::optional<SweepSpec> sweep;
};

struct FigureSpec {
  std::string id;
  std::string description;
  std::vector<ExperimentSpec> experiments;
};

/// Parses one experiment object; `desk` merges its "desk" patch first.
ExperimentSpec experiment_from_json(const nlohmann::json& j, bool desk = false);
nlohmann::json to_json(const ExperimentConfig& config);

/// Reads and validates an experiment file. Errors name the file.
ExperimentSpec load_experiment(const std::string& path, bool desk = false);

FigureSpec figure_from_json(const nlohmann::json& j, bool desk = false);

/// Ids of the bundled figure configs (fig4 ... fig20).
std::vector<std::string> bundled_figure_ids();
/// Raw JSON text of a bundled figure config; ConfigError for unknown ids.
const std::string& bundled_figure_text(const std::string& id);
FigureSpec bundled_figure(const std::string& id, bool desk = false);

}  // namespace born_psa

#include "born_psa/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace born_psa {

namespace detail {
// Defined in the generated figure table (configs/figures/*.json).
const std::vector<std::pair<std::string, std::string>>& bundled_figure_table();
}  // namespace detail

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

GeneratorConfig generator_from_json(const json& j) {
  const std::string where = "generator";
  reject_unknown(j, {"kind", "K", "stddevs", "pf", "half_range", "dominant", "energy_scale"}, where);
  GeneratorConfig g;
  std::string kind = to_string(g.kind);
  read(j, "kind", kind, where);
  g.kind = parse_generator_kind(kind);
  read(j, "K", g.K, where);
  if (j.contains("stddevs") && j.at("stddevs").is_array()) {
    read(j, "stddevs", g.stddevs, where);
  } else if (j.contains("stddevs")) {
    // {"from": a, "to": b} spreads K values linearly.
    const auto& s = j.at("stddevs");
    reject_unknown(s, {"from", "to"}, where + ".stddevs");
    const double from = s.at("from").get<double>();
    const double to = s.at("to").get<double>();
    g.stddevs.resize(static_cast<std::size_t>(g.K));
    for (Index i = 0; i < g.K; ++i) {
      g.stddevs[static_cast<std::size_t>(i)] =
          g.K == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(g.K - 1);
    }
  }
  if (!j.contains("stddevs") && g.kind == GeneratorKind::GaussianShell && g.K != 4) {
    throw ConfigError(where + ": stddevs are required when K != 4");
  }
  read(j, "pf", g.pf, where);
  read(j, "half_range", g.half_range, where);
  read(j, "dominant", g.dominant, where);
  read(j, "energy_scale", g.energy_scale, where);
  return g;
}

LearnerConfig learner_from_json(const json& j, Index K) {
  const std::string where = "learner";
  reject_unknown(j,
                 {"algorithm", "N", "divergence", "gamma0", "decay_at", "decay_factor", "b", "bach_full_rule", "mu",
                  "tohm_projection"},
                 where);
  LearnerConfig l;
  l.K = K;
  l.N = K;
  std::string algorithm = to_string(l.algorithm);
  read(j, "algorithm", algorithm, where);
  l.algorithm = parse_algorithm(algorithm);
  read(j, "N", l.N, where);
  std::string divergence = to_string(l.divergence);
  read(j, "divergence", divergence, where);
  l.divergence = parse_divergence(divergence);
  read(j, "gamma0", l.schedule.gamma0, where);
  read(j, "decay_at", l.schedule.decay_at, where);
  read(j, "decay_factor", l.schedule.decay_factor, where);
  read(j, "b", l.b, where);
  read(j, "bach_full_rule", l.bach_full_rule, where);
  read(j, "mu", l.mu, where);
  std::string projection = to_string(l.tohm_projection);
  read(j, "tohm_projection", projection, where);
  l.tohm_projection = parse_entropy_projection(projection);
  return l;
}

}  // namespace

ExperimentSpec experiment_from_json(const json& input, bool desk) {
  json j = input;
  if (!j.is_object()) throw ConfigError("experiment: expected an object");
  if (desk && j.contains("desk")) j.merge_patch(j.at("desk"));
  j.erase("desk");
  const std::string where = "experiment";
  reject_unknown(j,
                 {"name", "seed", "iterations", "record_every", "repeats", "oracle_samples", "metrics", "convergence",
                  "generator", "learner", "sweep", "description"},
                 where);
  if (!j.contains("generator")) throw ConfigError("experiment: missing 'generator'");
  if (!j.contains("learner")) throw ConfigError("experiment: missing 'learner'");

  ExperimentSpec spec;
  auto& c = spec.config;
  try {
    read(j, "name", c.name, where);
    read(j, "seed", c.seed, where);
    read(j, "iterations", c.iterations, where);
    read(j, "record_every", c.record_every, where);
    read(j, "repeats", c.repeats, where);
    read(j, "oracle_samples", c.oracle_samples, where);
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& m : j.at("metrics")) c.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    if (j.contains("convergence")) {
      const auto& cv = j.at("convergence");
      reject_unknown(cv, {"metric", "threshold"}, "convergence");
      std::string metric = to_string(c.convergence.metric);
      read(cv, "metric", metric, "convergence");
      c.convergence.metric = parse_metric(metric);
      read(cv, "threshold", c.convergence.threshold, "convergence");
    }
    c.generator = generator_from_json(j.at("generator"));
    c.learner = learner_from_json(j.at("learner"), c.generator.K);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      reject_unknown(s, {"param", "values"}, "sweep");
      SweepSpec sweep;
      sweep.param = parse_sweep_parameter(s.at("param").get<std::string>());
      sweep.values = s.at("values").get<std::vector<double>>();
      spec.sweep = std::move(sweep);
    }
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

json to_json(const ExperimentConfig& c) {
  json metrics = json::array();
  for (Metric m : c.metrics) metrics.push_back(to_string(m));
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"iterations", c.iterations},
      {"record_every", c.record_every},
      {"repeats", c.repeats},
      {"oracle_samples", c.oracle_samples},
      {"metrics", metrics},
      {"convergence", {{"metric", to_string(c.convergence.metric)}, {"threshold", c.convergence.threshold}}},
      {"generator",
       {{"kind", to_string(c.generator.kind)},
        {"K", c.generator.K},
        {"stddevs", c.generator.stddevs},
        {"pf", c.generator.pf},
        {"half_range", c.generator.half_range},
        {"dominant", c.generator.dominant},
        {"energy_scale", c.generator.energy_scale}}},
      {"learner",
       {{"algorithm", to_string(c.learner.algorithm)},
        {"N", c.learner.N},
        {"divergence", to_string(c.learner.divergence)},
        {"gamma0", c.learner.schedule.gamma0},
        {"decay_at", c.learner.schedule.decay_at},
        {"decay_factor", c.learner.schedule.decay_factor},
        {"b", c.learner.b},
        {"bach_full_rule", c.learner.bach_full_rule},
        {"mu", c.learner.mu},
        {"tohm_projection", to_string(c.learner.tohm_projection)}}},
  };
}

ExperimentSpec load_experiment(const std::string& path, bool desk) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return experiment_from_json(j, desk);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

FigureSpec figure_from_json(const json& j, bool desk) {
  reject_unknown(j, {"id", "description", "experiments"}, "figure");
  FigureSpec fig;
  fig.id = j.at("id").get<std::string>();
  fig.description = j.value("description", "");
  for (const auto& e : j.at("experiments")) fig.experiments.push_back(experiment_from_json(e, desk));
  return fig;
}

std::vector<std::string> bundled_figure_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : detail::bundled_figure_table()) ids.push_back(id);
  return ids;
}

const std::string& bundled_figure_text(const std::string& id) {
  for (const auto& [fid, text] : detail::bundled_figure_table()) {
    if (fid == id) return text;
  }
  throw ConfigError("unknown figure '" + id + "'");
}

FigureSpec bundled_figure(const std::string& id, bool desk) {
  try {
    return figure_from_json(json::parse(bundled_figure_text(id)), desk);
  } catch (const json::exception& e) {
    throw ConfigError(id + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(id + ": " + e.what());
  }
}

}  // namespace born_psa

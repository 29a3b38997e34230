#include "finde/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "finde/errors.hpp"

namespace finde {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.count(it.key()) == 0)
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for \"" + key + "\" in " + where);
  }
}

long positive_long(const json& j, const std::string& key, long fallback,
                   const std::string& where) {
  const long v = get_or<long>(j, key, fallback, where);
  if (v < 1) throw ConfigError("\"" + key + "\" in " + where + " must be >= 1");
  return v;
}

}  // namespace

std::vector<std::string> analytic_names_for(SystemKind kind) {
  switch (kind) {
    case SystemKind::MassSpring: return {"E"};
    case SystemKind::TwoBody: return {"H", "p_x", "p_y", "L"};
    case SystemKind::DoublePendulum: return {"H"};
    case SystemKind::FitzHughNagumo: return {"I", "E"};
    case SystemKind::Kdv: return {"mass", "H"};
  }
  throw std::logic_error("bad SystemKind");
}

std::vector<AnalyticInvariant> resolve_analytic(SystemKind kind,
                                                const std::vector<std::string>& names) {
  if (names.empty()) return {};
  // the double-pendulum catalog needs rod lengths; only its H entry is
  // series-independent, so build against dummy lengths and keep just that
  json meta = json::object();
  if (kind == SystemKind::DoublePendulum) meta = {{"l1", 1.0}, {"l2", 1.0}};
  const std::vector<AnalyticInvariant> catalog = invariant_catalog(kind, meta);
  const std::vector<std::string> allowed = analytic_names_for(kind);

  std::vector<AnalyticInvariant> out;
  for (const std::string& name : names) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      std::string hint;
      for (const std::string& a : allowed) hint += (hint.empty() ? "" : ", ") + a;
      throw ConfigError("analytic invariant \"" + name + "\" is not usable for " +
                        system_kind_name(kind) +
                        " (series-independent options: " + hint + ")");
    }
    const auto hit =
        std::find_if(catalog.begin(), catalog.end(),
                     [&](const AnalyticInvariant& inv) { return inv.name == name; });
    out.push_back(*hit);
  }
  return out;
}

RunConfig parse_run_config(const json& j) {
  require_object(j, "config");
  reject_unknown(j, "config",
                 {"system", "model", "finde", "integrator", "train", "eval",
                  "paths", "seed", "scale", "sweep", "demo"});
  RunConfig cfg;

  if (j.contains("system")) {
    cfg.system = system_kind_from_name(get_or<std::string>(j, "system", "", "config"));
    cfg.has_system = true;
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    require_object(m, "model");
    reject_unknown(m, "model",
                   {"base", "arch", "K", "analytic_invariants", "hidden", "layers",
                    "conv_hidden"});
    cfg.model.base = base_kind_from_name(get_or<std::string>(m, "base", "node", "model"));
    cfg.model.arch = arch_kind_from_name(get_or<std::string>(m, "arch", "mlp", "model"));
    cfg.model.k_learned = get_or<long>(m, "K", 0, "model");
    if (cfg.model.k_learned < 0) throw ConfigError("\"K\" in model must be >= 0");
    cfg.model.hidden = positive_long(m, "hidden", cfg.model.hidden, "model");
    cfg.model.layers = positive_long(m, "layers", cfg.model.layers, "model");
    cfg.model.conv_hidden = positive_long(m, "conv_hidden", cfg.model.conv_hidden, "model");
    if (m.contains("analytic_invariants")) {
      if (!m.at("analytic_invariants").is_array())
        throw ConfigError("\"analytic_invariants\" in model must be an array of names");
      for (const json& v : m.at("analytic_invariants")) {
        if (!v.is_string())
          throw ConfigError("\"analytic_invariants\" in model must be an array of names");
        cfg.analytic_names.push_back(v.get<std::string>());
      }
    }
  }

  cfg.finde = train_mode_from_name(get_or<std::string>(j, "finde", "none", "config"));
  cfg.integrator =
      stepper_kind_from_name(get_or<std::string>(j, "integrator", "rk4", "config"));

  if (j.contains("train")) {
    const json& t = j.at("train");
    require_object(t, "train");
    reject_unknown(t, "train", {"iterations", "batch", "lr0", "checkpoint_every"});
    cfg.train.iterations = positive_long(t, "iterations", cfg.train.iterations, "train");
    cfg.train.batch = positive_long(t, "batch", cfg.train.batch, "train");
    cfg.train.lr0 = get_or<double>(t, "lr0", cfg.train.lr0, "train");
    if (!(cfg.train.lr0 > 0)) throw ConfigError("\"lr0\" in train must be > 0");
    cfg.train.checkpoint_every =
        get_or<long>(t, "checkpoint_every", cfg.train.checkpoint_every, "train");
    if (cfg.train.checkpoint_every < 0)
      throw ConfigError("\"checkpoint_every\" in train must be >= 0");
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    require_object(e, "eval");
    reject_unknown(e, "eval",
                   {"vpt_threshold", "shift_window", "integrator", "train_series"});
    cfg.eval.vpt_threshold =
        get_or<double>(e, "vpt_threshold", cfg.eval.vpt_threshold, "eval");
    if (!(cfg.eval.vpt_threshold > 0))
      throw ConfigError("\"vpt_threshold\" in eval must be > 0");
    cfg.eval.shift_window = get_or<long>(e, "shift_window", 0, "eval");
    if (cfg.eval.shift_window < 0)
      throw ConfigError("\"shift_window\" in eval must be >= 0");
    cfg.eval.integrator = stepper_kind_from_name(
        get_or<std::string>(e, "integrator", "dopri5", "eval"));
    cfg.eval.train_series = positive_long(e, "train_series", cfg.eval.train_series, "eval");
  }

  if (j.contains("paths")) {
    const json& p = j.at("paths");
    require_object(p, "paths");
    reject_unknown(p, "paths", {"data", "run", "report"});
    cfg.paths.data = get_or<std::string>(p, "data", cfg.paths.data, "paths");
    cfg.paths.run = get_or<std::string>(p, "run", cfg.paths.run, "paths");
    cfg.paths.report = get_or<std::string>(p, "report", cfg.paths.report, "paths");
  }

  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "config");

  const std::string scale = get_or<std::string>(j, "scale", "desk", "config");
  if (scale == "desk")
    cfg.scale = ScalePreset::Desk;
  else if (scale == "paper")
    cfg.scale = ScalePreset::Full;
  else
    throw ConfigError("\"scale\" must be \"desk\" or \"paper\", got \"" + scale + "\"");

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    require_object(s, "sweep");
    reject_unknown(s, "sweep", {"K", "trials"});
    if (s.contains("K")) {
      if (!s.at("K").is_array() || s.at("K").empty())
        throw ConfigError("\"K\" in sweep must be a nonempty array of integers");
      cfg.sweep.Ks.clear();
      for (const json& v : s.at("K")) {
        if (!v.is_number_integer() || v.get<long>() < 0)
          throw ConfigError("\"K\" in sweep must hold integers >= 0");
        cfg.sweep.Ks.push_back(v.get<long>());
      }
    }
    cfg.sweep.trials = positive_long(s, "trials", cfg.sweep.trials, "sweep");
  }

  if (j.contains("demo")) {
    const json& d = j.at("demo");
    require_object(d, "demo");
    reject_unknown(d, "demo", {"dt", "steps"});
    cfg.demo.dt = get_or<double>(d, "dt", cfg.demo.dt, "demo");
    if (!(cfg.demo.dt > 0)) throw ConfigError("\"dt\" in demo must be > 0");
    cfg.demo.steps = positive_long(d, "steps", cfg.demo.steps, "demo");
  }

  // cross-field checks that do not need the dataset
  if (cfg.model.arch == ArchKind::Conv && cfg.model.base != BaseKind::Node)
    throw ConfigError("conv architecture requires base \"node\"");
  if (cfg.has_system)
    resolve_analytic(cfg.system, cfg.analytic_names);  // name validation only
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

RolloutMode rollout_mode_for(TrainMode mode) {
  return mode == TrainMode::Dfinde ? RolloutMode::Dfinde : RolloutMode::Ode;
}

EvalConfig eval_config_for(const RunConfig& cfg) {
  EvalConfig ec;
  ec.vpt_threshold = cfg.eval.vpt_threshold;
  ec.shift_window = cfg.eval.shift_window;
  ec.mode = rollout_mode_for(cfg.finde);
  ec.integrator =
      ec.mode == RolloutMode::Dfinde ? cfg.integrator : cfg.eval.integrator;
  return ec;
}

TrainConfig train_config_for(const RunConfig& cfg) {
  TrainConfig tc;
  tc.iterations = cfg.train.iterations;
  tc.batch = cfg.train.batch;
  tc.lr0 = cfg.train.lr0;
  tc.checkpoint_every = cfg.train.checkpoint_every;
  tc.seed = cfg.seed;
  tc.integrator = cfg.integrator;
  return tc;
}

}  // namespace finde

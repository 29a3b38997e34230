#pragma once
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "finde/eval.hpp"
#include "finde/systems.hpp"
#include "finde/training.hpp"

namespace finde {

// One JSON document drives every CLI verb. Top-level sections:
//   system      "mass-spring" | "two-body" | "double-pendulum" |
//               "fitzhugh-nagumo" | "kdv"
//   model       {base, arch, K, analytic_invariants, hidden, layers, conv_hidden}
//   finde       "none" | "cfinde" | "dfinde"
//   integrator  training / ψ̂ one-step method ("euler" | "rk4")
//   train       {iterations, batch, lr0, checkpoint_every}
//   eval        {vpt_threshold, shift_window, integrator, train_series}
//   paths       {data, run, report}
//   seed        unsigned integer
//   scale       "desk" | "paper"
//   sweep       {K, trials}        (sweep verb only)
//   demo        {dt, steps}        (demo verb only)
// Unknown keys anywhere are rejected before any work happens.

struct TrainSection {
  long iterations = 2000;
  long batch = 200;
  double lr0 = 1e-3;
  long checkpoint_every = 0;
};

struct EvalSection {
  double vpt_threshold = 0.01;
  long shift_window = 0;
  StepperKind integrator = StepperKind::Dopri5;  // ode-mode rollouts
  long train_series = 10;  // train-split series evaluated by sweep
};

struct PathsSection {
  std::string data = "data";
  std::string run = "run";
  std::string report = "report";
};

struct SweepSection {
  std::vector<long> Ks = {0, 1, 2, 3};
  long trials = 3;
};

struct DemoSection {
  double dt = 0.2;
  long steps = 500;
};

struct RunConfig {
  SystemKind system = SystemKind::MassSpring;
  bool has_system = false;  // verbs that need a system check this
  ModelSpec model;
  std::vector<std::string> analytic_names;
  TrainMode finde = TrainMode::Base;
  StepperKind integrator = StepperKind::Rk4;
  TrainSection train;
  EvalSection eval;
  PathsSection paths;
  std::uint64_t seed = 0;
  ScalePreset scale = ScalePreset::Desk;
  SweepSection sweep;
  DemoSection demo;
};

// Schema-validates and fills defaults; ConfigError names the offending key.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Closed-form invariants usable as bank components: the subset of the
// system's catalog that does not depend on per-series sampled parameters
// (double-pendulum rod-length constraints are per-series and are rejected).
std::vector<std::string> analytic_names_for(SystemKind kind);
std::vector<AnalyticInvariant> resolve_analytic(SystemKind kind,
                                                const std::vector<std::string>& names);

// Rollout mode implied by the training mode (dfinde ⇒ implicit stepping).
RolloutMode rollout_mode_for(TrainMode mode);

// EvalConfig assembled from the document (projection/integrator/threshold).
EvalConfig eval_config_for(const RunConfig& cfg);

// TrainConfig assembled from the document (seed, integrator, projection).
TrainConfig train_config_for(const RunConfig& cfg);

}  // namespace finde

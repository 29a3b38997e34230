#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

#include "finde/training.hpp"

namespace finde {

// ode:    integrate the (projected) continuous field over the grid
// dfinde: chain implicit discrete-projection steps
enum class RolloutMode { Ode, Dfinde };
const char* rollout_mode_name(RolloutMode m);
RolloutMode rollout_mode_from_name(const std::string& s);

struct EvalConfig {
  double vpt_threshold = 0.01;
  long shift_window = 0;  // per-step MSE may match ground truth ±W steps
  RolloutMode mode = RolloutMode::Ode;
  StepperKind integrator = StepperKind::Dopri5;  // ode rollouts / dfinde ψ̂
  Dopri5Opts dopri;                              // rtol 1e-7, atol 1e-9 defaults
  ProjectionConfig projection;
};

// A rollout that survives solver failures: states up to the last completed
// step are kept and the failure location/reason recorded instead of throwing.
// failure_step equals the number of completed steps (the last valid state
// index), so a failed series scores VPT = failure_step/S.
struct RolloutResult {
  MatRM states;           // (completed+1) x N, row 0 = u0
  long steps_requested = 0;
  long failure_step = -1;  // -1 when the full horizon completed
  std::string failure_reason;

  long completed() const { return states.rows() - 1; }
  bool failed() const { return failure_step >= 0; }
};

// Field/stepper wrappers over a trained model (empty bank ⇒ plain base field).
ProjectedField make_projected_field(const Model& model, const ProjectionConfig& proj);
DiscreteStepper make_discrete_stepper(const Model& model, const ProjectionConfig& proj,
                                      StepperKind kind);

// Fixed-grid steppers run step by step; dopri5 runs in short chunks so a
// failure keeps the prefix. max_steps caps the rollout early (VPT shortcut);
// <= 0 means the full horizon.
RolloutResult rollout_ode(const ProjectedField& pf, const Eigen::VectorXd& u0,
                          long steps, double dt, StepperKind kind,
                          const Dopri5Opts& dopri, long max_steps = 0);
RolloutResult rollout_dfinde(const DiscreteStepper& st, const Eigen::VectorXd& u0,
                             long steps, double dt, long max_steps = 0);
RolloutResult rollout(const Model& model, const Eigen::VectorXd& u0, long steps,
                      double dt, const EvalConfig& cfg, long max_steps = 0);

// Valid prediction time on z-scored states: VPT = s_f/S with s_f the largest
// step such that the per-step MSE stays below the threshold up to it. With a
// shift window W, the per-step MSE is the minimum over ground-truth offsets
// δ ∈ [−W, W] (offsets that leave the horizon are skipped). A rollout that
// completed only c < S steps is scored as if the MSE exceeded the threshold
// from step c+1 on.
double vpt(const MatRM& pred, const MatRM& gt, const Eigen::VectorXd& norm_mean,
           const Eigen::VectorXd& norm_std, const EvalConfig& cfg);

// |V_k(uˢ) − V_k(u⁰)| per catalog entry along a trajectory.
std::vector<Eigen::VectorXd> invariant_drift(const MatRM& traj,
                                             const std::vector<AnalyticInvariant>& catalog);

struct SeriesEval {
  double vpt = 0.0;
  double one_step = 0.0;   // raw MSE of the 1-step prediction over all pairs
  long failure_step = -1;  // rollout failure location, -1 if none
};

struct SplitReport {
  std::vector<SeriesEval> series;
  double mean_vpt = 0.0;
  double median_vpt = 0.0;
  double median_one_step = 0.0;
  long failures = 0;
};

// Rolls the model out against every ground-truth series of `data` (subset via
// `indices`; empty = all) and scores VPT + 1-step error. Rollouts stop early
// once the VPT threshold is crossed — the metric is already decided there.
// The 1-step error uses one training-integrator step (ode) or one implicit
// solve (dfinde) from each ground-truth state.
SplitReport evaluate_split(const Model& model, const TrajectorySet& data,
                           const std::vector<long>& indices,
                           const Eigen::VectorXd& norm_mean,
                           const Eigen::VectorXd& norm_std, const EvalConfig& cfg);

// report.json (aggregates + config echo) and report.csv (per-series rows).
void write_split_report(const std::string& dir, const SplitReport& report,
                        const nlohmann::json& meta);
// drift_<name>.csv with "step,value" rows.
void write_drift_csv(const std::string& dir, const std::string& invariant,
                     const Eigen::VectorXd& curve);

struct KsweepRow {
  long K = 0;
  long failures = 0;  // trials that aborted during training
  double median_one_step_train = 0.0;
  double median_vpt_train = 0.0;
  double median_one_step_test = 0.0;
  double median_vpt_test = 0.0;
};

// Trains `trials` seeds per K (seed, seed+1, ...) and reports per-K medians
// across trials of the per-trial mean VPT / median 1-step error on both
// splits. Trials that abort in training count as failures; they enter the
// VPT medians with 0 (no valid predictions) and are left out of the 1-step
// medians. Train-split VPT uses at most `train_eval_series` series to keep
// rollouts affordable.
std::vector<KsweepRow> ksweep(const TrajectorySet& train_data,
                              const TrajectorySet& test_data, const ModelSpec& spec,
                              TrainMode mode, const TrainConfig& tcfg,
                              const EvalConfig& ecfg, const std::vector<long>& Ks,
                              long trials, long train_eval_series = 10);

void write_ksweep_csv(const std::string& path, const std::vector<KsweepRow>& rows);

double median(std::vector<double> xs);

}  // namespace finde

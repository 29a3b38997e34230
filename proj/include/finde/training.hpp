#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

#include "finde/finde.hpp"
#include "finde/models.hpp"
#include "finde/systems.hpp"

namespace finde {

// base:   unconstrained one-step prediction loss
// cfinde: same loss with the tangent-projected field inside the integrator
// dfinde: explicit two-point residual loss (no root-finding during training)
enum class TrainMode { Base, Cfinde, Dfinde };
const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& s);

struct ModelSpec {
  BaseKind base = BaseKind::Node;
  ArchKind arch = ArchKind::Mlp;
  long hidden = 200;  // MLP width per hidden layer
  long layers = 2;    // number of hidden layers
  long conv_hidden = 16;
  long k_learned = 0;  // learned bank components; analytic ones are appended
};

struct Model {
  long n_state = 0;
  ModelSpec spec;
  ParamStore ps;
  BaseField base;
  FirstIntegralBank bank;
};

// Builds base net + bank with orthogonally-initialized weights drawn from a
// substream of `seed`. Conv architectures require a Node base.
Model make_model(long n_state, const ModelSpec& spec,
                 const std::vector<AnalyticInvariant>& analytic, std::uint64_t seed);

// Writes {meta, parameters} to path; loads back into a model with identical
// parameter names/shapes (IoError otherwise).
void save_model(const std::string& path, const Model& model,
                const nlohmann::json& extra_meta);
nlohmann::json load_model_params(Model& model, const std::string& path);

struct TrainConfig {
  long iterations = 2000;
  long batch = 200;
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  StepperKind integrator = StepperKind::Rk4;  // one-step method (base/cfinde/ψ̂)
  ProjectionConfig projection;
  long checkpoint_every = 0;  // extra checkpoints; final one is always written
};

// Mean over batch rows of ‖(gt_next−gt)/dt − (pred_next−gt)/dt‖²; raw units
// (reports elsewhere display it ×10⁻⁹).
double loss_1step(const MatRM& pred_next, const MatRM& gt_next, const MatRM& gt,
                  double dt);

// lr0·½(1+cos(π·iter/total)); iter counts from 0 (full lr) to total (zero).
double cosine_lr(long iter, long total, double lr0);

struct AdamState {
  std::vector<Tensor> m, v;
  long t = 0;
};
AdamState make_adam_state(const ParamStore& ps);
void adam_step(AdamState& st, ParamStore& ps, const std::vector<Tensor>& grads,
               double lr, double beta1, double beta2, double eps);

// Appends the batched training loss to g and returns the scalar node.
// Xu / Xv hold the batch states / successor states column-wise (N x B).
// base & cfinde unroll `integrator` (euler or rk4) over one dt with the
// (projected) field at every stage; dfinde projects the base increment ψ̂
// through the two-point constraint rows at the data pair.
int build_train_loss(Graph& g, const Model& model, TrainMode mode,
                     const Eigen::MatrixXd& Xu, const Eigen::MatrixXd& Xv,
                     double dt, const TrainConfig& cfg);

// Host-side dfinde loss via the stepper residual; equals the graph loss.
double loss_dfinde_value(const DiscreteStepper& st, const Eigen::MatrixXd& Xv,
                         const Eigen::MatrixXd& Xu, double dt);

struct TrainResult {
  std::vector<double> losses;  // one entry per iteration
  std::vector<double> lrs;
  double max_condition = 0.0;  // largest MMᵀ condition estimate seen
  double seconds = 0.0;
};

// Jointly trains base and bank parameters with Adam + cosine schedule on
// uniformly sampled adjacent pairs. When run_dir is non-empty, writes
// config.json, losses.csv, and model.ckpt there. SingularProjection and
// non-finite losses abort with the iteration index in the message.
TrainResult train(Model& model, const TrajectorySet& data, const TrainConfig& cfg,
                  TrainMode mode, const std::string& run_dir = "");

}  // namespace finde

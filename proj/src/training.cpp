#include "finde/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "finde/checkpoint.hpp"
#include "finde/errors.hpp"

namespace finde {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kBatchStream = 0xba7c4;
constexpr std::uint64_t kInitStream = 0x1217;

ProjectionOpts graph_proj_opts(const ProjectionConfig& cfg) {
  return {cfg.cond_threshold, cfg.jitter};
}

// One integrator pass over `field` expressed as graph nodes; returns the
// increment function ψ (N x B), i.e. (u_next − u)/dt of the base method.
template <typename FieldBuilder>
int build_increment(Graph& g, int X, double dt, StepperKind kind,
                    FieldBuilder&& field) {
  switch (kind) {
    case StepperKind::Euler:
      return field(X);
    case StepperKind::Rk4: {
      const int k1 = field(X);
      const int k2 = field(g.add(X, g.scale(k1, dt / 2.0)));
      const int k3 = field(g.add(X, g.scale(k2, dt / 2.0)));
      const int k4 = field(g.add(X, g.scale(k3, dt)));
      return g.scale(g.add(g.add(k1, k4), g.scale(g.add(k2, k3), 2.0)), 1.0 / 6.0);
    }
    default:
      throw ConfigError("training integrator must be euler or rk4");
  }
}

json model_meta(const Model& model) {
  std::vector<std::string> analytic;
  for (const BankComponent& c : model.bank.comps)
    if (c.kind == BankComponent::Kind::Analytic) analytic.push_back(c.analytic.name);
  return {{"n_state", model.n_state},
          {"base", base_kind_name(model.spec.base)},
          {"arch", arch_kind_name(model.spec.arch)},
          {"hidden", model.spec.hidden},
          {"layers", model.spec.layers},
          {"conv_hidden", model.spec.conv_hidden},
          {"k_learned", model.spec.k_learned},
          {"analytic", analytic}};
}

}  // namespace

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Base: return "base";
    case TrainMode::Cfinde: return "cfinde";
    case TrainMode::Dfinde: return "dfinde";
  }
  throw std::logic_error("bad TrainMode");
}

TrainMode train_mode_from_name(const std::string& s) {
  if (s == "base" || s == "none") return TrainMode::Base;
  if (s == "cfinde") return TrainMode::Cfinde;
  if (s == "dfinde") return TrainMode::Dfinde;
  throw ConfigError("unknown training mode: " + s);
}

Model make_model(long n_state, const ModelSpec& spec,
                 const std::vector<AnalyticInvariant>& analytic, std::uint64_t seed) {
  if (n_state <= 0) throw ConfigError("model needs a positive state width");
  if (spec.hidden <= 0 || spec.layers <= 0 || spec.conv_hidden <= 0)
    throw ConfigError("model widths must be positive");
  if (spec.k_learned < 0) throw ConfigError("k_learned must be >= 0");
  if (spec.arch == ArchKind::Conv && spec.base != BaseKind::Node)
    throw ConfigError("conv architecture supports only the plain ODE base");
  if (spec.base == BaseKind::Hnn && n_state % 2 != 0)
    throw ConfigError("hamiltonian base needs an even state width");
  if (spec.base == BaseKind::SecondOrder && n_state % 2 != 0)
    throw ConfigError("second-order base needs an even state width");

  Model model;
  model.n_state = n_state;
  model.spec = spec;
  Rng rng = Rng::substream(seed, {kInitStream});

  MlpSpec base_mlp;
  base_mlp.in = n_state;
  base_mlp.hidden.assign(spec.layers, spec.hidden);
  switch (spec.base) {
    case BaseKind::Node: base_mlp.out = n_state; break;
    case BaseKind::Hnn: base_mlp.out = 1; break;
    case BaseKind::SecondOrder: base_mlp.out = n_state / 2; break;
  }
  ConvSpec base_conv;
  base_conv.c_in = 1;
  base_conv.c_hidden = spec.conv_hidden;
  base_conv.c_out = 1;
  base_conv.length = n_state;
  model.base = make_base_field(model.ps, spec.base, spec.arch, n_state, base_mlp,
                               base_conv, rng);

  MlpSpec bank_mlp;
  bank_mlp.in = n_state;
  bank_mlp.hidden.assign(spec.layers, spec.hidden);
  bank_mlp.out = 1;
  model.bank = make_bank(model.ps, n_state, spec.k_learned, spec.arch, bank_mlp,
                         base_conv, analytic, rng);
  return model;
}

void save_model(const std::string& path, const Model& model,
                const json& extra_meta) {
  json meta = {{"model", model_meta(model)}};
  for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it)
    meta[it.key()] = it.value();
  save_checkpoint(path, meta, model.ps);
}

json load_model_params(Model& model, const std::string& path) {
  ParamStore loaded;
  json meta = load_checkpoint(path, loaded);
  if (loaded.names != model.ps.names)
    throw IoError("checkpoint parameter names do not match this model: " + path);
  for (std::size_t i = 0; i < loaded.values.size(); ++i) {
    if (!loaded.values[i].same_shape(model.ps.values[i]))
      throw IoError("checkpoint parameter shapes do not match this model: " + path);
    model.ps.values[i] = loaded.values[i];
  }
  return meta;
}

double loss_1step(const MatRM& pred_next, const MatRM& gt_next, const MatRM& gt,
                  double dt) {
  if (dt <= 0) throw ConfigError("loss_1step needs dt > 0");
  if (pred_next.rows() != gt_next.rows() || pred_next.cols() != gt_next.cols() ||
      gt.rows() != gt_next.rows() || gt.cols() != gt_next.cols())
    throw ShapeError("loss_1step shape mismatch");
  const MatRM diff = (gt_next - gt) / dt - (pred_next - gt) / dt;
  return diff.array().square().rowwise().sum().mean();
}

double cosine_lr(long iter, long total, double lr0) {
  if (total <= 0 || iter < 0 || iter > total)
    throw ConfigError("cosine_lr needs 0 <= iter <= total");
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(iter) /
                                     static_cast<double>(total)));
}

AdamState make_adam_state(const ParamStore& ps) {
  AdamState st;
  st.m = ps.zero_grads();
  st.v = ps.zero_grads();
  return st;
}

void adam_step(AdamState& st, ParamStore& ps, const std::vector<Tensor>& grads,
               double lr, double beta1, double beta2, double eps) {
  if (grads.size() != ps.values.size() || st.m.size() != ps.values.size())
    throw ShapeError("adam_step: gradient/state count mismatch");
  st.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < ps.values.size(); ++i) {
    auto& m = st.m[i].data;
    auto& v = st.v[i].data;
    const auto& g = grads[i].data;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v.array().matrix() + (1.0 - beta2) * g.array().square().matrix();
    ps.values[i].data -=
        (lr * (m / bc1).array() / ((v / bc2).array().sqrt() + eps)).matrix();
  }
}

int build_train_loss(Graph& g, const Model& model, TrainMode mode,
                     const Eigen::MatrixXd& Xu, const Eigen::MatrixXd& Xv,
                     double dt, const TrainConfig& cfg) {
  if (dt <= 0) throw ConfigError("build_train_loss needs dt > 0");
  if (Xu.rows() != model.n_state || Xv.rows() != model.n_state ||
      Xu.cols() != Xv.cols() || Xu.cols() == 0)
    throw ShapeError("build_train_loss: batch shape mismatch");
  const double B = static_cast<double>(Xu.cols());
  const int xu = g.input(Tensor::from_mat(Xu));

  if (mode == TrainMode::Dfinde) {
    const int xv = g.input(Tensor::from_mat(Xv));
    const auto base = [&](int X) { return model.base.build(g, X); };
    int psi = build_increment(g, xu, dt, cfg.integrator, base);
    if (model.bank.K() > 0) {
      const std::vector<int> rows = model.bank.build_Mbar_rows(g, xv, xu);
      psi = g.project_tangent(psi, rows, graph_proj_opts(cfg.projection));
    }
    const int target = g.input(Tensor::from_mat(((Xv - Xu) / dt).eval()));
    return g.scale(g.sum(g.square(g.sub(target, psi))), 1.0 / B);
  }

  const auto field = [&](int X) {
    int f = model.base.build(g, X);
    if (mode == TrainMode::Cfinde && model.bank.K() > 0) {
      const std::vector<int> rows = model.bank.build_M_rows(g, X);
      f = g.project_tangent(f, rows, graph_proj_opts(cfg.projection));
    }
    return f;
  };
  const int incr = build_increment(g, xu, dt, cfg.integrator, field);
  const int pred = g.add(xu, g.scale(incr, dt));
  const int xv = g.input(Tensor::from_mat(Xv));
  return g.scale(g.sum(g.square(g.sub(xv, pred))), 1.0 / (dt * dt * B));
}

double loss_dfinde_value(const DiscreteStepper& st, const Eigen::MatrixXd& Xv,
                         const Eigen::MatrixXd& Xu, double dt) {
  if (Xu.rows() != Xv.rows() || Xu.cols() != Xv.cols() || Xu.cols() == 0)
    throw ShapeError("loss_dfinde_value: batch shape mismatch");
  double total = 0;
  for (long b = 0; b < Xu.cols(); ++b)
    total += dfinde_residual(st, Xv.col(b), Xu.col(b), dt).squaredNorm();
  return total / static_cast<double>(Xu.cols());
}

TrainResult train(Model& model, const TrajectorySet& data, const TrainConfig& cfg,
                  TrainMode mode, const std::string& run_dir) {
  if (cfg.iterations < 1) throw ConfigError("train: iterations must be >= 1");
  if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
  if (cfg.lr0 <= 0 || cfg.beta1 <= 0 || cfg.beta2 <= 0 || cfg.eps <= 0)
    throw ConfigError("train: hyperparameters must be positive");
  if (data.n_series() == 0 || data.n_steps() < 1)
    throw ConfigError("train: dataset has no transition pairs");
  if (data.n_state != model.n_state)
    throw ConfigError("train: dataset width does not match the model");

  const auto started = std::chrono::steady_clock::now();
  const long n_series = data.n_series();
  const long n_steps = data.n_steps();
  const long N = model.n_state;
  Rng brng = Rng::substream(cfg.seed, {kBatchStream});
  AdamState adam = make_adam_state(model.ps);
  std::vector<Tensor> grads = model.ps.zero_grads();

  std::ofstream losses_csv;
  if (!run_dir.empty()) {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create run directory " + run_dir);
    json conf = {{"mode", train_mode_name(mode)},
                 {"iterations", cfg.iterations},
                 {"batch", cfg.batch},
                 {"lr0", cfg.lr0},
                 {"beta1", cfg.beta1},
                 {"beta2", cfg.beta2},
                 {"eps", cfg.eps},
                 {"seed", cfg.seed},
                 {"integrator", stepper_kind_name(cfg.integrator)},
                 {"cond_threshold", cfg.projection.cond_threshold},
                 {"dt", data.dt},
                 {"model", model_meta(model)}};
    std::ofstream(fs::path(run_dir) / "config.json") << conf.dump(2) << '\n';
    losses_csv.open(fs::path(run_dir) / "losses.csv");
    losses_csv << "iteration,lr,loss\n";
  }

  TrainResult result;
  result.losses.reserve(cfg.iterations);
  result.lrs.reserve(cfg.iterations);

  Eigen::MatrixXd Xu(N, cfg.batch), Xv(N, cfg.batch);
  for (long it = 0; it < cfg.iterations; ++it) {
    for (long b = 0; b < cfg.batch; ++b) {
      const long s = static_cast<long>(brng.below(static_cast<std::uint64_t>(n_series)));
      const long k = static_cast<long>(brng.below(static_cast<std::uint64_t>(n_steps)));
      Xu.col(b) = data.series[s].row(k).transpose();
      Xv.col(b) = data.series[s].row(k + 1).transpose();
    }
    for (Tensor& t : grads) t.data.setZero();

    double loss_value = 0;
    try {
      Graph g(&model.ps, &grads);
      const int loss = build_train_loss(g, model, mode, Xu, Xv, data.dt, cfg);
      loss_value = g.value(loss).scalar_value();
      if (!std::isfinite(loss_value))
        throw NonFiniteState("non-finite training loss");
      g.backward(loss);
      result.max_condition = std::max(result.max_condition, g.max_condition_seen());
    } catch (const SingularProjection& e) {
      throw SingularProjection("training aborted at iteration " +
                               std::to_string(it) + ": " + e.what());
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("training aborted at iteration " + std::to_string(it) +
                           ": " + e.what());
    }

    const double lr = cosine_lr(it, cfg.iterations, cfg.lr0);
    adam_step(adam, model.ps, grads, lr, cfg.beta1, cfg.beta2, cfg.eps);
    result.losses.push_back(loss_value);
    result.lrs.push_back(lr);
    if (losses_csv.is_open())
      losses_csv << it << ',' << lr << ',' << loss_value << '\n';
    if (!run_dir.empty() && cfg.checkpoint_every > 0 &&
        (it + 1) % cfg.checkpoint_every == 0 && it + 1 < cfg.iterations)
      save_model((fs::path(run_dir) / ("ckpt_" + std::to_string(it + 1) + ".ckpt"))
                     .string(),
                 model, {{"iteration", it + 1}, {"mode", train_mode_name(mode)}});
  }

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 started)
                       .count();
  if (!run_dir.empty())
    save_model((fs::path(run_dir) / "model.ckpt").string(), model,
               {{"iteration", cfg.iterations},
                {"mode", train_mode_name(mode)},
                {"final_loss", result.losses.back()},
                {"max_condition", result.max_condition},
                {"seconds", result.seconds}});
  return result;
}

}  // namespace finde

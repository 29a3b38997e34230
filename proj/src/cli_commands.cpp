#include "finde/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "finde/config.hpp"
#include "finde/errors.hpp"
#include "finde/eval.hpp"
#include "finde/log.hpp"
#include "finde/systems.hpp"
#include "finde/training.hpp"

namespace finde {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// test-split series must differ from the training draw under the same seed
constexpr std::uint64_t kTestSeedOffset = 0x7e57;

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> scale;
  long threads = 1;
};

RunConfig effective_config(const std::string& config_path, const CliOverrides& ov) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.scale) {
    if (*ov.scale == "desk")
      cfg.scale = ScalePreset::Desk;
    else if (*ov.scale == "paper")
      cfg.scale = ScalePreset::Full;
    else
      throw ConfigError("--scale must be desk or paper, got " + *ov.scale);
  }
  return cfg;
}

void require_system(const RunConfig& cfg) {
  if (!cfg.has_system)
    throw ConfigError("this command needs a config file with a \"system\" entry");
}

TrajectorySet load_split(const RunConfig& cfg, const char* split) {
  const fs::path dir = fs::path(cfg.paths.data) / split;
  TrajectorySet data = load_dataset(dir.string());
  if (cfg.has_system && data.kind != cfg.system)
    throw ConfigError(std::string("dataset at ") + dir.string() + " holds " +
                      system_kind_name(data.kind) + ", config says " +
                      system_kind_name(cfg.system));
  return data;
}

Model load_trained_model(const RunConfig& cfg, long n_state) {
  Model model = make_model(n_state, cfg.model,
                           resolve_analytic(cfg.system, cfg.analytic_names), cfg.seed);
  const fs::path ckpt = fs::path(cfg.paths.run) / "model.ckpt";
  load_model_params(model, ckpt.string());
  return model;
}

void print_audit(const TrajectorySet& data) {
  for (const AuditRow& row : audit_invariants(data))
    std::cout << "audit " << row.invariant << ": max_abs_drift=" << row.max_abs_drift
              << " max_rel_drift=" << row.max_rel_drift << "\n";
}

int cmd_generate(const RunConfig& cfg, const CliOverrides& ov) {
  require_system(cfg);
  const std::string out = ov.out.value_or(cfg.paths.data);

  SystemSpec train_spec = make_system_spec(cfg.system, cfg.scale, false, cfg.seed);
  SystemSpec test_spec =
      make_system_spec(cfg.system, cfg.scale, true, cfg.seed + kTestSeedOffset);

  FINDE_LOG_INFO("generating ", system_kind_name(cfg.system), " train split: ",
                 train_spec.n_series, " series x ", train_spec.n_steps, " steps");
  const TrajectorySet train_data = generate(train_spec);
  save_dataset((fs::path(out) / "train").string(), train_data);
  std::cout << "wrote " << (fs::path(out) / "train").string() << " ("
            << train_data.n_series() << " series x " << train_data.n_steps()
            << " steps, dt=" << train_data.dt << ")\n";
  print_audit(train_data);

  FINDE_LOG_INFO("generating test split: ", test_spec.n_series, " series x ",
                 test_spec.n_steps, " steps");
  const TrajectorySet test_data = generate(test_spec);
  save_dataset((fs::path(out) / "test").string(), test_data);
  std::cout << "wrote " << (fs::path(out) / "test").string() << " ("
            << test_data.n_series() << " series x " << test_data.n_steps()
            << " steps)\n";
  print_audit(test_data);
  return 0;
}

int cmd_train(const RunConfig& cfg, const CliOverrides& ov) {
  require_system(cfg);
  const TrajectorySet data = load_split(cfg, "train");
  Model model = make_model(data.n_state, cfg.model,
                           resolve_analytic(cfg.system, cfg.analytic_names), cfg.seed);
  const std::string run_dir = ov.out.value_or(cfg.paths.run);
  const TrainResult res =
      train(model, data, train_config_for(cfg), cfg.finde, run_dir);
  std::cout << "trained " << train_mode_name(cfg.finde) << " model for "
            << res.losses.size() << " iterations in " << res.seconds << " s\n"
            << "final_loss=" << res.losses.back() << "\n"
            << "max_condition=" << res.max_condition << "\n"
            << "run_dir=" << run_dir << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, const CliOverrides& ov) {
  require_system(cfg);
  const TrajectorySet data = load_split(cfg, "test");
  const Model model = load_trained_model(cfg, data.n_state);
  const EvalConfig ec = eval_config_for(cfg);

  const fs::path out = ov.out.value_or((fs::path(cfg.paths.report) / "predictions").string());
  std::error_code ec_fs;
  fs::create_directories(out, ec_fs);
  if (ec_fs) throw IoError("cannot create " + out.string());

  long failures = 0;
  for (long i = 0; i < data.n_series(); ++i) {
    const RolloutResult rr =
        rollout(model, data.series[i].row(0).transpose(), data.n_steps(), data.dt, ec);
    if (rr.failed()) {
      ++failures;
      FINDE_LOG_INFO("series ", i, " failed at step ", rr.failure_step, ": ",
                     rr.failure_reason);
    }
    std::ofstream csv(out / ("pred_" + std::to_string(i) + ".csv"));
    csv << "t";
    for (long c = 0; c < data.n_state; ++c) csv << ",u" << c;
    csv << "\n";
    for (long s = 0; s < rr.states.rows(); ++s) {
      csv << s * data.dt;
      for (long c = 0; c < data.n_state; ++c) csv << ',' << rr.states(s, c);
      csv << "\n";
    }
  }
  std::cout << "wrote " << data.n_series() << " rollouts to " << out.string()
            << " (failures=" << failures << ")\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const CliOverrides& ov) {
  require_system(cfg);
  const TrajectorySet train_data = load_split(cfg, "train");  // z-score stats
  const TrajectorySet test_data = load_split(cfg, "test");
  const Model model = load_trained_model(cfg, test_data.n_state);
  const EvalConfig ec = eval_config_for(cfg);

  const SplitReport rep = evaluate_split(model, test_data, {}, train_data.norm_mean,
                                         train_data.norm_std, ec);
  const std::string report_dir = ov.out.value_or(cfg.paths.report);
  write_split_report(report_dir, rep,
                     {{"system", system_kind_name(cfg.system)},
                      {"finde", train_mode_name(cfg.finde)},
                      {"K", cfg.model.k_learned},
                      {"rollout", rollout_mode_name(ec.mode)}});
  std::cout << "median_test_vpt=" << rep.median_vpt << "\n"
            << "mean_test_vpt=" << rep.mean_vpt << "\n"
            << "median_one_step_x1e9=" << rep.median_one_step / 1e-9 << "\n"
            << "failures=" << rep.failures << "\n";

  // raw learned/analytic bank values over ground-truth test states, for
  // external regression against known invariants
  if (model.bank.K() > 0) {
    std::ofstream csv(fs::path(report_dir) / "learned_v.csv");
    csv << "series,step";
    for (long k = 0; k < model.bank.K(); ++k)
      csv << ',' << model.bank.comps[k].label();
    csv << "\n";
    for (long i = 0; i < test_data.n_series(); ++i)
      for (long s = 0; s <= test_data.n_steps(); ++s) {
        const Eigen::VectorXd v =
            model.bank.V(model.ps, test_data.series[i].row(s).transpose());
        csv << i << ',' << s;
        for (long k = 0; k < v.size(); ++k) csv << ',' << v[k];
        csv << "\n";
      }
  }

  // implicit stepping transfers every bank component across each step; verify
  // over full rollouts and report the worst drift
  if (ec.mode == RolloutMode::Dfinde && model.bank.K() > 0) {
    const DiscreteStepper st =
        make_discrete_stepper(model, ec.projection,
                              ec.integrator == StepperKind::Dopri5 ? StepperKind::Rk4
                                                                   : ec.integrator);
    double max_drift = 0.0;
    for (long i = 0; i < test_data.n_series(); ++i) {
      const RolloutResult rr = rollout_dfinde(st, test_data.series[i].row(0).transpose(),
                                              test_data.n_steps(), test_data.dt);
      const Eigen::VectorXd v0 = model.bank.V(model.ps, rr.states.row(0).transpose());
      Eigen::VectorXd worst = Eigen::VectorXd::Zero(model.bank.K());
      for (long s = 1; s < rr.states.rows(); ++s)
        worst = worst.cwiseMax(
            (model.bank.V(model.ps, rr.states.row(s).transpose()) - v0).cwiseAbs());
      if (i == 0)
        for (long k = 0; k < model.bank.K(); ++k) {
          Eigen::VectorXd curve(rr.states.rows());
          for (long s = 0; s < rr.states.rows(); ++s)
            curve[s] = std::abs(
                model.bank.V(model.ps, rr.states.row(s).transpose())[k] - v0[k]);
          write_drift_csv(report_dir, model.bank.comps[k].label(), curve);
        }
      max_drift = std::max(max_drift, worst.maxCoeff());
    }
    std::cout << "max_bank_drift=" << max_drift << "\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const CliOverrides& ov) {
  require_system(cfg);
  const TrajectorySet train_data = load_split(cfg, "train");
  const TrajectorySet test_data = load_split(cfg, "test");
  const auto rows = ksweep(train_data, test_data, cfg.model, cfg.finde,
                           train_config_for(cfg), eval_config_for(cfg), cfg.sweep.Ks,
                           cfg.sweep.trials, cfg.eval.train_series);

  const std::string report_dir = ov.out.value_or(cfg.paths.report);
  std::error_code ec_fs;
  fs::create_directories(report_dir, ec_fs);
  if (ec_fs) throw IoError("cannot create " + report_dir);
  write_ksweep_csv((fs::path(report_dir) / "sweep.csv").string(), rows);

  std::cout << "K failures 1-step(train,x1e9) VPT(train) 1-step(test,x1e9) VPT(test)\n";
  long best_k = rows.front().K;
  double best_vpt = rows.front().median_vpt_test;
  for (const KsweepRow& r : rows) {
    std::cout << r.K << ' ' << r.failures << ' ' << r.median_one_step_train / 1e-9
              << ' ' << r.median_vpt_train << ' ' << r.median_one_step_test / 1e-9
              << ' ' << r.median_vpt_test << "\n";
    if (r.median_vpt_test > best_vpt) {
      best_vpt = r.median_vpt_test;
      best_k = r.K;
    }
  }
  std::cout << "best_K_by_test_vpt=" << best_k << "\n";
  return 0;
}

int cmd_demo_mass_spring(const RunConfig& cfg, const CliOverrides& ov) {
  const double dt = cfg.demo.dt;
  const long steps = cfg.demo.steps;
  const StepperKind kind = cfg.integrator;

  FirstIntegralBank bank;
  bank.n_state = 2;
  for (const AnalyticInvariant& inv : resolve_analytic(SystemKind::MassSpring, {"E"})) {
    BankComponent comp;
    comp.kind = BankComponent::Kind::Analytic;
    comp.analytic = inv;
    bank.comps.push_back(comp);
  }
  const Field truth = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd f(2);
    f << u(1), -u(0);
    return f;
  };
  Eigen::VectorXd u0(2);
  u0 << 1.0, 0.0;

  RolloutResult rr;
  switch (cfg.finde) {
    case TrainMode::Base: {
      ProjectedField pf;
      pf.fhat = truth;
      rr = rollout_ode(pf, u0, steps, dt, kind, Dopri5Opts{});
      break;
    }
    case TrainMode::Cfinde: {
      ProjectedField pf;
      pf.fhat = truth;
      pf.bank = &bank;
      rr = rollout_ode(pf, u0, steps, dt, kind, Dopri5Opts{});
      break;
    }
    case TrainMode::Dfinde: {
      DiscreteStepper st;
      st.fhat = truth;
      st.bank = &bank;
      st.kind = kind;
      rr = rollout_dfinde(st, u0, steps, dt);
      break;
    }
  }
  if (rr.failed())
    throw NoConvergence("demo rollout failed at step " +
                        std::to_string(rr.failure_step) + ": " + rr.failure_reason);

  const std::string out = ov.out.value_or("demo_mass_spring.csv");
  std::ofstream csv(out);
  if (!csv) throw IoError("cannot write " + out);
  csv << "t,q,v,E,q_exact,v_exact\n";
  double max_err = 0.0;
  for (long s = 0; s < rr.states.rows(); ++s) {
    const double t = s * dt;
    const double q = rr.states(s, 0), v = rr.states(s, 1);
    const double E = 0.5 * (q * q + v * v);
    max_err = std::max(max_err, std::abs(E - 0.5));
    csv << t << ',' << q << ',' << v << ',' << E << ',' << std::cos(t) << ','
        << -std::sin(t) << "\n";
  }
  std::cout << "wrote " << out << "\n"
            << "max_energy_error=" << max_err << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"structure-preserving neural differential equation laboratory"};
  app.require_subcommand(1);
  app.fallthrough(true);  // global flags may follow the verb

  std::string config_path;
  CliOverrides ov;
  std::uint64_t seed_val = 0;
  std::string out_val, scale_val;
  app.add_option("--config", config_path, "JSON run configuration")->expected(1);
  auto* seed_opt = app.add_option("--seed", seed_val, "override the config seed");
  auto* out_opt = app.add_option("--out", out_val, "override the output location");
  app.add_option("--threads", ov.threads, "cap the worker pool")
      ->check(CLI::PositiveNumber);
  auto* scale_opt =
      app.add_option("--scale", scale_val, "preset scale: desk or paper");

  auto* generate = app.add_subcommand("generate", "write train/test datasets");
  auto* train_cmd = app.add_subcommand("train", "fit a model on the train split");
  auto* predict = app.add_subcommand("predict", "roll the trained model out over the test split");
  auto* eval_cmd = app.add_subcommand("eval", "score the trained model on the test split");
  auto* sweep = app.add_subcommand("sweep", "train/evaluate across a range of K");
  auto* demo = app.add_subcommand("demo-mass-spring",
                                  "known-system energy-preservation demonstration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*seed_opt) ov.seed = seed_val;
  if (*out_opt) ov.out = out_val;
  if (*scale_opt) ov.scale = scale_val;
  Eigen::setNbThreads(static_cast<int>(ov.threads));

  try {
    const RunConfig cfg = effective_config(config_path, ov);
    if (*generate) return cmd_generate(cfg, ov);
    if (*train_cmd) return cmd_train(cfg, ov);
    if (*predict) return cmd_predict(cfg, ov);
    if (*eval_cmd) return cmd_eval(cfg, ov);
    if (*sweep) return cmd_sweep(cfg, ov);
    if (*demo) return cmd_demo_mass_spring(cfg, ov);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace finde

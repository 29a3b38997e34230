#include "finde/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "finde/errors.hpp"
#include "finde/integrators.hpp"

namespace finde {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr long kRolloutChunk = 25;  // adaptive rollouts restart in short spans

Eigen::VectorXd fixed_step(const Field& f, const Eigen::VectorXd& u, double dt,
                           StepperKind kind) {
  switch (kind) {
    case StepperKind::Euler: return euler_step(f, u, dt);
    case StepperKind::Rk4: return rk4_step(f, u, dt);
    case StepperKind::Leapfrog: {
      const long h = u.size() / 2;
      if (2 * h != u.size())
        throw ShapeError("leapfrog rollout needs an even state width");
      const auto [q, v] = leapfrog_step(f, u.head(h), u.tail(h), dt);
      Eigen::VectorXd out(u.size());
      out << q, v;
      return out;
    }
    default: throw ConfigError("fixed_step: not a fixed-grid integrator");
  }
}

// Per-step z-scored MSE of one predicted state against ground truth around
// step s (min over the shift window).
double step_mse(const Eigen::RowVectorXd& pred_row, const MatRM& gt, long s,
                const Eigen::VectorXd& mean, const Eigen::VectorXd& stdv, long W) {
  const long S = gt.rows() - 1;
  const auto z = [&](const Eigen::RowVectorXd& row) {
    return ((row.transpose() - mean).array() / stdv.array()).matrix().eval();
  };
  const Eigen::VectorXd zp = z(pred_row);
  double best = std::numeric_limits<double>::infinity();
  for (long d = -W; d <= W; ++d) {
    const long idx = s + d;
    if (idx < 0 || idx > S) continue;
    best = std::min(best, (zp - z(gt.row(idx))).squaredNorm() /
                              static_cast<double>(gt.cols()));
  }
  return best;
}

struct StepSource {
  // Advances one step from u or records a failure (returns false).
  std::function<bool(const Eigen::VectorXd& u, Eigen::VectorXd& next,
                     std::string& why)> step;
};

RolloutResult run_rollout(const StepSource& src, const Eigen::VectorXd& u0,
                          long steps, long max_steps) {
  if (steps < 1) throw ConfigError("rollout needs steps >= 1");
  const long limit = max_steps > 0 ? std::min(steps, max_steps) : steps;
  RolloutResult out;
  out.steps_requested = steps;
  out.states.resize(limit + 1, u0.size());
  out.states.row(0) = u0.transpose();
  Eigen::VectorXd u = u0, next;
  for (long s = 1; s <= limit; ++s) {
    std::string why;
    if (!src.step(u, next, why) || !next.allFinite()) {
      out.states.conservativeResize(s, Eigen::NoChange);
      out.failure_step = s - 1;
      out.failure_reason = why.empty() ? "non-finite state" : why;
      return out;
    }
    out.states.row(s) = next.transpose();
    u = next;
  }
  return out;
}

std::vector<long> all_indices(long n) {
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

const char* rollout_mode_name(RolloutMode m) {
  return m == RolloutMode::Ode ? "ode" : "dfinde";
}

RolloutMode rollout_mode_from_name(const std::string& s) {
  if (s == "ode") return RolloutMode::Ode;
  if (s == "dfinde") return RolloutMode::Dfinde;
  throw ConfigError("unknown rollout mode: " + s);
}

ProjectedField make_projected_field(const Model& model, const ProjectionConfig& proj) {
  ProjectedField pf;
  pf.fhat = make_model_field(model.base, model.ps);
  pf.bank = &model.bank;
  pf.ps = &model.ps;
  pf.config = proj;
  return pf;
}

DiscreteStepper make_discrete_stepper(const Model& model, const ProjectionConfig& proj,
                                      StepperKind kind) {
  DiscreteStepper st;
  st.fhat = make_model_field(model.base, model.ps);
  st.bank = &model.bank;
  st.ps = &model.ps;
  st.config = proj;
  st.kind = kind;
  return st;
}

RolloutResult rollout_ode(const ProjectedField& pf, const Eigen::VectorXd& u0,
                          long steps, double dt, StepperKind kind,
                          const Dopri5Opts& dopri, long max_steps) {
  if (dt <= 0) throw ConfigError("rollout needs dt > 0");
  const Field f = make_cfinde_field(pf);
  StepSource src;
  if (kind == StepperKind::Dopri5) {
    // chunked: integrate several grid steps per call, but step() is invoked
    // per step, so carry the chunk in a buffer; after a chunk failure, stay
    // step-by-step to localize the failing step without re-failing chunks
    struct ChunkState {
      std::vector<Eigen::VectorXd> buffer;
      bool degraded = false;
    };
    auto cs = std::make_shared<ChunkState>();
    src.step = [f, dt, dopri, cs](const Eigen::VectorXd& u,
                                  Eigen::VectorXd& next, std::string& why) {
      if (cs->buffer.empty()) {
        if (!cs->degraded) {
          const long chunk = kRolloutChunk;
          Eigen::VectorXd grid(chunk + 1);
          for (long i = 0; i <= chunk; ++i) grid[i] = i * dt;
          try {
            const Trajectory tr = integrate_dopri5(f, u, grid, dopri);
            for (long i = chunk; i >= 1; --i)
              cs->buffer.push_back(tr.states.row(i).transpose());
          } catch (const FindeError&) {
            cs->degraded = true;
          }
        }
        if (cs->degraded) {
          Eigen::VectorXd two(2);
          two << 0.0, dt;
          try {
            const Trajectory tr = integrate_dopri5(f, u, two, dopri);
            cs->buffer.push_back(tr.states.row(1).transpose());
          } catch (const FindeError& e) {
            why = e.what();
            return false;
          }
        }
      }
      next = cs->buffer.back();
      cs->buffer.pop_back();
      return true;
    };
  } else {
    src.step = [f, dt, kind](const Eigen::VectorXd& u, Eigen::VectorXd& next,
                             std::string& why) {
      try {
        next = fixed_step(f, u, dt, kind);
      } catch (const FindeError& e) {
        why = e.what();
        return false;
      }
      return true;
    };
  }
  return run_rollout(src, u0, steps, max_steps);
}

RolloutResult rollout_dfinde(const DiscreteStepper& st, const Eigen::VectorXd& u0,
                             long steps, double dt, long max_steps) {
  if (dt <= 0) throw ConfigError("rollout needs dt > 0");
  StepSource src;
  src.step = [&st, dt](const Eigen::VectorXd& u, Eigen::VectorXd& next,
                       std::string& why) {
    try {
      next = dfinde_predict(st, u, dt);
    } catch (const FindeError& e) {
      why = e.what();
      return false;
    }
    return true;
  };
  return run_rollout(src, u0, steps, max_steps);
}

RolloutResult rollout(const Model& model, const Eigen::VectorXd& u0, long steps,
                      double dt, const EvalConfig& cfg, long max_steps) {
  if (cfg.mode == RolloutMode::Dfinde) {
    const StepperKind psi =
        cfg.integrator == StepperKind::Dopri5 ? StepperKind::Rk4 : cfg.integrator;
    return rollout_dfinde(make_discrete_stepper(model, cfg.projection, psi), u0,
                          steps, dt, max_steps);
  }
  return rollout_ode(make_projected_field(model, cfg.projection), u0, steps, dt,
                     cfg.integrator, cfg.dopri, max_steps);
}

double vpt(const MatRM& pred, const MatRM& gt, const Eigen::VectorXd& norm_mean,
           const Eigen::VectorXd& norm_std, const EvalConfig& cfg) {
  if (gt.rows() < 2) throw ShapeError("vpt needs at least one ground-truth step");
  if (pred.cols() != gt.cols() || pred.rows() < 1 || pred.rows() > gt.rows())
    throw ShapeError("vpt: prediction/ground-truth shape mismatch");
  if (norm_mean.size() != gt.cols() || norm_std.size() != gt.cols())
    throw ConfigError("vpt: normalization stats missing or mis-sized");
  if (cfg.vpt_threshold <= 0 || cfg.shift_window < 0)
    throw ConfigError("vpt: threshold must be positive, window nonnegative");
  const long S = gt.rows() - 1;
  const long have = pred.rows() - 1;  // completed steps
  long good = 0;
  for (long s = 1; s <= have; ++s) {
    if (step_mse(pred.row(s), gt, s, norm_mean, norm_std, cfg.shift_window) >=
        cfg.vpt_threshold)
      break;
    good = s;
  }
  return static_cast<double>(good) / static_cast<double>(S);
}

std::vector<Eigen::VectorXd> invariant_drift(
    const MatRM& traj, const std::vector<AnalyticInvariant>& catalog) {
  std::vector<Eigen::VectorXd> curves;
  curves.reserve(catalog.size());
  for (const AnalyticInvariant& inv : catalog) {
    Eigen::VectorXd curve(traj.rows());
    const double v0 = inv.value(traj.row(0).transpose());
    for (long s = 0; s < traj.rows(); ++s)
      curve[s] = std::abs(inv.value(traj.row(s).transpose()) - v0);
    curves.push_back(std::move(curve));
  }
  return curves;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

SplitReport evaluate_split(const Model& model, const TrajectorySet& data,
                           const std::vector<long>& indices,
                           const Eigen::VectorXd& norm_mean,
                           const Eigen::VectorXd& norm_std, const EvalConfig& cfg) {
  const std::vector<long> idx =
      indices.empty() ? all_indices(data.n_series()) : indices;
  SplitReport rep;
  std::vector<double> vpts, ones;

  const ProjectedField pf = make_projected_field(model, cfg.projection);
  const Field field = make_cfinde_field(pf);
  const StepperKind psi_kind =
      cfg.integrator == StepperKind::Dopri5 ? StepperKind::Rk4 : cfg.integrator;
  const DiscreteStepper st = make_discrete_stepper(model, cfg.projection, psi_kind);

  for (const long i : idx) {
    const MatRM& gt = data.series.at(i);
    const long S = gt.rows() - 1;
    SeriesEval se;

    // one-step error over adjacent pairs (fixed stride caps the work on long
    // horizons; deterministic)
    constexpr long kOneStepPairCap = 2000;
    const long stride = (S + kOneStepPairCap - 1) / kOneStepPairCap;
    double total = 0;
    long pairs = 0;
    bool one_step_broke = false;
    for (long s = 0; s < S && !one_step_broke; s += stride) {
      try {
        const Eigen::VectorXd next =
            cfg.mode == RolloutMode::Dfinde
                ? dfinde_predict(st, gt.row(s).transpose(), data.dt)
                : fixed_step(field, gt.row(s).transpose(), data.dt, psi_kind);
        total += ((gt.row(s + 1) - next.transpose()) / data.dt).squaredNorm();
        ++pairs;
      } catch (const FindeError&) {
        one_step_broke = true;
      }
    }
    se.one_step = one_step_broke || pairs == 0
                      ? std::numeric_limits<double>::infinity()
                      : total / static_cast<double>(pairs);

    // rollout with early termination at the first VPT violation
    long good = 0;
    bool crossed = false;
    Eigen::VectorXd u = gt.row(0).transpose();
    while (good < S && !crossed && se.failure_step < 0) {
      const long chunk = std::min(kRolloutChunk, S - good);
      RolloutResult rr =
          cfg.mode == RolloutMode::Dfinde
              ? rollout_dfinde(st, u, chunk, data.dt)
              : rollout_ode(pf, u, chunk, data.dt, cfg.integrator, cfg.dopri);
      for (long k = 1; k <= rr.completed(); ++k) {
        if (step_mse(rr.states.row(k), gt, good + k, norm_mean, norm_std,
                     cfg.shift_window) >= cfg.vpt_threshold) {
          crossed = true;
          good = good + k - 1;
          break;
        }
      }
      if (!crossed) {
        good += rr.completed();
        if (rr.failed()) se.failure_step = good;
        if (rr.completed() > 0) u = rr.states.row(rr.completed()).transpose();
      }
    }
    se.vpt = static_cast<double>(se.failure_step >= 0 ? se.failure_step : good) /
             static_cast<double>(S);
    if (se.failure_step >= 0) ++rep.failures;
    rep.series.push_back(se);
    vpts.push_back(se.vpt);
    ones.push_back(se.one_step);
  }

  rep.mean_vpt =
      Eigen::Map<const Eigen::VectorXd>(vpts.data(), vpts.size()).mean();
  rep.median_vpt = median(vpts);
  rep.median_one_step = median(ones);
  return rep;
}

void write_split_report(const std::string& dir, const SplitReport& report,
                        const json& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir);
  json j = {{"mean_vpt", report.mean_vpt},
            {"median_vpt", report.median_vpt},
            {"median_one_step", report.median_one_step},
            {"median_one_step_scaled_1e9", report.median_one_step / 1e-9},
            {"failures", report.failures},
            {"n_series", report.series.size()}};
  for (auto it = meta.begin(); it != meta.end(); ++it) j[it.key()] = it.value();
  std::ofstream(fs::path(dir) / "report.json") << j.dump(2) << '\n';

  std::ofstream csv(fs::path(dir) / "report.csv");
  csv << "series,vpt,one_step,failure_step\n";
  for (std::size_t i = 0; i < report.series.size(); ++i)
    csv << i << ',' << report.series[i].vpt << ',' << report.series[i].one_step
        << ',' << report.series[i].failure_step << '\n';
}

void write_drift_csv(const std::string& dir, const std::string& invariant,
                     const Eigen::VectorXd& curve) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir);
  std::ofstream csv(fs::path(dir) / ("drift_" + invariant + ".csv"));
  csv << "step,value\n";
  for (long s = 0; s < curve.size(); ++s) csv << s << ',' << curve[s] << '\n';
}

std::vector<KsweepRow> ksweep(const TrajectorySet& train_data,
                              const TrajectorySet& test_data, const ModelSpec& spec,
                              TrainMode mode, const TrainConfig& tcfg,
                              const EvalConfig& ecfg, const std::vector<long>& Ks,
                              long trials, long train_eval_series) {
  if (Ks.empty()) throw ConfigError("ksweep needs a nonempty K range");
  if (trials < 1) throw ConfigError("ksweep needs trials >= 1");
  std::vector<long> train_idx;
  for (long i = 0; i < std::min(train_eval_series, train_data.n_series()); ++i)
    train_idx.push_back(i);

  std::vector<KsweepRow> rows;
  for (const long K : Ks) {
    KsweepRow row;
    row.K = K;
    std::vector<double> vpt_tr, vpt_te, one_tr, one_te;
    for (long trial = 0; trial < trials; ++trial) {
      ModelSpec ms = spec;
      ms.k_learned = K;
      TrainConfig tc = tcfg;
      tc.seed = tcfg.seed + static_cast<std::uint64_t>(trial);
      Model model = make_model(train_data.n_state, ms, {}, tc.seed);
      try {
        train(model, train_data, tc, mode);
      } catch (const FindeError&) {
        ++row.failures;
        vpt_tr.push_back(0.0);
        vpt_te.push_back(0.0);
        continue;
      }
      const SplitReport tr = evaluate_split(model, train_data, train_idx,
                                            train_data.norm_mean,
                                            train_data.norm_std, ecfg);
      const SplitReport te = evaluate_split(model, test_data, {},
                                            train_data.norm_mean,
                                            train_data.norm_std, ecfg);
      vpt_tr.push_back(tr.mean_vpt);
      vpt_te.push_back(te.mean_vpt);
      one_tr.push_back(tr.median_one_step);
      one_te.push_back(te.median_one_step);
    }
    row.median_vpt_train = median(vpt_tr);
    row.median_vpt_test = median(vpt_te);
    row.median_one_step_train = median(one_tr);
    row.median_one_step_test = median(one_te);
    rows.push_back(row);
  }
  return rows;
}

void write_ksweep_csv(const std::string& path, const std::vector<KsweepRow>& rows) {
  std::ofstream csv(path);
  if (!csv) throw IoError("cannot write " + path);
  csv << "K,failures,median_one_step_train,median_vpt_train,"
         "median_one_step_test,median_vpt_test\n";
  for (const KsweepRow& r : rows)
    csv << r.K << ',' << r.failures << ',' << r.median_one_step_train << ','
        << r.median_vpt_train << ',' << r.median_one_step_test << ','
        << r.median_vpt_test << '\n';
}

}  // namespace finde

#include "finde/systems.hpp"

#include <cmath>
#include <stdexcept>

#include "finde/errors.hpp"
#include "finde/integrators.hpp"
#include "finde/log.hpp"

namespace finde {
namespace {

constexpr double kGravity = 9.8;  // double pendulum
// FitzHugh–Nagumo constants: dW/dt = a(V + b − cW), circuit resistance R = c.
constexpr double kFhnA = 0.08;
constexpr double kFhnB = 0.7;
constexpr double kFhnC = 0.8;

long kdv_wrap(long k) { return ((k % kKdvN) + kKdvN) % kKdvN; }

}  // namespace

SystemKind system_kind_from_name(const std::string& s) {
  if (s == "mass-spring") return SystemKind::MassSpring;
  if (s == "two-body") return SystemKind::TwoBody;
  if (s == "double-pendulum") return SystemKind::DoublePendulum;
  if (s == "fitzhugh-nagumo") return SystemKind::FitzHughNagumo;
  if (s == "kdv") return SystemKind::Kdv;
  throw ConfigError("unknown system: " + s);
}

const char* system_kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::MassSpring: return "mass-spring";
    case SystemKind::TwoBody: return "two-body";
    case SystemKind::DoublePendulum: return "double-pendulum";
    case SystemKind::FitzHughNagumo: return "fitzhugh-nagumo";
    case SystemKind::Kdv: return "kdv";
  }
  throw std::logic_error("bad SystemKind");
}

long system_width(SystemKind k) {
  switch (k) {
    case SystemKind::MassSpring: return 2;
    case SystemKind::TwoBody: return 8;
    case SystemKind::DoublePendulum: return 8;
    case SystemKind::FitzHughNagumo: return 4;
    case SystemKind::Kdv: return kKdvN;
  }
  throw std::logic_error("bad SystemKind");
}

double system_default_dt(SystemKind k) {
  switch (k) {
    case SystemKind::MassSpring: return 0.1;
    case SystemKind::TwoBody: return 0.01;
    case SystemKind::DoublePendulum: return 0.1;
    case SystemKind::FitzHughNagumo: return 0.1;
    case SystemKind::Kdv: return 0.001;
  }
  throw std::logic_error("bad SystemKind");
}

SystemSpec make_system_spec(SystemKind kind, ScalePreset scale, bool eval,
                            std::uint64_t seed) {
  SystemSpec spec;
  spec.kind = kind;
  spec.dt = system_default_dt(kind);
  spec.seed = seed;
  long full_eval = 0;
  switch (kind) {
    case SystemKind::MassSpring: full_eval = 2000; break;
    case SystemKind::TwoBody: full_eval = 10000; break;
    case SystemKind::DoublePendulum: full_eval = 5000; break;
    case SystemKind::FitzHughNagumo: full_eval = 2000; break;
    case SystemKind::Kdv: full_eval = 10000; break;
  }
  if (eval) {
    spec.n_series = 10;
    spec.n_steps = scale == ScalePreset::Desk ? full_eval / 5 : full_eval;
  } else {
    spec.n_series = scale == ScalePreset::Desk ? 100 : 1000;
    spec.n_steps = scale == ScalePreset::Desk ? 200 : 500;
  }
  return spec;
}

Eigen::Vector2d fhn_core_rhs(const Eigen::Vector2d& vw, double current) {
  const double V = vw[0], W = vw[1];
  Eigen::Vector2d d;
  d[0] = V - V * V * V / 3.0 - W + current;
  d[1] = kFhnA * (V + kFhnB - kFhnC * W);
  return d;
}

Eigen::VectorXd fhn_embed(double V, double W, double current) {
  Eigen::VectorXd u(4);
  u[0] = V - V * V * V / 3.0 - W + current;  // I_C = dV/dt (capacitor current)
  u[1] = W;                                  // I_L (inductor current)
  u[2] = V;                                  // V_C (capacitor voltage)
  u[3] = V + kFhnB - kFhnC * W;              // V_L (inductor voltage)
  return u;
}

Eigen::VectorXd pend_polar_rhs(const Eigen::VectorXd& s, double l1, double l2) {
  if (s.size() != 4) throw ShapeError("pend_polar_rhs expects (θ1, θ2, ω1, ω2)");
  const double th1 = s[0], th2 = s[1], om1 = s[2], om2 = s[3];
  const double g = kGravity;
  const double d = th1 - th2;  // angle difference Δ
  const double sd = std::sin(d), cd = std::cos(d);
  const double den = 1.0 + sd * sd;  // m1 + m2·sin²Δ with m1=m2=1
  const double dom1 =
      (g * std::sin(th2) * cd - (l1 * om1 * om1 * cd + l2 * om2 * om2) * sd -
       2.0 * g * std::sin(th1)) /
      (l1 * den);
  const double dom2 =
      (2.0 * (l1 * om1 * om1 * sd - g * std::sin(th2) + g * std::sin(th1) * cd) +
       l2 * om2 * om2 * sd * cd) /
      (l2 * den);
  Eigen::VectorXd out(4);
  out << om1, om2, dom1, dom2;
  return out;
}

Eigen::VectorXd pend_to_cartesian(const Eigen::VectorXd& s, double l1, double l2) {
  if (s.size() != 4) throw ShapeError("pend_to_cartesian expects (θ1, θ2, ω1, ω2)");
  const double th1 = s[0], th2 = s[1], om1 = s[2], om2 = s[3];
  const double x1 = l1 * std::sin(th1), y1 = l1 * std::cos(th1);
  const double x2 = x1 + l2 * std::sin(th2), y2 = y1 + l2 * std::cos(th2);
  Eigen::VectorXd u(8);
  u << x1, y1, x2, y2,
      l1 * std::cos(th1) * om1, -l1 * std::sin(th1) * om1,
      l1 * std::cos(th1) * om1 + l2 * std::cos(th2) * om2,
      -l1 * std::sin(th1) * om1 - l2 * std::sin(th2) * om2;
  return u;
}

Eigen::VectorXd pend_to_polar(const Eigen::VectorXd& cart) {
  if (cart.size() != 8) throw ShapeError("pend_to_polar expects 8-wide state");
  const double x1 = cart[0], y1 = cart[1];
  const double rx = cart[2] - cart[0], ry = cart[3] - cart[1];
  const double vx1 = cart[4], vy1 = cart[5];
  const double rvx = cart[6] - cart[4], rvy = cart[7] - cart[5];
  const double l1 = std::hypot(x1, y1), l2 = std::hypot(rx, ry);
  if (l1 < 1e-12 || l2 < 1e-12) throw NonFiniteState("pendulum rod length vanished");
  const double th1 = std::atan2(x1, y1), th2 = std::atan2(rx, ry);
  // v = (l cosθ·ω, −l sinθ·ω): project velocity on the tangential direction.
  const double om1 = (vx1 * std::cos(th1) - vy1 * std::sin(th1)) / l1;
  const double om2 = (rvx * std::cos(th2) - rvy * std::sin(th2)) / l2;
  Eigen::VectorXd s(4);
  s << th1, th2, om1, om2;
  return s;
}

Eigen::VectorXd kdv_grid() {
  Eigen::VectorXd x(kKdvN);
  for (long k = 0; k < kKdvN; ++k) x[k] = k * kKdvDx;
  return x;
}

Eigen::VectorXd kdv_two_soliton(double k1, double d1, double k2, double d2) {
  const Eigen::VectorXd x = kdv_grid();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(kKdvN);
  for (long k = 0; k < kKdvN; ++k) {
    for (int img = -1; img <= 1; ++img) {  // wrap the sech tails periodically
      const double z1 = x[k] - d1 + img * kKdvDomain;
      const double z2 = x[k] - d2 + img * kKdvDomain;
      const double s1 = 1.0 / std::cosh(k1 * z1);
      const double s2 = 1.0 / std::cosh(k2 * z2);
      u[k] += 2.0 * k1 * k1 * s1 * s1 + 2.0 * k2 * k2 * s2 * s2;
    }
  }
  return u;
}

Eigen::VectorXd system_rhs(SystemKind kind, const Eigen::VectorXd& u) {
  const long n = system_width(kind);
  if (u.size() != n) throw ShapeError("system_rhs: state width mismatch");
  switch (kind) {
    case SystemKind::MassSpring: {
      Eigen::VectorXd d(2);
      d << u[1], -u[0];
      return d;
    }
    case SystemKind::TwoBody: {
      const Eigen::Vector2d r1 = u.segment<2>(0), r2 = u.segment<2>(2);
      const Eigen::Vector2d dr = r1 - r2;
      const double dist = dr.norm();
      if (dist < 1e-8) throw NonFiniteState("two-body separation under 1e-8");
      const Eigen::Vector2d a1 = -dr / (dist * dist * dist);  // G=m1=m2=1
      Eigen::VectorXd d(8);
      d << u[4], u[5], u[6], u[7], a1[0], a1[1], -a1[0], -a1[1];
      return d;
    }
    case SystemKind::DoublePendulum: {
      // Rod lengths come from the (constrained) state; accelerations are the
      // polar dynamics pushed through the embedding.
      const double l1 = std::hypot(u[0], u[1]);
      const double l2 = std::hypot(u[2] - u[0], u[3] - u[1]);
      const Eigen::VectorXd s = pend_to_polar(u);
      const Eigen::VectorXd ds = pend_polar_rhs(s, l1, l2);
      const double c1 = std::cos(s[0]), s1 = std::sin(s[0]);
      const double c2 = std::cos(s[1]), s2 = std::sin(s[1]);
      const double om1 = s[2], om2 = s[3], a1 = ds[2], a2 = ds[3];
      const double ax1 = l1 * (a1 * c1 - om1 * om1 * s1);
      const double ay1 = -l1 * (a1 * s1 + om1 * om1 * c1);
      Eigen::VectorXd d(8);
      d << u[4], u[5], u[6], u[7], ax1, ay1,
          ax1 + l2 * (a2 * c2 - om2 * om2 * s2),
          ay1 - l2 * (a2 * s2 + om2 * om2 * c2);
      return d;
    }
    case SystemKind::FitzHughNagumo: {
      // Closed circuit dynamics in (I_C, I_L, V_C, V_L); follows from the
      // core (V, W) equations and the embedding identities.
      const double ic = u[0], vc = u[2], vl = u[3];
      Eigen::VectorXd d(4);
      d << ic * (1.0 - vc * vc) - kFhnA * vl,  // dI_C/dt
          kFhnA * vl,                          // dI_L/dt = a·(V + b − cW)
          ic,                                  // dV_C/dt = I_C
          ic - kFhnA * kFhnC * vl;             // dV_L/dt
      return d;
    }
    case SystemKind::Kdv: {
      Eigen::VectorXd d(kKdvN);
      for (long k = 0; k < kKdvN; ++k) {
        const double ux = (u[kdv_wrap(k + 1)] - u[kdv_wrap(k - 1)]) / (2.0 * kKdvDx);
        const double uxxx = (u[kdv_wrap(k + 2)] - 2.0 * u[kdv_wrap(k + 1)] +
                             2.0 * u[kdv_wrap(k - 1)] - u[kdv_wrap(k - 2)]) /
                            (2.0 * kKdvDx * kKdvDx * kKdvDx);
        d[k] = -kKdvAlpha * u[k] * ux + kKdvBeta * uxxx;
      }
      return d;
    }
  }
  throw std::logic_error("bad SystemKind");
}

SeriesInit sample_initial(const SystemSpec& spec, long series_index,
                          long attempt) {
  Rng rng = attempt == 0
                ? Rng::substream(spec.seed, {static_cast<std::uint64_t>(series_index)})
                : Rng::substream(spec.seed, {static_cast<std::uint64_t>(series_index),
                                             static_cast<std::uint64_t>(attempt)});
  SeriesInit out;
  switch (spec.kind) {
    case SystemKind::MassSpring: {
      double q = 0, v = 0;
      do {  // reject near-zero energy so every series has visible motion
        q = rng.uniform(-1.0, 1.0);
        v = rng.uniform(-1.0, 1.0);
      } while (0.5 * (q * q + v * v) < 0.05);
      out.u0.resize(2);
      out.u0 << q, v;
      out.gen0 = out.u0;
      out.meta = nlohmann::json::object();
      return out;
    }
    case SystemKind::TwoBody: {
      const double r1 = rng.uniform(0.5, 1.0);
      const double th1 = rng.uniform(0.0, 2.0 * M_PI);
      const double eps_v = rng.normal(1.0, 0.05);
      const double eps_th = rng.normal(0.0, 0.05);
      const bool flip = rng.below(2) == 1;
      const double vmag = eps_v / (2.0 * std::sqrt(r1));  // circular speed at ε_v=1
      const double phi = th1 + (flip ? -0.5 : 0.5) * M_PI + eps_th * M_PI;
      Eigen::Vector2d vcog(rng.normal(0.0, 0.01), rng.normal(0.0, 0.01));
      out.u0.resize(8);
      out.u0 << r1 * std::cos(th1), r1 * std::sin(th1),
          -r1 * std::cos(th1), -r1 * std::sin(th1),
          vmag * std::cos(phi) + vcog[0], vmag * std::sin(phi) + vcog[1],
          -vmag * std::cos(phi) + vcog[0], -vmag * std::sin(phi) + vcog[1];
      out.gen0 = out.u0;
      out.meta = {{"r1", r1}, {"theta1", th1}, {"eps_v", eps_v},
                  {"eps_theta", eps_th}, {"flip", flip},
                  {"vcog", {vcog[0], vcog[1]}}};
      return out;
    }
    case SystemKind::DoublePendulum: {
      const double l1 = rng.uniform(0.9, 1.1);
      const double l2 = rng.uniform(0.9, 1.1);
      Eigen::VectorXd s(4);
      s << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
          rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1);
      out.gen0 = s;
      out.u0 = pend_to_cartesian(s, l1, l2);
      out.meta = {{"l1", l1}, {"l2", l2}};
      return out;
    }
    case SystemKind::FitzHughNagumo: {
      const double current = rng.uniform(0.7, 1.1);
      const double V = rng.uniform(-1.5, 1.5);
      const double W = rng.uniform(0.0, 2.0);
      out.gen0.resize(2);
      out.gen0 << V, W;
      out.u0 = fhn_embed(V, W, current);
      out.meta = {{"current", current}};
      return out;
    }
    case SystemKind::Kdv: {
      const double k1 = rng.uniform(0.5, 2.0);
      const double k2 = rng.uniform(0.5, 2.0);
      const double d1 = rng.uniform(0.0, kKdvDomain);
      double d2 = 0;
      double sep = 0;
      do {  // keep the two peaks ≥ 2 apart on the periodic domain
        d2 = rng.uniform(0.0, kKdvDomain);
        const double gap = std::abs(d1 - d2);
        sep = std::min(gap, kKdvDomain - gap);
      } while (sep < 2.0);
      out.u0 = kdv_two_soliton(k1, d1, k2, d2);
      out.gen0 = out.u0;
      out.meta = {{"kappa1", k1}, {"d1", d1}, {"kappa2", k2}, {"d2", d2}};
      return out;
    }
  }
  throw std::logic_error("bad SystemKind");
}

TrajectorySet generate(const SystemSpec& spec) {
  if (spec.n_series <= 0 || spec.n_steps <= 0 || spec.dt <= 0)
    throw ConfigError("generate: n_series, n_steps, dt must be positive");
  TrajectorySet out;
  out.kind = spec.kind;
  out.n_state = system_width(spec.kind);
  out.dt = spec.dt;
  out.seed = spec.seed;
  out.gen_rtol = spec.gen_rtol;
  out.gen_atol = spec.gen_atol;

  Eigen::VectorXd t_grid(spec.n_steps + 1);
  for (long s = 0; s <= spec.n_steps; ++s) t_grid[s] = s * spec.dt;
  Dopri5Opts opts;
  opts.rtol = spec.gen_rtol;
  opts.atol = spec.gen_atol;

  const auto integrate_series = [&](const SeriesInit& init) -> MatRM {
    MatRM rows;
    switch (spec.kind) {
      case SystemKind::DoublePendulum: {
        const double l1 = init.meta.at("l1").get<double>();
        const double l2 = init.meta.at("l2").get<double>();
        const Field f = [l1, l2](const Eigen::VectorXd& s) {
          return pend_polar_rhs(s, l1, l2);
        };
        const Trajectory tr = integrate_dopri5(f, init.gen0, t_grid, opts);
        rows.resize(tr.states.rows(), 8);
        for (long r = 0; r < tr.states.rows(); ++r)
          rows.row(r) = pend_to_cartesian(tr.states.row(r).transpose(), l1, l2);
        break;
      }
      case SystemKind::FitzHughNagumo: {
        const double current = init.meta.at("current").get<double>();
        const Field f = [current](const Eigen::VectorXd& vw) -> Eigen::VectorXd {
          return fhn_core_rhs(vw, current);
        };
        const Trajectory tr = integrate_dopri5(f, init.gen0, t_grid, opts);
        rows.resize(tr.states.rows(), 4);
        for (long r = 0; r < tr.states.rows(); ++r)
          rows.row(r) = fhn_embed(tr.states(r, 0), tr.states(r, 1), current);
        break;
      }
      default: {
        const SystemKind kind = spec.kind;
        const Field f = [kind](const Eigen::VectorXd& u) {
          return system_rhs(kind, u);
        };
        rows = integrate_dopri5(f, init.gen0, t_grid, opts).states;
        break;
      }
    }
    return rows;
  };

  constexpr long kMaxSampleAttempts = 32;
  const auto note_failure = [&](long i, long attempt, const char* what) {
    if (attempt + 1 >= kMaxSampleAttempts)
      throw NoConvergence("generate: series " + std::to_string(i) + " of " +
                          system_kind_name(spec.kind) + " failed " +
                          std::to_string(kMaxSampleAttempts) +
                          " draws; last: " + what);
    FINDE_LOG_INFO("generate: redrawing ", system_kind_name(spec.kind),
                   " series ", i, " (attempt ", attempt + 1, "): ", what);
  };

  for (long i = 0; i < spec.n_series; ++i) {
    // A draw can put the exact trajectory outside the integrable region
    // (KdV's central stencil blows up in finite time for some strong
    // soliton collisions); redraw deterministically until one survives.
    for (long attempt = 0;; ++attempt) {
      SeriesInit init = sample_initial(spec, i, attempt);
      try {
        MatRM rows = integrate_series(init);
        if (attempt > 0) init.meta["resampled"] = attempt;
        out.series.push_back(std::move(rows));
        out.series_meta.push_back(std::move(init.meta));
        break;
      } catch (const StepUnderflow& e) {
        note_failure(i, attempt, e.what());
      } catch (const NonFiniteState& e) {
        note_failure(i, attempt, e.what());
      }
    }
  }

  // Per-element mean/std over every sample (used for z-scored evaluation).
  const long n = out.n_state;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
  long count = 0;
  for (const MatRM& tr : out.series) {
    sum += tr.colwise().sum().transpose();
    sq += tr.array().square().colwise().sum().matrix().transpose();
    count += tr.rows();
  }
  out.norm_mean = sum / static_cast<double>(count);
  Eigen::VectorXd var =
      sq / static_cast<double>(count) - out.norm_mean.array().square().matrix();
  out.norm_std = var.array().max(0.0).sqrt().max(1e-12).matrix();
  return out;
}

std::vector<AnalyticInvariant> invariant_catalog(SystemKind kind,
                                                 const nlohmann::json& series_meta) {
  std::vector<AnalyticInvariant> cat;
  switch (kind) {
    case SystemKind::MassSpring: {
      cat.push_back(quadratic_invariant("E", Eigen::Matrix2d::Identity(),
                                        Eigen::Vector2d::Zero(), 0.0));
      return cat;
    }
    case SystemKind::TwoBody: {
      AnalyticInvariant H;
      H.name = "H";
      H.value = [](const Eigen::VectorXd& u) {
        const double dist = (u.segment<2>(0) - u.segment<2>(2)).norm();
        return 0.5 * u.segment<4>(4).squaredNorm() - 1.0 / dist;
      };
      H.grad = [](const Eigen::VectorXd& u) {
        const Eigen::Vector2d dr = u.segment<2>(0) - u.segment<2>(2);
        const double dist = dr.norm();
        Eigen::VectorXd g(8);
        g.segment<2>(0) = dr / (dist * dist * dist);
        g.segment<2>(2) = -dr / (dist * dist * dist);
        g.segment<4>(4) = u.segment<4>(4);
        return g;
      };
      cat.push_back(generic_invariant(H.name, H.value, H.grad));
      Eigen::VectorXd bx = Eigen::VectorXd::Zero(8), by = Eigen::VectorXd::Zero(8);
      bx[4] = bx[6] = 1.0;
      by[5] = by[7] = 1.0;
      const Eigen::MatrixXd zero8 = Eigen::MatrixXd::Zero(8, 8);
      cat.push_back(quadratic_invariant("p_x", zero8, bx, 0.0));
      cat.push_back(quadratic_invariant("p_y", zero8, by, 0.0));
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(8, 8);  // Σ xᵢ v_{yi} − yᵢ v_{xi}
      L(0, 5) = L(5, 0) = 1.0;
      L(1, 4) = L(4, 1) = -1.0;
      L(2, 7) = L(7, 2) = 1.0;
      L(3, 6) = L(6, 3) = -1.0;
      cat.push_back(quadratic_invariant("L", L, Eigen::VectorXd::Zero(8), 0.0));
      return cat;
    }
    case SystemKind::DoublePendulum: {
      const double l1 = series_meta.at("l1").get<double>();
      const double l2 = series_meta.at("l2").get<double>();
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(8, 8);
      A.diagonal().tail<4>().setOnes();  // kinetic term ½Σv²
      Eigen::VectorXd b = Eigen::VectorXd::Zero(8);
      b[1] = b[3] = -kGravity;  // y measured downward ⇒ −g·y is the potential
      cat.push_back(quadratic_invariant("H", A, b, 0.0));

      Eigen::MatrixXd C1 = Eigen::MatrixXd::Zero(8, 8);
      C1(0, 0) = C1(1, 1) = 2.0;
      cat.push_back(quadratic_invariant("c1", C1, Eigen::VectorXd::Zero(8),
                                        -l1 * l1));
      Eigen::MatrixXd C2 = Eigen::MatrixXd::Zero(8, 8);
      C2(0, 0) = C2(1, 1) = C2(2, 2) = C2(3, 3) = 2.0;
      C2(0, 2) = C2(2, 0) = C2(1, 3) = C2(3, 1) = -2.0;
      cat.push_back(quadratic_invariant("c2", C2, Eigen::VectorXd::Zero(8),
                                        -l2 * l2));
      Eigen::MatrixXd G1 = Eigen::MatrixXd::Zero(8, 8);  // x1 vx1 + y1 vy1
      G1(0, 4) = G1(4, 0) = 1.0;
      G1(1, 5) = G1(5, 1) = 1.0;
      cat.push_back(quadratic_invariant("g1", G1, Eigen::VectorXd::Zero(8), 0.0));
      Eigen::MatrixXd G2 = Eigen::MatrixXd::Zero(8, 8);  // (r2−r1)·(v2−v1)
      G2(2, 6) = G2(6, 2) = 1.0;
      G2(2, 4) = G2(4, 2) = -1.0;
      G2(0, 6) = G2(6, 0) = -1.0;
      G2(0, 4) = G2(4, 0) = 1.0;
      G2(3, 7) = G2(7, 3) = 1.0;
      G2(3, 5) = G2(5, 3) = -1.0;
      G2(1, 7) = G2(7, 1) = -1.0;
      G2(1, 5) = G2(5, 1) = 1.0;
      cat.push_back(quadratic_invariant("g2", G2, Eigen::VectorXd::Zero(8), 0.0));
      return cat;
    }
    case SystemKind::FitzHughNagumo: {
      // Kirchhoff current law: I_C + D(V_C) + I_L is constant
      // (D(V) = V³/3 − V is the nonlinear conductor).
      std::vector<std::function<double(double)>> g(4), dg(4);
      g[0] = [](double x) { return x; };
      dg[0] = [](double) { return 1.0; };
      g[1] = g[0];
      dg[1] = dg[0];
      g[2] = [](double x) { return x * x * x / 3.0 - x; };
      dg[2] = [](double x) { return x * x - 1.0; };
      g[3] = [](double) { return 0.0; };
      dg[3] = [](double) { return 0.0; };
      cat.push_back(separable_invariant("I", g, dg));
      // Kirchhoff voltage law: V_C − R·I_L − V_L is constant (≡ −b).
      Eigen::VectorXd b(4);
      b << 0.0, -kFhnC, 1.0, -1.0;
      cat.push_back(quadratic_invariant("E", Eigen::MatrixXd::Zero(4, 4), b, 0.0));
      return cat;
    }
    case SystemKind::Kdv: {
      cat.push_back(quadratic_invariant(
          "mass", Eigen::MatrixXd::Zero(kKdvN, kKdvN),
          Eigen::VectorXd::Constant(kKdvN, kKdvDx), 0.0));
      AnalyticInvariant H;
      H.name = "H";
      const auto d1 = [](const Eigen::VectorXd& u, long k) {
        return (u[kdv_wrap(k + 1)] - u[kdv_wrap(k - 1)]) / (2.0 * kKdvDx);
      };
      H.value = [d1](const Eigen::VectorXd& u) {
        double h = 0;
        for (long k = 0; k < kKdvN; ++k) {
          const double ux = d1(u, k);
          h += (-kKdvAlpha / 6.0 * u[k] * u[k] * u[k] -
                kKdvBeta / 2.0 * ux * ux) *
               kKdvDx;
        }
        return h;
      };
      H.grad = [d1](const Eigen::VectorXd& u) {
        Eigen::VectorXd g(kKdvN);
        for (long k = 0; k < kKdvN; ++k)
          g[k] = -kKdvAlpha / 2.0 * u[k] * u[k] * kKdvDx -
                 kKdvBeta / 2.0 * (d1(u, k - 1) - d1(u, k + 1));
        return g;
      };
      cat.push_back(generic_invariant(H.name, H.value, H.grad));
      return cat;
    }
  }
  throw std::logic_error("bad SystemKind");
}

std::vector<AuditRow> audit_invariants(const TrajectorySet& data) {
  std::vector<AuditRow> rows;
  for (long i = 0; i < data.n_series(); ++i) {
    const std::vector<AnalyticInvariant> cat =
        invariant_catalog(data.kind, data.series_meta[i]);
    if (rows.empty())
      for (const AnalyticInvariant& inv : cat) rows.push_back({inv.name, 0.0, 0.0});
    const MatRM& tr = data.series[i];
    for (std::size_t c = 0; c < cat.size(); ++c) {
      const double v0 = cat[c].value(tr.row(0).transpose());
      for (long s = 1; s < tr.rows(); ++s) {
        const double drift = std::abs(cat[c].value(tr.row(s).transpose()) - v0);
        rows[c].max_abs_drift = std::max(rows[c].max_abs_drift, drift);
        rows[c].max_rel_drift =
            std::max(rows[c].max_rel_drift, drift / (1.0 + std::abs(v0)));
      }
    }
  }
  return rows;
}

}  // namespace finde

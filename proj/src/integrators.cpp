#include "finde/integrators.hpp"

#include <algorithm>
#include <cmath>

#include "finde/errors.hpp"

namespace finde {

namespace {

void check_grid(const Eigen::VectorXd& t_grid) {
  if (t_grid.size() < 1) throw ShapeError("time grid must be non-empty");
  for (long i = 0; i + 1 < t_grid.size(); ++i)
    if (!(t_grid(i + 1) > t_grid(i)))
      throw ShapeError("time grid must be strictly increasing");
}

void check_state(const Eigen::VectorXd& u, const char* where) {
  if (!u.allFinite()) throw NonFiniteState(std::string(where) + ": non-finite state");
}

Trajectory fixed_grid(const Eigen::VectorXd& u0, const Eigen::VectorXd& t_grid,
                      const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& step,
                      const char* name) {
  check_grid(t_grid);
  check_state(u0, name);
  Trajectory tr;
  tr.times = t_grid;
  tr.states.resize(t_grid.size(), u0.size());
  tr.states.row(0) = u0;
  Eigen::VectorXd u = u0;
  for (long s = 0; s + 1 < t_grid.size(); ++s) {
    u = step(u, t_grid(s + 1) - t_grid(s));
    check_state(u, name);
    tr.states.row(s + 1) = u;
  }
  return tr;
}

}  // namespace

Eigen::VectorXd euler_step(const Field& f, const Eigen::VectorXd& u, double dt) {
  return u + dt * f(u);
}

Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& u, double dt) {
  const Eigen::VectorXd k1 = f(u);
  const Eigen::VectorXd k2 = f(u + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(u + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(u + dt * k3);
  return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog_step(const Field& f,
                                                          const Eigen::VectorXd& q,
                                                          const Eigen::VectorXd& v,
                                                          double dt) {
  if (q.size() != v.size()) throw ShapeError("leapfrog needs equal q and v widths");
  const long n = q.size();
  Eigen::VectorXd u(2 * n);
  u << q, v;
  Eigen::VectorXd vh = v + 0.5 * dt * f(u).tail(n);
  u.tail(n) = vh;
  Eigen::VectorXd qn = q + dt * f(u).head(n);
  u.head(n) = qn;
  Eigen::VectorXd vn = vh + 0.5 * dt * f(u).tail(n);
  return {qn, vn};
}

Trajectory integrate_rk4(const Field& f, const Eigen::VectorXd& u0,
                         const Eigen::VectorXd& t_grid) {
  return fixed_grid(
      u0, t_grid, [&](const Eigen::VectorXd& u, double dt) { return rk4_step(f, u, dt); },
      "rk4");
}

Trajectory integrate_euler(const Field& f, const Eigen::VectorXd& u0,
                           const Eigen::VectorXd& t_grid) {
  return fixed_grid(
      u0, t_grid,
      [&](const Eigen::VectorXd& u, double dt) { return euler_step(f, u, dt); }, "euler");
}

Trajectory integrate_leapfrog(const Field& f, const Eigen::VectorXd& u0,
                              const Eigen::VectorXd& t_grid) {
  if (u0.size() % 2 != 0) throw ShapeError("leapfrog needs an even state width");
  const long n = u0.size() / 2;
  return fixed_grid(
      u0, t_grid,
      [&](const Eigen::VectorXd& u, double dt) {
        auto [qn, vn] = leapfrog_step(f, u.head(n), u.tail(n), dt);
        Eigen::VectorXd out(u.size());
        out << qn, vn;
        return out;
      },
      "leapfrog");
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4) with 4th-order dense output (Hairer/Nørsett/Wanner
// coefficients).
// ---------------------------------------------------------------------------

namespace {

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseSegment {
  double t0 = 0.0, h = 0.0;
  Eigen::VectorXd c1, c2, c3, c4, c5;

  Eigen::VectorXd at(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)));
  }
};

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& u,
                  const Eigen::VectorXd& un, double atol, double rtol) {
  double acc = 0.0;
  for (long i = 0; i < err.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(u(i)), std::abs(un(i)));
    const double q = err(i) / sk;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const Field& f, const Eigen::VectorXd& u0, const Eigen::VectorXd& f0,
                    double atol, double rtol, double hmax) {
  double dnf = 0.0, dny = 0.0;
  for (long i = 0; i < u0.size(); ++i) {
    const double sk = atol + rtol * std::abs(u0(i));
    dnf += (f0(i) / sk) * (f0(i) / sk);
    dny += (u0(i) / sk) * (u0(i) / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
  h = std::min(h, hmax);
  const Eigen::VectorXd f1 = f(u0 + h * f0);
  double der2 = 0.0;
  for (long i = 0; i < u0.size(); ++i) {
    const double sk = atol + rtol * std::abs(u0(i));
    const double d = (f1(i) - f0(i)) / sk;
    der2 += d * d;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  double h1;
  if (der12 <= 1e-15) {
    h1 = std::max(1e-6, h * 1e-3);
  } else {
    h1 = std::pow(0.01 / der12, 0.2);
  }
  return std::min({100.0 * h, h1, hmax});
}

}  // namespace

Trajectory integrate_dopri5(const Field& f, const Eigen::VectorXd& u0,
                            const Eigen::VectorXd& t_grid, const Dopri5Opts& opts) {
  check_grid(t_grid);
  check_state(u0, "dopri5");
  Trajectory tr;
  tr.times = t_grid;
  tr.states.resize(t_grid.size(), u0.size());
  tr.states.row(0) = u0;
  if (t_grid.size() == 1) return tr;

  const double t_end = t_grid(t_grid.size() - 1);
  double t = t_grid(0);
  Eigen::VectorXd u = u0;
  Eigen::VectorXd k1 = f(u);
  check_state(k1, "dopri5 field");
  double h = initial_step(f, u, k1, opts.atol, opts.rtol, opts.max_dt);
  h = std::min(h, t_end - t);

  long next_out = 1;
  for (long steps = 0; next_out < t_grid.size(); ++steps) {
    if (steps >= opts.max_steps) throw NoConvergence("dopri5: step budget exhausted");
    if (h < opts.dt_min)
      throw StepUnderflow("dopri5: step size underflow at t=" + std::to_string(t));
    h = std::min(h, t_end - t);

    const Eigen::VectorXd k2 = f(u + h * (a21 * k1));
    const Eigen::VectorXd k3 = f(u + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = f(u + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 = f(u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        f(u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd un =
        u + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Eigen::VectorXd k7 = f(un);
    if (!un.allFinite() || !k7.allFinite())
      throw NonFiniteState("dopri5: non-finite state at t=" + std::to_string(t));

    const Eigen::VectorXd err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(err_vec, u, un, opts.atol, opts.rtol);

    if (err <= 1.0) {
      DenseSegment seg;
      seg.t0 = t;
      seg.h = h;
      seg.c1 = u;
      seg.c2 = un - u;
      seg.c3 = h * k1 - seg.c2;
      seg.c4 = seg.c2 - h * k7 - seg.c3;
      seg.c5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      t += h;
      u = un;
      k1 = k7;
      while (next_out < t_grid.size() && t_grid(next_out) <= t + 1e-12 * std::max(1.0, std::abs(t))) {
        Eigen::VectorXd out =
            (next_out + 1 == t_grid.size() && std::abs(t - t_end) <= 1e-12 * std::max(1.0, std::abs(t_end)))
                ? u
                : seg.at(t_grid(next_out));
        check_state(out, "dopri5 output");
        tr.states.row(next_out) = out;
        ++next_out;
      }
    }

    double fac = opts.safety * std::pow(std::max(err, 1e-16), -0.2);
    fac = std::min(10.0, std::max(0.2, fac));
    h = std::min(h * fac, opts.max_dt);
  }
  return tr;
}

}  // namespace finde

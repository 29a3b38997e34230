#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "finde/errors.hpp"
#include "finde/integrators.hpp"

using namespace finde;

namespace {

Eigen::VectorXd grid(double t0, double t1, long steps) {
  Eigen::VectorXd t(steps + 1);
  for (long s = 0; s <= steps; ++s)
    t(s) = t0 + (t1 - t0) * static_cast<double>(s) / static_cast<double>(steps);
  return t;
}

const Field mass_spring = [](const Eigen::VectorXd& u) {
  Eigen::VectorXd f(2);
  f << u(1), -u(0);
  return f;
};

const Field exp_decay = [](const Eigen::VectorXd& u) { return (-u).eval(); };

}  // namespace

TEST_CASE("zero field keeps the trajectory constant") {
  Field zero = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Zero(u.size()).eval(); };
  Eigen::VectorXd u0(3);
  u0 << 1.0, -2.0, 0.5;
  for (auto tr : {integrate_rk4(zero, u0, grid(0, 1, 10)),
                  integrate_euler(zero, u0, grid(0, 1, 10)),
                  integrate_dopri5(zero, u0, grid(0, 1, 10))}) {
    for (long s = 0; s < tr.states.rows(); ++s)
      CHECK((tr.states.row(s).transpose() - u0).norm() == 0.0);
  }
}

TEST_CASE("rk4 on the mass-spring tracks the analytic circle") {
  Eigen::VectorXd u0(2);
  u0 << 1.0, 0.0;
  Trajectory tr = integrate_rk4(mass_spring, u0, grid(0.0, 1.0, 100));
  double worst = 0.0;
  for (long s = 0; s <= 100; ++s) {
    const double t = tr.times(s);
    worst = std::max(worst, std::abs(tr.states(s, 0) - std::cos(t)));
    worst = std::max(worst, std::abs(tr.states(s, 1) + std::sin(t)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("dopri5 hits the exponential to requested tolerance") {
  Eigen::VectorXd u0(1);
  u0 << 1.0;
  Trajectory tr = integrate_dopri5(exp_decay, u0, grid(0.0, 1.0, 1));
  CHECK(std::abs(tr.states(1, 0) - std::exp(-1.0)) <= 1e-7);

  Dopri5Opts tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  Trajectory tr2 = integrate_dopri5(exp_decay, u0, grid(0.0, 1.0, 1), tight);
  CHECK(std::abs(tr2.states(1, 0) - std::exp(-1.0)) <= 1e-10);
}

TEST_CASE("dopri5 dense output agrees with the analytic solution at grid points") {
  Eigen::VectorXd u0(2);
  u0 << 1.0, 0.0;
  // Very coarse output grid relative to internal steps, so every grid state
  // comes from the interpolant, not a step endpoint.
  Trajectory tr = integrate_dopri5(mass_spring, u0, grid(0.0, 10.0, 97));
  double worst = 0.0;
  for (long s = 0; s < tr.times.size(); ++s) {
    const double t = tr.times(s);
    worst = std::max(worst, std::abs(tr.states(s, 0) - std::cos(t)));
    worst = std::max(worst, std::abs(tr.states(s, 1) + std::sin(t)));
  }
  CHECK(worst <= 1e-6);  // interpolant is one order below the step pair
}

TEST_CASE("dopri5 convergence order on the exponential") {
  // Force fixed internal steps via max_dt with tolerances loose enough that
  // the cap binds; halving the cap must shrink the error by ~2^5 (embedded
  // 5th-order solution propagates), allowing generous slack above 2^4.
  Eigen::VectorXd u0(1);
  u0 << 1.0;
  auto run = [&](double cap) {
    Dopri5Opts o;
    o.rtol = 10.0;
    o.atol = 10.0;
    o.max_dt = cap;
    Trajectory tr = integrate_dopri5(exp_decay, u0, grid(0.0, 1.0, 1), o);
    return std::abs(tr.states(1, 0) - std::exp(-1.0));
  };
  const double eH = run(0.1);
  const double eh = run(0.05);
  CHECK(eH / eh >= 16.0 * 0.8);
}

TEST_CASE("dopri5 raises on step underflow and non-finite states") {
  // 1/(1-t)-style blow-up: u' = u², u(0)=2 diverges at t=0.5.
  Field blowup = [](const Eigen::VectorXd& u) {
    return (u.array() * u.array()).matrix().eval();
  };
  Eigen::VectorXd u0(1);
  u0 << 2.0;
  CHECK_THROWS_AS(integrate_dopri5(blowup, u0, grid(0.0, 1.0, 4)), FindeError);

  Field poison = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd f(u.size());
    f.setConstant(std::numeric_limits<double>::quiet_NaN());
    return f;
  };
  CHECK_THROWS_AS(integrate_dopri5(poison, u0, grid(0.0, 1.0, 4)), NonFiniteState);
}

TEST_CASE("grid validation") {
  Eigen::VectorXd u0(1);
  u0 << 1.0;
  Eigen::VectorXd bad(3);
  bad << 0.0, 1.0, 1.0;
  CHECK_THROWS_AS(integrate_rk4(exp_decay, u0, bad), ShapeError);
  CHECK_THROWS_AS(integrate_dopri5(exp_decay, u0, bad), ShapeError);
}

TEST_CASE("leapfrog hand-computed step on the mass-spring") {
  Eigen::VectorXd q(1), v(1);
  q << 1.0;
  v << 0.0;
  auto [qn, vn] = leapfrog_step(mass_spring, q, v, 0.2);
  CHECK(qn(0) == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(vn(0) == doctest::Approx(-0.198).epsilon(1e-15));

  auto [q0, v0] = leapfrog_step(mass_spring, q, v, 0.0);
  CHECK(q0(0) == 1.0);
  CHECK(v0(0) == 0.0);
}

TEST_CASE("leapfrog is time-reversible on separable fields") {
  Eigen::VectorXd q(1), v(1);
  q << 0.7;
  v << -0.3;
  auto [q1, v1] = leapfrog_step(mass_spring, q, v, 0.17);
  auto [q2, v2] = leapfrog_step(mass_spring, q1, v1, -0.17);
  CHECK(std::abs(q2(0) - q(0)) <= 1e-12);
  CHECK(std::abs(v2(0) - v(0)) <= 1e-12);
}

TEST_CASE("leapfrog energy fluctuation stays in the discretization band") {
  Eigen::VectorXd u0(2);
  u0 << 1.0, 0.0;
  Trajectory tr = integrate_leapfrog(mass_spring, u0, grid(0.0, 0.2 * 500, 500));
  const double E0 = 0.5 * (u0(0) * u0(0) + u0(1) * u0(1));
  double worst = 0.0;
  for (long s = 0; s <= 500; ++s) {
    const double E = 0.5 * (tr.states(s, 0) * tr.states(s, 0) + tr.states(s, 1) * tr.states(s, 1));
    worst = std::max(worst, std::abs(E - E0));
  }
  CHECK(worst >= 1e-4);
  CHECK(worst <= 1e-1);
}

TEST_CASE("leapfrog rejects odd state widths") {
  Eigen::VectorXd u0(3);
  u0 << 1.0, 0.0, 0.0;
  Field f = [](const Eigen::VectorXd& u) { return u; };
  CHECK_THROWS_AS(integrate_leapfrog(f, u0, grid(0, 1, 2)), ShapeError);
}

TEST_CASE("euler is first order on the exponential") {
  Eigen::VectorXd u0(1);
  u0 << 1.0;
  auto err = [&](long steps) {
    Trajectory tr = integrate_euler(exp_decay, u0, grid(0.0, 1.0, steps));
    return std::abs(tr.states(steps, 0) - std::exp(-1.0));
  };
  CHECK(err(200) / err(400) >= 2.0 * 0.9);
  CHECK(err(200) / err(400) <= 2.0 * 1.1);
}

TEST_CASE("trajectory starts exactly at the initial state") {
  Eigen::VectorXd u0(2);
  u0 << 0.25, -0.75;
  Trajectory tr = integrate_dopri5(mass_spring, u0, grid(0.0, 2.0, 20));
  CHECK((tr.states.row(0).transpose() - u0).norm() == 0.0);
  CHECK(tr.times(0) == 0.0);
}

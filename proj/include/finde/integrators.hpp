#pragma once
#include <Eigen/Core>
#include <functional>
#include <limits>
#include <utility>

#include "finde/tensor.hpp"

namespace finde {

// Autonomous right-hand side u̇ = f(u).
using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Trajectory {
  Eigen::VectorXd times;  // strictly increasing, length S+1
  MatRM states;           // (S+1) x N; row 0 is the initial state
};

struct Dopri5Opts {
  double rtol = 1e-7;
  double atol = 1e-9;
  double dt_min = 1e-12;
  double safety = 0.9;
  // Hard cap on the internal step (used by the convergence-order test and to
  // keep dense output honest on coarse grids).
  double max_dt = std::numeric_limits<double>::infinity();
  long max_steps = 100000000;
};

Eigen::VectorXd euler_step(const Field& f, const Eigen::VectorXd& u, double dt);
Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& u, double dt);

// Kick-drift-kick on a state split as (q, v) halves:
//   v½ = v + (dt/2)·f_v(q, v);  q′ = q + dt·f_q(q, v½);  v′ = v½ + (dt/2)·f_v(q′, v½)
// where f_q / f_v are the upper/lower halves of the field output.
std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog_step(const Field& f,
                                                          const Eigen::VectorXd& q,
                                                          const Eigen::VectorXd& v,
                                                          double dt);

// One fixed step per grid interval.
Trajectory integrate_rk4(const Field& f, const Eigen::VectorXd& u0,
                         const Eigen::VectorXd& t_grid);
Trajectory integrate_euler(const Field& f, const Eigen::VectorXd& u0,
                           const Eigen::VectorXd& t_grid);
Trajectory integrate_leapfrog(const Field& f, const Eigen::VectorXd& u0,
                              const Eigen::VectorXd& t_grid);

// Adaptive Dormand–Prince 5(4): internal steps chosen by the embedded error
// estimate (RMS norm scaled by atol + rtol·max(|u|,|u′|)); grid states read
// off the 4th-order dense interpolant. Raises StepUnderflow when the accepted
// step would fall below dt_min and NonFiniteState on NaN/Inf.
Trajectory integrate_dopri5(const Field& f, const Eigen::VectorXd& u0,
                            const Eigen::VectorXd& t_grid, const Dopri5Opts& opts = {});

}  // namespace finde

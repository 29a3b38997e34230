#include "finde/finde.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>

#include "finde/errors.hpp"
#include "finde/log.hpp"

namespace finde {

namespace {
std::atomic<long> g_solver_calls{0};

const ParamStore& store_for_bank(const DiscreteStepper& st) {
  static const ParamStore empty;
  return st.ps != nullptr ? *st.ps : empty;
}
}  // namespace

long dfinde_solver_calls() { return g_solver_calls.load(); }
void reset_dfinde_solver_calls() { g_solver_calls.store(0); }

StepperKind stepper_kind_from_name(const std::string& s) {
  if (s == "euler") return StepperKind::Euler;
  if (s == "rk4") return StepperKind::Rk4;
  if (s == "leapfrog") return StepperKind::Leapfrog;
  if (s == "dopri5") return StepperKind::Dopri5;
  throw ConfigError("unknown stepper kind: " + s);
}

const char* stepper_kind_name(StepperKind k) {
  switch (k) {
    case StepperKind::Euler: return "euler";
    case StepperKind::Rk4: return "rk4";
    case StepperKind::Leapfrog: return "leapfrog";
    case StepperKind::Dopri5: return "dopri5";
  }
  return "?";
}

Eigen::VectorXd cfinde_field(const ProjectedField& pf, const Eigen::VectorXd& u) {
  const Eigen::VectorXd fhat = pf.fhat(u);
  if (pf.bank == nullptr || pf.bank->K() == 0) return fhat;
  static const ParamStore empty;
  const ParamStore& ps = pf.ps != nullptr ? *pf.ps : empty;
  return project_onto_tangent(pf.bank->M(ps, u), fhat, pf.config);
}

Field make_cfinde_field(ProjectedField pf) {
  return [pf](const Eigen::VectorXd& u) { return cfinde_field(pf, u); };
}

Field make_model_field(const BaseField& base, const ParamStore& ps) {
  return [&base, &ps](const Eigen::VectorXd& u) { return base.eval(ps, u); };
}

Eigen::VectorXd base_step(const DiscreteStepper& st, const Eigen::VectorXd& u, double dt) {
  if (!(dt > 0.0)) throw ShapeError("base_step: dt must be positive");
  Eigen::VectorXd u1;
  switch (st.kind) {
    case StepperKind::Euler:
      u1 = euler_step(st.fhat, u, dt);
      break;
    case StepperKind::Rk4:
      u1 = rk4_step(st.fhat, u, dt);
      break;
    case StepperKind::Leapfrog: {
      if (u.size() % 2 != 0) throw ShapeError("leapfrog base step: odd state width");
      const long n = u.size() / 2;
      auto [qn, vn] = leapfrog_step(st.fhat, u.head(n), u.tail(n), dt);
      u1.resize(u.size());
      u1 << qn, vn;
      break;
    }
    case StepperKind::Dopri5: {
      Eigen::VectorXd grid(2);
      grid << 0.0, dt;
      u1 = integrate_dopri5(st.fhat, u, grid, st.dopri).states.row(1);
      break;
    }
  }
  return (u1 - u) / dt;
}

Eigen::VectorXd dfinde_residual_given_psi(const DiscreteStepper& st,
                                          const Eigen::VectorXd& u_next,
                                          const Eigen::VectorXd& u, double dt,
                                          const Eigen::VectorXd& psi) {
  Eigen::VectorXd projected = psi;
  if (st.bank != nullptr && st.bank->K() > 0) {
    projected =
        project_onto_tangent(st.bank->Mbar(store_for_bank(st), u_next, u), psi, st.config);
  }
  return (u_next - u) / dt - projected;
}

Eigen::VectorXd dfinde_residual(const DiscreteStepper& st, const Eigen::VectorXd& u_next,
                                const Eigen::VectorXd& u, double dt) {
  return dfinde_residual_given_psi(st, u_next, u, dt, base_step(st, u, dt));
}

Eigen::VectorXd dfinde_predict(const DiscreteStepper& st, const Eigen::VectorXd& u,
                               double dt) {
  g_solver_calls.fetch_add(1);
  const long n = u.size();
  const Eigen::VectorXd psi = base_step(st, u, dt);
  auto residual = [&](const Eigen::VectorXd& x) {
    return dfinde_residual_given_psi(st, x, u, dt, psi);
  };

  Eigen::VectorXd x = u + dt * psi;
  Eigen::VectorXd r = residual(x);
  double rn = r.norm();
  const double tol = st.config.root_tol;
  bool accepted = rn <= tol;

  for (int iter = 0; iter < st.config.max_iters && rn > 1e-15; ++iter) {
    // Forward-difference Jacobian of the residual in the unknown endpoint.
    Eigen::MatrixXd J(n, n);
    for (long j = 0; j < n; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x(j)));
      Eigen::VectorXd xp = x;
      xp(j) += h;
      J.col(j) = (residual(xp) - r) / h;
    }
    Eigen::VectorXd dx = J.partialPivLu().solve(-r);
    if (!dx.allFinite()) {
      if (accepted) break;
      throw NoConvergence("implicit step: singular Newton system");
    }

    double alpha = 1.0;
    Eigen::VectorXd x_try, r_try;
    double rn_try = rn;
    bool improved = false;
    for (int halve = 0; halve < 30; ++halve) {
      x_try = x + alpha * dx;
      r_try = residual(x_try);
      rn_try = r_try.norm();
      if (rn_try < rn) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    x = x_try;
    r = r_try;
    rn = rn_try;
    if (rn <= tol) accepted = true;
  }

  if (!accepted || !x.allFinite()) {
    throw NoConvergence("implicit step: residual norm " + std::to_string(rn) +
                        " above tolerance after Newton iterations");
  }

  if (st.bank != nullptr && st.bank->K() > 0) {
    const ParamStore& ps = store_for_bank(st);
    const Eigen::VectorXd Vu = st.bank->V(ps, u);
    const Eigen::VectorXd Vx = st.bank->V(ps, x);
    for (long k = 0; k < st.bank->K(); ++k) {
      if (std::abs(Vx(k) - Vu(k)) > 1e-9 * (1.0 + std::abs(Vu(k)))) {
        throw NoConvergence("implicit step: invariant " + std::to_string(k) +
                            " drifted by " + std::to_string(std::abs(Vx(k) - Vu(k))));
      }
    }
  }
  return x;
}

}  // namespace finde

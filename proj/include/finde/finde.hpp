#pragma once
#include <Eigen/Core>

#include "finde/integrators.hpp"
#include "finde/models.hpp"

namespace finde {

struct ProjectionConfig {
  double cond_threshold = 1e12;  // reject MMᵀ above this estimated condition
  double jitter = 0.0;           // optional diagonal regularization (off)
  double root_tol = 1e-10;       // implicit-step residual acceptance
  int max_iters = 100;           // implicit-step Newton budget
};

// f − Mᵀ(MMᵀ)⁻¹M f via the condition-checked Cholesky solve; K = 0 rows is a
// no-op. Raises SingularProjection on rank-deficient constraint rows.
Eigen::VectorXd project_onto_tangent(const Eigen::MatrixXd& M, const Eigen::VectorXd& f,
                                     const ProjectionConfig& cfg);

// The projector Y = Mᵀ(MMᵀ)⁻¹M materialized (test/diagnostic use only; the
// field paths never form it).
Eigen::MatrixXd projector_matrix(const Eigen::MatrixXd& M, const ProjectionConfig& cfg);

// Continuous-time projected field: f(u) = f̂(u) − M(u)ᵀ(MMᵀ)⁻¹M(u)f̂(u),
// which keeps every bank component constant along exact flows. The base field
// is an arbitrary closure so the same machinery serves learned models and
// hand-written dynamics; when the bank holds learned components, `ps` must
// point at their parameter store (and outlive the struct).
struct ProjectedField {
  Field fhat;
  const FirstIntegralBank* bank = nullptr;
  const ParamStore* ps = nullptr;
  ProjectionConfig config;
};

Eigen::VectorXd cfinde_field(const ProjectedField& pf, const Eigen::VectorXd& u);

// Closure over a copy of pf (the bank/ps pointers must stay valid).
Field make_cfinde_field(ProjectedField pf);
Field make_model_field(const BaseField& base, const ParamStore& ps);

// Discrete-time stepper: the base one-step map ψ̂(u; dt) = (ũ′ − u)/dt from
// one integrator pass over the raw base field, and the projected implicit
// update (u′ − u)/dt = (I − Ȳ(u′, u))·ψ̂(u; dt) with Ȳ built from two-point
// constraint rows, which transfers every bank component exactly across the
// step.
enum class StepperKind { Euler, Rk4, Leapfrog, Dopri5 };

StepperKind stepper_kind_from_name(const std::string& s);
const char* stepper_kind_name(StepperKind k);

struct DiscreteStepper {
  Field fhat;
  const FirstIntegralBank* bank = nullptr;
  const ParamStore* ps = nullptr;
  ProjectionConfig config;
  StepperKind kind = StepperKind::Rk4;
  Dopri5Opts dopri;  // used when kind == Dopri5
};

Eigen::VectorXd base_step(const DiscreteStepper& st, const Eigen::VectorXd& u, double dt);

// (u_next − u)/dt − (I − Ȳ(u_next, u))·ψ̂(u; dt); zero exactly at the implicit
// update's root. With data u_next this is the training residual and needs no
// solver.
Eigen::VectorXd dfinde_residual(const DiscreteStepper& st, const Eigen::VectorXd& u_next,
                                const Eigen::VectorXd& u, double dt);

// Same residual with ψ̂ precomputed (it depends on u only, so solvers and
// rollouts reuse it across residual evaluations).
Eigen::VectorXd dfinde_residual_given_psi(const DiscreteStepper& st,
                                          const Eigen::VectorXd& u_next,
                                          const Eigen::VectorXd& u, double dt,
                                          const Eigen::VectorXd& psi);

// Newton root of the residual (finite-difference Jacobian, step-halving line
// search, initial guess u + dt·ψ̂). Accepts at ‖r‖ ≤ root_tol, then keeps
// polishing while the residual still shrinks so long rollouts accumulate no
// invariant drift. Verifies |V_k(u′) − V_k(u)| ≤ 1e-9·(1+|V_k(u)|) before
// returning. Raises NoConvergence / SingularProjection.
Eigen::VectorXd dfinde_predict(const DiscreteStepper& st, const Eigen::VectorXd& u,
                               double dt);

// Implicit-solver invocation counter (training must never touch the solver;
// tests assert on this).
long dfinde_solver_calls();
void reset_dfinde_solver_calls();

}  // namespace finde

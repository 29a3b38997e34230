#pragma once
#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "finde/nets.hpp"

namespace finde {

enum class BaseKind { Node, Hnn, SecondOrder };
enum class ArchKind { Mlp, Conv };

const char* base_kind_name(BaseKind k);
const char* arch_kind_name(ArchKind k);
BaseKind base_kind_from_name(const std::string& s);
ArchKind arch_kind_from_name(const std::string& s);

// Map a gradient of a scalar function on (q, p) to the canonical field
// (∂/∂p, -∂/∂q). State dimension must be even.
Eigen::VectorXd canonical_field_from_grad(const Eigen::VectorXd& grad);

// Unconstrained base vector field u̇ = f̂(u).
//  - Node: f̂ is the raw net output (MLP or CNN).
//  - Hnn: a scalar net H(u); f̂ = (∂H/∂p, -∂H/∂q) with u = (q, p).
//  - SecondOrder: u = (q, v); a net a(u) gives accelerations, f̂ = (v, a(u)).
struct BaseField {
  BaseKind kind = BaseKind::Node;
  ArchKind arch = ArchKind::Mlp;
  long n_state = 0;
  MlpParams mlp;    // Node/Hnn/SecondOrder with arch == Mlp
  ConvParams conv;  // Node with arch == Conv

  Eigen::VectorXd eval(const ParamStore& ps, const Eigen::VectorXd& u) const;
  // Batched: X is (n_state x B); returns an (n_state x B) node.
  int build(Graph& g, int X) const;
};

BaseField make_base_field(ParamStore& ps, BaseKind kind, ArchKind arch, long n_state,
                          const MlpSpec& mlp_spec, const ConvSpec& conv_spec, Rng& rng);

// One closed-form invariant with an exact two-point gradient:
//   V(v) - V(u) = dgrad(v, u)ᵀ (v - u)   identically, and dgrad(u, u) = grad(u).
struct AnalyticInvariant {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> dgrad;
};

// V = ½ uᵀAu + bᵀu + c (A symmetric); two-point gradient is the midpoint rule
// A(u+v)/2 + b, which is exact for quadratics.
AnalyticInvariant quadratic_invariant(const std::string& name, const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& b, double c);

// V = Σ_i g_i(u_i); per-coordinate secant slope with midpoint-derivative
// fallback for |Δ| <= 1e-8.
AnalyticInvariant separable_invariant(
    const std::string& name, std::vector<std::function<double(double)>> g,
    std::vector<std::function<double(double)>> gprime);

// Arbitrary smooth V: midpoint gradient plus the secant correction
//   ∇V(m) + (V(v) - V(u) - ∇V(m)ᵀΔ)·Δ/‖Δ‖²,  m = (u+v)/2, Δ = v - u,
// exact by construction; reduces to ∇V(m) as Δ → 0.
AnalyticInvariant generic_invariant(
    const std::string& name, std::function<double(const Eigen::VectorXd&)> value,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad);

// Bank of K scalar functions whose gradient rows form the constraint matrix.
// Components are learned nets or closed-form invariants; closed-form rows
// enter training graphs as constants (their values depend on the data states,
// not on parameters).
struct BankComponent {
  enum class Kind { LearnedMlp, LearnedConv, Analytic };
  Kind kind = Kind::LearnedMlp;
  MlpParams mlp;
  ConvParams conv;
  AnalyticInvariant analytic;
  std::string name;  // bank slot ("V1", "V2", ...) or the analytic name
  std::string label() const;
};

struct FirstIntegralBank {
  long n_state = 0;
  std::vector<BankComponent> comps;

  long K() const { return static_cast<long>(comps.size()); }

  Eigen::VectorXd V(const ParamStore& ps, const Eigen::VectorXd& u) const;
  // Ordinary constraint matrix M = ∂V/∂u, (K x n_state).
  Eigen::MatrixXd M(const ParamStore& ps, const Eigen::VectorXd& u) const;
  // Two-point constraint matrix M̄(v, u); row k is the k-th two-point gradient.
  Eigen::MatrixXd Mbar(const ParamStore& ps, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& u) const;

  // Batched graph rows, one (B x n_state) node per component. X / Xv / Xu are
  // (n_state x B) nodes whose values must be known at build time (analytic
  // rows are evaluated host-side and inserted as constants).
  std::vector<int> build_M_rows(Graph& g, int X) const;
  std::vector<int> build_Mbar_rows(Graph& g, int Xv, int Xu) const;
  // Batched values, (K x B); used by invariant-drift reports and tests.
  int build_V(Graph& g, int X) const;
};

// Appends `k_learned` MLP components (or CNN components for conv banks) named
// bank.V1.., then the given closed-form invariants.
FirstIntegralBank make_bank(ParamStore& ps, long n_state, long k_learned, ArchKind arch,
                            const MlpSpec& mlp_spec, const ConvSpec& conv_spec,
                            const std::vector<AnalyticInvariant>& analytic, Rng& rng);

}  // namespace finde

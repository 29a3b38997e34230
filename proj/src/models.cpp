#include "finde/models.hpp"

#include <cmath>

#include "finde/errors.hpp"

namespace finde {

const char* base_kind_name(BaseKind k) {
  switch (k) {
    case BaseKind::Node: return "node";
    case BaseKind::Hnn: return "hnn";
    case BaseKind::SecondOrder: return "second-order";
  }
  return "?";
}

const char* arch_kind_name(ArchKind k) {
  return k == ArchKind::Mlp ? "mlp" : "conv";
}

BaseKind base_kind_from_name(const std::string& s) {
  if (s == "node") return BaseKind::Node;
  if (s == "hnn") return BaseKind::Hnn;
  if (s == "second-order") return BaseKind::SecondOrder;
  throw ConfigError("unknown base field kind: " + s);
}

ArchKind arch_kind_from_name(const std::string& s) {
  if (s == "mlp") return ArchKind::Mlp;
  if (s == "conv") return ArchKind::Conv;
  throw ConfigError("unknown architecture kind: " + s);
}

Eigen::VectorXd canonical_field_from_grad(const Eigen::VectorXd& grad) {
  const long n2 = grad.size();
  if (n2 % 2 != 0) throw ShapeError("canonical field needs an even state dimension");
  const long n = n2 / 2;
  Eigen::VectorXd f(n2);
  f.head(n) = grad.tail(n);
  f.tail(n) = -grad.head(n);
  return f;
}

// ---------------------------------------------------------------------------
// BaseField
// ---------------------------------------------------------------------------

BaseField make_base_field(ParamStore& ps, BaseKind kind, ArchKind arch, long n_state,
                          const MlpSpec& mlp_spec, const ConvSpec& conv_spec, Rng& rng) {
  BaseField f;
  f.kind = kind;
  f.arch = arch;
  f.n_state = n_state;
  if (arch == ArchKind::Conv) {
    if (kind != BaseKind::Node)
      throw ConfigError("conv base fields support only the plain (node) kind");
    ConvSpec cs = conv_spec;
    cs.length = n_state;
    cs.c_in = 1;
    cs.c_out = 1;
    f.conv = make_conv(ps, "base", cs, rng);
    return f;
  }
  MlpSpec ms = mlp_spec;
  ms.in = n_state;
  switch (kind) {
    case BaseKind::Node: ms.out = n_state; break;
    case BaseKind::Hnn:
      if (n_state % 2 != 0)
        throw ConfigError("hnn base field needs an even state dimension");
      ms.out = 1;
      break;
    case BaseKind::SecondOrder:
      if (n_state % 2 != 0)
        throw ConfigError("second-order base field needs an even state dimension");
      ms.out = n_state / 2;
      break;
  }
  f.mlp = make_mlp(ps, "base", ms, rng);
  return f;
}

Eigen::VectorXd BaseField::eval(const ParamStore& ps, const Eigen::VectorXd& u) const {
  if (arch == ArchKind::Conv) return conv_forward(ps, conv, u).out;
  switch (kind) {
    case BaseKind::Node: return mlp_forward(ps, mlp, u).out;
    case BaseKind::Hnn: {
      MlpTrace tr = mlp_forward(ps, mlp, u);
      Eigen::VectorXd grad = mlp_jacobian(ps, mlp, tr).row(0).transpose();
      return canonical_field_from_grad(grad);
    }
    case BaseKind::SecondOrder: {
      const long n = n_state / 2;
      Eigen::VectorXd f(n_state);
      f.head(n) = u.tail(n);
      f.tail(n) = mlp_forward(ps, mlp, u).out;
      return f;
    }
  }
  throw FindeError("unreachable base field kind");
}

namespace {
// Constant selector matrices for structured fields.
Tensor canonical_pairing(long n_state) {  // S = [[0, I], [-I, 0]]
  const long n = n_state / 2;
  Tensor S = Tensor::matrix(n_state, n_state);
  for (long i = 0; i < n; ++i) {
    S.at(i, n + i) = 1.0;
    S.at(n + i, i) = -1.0;
  }
  return S;
}
Tensor velocity_selector(long n_state) {  // rows 0..n-1 pick v, rest zero
  const long n = n_state / 2;
  Tensor P = Tensor::matrix(n_state, n_state);
  for (long i = 0; i < n; ++i) P.at(i, n + i) = 1.0;
  return P;
}
Tensor accel_embedder(long n_state) {  // (n_state x n): place accels in lower half
  const long n = n_state / 2;
  Tensor P = Tensor::matrix(n_state, n);
  for (long i = 0; i < n; ++i) P.at(n + i, i) = 1.0;
  return P;
}
}  // namespace

int BaseField::build(Graph& g, int X) const {
  if (arch == ArchKind::Conv) return conv_graph_forward(g, conv, X).out;
  switch (kind) {
    case BaseKind::Node: return mlp_graph_forward(g, mlp, X).out;
    case BaseKind::Hnn: {
      MlpGraphTrace tr = mlp_graph_forward(g, mlp, X);
      std::vector<int> s = slope_nodes(g, tr, tr);
      int rows = mlp_graph_row_chain(g, mlp, s);  // (B x n_state) gradient rows
      return g.matmul(g.constant(canonical_pairing(n_state)), g.transpose(rows));
    }
    case BaseKind::SecondOrder: {
      MlpGraphTrace tr = mlp_graph_forward(g, mlp, X);
      int vpart = g.matmul(g.constant(velocity_selector(n_state)), X);
      int apart = g.matmul(g.constant(accel_embedder(n_state)), tr.out);
      return g.add(vpart, apart);
    }
  }
  throw FindeError("unreachable base field kind");
}

// ---------------------------------------------------------------------------
// Analytic invariants
// ---------------------------------------------------------------------------

AnalyticInvariant quadratic_invariant(const std::string& name, const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& b, double c) {
  if (!A.isApprox(A.transpose(), 1e-12))
    throw ConfigError("quadratic invariant " + name + ": A must be symmetric");
  AnalyticInvariant inv;
  inv.name = name;
  inv.value = [A, b, c](const Eigen::VectorXd& u) {
    return 0.5 * u.dot(A * u) + b.dot(u) + c;
  };
  inv.grad = [A, b](const Eigen::VectorXd& u) -> Eigen::VectorXd { return A * u + b; };
  inv.dgrad = [A, b](const Eigen::VectorXd& v, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return A * (0.5 * (u + v)) + b;
  };
  return inv;
}

AnalyticInvariant separable_invariant(
    const std::string& name, std::vector<std::function<double(double)>> g,
    std::vector<std::function<double(double)>> gprime) {
  AnalyticInvariant inv;
  inv.name = name;
  inv.value = [g](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (long i = 0; i < u.size(); ++i) s += g[i](u(i));
    return s;
  };
  inv.grad = [gprime](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd r(u.size());
    for (long i = 0; i < u.size(); ++i) r(i) = gprime[i](u(i));
    return r;
  };
  inv.dgrad = [g, gprime](const Eigen::VectorXd& v,
                          const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd r(u.size());
    for (long i = 0; i < u.size(); ++i) {
      const double d = v(i) - u(i);
      if (std::abs(d) <= 1e-8) {
        r(i) = gprime[i](0.5 * (u(i) + v(i)));
      } else {
        r(i) = (g[i](v(i)) - g[i](u(i))) / d;
      }
    }
    return r;
  };
  return inv;
}

AnalyticInvariant generic_invariant(
    const std::string& name, std::function<double(const Eigen::VectorXd&)> value,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad) {
  AnalyticInvariant inv;
  inv.name = name;
  inv.value = value;
  inv.grad = grad;
  inv.dgrad = [value, grad](const Eigen::VectorXd& v,
                            const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::VectorXd mid = 0.5 * (u + v);
    Eigen::VectorXd gm = grad(mid);
    const Eigen::VectorXd delta = v - u;
    const double n2 = delta.squaredNorm();
    if (n2 <= 1e-28) return gm;
    const double corr = value(v) - value(u) - gm.dot(delta);
    return gm + (corr / n2) * delta;
  };
  return inv;
}

// ---------------------------------------------------------------------------
// FirstIntegralBank
// ---------------------------------------------------------------------------

std::string BankComponent::label() const {
  if (!name.empty()) return name;
  return kind == Kind::Analytic ? analytic.name : "learned";
}

FirstIntegralBank make_bank(ParamStore& ps, long n_state, long k_learned, ArchKind arch,
                            const MlpSpec& mlp_spec, const ConvSpec& conv_spec,
                            const std::vector<AnalyticInvariant>& analytic, Rng& rng) {
  FirstIntegralBank bank;
  bank.n_state = n_state;
  for (long k = 0; k < k_learned; ++k) {
    BankComponent comp;
    comp.name = "V" + std::to_string(k + 1);
    const std::string prefix = "bank." + comp.name;
    if (arch == ArchKind::Conv) {
      comp.kind = BankComponent::Kind::LearnedConv;
      ConvSpec cs = conv_spec;
      cs.length = n_state;
      cs.c_in = 1;
      cs.c_out = 1;
      comp.conv = make_conv(ps, prefix, cs, rng);
    } else {
      comp.kind = BankComponent::Kind::LearnedMlp;
      MlpSpec ms = mlp_spec;
      ms.in = n_state;
      ms.out = 1;
      comp.mlp = make_mlp(ps, prefix, ms, rng);
    }
    bank.comps.push_back(std::move(comp));
  }
  for (const auto& a : analytic) {
    BankComponent comp;
    comp.kind = BankComponent::Kind::Analytic;
    comp.analytic = a;
    bank.comps.push_back(std::move(comp));
  }
  return bank;
}

Eigen::VectorXd FirstIntegralBank::V(const ParamStore& ps, const Eigen::VectorXd& u) const {
  Eigen::VectorXd out(K());
  for (long k = 0; k < K(); ++k) {
    const BankComponent& c = comps[k];
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp:
        out(k) = mlp_forward(ps, c.mlp, u).out(0);
        break;
      case BankComponent::Kind::LearnedConv:
        out(k) = conv_forward(ps, c.conv, u).out.sum();
        break;
      case BankComponent::Kind::Analytic:
        out(k) = c.analytic.value(u);
        break;
    }
  }
  return out;
}

Eigen::MatrixXd FirstIntegralBank::M(const ParamStore& ps, const Eigen::VectorXd& u) const {
  Eigen::MatrixXd m(K(), n_state);
  for (long k = 0; k < K(); ++k) {
    const BankComponent& c = comps[k];
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp: {
        MlpTrace tr = mlp_forward(ps, c.mlp, u);
        m.row(k) = mlp_jacobian(ps, c.mlp, tr).row(0);
        break;
      }
      case BankComponent::Kind::LearnedConv: {
        ConvTrace tr = conv_forward(ps, c.conv, u);
        m.row(k) = conv_scalar_row(ps, c.conv, tr, tr).transpose();
        break;
      }
      case BankComponent::Kind::Analytic:
        m.row(k) = c.analytic.grad(u).transpose();
        break;
    }
  }
  return m;
}

Eigen::MatrixXd FirstIntegralBank::Mbar(const ParamStore& ps, const Eigen::VectorXd& v,
                                        const Eigen::VectorXd& u) const {
  Eigen::MatrixXd m(K(), n_state);
  for (long k = 0; k < K(); ++k) {
    const BankComponent& c = comps[k];
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp: {
        MlpTrace trv = mlp_forward(ps, c.mlp, v);
        MlpTrace tru = mlp_forward(ps, c.mlp, u);
        m.row(k) = mlp_discrete_jacobian(ps, c.mlp, trv, tru).row(0);
        break;
      }
      case BankComponent::Kind::LearnedConv: {
        ConvTrace trv = conv_forward(ps, c.conv, v);
        ConvTrace tru = conv_forward(ps, c.conv, u);
        m.row(k) = conv_scalar_row(ps, c.conv, trv, tru).transpose();
        break;
      }
      case BankComponent::Kind::Analytic:
        m.row(k) = c.analytic.dgrad(v, u).transpose();
        break;
    }
  }
  return m;
}

namespace {
// Host-evaluated rows for a closed-form component, inserted as a constant.
Tensor analytic_rows(const AnalyticInvariant& inv, const Tensor& Xv, const Tensor& Xu,
                     bool two_point) {
  const long N = Xu.d0;
  const long B = Xu.d1;
  Tensor rows = Tensor::matrix(B, N);
  for (long b = 0; b < B; ++b) {
    Eigen::VectorXd u(N), v(N);
    for (long i = 0; i < N; ++i) {
      u(i) = Xu.at(i, b);
      v(i) = Xv.at(i, b);
    }
    Eigen::VectorXd r = two_point ? inv.dgrad(v, u) : inv.grad(u);
    for (long i = 0; i < N; ++i) rows.at(b, i) = r(i);
  }
  return rows;
}
}  // namespace

std::vector<int> FirstIntegralBank::build_M_rows(Graph& g, int X) const {
  std::vector<int> rows;
  for (const auto& c : comps) {
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp: {
        MlpGraphTrace tr = mlp_graph_forward(g, c.mlp, X);
        rows.push_back(mlp_graph_row_chain(g, c.mlp, slope_nodes(g, tr, tr)));
        break;
      }
      case BankComponent::Kind::LearnedConv: {
        ConvGraphTrace tr = conv_graph_forward(g, c.conv, X);
        rows.push_back(conv_graph_row_chain(g, c.conv, tr, slope_nodes(g, tr, tr)));
        break;
      }
      case BankComponent::Kind::Analytic:
        rows.push_back(
            g.constant(analytic_rows(c.analytic, g.value(X), g.value(X), false)));
        break;
    }
  }
  return rows;
}

std::vector<int> FirstIntegralBank::build_Mbar_rows(Graph& g, int Xv, int Xu) const {
  std::vector<int> rows;
  for (const auto& c : comps) {
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp: {
        MlpGraphTrace trv = mlp_graph_forward(g, c.mlp, Xv);
        MlpGraphTrace tru = mlp_graph_forward(g, c.mlp, Xu);
        rows.push_back(mlp_graph_row_chain(g, c.mlp, slope_nodes(g, tru, trv)));
        break;
      }
      case BankComponent::Kind::LearnedConv: {
        ConvGraphTrace trv = conv_graph_forward(g, c.conv, Xv);
        ConvGraphTrace tru = conv_graph_forward(g, c.conv, Xu);
        rows.push_back(conv_graph_row_chain(g, c.conv, trv, slope_nodes(g, tru, trv)));
        break;
      }
      case BankComponent::Kind::Analytic:
        rows.push_back(
            g.constant(analytic_rows(c.analytic, g.value(Xv), g.value(Xu), true)));
        break;
    }
  }
  return rows;
}

int FirstIntegralBank::build_V(Graph& g, int X) const {
  const Tensor& Xv = g.value(X);
  const long B = Xv.d1;
  std::vector<int> parts;
  for (const auto& c : comps) {
    switch (c.kind) {
      case BankComponent::Kind::LearnedMlp:
        parts.push_back(mlp_graph_forward(g, c.mlp, X).out);
        break;
      case BankComponent::Kind::LearnedConv: {
        ConvGraphTrace tr = conv_graph_forward(g, c.conv, X);
        int ones = g.constant(Tensor::from_mat(Eigen::MatrixXd::Ones(1, n_state)));
        parts.push_back(g.matmul(ones, tr.out));
        break;
      }
      case BankComponent::Kind::Analytic: {
        Tensor vals = Tensor::matrix(1, B);
        for (long b = 0; b < B; ++b) {
          Eigen::VectorXd u(n_state);
          for (long i = 0; i < n_state; ++i) u(i) = Xv.at(i, b);
          vals.at(0, b) = c.analytic.value(u);
        }
        parts.push_back(g.constant(vals));
        break;
      }
    }
  }
  return g.concat_rows(parts);
}

}  // namespace finde

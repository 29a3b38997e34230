#include "finde/nets.hpp"

#include <Eigen/QR>
#include <cmath>

#include "finde/errors.hpp"

namespace finde {

Tensor init_orthogonal(long rows, long cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw ShapeError("init_orthogonal: empty shape");
  const long r = std::max(rows, cols);
  const long c = std::min(rows, cols);
  Eigen::MatrixXd A(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) A(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  Eigen::MatrixXd R = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (long j = 0; j < c; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  if (rows >= cols) return Tensor::from_mat(Q);
  return Tensor::from_mat(Q.transpose());
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

MlpParams make_mlp(ParamStore& ps, const std::string& prefix, const MlpSpec& spec,
                   Rng& rng) {
  if (spec.in < 1 || spec.out < 1)
    throw ShapeError("make_mlp: in/out must be set for " + prefix);
  MlpParams p;
  p.spec = spec;
  std::vector<long> widths;
  widths.push_back(spec.in);
  for (long h : spec.hidden) widths.push_back(h);
  widths.push_back(spec.out);
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string tag = prefix + ".W" + std::to_string(i + 1);
    p.W.push_back(ps.add(tag, init_orthogonal(widths[i + 1], widths[i], rng)));
    p.b.push_back(ps.add(prefix + ".b" + std::to_string(i + 1),
                         Tensor::vector(widths[i + 1])));
  }
  return p;
}

MlpTrace mlp_forward(const ParamStore& ps, const MlpParams& p, const Eigen::VectorXd& u) {
  MlpTrace tr;
  Eigen::VectorXd h = u;
  const size_t L = p.W.size();
  for (size_t i = 0; i < L; ++i) {
    Eigen::VectorXd z = ps.values[p.W[i]].mat() * h + ps.values[p.b[i]].vec();
    if (i + 1 < L) {
      tr.z.push_back(z);
      h = z.array().tanh();
    } else {
      tr.out = z;
    }
  }
  return tr;
}

namespace {
Eigen::MatrixXd mlp_chain(const ParamStore& ps, const MlpParams& p,
                          const std::vector<Eigen::VectorXd>& slopes) {
  const size_t L = p.W.size();
  Eigen::MatrixXd J = ps.values[p.W[L - 1]].mat();
  for (size_t i = L - 1; i-- > 0;) {
    J = J * slopes[i].asDiagonal() * ps.values[p.W[i]].mat();
  }
  return J;
}
}  // namespace

Eigen::MatrixXd mlp_jacobian(const ParamStore& ps, const MlpParams& p, const MlpTrace& tr) {
  std::vector<Eigen::VectorXd> slopes;
  for (const auto& z : tr.z)
    slopes.push_back((1.0 - z.array().tanh().square()).matrix());
  return mlp_chain(ps, p, slopes);
}

Eigen::MatrixXd mlp_discrete_jacobian(const ParamStore& ps, const MlpParams& p,
                                      const MlpTrace& tr_v, const MlpTrace& tr_u) {
  std::vector<Eigen::VectorXd> slopes;
  for (size_t i = 0; i < tr_u.z.size(); ++i) {
    const Eigen::VectorXd& a = tr_u.z[i];
    const Eigen::VectorXd& b = tr_v.z[i];
    Eigen::VectorXd s(a.size());
    for (long j = 0; j < a.size(); ++j) s(j) = tanh_slope_scalar(a(j), b(j));
    slopes.push_back(std::move(s));
  }
  return mlp_chain(ps, p, slopes);
}

MlpGraphTrace mlp_graph_forward(Graph& g, const MlpParams& p, int X) {
  MlpGraphTrace tr;
  int h = X;
  const size_t L = p.W.size();
  for (size_t i = 0; i < L; ++i) {
    const long nb = p.spec.hidden.size() > i ? p.spec.hidden[i] : p.spec.out;
    int b_vec = g.reshape(g.param(p.b[i]), 1, nb, 1);
    int z = g.add_bias_cols(g.matmul(g.param(p.W[i]), h), b_vec);
    if (i + 1 < L) {
      tr.z.push_back(z);
      h = g.tanh_(z);
    } else {
      tr.out = z;
    }
  }
  return tr;
}

std::vector<int> slope_nodes(Graph& g, const MlpGraphTrace& a, const MlpGraphTrace& b) {
  std::vector<int> s;
  for (size_t i = 0; i < a.z.size(); ++i) s.push_back(g.tanh_slope(a.z[i], b.z[i]));
  return s;
}

int mlp_graph_row_chain(Graph& g, const MlpParams& p, const std::vector<int>& slopes) {
  if (p.spec.out != 1)
    throw ShapeError("mlp_graph_row_chain expects a scalar-output net");
  const size_t L = p.W.size();
  const long h_last = p.spec.hidden.back();
  int w_out = g.reshape(g.param(p.W[L - 1]), 1, h_last, 1);
  // R starts as the per-sample row w_out ∘ D_last, shape (B x h_last).
  int R = g.mul_cols(g.transpose(slopes[L - 2]), w_out);
  for (size_t i = L - 2; i-- > 0;) {
    R = g.matmul(R, g.param(p.W[i + 1]));
    R = g.mul(R, g.transpose(slopes[i]));
  }
  return g.matmul(R, g.param(p.W[0]));
}

// ---------------------------------------------------------------------------
// CNN
// ---------------------------------------------------------------------------

ConvParams make_conv(ParamStore& ps, const std::string& prefix, const ConvSpec& spec,
                     Rng& rng) {
  if (spec.length < 3) throw ShapeError("make_conv: length must be >= 3");
  ConvParams p;
  p.spec = spec;
  const long chans[4] = {spec.c_in, spec.c_hidden, spec.c_hidden, spec.c_out};
  for (int i = 0; i < 3; ++i) {
    const std::string tag = prefix + ".W" + std::to_string(i + 1);
    p.W.push_back(ps.add(tag, init_orthogonal(chans[i + 1], 3 * chans[i], rng)));
    p.b.push_back(
        ps.add(prefix + ".b" + std::to_string(i + 1), Tensor::vector(chans[i + 1])));
  }
  return p;
}

namespace {
// One circular conv layer on a flat channel-major signal.
Eigen::VectorXd conv_apply(const Eigen::Map<const MatRM>& W, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& x, long L) {
  const long Co = W.rows();
  const long Ci = W.cols() / 3;
  Eigen::VectorXd out(Co * L);
  for (long co = 0; co < Co; ++co) {
    for (long l = 0; l < L; ++l) {
      double acc = b(co);
      for (long ci = 0; ci < Ci; ++ci) {
        for (long k = 0; k < 3; ++k) {
          const long m = (l + k - 1 + L) % L;
          acc += W(co, ci * 3 + k) * x(ci * L + m);
        }
      }
      out(co * L + l) = acc;
    }
  }
  return out;
}

// Push a gradient row over a layer's output back through its weights:
// r_in = r_out · T where T is the layer's dense circular-conv matrix.
Eigen::VectorXd conv_row_back(const Eigen::Map<const MatRM>& W, const Eigen::VectorXd& r,
                              long L) {
  const long Co = W.rows();
  const long Ci = W.cols() / 3;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Ci * L);
  for (long co = 0; co < Co; ++co) {
    for (long l = 0; l < L; ++l) {
      const double rv = r(co * L + l);
      if (rv == 0.0) continue;
      for (long ci = 0; ci < Ci; ++ci) {
        for (long k = 0; k < 3; ++k) {
          const long m = (l + k - 1 + L) % L;
          out(ci * L + m) += rv * W(co, ci * 3 + k);
        }
      }
    }
  }
  return out;
}
}  // namespace

ConvTrace conv_forward(const ParamStore& ps, const ConvParams& p, const Eigen::VectorXd& u) {
  const long L = p.spec.length;
  if (u.size() != p.spec.c_in * L)
    throw ShapeError("conv_forward: input length mismatch");
  ConvTrace tr;
  Eigen::VectorXd h = u;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd z =
        conv_apply(ps.values[p.W[i]].mat(), ps.values[p.b[i]].vec(), h, L);
    if (i < 2) {
      tr.z.push_back(z);
      h = z.array().tanh();
    } else {
      tr.out = z;
    }
  }
  return tr;
}

Eigen::VectorXd conv_scalar_row(const ParamStore& ps, const ConvParams& p,
                                const ConvTrace& tr_v, const ConvTrace& tr_u) {
  const long L = p.spec.length;
  if (p.spec.c_out != 1)
    throw ShapeError("conv_scalar_row expects a single output channel");
  Eigen::VectorXd r = Eigen::VectorXd::Ones(L);  // d(Σ out)/d out
  for (int i = 2; i >= 0; --i) {
    r = conv_row_back(ps.values[p.W[i]].mat(), r, L);
    if (i > 0) {
      const Eigen::VectorXd& a = tr_u.z[i - 1];
      const Eigen::VectorXd& b = tr_v.z[i - 1];
      for (long j = 0; j < r.size(); ++j) r(j) *= tanh_slope_scalar(a(j), b(j));
    }
  }
  return r;
}

namespace {
// Constant 0/1 matrix expanding a per-channel bias (C) to flat (C·L).
Tensor bias_expander(long C, long L) {
  Tensor E = Tensor::matrix(C * L, C);
  for (long c = 0; c < C; ++c)
    for (long l = 0; l < L; ++l) E.at(c * L + l, c) = 1.0;
  return E;
}
}  // namespace

ConvGraphTrace conv_graph_forward(Graph& g, const ConvParams& p, int Xflat) {
  const long L = p.spec.length;
  ConvGraphTrace tr;
  int h = Xflat;
  const long chans[4] = {p.spec.c_in, p.spec.c_hidden, p.spec.c_hidden, p.spec.c_out};
  for (int i = 0; i < 3; ++i) {
    int T = g.conv1d_as_matrix(g.param(p.W[i]), L);
    tr.T.push_back(T);
    int bflat = g.matmul(g.constant(bias_expander(chans[i + 1], L)),
                         g.reshape(g.param(p.b[i]), 1, chans[i + 1], 1));
    int z = g.add_bias_cols(g.matmul(T, h), bflat);
    if (i < 2) {
      tr.z.push_back(z);
      h = g.tanh_(z);
    } else {
      tr.out = z;
    }
  }
  return tr;
}

std::vector<int> slope_nodes(Graph& g, const ConvGraphTrace& a, const ConvGraphTrace& b) {
  std::vector<int> s;
  for (size_t i = 0; i < a.z.size(); ++i) s.push_back(g.tanh_slope(a.z[i], b.z[i]));
  return s;
}

int conv_graph_row_chain(Graph& g, const ConvParams& p, const ConvGraphTrace& fwd,
                         const std::vector<int>& slopes) {
  const long L = p.spec.length;
  if (p.spec.c_out != 1)
    throw ShapeError("conv_graph_row_chain expects a single output channel");
  // ones·T3 is sample-independent: a single row (c_hidden·L) broadcast per
  // sample, then scaled by each sample's D2 diagonal.
  int ones_row = g.constant(Tensor::from_mat(Eigen::MatrixXd::Ones(1, L)));
  int r3 = g.reshape(g.matmul(ones_row, fwd.T[2]), 1, p.spec.c_hidden * L, 1);
  int R = g.mul_cols(g.transpose(slopes[1]), r3);  // (B x c_h·L)
  R = g.matmul(R, fwd.T[1]);
  R = g.mul(R, g.transpose(slopes[0]));
  return g.matmul(R, fwd.T[0]);  // (B x c_in·L)
}

}  // namespace finde

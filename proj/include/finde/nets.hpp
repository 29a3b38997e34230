#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

#include "finde/graph.hpp"
#include "finde/rng.hpp"

namespace finde {

// Orthogonal init: QR of a standard-normal matrix with sign-corrected R
// diagonal, gain 1. rows >= cols gives WᵀW = I; rows <= cols gives WWᵀ = I.
// Deterministic for a given generator state.
Tensor init_orthogonal(long rows, long cols, Rng& rng);

// ---------------------------------------------------------------------------
// Fully connected net: hidden layers with tanh, linear output.
// ---------------------------------------------------------------------------

struct MlpSpec {
  long in = 0;
  std::vector<long> hidden = {200, 200};
  long out = 0;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<int> W;  // ParamStore ids, one per layer (hidden.size() + 1)
  std::vector<int> b;
};

MlpParams make_mlp(ParamStore& ps, const std::string& prefix, const MlpSpec& spec,
                   Rng& rng);

struct MlpTrace {
  std::vector<Eigen::VectorXd> z;  // pre-activations of each hidden layer
  Eigen::VectorXd out;
};

MlpTrace mlp_forward(const ParamStore& ps, const MlpParams& p, const Eigen::VectorXd& u);

// Ordinary Jacobian (out x in) as the explicit layer product
// W_last · D_n · W_n · ... · D_1 · W_1 with D_i = diag(σ'(z_i)).
Eigen::MatrixXd mlp_jacobian(const ParamStore& ps, const MlpParams& p, const MlpTrace& tr);

// Two-point (discrete) Jacobian: same product with slope diagonals
// D_i = diag(slope(z_i at u, z_i at v)); equals mlp_jacobian when the traces
// coincide.
Eigen::MatrixXd mlp_discrete_jacobian(const ParamStore& ps, const MlpParams& p,
                                      const MlpTrace& tr_v, const MlpTrace& tr_u);

// Graph builders (batched; states are columns of X: (in x B)).
struct MlpGraphTrace {
  std::vector<int> z;  // (hidden_i x B) pre-activation nodes
  int out = -1;        // (out x B)
};
MlpGraphTrace mlp_graph_forward(Graph& g, const MlpParams& p, int X);

// Per-sample gradient rows of a scalar-output MLP, batched as (B x in):
// row_b = w_out · D_n(b) · W_n · ... · D_1(b) · W_1. `slopes` holds the
// (hidden_i x B) diagonal entries — σ'(z_i) for the ordinary Jacobian, or
// two-point slopes for the discrete one (built with tanh_slope on paired
// traces).
int mlp_graph_row_chain(Graph& g, const MlpParams& p, const std::vector<int>& slopes);

// Convenience: slope nodes for an ordinary Jacobian (slope(z,z) = σ'(z)) or a
// discrete Jacobian (slope(z_u, z_v)) from forward traces.
std::vector<int> slope_nodes(Graph& g, const MlpGraphTrace& a, const MlpGraphTrace& b);

// ---------------------------------------------------------------------------
// 1-D circular CNN, kernel 3: c_in -> c_hidden -> c_hidden -> c_out.
// Weights are stored unfolded as (C_out x 3·C_in); channel-major flat layout
// (channel c, position l) -> index c·L + l.
// ---------------------------------------------------------------------------

struct ConvSpec {
  long c_in = 1;
  long c_hidden = 16;
  long c_out = 1;
  long length = 50;
};

struct ConvParams {
  ConvSpec spec;
  std::vector<int> W;  // 3 layers
  std::vector<int> b;
};

ConvParams make_conv(ParamStore& ps, const std::string& prefix, const ConvSpec& spec,
                     Rng& rng);

struct ConvTrace {
  std::vector<Eigen::VectorXd> z;  // flat (c_hidden·L) pre-activations, 2 layers
  Eigen::VectorXd out;             // flat (c_out·L)
};

ConvTrace conv_forward(const ParamStore& ps, const ConvParams& p, const Eigen::VectorXd& u);

// Gradient row (length L·c_in) of the length-summed scalar output
// V = Σ_l out_l, as the explicit chain ones·T_3·D_2·T_2·D_1·T_1 computed
// without materializing the dense conv matrices. Slope diagonals come from the
// two traces (pass the same trace twice for the ordinary gradient).
Eigen::VectorXd conv_scalar_row(const ParamStore& ps, const ConvParams& p,
                                const ConvTrace& tr_v, const ConvTrace& tr_u);

// Graph builders; states are columns of Xflat ((c_in·L) x B).
struct ConvGraphTrace {
  std::vector<int> z;
  int out = -1;        // ((c_out·L) x B)
  std::vector<int> T;  // dense conv-matrix nodes, one per layer
};
ConvGraphTrace conv_graph_forward(Graph& g, const ConvParams& p, int Xflat);

// Batched gradient rows (B x c_in·L) of the length-summed scalar output.
int conv_graph_row_chain(Graph& g, const ConvParams& p, const ConvGraphTrace& fwd,
                         const std::vector<int>& slopes);
std::vector<int> slope_nodes(Graph& g, const ConvGraphTrace& a, const ConvGraphTrace& b);

}  // namespace finde

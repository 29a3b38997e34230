#pragma once
#include <Eigen/Cholesky>
#include <memory>
#include <string>
#include <vector>

#include "finde/tensor.hpp"

namespace finde {

// Reverse-mode autodiff over a dynamic (define-by-run) graph. Node values are
// computed eagerly when ops are appended; backward() walks the tape in
// reverse. The op set is small and fixed; every op has an adjoint rule that is
// verified against central finite differences in the test suite.
enum class Op {
  Input,      // leaf supplied by the caller (receives gradients on request? no — data only)
  Constant,   // leaf, never receives gradients
  Param,      // leaf referencing a ParamStore slot; gradients accumulate there
  MatMul,     // (r x k)·(k x c) or (r x k)·(k) -> (r x c) / (r)
  Add,        // elementwise, same shape
  Sub,        // elementwise, same shape
  Scale,      // multiply by a compile-time constant scalar
  Tanh,       // elementwise tanh
  TanhSlope,  // elementwise (tanh b - tanh a)/(b - a); derivative at midpoint when |b-a| <= 1e-8
  DiagFromVector,  // (n) -> (n x n) diagonal matrix
  Conv1dCircular,  // weights (Co x 3Ci), input (Ci x L) -> (Co x L), circular padding
  Transpose,
  SolveSpd,   // A (K x K) SPD (symmetrized), B (K x M) or (K) -> X with A·X = B
  Dot,        // (n)·(n) -> scalar
  Sum,        // sum of all elements -> scalar
  Square,     // elementwise square
  Mul,        // elementwise product, same shape
  MulCols,    // X (r x c) scaled per column by v (c): out_ij = X_ij·v_j
  AddBiasCols,     // X (r x c) + b (r) broadcast across columns
  ConcatRows,      // stack rows of several (r_i x c) / (c) inputs -> (sum r_i x c)
  Conv1dAsMatrix,  // weights (Co x 3Ci) -> dense (Co·L x Ci·L) circular-conv matrix
  Reshape,         // reinterpret the flat buffer under a new shape
  ProjectTangent,  // fused batch tangent projection, see project_tangent() below
};

const char* op_name(Op op);

// Named parameter tensors. Graphs read values from here; gradients go to a
// caller-owned sink with matching indices (so a store can be shared by many
// graphs while each training loop owns its gradient buffers).
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  int add(const std::string& name, Tensor t) {
    names.push_back(name);
    values.push_back(std::move(t));
    return static_cast<int>(values.size()) - 1;
  }
  std::vector<Tensor> zero_grads() const {
    std::vector<Tensor> g;
    g.reserve(values.size());
    for (const auto& v : values) g.push_back(zeros_like(v));
    return g;
  }
  long total_size() const {
    long n = 0;
    for (const auto& v : values) n += v.size();
    return n;
  }
};

struct ProjectionOpts {
  double cond_threshold = 1e12;  // reject when est. 1-norm condition exceeds this
  double jitter = 0.0;           // optional diagonal regularization (off by default)
};

// Cached per-sample factorizations for the fused projection op.
struct ProjectCache {
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt;  // one per batch column
  Eigen::MatrixXd M;                             // (B·K) x N, sample-major blocks
  Eigen::MatrixXd y;                             // K x B multipliers
};

struct Node {
  Op op;
  std::vector<int> in;
  Tensor val;
  double cval = 0.0;   // Scale factor
  int param_id = -1;   // Param
  long aux0 = 0;       // Conv1dAsMatrix: L; Reshape: packed target shape (see graph.cpp)
  long aux1 = 0;
  std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt;  // SolveSpd
  std::shared_ptr<ProjectCache> proj;                // ProjectTangent
};

class Graph {
 public:
  // params may be null for graphs with no Param leaves. grad_sink, when
  // non-null, must match params->values in length and shapes.
  Graph(const ParamStore* params, std::vector<Tensor>* grad_sink)
      : params_(params), grads_(grad_sink) {}

  int input(Tensor v);
  int constant(Tensor v);
  int param(int param_id);

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int scale(int a, double c);
  int tanh_(int a);
  int tanh_slope(int a, int b);
  int diag_from_vector(int v);
  int conv1d_circular(int w, int x);
  int transpose(int a);
  int solve_spd(int a, int b, double cond_threshold = 1e12);
  int dot(int a, int b);
  int sum(int a);
  int square(int a);
  int mul(int a, int b);
  int mul_cols(int x, int v);
  int add_bias_cols(int x, int b);
  int concat_rows(const std::vector<int>& rows);
  int conv1d_as_matrix(int w, long L);
  int reshape(int a, int rank, long d0, long d1);
  // f: (N x B); rows[k]: (B x N), the k-th constraint-gradient row per sample.
  // Per column b of f: out_b = f_b − Mᵀ(MMᵀ)⁻¹M f_b with M stacked from
  // rows[..] at sample b. Raises SingularProjection on ill-conditioned MMᵀ.
  int project_tangent(int f, const std::vector<int>& rows, const ProjectionOpts& opts);

  // Cached forward value (computed eagerly at construction; idempotent).
  const Tensor& value(int id) const { return nodes_[id].val; }
  size_t num_nodes() const { return nodes_.size(); }

  // Reverse pass from a scalar seed node. Parameter gradients accumulate
  // additively into the gradient sink; input/constant leaves absorb nothing.
  void backward(int seed);

  // Gradient of an Input node from the most recent backward() call (zero
  // tensor if it was never reached). Used by tests probing non-parameter
  // adjoints.
  Tensor input_grad(int id) const;

  // When on, every forward value is checked for NaN/Inf (NonFiniteState).
  void set_check_finite(bool on) { check_finite_ = on; }

  // Largest MMᵀ / SolveSpd condition estimate seen while building this graph.
  double max_condition_seen() const { return max_condition_; }

 private:
  int push(Node n);
  const Tensor& v(int id) const { return nodes_[id].val; }
  [[noreturn]] void shape_fail(const std::string& what, int node_id) const;

  const ParamStore* params_ = nullptr;
  std::vector<Tensor>* grads_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<Tensor> last_adj_;  // adjoints of the last backward pass
  std::vector<char> last_touched_;
  bool check_finite_ = false;
  double max_condition_ = 0.0;
};

// Condition-checked SPD solve shared by the graph ops and the numeric path.
// Symmetrizes A, optionally adds jitter, solves A X = B via Cholesky; raises
// SingularProjection on factorization failure or condition estimate above
// threshold. The estimated 1-norm condition number is written to *cond_out
// when non-null.
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          double cond_threshold, double jitter = 0.0,
                          double* cond_out = nullptr,
                          Eigen::LLT<Eigen::MatrixXd>* llt_out = nullptr);

// Scalar two-point slope (tanh(b)-tanh(a))/(b-a) with the derivative-at-
// midpoint fallback for |b-a| <= 1e-8; single source of truth for the graph
// op and the numeric network paths.
double tanh_slope_scalar(double a, double b);

}  // namespace finde

#include "finde/graph.hpp"

#include <cmath>
#include <sstream>

#include "finde/errors.hpp"

namespace finde {

namespace {
constexpr double kSlopeFallback = 1e-8;
}

double tanh_slope_scalar(double a, double b) {
  if (std::abs(b - a) <= kSlopeFallback) {
    const double t = std::tanh(0.5 * (a + b));
    return 1.0 - t * t;
  }
  return (std::tanh(b) - std::tanh(a)) / (b - a);
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "subtract";
    case Op::Scale: return "scale";
    case Op::Tanh: return "tanh";
    case Op::TanhSlope: return "tanh-slope";
    case Op::DiagFromVector: return "diagonal-from-vector";
    case Op::Conv1dCircular: return "conv1d-circular";
    case Op::Transpose: return "transpose";
    case Op::SolveSpd: return "small-linear-solve";
    case Op::Dot: return "dot";
    case Op::Sum: return "sum";
    case Op::Square: return "square";
    case Op::Mul: return "multiply";
    case Op::MulCols: return "scale-columns";
    case Op::AddBiasCols: return "add-bias-columns";
    case Op::ConcatRows: return "concat-rows";
    case Op::Conv1dAsMatrix: return "conv1d-as-matrix";
    case Op::Reshape: return "reshape";
    case Op::ProjectTangent: return "project-tangent";
  }
  return "?";
}

void Graph::shape_fail(const std::string& what, int node_id) const {
  std::ostringstream oss;
  oss << what << " at node " << node_id;
  throw ShapeError(oss.str());
}

int Graph::push(Node n) {
  if (check_finite_ && !n.val.all_finite()) {
    throw NonFiniteState(std::string(op_name(n.op)) + ": non-finite value at node " +
                         std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::input(Tensor v) {
  Node n;
  n.op = Op::Input;
  n.val = std::move(v);
  return push(std::move(n));
}

int Graph::constant(Tensor v) {
  Node n;
  n.op = Op::Constant;
  n.val = std::move(v);
  return push(std::move(n));
}

int Graph::param(int param_id) {
  if (params_ == nullptr || param_id < 0 ||
      param_id >= static_cast<int>(params_->values.size())) {
    throw ShapeError("param: bad parameter id " + std::to_string(param_id));
  }
  Node n;
  n.op = Op::Param;
  n.param_id = param_id;
  n.val = params_->values[param_id];
  return push(std::move(n));
}

int Graph::matmul(int a, int b) {
  const Tensor& A = v(a);
  const Tensor& B = v(b);
  if (A.rank != 2 || (B.rank != 2 && B.rank != 1) || A.d1 != B.d0) {
    shape_fail("matmul: " + A.shape_str() + " * " + B.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::MatMul;
  n.in = {a, b};
  n.val = (B.rank == 2) ? Tensor::matrix(A.d0, B.d1) : Tensor::vector(A.d0);
  n.val.mat().noalias() = A.mat() * B.mat();
  return push(std::move(n));
}

static Tensor elementwise_shape_check(const Tensor& A, const Tensor& B, const char* what) {
  if (!A.same_shape(B)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + A.shape_str() + " vs " +
                     B.shape_str());
  }
  return zeros_like(A);
}

int Graph::add(int a, int b) {
  Node n;
  n.op = Op::Add;
  n.in = {a, b};
  n.val = elementwise_shape_check(v(a), v(b), "add");
  n.val.data = v(a).data + v(b).data;
  return push(std::move(n));
}

int Graph::sub(int a, int b) {
  Node n;
  n.op = Op::Sub;
  n.in = {a, b};
  n.val = elementwise_shape_check(v(a), v(b), "subtract");
  n.val.data = v(a).data - v(b).data;
  return push(std::move(n));
}

int Graph::scale(int a, double c) {
  Node n;
  n.op = Op::Scale;
  n.in = {a};
  n.cval = c;
  n.val = v(a);
  n.val.data *= c;
  return push(std::move(n));
}

int Graph::tanh_(int a) {
  Node n;
  n.op = Op::Tanh;
  n.in = {a};
  n.val = v(a);
  n.val.data = n.val.data.array().tanh();
  return push(std::move(n));
}

int Graph::tanh_slope(int a, int b) {
  const Tensor& A = v(a);
  const Tensor& B = v(b);
  Node n;
  n.op = Op::TanhSlope;
  n.in = {a, b};
  n.val = elementwise_shape_check(A, B, "tanh-slope");
  for (long i = 0; i < A.size(); ++i) {
    n.val.data(i) = tanh_slope_scalar(A.data(i), B.data(i));
  }
  return push(std::move(n));
}

int Graph::diag_from_vector(int a) {
  const Tensor& A = v(a);
  if (A.rank != 1) shape_fail("diagonal-from-vector: need vector, got " + A.shape_str(),
                              static_cast<int>(nodes_.size()));
  Node n;
  n.op = Op::DiagFromVector;
  n.in = {a};
  n.val = Tensor::matrix(A.d0, A.d0);
  for (long i = 0; i < A.d0; ++i) n.val.at(i, i) = A.data(i);
  return push(std::move(n));
}

int Graph::conv1d_circular(int w, int x) {
  const Tensor& W = v(w);
  const Tensor& X = v(x);
  if (W.rank != 2 || X.rank != 2 || W.d1 != 3 * X.d0) {
    shape_fail("conv1d-circular: weights " + W.shape_str() + " input " + X.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  const long Co = W.d0, Ci = X.d0, L = X.d1;
  Node n;
  n.op = Op::Conv1dCircular;
  n.in = {w, x};
  n.val = Tensor::matrix(Co, L);
  for (long co = 0; co < Co; ++co) {
    for (long ci = 0; ci < Ci; ++ci) {
      const double w0 = W.at(co, ci * 3 + 0);
      const double w1 = W.at(co, ci * 3 + 1);
      const double w2 = W.at(co, ci * 3 + 2);
      for (long l = 0; l < L; ++l) {
        const long lm = (l - 1 + L) % L;
        const long lp = (l + 1) % L;
        n.val.at(co, l) += w0 * X.at(ci, lm) + w1 * X.at(ci, l) + w2 * X.at(ci, lp);
      }
    }
  }
  return push(std::move(n));
}

int Graph::transpose(int a) {
  const Tensor& A = v(a);
  if (A.rank != 2) shape_fail("transpose: need matrix, got " + A.shape_str(),
                              static_cast<int>(nodes_.size()));
  Node n;
  n.op = Op::Transpose;
  n.in = {a};
  n.val = Tensor::matrix(A.d1, A.d0);
  n.val.mat() = A.mat().transpose();
  return push(std::move(n));
}

Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          double cond_threshold, double jitter, double* cond_out,
                          Eigen::LLT<Eigen::MatrixXd>* llt_out) {
  if (A.rows() != A.cols() || A.rows() != B.rows()) {
    throw ShapeError("solve_spd: A is " + std::to_string(A.rows()) + "x" +
                     std::to_string(A.cols()) + ", B has " + std::to_string(B.rows()) +
                     " rows");
  }
  Eigen::MatrixXd As = 0.5 * (A + A.transpose());
  if (jitter > 0.0) As.diagonal().array() += jitter;
  if (!As.allFinite()) throw SingularProjection("solve_spd: non-finite matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(As);
  if (llt.info() != Eigen::Success) {
    throw SingularProjection("solve_spd: Cholesky factorization failed (not SPD)");
  }
  // 1-norm condition estimate; ||A^-1||_1 from unit-vector solves (K is small).
  const long K = As.rows();
  const double a_norm = As.cwiseAbs().colwise().sum().maxCoeff();
  double ainv_norm = 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(K);
  for (long j = 0; j < K; ++j) {
    e(j) = 1.0;
    ainv_norm = std::max(ainv_norm, llt.solve(e).cwiseAbs().sum());
    e(j) = 0.0;
  }
  const double cond = a_norm * ainv_norm;
  if (cond_out != nullptr) *cond_out = cond;
  if (!(cond < cond_threshold)) {
    std::ostringstream oss;
    oss << "solve_spd: condition estimate " << cond << " exceeds threshold "
        << cond_threshold;
    throw SingularProjection(oss.str());
  }
  if (llt_out != nullptr) *llt_out = llt;
  return llt.solve(B);
}

int Graph::solve_spd(int a, int b, double cond_threshold) {
  const Tensor& A = v(a);
  const Tensor& B = v(b);
  if (A.rank != 2 || A.d0 != A.d1 || (B.rank != 2 && B.rank != 1) || B.d0 != A.d0) {
    shape_fail("small-linear-solve: A " + A.shape_str() + " B " + B.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::SolveSpd;
  n.in = {a, b};
  n.llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>();
  double cond = 0.0;
  Eigen::MatrixXd X = spd_solve(A.mat(), B.mat(), cond_threshold, 0.0, &cond, n.llt.get());
  max_condition_ = std::max(max_condition_, cond);
  n.val = (B.rank == 2) ? Tensor::matrix(B.d0, B.d1) : Tensor::vector(B.d0);
  n.val.mat() = X;
  return push(std::move(n));
}

int Graph::dot(int a, int b) {
  const Tensor& A = v(a);
  const Tensor& B = v(b);
  if (A.rank != 1 || B.rank != 1 || A.d0 != B.d0) {
    shape_fail("dot: " + A.shape_str() + " . " + B.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::Dot;
  n.in = {a, b};
  n.val = Tensor::scalar(A.data.dot(B.data));
  return push(std::move(n));
}

int Graph::sum(int a) {
  Node n;
  n.op = Op::Sum;
  n.in = {a};
  n.val = Tensor::scalar(v(a).data.sum());
  return push(std::move(n));
}

int Graph::square(int a) {
  Node n;
  n.op = Op::Square;
  n.in = {a};
  n.val = v(a);
  n.val.data = n.val.data.array().square();
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  Node n;
  n.op = Op::Mul;
  n.in = {a, b};
  n.val = elementwise_shape_check(v(a), v(b), "multiply");
  n.val.data = v(a).data.cwiseProduct(v(b).data);
  return push(std::move(n));
}

int Graph::mul_cols(int x, int s) {
  const Tensor& X = v(x);
  const Tensor& S = v(s);
  if (X.rank != 2 || S.rank != 1 || S.d0 != X.d1) {
    shape_fail("scale-columns: " + X.shape_str() + " by " + S.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::MulCols;
  n.in = {x, s};
  n.val = X;
  n.val.mat() = X.mat() * S.vec().asDiagonal();
  return push(std::move(n));
}

int Graph::add_bias_cols(int x, int b) {
  const Tensor& X = v(x);
  const Tensor& B = v(b);
  if (X.rank != 2 || B.rank != 1 || B.d0 != X.d0) {
    shape_fail("add-bias-columns: " + X.shape_str() + " plus " + B.shape_str(),
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::AddBiasCols;
  n.in = {x, b};
  n.val = X;
  n.val.mat().colwise() += B.vec();
  return push(std::move(n));
}

int Graph::concat_rows(const std::vector<int>& rows) {
  if (rows.empty()) shape_fail("concat-rows: empty input list",
                               static_cast<int>(nodes_.size()));
  long total = 0;
  long cols = -1;
  for (int id : rows) {
    const Tensor& R = v(id);
    const long rc = (R.rank == 1) ? R.d0 : R.d1;
    const long rr = (R.rank == 1) ? 1 : R.d0;
    if (cols < 0) cols = rc;
    if (rc != cols || R.rank == 0) {
      shape_fail("concat-rows: incompatible row " + R.shape_str(),
                 static_cast<int>(nodes_.size()));
    }
    total += rr;
  }
  Node n;
  n.op = Op::ConcatRows;
  n.in = rows;
  n.val = Tensor::matrix(total, cols);
  long r0 = 0;
  for (int id : rows) {
    const Tensor& R = v(id);
    const long rr = (R.rank == 1) ? 1 : R.d0;
    n.val.mat().middleRows(r0, rr) =
        Eigen::Map<const MatRM>(R.data.data(), rr, cols);
    r0 += rr;
  }
  return push(std::move(n));
}

int Graph::conv1d_as_matrix(int w, long L) {
  const Tensor& W = v(w);
  if (W.rank != 2 || W.d1 % 3 != 0 || L < 3) {
    shape_fail("conv1d-as-matrix: weights " + W.shape_str() + " length " +
               std::to_string(L), static_cast<int>(nodes_.size()));
  }
  const long Co = W.d0, Ci = W.d1 / 3;
  Node n;
  n.op = Op::Conv1dAsMatrix;
  n.in = {w};
  n.aux0 = L;
  n.val = Tensor::matrix(Co * L, Ci * L);
  for (long co = 0; co < Co; ++co) {
    for (long ci = 0; ci < Ci; ++ci) {
      for (long k = 0; k < 3; ++k) {
        const double wv = W.at(co, ci * 3 + k);
        for (long l = 0; l < L; ++l) {
          const long m = (l + k - 1 + L) % L;
          n.val.at(co * L + l, ci * L + m) = wv;
        }
      }
    }
  }
  return push(std::move(n));
}

int Graph::reshape(int a, int rank, long d0, long d1) {
  const Tensor& A = v(a);
  if (rank < 0 || rank > 2 || d0 * d1 != A.size()) {
    shape_fail("reshape: " + A.shape_str() + " to rank " + std::to_string(rank) + " (" +
               std::to_string(d0) + "x" + std::to_string(d1) + ")",
               static_cast<int>(nodes_.size()));
  }
  Node n;
  n.op = Op::Reshape;
  n.in = {a};
  n.val.rank = rank;
  n.val.d0 = d0;
  n.val.d1 = d1;
  n.val.data = A.data;
  return push(std::move(n));
}

int Graph::project_tangent(int f, const std::vector<int>& rows,
                           const ProjectionOpts& opts) {
  const Tensor& F = v(f);
  const long K = static_cast<long>(rows.size());
  if (F.rank != 2 || K == 0) {
    shape_fail("project-tangent: field " + F.shape_str() + " with K=" +
               std::to_string(K), static_cast<int>(nodes_.size()));
  }
  const long N = F.d0, B = F.d1;
  for (int id : rows) {
    const Tensor& R = v(id);
    if (R.rank != 2 || R.d0 != B || R.d1 != N) {
      shape_fail("project-tangent: row block " + R.shape_str() + ", want (" +
                 std::to_string(B) + "x" + std::to_string(N) + ")",
                 static_cast<int>(nodes_.size()));
    }
  }
  Node n;
  n.op = Op::ProjectTangent;
  n.in.push_back(f);
  for (int id : rows) n.in.push_back(id);
  n.proj = std::make_shared<ProjectCache>();
  n.proj->llt.resize(B);
  n.proj->M.resize(B * K, N);
  n.proj->y.resize(K, B);
  n.val = Tensor::matrix(N, B);

  Eigen::MatrixXd M(K, N);
  for (long b = 0; b < B; ++b) {
    for (long k = 0; k < K; ++k) M.row(k) = v(rows[k]).mat().row(b);
    const Eigen::VectorXd fb = F.mat().col(b);
    const Eigen::VectorXd c = M * fb;
    const Eigen::MatrixXd A = M * M.transpose();
    double cond = 0.0;
    Eigen::VectorXd y;
    try {
      y = spd_solve(A, c, opts.cond_threshold, opts.jitter, &cond, &n.proj->llt[b]);
    } catch (const SingularProjection& e) {
      throw SingularProjection(std::string("project-tangent: ") + e.what() +
                               " (batch column " + std::to_string(b) + ")");
    }
    max_condition_ = std::max(max_condition_, cond);
    n.val.mat().col(b) = fb - M.transpose() * y;
    n.proj->M.middleRows(b * K, K) = M;
    n.proj->y.col(b) = y;
  }
  return push(std::move(n));
}

void Graph::backward(int seed) {
  if (seed < 0 || seed >= static_cast<int>(nodes_.size())) {
    throw ShapeError("backward: bad seed node " + std::to_string(seed));
  }
  if (nodes_[seed].val.size() != 1) {
    throw ShapeError("backward: seed must be scalar, got " +
                     nodes_[seed].val.shape_str() + " at node " + std::to_string(seed));
  }
  last_adj_.assign(nodes_.size(), Tensor{});
  last_touched_.assign(nodes_.size(), 0);
  last_adj_[seed] = zeros_like(nodes_[seed].val);
  last_adj_[seed].data(0) = 1.0;
  last_touched_[seed] = 1;

  auto acc = [&](int id) -> Tensor& {
    if (!last_touched_[id]) {
      last_adj_[id] = zeros_like(nodes_[id].val);
      last_touched_[id] = 1;
    }
    return last_adj_[id];
  };

  for (int i = seed; i >= 0; --i) {
    if (!last_touched_[i]) continue;
    const Node& n = nodes_[i];
    const Tensor& g = last_adj_[i];
    switch (n.op) {
      case Op::Input:
      case Op::Constant:
        break;
      case Op::Param:
        if (grads_ != nullptr) (*grads_)[n.param_id].data += g.data;
        break;
      case Op::MatMul: {
        const Tensor& A = v(n.in[0]);
        const Tensor& B = v(n.in[1]);
        acc(n.in[0]).mat().noalias() += g.mat() * B.mat().transpose();
        acc(n.in[1]).mat().noalias() += A.mat().transpose() * g.mat();
        break;
      }
      case Op::Add:
        acc(n.in[0]).data += g.data;
        acc(n.in[1]).data += g.data;
        break;
      case Op::Sub:
        acc(n.in[0]).data += g.data;
        acc(n.in[1]).data -= g.data;
        break;
      case Op::Scale:
        acc(n.in[0]).data += n.cval * g.data;
        break;
      case Op::Tanh:
        acc(n.in[0]).data.array() +=
            g.data.array() * (1.0 - n.val.data.array().square());
        break;
      case Op::TanhSlope: {
        const Tensor& A = v(n.in[0]);
        const Tensor& B = v(n.in[1]);
        Tensor& da = acc(n.in[0]);
        Tensor& db = acc(n.in[1]);
        for (long i2 = 0; i2 < A.size(); ++i2) {
          const double av = A.data(i2);
          const double bv = B.data(i2);
          const double gv = g.data(i2);
          if (std::abs(bv - av) <= kSlopeFallback) {
            const double t = std::tanh(0.5 * (av + bv));
            const double d = -t * (1.0 - t * t);  // d/dm of sech^2(m), halved per input
            da.data(i2) += gv * d;
            db.data(i2) += gv * d;
          } else {
            const double ta = std::tanh(av);
            const double tb = std::tanh(bv);
            const double denom = bv - av;
            const double s = (tb - ta) / denom;
            da.data(i2) += gv * (s - (1.0 - ta * ta)) / denom;
            db.data(i2) += gv * ((1.0 - tb * tb) - s) / denom;
          }
        }
        break;
      }
      case Op::DiagFromVector: {
        Tensor& da = acc(n.in[0]);
        for (long i2 = 0; i2 < da.d0; ++i2) da.data(i2) += g.at(i2, i2);
        break;
      }
      case Op::Conv1dCircular: {
        const Tensor& W = v(n.in[0]);
        const Tensor& X = v(n.in[1]);
        Tensor& dw = acc(n.in[0]);
        Tensor& dx = acc(n.in[1]);
        const long Co = W.d0, Ci = X.d0, L = X.d1;
        for (long co = 0; co < Co; ++co) {
          for (long ci = 0; ci < Ci; ++ci) {
            for (long k = 0; k < 3; ++k) {
              const double wv = W.at(co, ci * 3 + k);
              double wg = 0.0;
              for (long l = 0; l < L; ++l) {
                const long m = (l + k - 1 + L) % L;
                const double gv = g.at(co, l);
                wg += gv * X.at(ci, m);
                dx.at(ci, m) += gv * wv;
              }
              dw.at(co, ci * 3 + k) += wg;
            }
          }
        }
        break;
      }
      case Op::Transpose:
        acc(n.in[0]).mat() += g.mat().transpose();
        break;
      case Op::SolveSpd: {
        const Tensor& X = n.val;
        Eigen::MatrixXd Bbar = n.llt->solve(g.mat());
        Eigen::MatrixXd Araw = -Bbar * X.mat().transpose();
        acc(n.in[0]).mat() += 0.5 * (Araw + Araw.transpose());
        acc(n.in[1]).mat() += Bbar;
        break;
      }
      case Op::Dot: {
        const double gv = g.scalar_value();
        acc(n.in[0]).data += gv * v(n.in[1]).data;
        acc(n.in[1]).data += gv * v(n.in[0]).data;
        break;
      }
      case Op::Sum:
        acc(n.in[0]).data.array() += g.scalar_value();
        break;
      case Op::Square:
        acc(n.in[0]).data.array() += g.data.array() * 2.0 * v(n.in[0]).data.array();
        break;
      case Op::Mul:
        acc(n.in[0]).data += g.data.cwiseProduct(v(n.in[1]).data);
        acc(n.in[1]).data += g.data.cwiseProduct(v(n.in[0]).data);
        break;
      case Op::MulCols: {
        const Tensor& X = v(n.in[0]);
        const Tensor& S = v(n.in[1]);
        acc(n.in[0]).mat() += g.mat() * S.vec().asDiagonal();
        acc(n.in[1]).vec() +=
            g.mat().cwiseProduct(X.mat()).colwise().sum().transpose();
        break;
      }
      case Op::AddBiasCols:
        acc(n.in[0]).data += g.data;
        acc(n.in[1]).vec() += g.mat().rowwise().sum();
        break;
      case Op::ConcatRows: {
        long r0 = 0;
        for (int id : n.in) {
          const Tensor& R = v(id);
          const long rr = (R.rank == 1) ? 1 : R.d0;
          Tensor& dr = acc(id);
          Eigen::Map<MatRM>(dr.data.data(), rr, n.val.d1) +=
              g.mat().middleRows(r0, rr);
          r0 += rr;
        }
        break;
      }
      case Op::Conv1dAsMatrix: {
        const Tensor& W = v(n.in[0]);
        Tensor& dw = acc(n.in[0]);
        const long L = n.aux0, Co = W.d0, Ci = W.d1 / 3;
        for (long co = 0; co < Co; ++co) {
          for (long ci = 0; ci < Ci; ++ci) {
            for (long k = 0; k < 3; ++k) {
              double wg = 0.0;
              for (long l = 0; l < L; ++l) {
                const long m = (l + k - 1 + L) % L;
                wg += g.at(co * L + l, ci * L + m);
              }
              dw.at(co, ci * 3 + k) += wg;
            }
          }
        }
        break;
      }
      case Op::Reshape:
        acc(n.in[0]).data += g.data;
        break;
      case Op::ProjectTangent: {
        const Tensor& F = v(n.in[0]);
        const long K = static_cast<long>(n.in.size()) - 1;
        const long B = F.d1;
        Tensor& df = acc(n.in[0]);
        for (long b = 0; b < B; ++b) {
          const Eigen::VectorXd gb = g.mat().col(b);
          const auto M = n.proj->M.middleRows(b * K, K);
          const Eigen::VectorXd yb = n.proj->y.col(b);
          const Eigen::VectorXd fb = F.mat().col(b);
          const Eigen::VectorXd ybar = -(M * gb);
          const Eigen::VectorXd w = n.proj->llt[b].solve(ybar);
          df.mat().col(b) += gb + M.transpose() * w;
          const Eigen::MatrixXd Mbar = -yb * gb.transpose() + w * fb.transpose() -
                                       (w * yb.transpose() + yb * w.transpose()) * M;
          for (long k = 0; k < K; ++k) {
            acc(n.in[1 + k]).mat().row(b) += Mbar.row(k);
          }
        }
        break;
      }
    }
  }
}

Tensor Graph::input_grad(int id) const {
  if (id >= 0 && id < static_cast<int>(last_touched_.size()) && last_touched_[id]) {
    return last_adj_[id];
  }
  return zeros_like(nodes_[id].val);
}

}  // namespace finde

#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

#include "finde/errors.hpp"

namespace finde {

// Row-major matrix view type used throughout; Tensor data is stored row-major.
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense double-precision tensor of rank 0 (scalar), 1 (vector) or 2 (matrix).
// Data is a flat row-major buffer of length d0*d1.
struct Tensor {
  int rank = 0;
  long d0 = 1;
  long d1 = 1;
  Eigen::VectorXd data = Eigen::VectorXd::Zero(1);

  static Tensor scalar(double v) {
    Tensor t;
    t.data(0) = v;
    return t;
  }
  static Tensor vector(long n) {
    Tensor t;
    t.rank = 1;
    t.d0 = n;
    t.data = Eigen::VectorXd::Zero(n);
    return t;
  }
  static Tensor matrix(long r, long c) {
    Tensor t;
    t.rank = 2;
    t.d0 = r;
    t.d1 = c;
    t.data = Eigen::VectorXd::Zero(r * c);
    return t;
  }
  static Tensor from_vec(const Eigen::VectorXd& v) {
    Tensor t = vector(v.size());
    t.data = v;
    return t;
  }
  static Tensor from_mat(const Eigen::MatrixXd& m) {
    Tensor t = matrix(m.rows(), m.cols());
    t.mat() = m;
    return t;
  }

  long size() const { return d0 * d1; }
  std::vector<long> shape() const {
    if (rank == 0) return {};
    if (rank == 1) return {d0};
    return {d0, d1};
  }

  double scalar_value() const { return data(0); }
  double& at(long i, long j) { return data(i * d1 + j); }
  double at(long i, long j) const { return data(i * d1 + j); }

  // d0 x d1 row-major matrix view (vectors are d0 x 1).
  Eigen::Map<MatRM> mat() { return {data.data(), d0, d1}; }
  Eigen::Map<const MatRM> mat() const { return {data.data(), d0, d1}; }
  Eigen::Map<Eigen::VectorXd> vec() { return {data.data(), data.size()}; }
  Eigen::Map<const Eigen::VectorXd> vec() const { return {data.data(), data.size()}; }

  bool same_shape(const Tensor& o) const {
    return rank == o.rank && d0 == o.d0 && d1 == o.d1;
  }
  bool all_finite() const { return data.allFinite(); }

  std::string shape_str() const;
};

// Zero tensor with the same shape as t.
Tensor zeros_like(const Tensor& t);

}  // namespace finde

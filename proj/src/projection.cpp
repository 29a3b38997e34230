#include <Eigen/Dense>

#include "finde/finde.hpp"
#include "finde/graph.hpp"

namespace finde {

Eigen::VectorXd project_onto_tangent(const Eigen::MatrixXd& M, const Eigen::VectorXd& f,
                                     const ProjectionConfig& cfg) {
  if (M.rows() == 0) return f;
  if (M.cols() != f.size()) throw ShapeError("projection: M columns must match state width");
  const Eigen::MatrixXd A = M * M.transpose();
  const Eigen::VectorXd lambda =
      spd_solve(A, M * f, cfg.cond_threshold, cfg.jitter);
  return f - M.transpose() * lambda;
}

Eigen::MatrixXd projector_matrix(const Eigen::MatrixXd& M, const ProjectionConfig& cfg) {
  const long n = M.cols();
  if (M.rows() == 0) return Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd A = M * M.transpose();
  const Eigen::MatrixXd X = spd_solve(A, Eigen::MatrixXd(M), cfg.cond_threshold, cfg.jitter);
  return M.transpose() * X;
}

}  // namespace finde

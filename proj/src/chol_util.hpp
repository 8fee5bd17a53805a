#pragma once

#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace nph::detail {

// Lower Cholesky factor with a one-shot 1e-12 diagonal jitter for
// semidefinite inputs. An exactly zero matrix factors to zero so degenerate
// samplers stay exact.
inline Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  if (cov.cwiseAbs().maxCoeff() == 0.0) {
    return Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(1.0, cov.diagonal().maxCoeff());
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += 1e-12 * scale;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "covariance is not positive semidefinite (Cholesky failed after jitter)");
  }
  return llt.matrixL();
}

}  // namespace nph::detail

#include "gsr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gsr/error.hpp"
#include "gsr/estimators.hpp"

namespace gsr {

ErrorDecomposition decompose_error(const Laplacian& lap, const NodeWeights& w,
                                   const VectorXd& x_true, const NoiseModel& noise) {
  const Index n = lap.size();
  if (x_true.size() != n) throw DimensionError("signal length does not match graph size");
  if (noise.size() != n) throw DimensionError("noise covariance does not match graph size");
  const MatrixXd h = filter_matrix(lap, w);
  const VectorXd bias = h * x_true - x_true;
  const MatrixXd h2 = h * h;

  ErrorDecomposition d;
  d.bias_sq = bias.squaredNorm();
  d.variance = (h2 * noise.covariance).trace();
  const MatrixXd residual = MatrixXd::Identity(n, n) - h;
  d.mse = ((residual * residual) * (x_true * x_true.transpose())).trace() + d.variance;
  return d;
}

TheoremQuantities theorem_quantities(const Laplacian& lap, const VectorXd& x_true,
                                     const NoiseModel& noise) {
  const Index n = lap.size();
  if (x_true.size() != n || noise.size() != n) throw DimensionError("dimension mismatch");
  Eigen::LDLT<MatrixXd> ldlt(noise.covariance);
  const double scale = noise.covariance.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) || !(ldlt.rcond() > 1e-14) ||
      (ldlt.vectorD().array() <= 0.0).any())
    throw SingularSystemError("noise covariance is singular");
  TheoremQuantities tq;
  tq.rho = std::max(0.0, x_true.dot(ldlt.solve(x_true)));
  tq.gamma = tq.rho / (1.0 + tq.rho);
  tq.lambda_max_L = lap.lambda_max();
  return tq;
}

bool check_lemma1(double w0, const VectorXd& w) {
  for (Index i = 0; i < w.size(); ++i)
    if (!(w0 <= w(i) * w(i))) return false;
  return true;
}

bool check_theorem1(double w0, const VectorXd& w, const TheoremQuantities& tq) {
  if (!check_lemma1(w0, w)) return false;
  const double max_sq = w.size() > 0 ? w.cwiseAbs2().maxCoeff() : 0.0;
  const double lmax = tq.lambda_max_L;
  const double rhs = 1.0 / (1.0 + w0 * lmax) + 1.0 / (1.0 + max_sq * lmax);
  return 2.0 * tq.gamma <= rhs;
}

bool check_corollary1(const VectorXd& w, const TheoremQuantities& tq) {
  const double max_sq = w.size() > 0 ? w.cwiseAbs2().maxCoeff() : 0.0;
  const double denom = tq.rho * tq.lambda_max_L;
  if (denom == 0.0) return true;
  return max_sq <= 1.0 / denom;
}

double optimal_w0(const Laplacian& lap, double snr_db, double multiplier) {
  const double lambda2 = lap.lambda2();
  if (!(lambda2 > 0.0)) throw ConnectivityError("optimal_w0: graph is disconnected (lambda2 = 0)");
  if (!(multiplier > 0.0)) throw DomainError("w0 multiplier must be positive");
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double theta = std::sqrt(1.0 / snr);
  return multiplier * std::sqrt(theta / (lambda2 * lap.lambda_max()));
}

}  // namespace gsr

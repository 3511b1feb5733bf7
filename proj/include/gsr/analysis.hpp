#pragma once

#include "gsr/graph.hpp"
#include "gsr/signal.hpp"

namespace gsr {

/// Exact bias / variance split of the full-mask estimator (I + S)^{-1} y.
struct ErrorDecomposition {
  double bias_sq = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

/// rho is the single nonzero eigenvalue of x* x*' Sigma^{-1};
/// gamma = rho / (1 + rho).
struct TheoremQuantities {
  double rho = 0.0;
  double gamma = 0.0;
  double lambda_max_L = 0.0;
};

ErrorDecomposition decompose_error(const Laplacian& lap, const NodeWeights& w,
                                   const VectorXd& x_true, const NoiseModel& noise);

/// rho = x*' Sigma^{-1} x*; throws SingularSystemError for singular Sigma.
TheoremQuantities theorem_quantities(const Laplacian& lap, const VectorXd& x_true,
                                     const NoiseModel& noise);

/// w0 <= w_i^2 for every node; exact comparison.
bool check_lemma1(double w0, const VectorXd& w);

/// Both sufficient conditions for mse(w) <= mse(w0) and var(w) <= var(w0):
/// the variance condition above and
///   2 gamma <= 1 / (1 + w0 lmax) + 1 / (1 + max w_i^2 lmax).
bool check_theorem1(double w0, const VectorXd& w, const TheoremQuantities& tq);

/// max w_i^2 <= 1 / (rho lmax); rho = 0 means no upper bound.
bool check_corollary1(const VectorXd& w, const TheoremQuantities& tq);

/// sqrt(theta / (lambda2 lambda_max)) with theta = sqrt(1 / SNR), times
/// `multiplier`. Throws ConnectivityError when lambda2 = 0.
double optimal_w0(const Laplacian& lap, double snr_db, double multiplier = 1.0);

}  // namespace gsr

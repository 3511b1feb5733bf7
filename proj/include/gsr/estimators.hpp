#pragma once

#include <optional>

#include "gsr/graph.hpp"
#include "gsr/signal.hpp"

namespace gsr {

enum class SolveMethod { Direct, ConjugateGradient, Distributed };

struct SolveOptions {
  SolveMethod method = SolveMethod::Direct;
  /// Relative residual target: CG stops once ||r||^2 <= eps^2 max(||r_0||^2, ||y||^2),
  /// so a warm start that already solves the system takes no steps.
  double cg_tolerance = 1e-8;
  /// Iteration budget; 0 means 10 * n.
  int max_iterations = 0;
  std::optional<VectorXd> warm_start;

  void validate() const;
  int iteration_budget(Index n) const;
};

struct SolveReport {
  VectorXd estimate;
  int iterations_used = 0;
  /// ||y - (I + S) x|| of the returned estimate (restricted to the mask for
  /// interpolation).
  double final_residual = 0.0;
  /// ||S(w)||_2, reported by the distributed recursion only.
  std::optional<double> spectral_norm;
  /// Set by the distributed recursion when ||S(w)|| >= 1.
  bool divergence_warning = false;
};

/// Dense filter H(w) = (I + S(w))^{-1}.
MatrixXd filter_matrix(const Laplacian& lap, const NodeWeights& w);

/// Closed-form (I + S(w)) x = y by Cholesky.
SolveReport solve_direct(const Laplacian& lap, const NodeWeights& w, const Observation& obs);

/// Conjugate gradient on (I + S(w)) x = y with edge-local products.
SolveReport solve_cg(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                     const SolveOptions& opts = {});

/// x_t = -S(w) x_{t-1} + y from x_0 = 0 for exactly `max_iterations` steps.
SolveReport solve_distributed(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                              const SolveOptions& opts = {});

/// Dispatches on opts.method; requires a full observation.
SolveReport solve(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                  const SolveOptions& opts = {});

/// min_x ||P_M (y - x)||^2 + x' S(w) x via (P_M + S(w)) x = P_M y.
/// Throws SingularSystemError when the normal matrix is singular.
SolveReport solve_interpolation(const Laplacian& lap, const NodeWeights& w, const Observation& obs);

/// Diffusion-kernel ridge regression baseline,
/// x = K_{:,M} (K_MM + |M| mu I)^{-1} y_M with K = exp(-sigma2 L / 2).
SolveReport solve_krr_diffusion(const Laplacian& lap, const Observation& obs, double sigma2_krr,
                                double mu_krr);

/// exp(-sigma2 L / 2) from the cached Laplacian eigendecomposition.
MatrixXd diffusion_kernel(const Laplacian& lap, double sigma2_krr);

}  // namespace gsr

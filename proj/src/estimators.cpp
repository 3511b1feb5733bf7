#include "gsr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gsr/error.hpp"

namespace gsr {

namespace {

void check_full(const Laplacian& lap, const NodeWeights& w, const Observation& obs) {
  if (obs.size() != lap.size())
    throw DimensionError("observation has length " + std::to_string(obs.size()) + ", graph has " +
                         std::to_string(lap.size()) + " nodes");
  w.check_size(lap.size());
  if (!obs.is_full()) throw DomainError("this solver requires a full observation mask");
}

VectorXd apply_system(const Laplacian& lap, const NodeWeights& w, const VectorXd& x) {
  return x + apply_shift(lap, w, x);
}

}  // namespace

void SolveOptions::validate() const {
  if (!(cg_tolerance > 0.0)) throw DomainError("cg_tolerance must be positive");
  if (max_iterations < 0) throw DomainError("max_iterations must be nonnegative");
}

int SolveOptions::iteration_budget(Index n) const {
  return max_iterations > 0 ? max_iterations : static_cast<int>(10 * n);
}

MatrixXd filter_matrix(const Laplacian& lap, const NodeWeights& w) {
  const Index n = lap.size();
  MatrixXd system = MatrixXd::Identity(n, n) + shift_operator(lap, w).matrix;
  Eigen::LLT<MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw SingularSystemError("I + S(w) is not positive definite");
  MatrixXd h = llt.solve(MatrixXd::Identity(n, n));
  return 0.5 * (h + h.transpose());
}

SolveReport solve_direct(const Laplacian& lap, const NodeWeights& w, const Observation& obs) {
  check_full(lap, w, obs);
  const Index n = lap.size();
  MatrixXd system = MatrixXd::Identity(n, n) + shift_operator(lap, w).matrix;
  Eigen::LLT<MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw SingularSystemError("I + S(w) is not positive definite");
  SolveReport report;
  report.estimate = llt.solve(obs.y);
  report.iterations_used = 1;
  report.final_residual = (obs.y - system * report.estimate).norm();
  return report;
}

SolveReport solve_cg(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                     const SolveOptions& opts) {
  check_full(lap, w, obs);
  opts.validate();
  const Index n = lap.size();
  const int budget = opts.iteration_budget(n);

  VectorXd x = VectorXd::Zero(n);
  if (opts.warm_start) {
    if (opts.warm_start->size() != n) throw DimensionError("warm start has the wrong length");
    x = *opts.warm_start;
  }
  VectorXd r = obs.y - apply_system(lap, w, x);
  VectorXd direction = r;
  double d_new = r.squaredNorm();
  const double d_initial = std::max(d_new, obs.y.squaredNorm());
  const double eps2 = opts.cg_tolerance * opts.cg_tolerance;

  int tau = 0;
  while (tau < budget && d_new > eps2 * d_initial) {
    const VectorXd q = apply_system(lap, w, direction);
    const double step = d_new / direction.dot(q);
    x += step * direction;
    r -= step * q;
    const double d_old = d_new;
    d_new = r.squaredNorm();
    direction = r + (d_new / d_old) * direction;
    ++tau;
  }

  SolveReport report;
  report.estimate = std::move(x);
  report.iterations_used = tau;
  report.final_residual = (obs.y - apply_system(lap, w, report.estimate)).norm();
  return report;
}

SolveReport solve_distributed(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                              const SolveOptions& opts) {
  check_full(lap, w, obs);
  opts.validate();
  const Index n = lap.size();
  const int steps = opts.iteration_budget(n);

  // S(w) is PSD, so its spectral norm is the largest eigenvalue.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(shift_operator(lap, w).matrix, Eigen::EigenvaluesOnly);
  const double norm = n > 0 ? std::max(0.0, es.eigenvalues()(n - 1)) : 0.0;

  VectorXd x = VectorXd::Zero(n);
  for (int t = 0; t < steps; ++t) x = obs.y - apply_shift(lap, w, x);

  SolveReport report;
  report.final_residual = (obs.y - apply_system(lap, w, x)).norm();
  report.estimate = std::move(x);
  report.iterations_used = steps;
  report.spectral_norm = norm;
  report.divergence_warning = norm >= 1.0;
  return report;
}

SolveReport solve(const Laplacian& lap, const NodeWeights& w, const Observation& obs,
                  const SolveOptions& opts) {
  switch (opts.method) {
    case SolveMethod::Direct:
      return solve_direct(lap, w, obs);
    case SolveMethod::ConjugateGradient:
      return solve_cg(lap, w, obs, opts);
    case SolveMethod::Distributed:
      return solve_distributed(lap, w, obs, opts);
  }
  throw DomainError("unknown solve method");
}

SolveReport solve_interpolation(const Laplacian& lap, const NodeWeights& w, const Observation& obs) {
  const Index n = lap.size();
  if (obs.size() != n) throw DimensionError("observation length does not match graph size");
  if (obs.mask.empty()) throw DomainError("observation mask is empty");
  w.check_size(n);

  MatrixXd system = shift_operator(lap, w).matrix;
  VectorXd rhs = VectorXd::Zero(n);
  for (Index i : obs.mask) {
    system(i, i) += 1.0;
    rhs(i) = obs.y(i);
  }
  Eigen::LDLT<MatrixXd> ldlt(system);
  const double scale = system.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12) ||
      (ldlt.vectorD().array() <= 1e-12 * std::max(scale, 1.0)).any())
    throw SingularSystemError(
        "P_M + S(w) is singular: some unobserved component is not tied to the observations");

  SolveReport report;
  report.estimate = ldlt.solve(rhs);
  report.iterations_used = 1;
  report.final_residual = (rhs - system * report.estimate).norm();
  return report;
}

MatrixXd diffusion_kernel(const Laplacian& lap, double sigma2_krr) {
  if (!(sigma2_krr >= 0.0)) throw DomainError("sigma2_krr must be nonnegative");
  const VectorXd decay = (-0.5 * sigma2_krr * lap.eigenvalues().array()).exp();
  const MatrixXd& u = lap.eigenvectors();
  return u * decay.asDiagonal() * u.transpose();
}

SolveReport solve_krr_diffusion(const Laplacian& lap, const Observation& obs, double sigma2_krr,
                                double mu_krr) {
  const Index n = lap.size();
  if (obs.size() != n) throw DimensionError("observation length does not match graph size");
  if (!(mu_krr >= 0.0)) throw DomainError("mu_krr must be nonnegative");
  const MatrixXd kernel = diffusion_kernel(lap, sigma2_krr);
  const Index m = static_cast<Index>(obs.mask.size());

  MatrixXd k_mm(m, m);
  MatrixXd k_nm(n, m);
  for (Index b = 0; b < m; ++b) {
    k_nm.col(b) = kernel.col(obs.mask[b]);
    for (Index a = 0; a < m; ++a) k_mm(a, b) = kernel(obs.mask[a], obs.mask[b]);
  }
  k_mm.diagonal().array() += static_cast<double>(m) * mu_krr;
  Eigen::LDLT<MatrixXd> ldlt(k_mm);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14))
    throw SingularSystemError("regularised kernel matrix is singular");
  const VectorXd y_m = obs.observed_values();
  const VectorXd alpha = ldlt.solve(y_m);

  SolveReport report;
  report.estimate = k_nm * alpha;
  report.iterations_used = 1;
  report.final_residual = (k_mm * alpha - y_m).norm();
  return report;
}

}  // namespace gsr

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gsr/conic.hpp"
#include "gsr/graph.hpp"
#include "gsr/signal.hpp"

namespace gsr {

/// x* known exactly; the designs use X = x* x*'.
struct ExactSignal {
  VectorXd x;
};

/// Second-moment estimate X of the signal (e.g. averaged over training data).
struct SignalOuterProduct {
  MatrixXd X;
};

using SignalPrior = std::variant<ExactSignal, SignalOuterProduct, SignalBounds>;

/// Inputs of a weight-design run.
struct DesignProblem {
  Laplacian lap;
  SignalPrior prior;
  std::optional<NoiseModel> noise;  // needed by the SDR designs
  double w0_star = 0.0;             // diagonal floor Omega_ii >= w0_star
  /// Extra worst-case candidates for the min-max designs, on top of x_l and x_u.
  std::vector<VectorXd> extra_candidates;

  /// X for the exact and outer-product priors; DomainError for bounds.
  MatrixXd second_moment() const;
  void validate() const;
};

/// Free entries of Omega when fitting it to a filter H.
enum class OmegaSupport {
  GraphEdges,  // diagonal plus the edges of L; everything else is zero
  Full,        // every entry; those off the edges only enter through Omega >= 0
};

struct SdpSolverConfig {
  enum class Backend { FirstOrderSplitting, InteriorPoint };

  double tolerance = 1e-7;
  /// Iteration cap; the interior-point backend also stops at 200 Newton steps.
  int max_iterations = 50000;
  Backend backend = Backend::InteriorPoint;
  /// SDR designs add Omega_ii <= sdr_diagonal_cap * w0_star; without it the
  /// relaxation's infimum is approached only as Omega grows without bound.
  /// Infinity removes the cap.
  double sdr_diagonal_cap = 1e3;
  OmegaSupport sdr_recovery_support = OmegaSupport::Full;
  /// Solver iteration log on stderr.
  bool verbose = false;

  void validate() const;
  conic::Settings settings() const;
};

struct SolverStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct DesignResult {
  VectorXd omega;
  MatrixXd Omega;
  double objective_value = 0.0;
  SolverStats solver_stats;
  double rank1_quality = 1.0;

  NodeWeights weights() const { return NodeWeights::adaptive(omega); }
};

struct RankOne {
  VectorXd omega;
  double quality = 1.0;
};

/// sqrt(lambda_1) u_1 of a PSD matrix, signed so that sum(omega) >= 0;
/// quality = lambda_1 / trace. The zero matrix gives omega = 0, quality 1.
RankOne rank_one_extract(const MatrixXd& Omega);

/// min tr((Omega o L)^2 X) over PSD Omega with Omega_ii >= w0_star.
///
/// The designs with a floor return omega = rank_one_extract(Omega) with every
/// entry of magnitude below sqrt(w0_star) replaced by +sqrt(w0_star), so omega
/// satisfies the floor even when Omega is not rank one.
DesignResult design_prony(const DesignProblem& problem, const SdpSolverConfig& cfg = {});

/// design_prony without the diagonal floor.
DesignResult design_prony_unconstrained(const DesignProblem& problem,
                                        const SdpSolverConfig& cfg = {});

/// Semidefinite relaxation over (Omega, H):
///   min tr((H^2 - 2H + I) X + H^2 Sigma)
///   s.t. [I + Omega o L, I; I, H] >= 0, Omega >= 0, Omega_ii >= w0_star,
/// followed by recover_omega(H) and rank-one extraction.
DesignResult design_sdr(const DesignProblem& problem, const SdpSolverConfig& cfg = {});

/// Worst case of the Prony cost over x_l, x_u and any extra candidates.
DesignResult design_minmax_prony(const DesignProblem& problem, const SdpSolverConfig& cfg = {});

/// Worst case of the SDR cost over x_l, x_u and any extra candidates.
DesignResult design_minmax_sdr(const DesignProblem& problem, const SdpSolverConfig& cfg = {});

struct RecoveredOmega {
  MatrixXd Omega;
  /// ||H(I + Omega o L) - I||_F^2 + ||(I + Omega o L)H - I||_F^2 at the solution.
  double residual = 0.0;
};

/// Least-squares fit of a PSD Omega to a target filter H. Throws
/// SingularSystemError when cond(H) > 1e12.
RecoveredOmega recover_omega(const MatrixXd& H_star, const Laplacian& lap,
                             const SdpSolverConfig& cfg = {},
                             OmegaSupport support = OmegaSupport::GraphEdges);

/// Prony cost tr((Omega o L)^2 X).
double prony_cost(const MatrixXd& Omega, const Laplacian& lap, const MatrixXd& X);

/// SDR cost tr((H^2 - 2H + I) X + H^2 Sigma).
double sdr_cost(const MatrixXd& H, const MatrixXd& X, const MatrixXd& Sigma);

/// `omega=<csv>; objective=<f>; rank1_quality=<f>; residuals=<primal>,<dual>`
void write_design_record(std::ostream& out, const DesignResult& result);
std::string format_design_record(const DesignResult& result);
/// Parses a record back; Omega is rebuilt as omega omega'.
DesignResult parse_design_record(const std::string& line);

}  // namespace gsr

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gsr::conic {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;
using Triplet = Eigen::Triplet<double, Index>;

/// One block of consecutive constraint rows.
///
/// Semidefinite blocks hold svec(M) of a `side` x `side` symmetric matrix:
/// lower triangle, column by column, off-diagonal entries scaled by sqrt(2).
/// SecondOrder blocks are (t, u) with ||u|| <= t.
struct Cone {
  enum class Kind { Zero, NonNegative, SecondOrder, Semidefinite };
  Kind kind = Kind::NonNegative;
  Index dim = 0;
  Index side = 0;  // Semidefinite only

  static Cone zero(Index dim) { return {Kind::Zero, dim, 0}; }
  static Cone nonnegative(Index dim) { return {Kind::NonNegative, dim, 0}; }
  static Cone second_order(Index dim) { return {Kind::SecondOrder, dim, 0}; }
  static Cone semidefinite(Index side) { return {Kind::Semidefinite, side * (side + 1) / 2, side}; }
};

/// minimize 1/2 x'Px + q'x  subject to  Ax + s = b,  s in K.
/// P must be symmetric (both triangles stored).
struct Problem {
  SparseMatrix P;
  VectorXd q;
  SparseMatrix A;
  VectorXd b;
  std::vector<Cone> cones;

  Index num_variables() const noexcept { return q.size(); }
  Index num_constraints() const noexcept { return b.size(); }
  /// Throws DimensionError on inconsistent sizes.
  void validate() const;
};

struct Settings {
  double eps_abs = 1e-7;
  double eps_rel = 1e-7;
  int max_iterations = 50000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 40;
  int check_interval = 10;
  int scaling_iterations = 10;
  /// Anderson acceleration memory; 0 runs plain ADMM.
  int anderson_memory = 10;
  /// Systems up to this size are factored densely, larger ones sparsely.
  Index dense_limit = 4000;
  /// Newton step cap of the interior-point solver.
  int ipm_max_iterations = 100;
  int ipm_refinement_steps = 10;
  /// Per-iteration log on stderr (interior-point solver).
  bool verbose = false;
};

enum class Status { Solved, MaxIterations, Stalled };

struct Result {
  Status status = Status::MaxIterations;
  VectorXd x;
  VectorXd s;
  VectorXd y;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  int factorizations = 0;
};

struct WarmStart {
  VectorXd x;
  VectorXd s;
  VectorXd y;
};

Result solve(const Problem& problem, const Settings& settings = {},
             const std::optional<WarmStart>& warm = std::nullopt);

/// Primal-dual interior-point method (Nesterov-Todd scaling, Mehrotra
/// predictor-corrector) on the same problem form. Uses eps_abs as the
/// feasibility and gap tolerance and eps_rel as the relative gap tolerance.
Result solve_interior_point(const Problem& problem, const Settings& settings = {});

/// Euclidean projection of `v` onto the cone (in place).
void project(const Cone& cone, Eigen::Ref<VectorXd> v);

// svec helpers ---------------------------------------------------------------

/// Position of entry (row, col), row >= col, inside svec of a side x side matrix.
inline Index svec_index(Index side, Index row, Index col) {
  if (row < col) std::swap(row, col);
  return col * side - col * (col - 1) / 2 + (row - col);
}
VectorXd svec(const MatrixXd& m);
MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index side);

}  // namespace gsr::conic

#include "gsr/design.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "gsr/error.hpp"

namespace gsr {

namespace {

using conic::Cone;
using conic::SparseMatrix;
using conic::Triplet;
using conic::svec_index;

constexpr double kSqrt2 = 1.41421356237309504880;

Index svec_size(Index n) { return n * (n + 1) / 2; }

/// Columns R with R R' = M, dropping the numerically null part of M.
MatrixXd psd_factor(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  const VectorXd& lam = es.eigenvalues();
  const double top = lam.size() ? std::max(lam.cwiseAbs().maxCoeff(), 0.0) : 0.0;
  std::vector<Index> keep;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam(i) > 1e-14 * top && lam(i) > 0.0) keep.push_back(i);
  MatrixXd r(m.rows(), static_cast<Index>(keep.size()));
  for (Index c = 0; c < r.cols(); ++c)
    r.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(lam(keep[c]));
  return r;
}

/// Sparse G with G svec(Z) = vec((W o Z) R) for symmetric Z; entries of W
/// that are exactly zero are skipped. Columns start at `col_offset`.
std::vector<Triplet> hadamard_times_factor(const MatrixXd& w, const MatrixXd& r, Index col_offset) {
  const Index n = w.rows();
  std::vector<Triplet> t;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      const Index p = col_offset + svec_index(n, i, j);
      if (i == j) {
        for (Index k = 0; k < r.cols(); ++k)
          if (r(j, k) != 0.0) t.emplace_back(i + n * k, p, wij * r(j, k));
      } else {
        const double c = wij / kSqrt2;
        for (Index k = 0; k < r.cols(); ++k) {
          if (r(j, k) != 0.0) t.emplace_back(i + n * k, p, c * r(j, k));
          if (r(i, k) != 0.0) t.emplace_back(j + n * k, p, c * r(i, k));
        }
      }
    }
  return t;
}

SparseMatrix to_sparse(Index rows, Index cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Accumulates constraint rows block by block, in cone order.
class ConstraintBuilder {
 public:
  explicit ConstraintBuilder(Index n_vars) : n_vars_(n_vars) {}

  Index begin(const Cone& cone) {
    const Index start = rows_;
    cones_.push_back(cone);
    rows_ += cone.dim;
    b_.conservativeResize(rows_);
    b_.tail(cone.dim).setZero();
    return start;
  }
  void add(Index row, Index col, double v) { triplets_.emplace_back(row, col, v); }
  void add_block(Index row_offset, const SparseMatrix& block, double scale) {
    for (Index c = 0; c < block.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(block, c); it; ++it)
        triplets_.emplace_back(row_offset + it.row(), it.col(), scale * it.value());
  }
  double& b(Index row) { return b_(row); }

  void finish(conic::Problem& prob) {
    prob.A = to_sparse(rows_, n_vars_, triplets_);
    prob.b = b_;
    prob.cones = cones_;
  }

 private:
  Index n_vars_;
  Index rows_ = 0;
  std::vector<Triplet> triplets_;
  VectorXd b_;
  std::vector<Cone> cones_;
};

/// Omega_ii >= floor on the Omega block at column 0.
void add_diagonal_floor(ConstraintBuilder& cb, Index n, double floor) {
  const Index start = cb.begin(Cone::nonnegative(n));
  for (Index i = 0; i < n; ++i) {
    cb.add(start + i, svec_index(n, i, i), -1.0);
    cb.b(start + i) = -floor;
  }
}

/// PSD cone on a svec block of `side` starting at column `col_offset`.
void add_psd_block(ConstraintBuilder& cb, Index side, Index col_offset) {
  const Index start = cb.begin(Cone::semidefinite(side));
  for (Index p = 0; p < svec_size(side); ++p) cb.add(start + p, col_offset + p, -1.0);
}

/// ||G z||^2 + lin' z + constant <= t as a second-order cone, with z and t
/// given as column offsets.
void add_quadratic_epigraph(ConstraintBuilder& cb, const SparseMatrix& g, const VectorXd& lin,
                            Index lin_offset, double constant, Index t_col) {
  const Index dim = g.rows() + 2;
  const Index start = cb.begin(Cone::second_order(dim));
  // u = t - lin'z - constant;  (u + 1, 2 G z, u - 1) in SOC.
  const Index last = start + dim - 1;
  cb.add(start, t_col, -1.0);
  cb.add(last, t_col, -1.0);
  for (Index p = 0; p < lin.size(); ++p) {
    if (lin(p) == 0.0) continue;
    cb.add(start, lin_offset + p, lin(p));
    cb.add(last, lin_offset + p, lin(p));
  }
  cb.b(start) = 1.0 - constant;
  cb.b(last) = -1.0 - constant;
  cb.add_block(start + 1, g, -2.0);
}

conic::Result run_solver(const conic::Problem& prob, const SdpSolverConfig& cfg, const char* what) {
  const conic::Result res = cfg.backend == SdpSolverConfig::Backend::InteriorPoint
                                ? conic::solve_interior_point(prob, cfg.settings())
                                : conic::solve(prob, cfg.settings());
  if (res.status != conic::Status::Solved)
    throw SolverError(std::string(what) + ": conic solver did not reach the requested tolerance",
                      res.primal_residual, res.dual_residual, res.iterations);
  return res;
}

SolverStats stats_of(const conic::Result& res) {
  return {res.iterations, res.primal_residual, res.dual_residual};
}

/// Rank-one extraction; with a positive floor, entries with w_i^2 < floor are
/// replaced by +sqrt(floor) so the weights satisfy w0 <= w_i^2. The sign of
/// such an entry is noise-level and follows the nonnegative-sum orientation.
DesignResult finish_from_omega(MatrixXd omega_matrix, double objective, const conic::Result& res,
                               double floor = 0.0) {
  DesignResult out;
  out.Omega = std::move(omega_matrix);
  const RankOne r1 = rank_one_extract(out.Omega);
  out.omega = r1.omega;
  if (floor > 0.0) {
    const double root = std::sqrt(floor);
    for (Index i = 0; i < out.omega.size(); ++i)
      if (out.omega(i) * out.omega(i) < floor) out.omega(i) = root;
  }
  out.rank1_quality = r1.quality;
  out.objective_value = objective;
  out.solver_stats = stats_of(res);
  return out;
}

std::vector<VectorXd> corner_candidates(const DesignProblem& problem) {
  const auto* bounds = std::get_if<SignalBounds>(&problem.prior);
  if (!bounds) throw DomainError("min-max design needs a Bounds prior");
  std::vector<VectorXd> c{bounds->lower, bounds->upper};
  for (const auto& extra : problem.extra_candidates) {
    if (extra.size() != problem.lap.size()) throw DimensionError("extra candidate has the wrong length");
    c.push_back(extra);
  }
  return c;
}

MatrixXd factor_of_prior(const DesignProblem& problem) {
  if (const auto* e = std::get_if<ExactSignal>(&problem.prior)) return e->x;
  return psd_factor(problem.second_moment());
}

DesignResult prony_impl(const DesignProblem& problem, const SdpSolverConfig& cfg, bool floor) {
  problem.validate();
  cfg.validate();
  const Index n = problem.lap.size();
  const Index nv = svec_size(n);
  const MatrixXd& l = problem.lap.matrix();

  conic::Problem prob;
  const MatrixXd r = factor_of_prior(problem);
  const SparseMatrix g = to_sparse(n * r.cols(), nv, hadamard_times_factor(l, r, 0));
  prob.P = 2.0 * SparseMatrix(g.transpose() * g);
  prob.q = VectorXd::Zero(nv);
  ConstraintBuilder cb(nv);
  if (floor) add_diagonal_floor(cb, n, problem.w0_star);
  add_psd_block(cb, n, 0);
  cb.finish(prob);

  const conic::Result res = run_solver(prob, cfg, "Prony design");
  MatrixXd omega_matrix = conic::smat(res.x, n);
  return finish_from_omega(omega_matrix, prony_cost(omega_matrix, problem.lap, problem.second_moment()),
                           res, floor ? problem.w0_star : 0.0);
}

/// Adds the LMI [I + Omega o L, I; I, H] >= 0 with Omega at column 0 and H at
/// column `h_offset`.
void add_filter_lmi(ConstraintBuilder& cb, const MatrixXd& l, Index h_offset) {
  const Index n = l.rows();
  const Index side = 2 * n;
  const Index start = cb.begin(Cone::semidefinite(side));
  for (Index c = 0; c < side; ++c)
    for (Index r = c; r < side; ++r) {
      const Index row = start + svec_index(side, r, c);
      if (r < n) {
        if (r == c) cb.b(row) = 1.0;
        if (l(r, c) != 0.0) cb.add(row, svec_index(n, r, c), -l(r, c));
      } else if (c < n) {
        if (r - n == c) cb.b(row) = kSqrt2;
      } else {
        cb.add(row, h_offset + svec_index(n, r - n, c - n), -1.0);
      }
    }
}

/// Shared SDR pipeline: solve over (Omega, H[, t]), recover Omega from H,
/// then extract omega.
DesignResult sdr_impl(const DesignProblem& problem, const SdpSolverConfig& cfg,
                      const std::vector<MatrixXd>& seconds) {
  problem.validate();
  cfg.validate();
  if (!problem.noise) throw DomainError("SDR design needs a noise model");
  const Index n = problem.lap.size();
  const Index nv = svec_size(n);
  const MatrixXd& l = problem.lap.matrix();
  const MatrixXd& sigma = problem.noise->covariance;
  if (sigma.rows() != n || sigma.cols() != n) throw DimensionError("noise covariance does not match graph size");
  const bool minmax = seconds.size() > 1;
  const Index n_vars = 2 * nv + (minmax ? 1 : 0);
  const Index t_col = 2 * nv;
  const MatrixXd ones = MatrixXd::Ones(n, n);

  conic::Problem prob;
  prob.q = VectorXd::Zero(n_vars);
  ConstraintBuilder cb(n_vars);
  add_diagonal_floor(cb, n, problem.w0_star);
  if (std::isfinite(cfg.sdr_diagonal_cap) && problem.w0_star > 0.0) {
    const double cap = cfg.sdr_diagonal_cap * problem.w0_star;
    const Index start = cb.begin(Cone::nonnegative(n));
    for (Index i = 0; i < n; ++i) {
      cb.add(start + i, svec_index(n, i, i), 1.0);
      cb.b(start + i) = cap;
    }
  }

  std::vector<SparseMatrix> gs;
  for (const auto& x2 : seconds) {
    const MatrixXd r = psd_factor(x2 + sigma);
    gs.push_back(to_sparse(n * r.cols(), n_vars, hadamard_times_factor(ones, r, nv)));
  }
  if (!minmax) {
    prob.P = 2.0 * SparseMatrix(gs[0].transpose() * gs[0]);
    prob.q.segment(nv, nv) = -2.0 * conic::svec(seconds[0]);
  } else {
    prob.P = SparseMatrix(n_vars, n_vars);
    prob.q(t_col) = 1.0;
    for (std::size_t k = 0; k < seconds.size(); ++k) {
      const VectorXd lin = -2.0 * conic::svec(seconds[k]);
      add_quadratic_epigraph(cb, gs[k], lin, nv, seconds[k].trace(), t_col);
    }
  }
  add_filter_lmi(cb, l, nv);
  add_psd_block(cb, n, 0);
  cb.finish(prob);

  const conic::Result res = run_solver(prob, cfg, "SDR design");
  const MatrixXd h = conic::smat(res.x.segment(nv, nv), n);
  double objective = 0.0;
  for (const auto& x2 : seconds) objective = std::max(objective, sdr_cost(h, x2, sigma));

  RecoveredOmega rec = recover_omega(h, problem.lap, cfg, cfg.sdr_recovery_support);
  DesignResult out = finish_from_omega(std::move(rec.Omega), objective, res, problem.w0_star);
  return out;
}

std::string join(const VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  return os.str();
}

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("design record: bad number '" + std::string(s) + "'");
  return v;
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  if (s.find_first_not_of(' ') == std::string_view::npos) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    out.push_back(parse_double(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

MatrixXd DesignProblem::second_moment() const {
  if (const auto* e = std::get_if<ExactSignal>(&prior)) return e->x * e->x.transpose();
  if (const auto* o = std::get_if<SignalOuterProduct>(&prior)) return o->X;
  throw DomainError("a Bounds prior has no single second moment");
}

void DesignProblem::validate() const {
  const Index n = lap.size();
  if (n == 0) throw DimensionError("design problem: empty graph");
  if (!(w0_star >= 0.0)) throw DomainError("w0_star must be nonnegative");
  if (const auto* e = std::get_if<ExactSignal>(&prior)) {
    if (e->x.size() != n) throw DimensionError("signal length does not match graph size");
  } else if (const auto* o = std::get_if<SignalOuterProduct>(&prior)) {
    if (o->X.rows() != n || o->X.cols() != n) throw DimensionError("X must be n x n");
    if ((o->X - o->X.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, o->X.cwiseAbs().maxCoeff()))
      throw DomainError("X must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(o->X, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      throw DomainError("X must be positive semidefinite");
  } else {
    const auto& b = std::get<SignalBounds>(prior);
    if (b.lower.size() != n) throw DimensionError("bounds length does not match graph size");
  }
  if (noise) {
    if (noise->size() != n) throw DimensionError("noise covariance does not match graph size");
    noise->validate();
  }
}

void SdpSolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw DomainError("SDP tolerance must be positive");
  if (max_iterations < 1) throw DomainError("SDP max_iterations must be at least 1");
}

conic::Settings SdpSolverConfig::settings() const {
  conic::Settings s;
  s.eps_abs = tolerance;
  s.eps_rel = tolerance;
  s.max_iterations = max_iterations;
  s.ipm_max_iterations = std::min(max_iterations, 200);
  s.verbose = verbose;
  return s;
}

RankOne rank_one_extract(const MatrixXd& Omega) {
  const Index n = Omega.rows();
  if (Omega.cols() != n) throw DimensionError("Omega must be square");
  RankOne out;
  out.omega = VectorXd::Zero(n);
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Omega + Omega.transpose()));
  const double top = es.eigenvalues()(n - 1);
  const double total = es.eigenvalues().cwiseMax(0.0).sum();
  if (!(top > 0.0) || !(total > 0.0)) return out;
  out.omega = std::sqrt(top) * es.eigenvectors().col(n - 1);
  if (out.omega.sum() < 0.0) out.omega = -out.omega;
  out.quality = top / total;
  return out;
}

double prony_cost(const MatrixXd& Omega, const Laplacian& lap, const MatrixXd& X) {
  const MatrixXd e = Omega.cwiseProduct(lap.matrix());
  return (e * e * X).trace();
}

double sdr_cost(const MatrixXd& H, const MatrixXd& X, const MatrixXd& Sigma) {
  const Index n = H.rows();
  const MatrixXd h2 = H * H;
  return ((h2 - 2.0 * H + MatrixXd::Identity(n, n)) * X + h2 * Sigma).trace();
}

DesignResult design_prony(const DesignProblem& problem, const SdpSolverConfig& cfg) {
  if (std::holds_alternative<SignalBounds>(problem.prior))
    throw DomainError("design_prony needs an exact signal or second-moment prior");
  return prony_impl(problem, cfg, true);
}

DesignResult design_prony_unconstrained(const DesignProblem& problem, const SdpSolverConfig& cfg) {
  if (std::holds_alternative<SignalBounds>(problem.prior))
    throw DomainError("design_prony_unconstrained needs an exact signal or second-moment prior");
  return prony_impl(problem, cfg, false);
}

DesignResult design_sdr(const DesignProblem& problem, const SdpSolverConfig& cfg) {
  if (std::holds_alternative<SignalBounds>(problem.prior))
    throw DomainError("design_sdr needs an exact signal or second-moment prior");
  problem.validate();
  return sdr_impl(problem, cfg, {problem.second_moment()});
}

DesignResult design_minmax_prony(const DesignProblem& problem, const SdpSolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto candidates = corner_candidates(problem);
  const Index n = problem.lap.size();
  const Index nv = svec_size(n);
  const Index t_col = nv;
  const MatrixXd& l = problem.lap.matrix();

  conic::Problem prob;
  prob.P = SparseMatrix(nv + 1, nv + 1);
  prob.q = VectorXd::Zero(nv + 1);
  prob.q(t_col) = 1.0;
  ConstraintBuilder cb(nv + 1);
  add_diagonal_floor(cb, n, problem.w0_star);
  for (const auto& x : candidates) {
    const SparseMatrix g = to_sparse(n, nv + 1, hadamard_times_factor(l, x, 0));
    add_quadratic_epigraph(cb, g, VectorXd(), 0, 0.0, t_col);
  }
  add_psd_block(cb, n, 0);
  cb.finish(prob);

  const conic::Result res = run_solver(prob, cfg, "min-max Prony design");
  MatrixXd omega_matrix = conic::smat(res.x.head(nv), n);
  double worst = 0.0;
  for (const auto& x : candidates)
    worst = std::max(worst, prony_cost(omega_matrix, problem.lap, x * x.transpose()));
  return finish_from_omega(std::move(omega_matrix), worst, res, problem.w0_star);
}

DesignResult design_minmax_sdr(const DesignProblem& problem, const SdpSolverConfig& cfg) {
  problem.validate();
  const auto candidates = corner_candidates(problem);
  std::vector<MatrixXd> seconds;
  for (const auto& x : candidates) seconds.push_back(x * x.transpose());
  return sdr_impl(problem, cfg, seconds);
}

RecoveredOmega recover_omega(const MatrixXd& H_star, const Laplacian& lap, const SdpSolverConfig& cfg,
                             OmegaSupport support) {
  const Index n = lap.size();
  if (H_star.rows() != n || H_star.cols() != n) throw DimensionError("H must be n x n");
  cfg.validate();
  const MatrixXd h = 0.5 * (H_star + H_star.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> hes(h, Eigen::EigenvaluesOnly);
  const double hmin = hes.eigenvalues()(0);
  const double hmax = hes.eigenvalues()(n - 1);
  if (!(hmin > 0.0) || hmax / hmin > 1e12)
    throw SingularSystemError("recover_omega: H is singular or has condition number above 1e12");

  const MatrixXd& l = lap.matrix();
  struct Entry {
    Index i, j;
  };
  std::vector<Entry> entries;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i)
      if (i == j || l(i, j) != 0.0) entries.push_back({i, j});
  const Index m = static_cast<Index>(entries.size());

  // Both residual terms equal ||H E - (I - H)||_F^2 with E = Omega o L
  // symmetric, so the objective is 2 ||J theta - c||^2 over the entries theta.
  MatrixXd jac = MatrixXd::Zero(n * n, m);
  for (Index p = 0; p < m; ++p) {
    const auto [i, j] = entries[p];
    const double lij = l(i, j);
    // H (e_i e_j' + e_j e_i') = h_i e_j' + h_j e_i'
    jac.block(j * n, p, n, 1) += lij * h.col(i);
    if (i != j) jac.block(i * n, p, n, 1) += lij * h.col(j);
  }
  const MatrixXd target = MatrixXd::Identity(n, n) - h;
  const VectorXd c = Eigen::Map<const VectorXd>(target.data(), n * n);
  const MatrixXd normal = jac.transpose() * jac;
  const VectorXd rhs = jac.transpose() * c;

  auto assemble = [&](const VectorXd& theta) {
    MatrixXd omega = MatrixXd::Zero(n, n);
    for (Index p = 0; p < m; ++p) {
      omega(entries[p].i, entries[p].j) = theta(p);
      omega(entries[p].j, entries[p].i) = theta(p);
    }
    return omega;
  };
  auto residual_of = [&](const MatrixXd& omega) {
    const MatrixXd sys = MatrixXd::Identity(n, n) + omega.cwiseProduct(l);
    return (h * sys - MatrixXd::Identity(n, n)).squaredNorm() +
           (sys * h - MatrixXd::Identity(n, n)).squaredNorm();
  };

  RecoveredOmega out;
  if (support == OmegaSupport::GraphEdges) {
    Eigen::LDLT<MatrixXd> ldlt(normal);
    if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-14) {
      MatrixXd omega = assemble(ldlt.solve(rhs));
      Eigen::SelfAdjointEigenSolver<MatrixXd> oes(omega, Eigen::EigenvaluesOnly);
      const double scale = std::max(1.0, oes.eigenvalues().cwiseAbs().maxCoeff());
      if (oes.eigenvalues()(0) >= -1e-10 * scale) {
        out.Omega = std::move(omega);
        out.residual = residual_of(out.Omega);
        return out;
      }
    }
  }

  // Constrained quadratic program over PSD Omega. With GraphEdges the
  // variables are the entries theta; with Full they are svec(Omega) and the
  // off-support entries enter only through the cone.
  const Index nv = svec_size(n);
  const bool full = support == OmegaSupport::Full;
  const Index n_vars = full ? nv : m;
  std::vector<Triplet> pick;  // theta = T z
  for (Index p = 0; p < m; ++p) {
    const auto [i, j] = entries[p];
    pick.emplace_back(p, full ? svec_index(n, i, j) : p, full && i != j ? 1.0 / kSqrt2 : 1.0);
  }
  const SparseMatrix tmat = to_sparse(m, n_vars, pick);
  conic::Problem prob;
  const SparseMatrix normal_sparse = normal.sparseView();
  prob.P = 4.0 * SparseMatrix(tmat.transpose() * normal_sparse * tmat);
  prob.q = -4.0 * (tmat.transpose() * rhs);
  std::vector<Triplet> t;
  if (full) {
    for (Index k = 0; k < nv; ++k) t.emplace_back(k, k, -1.0);
  } else {
    for (Index p = 0; p < m; ++p) {
      const auto [i, j] = entries[p];
      t.emplace_back(svec_index(n, i, j), p, i == j ? -1.0 : -kSqrt2);
    }
  }
  prob.A = to_sparse(nv, n_vars, t);
  prob.b = VectorXd::Zero(nv);
  prob.cones = {Cone::semidefinite(n)};
  const conic::Result res = run_solver(prob, cfg, "recover_omega");
  out.Omega = full ? conic::smat(res.x, n) : assemble(res.x);
  out.residual = residual_of(out.Omega);
  return out;
}

std::string format_design_record(const DesignResult& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "omega=" << join(r.omega) << "; objective=" << r.objective_value
     << "; rank1_quality=" << r.rank1_quality << "; residuals=" << r.solver_stats.primal_residual << ","
     << r.solver_stats.dual_residual;
  return os.str();
}

void write_design_record(std::ostream& out, const DesignResult& result) {
  out << format_design_record(result) << '\n';
}

DesignResult parse_design_record(const std::string& line) {
  DesignResult out;
  bool seen[4] = {false, false, false, false};
  std::string_view rest(line);
  while (!rest.empty() && (rest.back() == '\n' || rest.back() == '\r')) rest.remove_suffix(1);
  while (!rest.empty()) {
    const std::size_t semi = rest.find(';');
    std::string_view field = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view() : rest.substr(semi + 1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError("design record: field without '='");
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "omega") {
      const auto v = parse_list(value);
      out.omega = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
      seen[0] = true;
    } else if (key == "objective") {
      out.objective_value = parse_double(value);
      seen[1] = true;
    } else if (key == "rank1_quality") {
      out.rank1_quality = parse_double(value);
      seen[2] = true;
    } else if (key == "residuals") {
      const auto v = parse_list(value);
      if (v.size() != 2) throw ParseError("design record: residuals needs two values");
      out.solver_stats.primal_residual = v[0];
      out.solver_stats.dual_residual = v[1];
      seen[3] = true;
    } else {
      throw ParseError("design record: unknown field '" + std::string(key) + "'");
    }
  }
  if (!(seen[0] && seen[1] && seen[2] && seen[3])) throw ParseError("design record: missing field");
  out.Omega = out.omega * out.omega.transpose();
  return out;
}

}  // namespace gsr

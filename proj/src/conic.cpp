#include "gsr/conic.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "gsr/error.hpp"

namespace gsr::conic {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

VectorXd column_inf_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.cols());
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) out(c) = std::max(out(c), std::abs(it.value()));
  return out;
}

VectorXd row_inf_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.rows());
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
  return out;
}

/// Factorisation of P + sigma I + A' diag(rho) A.
class ReducedSystem {
 public:
  ReducedSystem(const SparseMatrix& p, const SparseMatrix& a, double sigma, Index dense_limit)
      : p_(p), a_(a), sigma_(sigma), dense_(p.rows() <= dense_limit) {}

  void factor(const VectorXd& rho) {
    SparseMatrix weighted = a_.transpose() * rho.asDiagonal() * a_;
    SparseMatrix k = p_ + weighted;
    if (dense_) {
      MatrixXd dense = MatrixXd(k);
      dense.diagonal().array() += sigma_;
      dense_llt_.compute(dense);
      if (dense_llt_.info() != Eigen::Success) throw Error("conic solver: KKT factorisation failed");
    } else {
      SparseMatrix id(k.rows(), k.cols());
      id.setIdentity();
      k += sigma_ * id;
      if (!sparse_llt_) {
        sparse_llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>();
        sparse_llt_->analyzePattern(k);
      }
      sparse_llt_->factorize(k);
      if (sparse_llt_->info() != Eigen::Success) throw Error("conic solver: KKT factorisation failed");
    }
  }

  VectorXd solve(const VectorXd& rhs) const {
    return dense_ ? VectorXd(dense_llt_.solve(rhs)) : VectorXd(sparse_llt_->solve(rhs));
  }

 private:
  const SparseMatrix& p_;
  const SparseMatrix& a_;
  double sigma_;
  bool dense_;
  Eigen::LLT<MatrixXd> dense_llt_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> sparse_llt_;
};

struct Scaling {
  VectorXd d;  // variable scaling, x = D x_hat
  VectorXd e;  // constraint scaling, s_hat = E s
  double c = 1.0;
};

/// Modified Ruiz equilibration; E is kept constant on every cone block
/// whose membership is not invariant under per-row scaling.
Scaling equilibrate(SparseMatrix& p, VectorXd& q, SparseMatrix& a, VectorXd& b,
                    const std::vector<Cone>& cones, int iterations) {
  const Index n = q.size();
  const Index m = b.size();
  Scaling sc{VectorXd::Ones(n), VectorXd::Ones(m), 1.0};
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };

  for (int it = 0; it < iterations; ++it) {
    VectorXd col = column_inf_norms(p).cwiseMax(column_inf_norms(a));
    VectorXd delta(n);
    for (Index j = 0; j < n; ++j) delta(j) = col(j) > 1e-12 ? clamp(1.0 / std::sqrt(col(j))) : 1.0;

    VectorXd row = row_inf_norms(a);
    VectorXd eps(m);
    Index offset = 0;
    for (const auto& cone : cones) {
      if (cone.kind == Cone::Kind::Zero || cone.kind == Cone::Kind::NonNegative) {
        for (Index r = offset; r < offset + cone.dim; ++r)
          eps(r) = row(r) > 1e-12 ? clamp(1.0 / std::sqrt(row(r))) : 1.0;
      } else {
        const double mean = row.segment(offset, cone.dim).mean();
        const double v = mean > 1e-12 ? clamp(1.0 / std::sqrt(mean)) : 1.0;
        eps.segment(offset, cone.dim).setConstant(v);
      }
      offset += cone.dim;
    }
    p = delta.asDiagonal() * p * delta.asDiagonal();
    a = eps.asDiagonal() * a * delta.asDiagonal();
    q = delta.cwiseProduct(q);
    b = eps.cwiseProduct(b);
    sc.d = sc.d.cwiseProduct(delta);
    sc.e = sc.e.cwiseProduct(eps);
  }

  const double pnorm = n ? column_inf_norms(p).mean() : 0.0;
  const double cost_norm = std::max(pnorm, inf_norm(q));
  sc.c = cost_norm > 1e-12 ? clamp(1.0 / cost_norm) : 1.0;
  p *= sc.c;
  q *= sc.c;
  return sc;
}

}  // namespace

void Problem::validate() const {
  const Index n = q.size();
  const Index m = b.size();
  if (P.rows() != n || P.cols() != n) throw DimensionError("conic problem: P must be n x n");
  if (A.rows() != m || A.cols() != n) throw DimensionError("conic problem: A must be m x n");
  Index total = 0;
  for (const auto& c : cones) {
    if (c.dim < 0) throw DimensionError("conic problem: negative cone size");
    if (c.kind == Cone::Kind::Semidefinite && c.dim != c.side * (c.side + 1) / 2)
      throw DimensionError("conic problem: PSD cone dimension mismatch");
    total += c.dim;
  }
  if (total != m) throw DimensionError("conic problem: cone sizes do not cover the constraint rows");
}

VectorXd svec(const MatrixXd& m) {
  const Index side = m.rows();
  VectorXd v(side * (side + 1) / 2);
  Index k = 0;
  for (Index c = 0; c < side; ++c)
    for (Index r = c; r < side; ++r) v(k++) = (r == c) ? m(r, c) : kSqrt2 * 0.5 * (m(r, c) + m(c, r));
  return v;
}

MatrixXd smat(const Eigen::Ref<const VectorXd>& v, Index side) {
  MatrixXd m(side, side);
  Index k = 0;
  for (Index c = 0; c < side; ++c)
    for (Index r = c; r < side; ++r) {
      const double val = (r == c) ? v(k) : v(k) / kSqrt2;
      m(r, c) = val;
      m(c, r) = val;
      ++k;
    }
  return m;
}

void project(const Cone& cone, Eigen::Ref<VectorXd> v) {
  switch (cone.kind) {
    case Cone::Kind::Zero:
      v.setZero();
      return;
    case Cone::Kind::NonNegative:
      v = v.cwiseMax(0.0);
      return;
    case Cone::Kind::SecondOrder: {
      if (cone.dim == 0) return;
      const double t = v(0);
      const double norm = v.tail(cone.dim - 1).norm();
      if (norm <= t) return;
      if (norm <= -t) {
        v.setZero();
        return;
      }
      const double scale = 0.5 * (t + norm);
      v.tail(cone.dim - 1) *= scale / norm;
      v(0) = scale;
      return;
    }
    case Cone::Kind::Semidefinite: {
      if (cone.side == 0) return;
      if (cone.side == 1) {
        v(0) = std::max(v(0), 0.0);
        return;
      }
      const MatrixXd m = smat(v, cone.side);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
      const VectorXd& lam = es.eigenvalues();
      if (lam(0) >= 0.0) return;
      Index first_positive = 0;
      while (first_positive < cone.side && lam(first_positive) <= 0.0) ++first_positive;
      const Index count = cone.side - first_positive;
      MatrixXd projected = MatrixXd::Zero(cone.side, cone.side);
      if (count > 0) {
        const auto vecs = es.eigenvectors().rightCols(count);
        projected = vecs * lam.tail(count).asDiagonal() * vecs.transpose();
      }
      v = svec(projected);
      return;
    }
  }
}

namespace {

/// Type-II Anderson acceleration with a restart on rejected steps.
class Anderson {
 public:
  Anderson(Index dim, int memory) : memory_(memory), dim_(dim) {}

  bool enabled() const { return memory_ > 0; }
  void reset() {
    dg_.clear();
    df_.clear();
    has_last_ = false;
  }

  /// Records g = f - z for the latest evaluation f = T(z) and returns the
  /// extrapolated next point, or f itself while the history is empty.
  VectorXd step(const VectorXd& f, const VectorXd& g) {
    if (has_last_) {
      dg_.push_back(g - last_g_);
      df_.push_back(f - last_f_);
      if (static_cast<int>(dg_.size()) > memory_) {
        dg_.erase(dg_.begin());
        df_.erase(df_.begin());
      }
    }
    last_g_ = g;
    last_f_ = f;
    has_last_ = true;
    const Index k = static_cast<Index>(dg_.size());
    if (k == 0) return f;
    MatrixXd gmat(dim_, k);
    for (Index c = 0; c < k; ++c) gmat.col(c) = dg_[c];
    MatrixXd normal = gmat.transpose() * gmat;
    const double reg = 1e-10 * std::max(normal.diagonal().maxCoeff(), 1e-300);
    normal.diagonal().array() += reg;
    const VectorXd gamma = normal.ldlt().solve(gmat.transpose() * g);
    if (!gamma.allFinite()) {
      reset();
      return f;
    }
    VectorXd out = f;
    for (Index c = 0; c < k; ++c) out -= gamma(c) * df_[c];
    return out;
  }

 private:
  int memory_;
  Index dim_;
  std::vector<VectorXd> dg_;
  std::vector<VectorXd> df_;
  VectorXd last_g_;
  VectorXd last_f_;
  bool has_last_ = false;
};

}  // namespace

Result solve(const Problem& problem, const Settings& settings, const std::optional<WarmStart>& warm) {
  problem.validate();
  const Index n = problem.num_variables();
  const Index m = problem.num_constraints();

  SparseMatrix p = problem.P;
  VectorXd q = problem.q;
  SparseMatrix a = problem.A;
  VectorXd b = problem.b;
  p.makeCompressed();
  a.makeCompressed();
  const Scaling sc = equilibrate(p, q, a, b, problem.cones, settings.scaling_iterations);
  const SparseMatrix at = a.transpose();

  auto rho_vector = [&](double rho) {
    VectorXd r(m);
    Index offset = 0;
    for (const auto& cone : problem.cones) {
      r.segment(offset, cone.dim).setConstant(cone.kind == Cone::Kind::Zero ? 1e3 * rho : rho);
      offset += cone.dim;
    }
    return r;
  };
  auto project_all = [&](VectorXd& v) {
    Index offset = 0;
    for (const auto& cone : problem.cones) {
      project(cone, v.segment(offset, cone.dim));
      offset += cone.dim;
    }
  };

  double rho = settings.rho;
  VectorXd rho_vec = rho_vector(rho);
  ReducedSystem kkt(p, a, settings.sigma, settings.dense_limit);
  kkt.factor(rho_vec);

  // The iteration runs on z = (x, v) in the scaled space, where
  // s = proj_K(v) and the (negated) multiplier is y = R (v - s).
  VectorXd x = VectorXd::Zero(n);
  VectorXd v = VectorXd::Zero(m);
  if (warm) {
    VectorXd s0 = VectorXd::Zero(m);
    VectorXd y0 = VectorXd::Zero(m);
    if (warm->x.size() == n) x = warm->x.cwiseQuotient(sc.d);
    if (warm->s.size() == m) s0 = warm->s.cwiseProduct(sc.e);
    if (warm->y.size() == m) y0 = -sc.c * warm->y.cwiseQuotient(sc.e);
    v = s0 + y0.cwiseQuotient(rho_vec);
  }

  const double alpha = settings.alpha;
  VectorXd s(m), y(m);
  auto split = [&](const VectorXd& vv) {
    s = vv;
    project_all(s);
    y = rho_vec.cwiseProduct(vv - s);
  };
  // One ADMM sweep from (x, v); returns the new pair packed as z.
  auto sweep = [&](const VectorXd& xin, const VectorXd& vin, VectorXd& xout, VectorXd& vout) {
    split(vin);
    const VectorXd rhs = settings.sigma * xin - q + at * (rho_vec.cwiseProduct(b - s) + y);
    const VectorXd x_tilde = kkt.solve(rhs);
    const VectorXd s_tilde = b - a * x_tilde;
    xout = alpha * x_tilde + (1.0 - alpha) * xin;
    vout = alpha * s_tilde + (1.0 - alpha) * s + (vin - s);
  };

  Result result;
  result.factorizations = 1;

  double primal_res = 0.0, dual_res = 0.0, primal_scale = 1.0, dual_scale = 1.0;
  const VectorXd einv = sc.e.cwiseInverse();
  const VectorXd dinv = sc.d.cwiseInverse();
  auto compute_residuals = [&]() {
    split(v);
    const VectorXd ax = a * x;
    const VectorXd px = p * x;
    const VectorXd aty = at * y;
    primal_res = inf_norm(einv.cwiseProduct(ax + s - b));
    dual_res = inf_norm(dinv.cwiseProduct(px + q - aty)) / sc.c;
    primal_scale = std::max({inf_norm(einv.cwiseProduct(ax)), inf_norm(einv.cwiseProduct(s)),
                             inf_norm(einv.cwiseProduct(b))});
    dual_scale = std::max({inf_norm(dinv.cwiseProduct(px)), inf_norm(dinv.cwiseProduct(aty)),
                           inf_norm(dinv.cwiseProduct(q))}) / sc.c;
  };

  Anderson accel(n + m, settings.anderson_memory);
  VectorXd z(n + m), f(n + m);
  VectorXd x_next(n), v_next(m);
  bool last_accelerated = false;
  double base_norm = std::numeric_limits<double>::infinity();
  VectorXd base_f;

  int iter = 0;
  for (iter = 1; iter <= settings.max_iterations; ++iter) {
    sweep(x, v, x_next, v_next);
    z << x, v;
    f << x_next, v_next;
    const VectorXd g = f - z;
    const double g_norm = g.norm();

    if (accel.enabled()) {
      if (last_accelerated && !(g_norm <= base_norm)) {
        // The extrapolated point did worse than plain ADMM would have.
        accel.reset();
        x = base_f.head(n);
        v = base_f.tail(m);
        last_accelerated = false;
        base_norm = std::numeric_limits<double>::infinity();
      } else {
        const VectorXd next = accel.step(f, g);
        base_f = f;
        base_norm = g_norm;
        last_accelerated = true;
        x = next.head(n);
        v = next.tail(m);
      }
    } else {
      x = x_next;
      v = v_next;
    }

    const bool check = iter % settings.check_interval == 0 || iter == settings.max_iterations;
    const bool adapt = settings.adaptive_rho && iter % settings.adaptive_rho_interval == 0;
    if (!check && !adapt) continue;
    compute_residuals();
    if (check && primal_res <= settings.eps_abs + settings.eps_rel * primal_scale &&
        dual_res <= settings.eps_abs + settings.eps_rel * dual_scale) {
      result.status = Status::Solved;
      break;
    }
    if (adapt) {
      const double pr = primal_res / std::max(primal_scale, 1e-12);
      const double dr = dual_res / std::max(dual_scale, 1e-12);
      if (pr > 0.0 && dr > 0.0) {
        const double candidate = std::clamp(rho * std::sqrt(pr / dr), 1e-6, 1e6);
        if (candidate > 5.0 * rho || candidate < 0.2 * rho) {
          // Keep (s, y) fixed across the change of penalty.
          split(v);
          rho = candidate;
          rho_vec = rho_vector(rho);
          v = s + y.cwiseQuotient(rho_vec);
          kkt.factor(rho_vec);
          ++result.factorizations;
          accel.reset();
          last_accelerated = false;
          base_norm = std::numeric_limits<double>::infinity();
        }
      }
    }
  }
  compute_residuals();

  result.iterations = std::min(iter, settings.max_iterations);
  result.x = sc.d.cwiseProduct(x);
  result.s = s.cwiseQuotient(sc.e);
  result.y = -sc.e.cwiseProduct(y) / sc.c;
  result.primal_residual = primal_res;
  result.dual_residual = dual_res;
  result.objective = 0.5 * result.x.dot(problem.P * result.x) + problem.q.dot(result.x);
  return result;
}

}  // namespace gsr::conic

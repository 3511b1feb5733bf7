#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gsr/conic.hpp"
#include "gsr/error.hpp"

namespace gsr::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Column entries of the inequality matrix G restricted to one cone block.
struct BlockEntry {
  Index col;
  Index row;  // within the block
  double value;
};

/// Nesterov-Todd scaling of one cone block, plus the scaled point lambda.
struct Scaling {
  Cone cone;
  // NonNegative
  VectorXd w;
  // SecondOrder: W = beta (2 v v' - J)
  double beta = 1.0;
  VectorXd v;
  // Semidefinite: W(U) = r' U r, W^{-T}(U) = rti' U rti
  MatrixXd r;
  MatrixXd rti;
  VectorXd lambda;  // scaled point; for PSD blocks the diagonal of Lambda
  bool valid = true;  // false when s or z has left the interior
};

double soc_jnorm(const VectorXd& x) {
  const double v = x(0) * x(0) - x.tail(x.size() - 1).squaredNorm();
  return std::sqrt(std::max(v, 0.0));
}

Scaling compute_scaling(const Cone& cone, const VectorXd& s, const VectorXd& z) {
  Scaling sc;
  sc.cone = cone;
  switch (cone.kind) {
    case Cone::Kind::NonNegative:
      if (s.size() > 0 && (s.minCoeff() <= 0.0 || z.minCoeff() <= 0.0)) {
        sc.valid = false;
        break;
      }
      sc.w = (s.array() / z.array()).sqrt();
      sc.lambda = (s.array() * z.array()).sqrt();
      break;
    case Cone::Kind::SecondOrder: {
      const double a = soc_jnorm(s);
      const double b = soc_jnorm(z);
      if (!(a > 0.0 && b > 0.0 && s(0) > 0.0 && z(0) > 0.0)) {
        sc.valid = false;
        break;
      }
      const VectorXd sn = s / a;
      const VectorXd zn = z / b;
      const double gamma = std::sqrt(0.5 * (1.0 + sn.dot(zn)));
      VectorXd wbar(s.size());
      wbar(0) = (sn(0) + zn(0)) / (2.0 * gamma);
      wbar.tail(s.size() - 1) = (sn.tail(s.size() - 1) - zn.tail(s.size() - 1)) / (2.0 * gamma);
      sc.beta = std::sqrt(a / b);
      sc.v = wbar;
      sc.v(0) += 1.0;
      sc.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
      // lambda = W z
      const double vz = sc.v.dot(z);
      VectorXd jz = z;
      jz.tail(z.size() - 1) *= -1.0;
      sc.lambda = sc.beta * (2.0 * vz * sc.v - jz);
      break;
    }
    case Cone::Kind::Semidefinite: {
      const Index n = cone.side;
      const MatrixXd sm = smat(s, n);
      const MatrixXd zm = smat(z, n);
      Eigen::LLT<MatrixXd> ls(sm);
      Eigen::LLT<MatrixXd> lz(zm);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) {
        sc.valid = false;
        break;
      }
      const MatrixXd l_s = ls.matrixL();
      const MatrixXd l_z = lz.matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const VectorXd lam = svd.singularValues();
      if (!(lam.minCoeff() > 0.0)) {
        sc.valid = false;
        break;
      }
      const VectorXd inv_sqrt = lam.array().rsqrt();
      sc.r = l_s * svd.matrixV() * inv_sqrt.asDiagonal();
      sc.rti = l_z * svd.matrixU() * inv_sqrt.asDiagonal();
      sc.lambda = lam;
      break;
    }
    case Cone::Kind::Zero:
      break;
  }
  return sc;
}

VectorXd soc_apply_j(VectorXd x) {
  x.tail(x.size() - 1) *= -1.0;
  return x;
}

/// W x
VectorXd apply_w(const Scaling& sc, const VectorXd& x) {
  switch (sc.cone.kind) {
    case Cone::Kind::NonNegative:
      return sc.w.cwiseProduct(x);
    case Cone::Kind::SecondOrder:
      return sc.beta * (2.0 * sc.v.dot(x) * sc.v - soc_apply_j(x));
    case Cone::Kind::Semidefinite:
      return svec(sc.r.transpose() * smat(x, sc.cone.side) * sc.r);
    case Cone::Kind::Zero:
      break;
  }
  return x;
}

/// W' x
VectorXd apply_wt(const Scaling& sc, const VectorXd& x) {
  if (sc.cone.kind == Cone::Kind::Semidefinite)
    return svec(sc.r * smat(x, sc.cone.side) * sc.r.transpose());
  return apply_w(sc, x);  // symmetric for the other cones
}

/// W^{-T} x
VectorXd apply_winvt(const Scaling& sc, const VectorXd& x) {
  switch (sc.cone.kind) {
    case Cone::Kind::NonNegative:
      return x.cwiseQuotient(sc.w);
    case Cone::Kind::SecondOrder: {
      const VectorXd u = soc_apply_j(sc.v);
      return (2.0 * u.dot(x) * u - soc_apply_j(x)) / sc.beta;
    }
    case Cone::Kind::Semidefinite:
      return svec(sc.rti.transpose() * smat(x, sc.cone.side) * sc.rti);
    case Cone::Kind::Zero:
      break;
  }
  return x;
}

/// W^{-1} x
VectorXd apply_winv(const Scaling& sc, const VectorXd& x) {
  if (sc.cone.kind == Cone::Kind::Semidefinite)
    return svec(sc.rti * smat(x, sc.cone.side) * sc.rti.transpose());
  return apply_winvt(sc, x);
}

/// Jordan product lambda o u with lambda the block's scaled point.
VectorXd lambda_product(const Scaling& sc, const VectorXd& u) {
  const VectorXd& l = sc.lambda;
  switch (sc.cone.kind) {
    case Cone::Kind::NonNegative:
      return l.cwiseProduct(u);
    case Cone::Kind::SecondOrder: {
      VectorXd out(u.size());
      out(0) = l.dot(u);
      out.tail(u.size() - 1) = l(0) * u.tail(u.size() - 1) + u(0) * l.tail(u.size() - 1);
      return out;
    }
    case Cone::Kind::Semidefinite: {
      const Index n = sc.cone.side;
      VectorXd out(u.size());
      for (Index c = 0; c < n; ++c)
        for (Index r = c; r < n; ++r) {
          const Index k = svec_index(n, r, c);
          out(k) = 0.5 * (l(r) + l(c)) * u(k);
        }
      return out;
    }
    case Cone::Kind::Zero:
      break;
  }
  return u;
}

/// Solves lambda o u = w for u.
VectorXd lambda_divide(const Scaling& sc, const VectorXd& w) {
  const VectorXd& l = sc.lambda;
  switch (sc.cone.kind) {
    case Cone::Kind::NonNegative:
      return w.cwiseQuotient(l);
    case Cone::Kind::SecondOrder: {
      const Index d = w.size();
      const double det = l(0) * l(0) - l.tail(d - 1).squaredNorm();
      VectorXd u(d);
      u(0) = (l(0) * w(0) - l.tail(d - 1).dot(w.tail(d - 1))) / det;
      u.tail(d - 1) = (w.tail(d - 1) - u(0) * l.tail(d - 1)) / l(0);
      return u;
    }
    case Cone::Kind::Semidefinite: {
      const Index n = sc.cone.side;
      VectorXd out(w.size());
      for (Index c = 0; c < n; ++c)
        for (Index r = c; r < n; ++r) {
          const Index k = svec_index(n, r, c);
          out(k) = 2.0 * w(k) / (l(r) + l(c));
        }
      return out;
    }
    case Cone::Kind::Zero:
      break;
  }
  return w;
}

/// Identity element of the cone, scaled by `t`.
VectorXd cone_identity(const Cone& cone, double t) {
  VectorXd e = VectorXd::Zero(cone.dim);
  switch (cone.kind) {
    case Cone::Kind::NonNegative:
      e.setConstant(t);
      break;
    case Cone::Kind::SecondOrder:
      if (cone.dim > 0) e(0) = t;
      break;
    case Cone::Kind::Semidefinite:
      for (Index i = 0; i < cone.side; ++i) e(svec_index(cone.side, i, i)) = t;
      break;
    case Cone::Kind::Zero:
      break;
  }
  return e;
}

Index cone_degree(const Cone& cone) {
  switch (cone.kind) {
    case Cone::Kind::NonNegative:
      return cone.dim;
    case Cone::Kind::SecondOrder:
      return 1;
    case Cone::Kind::Semidefinite:
      return cone.side;
    case Cone::Kind::Zero:
      break;
  }
  return 0;
}

/// Smallest t with x + t e in the cone (may be negative for interior x).
double cone_margin(const Cone& cone, const VectorXd& x) {
  switch (cone.kind) {
    case Cone::Kind::NonNegative:
      return cone.dim ? -x.minCoeff() : -kInf;
    case Cone::Kind::SecondOrder:
      return x.tail(x.size() - 1).norm() - x(0);
    case Cone::Kind::Semidefinite: {
      if (cone.side == 0) return -kInf;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(x, cone.side), Eigen::EigenvaluesOnly);
      return -es.eigenvalues()(0);
    }
    case Cone::Kind::Zero:
      break;
  }
  return -kInf;
}

/// Largest step t with lambda + t d in the cone (in the scaled space).
double max_step(const Scaling& sc, const VectorXd& d) {
  const VectorXd& l = sc.lambda;
  switch (sc.cone.kind) {
    case Cone::Kind::NonNegative: {
      double t = kInf;
      for (Index i = 0; i < d.size(); ++i)
        if (d(i) < 0.0) t = std::min(t, -l(i) / d(i));
      return t;
    }
    case Cone::Kind::SecondOrder: {
      const Index m = d.size();
      // (l0 + t d0)^2 - ||lb + t db||^2 >= 0 and l0 + t d0 >= 0.
      const double a = d(0) * d(0) - d.tail(m - 1).squaredNorm();
      const double b = l(0) * d(0) - l.tail(m - 1).dot(d.tail(m - 1));
      const double c = l(0) * l(0) - l.tail(m - 1).squaredNorm();
      double t = kInf;
      if (d(0) < 0.0) t = -l(0) / d(0);
      // Smallest positive root of a t^2 + 2 b t + c.
      if (a == 0.0) {
        if (b < 0.0) t = std::min(t, -c / (2.0 * b));
      } else {
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double q = -(b + std::copysign(sq, b));
          const double r1 = q / a;
          const double r2 = q != 0.0 ? c / q : kInf;
          for (double root : {r1, r2})
            if (root > 0.0) t = std::min(t, root);
        }
      }
      return t;
    }
    case Cone::Kind::Semidefinite: {
      const Index n = sc.cone.side;
      const VectorXd inv_sqrt = l.array().rsqrt();
      const MatrixXd scaled = inv_sqrt.asDiagonal() * smat(d, n) * inv_sqrt.asDiagonal();
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      return lo < 0.0 ? -1.0 / lo : kInf;
    }
    case Cone::Kind::Zero:
      break;
  }
  return kInf;
}

/// Problem split into equalities A x = b and conic inequalities G x + s = h.
struct Split {
  SparseMatrix a_eq;
  VectorXd b_eq;
  SparseMatrix g;
  VectorXd h;
  std::vector<Cone> cones;           // inequality cones, in order
  std::vector<Index> offsets;        // row offset of each cone in G
  std::vector<Index> source_offsets; // row offset of each cone in the original A
  std::vector<Index> eq_rows;        // original rows of the equalities
  std::vector<std::vector<BlockEntry>> entries;
  std::vector<MatrixXd> gtg;         // G_k' G_k for second-order blocks
};

Split split_problem(const Problem& p) {
  Split out;
  std::vector<Index> ineq_rows;
  Index offset = 0;
  for (const auto& cone : p.cones) {
    if (cone.kind == Cone::Kind::Zero) {
      for (Index r = offset; r < offset + cone.dim; ++r) out.eq_rows.push_back(r);
    } else {
      out.offsets.push_back(static_cast<Index>(ineq_rows.size()));
      out.source_offsets.push_back(offset);
      out.cones.push_back(cone);
      for (Index r = offset; r < offset + cone.dim; ++r) ineq_rows.push_back(r);
    }
    offset += cone.dim;
  }
  const Index n = p.num_variables();
  auto select = [&](const std::vector<Index>& rows, SparseMatrix& m, VectorXd& rhs) {
    std::vector<Index> map(p.num_constraints(), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) map[rows[k]] = static_cast<Index>(k);
    std::vector<Triplet> t;
    for (Index c = 0; c < p.A.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(p.A, c); it; ++it)
        if (map[it.row()] >= 0) t.emplace_back(map[it.row()], c, it.value());
    m.resize(static_cast<Index>(rows.size()), n);
    m.setFromTriplets(t.begin(), t.end());
    rhs.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) rhs(static_cast<Index>(k)) = p.b(rows[k]);
  };
  select(out.eq_rows, out.a_eq, out.b_eq);
  select(ineq_rows, out.g, out.h);

  out.entries.resize(out.cones.size());
  out.gtg.resize(out.cones.size());
  std::vector<Index> block_of(out.g.rows());
  for (std::size_t k = 0; k < out.cones.size(); ++k)
    for (Index r = 0; r < out.cones[k].dim; ++r) block_of[out.offsets[k] + r] = static_cast<Index>(k);
  for (Index c = 0; c < out.g.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(out.g, c); it; ++it) {
      const Index k = block_of[it.row()];
      out.entries[k].push_back({c, it.row() - out.offsets[k], it.value()});
    }
  for (std::size_t k = 0; k < out.cones.size(); ++k)
    if (out.cones[k].kind == Cone::Kind::SecondOrder) {
      const SparseMatrix gk = out.g.middleRows(out.offsets[k], out.cones[k].dim);
      out.gtg[k] = MatrixXd(SparseMatrix(gk.transpose() * gk));
    }
  return out;
}

/// Adds G_k' (W_k' W_k)^{-1} G_k of every block to `kkt`.
void add_scaled_blocks(const Split& sp, const std::vector<Scaling>& scalings, MatrixXd& kkt) {
  for (std::size_t k = 0; k < sp.cones.size(); ++k) {
    const Scaling& sc = scalings[k];
    const auto& entries = sp.entries[k];
    switch (sc.cone.kind) {
      case Cone::Kind::NonNegative: {
        for (const auto& e1 : entries)
          for (const auto& e2 : entries)
            if (e1.row == e2.row) {
              const double w = sc.w(e1.row);
              kkt(e1.col, e2.col) += e1.value * e2.value / (w * w);
            }
        break;
      }
      case Cone::Kind::SecondOrder: {
        // (W'W)^{-1} = (I + 4||u||^2 u u' - 2 u v' - 2 v u') / beta^2, u = J v.
        const Index n = kkt.rows();
        const VectorXd u = soc_apply_j(sc.v);
        VectorXd gu = VectorXd::Zero(n), gv = VectorXd::Zero(n);
        for (const auto& e : entries) {
          gu(e.col) += e.value * u(e.row);
          gv(e.col) += e.value * sc.v(e.row);
        }
        const double inv_b2 = 1.0 / (sc.beta * sc.beta);
        kkt += inv_b2 * (sp.gtg[k] + 4.0 * u.squaredNorm() * gu * gu.transpose() - 2.0 * gu * gv.transpose() -
                         2.0 * gv * gu.transpose());
        break;
      }
      case Cone::Kind::Semidefinite: {
        // (W'W)^{-1}(U) = M U M with M = rti rti'; symmetric Kronecker in svec form.
        const Index side = sc.cone.side;
        const MatrixXd m = sc.rti * sc.rti.transpose();
        std::vector<Index> ri(side * (side + 1) / 2), rj(side * (side + 1) / 2);
        for (Index c = 0; c < side; ++c)
          for (Index r = c; r < side; ++r) {
            ri[svec_index(side, r, c)] = r;
            rj[svec_index(side, r, c)] = c;
          }
        const double half = 0.5;
        const double sqrt2 = std::sqrt(2.0);
        for (std::size_t a = 0; a < entries.size(); ++a) {
          const auto& e1 = entries[a];
          const Index i = ri[e1.row], j = rj[e1.row];
          const double ci = (i == j) ? 1.0 : sqrt2;
          for (std::size_t b = a; b < entries.size(); ++b) {
            const auto& e2 = entries[b];
            const Index k2 = ri[e2.row], l2 = rj[e2.row];
            const double cl = (k2 == l2) ? 1.0 : sqrt2;
            const double kron = ci * cl * half * (m(i, k2) * m(j, l2) + m(i, l2) * m(j, k2));
            const double val = e1.value * e2.value * kron;
            kkt(e1.col, e2.col) += val;
            if (b != a) kkt(e2.col, e1.col) += val;
          }
        }
        break;
      }
      case Cone::Kind::Zero:
        break;
    }
  }
}

/// Dense factorisation of the reduced Newton system
///   [K  A'] [dx]   [r1]
///   [A  0 ] [dy] = [r2].
class NewtonSystem {
 public:
  NewtonSystem(const MatrixXd& k, const SparseMatrix& a) : a_(a) {
    // Symmetric Jacobi scaling: the NT blocks spread K's diagonal over many
    // orders of magnitude.
    d_ = k.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    MatrixXd scaled = d_.asDiagonal() * k * d_.asDiagonal();
    llt_.compute(scaled);
    for (double reg = 1e-14; llt_.info() != Eigen::Success && reg < 1e-6; reg *= 100.0) {
      scaled.diagonal().array() += reg;
      llt_.compute(scaled);
    }
    ok_ = llt_.info() == Eigen::Success;
    if (!ok_ || a.rows() == 0) return;
    // Eliminate dx: (A K^{-1} A') dy = A K^{-1} r1 - r2.
    const MatrixXd ad = MatrixXd(a);
    kinv_at_ = ksolve(ad.transpose());
    MatrixXd schur = ad * kinv_at_;
    schur.diagonal().array() += 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
    schur_.compute(schur);
    ok_ = schur_.info() == Eigen::Success;
  }
  bool ok() const { return ok_; }

  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dx, VectorXd& dy) const {
    if (a_.rows() == 0) {
      dx = ksolve(r1);
      dy.resize(0);
      return;
    }
    const VectorXd kr1 = ksolve(r1);
    dy = schur_.solve(a_ * kr1 - r2);
    dx = kr1 - kinv_at_ * dy;
  }

 private:
  MatrixXd ksolve(const MatrixXd& r) const { return d_.asDiagonal() * llt_.solve(d_.asDiagonal() * r); }

  const SparseMatrix& a_;
  VectorXd d_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> schur_;
  MatrixXd kinv_at_;
  bool ok_ = false;
};

}  // namespace

Result solve_interior_point(const Problem& problem, const Settings& settings) {
  problem.validate();
  const Split sp = split_problem(problem);
  const Index n = problem.num_variables();
  const Index n_eq = sp.a_eq.rows();
  const Index n_ineq = sp.g.rows();
  const std::size_t n_cones = sp.cones.size();
  const SparseMatrix& g = sp.g;
  const SparseMatrix& a = sp.a_eq;
  const SparseMatrix gt = g.transpose();
  const SparseMatrix at = a.transpose();
  const MatrixXd p_dense = MatrixXd(problem.P);
  const VectorXd& q = problem.q;

  Index degree = 0;
  for (const auto& c : sp.cones) degree += cone_degree(c);

  auto block = [&](VectorXd& v, std::size_t k) { return v.segment(sp.offsets[k], sp.cones[k].dim); };
  auto cblock = [&](const VectorXd& v, std::size_t k) {
    return VectorXd(v.segment(sp.offsets[k], sp.cones[k].dim));
  };

  // Starting point from the two least-squares problems with W = I.
  VectorXd x(n), y(n_eq), s(n_ineq), z(n_ineq);
  {
    MatrixXd k0 = p_dense + MatrixXd(SparseMatrix(gt * g));
    NewtonSystem sys(k0, a);
    if (!sys.ok()) throw SingularSystemError("interior point: singular initial system");
    VectorXd dx, dy;
    sys.solve(gt * sp.h, sp.b_eq, x, y);
    s = sp.h - g * x;
    sys.solve(-q, VectorXd::Zero(n_eq), dx, dy);
    z = g * dx;
    auto shift = [&](VectorXd& v) {
      double margin = -kInf;
      for (std::size_t k = 0; k < n_cones; ++k) margin = std::max(margin, cone_margin(sp.cones[k], cblock(v, k)));
      if (margin >= -1e-8) {
        const double t = 1.0 + std::max(margin, 0.0);
        for (std::size_t k = 0; k < n_cones; ++k) block(v, k) += cone_identity(sp.cones[k], t);
      }
    };
    shift(s);
    shift(z);
    y = dy;
  }

  const double rhs_norm = std::sqrt(sp.h.squaredNorm() + sp.b_eq.squaredNorm());
  const double q_norm = q.norm();

  Result result;
  result.status = Status::MaxIterations;
  double pres = kInf, dres = kInf;
  // Iterate with the smallest worst-case ratio of measure to tolerance.
  struct Snapshot {
    VectorXd x, y, s, z;
    double pres = kInf, dres = kInf, merit = kInf;
  } best;
  int iter = 0;
  for (iter = 0; iter <= settings.ipm_max_iterations; ++iter) {
    const VectorXd px = p_dense * x;
    const VectorXd rx = px + q + at * y + gt * z;
    const VectorXd ry = a * x - sp.b_eq;
    const VectorXd rz = g * x + s - sp.h;
    const double gap = s.dot(z);
    const double pcost = 0.5 * x.dot(px) + q.dot(x);
    const double dcost = pcost + y.dot(ry) + z.dot(rz) - gap;
    // Residuals relative to the magnitude of the terms they balance.
    const VectorXd gx = g * x;
    const VectorXd ax = a * x;
    const double p_scale = std::max({1.0, rhs_norm, std::sqrt(ax.squaredNorm() + gx.squaredNorm()), s.norm()});
    const double d_scale = std::max({1.0, q_norm, px.norm(), (at * y + gt * z).norm()});
    pres = std::sqrt(ry.squaredNorm() + rz.squaredNorm()) / p_scale;
    dres = rx.norm() / d_scale;
    double relgap = kInf;
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;

    if (settings.verbose)
      std::fprintf(stderr, "%3d  pres %.2e  dres %.2e  gap %.2e  pcost % .8e  dcost % .8e\n", iter, pres, dres, gap,
                   pcost, dcost);

    std::vector<Scaling> scalings(n_cones);
    bool interior = true;
    for (std::size_t k = 0; k < n_cones; ++k) {
      scalings[k] = compute_scaling(sp.cones[k], cblock(s, k), cblock(z, k));
      interior = interior && scalings[k].valid;
    }
    if (!interior) {
      result.status = Status::Stalled;
      break;
    }
    const double merit = std::max({pres / settings.eps_abs, dres / settings.eps_abs,
                                   std::min(gap / settings.eps_abs, relgap / settings.eps_rel)});
    if (merit < best.merit) best = {x, y, s, z, pres, dres, merit};
    if (merit <= 1.0) {
      result.status = Status::Solved;
      break;
    }
    if (iter == settings.ipm_max_iterations) break;
    MatrixXd kkt = p_dense;
    add_scaled_blocks(sp, scalings, kkt);
    NewtonSystem sys(kkt, a);
    ++result.factorizations;
    if (!sys.ok()) {
      result.status = Status::Stalled;
      break;
    }

    // One solve of
    //   P dx + A'dy + G'dz = -ex,  A dx = -ey,  G dx + dS = -ez,  W^{-T}dS + W dz = ds.
    auto newton_once = [&](const VectorXd& ex, const VectorXd& ey, const VectorXd& ez, const VectorXd& ds,
                           VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& dsv) {
      VectorXd t1(n_ineq), t2(n_ineq);
      for (std::size_t k = 0; k < n_cones; ++k) {
        const Scaling& sc = scalings[k];
        block(t1, k) = apply_winv(sc, apply_winvt(sc, cblock(ez, k)));
        block(t2, k) = apply_winv(sc, cblock(ds, k));
      }
      sys.solve(-ex - gt * (t1 + t2), -ey, dx, dy);
      const VectorXd gdx = g * dx;
      dz.resize(n_ineq);
      dsv.resize(n_ineq);
      for (std::size_t k = 0; k < n_cones; ++k) {
        const Scaling& sc = scalings[k];
        block(dz, k) = apply_winv(sc, apply_winvt(sc, cblock(gdx, k) + cblock(ez, k))) + cblock(t2, k);
        block(dsv, k) = apply_wt(sc, cblock(ds, k) - apply_w(sc, cblock(dz, k)));
      }
    };
    // Newton direction with iterative refinement on the unreduced system;
    // stops once a correction no longer shrinks the residual.
    auto newton = [&](const VectorXd& ds, VectorXd& dx, VectorXd& dy, VectorXd& dz, VectorXd& dsv) {
      newton_once(rx, ry, rz, ds, dx, dy, dz, dsv);
      VectorXd cx, cy, cz, cs, e4(n_ineq);
      const double target = std::sqrt(rx.squaredNorm() + ry.squaredNorm() + rz.squaredNorm() + ds.squaredNorm());
      double previous = kInf;
      for (int pass = 0; pass <= settings.ipm_refinement_steps; ++pass) {
        const VectorXd e1 = p_dense * dx + at * dy + gt * dz + rx;
        const VectorXd e2 = a * dx + ry;
        const VectorXd e3 = g * dx + dsv + rz;
        for (std::size_t k = 0; k < n_cones; ++k) {
          const Scaling& sc = scalings[k];
          block(e4, k) = apply_winvt(sc, cblock(dsv, k)) + apply_w(sc, cblock(dz, k)) - cblock(ds, k);
        }
        const double err =
            std::sqrt(e1.squaredNorm() + e2.squaredNorm() + e3.squaredNorm() + e4.squaredNorm());
        if (pass > 0 && err >= previous) {
          dx -= cx;
          dy -= cy;
          dz -= cz;
          dsv -= cs;
          break;
        }
        if (err <= 1e-15 * target || pass == settings.ipm_refinement_steps) break;
        previous = err;
        newton_once(e1, e2, e3, -e4, cx, cy, cz, cs);
        dx += cx;
        dy += cy;
        dz += cz;
        dsv += cs;
      }
    };
    auto step_length = [&](const VectorXd& dsv, const VectorXd& dz) {
      double t = kInf;
      for (std::size_t k = 0; k < n_cones; ++k) {
        const Scaling& sc = scalings[k];
        t = std::min(t, max_step(sc, apply_winvt(sc, cblock(dsv, k))));
        t = std::min(t, max_step(sc, apply_w(sc, cblock(dz, k))));
      }
      return t;
    };

    // Predictor.
    VectorXd ds_aff(n_ineq);
    for (std::size_t k = 0; k < n_cones; ++k) {
      const Scaling& sc = scalings[k];
      if (sc.cone.kind == Cone::Kind::Semidefinite) {
        VectorXd lam = VectorXd::Zero(sc.cone.dim);
        for (Index i = 0; i < sc.cone.side; ++i) lam(svec_index(sc.cone.side, i, i)) = sc.lambda(i);
        block(ds_aff, k) = -lam;
      } else {
        block(ds_aff, k) = -sc.lambda;
      }
    }
    VectorXd dx, dy, dz, dsv;
    newton(ds_aff, dx, dy, dz, dsv);
    const double alpha_aff = std::min(1.0, step_length(dsv, dz));
    const double mu = gap / std::max<Index>(degree, 1);
    const double gap_aff = (s + alpha_aff * dsv).dot(z + alpha_aff * dz);
    const double sigma = std::pow(std::clamp(gap_aff / std::max(gap, 1e-300), 0.0, 1.0), 3);

    // Corrector.
    VectorXd ds(n_ineq);
    for (std::size_t k = 0; k < n_cones; ++k) {
      const Scaling& sc = scalings[k];
      const VectorXd s_aff = apply_winvt(sc, cblock(dsv, k));
      const VectorXd z_aff = apply_w(sc, cblock(dz, k));
      // s_aff o z_aff for the cone's Jordan product.
      VectorXd prod(sc.cone.dim);
      switch (sc.cone.kind) {
        case Cone::Kind::NonNegative:
          prod = s_aff.cwiseProduct(z_aff);
          break;
        case Cone::Kind::SecondOrder:
          prod(0) = s_aff.dot(z_aff);
          prod.tail(sc.cone.dim - 1) = s_aff(0) * z_aff.tail(sc.cone.dim - 1) + z_aff(0) * s_aff.tail(sc.cone.dim - 1);
          break;
        case Cone::Kind::Semidefinite: {
          const MatrixXd sm = smat(s_aff, sc.cone.side);
          const MatrixXd zm = smat(z_aff, sc.cone.side);
          prod = svec(0.5 * (sm * zm + zm * sm));
          break;
        }
        case Cone::Kind::Zero:
          break;
      }
      VectorXd lam2(sc.cone.dim);
      if (sc.cone.kind == Cone::Kind::Semidefinite) {
        lam2.setZero();
        for (Index i = 0; i < sc.cone.side; ++i)
          lam2(svec_index(sc.cone.side, i, i)) = sc.lambda(i) * sc.lambda(i);
      } else if (sc.cone.kind == Cone::Kind::SecondOrder) {
        lam2 = lambda_product(sc, sc.lambda);
      } else {
        lam2 = sc.lambda.cwiseAbs2();
      }
      const VectorXd target = -lam2 - prod + cone_identity(sc.cone, sigma * mu);
      block(ds, k) = lambda_divide(sc, target);
    }
    newton(ds, dx, dy, dz, dsv);
    const double alpha = std::min(1.0, 0.99 * step_length(dsv, dz));
    if (settings.verbose) std::fprintf(stderr, "     step %.3e  sigma %.3e\n", alpha, sigma);
    if (!(alpha > 1e-10)) {
      result.status = Status::Stalled;
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * dsv;
  }

  result.iterations = iter;
  if (result.status != Status::Solved && best.merit < kInf) {
    x = best.x;
    y = best.y;
    s = best.s;
    z = best.z;
    pres = best.pres;
    dres = best.dres;
  }
  result.primal_residual = pres;
  result.dual_residual = dres;
  result.x = x;
  // Report in the (A, b, K) layout of the original problem.
  result.s = VectorXd::Zero(problem.num_constraints());
  result.y = VectorXd::Zero(problem.num_constraints());
  for (std::size_t k = 0; k < n_cones; ++k) {
    result.s.segment(sp.source_offsets[k], sp.cones[k].dim) = cblock(s, k);
    result.y.segment(sp.source_offsets[k], sp.cones[k].dim) = cblock(z, k);
  }
  for (Index r = 0; r < n_eq; ++r) result.y(sp.eq_rows[r]) = y(r);
  result.objective = 0.5 * x.dot(problem.P * x) + q.dot(x);
  return result;
}

}  // namespace gsr::conic

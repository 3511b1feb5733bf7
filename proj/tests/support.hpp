#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "gsr/analysis.hpp"
#include "gsr/graph.hpp"
#include "gsr/signal.hpp"

namespace gsr::testing {

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline Eigen::VectorXd random_vector(Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Eigen::MatrixXd random_psd(Index n, std::mt19937_64& rng, Index rank = -1) {
  if (rank < 0) rank = n;
  std::normal_distribution<double> g;
  Eigen::MatrixXd f(n, rank);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < rank; ++j) f(i, j) = g(rng);
  return f * f.transpose();
}

inline Eigen::MatrixXd random_symmetric(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = g(rng);
  return 0.5 * (m + m.transpose());
}

/// Path graph 0-1-...-(n-1) with unit weights.
inline Graph path_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return Graph(n, edges);
}

inline Graph random_er(std::mt19937_64& rng, Index n_lo, Index n_hi, double p_lo = 0.3, double p_hi = 0.8) {
  const Index n = std::uniform_int_distribution<Index>(n_lo, n_hi)(rng);
  const double p = std::uniform_real_distribution<double>(p_lo, p_hi)(rng);
  return erdos_renyi(n, p, rng());
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd b = a / std::pow(2.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * b / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Random (graph, x*, sigma^2, w0, w) draw for the trade-off theorems.
struct TheoryInstance {
  Laplacian lap;
  VectorXd x;
  double sigma2 = 1.0;
  double w0 = 1.0;
  VectorXd w;
  NoiseModel noise() const { return NoiseModel::isotropic(lap.size(), sigma2); }
};

/// Weights with w0 <= w_i^2 <= upper * w0 and random signs.
inline VectorXd lemma1_weights(Index n, double w0, double upper, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, upper);
  std::bernoulli_distribution flip(0.3);
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = (flip(rng) ? -1.0 : 1.0) * std::sqrt(w0 * u(rng));
  return w;
}

/// ER graph with n in [5, 30], w0 in (0, 1] and Lemma 1 weights.
inline TheoryInstance lemma1_instance(std::mt19937_64& rng) {
  TheoryInstance t;
  t.lap = Laplacian(random_er(rng, 5, 30));
  t.x = random_vector(t.lap.size(), rng, -2.0, 2.0);
  t.sigma2 = std::uniform_real_distribution<double>(0.01, 2.0)(rng);
  t.w0 = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  t.w = lemma1_weights(t.lap.size(), t.w0, 5.0, rng);
  return t;
}

/// As lemma1_instance, with sigma^2 chosen so that the Corollary 1 ceiling
/// 1 / (rho lmax) lies above w0 and every w_i^2 stays below it.
inline TheoryInstance corollary1_instance(std::mt19937_64& rng) {
  TheoryInstance t = lemma1_instance(rng);
  const double ceiling = t.w0 * std::uniform_real_distribution<double>(1.05, 4.0)(rng);
  const double rho = 1.0 / (ceiling * t.lap.lambda_max());
  t.sigma2 = t.x.squaredNorm() / rho;
  t.w = lemma1_weights(t.lap.size(), t.w0, ceiling / t.w0 * (1.0 - 1e-9), rng);
  return t;
}

}  // namespace gsr::testing

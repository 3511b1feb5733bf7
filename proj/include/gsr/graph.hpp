#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace gsr {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Undirected weighted edge; stored with i < j.
struct Edge {
  Index i = 0;
  Index j = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Index node = 0;
  double weight = 0.0;
};

/// Undirected graph with positive edge weights and no self-loops.
///
/// Edges are canonicalised to i < j and sorted lexicographically, so two
/// graphs built from the same edge set compare equal regardless of the
/// input order.
class Graph {
 public:
  Graph() = default;
  Graph(Index n_nodes, std::vector<Edge> edges);

  Index size() const noexcept { return n_nodes_; }
  Index edge_count() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Neighbor>& neighbors(Index node) const { return adjacency_list_.at(node); }
  double degree(Index node) const;

  MatrixXd adjacency() const;
  bool is_connected() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_nodes_ == b.n_nodes_ && a.edges_ == b.edges_;
  }

 private:
  Index n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_list_;
};

/// Number of attempts erdos_renyi makes before giving up on connectivity.
inline constexpr int kErdosRenyiRetries = 100;

/// G(n, p) with unit weights; resampled until connected.
/// Throws ConnectivityError after kErdosRenyiRetries disconnected draws.
Graph erdos_renyi(Index n, double p, std::uint64_t seed);

/// Symmetrised k-nearest-neighbour graph with weights exp(-scale * d^2).
///
/// `coords` holds one point per row. An edge (i, j) exists when either
/// endpoint lists the other among its k nearest neighbours; ties in distance
/// go to the lower node index. Duplicate points are rejected.
Graph knn_geometric(const MatrixXd& coords, Index k, double kernel_scale);

/// Combinatorial Laplacian L = diag(A 1) - A with cached spectrum.
///
/// Eigenvalues are ascending; each eigenvector is normalised and its first
/// nonzero entry made positive so that downstream synthesis is deterministic.
class Laplacian {
 public:
  /// Graphs above this size skip the dense eigendecomposition; only
  /// lambda_max is then available (via power iteration).
  static constexpr Index kDenseSpectrumLimit = 2000;

  Laplacian() = default;
  explicit Laplacian(Graph graph);

  Index size() const noexcept { return graph_.size(); }
  const Graph& graph() const noexcept { return graph_; }
  const MatrixXd& matrix() const noexcept { return matrix_; }

  bool has_spectrum() const noexcept { return eigenvalues_.size() == size(); }
  /// Throws DomainError when the spectrum was not computed.
  const VectorXd& eigenvalues() const;
  const MatrixXd& eigenvectors() const;

  /// Second-smallest eigenvalue; zero (exactly) for disconnected graphs.
  double lambda2() const;
  double lambda_max() const noexcept { return lambda_max_; }

 private:
  Graph graph_;
  MatrixXd matrix_;
  VectorXd eigenvalues_;
  MatrixXd eigenvectors_;
  double lambda2_ = 0.0;
  double lambda_max_ = 0.0;
};

inline Laplacian laplacian(const Graph& g) { return Laplacian(g); }

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_lambda_max(const MatrixXd& m, double tolerance = 1e-10,
                                  int max_iterations = 100000);

/// Per-node regularisation weights.
///
/// Invariant(w0) is the scalar Tikhonov weight; it acts as the adaptive
/// vector sqrt(w0) * 1.
class NodeWeights {
 public:
  struct Invariant {
    double w0;
  };
  struct Adaptive {
    VectorXd w;
  };

  static NodeWeights invariant(double w0);
  static NodeWeights adaptive(VectorXd w);

  bool is_invariant() const noexcept { return std::holds_alternative<Invariant>(value_); }
  /// Scalar weight; DomainError if adaptive.
  double w0() const;
  /// Adaptive vector; DomainError if invariant.
  const VectorXd& values() const;
  /// Equivalent adaptive vector of length n.
  VectorXd as_vector(Index n) const;
  /// Throws DimensionError unless the weights fit an n-node graph.
  void check_size(Index n) const;

 private:
  explicit NodeWeights(std::variant<Invariant, Adaptive> v) : value_(std::move(v)) {}
  std::variant<Invariant, Adaptive> value_;
};

/// Dense S(w) = diag(w) L diag(w).
struct ShiftOperator {
  MatrixXd matrix;
};

ShiftOperator shift_operator(const Laplacian& lap, const NodeWeights& w);

/// y = S(w) x by the edge-local recursion y_i = w_i sum_j A_ij (w_i x_i - w_j x_j).
VectorXd apply_shift(const Laplacian& lap, const NodeWeights& w, const VectorXd& x);

/// x' S(w) x as the edge sum  sum_(i,j) A_ij (w_i x_i - w_j x_j)^2.
double quadratic_form(const Laplacian& lap, const VectorXd& x, const NodeWeights& w);

// Text formats -------------------------------------------------------------

/// Edge list: header `n_nodes=<n>` then `i j w` lines (0-based).
Graph read_edge_list(std::istream& in);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

struct Coordinates {
  std::vector<std::string> ids;
  MatrixXd points;  // one row per id
};

/// Coordinates file: lines `id x y [z ...]`.
Coordinates read_coordinates(std::istream& in);

}  // namespace gsr

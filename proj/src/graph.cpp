#include "gsr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "gsr/error.hpp"

namespace gsr {

Graph::Graph(Index n_nodes, std::vector<Edge> edges) : n_nodes_(n_nodes) {
  if (n_nodes <= 0) throw DomainError("graph must have at least one node");
  for (auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n_nodes || e.j >= n_nodes)
      throw DomainError("edge endpoint out of range");
    if (e.i == e.j) throw DomainError("self-loops are not allowed");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw DomainError("edge weights must be positive and finite");
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.i, a.j) < std::pair(b.i, b.j);
  });
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k].i == edges[k - 1].i && edges[k].j == edges[k - 1].j)
      throw DomainError("duplicate edge (" + std::to_string(edges[k].i) + ", " +
                        std::to_string(edges[k].j) + ")");
  }
  edges_ = std::move(edges);
  adjacency_list_.assign(static_cast<std::size_t>(n_nodes), {});
  for (const auto& e : edges_) {
    adjacency_list_[e.i].push_back({e.j, e.weight});
    adjacency_list_[e.j].push_back({e.i, e.weight});
  }
  for (auto& list : adjacency_list_) {
    std::sort(list.begin(), list.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

double Graph::degree(Index node) const {
  double d = 0.0;
  for (const auto& nb : neighbors(node)) d += nb.weight;
  return d;
}

MatrixXd Graph::adjacency() const {
  MatrixXd a = MatrixXd::Zero(n_nodes_, n_nodes_);
  for (const auto& e : edges_) {
    a(e.i, e.j) = e.weight;
    a(e.j, e.i) = e.weight;
  }
  return a;
}

bool Graph::is_connected() const {
  if (n_nodes_ == 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(n_nodes_), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index visited = 1;
  while (!stack.empty()) {
    Index v = stack.back();
    stack.pop_back();
    for (const auto& nb : adjacency_list_[v]) {
      if (!seen[nb.node]) {
        seen[nb.node] = 1;
        ++visited;
        stack.push_back(nb.node);
      }
    }
  }
  return visited == n_nodes_;
}

Graph erdos_renyi(Index n, double p, std::uint64_t seed) {
  if (n < 2) throw DomainError("erdos_renyi requires n >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("edge probability must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  for (int attempt = 0; attempt < kErdosRenyiRetries; ++attempt) {
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (coin(rng)) edges.push_back({i, j, 1.0});
    Graph g(n, std::move(edges));
    if (g.is_connected()) return g;
  }
  throw ConnectivityError("erdos_renyi: no connected graph after " +
                          std::to_string(kErdosRenyiRetries) + " draws (n=" +
                          std::to_string(n) + ", p=" + std::to_string(p) + ")");
}

Graph knn_geometric(const MatrixXd& coords, Index k, double kernel_scale) {
  const Index n = coords.rows();
  if (n < 2) throw DomainError("knn_geometric needs at least two points");
  if (k < 1 || k >= n) throw DomainError("knn_geometric requires 1 <= k < n");
  if (!(kernel_scale > 0.0)) throw DomainError("kernel_scale must be positive");

  MatrixXd d2(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d2(i, j) = (coords.row(i) - coords.row(j)).squaredNorm();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (d2(i, j) == 0.0)
        throw DomainError("knn_geometric: points " + std::to_string(i) + " and " +
                          std::to_string(j) + " coincide");

  std::set<std::pair<Index, Index>> selected;
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return d2(i, a) < d2(i, b); });
    for (Index r = 0; r < k; ++r) {
      Index j = order[r];
      selected.emplace(std::min(i, j), std::max(i, j));
    }
  }
  std::vector<Edge> edges;
  edges.reserve(selected.size());
  for (const auto& [i, j] : selected) edges.push_back({i, j, std::exp(-kernel_scale * d2(i, j))});
  return Graph(n, std::move(edges));
}

namespace {

void fix_eigenvector_signs(MatrixXd& vecs) {
  for (Index c = 0; c < vecs.cols(); ++c) {
    for (Index r = 0; r < vecs.rows(); ++r) {
      if (std::abs(vecs(r, c)) > 1e-12) {
        if (vecs(r, c) < 0) vecs.col(c) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace

Laplacian::Laplacian(Graph graph) : graph_(std::move(graph)) {
  const Index n = graph_.size();
  matrix_ = MatrixXd::Zero(n, n);
  for (const auto& e : graph_.edges()) {
    matrix_(e.i, e.j) -= e.weight;
    matrix_(e.j, e.i) -= e.weight;
    matrix_(e.i, e.i) += e.weight;
    matrix_(e.j, e.j) += e.weight;
  }
  if (n <= kDenseSpectrumLimit) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(matrix_);
    if (es.info() != Eigen::Success) throw Error("Laplacian eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
    fix_eigenvector_signs(eigenvectors_);
    lambda_max_ = eigenvalues_(n - 1);
    const double zero_tol = 1e-10 * std::max(lambda_max_, 1.0);
    lambda2_ = (n > 1 && graph_.is_connected()) ? eigenvalues_(1) : 0.0;
    if (lambda2_ < zero_tol) lambda2_ = 0.0;
  } else {
    lambda_max_ = power_iteration_lambda_max(matrix_);
    lambda2_ = graph_.is_connected() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  }
}

const VectorXd& Laplacian::eigenvalues() const {
  if (!has_spectrum()) throw DomainError("spectrum not computed for graphs this large");
  return eigenvalues_;
}

const MatrixXd& Laplacian::eigenvectors() const {
  if (!has_spectrum()) throw DomainError("spectrum not computed for graphs this large");
  return eigenvectors_;
}

double Laplacian::lambda2() const {
  if (std::isnan(lambda2_)) throw DomainError("lambda2 not computed for graphs this large");
  return lambda2_;
}

double power_iteration_lambda_max(const MatrixXd& m, double tolerance, int max_iterations) {
  const Index n = m.rows();
  if (n == 0) return 0.0;
  // Deterministic start with no special alignment to the constant vector.
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    VectorXd w = m * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(next - lambda) <= tolerance * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

NodeWeights NodeWeights::invariant(double w0) {
  if (!(w0 >= 0.0) || !std::isfinite(w0)) throw DomainError("w0 must be a finite nonnegative number");
  return NodeWeights(Invariant{w0});
}

NodeWeights NodeWeights::adaptive(VectorXd w) {
  if (!w.allFinite()) throw DomainError("node weights must be finite");
  return NodeWeights(Adaptive{std::move(w)});
}

double NodeWeights::w0() const {
  if (const auto* inv = std::get_if<Invariant>(&value_)) return inv->w0;
  throw DomainError("weights are node-adaptive");
}

const VectorXd& NodeWeights::values() const {
  if (const auto* ad = std::get_if<Adaptive>(&value_)) return ad->w;
  throw DomainError("weights are node-invariant");
}

VectorXd NodeWeights::as_vector(Index n) const {
  check_size(n);
  if (is_invariant()) return VectorXd::Constant(n, std::sqrt(w0()));
  return values();
}

void NodeWeights::check_size(Index n) const {
  if (!is_invariant() && values().size() != n)
    throw DimensionError("weight vector has length " + std::to_string(values().size()) +
                         ", graph has " + std::to_string(n) + " nodes");
}

ShiftOperator shift_operator(const Laplacian& lap, const NodeWeights& w) {
  w.check_size(lap.size());
  if (w.is_invariant()) return {w.w0() * lap.matrix()};
  const VectorXd& v = w.values();
  return {v.asDiagonal() * lap.matrix() * v.asDiagonal()};
}

VectorXd apply_shift(const Laplacian& lap, const NodeWeights& w, const VectorXd& x) {
  const Index n = lap.size();
  if (x.size() != n) throw DimensionError("signal length does not match graph size");
  w.check_size(n);
  const Graph& g = lap.graph();
  VectorXd out(n);
  if (w.is_invariant()) {
    const double w0 = w.w0();
    for (Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (const auto& nb : g.neighbors(i)) acc += nb.weight * (x(i) - x(nb.node));
      out(i) = w0 * acc;
    }
    return out;
  }
  const VectorXd& v = w.values();
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const auto& nb : g.neighbors(i)) acc += nb.weight * (v(i) * x(i) - v(nb.node) * x(nb.node));
    out(i) = v(i) * acc;
  }
  return out;
}

double quadratic_form(const Laplacian& lap, const VectorXd& x, const NodeWeights& w) {
  const Index n = lap.size();
  if (x.size() != n) throw DimensionError("signal length does not match graph size");
  w.check_size(n);
  double sum = 0.0;
  if (w.is_invariant()) {
    for (const auto& e : lap.graph().edges()) {
      const double d = x(e.i) - x(e.j);
      sum += e.weight * d * d;
    }
    return w.w0() * sum;
  }
  const VectorXd& v = w.values();
  for (const auto& e : lap.graph().edges()) {
    const double d = v(e.i) * x(e.i) - v(e.j) * x(e.j);
    sum += e.weight * d * d;
  }
  return sum;
}

// Text formats -------------------------------------------------------------

namespace {

bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

Graph read_edge_list(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!next_content_line(in, line, line_no)) throw ParseError("edge list: empty input");
  const std::string key = "n_nodes=";
  const auto pos = line.find(key);
  if (pos == std::string::npos) throw ParseError("edge list: expected header `n_nodes=<n>`");
  Index n = 0;
  try {
    n = std::stoll(line.substr(pos + key.size()));
  } catch (const std::exception&) {
    throw ParseError("edge list: bad node count in header");
  }
  std::vector<Edge> edges;
  while (next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    Edge e;
    if (!(ss >> e.i >> e.j >> e.weight))
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected `i j w`");
    std::string extra;
    if (ss >> extra) throw ParseError("edge list line " + std::to_string(line_no) + ": trailing tokens");
    edges.push_back(e);
  }
  return Graph(n, std::move(edges));
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list: " + path);
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "n_nodes=" << g.size() << '\n';
  out.precision(17);
  for (const auto& e : g.edges()) out << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

Coordinates read_coordinates(std::istream& in) {
  Coordinates c;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    std::string id;
    ss >> id;
    std::vector<double> p;
    double v;
    while (ss >> v) p.push_back(v);
    if (!ss.eof()) throw ParseError("coordinates line " + std::to_string(line_no) + ": bad number");
    if (p.empty()) throw ParseError("coordinates line " + std::to_string(line_no) + ": missing coordinates");
    if (!rows.empty() && p.size() != rows.front().size())
      throw ParseError("coordinates line " + std::to_string(line_no) + ": dimension mismatch");
    c.ids.push_back(id);
    rows.push_back(std::move(p));
  }
  if (rows.empty()) throw ParseError("coordinates: empty input");
  c.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t d = 0; d < rows[r].size(); ++d) c.points(static_cast<Index>(r), static_cast<Index>(d)) = rows[r][d];
  return c;
}

}  // namespace gsr

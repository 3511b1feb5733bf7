#include "gsr/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gsr/error.hpp"

namespace gsr {

NoiseModel NoiseModel::isotropic(Index n, double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be nonnegative");
  return {sigma2 * MatrixXd::Identity(n, n), seed};
}

void NoiseModel::validate() const {
  if (covariance.rows() != covariance.cols()) throw DimensionError("covariance must be square");
  if (!covariance.allFinite()) throw DomainError("covariance has non-finite entries");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if (!covariance.isApprox(covariance.transpose(), 1e-12) &&
      (covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().size() > 0 && es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw DomainError("covariance is not positive semidefinite");
}

Observation Observation::full(VectorXd y) {
  std::vector<Index> mask(static_cast<std::size_t>(y.size()));
  std::iota(mask.begin(), mask.end(), Index{0});
  return {std::move(y), std::move(mask)};
}

Observation Observation::masked(const VectorXd& y, std::vector<Index> mask) {
  std::sort(mask.begin(), mask.end());
  if (std::adjacent_find(mask.begin(), mask.end()) != mask.end())
    throw DomainError("observation mask has duplicate nodes");
  if (mask.empty()) throw DomainError("observation mask is empty");
  if (mask.front() < 0 || mask.back() >= y.size()) throw DomainError("mask index out of range");
  VectorXd kept = VectorXd::Zero(y.size());
  for (Index i : mask) kept(i) = y(i);
  return {std::move(kept), std::move(mask)};
}

VectorXd Observation::observed_values() const {
  VectorXd v(static_cast<Index>(mask.size()));
  for (std::size_t k = 0; k < mask.size(); ++k) v(static_cast<Index>(k)) = y(mask[k]);
  return v;
}

SignalBounds::SignalBounds(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw DimensionError("bound vectors differ in length");
  if ((lower.array() > upper.array()).any()) throw DomainError("lower bound exceeds upper bound");
}

VectorXd bandlimited_signal(const Laplacian& lap, Index bandwidth, std::uint64_t seed,
                            bool random_coefficients) {
  const Index n = lap.size();
  if (bandwidth < 1 || bandwidth > n) throw DomainError("bandwidth must lie in [1, n]");
  VectorXd coeffs = VectorXd::Zero(n);
  if (random_coefficients) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index k = 0; k < bandwidth; ++k) coeffs(k) = normal(rng);
  } else {
    coeffs.head(bandwidth).setOnes();
  }
  return lap.eigenvectors() * coeffs;
}

VectorXd graph_fourier_transform(const Laplacian& lap, const VectorXd& x) {
  if (x.size() != lap.size()) throw DimensionError("signal length does not match graph size");
  return lap.eigenvectors().transpose() * x;
}

Observation add_noise(const VectorXd& x, const NoiseModel& model) {
  const Index n = x.size();
  if (model.size() != n) throw DimensionError("noise covariance does not match signal length");
  model.validate();
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(n);
  for (Index i = 0; i < n; ++i) z(i) = normal(rng);

  const MatrixXd& cov = model.covariance;
  const bool diagonal = (cov - MatrixXd(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  VectorXd noise;
  if (diagonal) {
    noise = cov.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    noise = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  }
  return Observation::full(x + noise);
}

double snr_to_sigma(const VectorXd& x, double snr_db) {
  const double energy = x.squaredNorm();
  if (energy == 0.0) throw DomainError("snr_to_sigma: zero signal");
  const double n = static_cast<double>(x.size());
  return std::sqrt(energy / (n * std::pow(10.0, snr_db / 10.0)));
}

double nmse(const VectorXd& estimate, const VectorXd& truth) {
  if (estimate.size() != truth.size()) throw DimensionError("nmse: length mismatch");
  const double energy = truth.squaredNorm();
  if (energy == 0.0) throw DomainError("nmse: zero truth vector");
  return (estimate - truth).squaredNorm() / energy;
}

std::vector<Index> random_mask(Index n, Index count, std::uint64_t seed) {
  if (count < 1 || count > n) throw DomainError("sample size must lie in [1, n]");
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates keeps the draw independent of the stdlib's shuffle.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  std::vector<Index> mask(all.begin(), all.begin() + count);
  std::sort(mask.begin(), mask.end());
  return mask;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

double parse_number(const std::string& s, int line_no) {
  if (s.empty()) throw ParseError("station csv line " + std::to_string(line_no) + ": missing value");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("station csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw ParseError("station csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

StationDataset load_station_csv(std::istream& in, Index k, double kernel_scale) {
  StationDataset ds;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line) && is_blank(line)) ++line_no;
  ++line_no;
  auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "station_id" || header[1] != "lat" || header[2] != "lon")
    throw ParseError("station csv: expected header `station_id,lat,lon`");

  std::vector<std::array<double, 2>> coords;
  std::map<std::string, Index> id_to_row;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) break;
    auto f = split_csv(line);
    if (f.size() != 3) throw ParseError("station csv line " + std::to_string(line_no) + ": expected `id,lat,lon`");
    if (f[0].empty()) throw ParseError("station csv line " + std::to_string(line_no) + ": empty station id");
    if (f[1].empty() || f[2].empty())
      throw ParseError("station csv line " + std::to_string(line_no) + ": station " + f[0] + " has missing coordinates");
    if (id_to_row.count(f[0])) throw ParseError("station csv: duplicate station id " + f[0]);
    id_to_row[f[0]] = static_cast<Index>(ds.station_ids.size());
    ds.station_ids.push_back(f[0]);
    coords.push_back({parse_number(f[1], line_no), parse_number(f[2], line_no)});
  }
  const Index n = static_cast<Index>(ds.station_ids.size());
  if (n < 2) throw ParseError("station csv: need at least two stations");

  while (std::getline(in, line) && is_blank(line)) ++line_no;
  ++line_no;
  auto value_header = split_csv(line);
  if (value_header.empty() || value_header[0] != "timestamp")
    throw ParseError("station csv: expected value header starting with `timestamp`");
  if (static_cast<Index>(value_header.size()) != n + 1)
    throw ParseError("station csv: value header must list every station exactly once");
  std::vector<Index> column_to_row(static_cast<std::size_t>(n));
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Index c = 0; c < n; ++c) {
    auto it = id_to_row.find(value_header[c + 1]);
    if (it == id_to_row.end())
      throw ParseError("station csv: station " + value_header[c + 1] + " has no coordinates");
    if (used[it->second]) throw ParseError("station csv: station " + value_header[c + 1] + " listed twice");
    used[it->second] = 1;
    column_to_row[c] = it->second;
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    auto f = split_csv(line);
    if (static_cast<Index>(f.size()) != n + 1)
      throw ParseError("station csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n + 1) + " fields");
    VectorXd snap(n);
    for (Index c = 0; c < n; ++c) {
      const double v = parse_number(f[c + 1], line_no);
      snap(column_to_row[c]) = v;
    }
    ds.timestamps.push_back(f[0]);
    ds.snapshots.push_back(std::move(snap));
  }
  if (ds.snapshots.empty()) throw ParseError("station csv: no value rows");

  // Mean taken relative to the minimum so constant data de-means to exact
  // zeros, followed by one refinement pass on the residual mean.
  double lowest = ds.snapshots.front().minCoeff();
  for (const auto& s : ds.snapshots) lowest = std::min(lowest, s.minCoeff());
  const double count = static_cast<double>(ds.snapshots.size()) * static_cast<double>(n);
  double offset_sum = 0.0;
  for (const auto& s : ds.snapshots) offset_sum += (s.array() - lowest).sum();
  double mean = lowest + offset_sum / count;
  double residual = 0.0;
  for (const auto& s : ds.snapshots) residual += (s.array() - mean).sum();
  mean += residual / count;
  ds.removed_mean = mean;
  for (auto& s : ds.snapshots) s.array() -= mean;

  ds.coordinates.resize(n, 2);
  for (Index r = 0; r < n; ++r) {
    ds.coordinates(r, 0) = coords[r][0];
    ds.coordinates(r, 1) = coords[r][1];
  }
  ds.graph = knn_geometric(ds.coordinates, k, kernel_scale);
  return ds;
}

StationDataset load_station_csv_file(const std::string& path, Index k, double kernel_scale) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open station csv: " + path);
  return load_station_csv(in, k, kernel_scale);
}

}  // namespace gsr

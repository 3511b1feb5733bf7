#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsr/graph.hpp"

namespace gsr {

/// Zero-mean Gaussian noise with covariance `covariance`.
struct NoiseModel {
  MatrixXd covariance;
  std::uint64_t seed = 0;

  static NoiseModel isotropic(Index n, double sigma2, std::uint64_t seed = 0);
  Index size() const noexcept { return covariance.rows(); }
  /// Throws DomainError unless the covariance is symmetric PSD.
  void validate() const;
};

/// Noisy samples on the observed node subset `mask` (sorted, unique).
///
/// `y` has one entry per graph node; entries outside the mask are zero and
/// never read by the estimators.
struct Observation {
  VectorXd y;
  std::vector<Index> mask;

  static Observation full(VectorXd y);
  /// Keeps y on `mask` and zeroes it elsewhere.
  static Observation masked(const VectorXd& y, std::vector<Index> mask);

  Index size() const noexcept { return y.size(); }
  bool is_full() const noexcept { return static_cast<Index>(mask.size()) == y.size(); }
  /// Observed values in mask order.
  VectorXd observed_values() const;
};

/// Element-wise box x_l <= x <= x_u.
struct SignalBounds {
  VectorXd lower;
  VectorXd upper;

  SignalBounds(VectorXd lower, VectorXd upper);
};

/// Signal with graph Fourier coefficients equal to one on the `bandwidth`
/// lowest frequencies and zero elsewhere. With `random_coefficients` the
/// in-band coefficients are drawn N(0, 1) from `seed` instead.
VectorXd bandlimited_signal(const Laplacian& lap, Index bandwidth, std::uint64_t seed = 0,
                            bool random_coefficients = false);

/// Graph Fourier transform U' x.
VectorXd graph_fourier_transform(const Laplacian& lap, const VectorXd& x);

/// y = x + n, n ~ N(0, Sigma), full mask, deterministic for a given seed.
Observation add_noise(const VectorXd& x, const NoiseModel& model);

/// Noise standard deviation giving SNR = ||x||^2 / (N sigma^2) = 10^(snr_db/10).
double snr_to_sigma(const VectorXd& x, double snr_db);

/// ||estimate - truth||^2 / ||truth||^2.
double nmse(const VectorXd& estimate, const VectorXd& truth);

/// Uniformly random subset of `count` nodes out of n, returned sorted.
std::vector<Index> random_mask(Index n, Index count, std::uint64_t seed);

/// Weather-station style dataset: coordinates plus a snapshot per timestamp.
struct StationDataset {
  std::vector<std::string> station_ids;
  MatrixXd coordinates;  // (lat, lon) per station row
  std::vector<std::string> timestamps;
  std::vector<VectorXd> snapshots;  // one signal per timestamp, globally de-meaned
  double removed_mean = 0.0;
  Graph graph;
};

/// Reads the station CSV (coordinate block, blank line, wide value matrix),
/// subtracts the single spatio-temporal mean and builds the kNN graph.
StationDataset load_station_csv(std::istream& in, Index k, double kernel_scale);
StationDataset load_station_csv_file(const std::string& path, Index k, double kernel_scale);

}  // namespace gsr

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsr/design.hpp"
#include "gsr/graph.hpp"

namespace gsr {

enum class ExperimentKind { SyntheticDenoise, SyntheticInterpolate, DatasetDenoise, DatasetInterpolate };

enum class Method { NI, NaiveNA, PronyUnconstrained, Prony, SDR, MinMaxProny, MinMaxSDR, KRR };

/// Name used in configs and CSV output ("NI", "MinMaxSDR", ...).
std::string method_name(Method m);
/// Inverse of method_name; ParseError for unknown names.
Method parse_method(const std::string& name);
std::string experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& name);

/// How dataset runs obtain design priors.
enum class DatasetPrior {
  Training,  // first half of the snapshots -> average x x'; evaluate on the second half
  Bounds,    // element-wise min / max over all snapshots; evaluate on all of them
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SyntheticDenoise;

  // graph
  Index n = 50;
  double p = 0.5;
  Index k = 5;
  double kernel_scale = 5.0;

  // signal
  Index bandwidth = 20;

  std::vector<double> snr_grid_db;
  std::vector<Index> sample_sizes;
  std::vector<Method> methods;

  int n_graphs = 1;
  int n_noise = 1;
  std::uint64_t graph_seed = 1;
  std::uint64_t noise_seed = 1000;

  double w0_multiplier = 1.0;
  double krr_sigma2 = 1.0;
  double krr_mu = 1e-4;

  /// Keep one observed subset per (graph, sample size) instead of a fresh one per trial.
  bool fixed_mask = false;
  /// SDR noise covariance from a single noise draw (eps eps') instead of the known sigma^2 I.
  bool single_instance_noise = false;
  DatasetPrior dataset_prior = DatasetPrior::Training;
  /// Evaluate on at most this many snapshots (0 = all).
  Index max_snapshots = 0;

  SdpSolverConfig sdp;
  /// Worker threads for the trial map; 0 = hardware concurrency.
  int threads = 0;

  /// Throws DomainError on invalid combinations.
  void validate() const;
};

/// Line-oriented `key = value` text; `#` starts a comment. Lists are comma
/// separated. Unknown keys and malformed values raise ParseError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
std::string format_config(const ExperimentConfig& cfg);

struct ResultRow {
  std::string method;
  double x_value = 0.0;  // SNR in dB or number of observed nodes
  double mean_nmse = 0.0;
  double std_nmse = 0.0;
  long n_trials = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  /// Sorts by method name, then x ascending.
  void sort();
  /// Row for (method, x); DomainError when absent.
  const ResultRow& at(const std::string& method, double x_value) const;
};

/// Header `method,x_value,mean_nmse,std_nmse,n_trials`, rows sorted.
void emit_csv(const ResultTable& table, std::ostream& out);
void emit_csv(const ResultTable& table, const std::string& path);
ResultTable parse_csv(std::istream& in);
ResultTable parse_csv_file(const std::string& path);

ResultTable run_synthetic_denoise(const ExperimentConfig& cfg);
ResultTable run_synthetic_interpolate(const ExperimentConfig& cfg);
/// Dataset experiments on a station CSV (see load_station_csv).
ResultTable run_dataset(const ExperimentConfig& cfg, const std::string& data_path);
/// Dispatches on cfg.experiment; `data_path` is only read by dataset runs.
ResultTable run_experiment(const ExperimentConfig& cfg, const std::string& data_path = {});

/// Design prior file, `key = value` lines:
///   x = <csv>                      exact signal, or
///   lower = <csv> / upper = <csv>  signal bounds, or
///   second_moment = <csv>          X as n*n values, row-major;
///   sigma2 = <f>                   isotropic noise variance (needed by SDR);
///   w0_star = <f> or snr_db = <f>  diagonal floor, given or from optimal_w0;
///   candidate = <csv>              extra min-max candidate (repeatable).
DesignProblem parse_design_prior(std::istream& in, const Laplacian& lap);
DesignProblem parse_design_prior_file(const std::string& path, const Laplacian& lap);

/// Comma-separated numbers (whitespace tolerated).
VectorXd parse_vector_csv(const std::string& text);

/// Per-stream seed derived from a base seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace gsr

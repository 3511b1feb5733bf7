#include "gsr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "gsr/analysis.hpp"
#include "gsr/error.hpp"
#include "gsr/estimators.hpp"

namespace gsr {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::NI, "NI"},
    {Method::NaiveNA, "NaiveNA"},
    {Method::PronyUnconstrained, "PronyUnconstrained"},
    {Method::Prony, "Prony"},
    {Method::SDR, "SDR"},
    {Method::MinMaxProny, "MinMaxProny"},
    {Method::MinMaxSDR, "MinMaxSDR"},
    {Method::KRR, "KRR"},
};

constexpr std::pair<ExperimentKind, const char*> kExperimentNames[] = {
    {ExperimentKind::SyntheticDenoise, "SyntheticDenoise"},
    {ExperimentKind::SyntheticInterpolate, "SyntheticInterpolate"},
    {ExperimentKind::DatasetDenoise, "DatasetDenoise"},
    {ExperimentKind::DatasetInterpolate, "DatasetInterpolate"},
};

bool is_interpolation(ExperimentKind k) {
  return k == ExperimentKind::SyntheticInterpolate || k == ExperimentKind::DatasetInterpolate;
}

bool is_synthetic(ExperimentKind k) {
  return k == ExperimentKind::SyntheticDenoise || k == ExperimentKind::SyntheticInterpolate;
}

bool is_minmax(Method m) { return m == Method::MinMaxProny || m == Method::MinMaxSDR; }

bool needs_second_moment(Method m) {
  return m == Method::PronyUnconstrained || m == Method::Prony || m == Method::SDR;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("config: '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("config: '" + key + "' expects a seed, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ParseError("config: '" + key + "' expects true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Runs fn(0..count-1) on up to `threads` workers. Each index writes only its
/// own output slot, so the result does not depend on scheduling. The
/// exception of the lowest failing index is rethrown.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<Index>(threads, std::max<Index>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<Index> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (Index i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Trial NMSE values for every (method, x) cell, reduced in trial order.
class Accumulator {
 public:
  Accumulator(std::vector<Method> methods, std::vector<double> xs, Index trials)
      : methods_(std::move(methods)), xs_(std::move(xs)), trials_(trials) {
    values_.assign(methods_.size() * xs_.size() * trials_, 0.0);
  }
  double& at(std::size_t method, std::size_t x, Index trial) {
    return values_[(method * xs_.size() + x) * trials_ + trial];
  }
  ResultTable reduce() const {
    ResultTable table;
    for (std::size_t m = 0; m < methods_.size(); ++m)
      for (std::size_t x = 0; x < xs_.size(); ++x) {
        const double* v = &values_[(m * xs_.size() + x) * trials_];
        double mean = 0.0;
        for (Index t = 0; t < trials_; ++t) mean += v[t];
        mean /= static_cast<double>(trials_);
        double var = 0.0;
        for (Index t = 0; t < trials_; ++t) var += (v[t] - mean) * (v[t] - mean);
        const double sd = trials_ > 1 ? std::sqrt(var / static_cast<double>(trials_ - 1)) : 0.0;
        table.rows.push_back({method_name(methods_[m]), xs_[x], mean, sd, static_cast<long>(trials_)});
      }
    table.sort();
    return table;
  }

 private:
  std::vector<Method> methods_;
  std::vector<double> xs_;
  Index trials_;
  std::vector<double> values_;
};

/// Weights (or the KRR marker) each method uses for one (graph, SNR) cell.
struct MethodPlan {
  Method method;
  std::optional<NodeWeights> weights;  // empty for KRR and NaiveNA
};

struct DesignInputs {
  const Laplacian* lap;
  double w0;
  std::optional<MatrixXd> second_moment;
  std::optional<SignalBounds> bounds;
  MatrixXd noise_covariance;
};

std::vector<MethodPlan> plan_methods(const ExperimentConfig& cfg, const DesignInputs& in) {
  std::vector<MethodPlan> plans;
  for (Method m : cfg.methods) {
    MethodPlan plan{m, std::nullopt};
    auto base = [&](SignalPrior prior) {
      return DesignProblem{*in.lap, std::move(prior), NoiseModel{in.noise_covariance, 0}, in.w0, {}};
    };
    switch (m) {
      case Method::NI:
        plan.weights = NodeWeights::invariant(in.w0);
        break;
      case Method::NaiveNA:
      case Method::KRR:
        break;
      case Method::PronyUnconstrained:
        plan.weights = design_prony_unconstrained(base(SignalOuterProduct{*in.second_moment}), cfg.sdp).weights();
        break;
      case Method::Prony:
        plan.weights = design_prony(base(SignalOuterProduct{*in.second_moment}), cfg.sdp).weights();
        break;
      case Method::SDR:
        plan.weights = design_sdr(base(SignalOuterProduct{*in.second_moment}), cfg.sdp).weights();
        break;
      case Method::MinMaxProny:
        plan.weights = design_minmax_prony(base(*in.bounds), cfg.sdp).weights();
        break;
      case Method::MinMaxSDR:
        plan.weights = design_minmax_sdr(base(*in.bounds), cfg.sdp).weights();
        break;
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

/// Noise covariance handed to the SDR designs.
MatrixXd design_covariance(const ExperimentConfig& cfg, Index n, double sigma2, std::uint64_t seed) {
  if (!cfg.single_instance_noise) return sigma2 * MatrixXd::Identity(n, n);
  const Observation draw = add_noise(VectorXd::Zero(n), NoiseModel::isotropic(n, sigma2, seed));
  return draw.y * draw.y.transpose();
}

VectorXd naive_weights(double w0, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = std::sqrt(w0) + w0 * unif(rng);
  return w;
}

/// Reconstruction for one method on one observation.
VectorXd reconstruct(const ExperimentConfig& cfg, const Laplacian& lap, const MethodPlan& plan, double w0,
                     const Observation& obs, std::uint64_t trial_seed) {
  if (plan.method == Method::KRR) return solve_krr_diffusion(lap, obs, cfg.krr_sigma2, cfg.krr_mu).estimate;
  const NodeWeights w = plan.method == Method::NaiveNA
                            ? NodeWeights::adaptive(naive_weights(w0, lap.size(), derive_seed(trial_seed, 2)))
                            : *plan.weights;
  if (obs.is_full()) return solve_direct(lap, w, obs).estimate;
  return solve_interpolation(lap, w, obs).estimate;
}

std::vector<Index> mask_for(const ExperimentConfig& cfg, Index n, Index count, std::uint64_t trial_seed,
                            std::uint64_t fixed_seed) {
  if (count == n) {
    std::vector<Index> all(n);
    for (Index i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  return random_mask(n, count, derive_seed(cfg.fixed_mask ? fixed_seed : trial_seed, 1));
}

std::vector<double> interpolation_x(const ExperimentConfig& cfg) {
  std::vector<double> xs;
  for (Index s : cfg.sample_sizes) xs.push_back(static_cast<double>(s));
  return xs;
}

double interpolation_snr(const ExperimentConfig& cfg) {
  return cfg.snr_grid_db.empty() ? 0.0 : cfg.snr_grid_db.front();
}

/// Shared driver of both synthetic experiments. `xs` are the table's x values;
/// for denoising each x is an SNR, for interpolation a sample size.
ResultTable run_synthetic(const ExperimentConfig& cfg, bool interpolate) {
  cfg.validate();
  const std::vector<double> snrs = interpolate ? std::vector<double>{interpolation_snr(cfg)} : cfg.snr_grid_db;
  const std::vector<double> xs = interpolate ? interpolation_x(cfg) : cfg.snr_grid_db;
  const Index trials_per_graph = cfg.n_noise;
  Accumulator acc(cfg.methods, xs, static_cast<Index>(cfg.n_graphs) * trials_per_graph);

  parallel_for(cfg.n_graphs, cfg.threads, [&](Index g) {
    const Laplacian lap(erdos_renyi(cfg.n, cfg.p, cfg.graph_seed + static_cast<std::uint64_t>(g)));
    const VectorXd x = bandlimited_signal(lap, cfg.bandwidth);
    const MatrixXd xx = x * x.transpose();
    for (std::size_t si = 0; si < snrs.size(); ++si) {
      const double snr = snrs[si];
      const double w0 = optimal_w0(lap, snr, cfg.w0_multiplier);
      const double sigma = snr_to_sigma(x, snr);
      const std::uint64_t cell_seed = derive_seed(cfg.graph_seed + static_cast<std::uint64_t>(g), 3 + si);
      const DesignInputs in{&lap, w0, xx, std::nullopt,
                            design_covariance(cfg, lap.size(), sigma * sigma, cell_seed)};
      const std::vector<MethodPlan> plans = plan_methods(cfg, in);
      for (Index j = 0; j < trials_per_graph; ++j) {
        const Index t = g * trials_per_graph + j;
        const std::uint64_t trial_seed = cfg.noise_seed + static_cast<std::uint64_t>(t);
        const Observation noisy = add_noise(x, NoiseModel::isotropic(lap.size(), sigma * sigma, trial_seed));
        const std::size_t n_x = interpolate ? xs.size() : 1;
        for (std::size_t xi = 0; xi < n_x; ++xi) {
          Observation obs = noisy;
          std::size_t column = si;
          if (interpolate) {
            const Index count = cfg.sample_sizes[xi];
            const std::uint64_t fixed = derive_seed(cfg.graph_seed + static_cast<std::uint64_t>(g), 1000 + xi);
            obs = Observation::masked(noisy.y, mask_for(cfg, lap.size(), count, trial_seed, fixed));
            column = xi;
          }
          for (std::size_t m = 0; m < plans.size(); ++m)
            acc.at(m, column, t) = nmse(reconstruct(cfg, lap, plans[m], w0, obs, trial_seed), x);
        }
      }
    }
  });
  return acc.reduce();
}

}  // namespace

std::string method_name(Method m) {
  for (const auto& [k, name] : kMethodNames)
    if (k == m) return name;
  throw DomainError("unknown method");
}

Method parse_method(const std::string& name) {
  for (const auto& [k, n] : kMethodNames)
    if (name == n) return k;
  throw ParseError("unknown method '" + name + "'");
}

std::string experiment_name(ExperimentKind k) {
  for (const auto& [e, name] : kExperimentNames)
    if (e == k) return name;
  throw DomainError("unknown experiment kind");
}

ExperimentKind parse_experiment(const std::string& name) {
  for (const auto& [e, n] : kExperimentNames)
    if (name == n) return e;
  throw ParseError("unknown experiment '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ExperimentConfig::validate() const {
  if (n_graphs < 1 || n_noise < 1) throw DomainError("n_graphs and n_noise must be at least 1");
  if (methods.empty()) throw DomainError("at least one method is required");
  for (std::size_t i = 0; i < methods.size(); ++i)
    for (std::size_t j = i + 1; j < methods.size(); ++j)
      if (methods[i] == methods[j]) throw DomainError("method " + method_name(methods[i]) + " listed twice");
  if (!(w0_multiplier > 0.0)) throw DomainError("w0_multiplier must be positive");
  if (!(krr_sigma2 > 0.0) || !(krr_mu > 0.0)) throw DomainError("krr_sigma2 and krr_mu must be positive");
  if (threads < 0) throw DomainError("threads must be nonnegative");
  if (max_snapshots < 0) throw DomainError("max_snapshots must be nonnegative");
  for (double s : snr_grid_db)
    if (!std::isfinite(s)) throw DomainError("SNR values must be finite");
  sdp.validate();

  if (is_interpolation(experiment)) {
    if (sample_sizes.empty()) throw DomainError("interpolation needs a nonempty sample_sizes list");
    if (snr_grid_db.size() > 1) throw DomainError("interpolation runs at a single SNR; give at most one snr_grid_db value");
    for (Index s : sample_sizes)
      if (s < 1 || (is_synthetic(experiment) && s > n))
        throw DomainError("sample sizes must lie in [1, n]");
  } else if (snr_grid_db.empty()) {
    throw DomainError("denoising needs a nonempty snr_grid_db");
  }

  if (is_synthetic(experiment)) {
    if (n < 2) throw DomainError("n must be at least 2");
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
    if (bandwidth < 1 || bandwidth > n) throw DomainError("bandwidth must lie in [1, n]");
    for (Method m : methods)
      if (is_minmax(m))
        throw DomainError(method_name(m) + " needs signal bounds, which only dataset experiments provide");
  } else {
    if (k < 1) throw DomainError("k must be at least 1");
    if (!(kernel_scale > 0.0)) throw DomainError("kernel_scale must be positive");
    if (dataset_prior == DatasetPrior::Bounds)
      for (Method m : methods)
        if (needs_second_moment(m))
          throw DomainError(method_name(m) + " needs training data; set dataset_prior = training");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") cfg.experiment = parse_experiment(value);
    else if (key == "n") cfg.n = to_integer(key, value);
    else if (key == "p") cfg.p = to_double(key, value);
    else if (key == "k") cfg.k = to_integer(key, value);
    else if (key == "kernel_scale") cfg.kernel_scale = to_double(key, value);
    else if (key == "bandwidth") cfg.bandwidth = to_integer(key, value);
    else if (key == "snr_grid_db") {
      cfg.snr_grid_db.clear();
      for (const auto& v : split_list(value)) cfg.snr_grid_db.push_back(to_double(key, v));
    } else if (key == "sample_sizes") {
      cfg.sample_sizes.clear();
      for (const auto& v : split_list(value)) cfg.sample_sizes.push_back(to_integer(key, v));
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& v : split_list(value)) cfg.methods.push_back(parse_method(v));
    } else if (key == "n_graphs") cfg.n_graphs = static_cast<int>(to_integer(key, value));
    else if (key == "n_noise") cfg.n_noise = static_cast<int>(to_integer(key, value));
    else if (key == "graph_seed") cfg.graph_seed = to_seed(key, value);
    else if (key == "noise_seed") cfg.noise_seed = to_seed(key, value);
    else if (key == "w0_multiplier") cfg.w0_multiplier = to_double(key, value);
    else if (key == "krr_sigma2") cfg.krr_sigma2 = to_double(key, value);
    else if (key == "krr_mu") cfg.krr_mu = to_double(key, value);
    else if (key == "fixed_mask") cfg.fixed_mask = to_bool(key, value);
    else if (key == "single_instance_noise") cfg.single_instance_noise = to_bool(key, value);
    else if (key == "dataset_prior") {
      if (value == "training") cfg.dataset_prior = DatasetPrior::Training;
      else if (value == "bounds") cfg.dataset_prior = DatasetPrior::Bounds;
      else throw ParseError("config: dataset_prior must be training or bounds");
    } else if (key == "max_snapshots") cfg.max_snapshots = to_integer(key, value);
    else if (key == "sdp_tolerance") cfg.sdp.tolerance = to_double(key, value);
    else if (key == "sdp_max_iterations") cfg.sdp.max_iterations = static_cast<int>(to_integer(key, value));
    else if (key == "sdp_backend") {
      if (value == "interior_point") cfg.sdp.backend = SdpSolverConfig::Backend::InteriorPoint;
      else if (value == "first_order") cfg.sdp.backend = SdpSolverConfig::Backend::FirstOrderSplitting;
      else throw ParseError("config: sdp_backend must be interior_point or first_order");
    } else if (key == "sdr_diagonal_cap") cfg.sdp.sdr_diagonal_cap = value == "inf" ? INFINITY : to_double(key, value);
    else if (key == "threads") cfg.threads = static_cast<int>(to_integer(key, value));
    else throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  return parse_config(in);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto join = [](const auto& values, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + fmt(values[i]);
    return s;
  };
  out << "experiment = " << experiment_name(cfg.experiment) << "\n"
      << "n = " << cfg.n << "\n"
      << "p = " << format_double(cfg.p) << "\n"
      << "k = " << cfg.k << "\n"
      << "kernel_scale = " << format_double(cfg.kernel_scale) << "\n"
      << "bandwidth = " << cfg.bandwidth << "\n"
      << "snr_grid_db = " << join(cfg.snr_grid_db, format_double) << "\n"
      << "sample_sizes = " << join(cfg.sample_sizes, [](Index v) { return std::to_string(v); }) << "\n"
      << "methods = " << join(cfg.methods, method_name) << "\n"
      << "n_graphs = " << cfg.n_graphs << "\n"
      << "n_noise = " << cfg.n_noise << "\n"
      << "graph_seed = " << cfg.graph_seed << "\n"
      << "noise_seed = " << cfg.noise_seed << "\n"
      << "w0_multiplier = " << format_double(cfg.w0_multiplier) << "\n"
      << "krr_sigma2 = " << format_double(cfg.krr_sigma2) << "\n"
      << "krr_mu = " << format_double(cfg.krr_mu) << "\n"
      << "fixed_mask = " << (cfg.fixed_mask ? "true" : "false") << "\n"
      << "single_instance_noise = " << (cfg.single_instance_noise ? "true" : "false") << "\n"
      << "dataset_prior = " << (cfg.dataset_prior == DatasetPrior::Training ? "training" : "bounds") << "\n"
      << "max_snapshots = " << cfg.max_snapshots << "\n"
      << "sdp_tolerance = " << format_double(cfg.sdp.tolerance) << "\n"
      << "sdp_max_iterations = " << cfg.sdp.max_iterations << "\n"
      << "sdp_backend = "
      << (cfg.sdp.backend == SdpSolverConfig::Backend::InteriorPoint ? "interior_point" : "first_order") << "\n"
      << "sdr_diagonal_cap = "
      << (std::isfinite(cfg.sdp.sdr_diagonal_cap) ? format_double(cfg.sdp.sdr_diagonal_cap) : "inf") << "\n"
      << "threads = " << cfg.threads << "\n";
  return out.str();
}

void ResultTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.method != b.method) return a.method < b.method;
    return a.x_value < b.x_value;
  });
}

const ResultRow& ResultTable::at(const std::string& method, double x_value) const {
  for (const auto& r : rows)
    if (r.method == method && r.x_value == x_value) return r;
  throw DomainError("no result row for " + method + " at x = " + format_double(x_value));
}

void emit_csv(const ResultTable& table, std::ostream& out) {
  ResultTable sorted = table;
  sorted.sort();
  out << "method,x_value,mean_nmse,std_nmse,n_trials\n";
  for (const auto& r : sorted.rows)
    out << r.method << ',' << format_double(r.x_value) << ',' << format_double(r.mean_nmse) << ','
        << format_double(r.std_nmse) << ',' << r.n_trials << '\n';
}

void emit_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  emit_csv(table, out);
  if (!out) throw Error("write failed for " + path);
}

ResultTable parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "method,x_value,mean_nmse,std_nmse,n_trials")
    throw ParseError("result CSV: missing or wrong header");
  ResultTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 5) throw ParseError("result CSV line " + std::to_string(line_no) + ": expected 5 fields");
    ResultRow r;
    r.method = cells[0];
    r.x_value = to_double("x_value", cells[1]);
    r.mean_nmse = to_double("mean_nmse", cells[2]);
    r.std_nmse = to_double("std_nmse", cells[3]);
    r.n_trials = static_cast<long>(to_integer("n_trials", cells[4]));
    table.rows.push_back(std::move(r));
  }
  return table;
}

ResultTable parse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_csv(in);
}

ResultTable run_synthetic_denoise(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::SyntheticDenoise) throw DomainError("config is not a SyntheticDenoise experiment");
  return run_synthetic(cfg, false);
}

ResultTable run_synthetic_interpolate(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::SyntheticInterpolate)
    throw DomainError("config is not a SyntheticInterpolate experiment");
  return run_synthetic(cfg, true);
}

ResultTable run_dataset(const ExperimentConfig& cfg, const std::string& data_path) {
  cfg.validate();
  if (is_synthetic(cfg.experiment)) throw DomainError("config is not a dataset experiment");
  const bool interpolate = cfg.experiment == ExperimentKind::DatasetInterpolate;
  const StationDataset data = load_station_csv_file(data_path, cfg.k, cfg.kernel_scale);
  const Laplacian lap(data.graph);
  const Index n = lap.size();
  const Index total = static_cast<Index>(data.snapshots.size());
  if (total < 2) throw DomainError("dataset needs at least two snapshots");
  for (Index s : cfg.sample_sizes)
    if (s > n) throw DomainError("sample size exceeds the number of stations");

  // Training half (for second-moment priors) and evaluation snapshots.
  const bool training = cfg.dataset_prior == DatasetPrior::Training;
  const Index train_end = training ? total / 2 : 0;
  std::vector<Index> eval;
  for (Index t = train_end; t < total; ++t) eval.push_back(t);
  if (cfg.max_snapshots > 0 && static_cast<Index>(eval.size()) > cfg.max_snapshots) eval.resize(cfg.max_snapshots);

  std::optional<MatrixXd> second_moment;
  if (training) {
    MatrixXd x2 = MatrixXd::Zero(n, n);
    for (Index t = 0; t < train_end; ++t) x2.noalias() += data.snapshots[t] * data.snapshots[t].transpose();
    second_moment = x2 / static_cast<double>(train_end);
  }
  VectorXd lower = data.snapshots.front(), upper = data.snapshots.front();
  for (const auto& x : data.snapshots) {
    lower = lower.cwiseMin(x);
    upper = upper.cwiseMax(x);
  }
  const SignalBounds bounds(lower, upper);

  // One noise level per SNR from the mean snapshot energy over the evaluation set.
  double energy = 0.0;
  for (Index t : eval) energy += data.snapshots[t].squaredNorm();
  energy /= static_cast<double>(eval.size());

  const std::vector<double> snrs = interpolate ? std::vector<double>{interpolation_snr(cfg)} : cfg.snr_grid_db;
  const std::vector<double> xs = interpolate ? interpolation_x(cfg) : cfg.snr_grid_db;
  const Index trials = static_cast<Index>(eval.size()) * cfg.n_noise;
  Accumulator acc(cfg.methods, xs, trials);

  for (std::size_t si = 0; si < snrs.size(); ++si) {
    const double snr = snrs[si];
    const double sigma2 = energy / (static_cast<double>(n) * std::pow(10.0, snr / 10.0));
    const double w0 = optimal_w0(lap, snr, cfg.w0_multiplier);
    const DesignInputs in{&lap, w0, second_moment, bounds,
                          design_covariance(cfg, n, sigma2, derive_seed(cfg.graph_seed, 3 + si))};
    const std::vector<MethodPlan> plans = plan_methods(cfg, in);
    parallel_for(static_cast<Index>(eval.size()), cfg.threads, [&](Index e) {
      const VectorXd& x = data.snapshots[eval[e]];
      for (Index j = 0; j < cfg.n_noise; ++j) {
        const Index t = e * cfg.n_noise + j;
        const std::uint64_t trial_seed = cfg.noise_seed + static_cast<std::uint64_t>(t);
        const Observation noisy = add_noise(x, NoiseModel::isotropic(n, sigma2, trial_seed));
        const std::size_t n_x = interpolate ? xs.size() : 1;
        for (std::size_t xi = 0; xi < n_x; ++xi) {
          Observation obs = noisy;
          std::size_t column = si;
          if (interpolate) {
            obs = Observation::masked(noisy.y, mask_for(cfg, n, cfg.sample_sizes[xi], trial_seed,
                                                        derive_seed(cfg.graph_seed, 1000 + xi)));
            column = xi;
          }
          for (std::size_t m = 0; m < plans.size(); ++m)
            acc.at(m, column, t) = nmse(reconstruct(cfg, lap, plans[m], w0, obs, trial_seed), x);
        }
      }
    });
  }
  return acc.reduce();
}

VectorXd parse_vector_csv(const std::string& text) {
  const auto items = split_list(text);
  VectorXd v(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Index>(i)) = to_double("vector", items[i]);
  return v;
}

DesignProblem parse_design_prior(std::istream& in, const Laplacian& lap) {
  const Index n = lap.size();
  std::optional<VectorXd> x, lower, upper;
  std::optional<MatrixXd> second_moment;
  std::optional<double> sigma2, w0, snr_db;
  std::vector<VectorXd> candidates;
  auto sized = [&](const std::string& key, VectorXd v) {
    if (v.size() != n) throw DimensionError("prior: '" + key + "' has " + std::to_string(v.size()) +
                                            " entries, graph has " + std::to_string(n) + " nodes");
    return v;
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("prior line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "x") x = sized(key, parse_vector_csv(value));
    else if (key == "lower") lower = sized(key, parse_vector_csv(value));
    else if (key == "upper") upper = sized(key, parse_vector_csv(value));
    else if (key == "candidate") candidates.push_back(sized(key, parse_vector_csv(value)));
    else if (key == "second_moment") {
      const VectorXd flat = parse_vector_csv(value);
      if (flat.size() != n * n) throw DimensionError("prior: second_moment needs n*n values");
      second_moment = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          flat.data(), n, n);
    } else if (key == "sigma2") sigma2 = to_double(key, value);
    else if (key == "w0_star") w0 = to_double(key, value);
    else if (key == "snr_db") snr_db = to_double(key, value);
    else throw ParseError("prior line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  const int kinds = (x ? 1 : 0) + (second_moment ? 1 : 0) + ((lower || upper) ? 1 : 0);
  if (kinds != 1) throw ParseError("prior: give exactly one of x, second_moment or lower/upper");
  if ((lower.has_value()) != (upper.has_value())) throw ParseError("prior: lower and upper go together");
  if (w0 && snr_db) throw ParseError("prior: give w0_star or snr_db, not both");

  SignalPrior prior = x ? SignalPrior(ExactSignal{*x})
                        : second_moment ? SignalPrior(SignalOuterProduct{*second_moment})
                                        : SignalPrior(SignalBounds(*lower, *upper));
  std::optional<NoiseModel> noise;
  if (sigma2) noise = NoiseModel::isotropic(n, *sigma2);
  const double floor = w0 ? *w0 : snr_db ? optimal_w0(lap, *snr_db) : 0.0;
  DesignProblem problem{lap, std::move(prior), std::move(noise), floor, std::move(candidates)};
  problem.validate();
  return problem;
}

DesignProblem parse_design_prior_file(const std::string& path, const Laplacian& lap) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open prior file " + path);
  return parse_design_prior(in, lap);
}

ResultTable run_experiment(const ExperimentConfig& cfg, const std::string& data_path) {
  switch (cfg.experiment) {
    case ExperimentKind::SyntheticDenoise:
      return run_synthetic_denoise(cfg);
    case ExperimentKind::SyntheticInterpolate:
      return run_synthetic_interpolate(cfg);
    case ExperimentKind::DatasetDenoise:
    case ExperimentKind::DatasetInterpolate:
      if (data_path.empty()) throw DomainError("dataset experiments need a data path");
      return run_dataset(cfg, data_path);
  }
  throw DomainError("unknown experiment kind");
}

}  // namespace gsr

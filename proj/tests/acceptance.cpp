// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset. Exit status is the number of failures.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "gsr/analysis.hpp"
#include "gsr/design.hpp"
#include "gsr/estimators.hpp"
#include "gsr/experiment.hpp"
#include "support.hpp"

using namespace gsr;
using namespace gsr::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double spectral_norm_of_shift(const Laplacian& lap, const VectorXd& w) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(shift_operator(lap, NodeWeights::adaptive(w)).matrix,
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// S(w) is quadratic in w, so scaling w by sqrt(target / ||S||) hits the target norm.
VectorXd scale_to_norm(const Laplacian& lap, const VectorXd& w, double target) {
  return w * std::sqrt(target / spectral_norm_of_shift(lap, w));
}

Outcome lemma1_suite() {
  std::mt19937_64 rng(11);
  int ok = 0;
  for (int t = 0; t < 200; ++t) {
    const TheoryInstance inst = lemma1_instance(rng);
    const bool lemma = check_lemma1(inst.w0, inst.w);
    const double na = decompose_error(inst.lap, NodeWeights::adaptive(inst.w), inst.x, inst.noise()).variance;
    const double ni = decompose_error(inst.lap, NodeWeights::invariant(inst.w0), inst.x, inst.noise()).variance;
    if (lemma && na <= ni + 1e-10) ++ok;
  }
  return {ok == 200, std::to_string(ok) + "/200 variance reductions"};
}

Outcome theorem1_suite() {
  std::mt19937_64 rng(12);
  int mse_ok = 0, implication_bad = 0;
  auto implication_holds = [](const TheoryInstance& inst, const TheoremQuantities& tq) {
    const bool premise = check_corollary1(inst.w, tq) && check_lemma1(inst.w0, inst.w);
    return !premise || check_theorem1(inst.w0, inst.w, tq);
  };
  for (int t = 0; t < 200; ++t) {
    const TheoryInstance inst = corollary1_instance(rng);
    const TheoremQuantities tq = theorem_quantities(inst.lap, inst.x, inst.noise());
    const bool premise = check_corollary1(inst.w, tq) && check_lemma1(inst.w0, inst.w);
    const double na = decompose_error(inst.lap, NodeWeights::adaptive(inst.w), inst.x, inst.noise()).mse;
    const double ni = decompose_error(inst.lap, NodeWeights::invariant(inst.w0), inst.x, inst.noise()).mse;
    if (premise && na <= ni + 1e-10) ++mse_ok;
    if (!implication_holds(inst, tq)) ++implication_bad;
  }
  // The implication is also checked on draws outside the corollary regime.
  for (int t = 0; t < 200; ++t) {
    const TheoryInstance inst = lemma1_instance(rng);
    if (!implication_holds(inst, theorem_quantities(inst.lap, inst.x, inst.noise()))) ++implication_bad;
  }
  return {mse_ok == 200 && implication_bad == 0, std::to_string(mse_ok) + "/200 mse reductions, " +
                                                     std::to_string(implication_bad) + "/400 implication failures"};
}

Outcome monte_carlo() {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Laplacian lap(erdos_renyi(20, std::uniform_real_distribution<double>(0.2, 0.6)(rng), rng()));
    const Index n = lap.size();
    const VectorXd x = bandlimited_signal(lap, 5);
    const double sigma2 = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const NodeWeights w = NodeWeights::adaptive(random_vector(n, rng, 0.2, 1.2));
    const double analytic = decompose_error(lap, w, x, NoiseModel::isotropic(n, sigma2)).mse;
    const MatrixXd h = filter_matrix(lap, w);
    const std::uint64_t base = rng();
    double acc = 0.0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
      const Observation obs = add_noise(x, NoiseModel::isotropic(n, sigma2, base + d));
      acc += (h * obs.y - x).squaredNorm();
    }
    worst = std::max(worst, std::abs(acc / draws - analytic) / analytic);
  }
  return {worst <= 0.03, "worst relative gap " + fmt(worst)};
}

Outcome solver_agreement() {
  std::mt19937_64 rng(14);
  double worst = 0.0;
  int cg_ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Laplacian lap(erdos_renyi(30, std::uniform_real_distribution<double>(0.15, 0.6)(rng), rng()));
    const Index n = lap.size();
    const double target = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
    const NodeWeights w = NodeWeights::adaptive(scale_to_norm(lap, random_vector(n, rng, -1.0, 1.0), target));
    const Observation obs = Observation::full(random_vector(n, rng));
    SolveOptions cg;
    cg.cg_tolerance = 1e-12;
    SolveOptions dist;
    dist.max_iterations = 500;
    const VectorXd a = solve_direct(lap, w, obs).estimate;
    const SolveReport b = solve_cg(lap, w, obs, cg);
    const VectorXd c = solve_distributed(lap, w, obs, dist).estimate;
    worst = std::max({worst, rel_diff(a, b.estimate), rel_diff(a, c), rel_diff(b.estimate, c)});
    SolveOptions bound;
    bound.cg_tolerance = 1e-10;
    if (solve_cg(lap, w, obs, bound).iterations_used <= n) ++cg_ok;
  }
  return {worst <= 1e-6 && cg_ok == 20,
          "worst pairwise gap " + fmt(worst) + ", CG within n steps on " + std::to_string(cg_ok) + "/20"};
}

Outcome distributed_rate() {
  std::mt19937_64 rng(15);
  const Laplacian lap(erdos_renyi(30, 0.3, rng()));
  const Index n = lap.size();
  const NodeWeights w = NodeWeights::adaptive(scale_to_norm(lap, random_vector(n, rng, 0.5, 1.5), 0.5));
  const Observation obs = Observation::full(random_vector(n, rng));
  const VectorXd exact = solve_direct(lap, w, obs).estimate;
  auto error_after = [&](int steps) {
    SolveOptions opts;
    opts.max_iterations = steps;
    return (solve_distributed(lap, w, obs, opts).estimate - exact).norm();
  };
  const double ratio = error_after(20) / error_after(10);
  return {ratio <= std::pow(2.0, -10) * 1.1, "e20/e10 = " + fmt(ratio) + " vs " + fmt(std::pow(2.0, -10) * 1.1)};
}

Outcome sdp_oracle() {
  double worst_sdp = -INFINITY, worst_extract = -INFINITY, worst_sdr = -INFINITY;
  for (int inst = 0; inst < 10; ++inst) {
    std::mt19937_64 rng(100 + inst);
    const Laplacian lap(erdos_renyi(4, 0.6, rng()));
    const VectorXd x = random_vector(4, rng);
    const double s = snr_to_sigma(x, 0.0);
    const NoiseModel noise = NoiseModel::isotropic(4, s * s);
    const double w0 = optimal_w0(lap, 0.0);
    const MatrixXd xx = x * x.transpose();

    std::vector<double> grid;
    for (double v = std::sqrt(w0); v <= 2.0 + 1e-12; v += 0.05) grid.push_back(v);
    double grid_prony = INFINITY, grid_mse = INFINITY;
    VectorXd w(4);
    for (double a : grid)
      for (double b : grid)
        for (double c : grid)
          for (double d : grid) {
            w << a, b, c, d;
            grid_prony = std::min(grid_prony, prony_cost(w * w.transpose(), lap, xx));
            grid_mse = std::min(grid_mse, decompose_error(lap, NodeWeights::adaptive(w), x, noise).mse);
          }

    const DesignProblem problem{lap, ExactSignal{x}, noise, w0, {}};
    const DesignResult prony = design_prony(problem);
    const DesignResult sdr = design_sdr(problem);
    const double extracted = prony_cost(prony.omega * prony.omega.transpose(), lap, xx);
    const double sdr_mse = decompose_error(lap, sdr.weights(), x, noise).mse;
    worst_sdp = std::max(worst_sdp, prony.objective_value - grid_prony);
    worst_extract = std::max(worst_extract, (extracted - grid_prony) / grid_prony);
    worst_sdr = std::max(worst_sdr, (sdr_mse - grid_mse) / grid_mse);
  }
  return {worst_sdp <= 0.0 && worst_extract <= 0.05 && worst_sdr <= 0.05,
          "max(SDP - grid) = " + fmt(worst_sdp) + ", extraction gap " + fmt(worst_extract) + ", SDR mse gap " +
              fmt(worst_sdr)};
}

ExperimentConfig fig2_config() {
  ExperimentConfig cfg;
  cfg.n = 50;
  cfg.p = 0.5;
  cfg.bandwidth = 20;
  cfg.n_graphs = 10;
  cfg.n_noise = 20;
  return cfg;
}

Outcome fig2_trend() {
  ExperimentConfig cfg = fig2_config();
  cfg.snr_grid_db = {-10.0, -5.0, 0.0};
  cfg.methods = {Method::NI, Method::Prony, Method::SDR};
  const ResultTable t = run_experiment(cfg);
  bool ok = true;
  std::string detail;
  for (double snr : cfg.snr_grid_db) {
    const double ni = t.at("NI", snr).mean_nmse, prony = t.at("Prony", snr).mean_nmse,
                 sdr = t.at("SDR", snr).mean_nmse;
    ok = ok && sdr <= 0.5 * ni && prony <= ni;
    detail += (detail.empty() ? "" : "; ") + fmt(snr) + " dB NI " + fmt(ni) + " Prony " + fmt(prony) + " SDR " +
              fmt(sdr);
  }
  return {ok, detail};
}

Outcome fig3_trend() {
  ExperimentConfig cfg = fig2_config();
  cfg.experiment = ExperimentKind::SyntheticInterpolate;
  cfg.snr_grid_db = {0.0};
  cfg.sample_sizes = {10, 30, 50};
  cfg.methods = {Method::NI, Method::Prony};
  const ResultTable t = run_experiment(cfg);
  bool ok = true;
  std::string detail;
  for (Index m : cfg.sample_sizes) {
    const double ni = t.at("NI", m).mean_nmse, prony = t.at("Prony", m).mean_nmse;
    ok = ok && prony <= ni;
    detail += (detail.empty() ? "" : "; ") + std::string("|M|=") + std::to_string(m) + " NI " + fmt(ni) +
              " Prony " + fmt(prony);
  }
  return {ok, detail};
}

Outcome reduction_identity() {
  std::mt19937_64 rng(19);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Laplacian lap(random_er(rng, 5, 30));
    const Index n = lap.size();
    const double w0 = std::uniform_real_distribution<double>(0.01, 0.9)(rng) / lap.lambda_max();
    const NodeWeights inv = NodeWeights::invariant(w0);
    const NodeWeights ad = NodeWeights::adaptive(VectorXd::Constant(n, std::sqrt(w0)));
    const Observation obs = Observation::full(random_vector(n, rng));
    SolveOptions opts;
    opts.cg_tolerance = 1e-12;
    opts.max_iterations = 500;
    for (SolveMethod m : {SolveMethod::Direct, SolveMethod::ConjugateGradient, SolveMethod::Distributed}) {
      opts.method = m;
      worst = std::max(worst, rel_diff(solve(lap, inv, obs, opts).estimate, solve(lap, ad, obs, opts).estimate));
    }
  }
  return {worst <= 1e-12, "worst relative gap " + fmt(worst)};
}

Outcome recover_round_trip() {
  std::mt19937_64 rng(20);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Laplacian lap(random_er(rng, 5, 15));
    const Index n = lap.size();
    MatrixXd omega = MatrixXd::Zero(n, n);
    for (const Edge& e : lap.graph().edges()) omega(e.i, e.j) = omega(e.j, e.i) = random_vector(1, rng)(0);
    omega.diagonal() = omega.cwiseAbs().rowwise().sum() + random_vector(n, rng, 0.1, 1.0);
    const MatrixXd h = (MatrixXd::Identity(n, n) + omega.cwiseProduct(lap.matrix())).inverse();
    worst = std::max(worst, rel_diff(recover_omega(h, lap, {}, OmegaSupport::GraphEdges).Omega, omega));
  }
  return {worst <= 1e-6, "worst Frobenius relative error " + fmt(worst)};
}

Outcome appendix_oracles() {
  std::mt19937_64 rng(21);
  int trace_bad = 0, sign_bad = 0, hadamard_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const Index n = std::uniform_int_distribution<Index>(2, 12)(rng);
    const MatrixXd a = random_symmetric(n, rng), b = random_symmetric(n, rng), c = random_symmetric(n, rng);
    const double lhs = ((a * a - b * b) * c).trace(), rhs = ((a - b) * (a + b) * c).trace();
    if (std::abs(lhs - rhs) > 1e-8 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) ++trace_bad;
  }
  for (int t = 0; t < 100; ++t) {
    const Index n = std::uniform_int_distribution<Index>(2, 12)(rng);
    const MatrixXd p = random_psd(n, rng, std::uniform_int_distribution<Index>(1, n)(rng));
    const MatrixXd q = -random_psd(n, rng, std::uniform_int_distribution<Index>(1, n)(rng));
    if ((p * q).trace() > 1e-10) ++sign_bad;
  }
  for (int t = 0; t < 100; ++t) {
    const Laplacian lap(random_er(rng, 4, 25));
    const VectorXd w = random_vector(lap.size(), rng, -2.0, 2.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(shift_operator(lap, NodeWeights::adaptive(w)).matrix);
    const double smax = es.eigenvalues().maxCoeff();
    const bool psd = es.eigenvalues().minCoeff() >= -1e-10 * std::max(smax, 1.0);
    if (!psd || smax > lap.lambda_max() * w.cwiseAbs2().maxCoeff() * (1.0 + 1e-8)) ++hadamard_bad;
  }
  return {trace_bad + sign_bad + hadamard_bad == 0,
          "violations: trace identity " + std::to_string(trace_bad) + ", trace sign " + std::to_string(sign_bad) +
              ", Hadamard bound " + std::to_string(hadamard_bad)};
}

std::string csv_of(const ExperimentConfig& cfg, const std::string& data = {}) {
  std::ostringstream out;
  emit_csv(run_experiment(cfg, data), out);
  return out.str();
}

Outcome determinism() {
  std::vector<std::pair<ExperimentConfig, std::string>> runs;
  ExperimentConfig denoise;
  denoise.n = 20;
  denoise.bandwidth = 8;
  denoise.snr_grid_db = {-10.0, 0.0};
  denoise.methods = {Method::NI, Method::NaiveNA, Method::PronyUnconstrained, Method::Prony, Method::SDR,
                     Method::KRR};
  denoise.n_graphs = 2;
  denoise.n_noise = 5;
  runs.emplace_back(denoise, "");
  ExperimentConfig interp = denoise;
  interp.experiment = ExperimentKind::SyntheticInterpolate;
  interp.snr_grid_db = {0.0};
  interp.sample_sizes = {5, 12, 20};
  interp.methods = {Method::NI, Method::Prony, Method::KRR};
  runs.emplace_back(interp, "");
  ExperimentConfig dataset;
  dataset.experiment = ExperimentKind::DatasetDenoise;
  dataset.k = 5;
  dataset.kernel_scale = 0.05;
  dataset.snr_grid_db = {0.0};
  dataset.dataset_prior = DatasetPrior::Bounds;
  dataset.methods = {Method::NI, Method::MinMaxProny, Method::KRR};
  dataset.max_snapshots = 10;
  runs.emplace_back(dataset, std::string(GSR_DATA_DIR) + "/molene_like.csv");

  int identical = 0;
  for (const auto& [cfg, data] : runs)
    if (csv_of(cfg, data) == csv_of(cfg, data)) ++identical;
  return {identical == static_cast<int>(runs.size()),
          std::to_string(identical) + "/" + std::to_string(runs.size()) + " configs bitwise identical"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double time_limit = INFINITY;  // seconds
  };
  const std::vector<Criterion> criteria = {
      {"Lemma 1 variance property", lemma1_suite, 10.0},
      {"Theorem 1 / Corollary 1 property", theorem1_suite},
      {"Monte-Carlo mse consistency", monte_carlo},
      {"solver agreement", solver_agreement},
      {"distributed geometric convergence", distributed_rate},
      {"SDP oracle equivalence", sdp_oracle, 300.0},
      {"denoising trend over SNR", fig2_trend, 1800.0},
      {"interpolation trend over sample size", fig3_trend},
      {"invariant reduction identity", reduction_identity},
      {"recover_omega round trip", recover_round_trip},
      {"appendix trace and Hadamard oracles", appendix_oracles},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > criteria[i].time_limit) {
      o.pass = false;
      o.detail += ", over the " + fmt(criteria[i].time_limit) + " s budget";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].name << ": " << o.detail << " ("
              << fmt(secs) << " s)" << std::endl;
  }
  return failures;
}

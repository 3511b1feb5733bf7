#include <doctest.h>

#include <sstream>
#include <variant>

#include "gsr/error.hpp"
#include "gsr/experiment.hpp"
#include "support.hpp"

using namespace gsr;
using namespace gsr::testing;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig small_denoise() {
  ExperimentConfig cfg;
  cfg.n = 20;
  cfg.p = 0.5;
  cfg.bandwidth = 5;
  cfg.snr_grid_db = {0.0};
  cfg.methods = {Method::NI};
  cfg.n_graphs = 2;
  cfg.n_noise = 5;
  cfg.threads = 1;
  return cfg;
}

std::string data_file(const char* name) { return std::string(GSR_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse(
      "# fig 2\n"
      "experiment = SyntheticDenoise\n"
      "n = 30   # nodes\n"
      "p = 0.4\n"
      "bandwidth = 10\n"
      "snr_grid_db = -10, -5, 0\n"
      "methods = NI, Prony, SDR\n"
      "n_graphs = 3\n"
      "noise_seed = 77\n"
      "sdr_diagonal_cap = inf\n"
      "fixed_mask = true\n");
  CHECK(cfg.n == 30);
  CHECK(cfg.p == 0.4);
  CHECK(cfg.bandwidth == 10);
  CHECK(cfg.snr_grid_db == std::vector<double>{-10, -5, 0});
  CHECK(cfg.methods == std::vector<Method>{Method::NI, Method::Prony, Method::SDR});
  CHECK(cfg.n_graphs == 3);
  CHECK(cfg.n_noise == 1);
  CHECK(cfg.noise_seed == 77);
  CHECK(std::isinf(cfg.sdp.sdr_diagonal_cap));
  CHECK(cfg.fixed_mask);
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("format round trip") {
    const ExperimentConfig back = parse(format_config(cfg));
    CHECK(format_config(back) == format_config(cfg));
    CHECK(back.methods == cfg.methods);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(parse("colour = blue\n"), ParseError);
    CHECK_THROWS_AS(parse("n = 3.5\n"), ParseError);
    CHECK_THROWS_AS(parse("p = abc\n"), ParseError);
    CHECK_THROWS_AS(parse("methods = NI, Magic\n"), ParseError);
    CHECK_THROWS_AS(parse("experiment = Denoise\n"), ParseError);
    CHECK_THROWS_AS(parse("just words\n"), ParseError);
    CHECK_THROWS_AS(parse("fixed_mask = maybe\n"), ParseError);
  }
  SUBCASE("validation") {
    ExperimentConfig bad = cfg;
    bad.methods = {Method::NI, Method::NI};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.methods = {Method::MinMaxProny};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.bandwidth = 31;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.snr_grid_db.clear();
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.experiment = ExperimentKind::SyntheticInterpolate;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad.sample_sizes = {5, 31};
    bad.snr_grid_db = {0.0};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad.sample_sizes = {5, 30};
    CHECK_NOTHROW(bad.validate());
  }
}

TEST_CASE("method and experiment names") {
  for (Method m : {Method::NI, Method::NaiveNA, Method::PronyUnconstrained, Method::Prony, Method::SDR,
                   Method::MinMaxProny, Method::MinMaxSDR, Method::KRR})
    CHECK(parse_method(method_name(m)) == m);
  for (ExperimentKind k : {ExperimentKind::SyntheticDenoise, ExperimentKind::SyntheticInterpolate,
                           ExperimentKind::DatasetDenoise, ExperimentKind::DatasetInterpolate})
    CHECK(parse_experiment(experiment_name(k)) == k);
}

TEST_CASE("derive_seed") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("result csv") {
  SUBCASE("empty table is a header") {
    std::ostringstream out;
    emit_csv(ResultTable{}, out);
    CHECK(out.str() == "method,x_value,mean_nmse,std_nmse,n_trials\n");
  }
  SUBCASE("round trip and ordering") {
    ResultTable t;
    for (const char* m : {"SDR", "NI"})
      for (double x : {0.0, -10.0, -5.0}) t.rows.push_back({m, x, 0.125 * (x + 11.0), 1e-3 / 3.0, 200});
    std::ostringstream out;
    emit_csv(t, out);
    std::istringstream in(out.str());
    const ResultTable back = parse_csv(in);
    REQUIRE(back.rows.size() == 6);
    CHECK(back.rows.front().method == "NI");
    CHECK(back.rows.front().x_value == -10.0);
    t.sort();
    CHECK(back.rows == t.rows);
    CHECK(back.at("SDR", -5.0).mean_nmse == 0.75);
    CHECK_THROWS_AS(back.at("SDR", 3.0), DomainError);
  }
  SUBCASE("bad input") {
    std::istringstream wrong_header("m,x\n");
    CHECK_THROWS_AS(parse_csv(wrong_header), ParseError);
    std::istringstream short_row("method,x_value,mean_nmse,std_nmse,n_trials\nNI,0,1\n");
    CHECK_THROWS_AS(parse_csv(short_row), ParseError);
  }
}

TEST_CASE("synthetic denoising") {
  SUBCASE("high SNR is nearly noiseless") {
    ExperimentConfig cfg = small_denoise();
    cfg.snr_grid_db = {60.0};
    const ResultTable t = run_experiment(cfg);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].n_trials == 10);
    CHECK(t.rows[0].mean_nmse <= 1e-3);
  }
  SUBCASE("one row per method and SNR") {
    ExperimentConfig cfg = small_denoise();
    cfg.snr_grid_db = {-5.0, 0.0, 5.0};
    cfg.methods = {Method::NI, Method::NaiveNA};
    const ResultTable t = run_experiment(cfg);
    CHECK(t.rows.size() == 6);
    for (const auto& r : t.rows) {
      CHECK(r.n_trials == 10);
      CHECK(r.mean_nmse > 0.0);
      CHECK(r.std_nmse >= 0.0);
    }
    // Noise dominates more as the SNR falls.
    CHECK(t.at("NI", -5.0).mean_nmse > t.at("NI", 5.0).mean_nmse);
  }
  SUBCASE("Prony improves on NI at 0 dB") {
    ExperimentConfig cfg = small_denoise();
    cfg.methods = {Method::NI, Method::Prony};
    const ResultTable t = run_experiment(cfg);
    CHECK(t.at("Prony", 0.0).mean_nmse < t.at("NI", 0.0).mean_nmse);
  }
  SUBCASE("deterministic and independent of method order and threads") {
    ExperimentConfig cfg = small_denoise();
    cfg.methods = {Method::NI, Method::NaiveNA, Method::KRR};
    const ResultTable a = run_experiment(cfg);
    CHECK(run_experiment(cfg).rows == a.rows);
    ExperimentConfig reordered = cfg;
    reordered.methods = {Method::KRR, Method::NI, Method::NaiveNA};
    reordered.threads = 2;
    ResultTable b = run_experiment(reordered);
    b.sort();
    ResultTable sorted = a;
    sorted.sort();
    CHECK(b.rows == sorted.rows);
    ExperimentConfig other = cfg;
    other.noise_seed += 1;
    CHECK(run_experiment(other).rows != a.rows);
  }
}

TEST_CASE("synthetic interpolation") {
  ExperimentConfig cfg = small_denoise();
  cfg.experiment = ExperimentKind::SyntheticInterpolate;
  cfg.sample_sizes = {6, 10, 14, 20};
  cfg.methods = {Method::NI, Method::KRR};
  cfg.n_noise = 10;
  const ResultTable t = run_experiment(cfg);
  CHECK(t.rows.size() == 8);

  SUBCASE("NI error shrinks with more samples") {
    for (std::size_t i = 1; i < cfg.sample_sizes.size(); ++i)
      CHECK(t.at("NI", cfg.sample_sizes[i]).mean_nmse <= 1.05 * t.at("NI", cfg.sample_sizes[i - 1]).mean_nmse);
  }
  SUBCASE("observing every node matches denoising") {
    ExperimentConfig d = small_denoise();
    d.n_noise = cfg.n_noise;
    const ResultTable full = run_experiment(d);
    CHECK(t.at("NI", 20).mean_nmse == doctest::Approx(full.at("NI", 0.0).mean_nmse).epsilon(1e-12));
  }
  SUBCASE("fixed masks stay deterministic") {
    ExperimentConfig f = cfg;
    f.fixed_mask = true;
    CHECK(run_experiment(f).rows == run_experiment(f).rows);
  }
}

TEST_CASE("dataset experiments") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::DatasetDenoise;
  cfg.k = 5;
  cfg.kernel_scale = 0.05;
  cfg.snr_grid_db = {0.0};
  cfg.methods = {Method::NI, Method::Prony};
  cfg.max_snapshots = 8;
  cfg.n_noise = 2;
  cfg.threads = 1;

  SUBCASE("training prior") {
    const ResultTable t = run_experiment(cfg, data_file("molene_like.csv"));
    REQUIRE(t.rows.size() == 2);
    for (const auto& r : t.rows) {
      CHECK(r.n_trials == 16);
      CHECK(std::isfinite(r.mean_nmse));
    }
  }
  SUBCASE("bounds prior feeds the min-max designs") {
    cfg.dataset_prior = DatasetPrior::Bounds;
    cfg.methods = {Method::NI, Method::MinMaxProny};
    const ResultTable t = run_experiment(cfg, data_file("molene_like.csv"));
    CHECK(t.rows.size() == 2);
    cfg.methods = {Method::Prony};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
  }
  SUBCASE("interpolation over sample sizes") {
    cfg.experiment = ExperimentKind::DatasetInterpolate;
    cfg.methods = {Method::NI, Method::KRR};
    cfg.sample_sizes = {10, 20};
    const ResultTable t = run_experiment(cfg, data_file("molene_like.csv"));
    CHECK(t.rows.size() == 4);
    cfg.sample_sizes = {10, 5000};
    CHECK_THROWS_AS(run_experiment(cfg, data_file("molene_like.csv")), DomainError);
  }
  SUBCASE("missing data path") {
    CHECK_THROWS_AS(run_experiment(cfg), DomainError);
  }
}

TEST_CASE("design prior files") {
  const Laplacian lap(path_graph(3));
  SUBCASE("exact signal with noise and SNR floor") {
    std::istringstream in("x = 1, 2, 3\nsigma2 = 0.5\nsnr_db = 0\n");
    const DesignProblem p = parse_design_prior(in, lap);
    CHECK(std::holds_alternative<ExactSignal>(p.prior));
    REQUIRE(p.noise.has_value());
    CHECK(p.noise->covariance(1, 1) == 0.5);
    CHECK(p.w0_star == doctest::Approx(optimal_w0(lap, 0.0)));
  }
  SUBCASE("bounds with a candidate") {
    std::istringstream in("lower = -1,-1,-1\nupper = 1,2,3\ncandidate = 0,1,0\nw0_star = 0.1\n");
    const DesignProblem p = parse_design_prior(in, lap);
    CHECK(std::holds_alternative<SignalBounds>(p.prior));
    CHECK(p.extra_candidates.size() == 1);
    CHECK(p.w0_star == 0.1);
  }
  SUBCASE("second moment is row-major") {
    std::istringstream in("second_moment = 2,1,0, 1,2,1, 0,1,2\n");
    const DesignProblem p = parse_design_prior(in, lap);
    CHECK(p.second_moment()(0, 1) == 1.0);
    CHECK(p.second_moment()(2, 2) == 2.0);
  }
  SUBCASE("errors") {
    std::istringstream two_kinds("x = 1,2,3\nlower = 0,0,0\nupper = 1,1,1\n");
    CHECK_THROWS_AS(parse_design_prior(two_kinds, lap), ParseError);
    std::istringstream wrong_length("x = 1,2\n");
    CHECK_THROWS_AS(parse_design_prior(wrong_length, lap), DimensionError);
    std::istringstream unknown("x = 1,2,3\ncolour = red\n");
    CHECK_THROWS_AS(parse_design_prior(unknown, lap), ParseError);
    std::istringstream lone_upper("upper = 1,2,3\n");
    CHECK_THROWS_AS(parse_design_prior(lone_upper, lap), ParseError);
  }
}

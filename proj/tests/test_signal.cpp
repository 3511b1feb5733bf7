#include <doctest.h>

#include <sstream>

#include "gsr/error.hpp"
#include "gsr/signal.hpp"
#include "support.hpp"

using namespace gsr;

TEST_CASE("bandlimited signal") {
  std::mt19937_64 rng(17);
  const Laplacian lap(gsr::testing::random_er(rng, 12, 20));
  const Index n = lap.size();

  SUBCASE("full band is U 1") {
    const VectorXd x = bandlimited_signal(lap, n);
    CHECK(gsr::testing::rel_diff(x, lap.eigenvectors() * VectorXd::Ones(n)) <= 1e-14);
  }
  SUBCASE("bandwidth one is constant") {
    const VectorXd x = bandlimited_signal(lap, 1);
    CHECK((x.array() - x(0)).abs().maxCoeff() <= 1e-12);
    CHECK(x(0) == doctest::Approx(1.0 / std::sqrt(double(n))));
  }
  SUBCASE("GFT is supported on the band") {
    const VectorXd c = graph_fourier_transform(lap, bandlimited_signal(lap, 5));
    CHECK((c.head(5).array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(c.tail(n - 5).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("random coefficients are seeded") {
    const VectorXd a = bandlimited_signal(lap, 4, 5, true);
    CHECK(a == bandlimited_signal(lap, 4, 5, true));
    CHECK_FALSE(a == bandlimited_signal(lap, 4, 6, true));
    CHECK(graph_fourier_transform(lap, a).tail(n - 4).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(bandlimited_signal(lap, 0), DomainError);
  CHECK_THROWS_AS(bandlimited_signal(lap, n + 1), DomainError);
}

TEST_CASE("band energy equals the sum of the in-band eigenvalues") {
  const Laplacian lap(erdos_renyi(50, 0.5, 3));
  const VectorXd x = bandlimited_signal(lap, 20);
  const double expected = lap.eigenvalues().head(20).sum();
  CHECK(x.dot(lap.matrix() * x) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("GFT preserves energy") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const Laplacian lap(gsr::testing::random_er(rng, 5, 30));
    const VectorXd x = gsr::testing::random_vector(lap.size(), rng);
    const VectorXd c = graph_fourier_transform(lap, x);
    CHECK(c.squaredNorm() == doctest::Approx(x.squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("add_noise") {
  const VectorXd x = VectorXd::LinSpaced(6, -1.0, 1.0);
  SUBCASE("zero covariance leaves the signal untouched") {
    CHECK(add_noise(x, NoiseModel::isotropic(6, 0.0, 4)).y == x);
  }
  SUBCASE("fixed seed is reproducible") {
    const NoiseModel m = NoiseModel::isotropic(6, 0.3, 77);
    CHECK(add_noise(x, m).y == add_noise(x, m).y);
    CHECK_FALSE(add_noise(x, m).y == add_noise(x, NoiseModel::isotropic(6, 0.3, 78)).y);
  }
  SUBCASE("sample covariance matches sigma^2 I") {
    const double sigma2 = 0.7;
    const Index n = 6, draws = 10000;
    MatrixXd acc = MatrixXd::Zero(n, n);
    for (Index d = 0; d < draws; ++d) {
      const VectorXd e = add_noise(VectorXd::Zero(n), NoiseModel::isotropic(n, sigma2, 1000 + d)).y;
      acc += e * e.transpose();
    }
    acc /= double(draws);
    const MatrixXd target = sigma2 * MatrixXd::Identity(n, n);
    CHECK((acc - target).norm() <= 0.05 * target.norm());
  }
  SUBCASE("full covariance is honoured") {
    std::mt19937_64 rng(1);
    NoiseModel m{gsr::testing::random_psd(3, rng), 0};
    MatrixXd acc = MatrixXd::Zero(3, 3);
    for (int d = 0; d < 20000; ++d) {
      m.seed = d;
      const VectorXd e = add_noise(VectorXd::Zero(3), m).y;
      acc += e * e.transpose();
    }
    acc /= 20000.0;
    CHECK((acc - m.covariance).norm() <= 0.05 * m.covariance.norm());
  }
  SUBCASE("invalid covariance") {
    MatrixXd c = MatrixXd::Identity(2, 2);
    c(0, 0) = -1.0;
    CHECK_THROWS_AS(add_noise(VectorXd::Zero(2), NoiseModel{c, 0}), DomainError);
    CHECK_THROWS_AS(add_noise(VectorXd::Zero(3), NoiseModel::isotropic(2, 1.0)), DimensionError);
  }
}

TEST_CASE("snr_to_sigma") {
  const Index n = 9;
  const VectorXd unit = VectorXd::Ones(n);
  CHECK(snr_to_sigma(unit, 0.0) == doctest::Approx(1.0));
  CHECK(snr_to_sigma(unit, 20.0) == doctest::Approx(0.1));
  CHECK(snr_to_sigma(2.0 * unit, 0.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(snr_to_sigma(VectorXd::Zero(n), 0.0), DomainError);
}

TEST_CASE("nmse") {
  const VectorXd x{{1.0, -2.0, 0.5}};
  CHECK(nmse(x, x) == 0.0);
  CHECK(nmse(VectorXd::Zero(3), x) == doctest::Approx(1.0));
  CHECK(nmse(2.0 * x, x) == doctest::Approx(1.0));
  const VectorXd e{{0.3, 0.1, -0.7}};
  CHECK(nmse(3.5 * e, 3.5 * x) == doctest::Approx(nmse(e, x)).epsilon(1e-14));
  CHECK_THROWS_AS(nmse(x, VectorXd::Zero(3)), DomainError);
  CHECK_THROWS_AS(nmse(VectorXd::Zero(2), x), DimensionError);
}

TEST_CASE("observations and masks") {
  const std::vector<Index> m = random_mask(20, 7, 5);
  CHECK(m.size() == 7);
  CHECK(std::is_sorted(m.begin(), m.end()));
  CHECK(std::adjacent_find(m.begin(), m.end()) == m.end());
  CHECK(m == random_mask(20, 7, 5));
  CHECK_THROWS_AS(random_mask(5, 6, 1), DomainError);

  const VectorXd y = VectorXd::LinSpaced(4, 1.0, 4.0);
  const Observation obs = Observation::masked(y, {1, 3});
  CHECK(obs.y == VectorXd{{0.0, 2.0, 0.0, 4.0}});
  CHECK(obs.observed_values() == VectorXd{{2.0, 4.0}});
  CHECK_FALSE(obs.is_full());
  CHECK(Observation::full(y).is_full());
  CHECK_THROWS_AS(Observation::masked(y, {1, 1}), DomainError);
  CHECK_THROWS_AS(Observation::masked(y, {4}), DomainError);
  CHECK_THROWS_AS(SignalBounds(VectorXd::Ones(2), VectorXd::Zero(2)), DomainError);
}

TEST_CASE("station csv ingestion") {
  SUBCASE("hand-computed de-meaning on a 3x2 table") {
    std::istringstream in(
        "station_id,lat,lon\n"
        "a,0.0,0.0\n"
        "b,0.0,1.0\n"
        "c,1.0,0.0\n"
        "\n"
        "timestamp,c,a,b\n"
        "t0,3.0,1.0,2.0\n"
        "t1,6.0,4.0,5.0\n");
    const StationDataset ds = load_station_csv(in, 1, 5.0);
    CHECK(ds.removed_mean == doctest::Approx(3.5));
    REQUIRE(ds.snapshots.size() == 2);
    CHECK(ds.snapshots[0].isApprox(VectorXd{{-2.5, -1.5, -0.5}}));
    CHECK(ds.snapshots[1].isApprox(VectorXd{{0.5, 1.5, 2.5}}));
    CHECK(ds.graph.size() == 3);
    CHECK(ds.timestamps[1] == "t1");
  }
  SUBCASE("constant temperature becomes exactly zero") {
    std::istringstream in(
        "station_id,lat,lon\na,0,0\nb,0,1\nc,2,0\n\ntimestamp,a,b,c\n1,7.3,7.3,7.3\n2,7.3,7.3,7.3\n");
    const StationDataset ds = load_station_csv(in, 1, 5.0);
    for (const VectorXd& s : ds.snapshots) CHECK(s.isZero(0.0));
  }
  SUBCASE("malformed input") {
    std::istringstream missing("station_id,lat,lon\na,0,0\nb,0,1\n\ntimestamp,a,b\n1,2.0\n");
    CHECK_THROWS_AS(load_station_csv(missing, 1, 5.0), ParseError);
    std::istringstream unknown("station_id,lat,lon\na,0,0\nb,0,1\n\ntimestamp,a,z\n1,2.0,3.0\n");
    CHECK_THROWS_AS(load_station_csv(unknown, 1, 5.0), ParseError);
    std::istringstream bad_number("station_id,lat,lon\na,0,0\nb,0,1\n\ntimestamp,a,b\n1,2.0,x\n");
    CHECK_THROWS_AS(load_station_csv(bad_number, 1, 5.0), ParseError);
  }
  SUBCASE("bundled fixtures") {
    const StationDataset molene = load_station_csv_file(GSR_DATA_DIR "/molene_like.csv", 5, 5.0);
    CHECK(molene.graph.size() == 32);
    CHECK(molene.snapshots.size() == 744);
    double total = 0.0, lo = 1e300, hi = -1e300;
    for (const VectorXd& s : molene.snapshots) {
      total += s.sum();
      lo = std::min(lo, s.minCoeff());
      hi = std::max(hi, s.maxCoeff());
    }
    CHECK(std::abs(total / (32.0 * 744.0)) <= 1e-12 * (hi - lo));
    for (Index i = 0; i < 32; ++i) CHECK(molene.graph.neighbors(i).size() >= 5);

    const StationDataset noaa = load_station_csv_file(GSR_DATA_DIR "/noaa_like.csv", 7, 0.05);
    CHECK(noaa.graph.size() == 109);
    for (Index i = 0; i < 109; ++i) CHECK(noaa.graph.neighbors(i).size() >= 7);
  }
}

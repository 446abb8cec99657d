#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "diskstat/ensemble.hpp"
#include "oracles.hpp"

using namespace diskstat;

namespace {

// closed-form P(j,1) = 1 - e^{-1} sum_{k<j} 1/k! for integer shapes
double p_int_shape_at_1(int j) {
  double s = 0.0, f = 1.0;
  for (int k = 0; k < j; ++k) {
    if (k > 0) f *= k;
    s += 1.0 / f;
  }
  return 1.0 - std::exp(-1.0) * s;
}

}  // namespace

TEST_CASE("jump weights: telescoping and golden cases", "[ensemble]") {
  SECTION("zero fugacities give the trivial weights") {
    const double u[3] = {0.0, 0.0, 0.0};
    const auto w = jump_weights(u);
    for (int l = 0; l < 3; ++l) {
      CHECK(w.omega[l] == 0.0);
      CHECK(w.big_omega[l] == 1.0);
    }
    CHECK(w.omega[3] == 1.0);
    CHECK(w.big_omega[3] == 1.0);
  }
  SECTION("single wall") {
    const double u[1] = {0.7};
    const auto w = jump_weights(u);
    CHECK(w.omega[0] == Approx(std::expm1(0.7)).epsilon(1e-15));
    CHECK(w.big_omega[0] == Approx(std::exp(0.7)).epsilon(1e-15));
    CHECK(w.omega[1] == 1.0);
  }
  SECTION("suffix sums telescope for random draws") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> u(4);
      for (auto& x : u) x = dist(gen);
      const auto w = jump_weights(u);
      for (std::size_t l = 0; l < 5; ++l) {
        double suffix = 0.0;
        for (std::size_t j = l; j < 5; ++j) suffix += w.omega[j];
        CHECK(suffix == Approx(w.big_omega[l]).epsilon(1e-12));
        CHECK(w.big_omega[l] > 0.0);
      }
      CHECK(w.big_omega[4] == 1.0);
    }
  }
}

TEST_CASE("radii schedules", "[ensemble]") {
  EnsembleParams params{1.0, 0.0, 100};
  SECTION("zero offset reproduces the base radius") {
    MergeConfig cfg{Regime::Bulk, 0.5, {0.0}};
    CHECK(radii(params, cfg)[0] == Approx(0.5).epsilon(1e-15));
    MergeConfig edge{Regime::Edge, 0.0, {0.0}};
    CHECK(radii(params, edge)[0] == Approx(1.0).epsilon(1e-15));
  }
  SECTION("bulk golden value") {
    // 0.5 (1 + sqrt(2)/5)^{1/2}
    MergeConfig cfg{Regime::Bulk, 0.5, {1.0}};
    CHECK(radii(params, cfg)[0] ==
          Approx(0.5 * std::sqrt(1.0 + constants::sqrt_2 / 5.0)).epsilon(1e-15));
    CHECK(radii(params, cfg)[0] == Approx(0.56631323321873).margin(1e-12));
  }
  SECTION("output strictly increasing") {
    MergeConfig cfg{Regime::Bulk, 0.5, {-0.7, -0.1, 0.4, 1.3}};
    const auto rs = radii(params, cfg);
    for (std::size_t l = 1; l < rs.size(); ++l) CHECK(rs[l] > rs[l - 1]);
  }
  SECTION("n too small is rejected") {
    EnsembleParams tiny{1.0, 0.0, 1};
    MergeConfig cfg{Regime::Bulk, 0.5, {-1.0}};
    CHECK_THROWS_AS(radii(tiny, cfg), std::invalid_argument);
  }
  SECTION("invalid configs are rejected") {
    MergeConfig bad{Regime::Bulk, 1.5, {0.0}};  // base beyond the droplet edge
    CHECK_THROWS_AS(radii(params, bad), std::invalid_argument);
    MergeConfig unsorted{Regime::Bulk, 0.5, {0.3, 0.1}};
    CHECK_THROWS_AS(radii(params, unsorted), std::invalid_argument);
  }
}

TEST_CASE("log_mgf_exact golden case n=4", "[ensemble]") {
  EnsembleParams params{1.0, 0.0, 4};
  const double rs[1] = {0.5};  // fixed radius, z = 4 * 0.25 = 1
  const double u[1] = {0.1};

  // oracle: 4-term sum with closed-form P(j,1)
  double expect = 0.0;
  for (int j = 1; j <= 4; ++j) {
    expect += std::log1p(std::expm1(0.1) * p_int_shape_at_1(j));
  }
  const double got = log_mgf_exact(params, rs, u);
  CHECK(got == Approx(expect).epsilon(1e-13));
  // frozen from the long-double oracle run
  CHECK(got == Approx(0.10218041522658425).margin(1e-12));

  SECTION("u = 0 gives exactly zero") {
    const double zero[1] = {0.0};
    CHECK(log_mgf_exact(params, rs, zero) == 0.0);
  }
  SECTION("zero fugacity on an extra wall changes nothing") {
    const double rs2[2] = {0.5, 0.8};
    const double u2[2] = {0.1, 0.0};
    CHECK(log_mgf_exact(params, rs2, u2) == Approx(got).epsilon(1e-14));
  }
}

TEST_CASE("log_mgf_exact validation and degenerate radii", "[ensemble]") {
  EnsembleParams params{1.0, 0.0, 10};
  const double u[2] = {0.1, 0.2};
  {
    const double rs[2] = {0.5, 0.5 * (1.0 + 1e-13)};
    CHECK_THROWS_AS(log_mgf_exact(params, rs, u), std::invalid_argument);
  }
  {
    const double rs[2] = {0.5, 0.4};
    CHECK_THROWS_AS(log_mgf_exact(params, rs, u), std::invalid_argument);
  }
  {
    const double rs[1] = {0.5};
    CHECK_THROWS_AS(log_mgf_exact(params, rs, u), std::invalid_argument);
  }
}

TEST_CASE("log_mgf_exact is bit-stable across thread counts", "[ensemble]") {
  EnsembleParams params{1.3, 0.4, 20000};
  const double rs[2] = {0.55, 0.56};
  const double u[2] = {0.3, -0.45};
  const double t1 = log_mgf_exact(params, rs, u, 1);
  const double t2 = log_mgf_exact(params, rs, u, 2);
  const double t8 = log_mgf_exact(params, rs, u, 8);
  CHECK(t1 == t2);
  CHECK(t1 == t8);
}

TEST_CASE("mean/variance/covariance golden and bounds", "[ensemble]") {
  EnsembleParams params{1.0, 0.0, 4};
  SECTION("mean golden value") {
    double expect = 0.0;
    for (int j = 1; j <= 4; ++j) expect += p_int_shape_at_1(j);
    CHECK(mean_exact(params, 0.5) == Approx(expect).epsilon(1e-13));
    CHECK(mean_exact(params, 0.5) == Approx(0.99565123043322104).margin(1e-12));
  }
  SECTION("deterministic count has zero variance") {
    // radius far beyond every point: all P_j ~ 1
    EnsembleParams p2{1.0, 0.0, 6};
    CHECK(variance_exact(p2, 12.0) == Approx(0.0).margin(1e-12));
    CHECK(mean_exact(p2, 12.0) == Approx(6.0).epsilon(1e-12));
  }
  SECTION("covariance is positive and Cauchy-Schwarz bounded") {
    EnsembleParams p{1.0, 0.0, 200};
    const double r1 = 0.5, r2 = 0.6;
    const double cov = covariance_exact(p, r1, r2);
    CHECK(cov >= 0.0);
    CHECK(cov <= std::sqrt(variance_exact(p, r1) * variance_exact(p, r2)) + 1e-12);
  }
}

TEST_CASE("u-monotonicity of the log-MGF", "[ensemble]") {
  EnsembleParams params{1.5, 0.5, 60};
  const double rs[2] = {0.5, 0.7};
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    double u[2] = {dist(gen), dist(gen)};
    for (int l = 0; l < 2; ++l) {
      double up[2] = {u[0], u[1]};
      up[l] += 1e-4;
      CHECK(log_mgf_exact(params, rs, up) > log_mgf_exact(params, rs, u));
    }
  }
}

TEST_CASE("log-MGF upper bound n * sum(u) for nonnegative u", "[ensemble]") {
  EnsembleParams params{0.8, -0.3, 50};
  const double rs[2] = {0.4, 0.9};
  const double u[2] = {0.3, 0.7};
  const double v = log_mgf_exact(params, rs, u);
  CHECK(v >= 0.0);
  CHECK(v <= params.n * (u[0] + u[1]));
}

TEST_CASE("joint cumulants match analytic forms", "[ensemble]") {
  EnsembleParams params{1.0, 0.0, 300};
  MergeConfig cfg{Regime::Bulk, 0.6, {-0.2, 0.5}};
  const auto rs = radii(params, cfg);

  SECTION("order (1,0) is the mean") {
    const int jv[2] = {1, 0};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(mean_exact(params, rs[0])).epsilon(1e-8));
  }
  SECTION("order (0,2) is the variance") {
    const int jv[2] = {0, 2};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(variance_exact(params, rs[1])).epsilon(1e-6));
  }
  SECTION("order (1,1) is the covariance") {
    const int jv[2] = {1, 1};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(covariance_exact(params, rs[0], rs[1])).epsilon(1e-6));
  }
  SECTION("cross-cumulant at nearly merged radii approaches the variance") {
    const double r1 = 0.6;
    const double pair[2] = {r1, r1 * (1.0 + 1e-9)};
    const int jv[2] = {1, 1};
    const auto k = joint_cumulant_exact(params, pair, jv);
    CHECK(k.value == Approx(variance_exact(params, r1)).margin(1e-4));
  }
  SECTION("order above 6 rejected") {
    const int jv[2] = {4, 3};
    CHECK_THROWS_AS(joint_cumulant_exact(params, rs, jv), std::invalid_argument);
  }
}

TEST_CASE("higher cumulants match the independent-indicator formulas", "[ensemble]") {
  // counts are sums of independent indicators with success probabilities
  // P(a_j, n r^{2b}): kappa3 = sum p(1-p)(1-2p),
  // kappa4 = sum p(1-p)(1-6p(1-p)), kappa21 = sum p1(1-2p1)(1-p2)
  EnsembleParams params{1.2, 0.3, 150};
  const double r1 = 0.55, r2 = 0.64;
  const double z1 = 150.0 * std::pow(r1, 2.4);
  const double z2 = 150.0 * std::pow(r2, 2.4);
  KahanSum k3, k4, k21;
  for (int j = 1; j <= 150; ++j) {
    const double a = params.shape(j);
    const double p1 = reg_lower_gamma(a, z1);
    const double p2 = reg_lower_gamma(a, z2);
    k3.add(p1 * (1.0 - p1) * (1.0 - 2.0 * p1));
    k4.add(p1 * (1.0 - p1) * (1.0 - 6.0 * p1 * (1.0 - p1)));
    k21.add(p1 * (1.0 - 2.0 * p1) * (1.0 - p2));
  }
  const double rs[2] = {r1, r2};
  {
    const int jv[2] = {3, 0};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(k3.value()).margin(5e-6));
  }
  {
    const int jv[2] = {4, 0};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(k4.value()).margin(5e-5));
  }
  {
    const int jv[2] = {2, 1};
    const auto k = joint_cumulant_exact(params, rs, jv);
    CHECK(k.value == Approx(k21.value()).margin(5e-6));
  }
}

TEST_CASE("decoupling residual for fixed separated radii", "[ensemble]") {
  SECTION("single radius: exactly zero") {
    EnsembleParams params{1.0, 0.0, 100};
    const double rs[1] = {0.5};
    const double u[1] = {0.4};
    CHECK(decoupling_residual(params, rs, u) == 0.0);
  }
  SECTION("zero fugacities: zero") {
    EnsembleParams params{1.0, 0.0, 100};
    const double rs[2] = {0.4, 0.7};
    const double u[2] = {0.0, 0.0};
    CHECK(decoupling_residual(params, rs, u) == Approx(0.0).margin(1e-15));
  }
  SECTION("exponentially small at n = 500 and shrinking in n") {
    EnsembleParams params{1.0, 0.0, 500};
    const double rs[2] = {0.4, 0.7};
    const double u[2] = {0.3, -0.2};
    const double res500 = std::abs(decoupling_residual(params, rs, u));
    CHECK(res500 < 1e-6);
    EnsembleParams mid{1.0, 0.0, 120};
    const double res120 = std::abs(decoupling_residual(mid, rs, u));
    EnsembleParams small{1.0, 0.0, 40};
    const double res40 = std::abs(decoupling_residual(small, rs, u));
    CHECK(res500 <= res120);
    CHECK(res120 <= res40);
    // measured decay is much faster than the (ln n)^2 / n fallback rate
    CHECK(res500 <= res40 * (std::log(500.0) * std::log(500.0) / 500.0) /
                        (std::log(40.0) * std::log(40.0) / 40.0));
  }
}

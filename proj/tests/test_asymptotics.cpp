#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "diskstat/asymptotics.hpp"
#include "diskstat/finite_difference.hpp"

using namespace diskstat;

namespace {

std::vector<double> random_offsets(std::mt19937& gen, int m) {
  std::uniform_real_distribution<double> gap(0.05, 1.2);
  std::uniform_real_distribution<double> start(-2.0, 0.5);
  std::vector<double> s(m);
  s[0] = start(gen);
  for (int l = 1; l < m; ++l) s[l] = s[l - 1] + gap(gen);
  return s;
}

}  // namespace

TEST_CASE("H kernels: trivial values, positivity, reflection", "[asymptotics]") {
  SECTION("u = 0 gives 1 for all t") {
    const double u[2] = {0.0, 0.0};
    const double s[2] = {-0.4, 0.8};
    for (double t : {-5.0, -0.4, 0.0, 1.3, 6.0}) {
      CHECK(H1(t, u, s) == 1.0);
      CHECK(H2(t, u, s) == 1.0);
    }
  }
  SECTION("t -> +inf limit is 1") {
    const double u[2] = {0.7, -0.9};
    const double s[2] = {-0.4, 0.8};
    CHECK(H1(30.0, u, s) == Approx(1.0).epsilon(1e-14));
    CHECK(H2(30.0, u, s) == Approx(1.0).epsilon(1e-14));
  }
  SECTION("positivity and reflection identity on random draws") {
    std::mt19937 gen(1234);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    std::uniform_real_distribution<double> td(-6.0, 6.0);
    std::uniform_int_distribution<int> md(1, 4);
    for (int rep = 0; rep < 10000; ++rep) {
      const int m = md(gen);
      const auto s = random_offsets(gen, m);
      std::vector<double> u(m);
      double usum = 0.0;
      for (auto& x : u) {
        x = ud(gen);
        usum += x;
      }
      const double t = td(gen);
      const double h1 = H1(t, u, s);
      const double h2m = H2(-t, u, s);
      REQUIRE(h1 > 0.0);
      REQUIRE(h2m > 0.0);
      const double lhs = h1;
      const double rhs = std::exp(usum) * h2m;
      // 1e-12 relative to the computation's own term scale: the sums can
      // cancel from magnitudes ~e^{sum|u|}, which bounds the roundoff
      const auto w1 = detail::suffix_jump_weights(u);
      const auto w2 = detail::prefix_jump_weights(u);
      double mag = 1.0 + std::exp(usum);
      for (int l = 0; l < m; ++l) {
        mag += std::abs(0.5 * w1[l] * diskstat::erfc(t - s[l]));
        mag += std::exp(usum) * std::abs(0.5 * w2[l] * diskstat::erfc(-t + s[l]));
      }
      REQUIRE(std::abs(lhs - rhs) <= 1e-12 * mag);
    }
  }
}

TEST_CASE("G kernels: trivial values and golden case", "[asymptotics]") {
  SECTION("u = 0 gives 0") {
    const double u[2] = {0.0, 0.0};
    const double s[2] = {-0.4, 0.8};
    CHECK(G1(0.3, u, s) == 0.0);
    CHECK(G2(0.3, u, s) == 0.0);
  }
  SECTION("single-wall golden value at t = 0") {
    const double u[1] = {std::log(2.0)};
    const double s[1] = {0.0};
    // H1(0) = 1.5; G1(0) = (1/1.5) * 1 * (1/sqrt(2pi)) * (1/3)
    CHECK(G1(0.0, u, s) ==
          Approx(constants::inv_sqrt_2pi / 4.5).epsilon(1e-14));
    CHECK(G1(0.0, u, s) == Approx(0.0886537).margin(2e-7));
  }
  SECTION("Gaussian decay in |t|") {
    const double u[2] = {0.9, -0.4};
    const double s[2] = {-0.2, 0.6};
    CHECK(std::abs(G1(9.0, u, s)) < 1e-25);
    CHECK(std::abs(G1(-9.0, u, s)) < 1e-25);
    CHECK(std::abs(G2(9.0, u, s)) < 1e-20);
    CHECK(std::abs(G2(-9.0, u, s)) < 1e-20);
  }
}

TEST_CASE("H2 closed-form derivative matches finite differences", "[asymptotics]") {
  const double u[2] = {0.35, -0.8};
  const double s[2] = {-0.5, 0.3};
  const auto w2 = detail::prefix_jump_weights(u);
  for (double t : {-1.0, 0.0, 0.7}) {
    const double h = 1e-5;
    const double fd = (H2(t + h, u, s) - H2(t - h, u, s)) / (2.0 * h);
    CHECK(detail::h2_prime_of(t, w2, s) == Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("bulk coefficients: trivial and spot values", "[asymptotics]") {
  QuadratureSpec spec;
  SECTION("u = 0 gives the zero quadruple") {
    const double u[2] = {0.0, 0.0};
    const double s[2] = {-0.3, 0.4};
    const auto c = bulk_coeffs(1.0, 0.0, 0.6, s, u, spec);
    for (int k = 0; k < 4; ++k) CHECK(c.c[k] == Approx(0.0).margin(1e-13));
  }
  SECTION("C1 is b r^{2b} sum(u)") {
    const double u[1] = {0.2};
    const double s[1] = {0.0};
    const auto c = bulk_coeffs(1.0, 0.0, 0.5, s, u, spec);
    CHECK(c.c[0] == Approx(0.05).epsilon(1e-15));
  }
  SECTION("invalid base radius rejected") {
    const double u[1] = {0.2};
    const double s[1] = {0.0};
    CHECK_THROWS_AS(bulk_coeffs(1.0, 0.0, 1.0, s, u, spec), std::invalid_argument);
  }
}

TEST_CASE("edge coefficients: trivial and spot values", "[asymptotics]") {
  QuadratureSpec spec;
  SECTION("u = 0 gives the zero quadruple") {
    const double u[2] = {0.0, 0.0};
    const double s[2] = {-0.5, 0.7};
    const auto c = edge_coeffs(1.5, 0.5, s, u, spec);
    for (int k = 0; k < 4; ++k) CHECK(c.c[k] == Approx(0.0).margin(1e-13));
  }
  SECTION("C1 is exactly sum(u)") {
    const double u[2] = {0.15, -0.25};
    const double s[2] = {-0.5, 0.7};
    const auto c = edge_coeffs(1.5, 0.5, s, u, spec);
    CHECK(c.c[0] == Approx(-0.10).epsilon(1e-15));
  }
}

TEST_CASE("derivatives of C2 reproduce the leading cumulant coefficients",
          "[asymptotics]") {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-14;
  SECTION("bulk: d2C2/du2 at 0 equals b r^b / sqrt(pi) (m=1, s=0)") {
    const double b = 1.3, r = 0.55;
    MergeConfig cfg{Regime::Bulk, r, {0.0}};
    const int jv[1] = {2};
    const auto d = cumulant_asymptotics(b, 0.2, cfg, jv, spec);
    CHECK(d[1].value == Approx(b * std::pow(r, b) / constants::sqrt_pi).epsilon(1e-8));
  }
  SECTION("edge: dC2/du at 0 equals c1(0) = -sqrt(b/(2 pi)) (m=1, s=0)") {
    const double b = 1.5;
    MergeConfig cfg{Regime::Edge, 0.0, {0.0}};
    const int jv[1] = {1};
    const auto d = cumulant_asymptotics(b, 0.5, cfg, jv, spec);
    CHECK(d[1].value == Approx(-std::sqrt(b / (2.0 * constants::pi))).epsilon(1e-9));
    CHECK(d[1].value == Approx(edge_cf::c1(b, 0.0)).epsilon(1e-9));
  }
}

TEST_CASE("cumulant_asymptotics matches the closed-form mean/variance",
          "[asymptotics]") {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-14;
  const double b = 1.0, alpha = 0.0, r = 0.6;
  MergeConfig cfg{Regime::Bulk, r, {0.3}};
  SECTION("first derivative quadruple (mean)") {
    const int jv[1] = {1};
    const auto d = cumulant_asymptotics(b, alpha, cfg, jv, spec);
    CHECK(d[0].value == Approx(b * r * r).epsilon(1e-12));
    CHECK(d[1].value ==
          Approx(constants::sqrt_2 * b * std::pow(r, b) * 0.3).epsilon(1e-9));
    CHECK(d[2].value == Approx((b - 1.0 - 2.0 * alpha) / 2.0).margin(1e-8));
    CHECK(d[3].value == Approx(0.0).margin(1e-7));
  }
  SECTION("second derivative quadruple (variance)") {
    const int jv[1] = {2};
    const auto d = cumulant_asymptotics(b, alpha, cfg, jv, spec);
    CHECK(d[0].value == Approx(0.0).margin(1e-10));
    CHECK(d[1].value == Approx(b * std::pow(r, b) / constants::sqrt_pi).epsilon(1e-8));
    CHECK(d[2].value == Approx(b * 0.3 * constants::inv_sqrt_2pi).epsilon(1e-7));
    CHECK(d[3].value ==
          Approx(-b * (1.0 + 4.0 * 0.09) / (16.0 * constants::sqrt_pi * std::pow(r, b)))
              .epsilon(1e-6));
  }
  SECTION("C1 derivatives of order >= 2 vanish (linearity)") {
    const int jv[1] = {3};
    const auto d = cumulant_asymptotics(b, alpha, cfg, jv, spec);
    CHECK(d[0].value == Approx(0.0).margin(1e-10));
  }
}

TEST_CASE("closed-form moment coefficients: printed spot values", "[asymptotics]") {
  SECTION("bulk mean constant term vanishes for b=1, alpha=0") {
    MergeConfig cfg{Regime::Bulk, 0.6, {0.25}};
    const ClosedFormMoments cf(1.0, 0.0, cfg);
    CHECK(cf.mean(0).const_coef == 0.0);
  }
  SECTION("edge d1(0) vanishes for b=1, alpha=0") {
    CHECK(edge_cf::d1(1.0, 0.0, 0.0) == Approx(0.0).margin(1e-15));
  }
  SECTION("edge c2 is positive and decays to 0 at +inf") {
    for (double s : {-3.0, -1.0, 0.0, 0.7, 2.0, 4.0}) {
      CHECK(edge_cf::c2(1.4, s) > 0.0);
    }
    CHECK(edge_cf::c2(1.4, 8.0) < 1e-20);
    CHECK(edge_cf::c2(1.4, 6.0) > edge_cf::c2(1.4, 8.0));
  }
}

TEST_CASE("merging limit: covariance coefficients reduce to variance ones",
          "[asymptotics]") {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-14;
  SECTION("bulk") {
    const double b = 1.2, alpha = 0.4, r = 0.55;
    MergeConfig cfg{Regime::Bulk, r, {-0.3, 0.6}};
    const ClosedFormMoments cf(b, alpha, cfg, spec);
    for (double s : {-0.3, 0.0, 0.8}) {
      CHECK(cf.c11(s, s) == Approx(b * std::pow(r, b) / constants::sqrt_pi).epsilon(1e-9));
      CHECK(cf.d11(s, s) == Approx(b * s * constants::inv_sqrt_2pi).margin(1e-9));
      CHECK(cf.e11(s, s) ==
            Approx(-b * (1.0 + 4.0 * s * s) / (16.0 * constants::sqrt_pi * std::pow(r, b)))
                .margin(1e-8));
    }
  }
  SECTION("edge") {
    const double b = 1.5, alpha = 0.5;
    MergeConfig cfg{Regime::Edge, 0.0, {-0.5, 0.7}};
    const ClosedFormMoments cf(b, alpha, cfg, spec);
    for (double s : {-0.5, 0.0, 0.9}) {
      CHECK(cf.c11(s, s) == Approx(edge_cf::c2(b, s)).margin(1e-10));
      CHECK(cf.d11(s, s) == Approx(edge_cf::d2(b, alpha, s)).margin(1e-9));
      CHECK(cf.e11(s, s) == Approx(edge_cf::e2(b, alpha, s)).margin(1e-8));
    }
  }
}

TEST_CASE("clt covariance matrix properties", "[asymptotics]") {
  QuadratureSpec spec;
  SECTION("m = 1 is the 1x1 identity") {
    MergeConfig cfg{Regime::Bulk, 0.6, {0.2}};
    const auto sigma = clt_covariance(1.0, 0.0, cfg, spec);
    REQUIRE(sigma.size() == 1);
    CHECK(sigma[0] == 1.0);
  }
  SECTION("far-separated offsets decorrelate") {
    MergeConfig cfg{Regime::Bulk, 0.6, {-6.0, 6.0}};
    const auto sigma = clt_covariance(1.0, 0.0, cfg, spec);
    CHECK(std::abs(sigma[1]) < 1e-10);
  }
  SECTION("nearly merged offsets give correlation 1 (bulk)") {
    MergeConfig cfg{Regime::Bulk, 0.6, {0.3, 0.3 + 1e-7}};
    const auto sigma = clt_covariance(1.0, 0.0, cfg, spec);
    CHECK(sigma[1] == Approx(1.0).epsilon(1e-6));
  }
  SECTION("symmetric, unit diagonal, positive semidefinite on random configs") {
    std::mt19937 gen(99);
    for (int rep = 0; rep < 8; ++rep) {
      std::uniform_int_distribution<int> md(2, 4);
      const int m = md(gen);
      MergeConfig cfg;
      cfg.regime = rep % 2 == 0 ? Regime::Bulk : Regime::Edge;
      cfg.base_radius = 0.55;
      cfg.offsets = random_offsets(gen, m);
      const double b = rep % 2 == 0 ? 1.0 : 1.7;
      const auto sigma = clt_covariance(b, 0.3, cfg, spec);
      for (int i = 0; i < m; ++i) {
        CHECK(sigma[i * m + i] == 1.0);
        for (int j = 0; j < m; ++j) {
          CHECK(sigma[i * m + j] == sigma[j * m + i]);
        }
      }
      // PSD via eigen-free check: Cholesky with small tolerance
      std::vector<double> a(sigma);
      bool psd = true;
      for (int i = 0; i < m && psd; ++i) {
        for (int j = i; j < m; ++j) {
          double sum = a[i * m + j];
          for (int k = 0; k < i; ++k) sum -= a[i * m + k] * a[j * m + k];
          if (i == j) {
            if (sum < -1e-10) {
              psd = false;
              break;
            }
            a[i * m + i] = std::sqrt(std::max(sum, 1e-14));
          } else {
            a[j * m + i] = sum / a[i * m + i];
          }
        }
      }
      CHECK(psd);
    }
  }
}

TEST_CASE("zero-fugacity wall invariance of all coefficients", "[asymptotics]") {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  const double u2[2] = {0.3, -0.2};
  const double s2[2] = {-0.4, 0.5};
  const double u3[3] = {0.3, -0.2, 0.0};
  const double s3[3] = {-0.4, 0.5, 1.1};
  const auto cb2 = bulk_coeffs(1.2, 0.3, 0.5, s2, u2, spec);
  const auto cb3 = bulk_coeffs(1.2, 0.3, 0.5, s3, u3, spec);
  const auto ce2 = edge_coeffs(1.2, 0.3, s2, u2, spec);
  const auto ce3 = edge_coeffs(1.2, 0.3, s3, u3, spec);
  for (int k = 0; k < 4; ++k) {
    CHECK(cb3.c[k] == Approx(cb2.c[k]).margin(1e-11).epsilon(1e-11));
    CHECK(ce3.c[k] == Approx(ce2.c[k]).margin(1e-11).epsilon(1e-11));
  }
}

TEST_CASE("quadrature self-consistency of the coefficients", "[asymptotics]") {
  const double u[2] = {0.4, -0.35};
  const double s[2] = {-0.6, 0.8};
  QuadratureSpec coarse;
  coarse.rel_tol = 1e-8;
  coarse.abs_tol = 1e-10;
  QuadratureSpec fine = coarse;
  fine.rel_tol = 5e-9;
  const auto a = bulk_coeffs(1.1, 0.2, 0.5, s, u, coarse);
  const auto b = bulk_coeffs(1.1, 0.2, 0.5, s, u, fine);
  for (int k = 1; k < 4; ++k) {
    CHECK(std::abs(a.c[k] - b.c[k]) <= a.err[k] + b.err[k] + 1e-14);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpfr.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"

using namespace tusnady;

namespace {

// Psi(z) from a 200-bit erfc, rounded once.
double psi_oracle(double z) {
  mpfr_t t;
  mpfr_init2(t, 200);
  mpfr_set_d(t, z, MPFR_RNDN);
  mpfr_div_d(t, t, std::sqrt(2.0), MPFR_RNDN);  // z/sqrt2 to ~1 ulp; fine for 1e-15 abs
  mpfr_erfc(t, t, MPFR_RNDN);
  mpfr_div_ui(t, t, 2, MPFR_RNDN);
  double v = mpfr_get_d(t, MPFR_RNDN);
  mpfr_clear(t);
  return v;
}

// int_d^inf y^j phi(y) dy by Gauss-Kronrod on the shifted, phi(d)-scaled integrand.
double positive_side_quadrature(int j, double d) {
  auto f = [&](double u) {
    double y = d + u;
    return std::pow(y, j) * std::exp(-u * (d + u / 2));
  };
  double err = 0.0;
  double scaled = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, 40.0, 15, 1e-14, &err);
  return scaled * phi(d);
}

// Negative d is folded onto |d| with the full moment E[Y^j] = (j-1)!! (even j),
// avoiding the cancellation of an odd integrand over [d, -d].
double moment_quadrature(int j, double d) {
  if (d >= 0.0) return positive_side_quadrature(j, d);
  double tail = positive_side_quadrature(j, -d);
  if (j % 2 == 1) return tail;
  double full = 1.0;
  for (int i = j - 1; i > 1; i -= 2) full *= i;
  return full - tail;
}

}  // namespace

TEST_CASE("phi values and symmetry") {
  CHECK(phi(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-16));
  CHECK(phi(1.0) == phi(-1.0));
  CHECK(phi(-7.25) == phi(7.25));
  const double m = 4e7;
  const double z = std::sqrt(std::log(m));
  CHECK(phi(z) * kSqrt2Pi == doctest::Approx(1.0 / std::sqrt(m)).epsilon(1e-13));
  CHECK_THROWS_AS(phi(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(normal_cdf(INFINITY), DomainError);
}

TEST_CASE("phi relative accuracy up to |z| = 40") {
  for (double z = -40.0; z <= 40.0; z += 0.37) {
    mpfr_t t;
    mpfr_init2(t, 200);
    mpfr_set_d(t, z, MPFR_RNDN);
    mpfr_sqr(t, t, MPFR_RNDN);
    mpfr_div_si(t, t, -2, MPFR_RNDN);
    mpfr_exp(t, t, MPFR_RNDN);
    mpfr_t c;
    mpfr_init2(c, 200);
    mpfr_const_pi(c, MPFR_RNDN);
    mpfr_mul_ui(c, c, 2, MPFR_RNDN);
    mpfr_sqrt(c, c, MPFR_RNDN);
    mpfr_div(t, t, c, MPFR_RNDN);
    double ref = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clears(t, c, static_cast<mpfr_ptr>(nullptr));
    // below DBL_MIN only the subnormal spacing is meaningful
    CHECK(std::abs(phi(z) - ref) <= 1e-14 * ref + std::numeric_limits<double>::denorm_min());
  }
}

TEST_CASE("normal cdf and survival against a high-precision erfc") {
  CHECK(normal_cdf(0.0) == 0.5);
  for (double z = -12.0; z <= 12.0; z += 0.0625) {
    // grid points are exact binary fractions; z/sqrt2 rounding costs ~1 ulp
    double ref = psi_oracle(z);
    CHECK(std::abs(normal_survival(z) - ref) <= 1e-15);
    CHECK(std::abs(normal_cdf(-z) - ref) <= 1e-15);
    if (z > 0.0) CHECK(std::abs(normal_survival(z) - ref) <= 1e-13 * ref);
  }
}

TEST_CASE("complement, reflection and monotonicity on random z") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-9.0, 9.0);
  for (int i = 0; i < 1000; ++i) {
    double z = u(gen);
    NormalEval e = normal_eval(z);
    CHECK(std::abs(e.cdf + e.survival - 1.0) <= 1e-15);
    CHECK(std::abs(normal_cdf(-z) - normal_survival(z)) <= 1e-15);
    CHECK(e.cdf >= 0.0);
    CHECK(e.cdf <= 1.0);
  }
  double prev = 0.0;
  for (double z = -10.0; z <= 10.0; z += 1e-3) {
    double c = normal_cdf(z);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("Mills ratio") {
  for (double x : {0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0})
    CHECK(normal_survival(x) <= phi(x) / x);
  for (int i = 1; i <= 10000; ++i) {
    double x = i * 1e-3;
    CHECK(normal_survival(x) * x <= phi(x));
  }
}

TEST_CASE("normal quantile round trip") {
  for (double p : {1e-300, 1e-20, 1e-5, 0.025, 0.3, 0.5, 0.7, 0.975, 1 - 1e-12}) {
    double z = normal_quantile(p);
    if (p < 0.5)
      CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-13));
    else
      CHECK(normal_survival(z) == doctest::Approx(1.0 - p).epsilon(1e-4));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("tail moment closed forms") {
  for (double d : {-2.0, 0.0, 3.0}) CHECK(tail_moment(1, d) == phi(d));
  for (double d = -10.0; d <= 10.0; d += 0.25) {
    double p = phi(d), s = normal_survival(d);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    CHECK(rel(tail_moment(2, d), d * p + s) <= 1e-12);
    CHECK(rel(tail_moment(3, d), (d * d + 2) * p) <= 1e-12);
    CHECK(rel(tail_moment(4, d), (d * d * d + 3 * d) * p + 3 * s) <= 1e-12);
    double d2 = d * d;
    CHECK(rel(tail_moment(6, d), (d2 * d2 * d + 5 * d2 * d + 15 * d) * p + 15 * s) <= 1e-12);
  }
  CHECK_THROWS_AS(tail_moment(13, 0.0), DomainError);
  CHECK_THROWS_AS(tail_moment(-1, 0.0), DomainError);
}

TEST_CASE("tail moment recursion against quadrature") {
  for (int j = 0; j <= kMaxTailMomentOrder; ++j) {
    for (double d = -10.0; d <= 10.0; d += 0.5) {
      double q = moment_quadrature(j, d);
      double r = tail_moment(j, d);
      INFO("j=" << j << " d=" << d);
      CHECK(std::abs(r - q) <= 1e-12 * std::abs(q));
    }
  }
}

TEST_CASE("Riemann-sum tail coefficients") {
  CHECK(riemann_coefficient(1, 0.0) == 4.0);
  CHECK(riemann_coefficient(2, 1.0) == 8.0);
  CHECK(riemann_coefficient(3, 2.0) == 60.0);
  CHECK(riemann_coefficient(4, 2.0) == 144.0);
  CHECK(riemann_coefficient(6, 1.0) == 168.0);
  CHECK_THROWS_AS(riemann_coefficient(5, 1.0), DomainError);
  CHECK_THROWS_AS(riemann_bound(1, -0.5), DomainError);

  CHECK(4 * tail_moment(1, 0.0) <= riemann_bound(1, 0.0));
  CHECK(4 * moment_quadrature(2, 2.0) <= riemann_bound(2, 2.0));
  CHECK(4 * moment_quadrature(6, 5.0) <= riemann_bound(6, 5.0));

  for (int j : {1, 2, 3, 4, 6}) {
    RiemannCheck c = check_riemann_bound(j);
    INFO("j=" << j << " worst " << c.worst_ratio << " at " << c.worst_d);
    CHECK(c.passed);
    CHECK(c.points == 1001);
    CHECK(c.worst_ratio <= 1.0);
  }
}

TEST_CASE("sup constants") {
  SupConstantsReport r = sup_constants_check();
  CHECK(r.all_passed());
  CHECK(r.items[0].sup <= 15.0);
  CHECK(r.items[1].sup <= 5.0);
  CHECK(r.items[2].sup == doctest::Approx(kInvSqrt2Pi).epsilon(1e-12));
  CHECK(std::abs(r.items[2].argmax) <= 1e-6);
  CHECK(r.items[3].sup <= 20800.0);

  // endpoint value of the first function at z = 0
  CHECK(phi(0.0) + normal_survival(0.0) == doctest::Approx(0.5 + kInvSqrt2Pi));
  // the tail integral at d = -1, by quadrature
  double integral = 4 * (normal_survival(-1.0) + moment_quadrature(12, -1.0));
  CHECK(integral <= 20800.0);
  CHECK(r.items[3].sup == doctest::Approx(integral).epsilon(1e-9));
}

TEST_CASE("Lindelof factorial remainder") {
  StirlingExpansion s1 = stirling_lindelof(1);
  CHECK(s1.lambda_n == doctest::Approx(-0.0022713).epsilon(1e-4));
  CHECK(s1.lambda_bound == doctest::Approx(1.0 / 360));
  CHECK(s1.within_bound());
  CHECK(std::abs(stirling_lindelof(10).lambda_n) <= 1.0 / 360000);
  CHECK(std::abs(stirling_lindelof(10000).lambda_n) <= 1.0 / 360e12);
  CHECK_THROWS_AS(stirling_lindelof(0), DomainError);
  for (long n = 1; n <= 10000; ++n) {
    StirlingExpansion s = stirling_lindelof(n);
    if (!s.within_bound()) FAIL("n=" << n << " lambda=" << s.lambda_n);
  }
}

TEST_CASE("log-factorial remainder against lgamma in 200 bits") {
  for (long n : {1L, 2L, 7L, 30L, 31L, 100L, 12345L, 10000000L, 4000000000L}) {
    mpfr_t g, t;
    mpfr_inits2(200, g, t, static_cast<mpfr_ptr>(nullptr));
    int sign = 0;
    mpfr_set_si(g, n + 1, MPFR_RNDN);
    mpfr_lgamma(g, &sign, g, MPFR_RNDN);
    mpfr_set_si(t, n, MPFR_RNDN);
    mpfr_log(t, t, MPFR_RNDN);
    mpfr_mul_d(t, t, n + 0.5, MPFR_RNDN);
    mpfr_sub(g, g, t, MPFR_RNDN);
    mpfr_add_si(g, g, n, MPFR_RNDN);
    mpfr_const_pi(t, MPFR_RNDN);
    mpfr_mul_ui(t, t, 2, MPFR_RNDN);
    mpfr_log(t, t, MPFR_RNDN);
    mpfr_div_ui(t, t, 2, MPFR_RNDN);
    mpfr_sub(g, g, t, MPFR_RNDN);
    long double ref = mpfr_get_ld(g, MPFR_RNDN);
    mpfr_clears(g, t, static_cast<mpfr_ptr>(nullptr));
    long double got = log_factorial_remainder(n);
    INFO("n=" << n);
    CHECK(std::fabs(static_cast<double>(got - ref)) <=
          static_cast<double>(log_factorial_remainder_error(n)) + 1e-300);
    CHECK(std::fabs(static_cast<double>(got - ref)) <= 1e-17);
  }
}

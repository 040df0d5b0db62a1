#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "tusnady/binomial_exact.hpp"
#include "tusnady/continuity_correction.hpp"
#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"

using namespace tusnady;

namespace {

// c*(a) with every coefficient formed as an exact rational in x = p/q and the
// polynomial in delta_tilde evaluated in 256-bit arithmetic.
double c_star_oracle(long m, long p, long q, double a) {
  mpq_class x(p, q), s2 = x * (1 - x);
  mpq_class t1 = (1 - 2 * x) / 6;
  mpq_class lin = mpq_class(1, 36) - s2 / 36;
  mpq_class cub = mpq_class(-5, 72) + 7 * s2 / 36;
  mpfr_t d, sx, r, u;
  mpfr_inits2(256, d, sx, r, u, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_q(sx, s2.get_mpq_t(), MPFR_RNDN);
  mpfr_sqrt(sx, sx, MPFR_RNDN);
  // delta_tilde = (a - 1/2 - m x) / (sqrt(m) sigma_x)
  mpq_class centred = mpq_class(static_cast<long>(std::lround(2 * a)) - 1, 2) - m * x;
  mpfr_set_q(d, centred.get_mpq_t(), MPFR_RNDN);
  mpfr_set_si(u, m, MPFR_RNDN);
  mpfr_sqrt(u, u, MPFR_RNDN);
  mpfr_div(d, d, u, MPFR_RNDN);
  mpfr_div(d, d, sx, MPFR_RNDN);
  // tier2 = (lin d + cub d^3) / sigma_x, scaled by m^{-1/2}
  mpfr_pow_ui(r, d, 3, MPFR_RNDN);
  mpfr_mul_q(r, r, cub.get_mpq_t(), MPFR_RNDN);
  mpfr_t l;
  mpfr_init2(l, 256);
  mpfr_mul_q(l, d, lin.get_mpq_t(), MPFR_RNDN);
  mpfr_add(r, r, l, MPFR_RNDN);
  mpfr_div(r, r, sx, MPFR_RNDN);
  mpfr_div(r, r, u, MPFR_RNDN);
  // tier1 = t1 (d^2 - 1)
  mpfr_sqr(l, d, MPFR_RNDN);
  mpfr_sub_ui(l, l, 1, MPFR_RNDN);
  mpfr_mul_q(l, l, t1.get_mpq_t(), MPFR_RNDN);
  mpfr_add(r, r, l, MPFR_RNDN);
  mpfr_add_d(r, r, 0.5, MPFR_RNDN);
  double v = mpfr_get_d(r, MPFR_RNDN);
  mpfr_clears(d, sx, r, u, l, static_cast<mpfr_ptr>(nullptr));
  return v;
}

double max_measured(const VerificationReport& r, const std::string& id) {
  double worst = 0.0;
  for (const auto& rec : r.records)
    if (rec.check_id == id && rec.outcome != Outcome::skipped) worst = std::max(worst, rec.measured);
  return worst;
}

}  // namespace

TEST_CASE("c* at x = 1/2") {
  BinomialModel model(1000, Rational(1, 2));
  CorrectionValue centre = c_star(model, 500.5);
  CHECK(centre.delta_tilde == 0.0);
  CHECK(centre.c_star == 0.5);
  for (long a = 450; a <= 551; ++a) {
    CorrectionValue v = c_star(model, static_cast<double>(a));
    double d = v.delta_tilde;
    CHECK(v.tier1 == 0.0);
    CHECK(v.c_star == doctest::Approx(0.5 + (d - d * d * d) / (24 * std::sqrt(1000.0))).epsilon(1e-15));
    CHECK(v.c_star == v.tier0 + v.tier1 + v.tier2 / std::sqrt(1000.0));
  }
}

TEST_CASE("c* against the rational-coefficient oracle") {
  BinomialModel model(10000, Rational(1, 3));
  CorrectionValue v = c_star(model, 3400);
  CHECK(v.delta_tilde == doctest::Approx(66.16666666666667 / std::sqrt(20000.0 / 9)).epsilon(1e-14));
  CHECK(v.tier1 == doctest::Approx((1.0 / 18) * (v.delta_tilde * v.delta_tilde - 1)).epsilon(1e-14));
  CHECK(std::abs(v.c_star - c_star_oracle(10000, 1, 3, 3400)) <= 1e-14);
  for (auto [p, q] : {std::pair{1L, 3L}, {2L, 5L}, {7L, 10L}, {1L, 2L}}) {
    BinomialModel mq(4321, Rational(p, q));
    BulkWindow w = bulk_window(mq);
    for (long a = w.k_min; a <= w.k_max; a += 7)
      CHECK(std::abs(c_star(mq, static_cast<double>(a)).c_star - c_star_oracle(4321, p, q, a)) <= 1e-14);
  }
}

TEST_CASE("c* magnitude") {
  for (long m : {1000L, 10000L, 100000L}) {
    for (auto x : {Rational(1, 2), Rational(1, 3), Rational(2, 5)}) {
      BinomialModel model(m, x);
      double tau = minimal_tau(model);
      BulkWindow w = bulk_window(model);
      for (long a = w.k_min; a <= w.k_max; ++a) {
        CorrectionValue v = c_star(model, static_cast<double>(a));
        double d = std::abs(v.delta_tilde);
        if (!(std::abs(v.c_star - 0.5) <= tau * (1 + d * d * d))) FAIL("m=" << m << " a=" << a);
      }
    }
  }
}

TEST_CASE("admissibility examples") {
  AdmissibilityCheck a = admissibility(1000, 2.0);
  CHECK(a.cond_size);
  CHECK(a.size_needed == 1000.0);
  CHECK(a.exp_lhs == doctest::Approx(328 * std::exp(-10.0 / 16)).epsilon(1e-12));
  CHECK(a.exp_lhs == doctest::Approx(175.5).epsilon(1e-3));
  CHECK(a.exp_rhs == doctest::Approx(75.0).epsilon(1e-12));
  CHECK_FALSE(a.cond_exp);
  CHECK_FALSE(a.admissible());
  CHECK(a.budget == doctest::Approx(32e6 * std::pow(1000.0, -1.5)));

  AdmissibilityCheck b = admissibility(10000, 2.0);
  CHECK(b.exp_lhs == doctest::Approx(85.3).epsilon(2e-3));
  CHECK(b.exp_rhs == doctest::Approx(750000 * std::pow(1e4, -4.0 / 3)).epsilon(1e-12));
  CHECK(b.exp_rhs == doctest::Approx(3.48).epsilon(2e-3));
  CHECK_FALSE(b.admissible());

  AdmissibilityCheck c = admissibility(1000000, 2.0);
  CHECK(c.exp_lhs == doctest::Approx(328 * std::exp(-100.0 / 16)).epsilon(1e-12));
  CHECK(c.exp_rhs == doctest::Approx(7.5e-3).epsilon(1e-12));
  CHECK_FALSE(c.admissible());
  CHECK(c.describe().find("fails") != std::string::npos);

  CHECK(admissibility(1000, 20.0).size_needed == doctest::Approx(std::pow(2.0, 1.5) * 8000));
  CHECK_FALSE(admissibility(1000, 20.0).cond_size);
  CHECK_THROWS_AS(admissibility(1000, 1.5), DomainError);
  CHECK_THROWS_AS(admissibility(0, 2.0), DomainError);
}

TEST_CASE("first admissible m") {
  std::int64_t m2 = first_admissible_m(2.0);
  CHECK(m2 == 10944022);
  CHECK(admissibility(m2, 2.0).admissible());
  CHECK_FALSE(admissibility(m2 - 1, 2.0).admissible());
  // brute-force check near the transition and across scales below it
  for (std::int64_t m = m2 - 200; m < m2; ++m) CHECK_FALSE(admissibility(m, 2.0).admissible());
  for (std::int64_t m = 1; m < m2; m = m * 3 / 2 + 1) CHECK_FALSE(admissibility(m, 2.0).admissible());
  std::int64_t m3 = first_admissible_m(3.0);
  CHECK(m3 == 76456927);
  CHECK(admissibility(m3, 3.0).admissible());
  CHECK_FALSE(admissibility(m3 - 1, 3.0).admissible());
}

TEST_CASE("wrong tails and hypotheses are errors") {
  BinomialModel model(1000, Rational(1, 2));
  auto message = [&](std::int64_t a, double tau, TailForm form) {
    try {
      tail_approx(model, a, tau, form);
    } catch (const PreconditionError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(499, 2.0, TailForm::survival).find("use the cdf form") != std::string::npos);
  CHECK(message(501, 2.0, TailForm::cdf).find("survival") != std::string::npos);
  CHECK(message(498, 2.0, TailForm::cdf_reflect).find("cdf form") != std::string::npos);
  CHECK(message(500, 2.0, TailForm::survival_reflect).find("survival form") != std::string::npos);
  CHECK(message(560, 2.0, TailForm::survival).find("in bulk") != std::string::npos);
  CHECK(message(550, 2.0, TailForm::cdf_reflect).find("a+1 in bulk") != std::string::npos);
  CHECK(message(500, 1.0, TailForm::survival).find("tau >= 2") != std::string::npos);
  CHECK(message(500, 2.0, TailForm::survival).empty());
  CHECK_THROWS_AS(survival_approx(BinomialModel(1000, Rational(1, 4)), 260, 2.0), PreconditionError);
  CHECK_NOTHROW(survival_approx(BinomialModel(1000, Rational(1, 4)), 260, 4.0));
  CHECK(tail_applies(model, 500, TailForm::survival));
  CHECK(tail_applies(model, 500, TailForm::cdf));
  CHECK(tail_applies(model, 499, TailForm::cdf_reflect));
  CHECK(tail_applies(model, 499, TailForm::survival_reflect));
  CHECK_FALSE(tail_applies(model, 498, TailForm::cdf_reflect));
}

TEST_CASE("tail examples against exact values") {
  BinomialModel h4(10000, Rational(1, 2));
  for (long a : {5000L, 5200L}) {
    double err = std::abs(survival_exact(h4, a).as_real - survival_approx(h4, a, 2.0));
    CHECK(err <= 32.0);
    CHECK(err <= 1e-4);
  }

  BinomialModel t5(100000, Rational(1, 3));
  long a = 100000 / 3 + 1 + 500;
  ExactSweep sweep(t5, a, a, ExactConfig{100000});
  double err = std::abs(sweep.at(a).survival - survival_approx(t5, a, 3.0));
  CHECK(err <= 1e6 * 243 * std::pow(1e5, -1.5));
  CHECK(err <= 1e-8);

  BinomialModel f(10000, Rational(2, 5));
  double e2 = std::abs(cdf_exact(f, 3900).as_real - cdf_approx(f, 3900, 2.5));
  CHECK(e2 <= 1e6 * std::pow(2.5, 5) * 1e-6);
  CHECK(e2 <= 1e-3);
  double e2m = std::abs(cdf_exact(f, 3900).as_real - tail_approx(f, 3900, 2.5, TailForm::cdf_mirror));
  CHECK(e2m <= 1e-7);

  BinomialModel k(1000, Rational(1, 2));
  double exact = cdf_exact(k, 500).as_real;
  double v2 = cdf_approx(k, 500, 2.0);
  double v2r = tail_approx(k, 500, 2.0, TailForm::cdf_reflect);
  CHECK(std::abs(v2 - exact) <= 1e-4);
  CHECK(std::abs(v2r - exact) <= 1e-4);
}

TEST_CASE("x = 1/2 reflection of the approximants") {
  for (long m : {1000L, 10000L}) {
    BinomialModel model(m, Rational(1, 2));
    BulkWindow w = bulk_window(model);
    for (long a = w.k_min; a <= m / 2; ++a) {
      CHECK(std::abs(cdf_approx(model, a, 2.0) - survival_approx(model, m - a, 2.0)) <= 2e-15);
      CHECK(tail_approx(model, a, 2.0, TailForm::cdf_mirror) == doctest::Approx(cdf_approx(model, a, 2.0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("survival approximation is nonincreasing across the bulk") {
  for (auto x : {Rational(1, 2), Rational(1, 3), Rational(2, 5)}) {
    BinomialModel model(20000, x);
    BulkWindow w = bulk_window(model);
    double prev = 2.0;
    for (long a = w.k_min; a <= w.k_max; ++a) {
      if (!tail_applies(model, a, TailForm::survival)) continue;
      double v = survival_approx(model, a, minimal_tau(model));
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("full sweep on the acceptance grid") {
  for (long m : {1000L, 10000L, 100000L}) {
    for (auto x : {Rational(1, 2), Rational(1, 3)}) {
      BinomialModel model(m, x);
      VerificationReport r = verify_continuity(model, minimal_tau(model));
      INFO("m=" << m << " x=" << x.str());
      CHECK(r.count(Outcome::fail) == 0);
      CHECK(r.count(Provenance::paper_bound, Outcome::pass) > 0);
      CHECK(r.count(Provenance::regression_guard, Outcome::pass) == 1);
      CHECK_FALSE(r.notes.empty());  // admissibility fails below 10944022
      CHECK(max_measured(r, "continuity.survival") <= 1e-4);
      CHECK(max_measured(r, "continuity.cdf_mirror") <= 1e-4);
    }
  }
  BinomialModel centre(1000, Rational(1, 2));
  VerificationReport r = verify_continuity(centre, 2.0);
  bool found = false;
  for (const auto& rec : r.records) {
    if (rec.check_id != "continuity.guard") continue;
    found = true;
    CHECK(*rec.a == 500);
    CHECK(rec.allowed == doctest::Approx(1e-4));
    CHECK(rec.measured <= 1e-4);
    double direct = std::abs(survival_exact(centre, 500).as_real - survival_approx(centre, 500, 2.0));
    CHECK(rec.measured == doctest::Approx(direct).epsilon(1e-9).scale(1e-17));
  }
  CHECK(found);
}

TEST_CASE("reflected cdf form for x != 1/2 decays like m^{-1/2}; mirror form does not") {
  double printed[2], mirrored[2];
  long ms[2] = {1000, 100000};
  for (int i = 0; i < 2; ++i) {
    BinomialModel model(ms[i], Rational(1, 3));
    VerificationReport r = verify_continuity(model, 3.0);
    printed[i] = max_measured(r, "continuity.cdf");
    mirrored[i] = max_measured(r, "continuity.cdf_mirror");
  }
  CHECK(printed[0] / printed[1] == doctest::Approx(10.0).epsilon(0.1));
  CHECK(mirrored[0] / mirrored[1] > 300.0);
  CHECK(mirrored[1] < 1e-8);
}

TEST_CASE("corollary") {
  CorollaryValue c0 = corollary_half(1000, 0.0);
  CHECK(c0.s == 0.5);
  CHECK(c0.a == 500);
  BinomialModel k(1000, Rational(1, 2));
  CHECK(std::abs(c0.approx - cdf_exact(k, 500).as_real) <= 1e-4);
  CHECK(c0.bound == doctest::Approx(32e6 * std::pow(1000.0, -1.5)));

  CorollaryValue cn = corollary_half(1000, -0.3);
  CHECK(cn.s == -0.5);
  CHECK(cn.a == 499);
  CHECK(cn.approx < 0.5);

  CorollaryValue c40 = corollary_half(10000, 40.0);
  BinomialModel k4(10000, Rational(1, 2));
  double err = std::abs(c40.approx - cdf_exact(k4, 5040).as_real);
  CHECK(err <= std::min(c40.bound, 1e-4));

  double s = 40.5, m = 10000;
  double manual = normal_cdf(((1 - 1 / (12 * m)) * s + s * s * s / (3 * m * m)) / (std::sqrt(m) / 2));
  CHECK(c40.approx == doctest::Approx(manual).epsilon(1e-15));

  CHECK(corollary_t_limit(1000) == doctest::Approx(49.0));
  CHECK_NOTHROW(corollary_half(1000, 49.0));
  CHECK_THROWS_AS(corollary_half(1000, 49.01), DomainError);
  CHECK_THROWS_AS(corollary_half(1000, -49.01), DomainError);
  CHECK_THROWS_AS(corollary_half(999, 0.0), DomainError);

  for (long mm : {1000L, 10000L}) {
    VerificationReport r = verify_corollary(mm, 50);
    CHECK(r.count(Outcome::fail) == 0);
    CHECK(r.count(Provenance::paper_bound, Outcome::pass) == 50);
    CHECK(r.count(Provenance::regression_guard, Outcome::pass) == 50);
    CHECK(r.count(Provenance::oracle_instrument, Outcome::pass) == 50);
    if (mm == 1000) CHECK(max_measured(r, "corollary.guard") <= 1e-4);
  }
}

TEST_CASE("corollary equals the general correction at x = 1/2") {
  for (long m : {1000L, 4000L, 10000L}) {
    BinomialModel model(m, Rational(1, 2));
    double lim = corollary_t_limit(m);
    for (double t = -lim; t <= lim; t += lim / 37) {
      CorollaryValue c = corollary_half(m, t);
      TailForm form = tail_applies(model, c.a, TailForm::cdf_reflect) ? TailForm::cdf_reflect : TailForm::cdf;
      double general = tail_approx(model, c.a, 2.0, form);
      INFO("m=" << m << " t=" << t << " a=" << c.a);
      CHECK(std::abs(c.approx - general) <= 1e-13);
    }
  }
}

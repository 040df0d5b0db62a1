#include "tusnady/binomial_exact.hpp"

#include <mpfr.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "mpfr_value.hpp"
#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"

namespace tusnady {

using detail::MpfrValue;

namespace {

void require_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) {
    throw DomainError(std::string(what) + ": x must lie in (0, 1)");
  }
}

void require_trials(std::int64_t m, const char* what) {
  if (m < 1) throw DomainError(std::string(what) + ": m must be >= 1");
}

const Rational& require_rational(const BinomialModel& model, const char* what) {
  if (!model.exact_x()) {
    throw DomainError(std::string(what) + ": exact mode needs a rational x; use the real-valued path");
  }
  return *model.exact_x();
}

void require_ceiling(const BinomialModel& model, const ExactConfig& config, const char* what) {
  if (model.m() > config.ceiling) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: m = %lld exceeds the exact-mode ceiling %lld; use pmf_real/cdf_real",
                  what, static_cast<long long>(model.m()), static_cast<long long>(config.ceiling));
    throw DomainError(buf);
  }
}

mpz_class to_mpz(std::int64_t v) {
  mpz_class r;
  mpz_set_si(r.get_mpz_t(), static_cast<long>(v));
  return r;
}

mpz_class power(std::int64_t base, std::int64_t e) {
  mpz_class r;
  mpz_pow_ui(r.get_mpz_t(), to_mpz(base).get_mpz_t(), static_cast<unsigned long>(e));
  return r;
}

// Numerators N_k = C(m,k) p^k (q-p)^{m-k} over the common denominator q^m.
class NumeratorStream {
 public:
  NumeratorStream(std::int64_t m, const Rational& x)
      : m_(m), p_(static_cast<unsigned long>(x.num)), r_(static_cast<unsigned long>(x.den - x.num)) {
    current_ = power(x.den - x.num, m);
  }

  std::int64_t k() const { return k_; }
  const mpz_class& value() const { return current_; }

  void advance() {
    mpz_mul_ui(current_.get_mpz_t(), current_.get_mpz_t(), static_cast<unsigned long>(m_ - k_));
    mpz_mul_ui(current_.get_mpz_t(), current_.get_mpz_t(), p_);
    mpz_divexact_ui(current_.get_mpz_t(), current_.get_mpz_t(), static_cast<unsigned long>(k_ + 1) * r_);
    ++k_;
  }

 private:
  std::int64_t m_;
  unsigned long p_;
  unsigned long r_;
  std::int64_t k_ = 0;
  mpz_class current_;
};

double ratio_to_double(const mpz_class& num, const mpz_class& den) {
  MpfrValue n(128), d(128);
  mpfr_set_z(n.get(), num.get_mpz_t(), MPFR_RNDN);
  mpfr_set_z(d.get(), den.get_mpz_t(), MPFR_RNDN);
  mpfr_div(n.get(), n.get(), d.get(), MPFR_RNDN);
  return n.to_double();
}

ExactProbability make_probability(mpq_class q) {
  q.canonicalize();
  ExactProbability out;
  out.as_real = to_double(q);
  out.value = std::move(q);
  return out;
}

// Sum of N_k over k in [0, a] (0 <= a <= m).
mpz_class partial_sum(std::int64_t m, const Rational& x, std::int64_t a) {
  NumeratorStream stream(m, x);
  mpz_class sum = stream.value();
  while (stream.k() < a) {
    stream.advance();
    sum += stream.value();
  }
  return sum;
}

long double bd0(long double x, long double np) {
  const long double diff = x - np;
  if (std::fabs(diff) < 0.1L * (x + np)) {
    long double v = diff / (x + np);
    long double s = diff * v;
    long double ej = 2.0L * x * v;
    const long double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const long double s1 = s + ej / static_cast<long double>(2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

void require_real_args(std::int64_t m, double x, const char* what) {
  require_trials(m, what);
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": x must be finite");
  require_unit_open(x, what);
}

std::int64_t cf_iteration_limit(long double a, long double b) {
  return 1000 + static_cast<std::int64_t>(20.0L * std::sqrt(a + b));
}

[[noreturn]] void throw_nonconvergence(const char* what, long double a, long double b, long double y,
                                       std::int64_t iters, long double last) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: incomplete-beta continued fraction did not converge (a=%.17Lg, b=%.17Lg, x=%.17Lg, "
                "iterations=%lld, last |delta-1|=%.3Lg)",
                what, a, b, y, static_cast<long long>(iters), last);
  throw EvaluationError(buf);
}

// Modified Lentz evaluation of the incomplete-beta continued fraction
// (the factor multiplying x^a (1-x)^b / (a B(a,b))).
long double beta_cf(long double a, long double b, long double y) {
  constexpr long double tiny = std::numeric_limits<long double>::min() * 16;
  constexpr long double eps = std::numeric_limits<long double>::epsilon();
  const long double qab = a + b;
  const long double qap = a + 1.0L;
  const long double qam = a - 1.0L;
  long double c = 1.0L;
  long double d = 1.0L - qab * y / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0L / d;
  long double h = d;
  const std::int64_t limit = cf_iteration_limit(a, b);
  long double last = 0.0L;
  for (std::int64_t i = 1; i <= limit; ++i) {
    const long double n = static_cast<long double>(i);
    const long double n2 = 2.0L * n;
    long double aa = n * (b - n) * y / ((qam + n2) * (a + n2));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    h *= d * c;
    aa = -(a + n) * (qab + n) * y / ((a + n2) * (qap + n2));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    const long double del = d * c;
    h *= del;
    last = std::fabs(del - 1.0L);
    if (last <= 2.0L * eps) return h;
  }
  throw_nonconvergence("cdf_real", a, b, y, limit, last);
}

// P(X <= a) = x pmf(a) CF(m-a, a+1; 1-x); converges fast when 1-x < (m-a+1)/(m+3).
long double lower_tail_cf(std::int64_t m, double x, std::int64_t a) {
  const long double pref = static_cast<long double>(x) * std::exp(log_pmf_real(m, x, a));
  if (pref == 0.0L) return 0.0L;
  return pref * beta_cf(static_cast<long double>(m - a), static_cast<long double>(a + 1),
                        1.0L - static_cast<long double>(x));
}

// P(X >= a) = (1-x) pmf(a) CF(a, m-a+1; x); converges fast when x < (a+1)/(m+3).
long double upper_tail_cf(std::int64_t m, double x, std::int64_t a) {
  const long double pref = (1.0L - static_cast<long double>(x)) * std::exp(log_pmf_real(m, x, a));
  if (pref == 0.0L) return 0.0L;
  return pref * beta_cf(static_cast<long double>(a), static_cast<long double>(m - a + 1),
                        static_cast<long double>(x));
}

bool lower_regime(std::int64_t m, double x, std::int64_t a) {
  // 1 - x < (m - a + 1) / (m + 3)
  return (1.0L - static_cast<long double>(x)) * static_cast<long double>(m + 3) <
         static_cast<long double>(m - a + 1);
}

// High-precision counterparts.
constexpr mpfr_prec_t kHpBits = 256;

void hp_log_pmf(MpfrValue& out, std::int64_t m, const MpfrValue& x, const MpfrValue& one_minus_x,
                std::int64_t k) {
  MpfrValue t(kHpBits), u(kHpBits);
  int sign = 0;
  mpfr_set_si(t.get(), static_cast<long>(m + 1), MPFR_RNDN);
  mpfr_lgamma(out.get(), &sign, t.get(), MPFR_RNDN);
  mpfr_set_si(t.get(), static_cast<long>(k + 1), MPFR_RNDN);
  mpfr_lgamma(u.get(), &sign, t.get(), MPFR_RNDN);
  mpfr_sub(out.get(), out.get(), u.get(), MPFR_RNDN);
  mpfr_set_si(t.get(), static_cast<long>(m - k + 1), MPFR_RNDN);
  mpfr_lgamma(u.get(), &sign, t.get(), MPFR_RNDN);
  mpfr_sub(out.get(), out.get(), u.get(), MPFR_RNDN);
  if (k > 0) {
    mpfr_log(u.get(), x.get(), MPFR_RNDN);
    mpfr_mul_si(u.get(), u.get(), static_cast<long>(k), MPFR_RNDN);
    mpfr_add(out.get(), out.get(), u.get(), MPFR_RNDN);
  }
  if (m - k > 0) {
    mpfr_log(u.get(), one_minus_x.get(), MPFR_RNDN);
    mpfr_mul_si(u.get(), u.get(), static_cast<long>(m - k), MPFR_RNDN);
    mpfr_add(out.get(), out.get(), u.get(), MPFR_RNDN);
  }
}

void hp_beta_cf(MpfrValue& h, std::int64_t a_int, std::int64_t b_int, const MpfrValue& y) {
  MpfrValue a(kHpBits), b(kHpBits), c(kHpBits), d(kHpBits), aa(kHpBits), t(kHpBits), tiny(kHpBits);
  mpfr_set_si(a.get(), static_cast<long>(a_int), MPFR_RNDN);
  mpfr_set_si(b.get(), static_cast<long>(b_int), MPFR_RNDN);
  mpfr_set_ui_2exp(tiny.get(), 1, -2000, MPFR_RNDN);
  auto guard = [&](MpfrValue& v) {
    if (mpfr_cmpabs(v.get(), tiny.get()) < 0) mpfr_set(v.get(), tiny.get(), MPFR_RNDN);
  };
  auto step = [&]() {
    // d = 1 / (1 + aa d); c = 1 + aa / c; h *= d c
    mpfr_mul(d.get(), d.get(), aa.get(), MPFR_RNDN);
    mpfr_add_ui(d.get(), d.get(), 1, MPFR_RNDN);
    guard(d);
    mpfr_div(c.get(), aa.get(), c.get(), MPFR_RNDN);
    mpfr_add_ui(c.get(), c.get(), 1, MPFR_RNDN);
    guard(c);
    mpfr_ui_div(d.get(), 1, d.get(), MPFR_RNDN);
    mpfr_mul(t.get(), d.get(), c.get(), MPFR_RNDN);
    mpfr_mul(h.get(), h.get(), t.get(), MPFR_RNDN);
  };

  mpfr_set_ui(c.get(), 1, MPFR_RNDN);
  // d = 1 / (1 - (a+b) y / (a+1))
  mpfr_add(t.get(), a.get(), b.get(), MPFR_RNDN);
  mpfr_mul(t.get(), t.get(), y.get(), MPFR_RNDN);
  mpfr_add_ui(aa.get(), a.get(), 1, MPFR_RNDN);
  mpfr_div(t.get(), t.get(), aa.get(), MPFR_RNDN);
  mpfr_ui_sub(d.get(), 1, t.get(), MPFR_RNDN);
  guard(d);
  mpfr_ui_div(d.get(), 1, d.get(), MPFR_RNDN);
  mpfr_set(h.get(), d.get(), MPFR_RNDN);

  MpfrValue threshold(kHpBits);
  mpfr_set_ui_2exp(threshold.get(), 1, -(kHpBits - 8), MPFR_RNDN);
  const std::int64_t limit = 4 * cf_iteration_limit(static_cast<long double>(a_int), static_cast<long double>(b_int));
  for (std::int64_t i = 1; i <= limit; ++i) {
    const long n = static_cast<long>(i);
    // aa = n (b - n) y / ((a - 1 + 2n)(a + 2n))
    mpfr_sub_si(aa.get(), b.get(), n, MPFR_RNDN);
    mpfr_mul_si(aa.get(), aa.get(), n, MPFR_RNDN);
    mpfr_mul(aa.get(), aa.get(), y.get(), MPFR_RNDN);
    mpfr_add_si(t.get(), a.get(), 2 * n - 1, MPFR_RNDN);
    mpfr_div(aa.get(), aa.get(), t.get(), MPFR_RNDN);
    mpfr_add_si(t.get(), a.get(), 2 * n, MPFR_RNDN);
    mpfr_div(aa.get(), aa.get(), t.get(), MPFR_RNDN);
    step();
    // aa = -(a + n)(a + b + n) y / ((a + 2n)(a + 1 + 2n))
    mpfr_add_si(aa.get(), a.get(), n, MPFR_RNDN);
    mpfr_add(t.get(), a.get(), b.get(), MPFR_RNDN);
    mpfr_add_si(t.get(), t.get(), n, MPFR_RNDN);
    mpfr_mul(aa.get(), aa.get(), t.get(), MPFR_RNDN);
    mpfr_mul(aa.get(), aa.get(), y.get(), MPFR_RNDN);
    mpfr_neg(aa.get(), aa.get(), MPFR_RNDN);
    mpfr_add_si(t.get(), a.get(), 2 * n, MPFR_RNDN);
    mpfr_div(aa.get(), aa.get(), t.get(), MPFR_RNDN);
    mpfr_add_si(t.get(), a.get(), 2 * n + 1, MPFR_RNDN);
    mpfr_div(aa.get(), aa.get(), t.get(), MPFR_RNDN);
    step();
    // t holds the last d c
    mpfr_sub_ui(t.get(), t.get(), 1, MPFR_RNDN);
    if (mpfr_cmpabs(t.get(), threshold.get()) <= 0) return;
  }
  throw_nonconvergence("cdf_real_hp", static_cast<long double>(a_int), static_cast<long double>(b_int),
                       mpfr_get_ld(y.get(), MPFR_RNDN), limit, mpfr_get_ld(t.get(), MPFR_RNDN));
}

}  // namespace

// ---------------------------------------------------------------------------
// Rational / model

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0 || numerator <= 0 || numerator >= denominator) {
    throw DomainError("Rational: need 0 < num < den, got " + std::to_string(numerator) + "/" +
                      std::to_string(denominator));
  }
  const std::int64_t g = std::gcd(numerator, denominator);
  num = numerator / g;
  den = denominator / g;
}

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

Rational Rational::parse(std::string_view text) {
  auto parse_int = [&](std::string_view s, std::int64_t& out) {
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return !s.empty() && res.ec == std::errc() && res.ptr == last;
  };
  const auto bad = [&]() { return DomainError("cannot parse probability '" + std::string(text) + "'"); };

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t p = 0, q = 0;
    if (!parse_int(text.substr(0, slash), p) || !parse_int(text.substr(slash + 1), q)) throw bad();
    return Rational(p, q);
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    std::int64_t v = 0;
    if (!parse_int(text, v)) throw bad();
    return Rational(v, 1);
  }
  const auto whole = text.substr(0, dot);
  const auto frac = text.substr(dot + 1);
  if (frac.empty() || frac.size() > 15) throw bad();
  std::int64_t w = 0;
  if (!whole.empty() && !parse_int(whole, w)) throw bad();
  std::int64_t f = 0;
  if (!parse_int(frac, f) || f < 0) throw bad();
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  return Rational(w * scale + f, scale);
}

BinomialModel::BinomialModel(std::int64_t m, Rational x)
    : BinomialModel(m, x.value(), x) {}

BinomialModel BinomialModel::from_real(std::int64_t m, double x) {
  if (!std::isfinite(x)) throw DomainError("BinomialModel: x must be finite");
  return BinomialModel(m, x, std::nullopt);
}

BinomialModel::BinomialModel(std::int64_t m, double x, std::optional<Rational> exact)
    : m_(m), x_(x), exact_x_(std::move(exact)) {
  require_trials(m, "BinomialModel");
  require_unit_open(x, "BinomialModel");
  if (exact_x_) {
    const long double p = static_cast<long double>(exact_x_->num);
    const long double q = static_cast<long double>(exact_x_->den);
    mean_ = static_cast<double>(static_cast<long double>(m) * p / q);
    sigma_ = static_cast<double>(std::sqrt(static_cast<long double>(m) * p * (q - p)) / q);
    sigma_x_ = static_cast<double>(std::sqrt(p * (q - p)) / q);
  } else {
    const long double xl = x;
    mean_ = static_cast<double>(static_cast<long double>(m) * xl);
    sigma_x_ = static_cast<double>(std::sqrt(xl * (1.0L - xl)));
    sigma_ = static_cast<double>(std::sqrt(static_cast<long double>(m) * xl * (1.0L - xl)));
  }
}

std::string BinomialModel::x_label() const {
  if (exact_x_) return exact_x_->str();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x_);
  return buf;
}

int BinomialModel::compare_to_mean(double a) const {
  long double diff = 0.0L;
  if (exact_x_) {
    diff = static_cast<long double>(a) * static_cast<long double>(exact_x_->den) -
           static_cast<long double>(m_) * static_cast<long double>(exact_x_->num);
  } else {
    diff = static_cast<long double>(a) - static_cast<long double>(m_) * static_cast<long double>(x_);
  }
  return (diff > 0) - (diff < 0);
}

double delta(const BinomialModel& model, double y) {
  long double centred = 0.0L;
  if (const auto& ex = model.exact_x()) {
    const long double q = static_cast<long double>(ex->den);
    centred = (static_cast<long double>(y) * q - static_cast<long double>(model.m()) * static_cast<long double>(ex->num)) / q;
  } else {
    centred = static_cast<long double>(y) - static_cast<long double>(model.m()) * static_cast<long double>(model.x());
  }
  return static_cast<double>(centred / static_cast<long double>(model.sigma()));
}

// ---------------------------------------------------------------------------
// Exact mode

double to_double(const mpq_class& q) {
  MpfrValue v(53);
  mpfr_set_q(v.get(), q.get_mpq_t(), MPFR_RNDN);
  return v.to_double();
}

ExactProbability pmf_exact(const BinomialModel& model, std::int64_t k, const ExactConfig& config) {
  const Rational& x = require_rational(model, "pmf_exact");
  require_ceiling(model, config, "pmf_exact");
  const std::int64_t m = model.m();
  if (k < 0 || k > m) throw DomainError("pmf_exact: k must lie in [0, m]");
  mpz_class binom;
  mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(m), static_cast<unsigned long>(k));
  mpz_class num = binom * power(x.num, k) * power(x.den - x.num, m - k);
  return make_probability(mpq_class(num, power(x.den, m)));
}

ExactProbability cdf_exact(const BinomialModel& model, std::int64_t a, const ExactConfig& config) {
  const Rational& x = require_rational(model, "cdf_exact");
  require_ceiling(model, config, "cdf_exact");
  const std::int64_t m = model.m();
  if (a < 0) return make_probability(mpq_class(0));
  if (a >= m) return make_probability(mpq_class(1));
  const mpz_class den = power(x.den, m);
  return make_probability(mpq_class(partial_sum(m, x, a), den));
}

ExactProbability survival_exact(const BinomialModel& model, std::int64_t a, const ExactConfig& config) {
  const Rational& x = require_rational(model, "survival_exact");
  require_ceiling(model, config, "survival_exact");
  const std::int64_t m = model.m();
  if (a <= 0) return make_probability(mpq_class(1));
  if (a > m) return make_probability(mpq_class(0));
  const mpz_class den = power(x.den, m);
  return make_probability(mpq_class(den - partial_sum(m, x, a - 1), den));
}

ExactSweep::ExactSweep(const BinomialModel& model, std::int64_t k_lo, std::int64_t k_hi,
                       const ExactConfig& config)
    : k_lo_(std::max<std::int64_t>(k_lo, 0)), k_hi_(std::min(k_hi, model.m())) {
  const Rational& x = require_rational(model, "ExactSweep");
  require_ceiling(model, config, "ExactSweep");
  if (k_lo_ > k_hi_) throw DomainError("ExactSweep: empty window");
  const std::int64_t m = model.m();
  const mpz_class den = power(x.den, m);

  constexpr mpfr_prec_t log_bits = 192;
  MpfrValue log_den(log_bits), tmp(log_bits);
  mpfr_set_z(tmp.get(), den.get_mpz_t(), MPFR_RNDN);
  mpfr_log(log_den.get(), tmp.get(), MPFR_RNDN);

  points_.reserve(static_cast<std::size_t>(k_hi_ - k_lo_ + 1));
  NumeratorStream stream(m, x);
  mpz_class below = 0;  // sum of N_j for j < k
  for (;;) {
    const std::int64_t k = stream.k();
    if (k >= k_lo_) {
      ExactPoint pt;
      pt.k = k;
      const mpz_class upto = below + stream.value();
      pt.pmf = ratio_to_double(stream.value(), den);
      pt.cdf = ratio_to_double(upto, den);
      pt.survival = ratio_to_double(den - below, den);
      if (sgn(stream.value()) == 0) {
        pt.log_pmf = -std::numeric_limits<long double>::infinity();
      } else {
        mpfr_set_z(tmp.get(), stream.value().get_mpz_t(), MPFR_RNDN);
        mpfr_log(tmp.get(), tmp.get(), MPFR_RNDN);
        mpfr_sub(tmp.get(), tmp.get(), log_den.get(), MPFR_RNDN);
        pt.log_pmf = tmp.to_long_double();
      }
      points_.push_back(pt);
    }
    if (k == k_hi_) break;
    below += stream.value();
    stream.advance();
  }
}

const ExactPoint& ExactSweep::at(std::int64_t k) const {
  if (k < k_lo_ || k > k_hi_) throw DomainError("ExactSweep::at: k outside the sweep window");
  return points_[static_cast<std::size_t>(k - k_lo_)];
}

ExactCdfTable::ExactCdfTable(const BinomialModel& model, const ExactConfig& config) {
  const Rational& x = require_rational(model, "ExactCdfTable");
  require_ceiling(model, config, "ExactCdfTable");
  const std::int64_t m = model.m();
  denominator_ = power(x.den, m);
  cumulative_.reserve(static_cast<std::size_t>(m + 1));
  NumeratorStream stream(m, x);
  mpz_class sum = stream.value();
  cumulative_.push_back(sum);
  while (stream.k() < m) {
    stream.advance();
    sum += stream.value();
    cumulative_.push_back(sum);
  }
}

mpq_class ExactCdfTable::cdf(std::int64_t k) const {
  if (k < 0) return mpq_class(0);
  if (k >= m()) return mpq_class(1);
  mpq_class q(cumulative_[static_cast<std::size_t>(k)], denominator_);
  q.canonicalize();
  return q;
}

std::int64_t ExactCdfTable::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("ExactCdfTable::quantile: p must lie in (0, 1]");
  const mpq_class target(p);
  // smallest k with S_k * den(p) >= num(p) * D
  const mpz_class rhs = target.get_num() * denominator_;
  std::int64_t lo = 0, hi = m();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (cumulative_[static_cast<std::size_t>(mid)] * target.get_den() >= rhs) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::int64_t ExactCdfTable::quantile_from_survival(double s) const {
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("ExactCdfTable::quantile_from_survival: s must lie in [0, 1)");
  const mpq_class target(s);
  // smallest k with (D - S_k) * den(s) <= num(s) * D
  const mpz_class rhs = target.get_num() * denominator_;
  std::int64_t lo = 0, hi = m();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if ((denominator_ - cumulative_[static_cast<std::size_t>(mid)]) * target.get_den() <= rhs) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Real mode

long double log_pmf_real(std::int64_t m, double x, std::int64_t k) {
  require_real_args(m, x, "log_pmf_real");
  if (k < 0 || k > m) return -std::numeric_limits<long double>::infinity();
  const long double xl = x;
  const long double ml = static_cast<long double>(m);
  if (k == 0) return ml * std::log1p(-xl);
  if (k == m) return ml * std::log(xl);
  const long double kl = static_cast<long double>(k);
  const long double rest = ml - kl;
  constexpr long double two_pi = 6.283185307179586476925286766559005768L;
  return log_factorial_remainder(static_cast<long>(m)) - log_factorial_remainder(static_cast<long>(k)) -
         log_factorial_remainder(static_cast<long>(m - k)) - bd0(kl, ml * xl) - bd0(rest, ml * (1.0L - xl)) +
         0.5L * std::log(ml / (two_pi * kl * rest));
}

double pmf_real(std::int64_t m, double x, std::int64_t k) {
  return static_cast<double>(std::exp(log_pmf_real(m, x, k)));
}

double cdf_real(std::int64_t m, double x, std::int64_t a) {
  require_real_args(m, x, "cdf_real");
  if (a < 0) return 0.0;
  if (a >= m) return 1.0;
  if (lower_regime(m, x, a)) return static_cast<double>(lower_tail_cf(m, x, a));
  return static_cast<double>(1.0L - upper_tail_cf(m, x, a + 1));
}

double survival_real(std::int64_t m, double x, std::int64_t a) {
  require_real_args(m, x, "survival_real");
  if (a <= 0) return 1.0;
  if (a > m) return 0.0;
  if (lower_regime(m, x, a - 1)) return static_cast<double>(1.0L - lower_tail_cf(m, x, a - 1));
  return static_cast<double>(upper_tail_cf(m, x, a));
}

double cdf_real_hp(std::int64_t m, double x, std::int64_t a) {
  require_real_args(m, x, "cdf_real_hp");
  if (a < 0) return 0.0;
  if (a >= m) return 1.0;
  MpfrValue xv(kHpBits, x), one_minus_x(kHpBits), logp(kHpBits), h(kHpBits), result(kHpBits);
  mpfr_ui_sub(one_minus_x.get(), 1, xv.get(), MPFR_RNDN);
  if (lower_regime(m, x, a)) {
    hp_log_pmf(logp, m, xv, one_minus_x, a);
    hp_beta_cf(h, m - a, a + 1, one_minus_x);
    mpfr_exp(result.get(), logp.get(), MPFR_RNDN);
    mpfr_mul(result.get(), result.get(), xv.get(), MPFR_RNDN);
    mpfr_mul(result.get(), result.get(), h.get(), MPFR_RNDN);
  } else {
    hp_log_pmf(logp, m, xv, one_minus_x, a + 1);
    hp_beta_cf(h, a + 1, m - a, xv);
    mpfr_exp(result.get(), logp.get(), MPFR_RNDN);
    mpfr_mul(result.get(), result.get(), one_minus_x.get(), MPFR_RNDN);
    mpfr_mul(result.get(), result.get(), h.get(), MPFR_RNDN);
    mpfr_ui_sub(result.get(), 1, result.get(), MPFR_RNDN);
  }
  return result.to_double();
}

// ---------------------------------------------------------------------------
// Bulk and X_tau

bool in_bulk(const BinomialModel& model, std::int64_t k) {
  if (k < 0 || k > model.m()) return false;
  const mpz_class m = to_mpz(model.m());
  if (const auto& ex = model.exact_x()) {
    // |k q - m p|^3 <= m^2 min(p, q - p)^3
    mpz_class dev = to_mpz(k) * to_mpz(ex->den) - m * to_mpz(ex->num);
    dev = abs(dev);
    const mpz_class lim = to_mpz(std::min(ex->num, ex->den - ex->num));
    return dev * dev * dev <= m * m * lim * lim * lim;
  }
  const long double xl = model.x();
  const long double ml = static_cast<long double>(model.m());
  const long double dev = std::fabs(static_cast<long double>(k) - ml * xl);
  const long double lim = std::min(xl, 1.0L - xl);
  return dev * dev * dev <= ml * ml * lim * lim * lim;
}

BulkWindow bulk_window(const BinomialModel& model) {
  const double m = static_cast<double>(model.m());
  const double radius = std::cbrt(m * m) * std::min(model.x(), 1.0 - model.x());
  auto clampk = [&](double v) {
    return static_cast<std::int64_t>(std::clamp(v, 0.0, m));
  };
  BulkWindow w;
  w.k_min = clampk(std::ceil(model.mean() - radius));
  w.k_max = clampk(std::floor(model.mean() + radius));
  while (w.k_min > 0 && in_bulk(model, w.k_min - 1)) --w.k_min;
  while (w.k_min <= w.k_max && !in_bulk(model, w.k_min)) ++w.k_min;
  while (w.k_max < model.m() && in_bulk(model, w.k_max + 1)) ++w.k_max;
  while (w.k_max >= w.k_min && !in_bulk(model, w.k_max)) --w.k_max;
  if (w.k_min > w.k_max) throw EvaluationError("bulk_window: empty window");
  return w;
}

bool xtau_member(double x, double tau) {
  if (!std::isfinite(x)) throw DomainError("xtau_member: x must be finite");
  require_unit_open(x, "xtau_member");
  return std::max(1.0 / x, 1.0 / (1.0 - x)) <= tau;
}

bool xtau_member(const Rational& x, double tau) {
  // den / num <= tau and den / (den - num) <= tau
  const long double t = tau;
  const long double p = static_cast<long double>(x.num);
  const long double q = static_cast<long double>(x.den);
  return q <= t * p && q <= t * (q - p);
}

double xtau_ratio(double x) {
  require_unit_open(x, "xtau_ratio");
  return std::max(x / (1.0 - x), (1.0 - x) / x);
}

double minimal_tau(const BinomialModel& model) {
  if (const auto& ex = model.exact_x()) {
    const double q = static_cast<double>(ex->den);
    return std::max({2.0, q / static_cast<double>(ex->num), q / static_cast<double>(ex->den - ex->num)});
  }
  const double x = model.x();
  return std::max({2.0, 1.0 / x, 1.0 / (1.0 - x)});
}

}  // namespace tusnady

#include "tusnady/gaussian_kernel.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mpfr_value.hpp"
#include "tusnady/errors.hpp"

namespace tusnady {
namespace {

constexpr double kInvSqrt2Hi = 0.7071067811865476;
constexpr double kInvSqrt2Lo = -4.833646656726457e-17;
constexpr double kTwoOverSqrtPi = 1.1283791670955126;

void require_finite(double z, const char* what) {
  if (!std::isfinite(z)) {
    throw DomainError(std::string(what) + ": non-finite argument");
  }
}

// z / sqrt(2) as an unevaluated sum hi + lo.
struct ScaledArg {
  double hi;
  double lo;
};

ScaledArg scale_by_inv_sqrt2(double z) {
  const double hi = z * kInvSqrt2Hi;
  const double lo = std::fma(z, kInvSqrt2Hi, -hi) + z * kInvSqrt2Lo;
  return {hi, lo};
}

// First-order correction for the rounding of the argument: erfc'(x) = -2/sqrt(pi) exp(-x^2).
double erfc_of(ScaledArg x) {
  return std::erfc(x.hi) - x.lo * kTwoOverSqrtPi * std::exp(-x.hi * x.hi);
}

double erf_of(ScaledArg x) {
  return std::erf(x.hi) + x.lo * kTwoOverSqrtPi * std::exp(-x.hi * x.hi);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct Located {
  double sup;
  double argmax;
};

// Grid maximisation followed by golden-section refinement in the two cells
// adjacent to the best grid point.
template <class F>
Located locate_sup(F f, double lo, double hi, double step) {
  const long n = std::lround((hi - lo) / step);
  double best = -std::numeric_limits<double>::infinity();
  double best_z = lo;
  for (long i = 0; i <= n; ++i) {
    const double z = (i == n) ? hi : lo + static_cast<double>(i) * step;
    const double v = f(z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  double a = std::max(lo, best_z - step);
  double b = std::min(hi, best_z + step);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  for (double z : {a, b, 0.5 * (a + b)}) {
    const double v = f(z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  return {best, best_z};
}

}  // namespace

double phi(double z) {
  require_finite(z, "phi");
  // z^2 = hi^2 + (z - hi)(z + hi) with hi^2 exact.
  const double hi = std::trunc(z * 16.0) / 16.0;
  const double rest = (z - hi) * (z + hi);
  return kInvSqrt2Pi * std::exp(-0.5 * hi * hi) * std::exp(-0.5 * rest);
}

double normal_survival(double z) {
  require_finite(z, "normal_survival");
  if (z >= 1.0) {
    return clamp01(0.5 * erfc_of(scale_by_inv_sqrt2(z)));
  }
  if (z <= -1.0) {
    return clamp01(1.0 - 0.5 * erfc_of(scale_by_inv_sqrt2(-z)));
  }
  return clamp01(0.5 - 0.5 * erf_of(scale_by_inv_sqrt2(z)));
}

double normal_cdf(double z) {
  require_finite(z, "normal_cdf");
  return normal_survival(-z);
}

NormalEval normal_eval(double z) {
  return {z, phi(z), normal_cdf(z), normal_survival(z)};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Halley step; the residual is taken on the smaller tail.
    const double e = (x <= 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_survival(x);
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double tail_moment(int j, double d) {
  if (j < 0 || j > kMaxTailMomentOrder) {
    throw DomainError("tail_moment: unsupported order " + std::to_string(j));
  }
  require_finite(d, "tail_moment");
  const double density = phi(d);
  double prev = (j % 2 == 0) ? normal_survival(d) : density;  // M_0 or M_1
  for (int i = (j % 2 == 0) ? 2 : 3; i <= j; i += 2) {
    prev = std::pow(d, i - 1) * density + (i - 1) * prev;
  }
  return prev;
}

double riemann_coefficient(int j, double d) {
  const double ad = std::abs(d);
  switch (j) {
    case 1: return 4.0;
    case 2: return 4.0 * (1.0 + ad);
    case 3: return 12.0 * (1.0 + ad * ad);
    case 4: return 16.0 * (1.0 + ad * ad * ad);
    case 6: return 84.0 * (1.0 + std::pow(ad, 5));
    default:
      throw DomainError("riemann_coefficient: order must be one of 1, 2, 3, 4, 6");
  }
}

double riemann_bound(int j, double d) {
  if (d < 0.0) {
    throw DomainError("riemann_bound: d must be non-negative");
  }
  return (phi(d) + normal_survival(d)) * riemann_coefficient(j, d);
}

RiemannCheck check_riemann_bound(int j, double d_max, double step) {
  RiemannCheck out;
  out.j = j;
  const long n = std::lround(d_max / step);
  for (long i = 0; i <= n; ++i) {
    const double d = static_cast<double>(i) * step;
    const double ratio = 4.0 * tail_moment(j, d) / riemann_bound(j, d);
    if (ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_d = d;
    }
    ++out.points;
  }
  out.passed = out.worst_ratio <= 1.0;
  return out;
}

bool SupConstantsReport::all_passed() const {
  return std::all_of(items.begin(), items.end(), [](const SupConstant& c) { return c.passed; });
}

SupConstantsReport sup_constants_check() {
  constexpr double kStep = 1e-3;
  constexpr double kFar = 40.0;
  SupConstantsReport report;

  const auto mills_weighted = [](double z) {
    return (1.0 + std::pow(z, 7)) * (phi(z) + normal_survival(z));
  };
  const auto sixth_weighted = [](double z) { return (1.0 + std::pow(std::abs(z), 6)) * phi(z); };
  const auto hermite2 = [](double z) { return std::abs(z * z - 1.0) * phi(z); };
  const auto twelfth_tail = [](double d) {
    return 4.0 * (normal_survival(d) + tail_moment(12, d));
  };

  const auto fill = [](SupConstant& item, Located where) {
    item.sup = where.sup;
    item.argmax = where.argmax;
    item.passed = item.equality ? std::abs(item.sup - item.allowed) <= item.tolerance
                                : item.sup <= item.allowed;
  };

  report.items[0] = {"sup_{z>=0} (1+z^7)(phi+Psi)", 0, 0, 15.0, false, 0.0, false};
  fill(report.items[0], locate_sup(mills_weighted, 0.0, kFar, kStep));

  report.items[1] = {"sup_{z>=-1} (1+|z|^6) phi", 0, 0, 5.0, false, 0.0, false};
  fill(report.items[1], locate_sup(sixth_weighted, -1.0, kFar, kStep));

  report.items[2] = {"sup_z |z^2-1| phi", 0, 0, kInvSqrt2Pi, true, 1e-9, false};
  fill(report.items[2], locate_sup(hermite2, -kFar, kFar, kStep));

  report.items[3] = {"sup_{d>=-1} 4 int_d (1+y^12) phi", 0, 0, 20800.0, false, 0.0, false};
  fill(report.items[3], locate_sup(twelfth_tail, -1.0, kFar, kStep));

  return report;
}

StirlingExpansion stirling_lindelof(long n) {
  if (n < 1) {
    throw DomainError("stirling_lindelof: n must be a positive integer");
  }
  mpz_class factorial;
  mpz_fac_ui(factorial.get_mpz_t(), static_cast<unsigned long>(n));
  const auto bits = mpz_sizeinbase(factorial.get_mpz_t(), 2);
  const auto precision = static_cast<mpfr_prec_t>(128 + 2 * std::bit_width(bits));

  detail::MpfrValue log_fact(precision);
  mpfr_set_z(log_fact.get(), factorial.get_mpz_t(), MPFR_RNDN);
  mpfr_log(log_fact.get(), log_fact.get(), MPFR_RNDN);

  // 1/2 log(2 pi) + (n + 1/2) log n - n + 1/(12 n)
  detail::MpfrValue approx(precision);
  detail::MpfrValue tmp(precision);
  mpfr_const_pi(tmp.get(), MPFR_RNDN);
  mpfr_mul_ui(tmp.get(), tmp.get(), 2, MPFR_RNDN);
  mpfr_log(tmp.get(), tmp.get(), MPFR_RNDN);
  mpfr_div_ui(approx.get(), tmp.get(), 2, MPFR_RNDN);

  mpfr_set_si(tmp.get(), n, MPFR_RNDN);
  mpfr_log(tmp.get(), tmp.get(), MPFR_RNDN);
  detail::MpfrValue half_n(precision);
  mpfr_set_si(half_n.get(), 2 * n + 1, MPFR_RNDN);
  mpfr_div_ui(half_n.get(), half_n.get(), 2, MPFR_RNDN);
  mpfr_mul(tmp.get(), tmp.get(), half_n.get(), MPFR_RNDN);
  mpfr_add(approx.get(), approx.get(), tmp.get(), MPFR_RNDN);
  mpfr_sub_si(approx.get(), approx.get(), n, MPFR_RNDN);

  mpfr_set_ui(tmp.get(), 1, MPFR_RNDN);
  mpfr_div_si(tmp.get(), tmp.get(), 12 * n, MPFR_RNDN);
  mpfr_add(approx.get(), approx.get(), tmp.get(), MPFR_RNDN);

  detail::MpfrValue lambda(precision);
  mpfr_sub(lambda.get(), log_fact.get(), approx.get(), MPFR_RNDN);

  StirlingExpansion out;
  out.n = n;
  out.log_factorial_exact = log_fact.to_double();
  out.lambda_n = lambda.to_double();
  const double nd = static_cast<double>(n);
  out.lambda_bound = 1.0 / (360.0 * nd * nd * nd);
  return out;
}

namespace {
constexpr long kSeriesThreshold = 30;
}

long double log_factorial_remainder(long n) {
  if (n < 1) {
    throw DomainError("log_factorial_remainder: n must be a positive integer");
  }
  const long double x = static_cast<long double>(n);
  if (n <= kSeriesThreshold) {
    long double factorial = 1.0L;
    for (long i = 2; i <= n; ++i) {
      factorial *= static_cast<long double>(i);
    }
    return std::log(factorial) -
           (kHalfLog2PiL + (x + 0.5L) * std::log(x) - x);
  }
  // 1/(12n) - 1/(360n^3) + 1/(1260n^5) - 1/(1680n^7) + 1/(1188n^9)
  const long double inv = 1.0L / x;
  const long double inv2 = inv * inv;
  return inv *
         (1.0L / 12 - inv2 * (1.0L / 360 - inv2 * (1.0L / 1260 - inv2 * (1.0L / 1680 - inv2 / 1188))));
}

long double log_factorial_remainder_error(long n) {
  if (n < 1) {
    throw DomainError("log_factorial_remainder_error: n must be a positive integer");
  }
  const long double x = static_cast<long double>(n);
  constexpr long double eps = std::numeric_limits<long double>::epsilon();
  if (n <= kSeriesThreshold) {
    // Cancellation against a value of size log n! <= (n + 1) log n.
    return 16 * eps * (1.0L + (x + 1.0L) * std::log(x + 1.0L));
  }
  // First omitted term of the alternating Stirling series, plus rounding.
  return 691.0L / (360360.0L * std::pow(x, 11)) + 8 * eps / x;
}

}  // namespace tusnady

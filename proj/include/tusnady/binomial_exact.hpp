#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tusnady {

/// Success probability held as an exact fraction num/den in lowest terms,
/// 0 < num < den.
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 2;

  Rational() = default;
  Rational(std::int64_t numerator, std::int64_t denominator);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  /// Accepts "p/q" or a finite decimal such as "0.25". Throws DomainError
  /// unless the value lies strictly inside (0, 1).
  static Rational parse(std::string_view text);

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Binomial(m, x) with sigma_{m,x} = sqrt(m x (1 - x)). Immutable.
class BinomialModel {
 public:
  BinomialModel(std::int64_t m, Rational x);

  /// Real-valued x. Exact-mode operations are unavailable for such a model.
  static BinomialModel from_real(std::int64_t m, double x);

  std::int64_t m() const noexcept { return m_; }
  double x() const noexcept { return x_; }
  const std::optional<Rational>& exact_x() const noexcept { return exact_x_; }
  double mean() const noexcept { return mean_; }
  double sigma() const noexcept { return sigma_; }
  /// sigma_x = sqrt(x (1 - x)), so that sigma = sqrt(m) sigma_x.
  double sigma_x() const noexcept { return sigma_x_; }
  std::string x_label() const;

  /// Sign of a - m x; exact when x is rational.
  int compare_to_mean(double a) const;

 private:
  BinomialModel(std::int64_t m, double x, std::optional<Rational> exact);

  std::int64_t m_;
  double x_;
  std::optional<Rational> exact_x_;
  double mean_;
  double sigma_;
  double sigma_x_;
};

/// Standardized coordinate delta_y = (y - m x) / sigma_{m,x}.
double delta(const BinomialModel& model, double y);

struct ExactProbability {
  mpq_class value;
  double as_real = 0.0;  // correctly rounded
};

struct ExactConfig {
  std::int64_t ceiling = 20000;
};

/// Exact rational pmf. Throws DomainError for k outside [0, m], for a model
/// without rational x, or for m above the configured ceiling (use pmf_real).
ExactProbability pmf_exact(const BinomialModel& model, std::int64_t k,
                           const ExactConfig& config = {});

/// P(X <= a), exact. Values of a outside [0, m] give 0 or 1.
ExactProbability cdf_exact(const BinomialModel& model, std::int64_t a,
                           const ExactConfig& config = {});

/// P(X >= a), exact.
ExactProbability survival_exact(const BinomialModel& model, std::int64_t a,
                                const ExactConfig& config = {});

/// Correctly rounded double of an exact rational.
double to_double(const mpq_class& q);

/// One row of an exact window sweep.
struct ExactPoint {
  std::int64_t k = 0;
  double pmf = 0.0;
  double cdf = 0.0;       // P(X <= k)
  double survival = 0.0;  // P(X >= k)
  long double log_pmf = 0.0L;  // from a high-precision logarithm of the exact pmf
};

/// Exact pmf/cdf/survival over a window [k_lo, k_hi], computed by streaming the
/// integer numerators C(m,k) p^k (q-p)^{m-k} with a common denominator q^m.
/// Memory is proportional to the window, so m may exceed the rational-table
/// ceiling; config.ceiling still bounds m.
class ExactSweep {
 public:
  ExactSweep(const BinomialModel& model, std::int64_t k_lo, std::int64_t k_hi,
             const ExactConfig& config);

  std::int64_t k_lo() const noexcept { return k_lo_; }
  std::int64_t k_hi() const noexcept { return k_hi_; }
  const ExactPoint& at(std::int64_t k) const;
  std::span<const ExactPoint> points() const noexcept { return points_; }

 private:
  std::int64_t k_lo_;
  std::int64_t k_hi_;
  std::vector<ExactPoint> points_;
};

/// Cumulative exact numerators for every k in [0, m]; used for quantiles by
/// exact comparison against a double probability.
class ExactCdfTable {
 public:
  explicit ExactCdfTable(const BinomialModel& model, const ExactConfig& config = {});

  std::int64_t m() const noexcept { return static_cast<std::int64_t>(cumulative_.size()) - 1; }
  mpq_class cdf(std::int64_t k) const;

  /// Smallest k with P(X <= k) >= p, p in (0, 1].
  std::int64_t quantile(double p) const;
  /// Smallest k with P(X > k) <= s, s in [0, 1); equals quantile(1 - s) exactly.
  std::int64_t quantile_from_survival(double s) const;

 private:
  std::vector<mpz_class> cumulative_;
  mpz_class denominator_;
};

/// log P(X = k) in extended precision via the saddle-point form
/// (log-factorial remainders plus the deviance terms).
long double log_pmf_real(std::int64_t m, double x, std::int64_t k);

double pmf_real(std::int64_t m, double x, std::int64_t k);

/// P(X <= a) through the continued fraction of the regularized incomplete
/// beta function. Throws EvaluationError if the fraction does not converge.
double cdf_real(std::int64_t m, double x, std::int64_t a);

/// P(X >= a), same method.
double survival_real(std::int64_t m, double x, std::int64_t a);

/// P(X <= a) with the same continued fraction carried out in 256-bit MPFR
/// arithmetic; used to re-resolve near ties.
double cdf_real_hp(std::int64_t m, double x, std::int64_t a);

/// Inclusive index range of the bulk
/// max{|delta_k/sqrt(m) sqrt((1-x)/x)|, |delta_k/sqrt(m) sqrt(x/(1-x))|} <= m^{-1/3}.
struct BulkWindow {
  std::int64_t k_min = 0;
  std::int64_t k_max = 0;

  bool contains(std::int64_t k) const noexcept { return k >= k_min && k <= k_max; }
  std::int64_t size() const noexcept { return k_max - k_min + 1; }
};

/// Bulk membership; an exact integer test when x is rational.
bool in_bulk(const BinomialModel& model, std::int64_t k);

BulkWindow bulk_window(const BinomialModel& model);

/// max{1/x, 1/(1-x)} <= tau. Throws DomainError unless 0 < x < 1.
bool xtau_member(double x, double tau);
bool xtau_member(const Rational& x, double tau);

/// max{x/(1-x), (1-x)/x}, which is at most tau whenever x is in X_tau.
double xtau_ratio(double x);

/// Smallest tau >= 2 with x in X_tau.
double minimal_tau(const BinomialModel& model);

}  // namespace tusnady

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tusnady/binomial_exact.hpp"
#include "tusnady/report.hpp"

namespace tusnady {

struct QuantileOptions {
  /// Rational-x models with m up to this use the exact cumulative table.
  std::int64_t exact_ceiling = 5000;
  /// Relative distance |cdf(k) - p| below which the real-mode answer is
  /// re-resolved with the 256-bit evaluation.
  double tie_tolerance = 1e-13;
};

struct QuantileResult {
  std::int64_t k = 0;
  bool near_tie = false;  // the real-mode comparison was re-resolved
  int evaluations = 0;    // cdf evaluations spent (real mode)
};

/// Generalized inverse F*(p) = min{k : F(k) >= p} of a Binomial cdf.
class QuantileFunction {
 public:
  explicit QuantileFunction(const BinomialModel& model, const QuantileOptions& options = {});

  const BinomialModel& model() const noexcept { return model_; }
  bool exact() const noexcept { return table_ != nullptr; }

  /// p in (0, 1]; p = 0 throws DomainError.
  QuantileResult at(double p) const;
  /// F*(1 - s) for s in [0, 1), without forming 1 - s.
  QuantileResult at_complement(double s) const;
  /// F*(Phi(z)), evaluated from whichever Gaussian tail is accurate.
  QuantileResult of_normal(double z) const;

 private:
  BinomialModel model_;
  QuantileOptions options_;
  std::shared_ptr<const ExactCdfTable> table_;
};

/// One-shot form of QuantileFunction(model, options).at(p).
QuantileResult quantile(const BinomialModel& model, double p, const QuantileOptions& options = {});

/// sqrt(2 pi) 20^6 / m <= sqrt(log m).
struct ThresholdCheck {
  std::int64_t m = 0;
  double left = 0.0;
  double right = 0.0;
  bool holds = false;
};

/// Throws DomainError for m < 2.
ThresholdCheck threshold_check(std::int64_t m);

/// Smallest m >= 2 with threshold_check(m).holds.
std::int64_t minimal_threshold_m();

/// 1/2 + 2 * 20^6 / m
double tusnady_bound(std::int64_t m);
/// 1/2 + (1/24) sqrt(log m / m) + |z|^3 / (24 sqrt(m)) + 2 * 20^6 / m
double tusnady_weak_bound(std::int64_t m, double z);

struct CouplingSample {
  double z = 0.0;
  std::int64_t x_m = 0;       // F*(Phi(z)) for Binomial(m, 1/2)
  double y_m = 0.0;           // m/2 + sqrt(m) z / 2
  double correction = 0.0;    // (z - z^3) / (24 sqrt(m))
  double residual = 0.0;      // x_m - y_m - correction
  double bound = 0.0;         // tusnady_bound(m)
  double weak_bound = 0.0;    // tusnady_weak_bound(m, z)
  bool near_tie = false;

  bool within_bound() const noexcept;
  bool within_weak_bound() const noexcept;  // |x_m - y_m| <= weak_bound
};

/// Coupled values for any m and z, without the bound's hypotheses.
/// `quantile` must describe Binomial(m, 1/2).
CouplingSample couple(const QuantileFunction& quantile, double z);

/// Checked form: throws PreconditionError when the threshold fails (message
/// carries both sides) or when |z| > sqrt(log m).
CouplingSample coupling_sample(std::int64_t m, double z, const QuantileOptions& options = {});

/// Solutions of s^3 / (3 m^2) + (1 - 1/(12 m)) s = z_tilde.
struct CubicInversion {
  std::int64_t m = 0;
  double z_tilde = 0.0;
  double s_cardano = 0.0;   // closed form, hyperbolic arrangement
  double s_newton = 0.0;    // Newton from s0 = z_tilde
  double s_taylor = 0.0;    // z_tilde + z_tilde/(12 m) - z_tilde^3/(3 m^2)
  double lagrange_bound = 0.0;      // (m^2|z| + m|z|^3 + |z|^5) / (3 m^4)
  double taylor_error_bound = 0.0;  // (log m)^{5/2} / m^{3/2}
  int newton_iterations = 0;
};

CubicInversion cubic_inverse(std::int64_t m, double z_tilde);

/// Cubic residual s^3/(3 m^2) + (1 - 1/(12 m)) s - z_tilde.
double cubic_residual(std::int64_t m, double z_tilde, double s);

/// The draw used for one omega: u from the first output of mt19937_64(seed)
/// mapped to ((u >> 11) + 0.5) 2^-53, then z = normal_quantile(u).
double figure1_draw(std::uint64_t seed);

struct Figure1Point {
  std::int64_t m = 0;
  double abs_residual = 0.0;
};

/// |X_m - Y_m - (z - z^3)/(24 sqrt(m))| for every m in [m_lo, m_hi] with one
/// fixed z (exact cdf tables, so m_hi is limited by the exact ceiling).
std::vector<Figure1Point> figure1_series(std::int64_t m_lo, std::int64_t m_hi, double z,
                                         std::int64_t exact_ceiling = 5000);

std::string figure1_csv(const std::vector<Figure1Point>& series);

/// n Chebyshev nodes on [-L, L] plus both endpoints, ascending, L = sqrt(log m).
std::vector<double> tusnady_z_grid(std::int64_t m, int n);

struct TusnadyOptions {
  int z_points = 64;
  unsigned workers = 1;
  QuantileOptions quantile;
};

/// Records "tusnady.residual" (|residual| vs bound) and "tusnady.weak" (|X - Y| vs
/// the weaker bound) per grid point. A violation of at most one integer unit
/// at a re-resolved near tie is reported as an oracle_instrument failure.
VerificationReport verify_tusnady(std::int64_t m, const TusnadyOptions& options = {});

}  // namespace tusnady

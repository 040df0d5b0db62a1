#include "tusnady/quantile_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"
#include "tusnady/parallel.hpp"

namespace tusnady {

namespace {

constexpr double kTwentyPow6 = 64000000.0;  // 20^6

bool near(double value, double target, double tol) { return std::fabs(value - target) <= tol * target; }

double hp_survival_after(std::int64_t m, double x, std::int64_t k) {
  // P(X > k)
  return 1.0 - cdf_real_hp(m, x, k);
}

}  // namespace

QuantileFunction::QuantileFunction(const BinomialModel& model, const QuantileOptions& options)
    : model_(model), options_(options) {
  if (model_.exact_x() && model_.m() <= options_.exact_ceiling) {
    table_ = std::make_shared<const ExactCdfTable>(model_, ExactConfig{options_.exact_ceiling});
  }
}

QuantileResult QuantileFunction::at(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in (0, 1]");
  QuantileResult out;
  if (table_) {
    out.k = table_->quantile(p);
    return out;
  }
  const std::int64_t m = model_.m();
  if (p == 1.0) {
    out.k = m;
    return out;
  }
  if (p > 0.5) return at_complement(1.0 - p);  // exact subtraction

  const double x = model_.x();
  std::int64_t lo = 0, hi = m;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    ++out.evaluations;
    if (cdf_real(m, x, mid) >= p) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::int64_t k = lo;
  const double at_k = cdf_real(m, x, k);
  const double below = k > 0 ? cdf_real(m, x, k - 1) : 0.0;
  out.evaluations += 2;
  if (near(at_k, p, options_.tie_tolerance) || near(below, p, options_.tie_tolerance)) {
    out.near_tie = true;
    while (k > 0 && cdf_real_hp(m, x, k - 1) >= p) --k;
    while (k < m && cdf_real_hp(m, x, k) < p) ++k;
  }
  out.k = k;
  return out;
}

QuantileResult QuantileFunction::at_complement(double s) const {
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("quantile: complement s must lie in [0, 1)");
  QuantileResult out;
  if (table_) {
    out.k = table_->quantile_from_survival(s);
    return out;
  }
  const std::int64_t m = model_.m();
  if (s == 0.0) {
    out.k = m;
    return out;
  }
  const double x = model_.x();
  // smallest k with P(X > k) <= s
  std::int64_t lo = 0, hi = m;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    ++out.evaluations;
    if (survival_real(m, x, mid + 1) <= s) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::int64_t k = lo;
  const double at_k = k < m ? survival_real(m, x, k + 1) : 0.0;
  const double below = survival_real(m, x, k);
  out.evaluations += 2;
  if (near(at_k, s, options_.tie_tolerance) || near(below, s, options_.tie_tolerance)) {
    out.near_tie = true;
    while (k > 0 && hp_survival_after(m, x, k - 1) <= s) --k;
    while (k < m && hp_survival_after(m, x, k) > s) ++k;
  }
  out.k = k;
  return out;
}

QuantileResult QuantileFunction::of_normal(double z) const {
  if (std::isnan(z)) throw DomainError("quantile: z must not be NaN");
  if (z > 0.0) return at_complement(normal_survival(z));
  const double p = normal_cdf(z);
  if (p == 0.0) return QuantileResult{};
  return at(p);
}

QuantileResult quantile(const BinomialModel& model, double p, const QuantileOptions& options) {
  return QuantileFunction(model, options).at(p);
}

ThresholdCheck threshold_check(std::int64_t m) {
  if (m < 2) throw DomainError("threshold_check: m must be >= 2");
  ThresholdCheck c;
  c.m = m;
  c.left = kSqrt2Pi * kTwentyPow6 / static_cast<double>(m);
  c.right = std::sqrt(std::log(static_cast<double>(m)));
  c.holds = c.left <= c.right;
  return c;
}

std::int64_t minimal_threshold_m() {
  // left side decreases and right side increases in m
  std::int64_t lo = 2, hi = std::int64_t{1} << 40;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (threshold_check(mid).holds) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

double tusnady_bound(std::int64_t m) { return 0.5 + 2.0 * kTwentyPow6 / static_cast<double>(m); }

double tusnady_weak_bound(std::int64_t m, double z) {
  const double md = static_cast<double>(m);
  const double az = std::fabs(z);
  return 0.5 + std::sqrt(std::log(md) / md) / 24.0 + az * az * az / (24.0 * std::sqrt(md)) + 2.0 * kTwentyPow6 / md;
}

bool CouplingSample::within_bound() const noexcept { return std::fabs(residual) <= bound; }

bool CouplingSample::within_weak_bound() const noexcept {
  return std::fabs(static_cast<double>(x_m) - y_m) <= weak_bound;
}

CouplingSample couple(const QuantileFunction& quantile, double z) {
  const std::int64_t m = quantile.model().m();
  const double md = static_cast<double>(m);
  const double root = std::sqrt(md);
  const QuantileResult q = quantile.of_normal(z);
  CouplingSample s;
  s.z = z;
  s.x_m = q.k;
  s.near_tie = q.near_tie;
  s.y_m = md / 2.0 + root * z / 2.0;
  s.correction = (z - z * z * z) / (24.0 * root);
  s.residual = (static_cast<double>(q.k) - md / 2.0) - root * z / 2.0 - s.correction;
  s.bound = tusnady_bound(m);
  s.weak_bound = tusnady_weak_bound(m, z);
  return s;
}

CouplingSample coupling_sample(std::int64_t m, double z, const QuantileOptions& options) {
  const ThresholdCheck t = threshold_check(m);
  if (!t.holds) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "coupling_sample: threshold sqrt(2 pi) 20^6 / m <= sqrt(log m) fails for m = %lld (%.17g > %.17g)",
                  static_cast<long long>(m), t.left, t.right);
    throw PreconditionError(buf);
  }
  if (!(std::fabs(z) <= t.right)) {
    throw PreconditionError("coupling_sample: |z| <= sqrt(log m) fails (out of bulk)");
  }
  return couple(QuantileFunction(BinomialModel(m, Rational(1, 2)), options), z);
}

double cubic_residual(std::int64_t m, double z_tilde, double s) {
  const double md = static_cast<double>(m);
  return s * s * s / (3.0 * md * md) + (1.0 - 1.0 / (12.0 * md)) * s - z_tilde;
}

CubicInversion cubic_inverse(std::int64_t m, double z_tilde) {
  if (m < 1) throw DomainError("cubic_inverse: m must be >= 1");
  if (!std::isfinite(z_tilde)) throw DomainError("cubic_inverse: z_tilde must be finite");
  const double md = static_cast<double>(m);
  CubicInversion out;
  out.m = m;
  out.z_tilde = z_tilde;

  // Cardano roots u and -B/u with u^3 = A + sqrt(A^2 + B^3), written as
  // u = sqrt(B) e^{theta/3}, theta = asinh(A / B^{3/2}).
  const double b = md * md - md / 12.0;
  const double root_b = std::sqrt(b);
  const double a = 1.5 * md * md * z_tilde;
  const double theta = std::asinh(a / (b * root_b));
  out.s_cardano = 2.0 * root_b * std::sinh(theta / 3.0);

  const double c = 1.0 - 1.0 / (12.0 * md);
  double s = z_tilde;
  const double tol = 1e-14 * (1.0 + std::fabs(z_tilde));
  for (int i = 0; i < 200; ++i) {
    const double f = cubic_residual(m, z_tilde, s);
    if (std::fabs(f) <= tol) break;
    const double step = f / (s * s / (md * md) + c);
    if (step == 0.0) break;
    s -= step;
    out.newton_iterations = i + 1;
  }
  out.s_newton = s;

  const double az = std::fabs(z_tilde);
  out.s_taylor = z_tilde + z_tilde / (12.0 * md) - z_tilde * z_tilde * z_tilde / (3.0 * md * md);
  out.lagrange_bound = (md * md * az + md * az * az * az + az * az * az * az * az) / (3.0 * md * md * md * md);
  out.taylor_error_bound = std::pow(std::log(md), 2.5) / std::pow(md, 1.5);
  return out;
}

double figure1_draw(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::uint64_t bits = gen();
  const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
  return normal_quantile(u);
}

std::vector<Figure1Point> figure1_series(std::int64_t m_lo, std::int64_t m_hi, double z, std::int64_t exact_ceiling) {
  if (m_lo < 1 || m_hi < m_lo) throw DomainError("figure1_series: need 1 <= m_lo <= m_hi");
  if (m_hi > exact_ceiling) throw DomainError("figure1_series: m_hi exceeds the exact ceiling");
  std::vector<Figure1Point> out;
  out.reserve(static_cast<std::size_t>(m_hi - m_lo + 1));
  const QuantileOptions opts{exact_ceiling, 1e-13};
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    const QuantileFunction f(BinomialModel(m, Rational(1, 2)), opts);
    out.push_back({m, std::fabs(couple(f, z).residual)});
  }
  return out;
}

std::string figure1_csv(const std::vector<Figure1Point>& series) {
  std::string out = "m,abs_residual\n";
  char buf[64];
  for (const auto& p : series) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(p.m), p.abs_residual);
    out += buf;
  }
  return out;
}

std::vector<double> tusnady_z_grid(std::int64_t m, int n) {
  if (m < 2) throw DomainError("tusnady_z_grid: m must be >= 2");
  if (n < 0) throw DomainError("tusnady_z_grid: point count must be >= 0");
  const double limit = std::sqrt(std::log(static_cast<double>(m)));
  std::vector<double> z{-limit, limit};
  for (int i = 0; i < n / 2; ++i) {
    const double node = limit * std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * n));
    z.push_back(node);
    z.push_back(-node);
  }
  if (n % 2 == 1) z.push_back(0.0);
  std::sort(z.begin(), z.end());
  return z;
}

VerificationReport verify_tusnady(std::int64_t m, const TusnadyOptions& options) {
  VerificationReport report;
  const ThresholdCheck t = threshold_check(m);
  VerificationRecord base;
  base.m = m;
  base.x = "1/2";
  if (!t.holds) {
    for (const char* id : {"tusnady.residual", "tusnady.weak"}) {
      VerificationRecord r = base;
      r.check_id = id;
      r.measured = t.left;
      r.allowed = t.right;
      r.outcome = Outcome::skipped;
      report.add(std::move(r));
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "tusnady m=%lld: skipped, threshold fails (%.6g > %.6g)",
                  static_cast<long long>(m), t.left, t.right);
    report.note(buf);
    return report;
  }

  const QuantileFunction f(BinomialModel(m, Rational(1, 2)), options.quantile);
  const std::vector<double> grid = tusnady_z_grid(m, options.z_points);
  std::vector<CouplingSample> samples(grid.size());
  parallel_for(grid.size(), options.workers, [&](std::size_t i) { samples[i] = couple(f, grid[i]); });

  std::size_t ties = 0;
  for (const auto& s : samples) {
    ties += s.near_tie ? 1 : 0;
    auto emit = [&](const char* id, double measured, double allowed) {
      VerificationRecord r = base;
      r.check_id = id;
      r.a = s.x_m;
      r.z = s.z;
      r.measured = measured;
      r.allowed = allowed;
      r.outcome = judge(measured, allowed);
      if (r.outcome == Outcome::fail && s.near_tie && measured <= allowed + 1.0) {
        r.provenance = Provenance::oracle_instrument;
      }
      report.add(std::move(r));
    };
    emit("tusnady.residual", std::fabs(s.residual), s.bound);
    emit("tusnady.weak", std::fabs(static_cast<double>(s.x_m) - s.y_m), s.weak_bound);
  }
  if (ties > 0) report.note("tusnady m=" + std::to_string(m) + ": " + std::to_string(ties) +
                            " grid point(s) re-resolved at a near tie");
  return report;
}

}  // namespace tusnady

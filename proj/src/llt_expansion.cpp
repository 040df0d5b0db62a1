#include "tusnady/llt_expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"

namespace tusnady {

namespace {

// delta_k and log sigma_{m,x} in extended precision.
struct Standardized {
  long double delta;
  long double log_sigma;
};

Standardized standardize(const BinomialModel& model, std::int64_t k) {
  const long double ml = static_cast<long double>(model.m());
  const long double kl = static_cast<long double>(k);
  if (const auto& ex = model.exact_x()) {
    const long double p = static_cast<long double>(ex->num);
    const long double q = static_cast<long double>(ex->den);
    const long double root = std::sqrt(ml * p * (q - p));
    return {(kl * q - ml * p) / root, std::log(root / q)};
  }
  const long double x = model.x();
  const long double sigma = std::sqrt(ml * x * (1.0L - x));
  return {(kl - ml * x) / sigma, std::log(sigma)};
}

double envelope(std::int64_t m, double tau, double delta) {
  return 12.0 * std::pow(tau, 5) * (1.0 + std::pow(std::fabs(delta), 12)) *
         std::pow(static_cast<double>(m), -1.5);
}

}  // namespace

double llt_brace_half(double x, double delta) {
  const long double xl = x;
  const long double r = (1.0L - xl) / xl;
  const long double d = delta;
  return static_cast<double>(-0.5L * d * (std::sqrt(r) - 1.0L / std::sqrt(r)) +
                             d * d * d / 6.0L * (xl * std::pow(r, 1.5L) - (1.0L - xl) * std::pow(r, -1.5L)));
}

double llt_brace_one(double x, double delta) {
  const long double xl = x;
  const long double y = 1.0L - xl;
  const long double r = y / xl;
  const long double s2 = xl * y;
  const long double d2 = static_cast<long double>(delta) * delta;
  const long double d4 = d2 * d2;
  const long double d6 = d4 * d2;
  return static_cast<double>(d2 / 8.0L * (3.0L * r - 2.0L + 3.0L / r) -
                             d4 / 12.0L * (2.0L * xl * r * r - 1.0L + 2.0L * y / (r * r)) +
                             d6 / 72.0L * (xl * xl * r * r * r - 2.0L * s2 + y * y / (r * r * r)) +
                             (1.0L - 1.0L / xl - 1.0L / y) / 12.0L);
}

std::string llt_precondition_failure(const BinomialModel& model, double tau) {
  char buf[160];
  if (!(tau >= 2.0)) {
    std::snprintf(buf, sizeof buf, "tau >= 2 fails (tau = %.17g)", tau);
    return buf;
  }
  const bool member = model.exact_x() ? xtau_member(*model.exact_x(), tau) : xtau_member(model.x(), tau);
  if (!member) {
    std::snprintf(buf, sizeof buf, "x in X_tau fails (x = %s, tau = %.17g)", model.x_label().c_str(), tau);
    return buf;
  }
  const double need = std::max(1000.0, std::pow(tau, 1.5));
  if (static_cast<double>(model.m()) < need) {
    std::snprintf(buf, sizeof buf, "m >= max(1000, tau^{3/2}) fails (m = %lld, need %.17g)",
                  static_cast<long long>(model.m()), need);
    return buf;
  }
  return {};
}

LltBreakdown llt_terms(const BinomialModel& model, std::int64_t k, double tau) {
  if (auto why = llt_precondition_failure(model, tau); !why.empty()) throw PreconditionError("llt_terms: " + why);
  if (!in_bulk(model, k)) {
    throw PreconditionError("llt_terms: k in bulk fails (k = " + std::to_string(k) + ")");
  }
  LltBreakdown out;
  out.k = k;
  out.delta = static_cast<double>(standardize(model, k).delta);
  out.term_m_half = llt_brace_half(model.x(), out.delta);
  out.term_m_one = llt_brace_one(model.x(), out.delta);
  const double m = static_cast<double>(model.m());
  out.prediction = out.leading + out.term_m_half / std::sqrt(m) + out.term_m_one / m;
  out.envelope = envelope(model.m(), tau, out.delta);
  return out;
}

VerificationReport verify_llt(const BinomialModel& model, double tau, const LltOptions& options) {
  VerificationReport report;
  VerificationRecord base;
  base.check_id = "llt.envelope";
  base.m = model.m();
  base.x = model.x_label();
  base.tau = tau;

  if (auto why = llt_precondition_failure(model, tau); !why.empty()) {
    VerificationRecord r = base;
    r.outcome = Outcome::skipped;
    report.add(std::move(r));
    report.note("llt m=" + std::to_string(model.m()) + " x=" + model.x_label() + ": skipped, " + why);
    return report;
  }

  const BulkWindow window = bulk_window(model);
  const std::int64_t m = model.m();
  const long double ml = static_cast<long double>(m);
  const bool exact = model.exact_x() && m <= options.exact_ceiling;
  std::optional<ExactSweep> sweep;
  if (exact) sweep.emplace(model, window.k_min, window.k_max, ExactConfig{options.exact_ceiling});

  for (std::int64_t k = window.k_min; k <= window.k_max; ++k) {
    const Standardized st = standardize(model, k);
    long double log_pmf = 0.0L;
    double budget = 0.0;
    if (exact) {
      log_pmf = sweep->at(k).log_pmf;
    } else {
      log_pmf = log_pmf_real(m, model.x(), k);
      const long double worst = std::max({log_factorial_remainder_error(static_cast<long>(m)),
                                          log_factorial_remainder_error(static_cast<long>(k)),
                                          log_factorial_remainder_error(static_cast<long>(m - k))});
      budget = static_cast<double>(3.0L * worst) + 1e-15;
    }
    // log of P / (phi(delta)/sigma)
    const long double log_ratio = log_pmf + st.delta * st.delta / 2.0L +
                                  kHalfLog2PiL + st.log_sigma;
    const long double ratio_minus_one = std::expm1(log_ratio);

    const double d = static_cast<double>(st.delta);
    const long double pred_minus_one = static_cast<long double>(llt_brace_half(model.x(), d)) / std::sqrt(ml) +
                                       static_cast<long double>(llt_brace_one(model.x(), d)) / ml;
    VerificationRecord r = base;
    r.a = k;
    r.z = d;
    r.measured = static_cast<double>(std::fabs(ratio_minus_one - pred_minus_one));
    r.allowed = envelope(m, tau, d) + budget;
    r.outcome = judge(r.measured, r.allowed);
    report.add(std::move(r));
  }
  return report;
}

}  // namespace tusnady

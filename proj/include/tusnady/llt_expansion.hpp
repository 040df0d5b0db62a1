#pragma once

#include <cstdint>

#include "tusnady/binomial_exact.hpp"
#include "tusnady/report.hpp"

namespace tusnady {

/// Three-tier expansion of P_{k,m}(x) / (phi(delta_k) / sigma_{m,x}).
struct LltBreakdown {
  std::int64_t k = 0;
  double delta = 0.0;
  double leading = 1.0;
  double term_m_half = 0.0;  // brace multiplying m^{-1/2}
  double term_m_one = 0.0;   // brace multiplying m^{-1}
  double prediction = 1.0;   // 1 + m^{-1/2} term_m_half + m^{-1} term_m_one
  double envelope = 0.0;     // 12 tau^5 (1 + |delta|^12) m^{-3/2}
};

/// The two braces as functions of (x, delta) alone.
double llt_brace_half(double x, double delta);
double llt_brace_one(double x, double delta);

/// Throws PreconditionError naming the failed hypothesis when k is outside the
/// bulk, x is not in X_tau, tau < 2, or m < max(1000, tau^{3/2}).
LltBreakdown llt_terms(const BinomialModel& model, std::int64_t k, double tau);

/// Expansion hypotheses as a message; empty when they hold (bulk not included).
std::string llt_precondition_failure(const BinomialModel& model, double tau);

struct LltOptions {
  /// Largest m handled by the exact sweep; above it the log-space pmf is used
  /// and its certified error is added to the allowed envelope.
  std::int64_t exact_ceiling = 100000;
};

/// One record per bulk k, check_id "llt.envelope", measured = |exact ratio -
/// prediction|, allowed = envelope (+ oracle budget above the exact ceiling).
/// Hypothesis failures yield a single skipped record and a note.
VerificationReport verify_llt(const BinomialModel& model, double tau, const LltOptions& options = {});

}  // namespace tusnady

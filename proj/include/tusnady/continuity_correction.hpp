#pragma once

#include <cstdint>
#include <string>

#include "tusnady/binomial_exact.hpp"
#include "tusnady/report.hpp"

namespace tusnady {

/// c*(a) = tier0 + tier1 + m^{-1/2} tier2, with delta_tilde = delta_{a - 1/2}.
struct CorrectionValue {
  double a = 0.0;
  double c_star = 0.5;
  double delta_tilde = 0.0;
  double tier0 = 0.5;
  double tier1 = 0.0;  // (1 - 2x)/6 (delta_tilde^2 - 1)
  double tier2 = 0.0;  // (1/sigma_x){(1/36 - sigma_x^2/36) d + (-5/72 + 7 sigma_x^2/36) d^3}
};

/// `a` may be any real; the reflected forms evaluate c* at 2 m x - a.
CorrectionValue c_star(const BinomialModel& model, double a);

struct AdmissibilityCheck {
  std::int64_t m = 0;
  double tau = 2.0;
  bool cond_size = false;  // m >= max(1000, 2^{3/2} tau^3)
  bool cond_exp = false;   // 41 tau^3 exp(-m^{1/3}/(8 tau)) <= 750000 m^{-4/3}
  double size_needed = 0.0;
  double exp_lhs = 0.0;    // rounded upward
  double exp_rhs = 0.0;    // rounded downward
  double budget = 0.0;     // 10^6 tau^5 m^{-3/2}

  bool admissible() const noexcept { return cond_size && cond_exp; }
  std::string describe() const;
};

/// Throws DomainError for tau < 2 or m < 1.
AdmissibilityCheck admissibility(std::int64_t m, double tau);

/// Smallest m >= 1 for which admissibility(m, tau) holds.
std::int64_t first_admissible_m(double tau);

/// Gaussian tail approximations. The first four are the stated forms. For
/// x != 1/2 the two reflected-through-2mx forms carry an O(m^{-1/2}) error and
/// survival_reflect is off by two in its cut; the mirror forms apply the
/// survival form to Binomial(m, 1 - x) instead and keep the O(m^{-3/2}) order.
enum class TailForm {
  survival,          // sum_{k>=a} ~ Psi(delta_{a - c*(a)}),                    a >= m x
  cdf,               // sum_{k<=a} ~ Phi(-delta_{2mx - a - c*(2mx - a)}),       a <= m x
  cdf_reflect,       // sum_{k<=a} ~ Phi(delta_{a+1 - c*(a+1)}),                a+1 >= m x
  survival_reflect,  // sum_{k>=a} ~ Psi(-delta_{2mx-(a+1) - c*(2mx-(a+1))}),   a+1 <= m x
  cdf_mirror,        // sum_{k<=a} ~ Psi(delta'_{m-a - c'*(m-a)}),              a <= m x
  survival_mirror,   // sum_{k>=a} ~ Phi(delta'_{m-a+1 - c'*(m-a+1)}),          a-1 <= m x
};
// delta' and c'* are taken under Binomial(m, 1 - x).

std::string_view to_string(TailForm form);

/// Evaluates the chosen form. Throws PreconditionError when the cut is on the
/// wrong side of m x (naming the applicable variant), when a (or a+1 for the
/// reflected forms) is outside the bulk, or when x is not in X_tau.
/// Admissibility of m is not enforced; see admissibility().
double tail_approx(const BinomialModel& model, std::int64_t a, double tau, TailForm form);

double survival_approx(const BinomialModel& model, std::int64_t a, double tau);
double cdf_approx(const BinomialModel& model, std::int64_t a, double tau);

/// True iff the side condition of `form` holds for cut a.
bool tail_applies(const BinomialModel& model, std::int64_t a, TailForm form);

struct CorollaryValue {
  double t = 0.0;
  double s = 0.5;          // floor(t) + 1/2
  std::int64_t a = 0;      // floor(m/2 + t)
  double approx = 0.5;     // Phi(((1 - 1/(12m)) s + s^3/(3m^2)) / (sqrt(m)/2))
  double bound = 0.0;      // 10^6 2^5 m^{-3/2}
};

/// x = 1/2 refined correction. Throws DomainError for m < 1000 or
/// |t| > m^{2/3}/2 - 1.
CorollaryValue corollary_half(std::int64_t m, double t);

/// Range limit m^{2/3}/2 - 1 for t.
double corollary_t_limit(std::int64_t m);

struct ContinuityOptions {
  std::int64_t exact_ceiling = 100000;
  bool guards = true;
};

/// Sweeps every bulk cut with every applicable form (ids "continuity.survival",
/// "continuity.cdf", "continuity.cdf_reflect", "continuity.survival_reflect",
/// "continuity.cdf_mirror", "continuity.survival_mirror"),
/// plus the regression guard "continuity.guard" at a = ceil(m x).
VerificationReport verify_continuity(const BinomialModel& model, double tau,
                                     const ContinuityOptions& options = {});

/// Regression threshold for |exact - approx| at the centre cut.
double continuity_guard_threshold(std::int64_t m);

/// t_count evenly spaced t over the full range; ids "corollary.bound",
/// "corollary.guard" and "corollary.identity" (agreement with the x = 1/2
/// general correction: the reflected cdf form, or the cdf form left of m/2).
VerificationReport verify_corollary(std::int64_t m, int t_count = 50);

}  // namespace tusnady

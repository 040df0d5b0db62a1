#include "tusnady/continuity_correction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"

namespace tusnady {

namespace {

// 2 m x - y, exact in the numerator when x is rational.
double mirror(const BinomialModel& model, std::int64_t y) {
  if (const auto& ex = model.exact_x()) {
    const long double q = static_cast<long double>(ex->den);
    return static_cast<double>((2.0L * static_cast<long double>(model.m()) * static_cast<long double>(ex->num) -
                                static_cast<long double>(y) * q) / q);
  }
  return static_cast<double>(2.0L * static_cast<long double>(model.m()) * static_cast<long double>(model.x()) -
                             static_cast<long double>(y));
}

double corrected_delta(const BinomialModel& model, double y) {
  return delta(model, y - c_star(model, y).c_star);
}

bool member(const BinomialModel& model, double tau) {
  return model.exact_x() ? xtau_member(*model.exact_x(), tau) : xtau_member(model.x(), tau);
}

std::string model_label(const BinomialModel& model) {
  return "m=" + std::to_string(model.m()) + " x=" + model.x_label();
}

struct FormSpec {
  TailForm form;
  const char* id;
};

constexpr FormSpec kForms[] = {
    {TailForm::survival, "continuity.survival"},
    {TailForm::cdf, "continuity.cdf"},
    {TailForm::cdf_reflect, "continuity.cdf_reflect"},
    {TailForm::survival_reflect, "continuity.survival_reflect"},
    {TailForm::cdf_mirror, "continuity.cdf_mirror"},
    {TailForm::survival_mirror, "continuity.survival_mirror"},
};

// Offset from a to the cut whose bulk membership the form requires.
std::int64_t cut_offset(TailForm f) {
  switch (f) {
    case TailForm::cdf_reflect:
    case TailForm::survival_reflect: return 1;
    case TailForm::survival_mirror: return -1;
    default: return 0;
  }
}

bool is_cdf(TailForm f) {
  return f == TailForm::cdf || f == TailForm::cdf_reflect || f == TailForm::cdf_mirror;
}

BinomialModel complement(const BinomialModel& model) {
  if (const auto& ex = model.exact_x()) return BinomialModel(model.m(), Rational(ex->den - ex->num, ex->den));
  return BinomialModel::from_real(model.m(), 1.0 - model.x());
}

}  // namespace

CorrectionValue c_star(const BinomialModel& model, double a) {
  CorrectionValue out;
  out.a = a;
  out.delta_tilde = delta(model, a - 0.5);
  const double d = out.delta_tilde;
  double one_minus_2x = 1.0 - 2.0 * model.x();
  if (const auto& ex = model.exact_x()) {
    one_minus_2x = static_cast<double>(ex->den - 2 * ex->num) / static_cast<double>(ex->den);
  }
  const double sx = model.sigma_x();
  const double sx2 = sx * sx;
  out.tier1 = one_minus_2x / 6.0 * (d * d - 1.0);
  out.tier2 = ((1.0 / 36.0 - sx2 / 36.0) * d + (-5.0 / 72.0 + 7.0 * sx2 / 36.0) * d * d * d) / sx;
  out.c_star = out.tier0 + out.tier1 + out.tier2 / std::sqrt(static_cast<double>(model.m()));
  return out;
}

std::string AdmissibilityCheck::describe() const {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "admissibility(m=%lld, tau=%.17g): size %s (need m >= %.17g); exp %s "
                "(41 tau^3 exp(-m^{1/3}/(8 tau)) = %.6g vs 750000 m^{-4/3} = %.6g); budget %.6g",
                static_cast<long long>(m), tau, cond_size ? "holds" : "fails", size_needed,
                cond_exp ? "holds" : "fails", exp_lhs, exp_rhs, budget);
  return buf;
}

AdmissibilityCheck admissibility(std::int64_t m, double tau) {
  if (m < 1) throw DomainError("admissibility: m must be >= 1");
  if (!(tau >= 2.0) || !std::isfinite(tau)) throw DomainError("admissibility: tau must be a finite value >= 2");
  constexpr long double inf = std::numeric_limits<long double>::infinity();
  const long double ml = static_cast<long double>(m);
  const long double t = tau;
  AdmissibilityCheck c;
  c.m = m;
  c.tau = tau;
  const long double need = std::max(1000.0L, std::pow(2.0L, 1.5L) * t * t * t);
  c.size_needed = static_cast<double>(std::nextafter(need, inf));
  c.cond_size = ml >= c.size_needed;
  const long double lhs = 41.0L * t * t * t * std::exp(-std::cbrt(ml) / (8.0L * t));
  const long double rhs = 750000.0L * std::pow(ml, -4.0L / 3.0L);
  c.exp_lhs = std::nextafter(static_cast<double>(std::nextafter(lhs, inf)), HUGE_VAL);
  c.exp_rhs = std::nextafter(static_cast<double>(std::nextafter(rhs, -inf)), -HUGE_VAL);
  c.cond_exp = c.exp_lhs <= c.exp_rhs;
  c.budget = 1e6 * std::pow(tau, 5) * std::pow(static_cast<double>(m), -1.5);
  return c;
}

std::int64_t first_admissible_m(double tau) {
  // The ratio lhs/rhs of the exponential condition increases in m up to
  // m = (32 tau)^3 and decreases afterwards.
  const AdmissibilityCheck at_size = admissibility(1, tau);
  const auto m_size = static_cast<std::int64_t>(std::ceil(at_size.size_needed));
  if (admissibility(m_size, tau).admissible()) return m_size;
  std::int64_t lo = std::max<std::int64_t>(m_size, static_cast<std::int64_t>(std::ceil(std::pow(32.0 * tau, 3))));
  if (admissibility(lo, tau).admissible()) {
    throw EvaluationError("first_admissible_m: unexpected shape of the exponential condition");
  }
  std::int64_t hi = 2 * lo;
  while (!admissibility(hi, tau).admissible()) {
    lo = hi;
    hi *= 2;
    if (hi > (std::int64_t{1} << 60)) throw EvaluationError("first_admissible_m: no admissible m found");
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (admissibility(mid, tau).admissible()) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::string_view to_string(TailForm form) {
  switch (form) {
    case TailForm::survival: return "survival";
    case TailForm::cdf: return "cdf";
    case TailForm::cdf_reflect: return "cdf_reflect";
    case TailForm::survival_reflect: return "survival_reflect";
    case TailForm::cdf_mirror: return "cdf_mirror";
    case TailForm::survival_mirror: return "survival_mirror";
  }
  return "survival";
}

bool tail_applies(const BinomialModel& model, std::int64_t a, TailForm form) {
  switch (form) {
    case TailForm::survival: return model.compare_to_mean(static_cast<double>(a)) >= 0;
    case TailForm::cdf: return model.compare_to_mean(static_cast<double>(a)) <= 0;
    case TailForm::cdf_reflect: return model.compare_to_mean(static_cast<double>(a + 1)) >= 0;
    case TailForm::survival_reflect: return model.compare_to_mean(static_cast<double>(a + 1)) <= 0;
    case TailForm::cdf_mirror: return model.compare_to_mean(static_cast<double>(a)) <= 0;
    case TailForm::survival_mirror: return model.compare_to_mean(static_cast<double>(a - 1)) <= 0;
  }
  return false;
}

double tail_approx(const BinomialModel& model, std::int64_t a, double tau, TailForm form) {
  const std::string name(to_string(form));
  if (!(tau >= 2.0)) throw PreconditionError(name + ": tau >= 2 fails");
  if (!member(model, tau)) throw PreconditionError(name + ": x in X_tau fails for x = " + model.x_label());
  const std::int64_t offset = cut_offset(form);
  if (!in_bulk(model, a + offset)) {
    const char* which = offset == 0 ? "a" : (offset > 0 ? "a+1" : "a-1");
    throw PreconditionError(name + ": " + which + " in bulk fails (a = " + std::to_string(a) + ")");
  }
  if (!tail_applies(model, a, form)) {
    const char* hint = "";
    switch (form) {
      case TailForm::survival: hint = "a < m x; use the cdf form"; break;
      case TailForm::cdf: hint = "a > m x; use the survival form or cdf_reflect"; break;
      case TailForm::cdf_reflect: hint = "a + 1 < m x; use the cdf form"; break;
      case TailForm::survival_reflect: hint = "a + 1 > m x; use the survival form"; break;
      case TailForm::cdf_mirror: hint = "a > m x; use cdf_reflect"; break;
      case TailForm::survival_mirror: hint = "a - 1 > m x; use the survival form"; break;
    }
    throw PreconditionError(name + ": wrong tail, " + hint);
  }
  switch (form) {
    case TailForm::survival: return normal_survival(corrected_delta(model, static_cast<double>(a)));
    case TailForm::cdf: return normal_cdf(-corrected_delta(model, mirror(model, a)));
    case TailForm::cdf_reflect: return normal_cdf(corrected_delta(model, static_cast<double>(a + 1)));
    case TailForm::survival_reflect: return normal_survival(-corrected_delta(model, mirror(model, a + 1)));
    case TailForm::cdf_mirror:
      return normal_survival(corrected_delta(complement(model), static_cast<double>(model.m() - a)));
    case TailForm::survival_mirror:
      return normal_cdf(corrected_delta(complement(model), static_cast<double>(model.m() - a + 1)));
  }
  return 0.0;
}

double survival_approx(const BinomialModel& model, std::int64_t a, double tau) {
  return tail_approx(model, a, tau, TailForm::survival);
}

double cdf_approx(const BinomialModel& model, std::int64_t a, double tau) {
  return tail_approx(model, a, tau, TailForm::cdf);
}

double corollary_t_limit(std::int64_t m) {
  const double md = static_cast<double>(m);
  return std::cbrt(md * md) / 2.0 - 1.0;
}

CorollaryValue corollary_half(std::int64_t m, double t) {
  if (m < 1000) throw DomainError("corollary_half: m must be >= 1000");
  if (!std::isfinite(t) || std::fabs(t) > corollary_t_limit(m)) {
    throw DomainError("corollary_half: |t| must not exceed m^{2/3}/2 - 1");
  }
  const double md = static_cast<double>(m);
  CorollaryValue v;
  v.t = t;
  v.s = std::floor(t) + 0.5;
  // Integer split of floor(m/2 + t), so that a and s come from the same floor(t).
  const auto ft = static_cast<std::int64_t>(std::floor(t));
  v.a = m % 2 == 0 ? m / 2 + ft : (m - 1) / 2 + ft + (t - static_cast<double>(ft) >= 0.5 ? 1 : 0);
  const double arg = ((1.0 - 1.0 / (12.0 * md)) * v.s + v.s * v.s * v.s / (3.0 * md * md)) / (std::sqrt(md) / 2.0);
  v.approx = normal_cdf(arg);
  v.bound = 1e6 * 32.0 * std::pow(md, -1.5);
  return v;
}

double continuity_guard_threshold(std::int64_t m) {
  return 1e-4 * std::pow(1000.0 / static_cast<double>(m), 1.5);
}

VerificationReport verify_continuity(const BinomialModel& model, double tau, const ContinuityOptions& options) {
  VerificationReport report;
  const AdmissibilityCheck adm = admissibility(model.m(), tau);
  if (!adm.admissible()) report.note("continuity " + model_label(model) + ": " + adm.describe());

  VerificationRecord base;
  base.m = model.m();
  base.x = model.x_label();
  base.tau = tau;
  if (!member(model, tau)) {
    VerificationRecord r = base;
    r.check_id = "continuity.survival";
    r.outcome = Outcome::skipped;
    report.add(std::move(r));
    report.note("continuity " + model_label(model) + ": skipped, x not in X_tau");
    return report;
  }

  const BulkWindow w = bulk_window(model);
  const std::int64_t m = model.m();
  const bool exact = model.exact_x() && m <= options.exact_ceiling;
  const std::int64_t lo = std::max<std::int64_t>(w.k_min - 1, 0);
  const std::int64_t hi = std::min(w.k_max + 1, m);
  std::optional<ExactSweep> sweep;
  if (exact) sweep.emplace(model, lo, hi, ExactConfig{options.exact_ceiling});
  const double oracle_slack = exact ? 0.0 : 1e-12;

  auto exact_tail = [&](std::int64_t a, bool cdf) {
    if (exact) return cdf ? sweep->at(a).cdf : sweep->at(a).survival;
    return cdf ? cdf_real(m, model.x(), a) : survival_real(m, model.x(), a);
  };

  for (std::int64_t a = lo; a <= hi; ++a) {
    for (const auto& spec : kForms) {
      const std::int64_t cut = a + cut_offset(spec.form);
      if (!w.contains(cut) || !tail_applies(model, a, spec.form)) continue;
      VerificationRecord r = base;
      r.check_id = spec.id;
      r.a = a;
      r.z = delta(model, static_cast<double>(a));
      r.measured = std::fabs(exact_tail(a, is_cdf(spec.form)) - tail_approx(model, a, tau, spec.form));
      r.allowed = adm.budget + oracle_slack;
      r.outcome = judge(r.measured, r.allowed);
      report.add(std::move(r));
    }
  }

  if (options.guards) {
    std::int64_t centre = static_cast<std::int64_t>(std::ceil(model.mean()));
    while (model.compare_to_mean(static_cast<double>(centre)) < 0) ++centre;
    while (centre > 0 && model.compare_to_mean(static_cast<double>(centre - 1)) >= 0) --centre;
    VerificationRecord r = base;
    r.check_id = "continuity.guard";
    r.a = centre;
    r.z = delta(model, static_cast<double>(centre));
    r.measured = std::fabs(exact_tail(centre, false) - survival_approx(model, centre, tau));
    r.allowed = continuity_guard_threshold(m) + oracle_slack;
    r.outcome = judge(r.measured, r.allowed);
    r.provenance = Provenance::regression_guard;
    report.add(std::move(r));
  }
  return report;
}

VerificationReport verify_corollary(std::int64_t m, int t_count) {
  VerificationReport report;
  if (t_count < 2) throw DomainError("verify_corollary: need at least two t-values");
  const BinomialModel model(m, Rational(1, 2));
  VerificationRecord base;
  base.m = m;
  base.x = model.x_label();
  base.tau = 2.0;
  if (m < 1000) {
    VerificationRecord r = base;
    r.check_id = "corollary.bound";
    r.outcome = Outcome::skipped;
    report.add(std::move(r));
    report.note("corollary m=" + std::to_string(m) + ": skipped, m >= 1000 fails");
    return report;
  }
  const AdmissibilityCheck adm = admissibility(m, 2.0);
  if (!adm.admissible()) report.note("corollary m=" + std::to_string(m) + ": " + adm.describe());

  const double limit = corollary_t_limit(m);
  const double half = static_cast<double>(m) / 2.0;
  const auto lo = static_cast<std::int64_t>(std::floor(half - limit)) - 1;
  const auto hi = static_cast<std::int64_t>(std::floor(half + limit)) + 1;
  constexpr std::int64_t ceiling = 100000;
  std::optional<ExactSweep> sweep;
  if (m <= ceiling) sweep.emplace(model, lo, hi, ExactConfig{ceiling});
  const double oracle_slack = sweep ? 0.0 : 1e-12;

  for (int i = 0; i < t_count; ++i) {
    double t = -limit + 2.0 * limit * static_cast<double>(i) / static_cast<double>(t_count - 1);
    t = std::clamp(t, -limit, limit);
    const CorollaryValue v = corollary_half(m, t);
    const double exact = sweep ? sweep->at(v.a).cdf : cdf_real(m, 0.5, v.a);
    const double err = std::fabs(exact - v.approx);

    VerificationRecord r = base;
    r.check_id = "corollary.bound";
    r.a = v.a;
    r.z = t;
    r.measured = err;
    r.allowed = v.bound + oracle_slack;
    r.outcome = judge(r.measured, r.allowed);
    report.add(r);

    r.check_id = "corollary.guard";
    r.allowed = continuity_guard_threshold(m) + oracle_slack;
    r.outcome = judge(r.measured, r.allowed);
    r.provenance = Provenance::regression_guard;
    report.add(r);

    // Left of the centre the cdf form takes over; at x = 1/2 both reduce to
    // the same argument because c* - 1/2 is odd in delta_tilde.
    const TailForm form = tail_applies(model, v.a, TailForm::cdf_reflect) ? TailForm::cdf_reflect : TailForm::cdf;
    if (in_bulk(model, v.a + (form == TailForm::cdf_reflect ? 1 : 0))) {
      r.check_id = "corollary.identity";
      r.measured = std::fabs(v.approx - tail_approx(model, v.a, 2.0, form));
      r.allowed = 1e-13;
      r.outcome = judge(r.measured, r.allowed);
      r.provenance = Provenance::oracle_instrument;
      report.add(r);
    }
  }
  return report;
}

}  // namespace tusnady

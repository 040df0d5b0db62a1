#pragma once

#include <array>
#include <string>

namespace tusnady {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;   // 1/sqrt(2 pi)
inline constexpr double kSqrt2Pi = 2.5066282746310007;      // sqrt(2 pi)
inline constexpr double kHalfLog2Pi = 0.9189385332046728;   // log(2 pi)/2
inline constexpr long double kHalfLog2PiL = 0.918938533204672741780329736405617639861L;

/// phi, Phi and Psi evaluated together at one standardized coordinate.
struct NormalEval {
  double z;
  double phi;
  double cdf;
  double survival;
};

/// Standard normal density. Throws DomainError for non-finite z.
double phi(double z);

/// Standard normal c.d.f. Phi(z).
double normal_cdf(double z);

/// Standard normal survival Psi(z) = 1 - Phi(z), computed directly so that
/// the relative accuracy is kept in the upper tail.
double normal_survival(double z);

NormalEval normal_eval(double z);

/// Inverse of Phi on (0, 1). Rational initial guess refined with Halley
/// steps against normal_cdf.
double normal_quantile(double p);

inline constexpr int kMaxTailMomentOrder = 12;

/// M_j(d) = int_d^inf y^j phi(y) dy for 0 <= j <= 12, via
/// M_0 = Psi(d), M_1 = phi(d), M_j = d^{j-1} phi(d) + (j-1) M_{j-2}.
double tail_moment(int j, double d);

/// Coefficient c_j(d) of the Riemann-sum tail bound
/// 4 int_d^inf |y|^j phi(y) dy <= (phi(d) + Psi(d)) c_j(d), j in {1,2,3,4,6}.
double riemann_coefficient(int j, double d);

/// Right-hand side (phi(d) + Psi(d)) c_j(d) of the Riemann-sum tail bound.
double riemann_bound(int j, double d);

struct RiemannCheck {
  int j = 0;
  double worst_ratio = 0.0;  // max over the grid of lhs / rhs
  double worst_d = 0.0;
  int points = 0;
  bool passed = false;
};

/// Checks the Riemann-sum tail bound for order j on the grid
/// d = 0, step, 2 step, ..., d_max.
RiemannCheck check_riemann_bound(int j, double d_max = 10.0, double step = 1e-2);

/// One numerically located supremum and the constant it is compared with.
struct SupConstant {
  std::string name;
  double sup = 0.0;
  double argmax = 0.0;
  double allowed = 0.0;
  bool equality = false;  // true: |sup - allowed| <= tolerance, else sup <= allowed
  double tolerance = 0.0;
  bool passed = false;
};

struct SupConstantsReport {
  std::array<SupConstant, 4> items;
  bool all_passed() const;
};

/// Grid search (step 1e-3) with golden-section refinement for
///   sup_{z>=0} (1+z^7)(phi+Psi) <= 15,
///   sup_{z>=-1} (1+|z|^6) phi <= 5,
///   sup_z |z^2-1| phi = phi(0) (tolerance 1e-9),
///   sup_{d>=-1} 4 int_d^inf (1+y^12) phi(y) dy <= 20800.
SupConstantsReport sup_constants_check();

/// log n! split as 1/2 log(2 pi) + (n+1/2) log n - n + 1/(12n) + lambda_n.
struct StirlingExpansion {
  long n = 0;
  double log_factorial_exact = 0.0;
  double lambda_n = 0.0;
  double lambda_bound = 0.0;  // 1/(360 n^3)
  bool within_bound() const { return lambda_n <= lambda_bound && -lambda_n <= lambda_bound; }
};

/// Computes lambda_n from the exact integer n! with an MPFR logarithm whose
/// precision grows with the bit length of n!. Throws DomainError for n < 1.
StirlingExpansion stirling_lindelof(long n);

/// log n! - [1/2 log(2 pi) + (n+1/2) log n - n] for n >= 1, in extended
/// precision. Uses an exact factorial product for small n and the Stirling
/// series otherwise.
long double log_factorial_remainder(long n);

/// Certified bound on the error of log_factorial_remainder(n).
long double log_factorial_remainder_error(long n);

}  // namespace tusnady

#pragma once

// Minimal RAII holder for an mpfr_t. Internal to the library.

#include <mpfr.h>

namespace tusnady::detail {

class MpfrValue {
 public:
  explicit MpfrValue(mpfr_prec_t precision) { mpfr_init2(value_, precision); }
  MpfrValue(mpfr_prec_t precision, double v) : MpfrValue(precision) {
    mpfr_set_d(value_, v, MPFR_RNDN);
  }
  ~MpfrValue() { mpfr_clear(value_); }

  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }

  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(value_, MPFR_RNDN); }

 private:
  mpfr_t value_;
};

}  // namespace tusnady::detail

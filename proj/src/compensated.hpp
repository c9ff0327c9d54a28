#pragma once

#include <cmath>

// Error-free transformations for double-double accumulation.
namespace cycleqd::detail {

struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;
};

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DoubleDouble add(DoubleDouble a, DoubleDouble b) {
  DoubleDouble s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return two_sum(s.hi, s.lo);
}

// (c_hi + c_lo) * (x_hi + x_lo), dropping the c_lo * x_lo term.
inline DoubleDouble mul(double c_hi, double c_lo, double x_hi, double x_lo) {
  DoubleDouble p = two_prod(c_hi, x_hi);
  p.lo += c_hi * x_lo + c_lo * x_hi;
  return two_sum(p.hi, p.lo);
}

// 1 / d as a double-double.
inline DoubleDouble reciprocal(double d) {
  const double q = 1.0 / d;
  // residual r = 1 - q*d exactly, so 1/d = q + r/d.
  const double r = -std::fma(q, d, -1.0);
  return two_sum(q, r / d);
}

}  // namespace cycleqd::detail

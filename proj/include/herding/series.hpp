#pragma once

namespace herding {

// Value together with a certified bound on its absolute error.
struct Certified {
  double value = 0.0;
  double error = 0.0;
};

// sum_{k >= 0} (from + k)^-s for s > 1 and from > 0 (the Hurwitz zeta
// tail), by direct summation plus an Euler-Maclaurin remainder whose
// truncation error is part of the certificate. With integer `from` this is
// sum_{n >= from} n^-s.
Certified zeta_tail(double s, double from);

// zeta(s) for s > 1.
inline Certified zeta(double s) { return zeta_tail(s, 1.0); }

}  // namespace herding

#include "herding/series.hpp"

#include <cmath>

#include "herding/errors.hpp"

namespace herding {

Certified zeta_tail(double s, double from) {
  if (!(s > 1.0)) throw SolverError("zeta_tail requires s > 1");
  if (!(from > 0.0)) throw SolverError("zeta_tail requires from > 0");

  // Direct head, then the Euler-Maclaurin expansion at the cut point M:
  // sum_{k>=0} (M+k)^-s = M^{1-s}/(s-1) + M^-s/2 + s M^{-s-1}/12 - R,
  // 0 <= R <= s(s+1)(s+2) M^{-s-3}/720.
  constexpr int kDirect = 20000;
  double head = 0.0;
  for (int k = 0; k < kDirect; ++k)
    head += std::pow(from + static_cast<double>(k), -s);

  const double m = from + static_cast<double>(kDirect);
  const double tail = std::pow(m, 1.0 - s) / (s - 1.0) +
                      0.5 * std::pow(m, -s) + s * std::pow(m, -s - 1.0) / 12.0;
  const double remainder =
      s * (s + 1.0) * (s + 2.0) * std::pow(m, -s - 3.0) / 720.0;

  return {head + tail, remainder + 1e-15 * (head + tail)};
}

}  // namespace herding

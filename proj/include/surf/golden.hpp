#pragma once

#include <cmath>

namespace surf {

/// Golden-section maximization of a unimodal (concave) function on [lo, hi],
/// shrinking the bracket until it is narrower than `width`.
///
/// Tie rule: on equal probe values the upper subinterval is discarded, so a
/// flat objective converges to `lo`. The busyness estimator relies on this:
/// agreement that is fully explained by classifier correctness leaves the
/// likelihood flat, and the estimate must fall back to zero busyness.
template <class F>
double golden_section_maximize(F&& f, double lo, double hi, double width) {
  constexpr double kInvPhi = 0.6180339887498949;   // 1/phi
  constexpr double kInvPhi2 = 0.3819660112501051;  // 1/phi^2

  double a = lo, b = hi;
  double x1 = a + kInvPhi2 * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);

  while (b - a > width) {
    if (f2 > f1) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = a + kInvPhi2 * (b - a);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? x1 : x2;  // prefer the lower probe on ties
}

}  // namespace surf

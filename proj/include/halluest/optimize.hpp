#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace halluest::optimize {

struct MinimumResult {
  double x = 0.0;
  double fx = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Brent's derivative-free minimizer (golden section + parabolic steps) on
/// [lo, hi]. Stops when the bracket is within rel_tol * |x| + abs_tol.
template <typename F>
MinimumResult brent_minimize(F&& f, double lo, double hi, double rel_tol = 1e-8,
                             double abs_tol = 1e-12, std::size_t max_iter = 500) {
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
  double a = lo, b = hi;
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  MinimumResult out;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol = rel_tol * std::fabs(x) + abs_tol;
    const double tol2 = 2.0 * tol;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) {
      out = {x, fx, iter, true};
      return out;
    }
    bool golden = true;
    if (std::fabs(e) > tol) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_prev = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol : -tol;
        golden = false;
      }
    }
    if (golden) {
      e = (x < m ? b : a) - x;
      d = kGolden * e;
    }
    const double u = std::fabs(d) >= tol ? x + d : x + (d > 0.0 ? tol : -tol);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  out = {x, fx, max_iter, false};
  return out;
}

}  // namespace halluest::optimize

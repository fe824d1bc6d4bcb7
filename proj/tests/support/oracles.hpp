#ifndef ERMLAB_TESTS_ORACLES_HPP
#define ERMLAB_TESTS_ORACLES_HPP

// Brute-force numerical references shared by the unit and acceptance tests.
// Nothing here calls into the library's closed forms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>

namespace oracle {

/// Maximizer and maximum of a unimodal f on [lo, hi]: coarse grid, then
/// golden-section refinement around the best grid cell.
inline std::pair<double, double> grid_max(const std::function<double(double)>& f, double lo, double hi,
                                          int points = 4000) {
  double best_x = lo;
  double best = f(lo);
  const double h = (hi - lo) / points;
  for (int k = 1; k <= points; ++k) {
    const double x = lo + k * h;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  const double x = 0.5 * (a + b);
  const double v = f(x);
  return v > best ? std::make_pair(x, v) : std::make_pair(best_x, best);
}

/// sup over u in [0, umax] of u v - G(u).
inline double legendre(const std::function<double(double)>& G, double v, double umax) {
  return grid_max([&](double u) { return u * v - G(u); }, 0.0, umax).second;
}

/// Root of a sign-changing f on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Composite Simpson rule with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// E|eps|^m for P(|eps| > u) = (1+u)^{-s}, by quadrature after v = 1/(1+u).
/// Needs s - m - 1 >= 0 so the integrand stays bounded.
inline double double_pareto_abs_moment(double s, double m) {
  return s * simpson([&](double v) { return std::pow(1.0 - v, m) * std::pow(v, s - m - 1.0); }, 0.0, 1.0);
}

/// Gamma(x) by the Stirling series with upward recurrence, independent of tgamma.
inline double gamma_stirling(double x) {
  double shift = 1.0;
  while (x < 40.0) {
    shift *= x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double series =
      1.0 + inv / 12.0 + inv * inv / 288.0 - 139.0 * inv * inv * inv / 51840.0 - 571.0 * std::pow(inv, 4) / 2488320.0 +
                        163879.0 * std::pow(inv, 5) / 209018880.0;
  return std::sqrt(2.0 * M_PI / x) * std::pow(x / M_E, x) * series / shift;
}

}  // namespace oracle

#endif  // ERMLAB_TESTS_ORACLES_HPP

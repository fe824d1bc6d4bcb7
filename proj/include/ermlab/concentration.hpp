#ifndef ERMLAB_CONCENTRATION_HPP
#define ERMLAB_CONCENTRATION_HPP

// Bernstein-type bounds for the maximum of p averages, the auxiliary
// inequalities used by the oracle bounds, and Monte Carlo property checkers
// for all of them.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ermlab/core.hpp"
#include "ermlab/error.hpp"
#include "ermlab/rng.hpp"

namespace ermlab {

struct BernsteinParams {
  double n = 1.0;
  double p = 1.0;
  double K = 0.0;
  std::optional<double> tau;

  void validate() const {
    require(n >= 1.0, "n must be >= 1");
    require(p >= 1.0, "p must be >= 1");
    require(K >= 0.0, "K must be >= 0");
    require(!tau || *tau > 0.0, "tau must be > 0");
  }
};

/// Complexity term 2 log(2p) / n.
inline double delta(double n, double p) {
  require(n >= 1.0, "n must be >= 1");
  require(p >= 1.0, "p must be >= 1");
  return 2.0 * std::log(2.0 * p) / n;
}

/// Largest moment order the maximal moment inequality covers.
inline double max_bernstein_moment(double p) { return 1.0 + std::log(p); }

/// Threshold exceeded by max_j |P_n gamma_j^c| with probability at most exp(-t).
inline double bernstein_tail_threshold(double n, double p, double K, double t) {
  require(n >= 1.0 && p >= 1.0, "n and p must be >= 1");
  require(K >= 0.0, "K must be >= 0");
  require(t > 0.0, "t must be > 0");
  const double a = std::log(2.0 * p) + t;
  return std::sqrt(2.0 * a / n) + 2.0 * K * a / n;
}

/// Bound on (E max_j |P_n gamma_j^c|^m)^{1/m}; the value does not depend on m.
inline double bernstein_moment_bound(double n, double p, double K, double m) {
  require(K >= 0.0, "K must be >= 0");
  if (m < 1.0 || m > max_bernstein_moment(p)) {
    throw PreconditionError("moment order exceeds 1+log p");
  }
  const double d = delta(n, p);
  return std::sqrt(d) + K * d;
}

/// Weighted (tau-floored) version. Exactly one of `t` (tail mode) or `m`
/// (moment mode) must be supplied.
inline double weighted_bernstein(double n, double p, double K, double tau, std::optional<double> t,
                                 std::optional<double> m) {
  if (t.has_value() == m.has_value()) {
    throw PreconditionError("weighted_bernstein: give exactly one of t (tail) or m (moment)");
  }
  require(tau > 0.0, "tau must be > 0");
  require(K >= 0.0, "K must be >= 0");
  const double d = delta(n, p);
  if (t) {
    require(*t >= 0.0, "t must be >= 0");
    const double e = d + 2.0 * *t / n;
    return std::sqrt(e) + K * e / tau;
  }
  if (*m < 1.0 || *m > max_bernstein_moment(p)) throw PreconditionError("moment order exceeds 1+log p");
  return std::sqrt(d) + K * d / tau;
}

struct JensenComparison {
  double lhs = 0.0;  // mean of g(|x|)
  double rhs = 0.0;  // g(mean|x| + c * frac{|x| < c})
};

/// Grid spot check that g is increasing on [0, hi] and concave on [c, hi].
template <std::invocable<double> G>
bool looks_partly_concave(const G& g, double c, double hi, int points = 512) {
  const double tol = 1e-12;
  double prev = g(0.0);
  const double h = hi / points;
  for (int k = 1; k <= points; ++k) {
    const double v = g(k * h);
    if (v < prev - tol * std::max(1.0, std::abs(prev))) return false;
    prev = v;
  }
  if (hi <= c) return true;
  const double hc = (hi - c) / points;
  for (int k = 1; k < points; ++k) {
    const double x = c + k * hc;
    const double second = g(x - hc) - 2.0 * g(x) + g(x + hc);
    if (second > tol * std::max(1.0, std::abs(g(x)))) return false;
  }
  return true;
}

/// Both sides of Jensen's inequality for an increasing function that is only
/// concave beyond c, evaluated on the empirical distribution of `samples`.
template <std::invocable<double> G>
JensenComparison jensen_partly_concave_bound(const G& g, double c, std::span<const double> samples) {
  if (samples.empty()) throw PreconditionError("no samples");
  require(c >= 0.0, "c must be >= 0");
  double max_abs = 0.0;
  CompensatedSum gsum;
  CompensatedSum abs_sum;
  std::size_t below = 0;
  for (double x : samples) {
    const double a = std::abs(x);
    max_abs = std::max(max_abs, a);
    gsum.add(g(a));
    abs_sum.add(a);
    below += a < c ? 1 : 0;
  }
  require(looks_partly_concave(g, c, std::max(1.0, 2.0 * (max_abs + c))),
          "g must be increasing and concave beyond c");
  const double count = static_cast<double>(samples.size());
  JensenComparison out;
  out.lhs = gsum.value() / count;
  out.rhs = g(abs_sum.value() / count + c * static_cast<double>(below) / count);
  return out;
}

/// Bound on P Gamma^{m/2} 1{Gamma > K} for an envelope with power tails (s, M).
inline double truncated_moment_bound(double s, double M, double m, double K) {
  require(s > 1.0, "s must be > 1");
  require(M >= 0.0, "M must be >= 0");
  require(K > 0.0, "truncation level K must be > 0");
  if (m >= 2.0 * s) throw PreconditionError("truncated moment diverges");
  return (m / (2.0 * s - m)) * std::pow(M, s) * std::pow(K, -(2.0 * s - m) / 2.0);
}

/// (beta/alpha)^{alpha/(alpha+beta)} + (alpha/beta)^{beta/(alpha+beta)}.
inline double ctilde(double alpha, double beta) {
  require(alpha > 0.0 && beta > 0.0, "ctilde needs alpha, beta > 0");
  const double s = alpha + beta;
  return std::pow(beta / alpha, alpha / s) + std::pow(alpha / beta, beta / s);
}

struct PowerSumMinimum {
  double x0 = 0.0;
  double minimum = 0.0;
};

/// Minimizer and minimum of a x^alpha + b x^{-beta} over x > 0.
inline PowerSumMinimum min_power_sum(double a, double b, double alpha, double beta) {
  require(a > 0.0 && b > 0.0 && alpha > 0.0 && beta > 0.0, "min_power_sum needs positive inputs");
  const double s = alpha + beta;
  PowerSumMinimum out;
  out.x0 = std::pow(b * beta / (a * alpha), 1.0 / s);
  out.minimum = ctilde(alpha, beta) * std::pow(a, beta / s) * std::pow(b, alpha / s);
  return out;
}

/// Upper bound on a^{1/2kappa} for every a with a <= b + c (a^{1/2kappa} + b^{1/2kappa}).
inline double invert_recursive_bound(double b, double c, double kappa) {
  require(kappa >= 1.0, "kappa must be >= 1");
  require(c > 0.0, "c must be > 0");
  require(b >= 0.0, "b must be >= 0");
  const double q = 2.0 * kappa - 1.0;
  return (1.0 + std::pow(q, 1.0 / q)) * std::pow(c / (2.0 * kappa), 1.0 / q) +
         std::pow(b, 1.0 / (2.0 * kappa));
}

// ---------------------------------------------------------------------------
// Property checkers. Each draws from an explicit stream and reports Verdicts.

/// One centered variable with |x| <= 1.
inline double rademacher(Stream& rng) { return rng.sign(); }

/// max_j |P_n gamma_j^c| over `reps` replications with p i.i.d. columns drawn
/// from `draw`, which must produce centered values.
template <std::invocable<Stream&> Draw>
std::vector<double> simulate_max_abs_mean(std::size_t n, std::size_t p, std::size_t reps,
                                          std::uint64_t seed, Draw draw) {
  require(n >= 1 && p >= 1 && reps >= 1, "n, p and reps must be >= 1");
  std::vector<double> out(reps);
  std::vector<double> sums(p);
  for (std::size_t r = 0; r < reps; ++r) {
    Stream rng = derive(seed, r);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) sums[j] += draw(rng);
    }
    double mx = 0.0;
    for (double s : sums) mx = std::max(mx, std::abs(s));
    out[r] = mx / static_cast<double>(n);
  }
  return out;
}

inline std::vector<Verdict> check_bernstein_tail(std::span<const double> max_abs_means, double n,
                                                 double p, double K, std::span<const double> ts) {
  std::vector<Verdict> out;
  for (double t : ts) {
    const double thr = bernstein_tail_threshold(n, p, K, t);
    const auto tf = tail_frequency(max_abs_means, thr);
    out.push_back(Verdict::upper("bernstein_tail(t=" + std::to_string(t) + ")", tf.frequency, tf.std_error,
                                 std::exp(-t), "maximal_bernstein.tail"));
  }
  return out;
}

inline std::vector<Verdict> check_bernstein_moments(std::span<const double> max_abs_means, double n,
                                                    double p, double K, std::span<const double> ms) {
  std::vector<Verdict> out;
  for (double m : ms) {
    const double bound = bernstein_moment_bound(n, p, K, m);
    const auto est = moment_norm(max_abs_means, m);
    out.push_back(Verdict::upper("bernstein_moment(m=" + std::to_string(m) + ")", est.value, est.std_error,
                                 bound, "maximal_bernstein.moment"));
  }
  return out;
}

/// Both binomial-type inequalities used to invert the recursive bound, on
/// random (z, kappa) with kappa in [1, 3]. Reports the worst violation.
inline std::vector<Verdict> check_binomial_inequalities(std::size_t samples, std::uint64_t seed) {
  Stream rng = derive(seed, 0);
  double worst_lower = std::numeric_limits<double>::infinity();
  double worst_upper = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    const double kappa = 1.0 + 2.0 * rng.uniform();
    const double e = 2.0 * kappa;
    const double z = rng.uniform();
    // (1-z)^{2k} <= 1 - 2k z^{2k-1} + (2k-1) z^{2k} on [0, 1]
    const double lhs1 = std::pow(1.0 - z, e);
    const double rhs1 = 1.0 - e * std::pow(z, e - 1.0) + (e - 1.0) * std::pow(z, e);
    worst_lower = std::min(worst_lower, rhs1 - lhs1 + 1e-12);
    // (1+z)^{2k} >= 1 + 2k z^{2k-1} + z^{2k} on [0, 10]
    const double w = 10.0 * rng.uniform();
    const double lhs2 = std::pow(1.0 + w, e);
    const double rhs2 = 1.0 + e * std::pow(w, e - 1.0) + std::pow(w, e);
    worst_upper = std::min(worst_upper, (lhs2 - rhs2) / lhs2 + 1e-12);
  }
  return {Verdict::lower("binomial_lower_side", worst_lower, 0.0, 0.0, "worst margin over samples"),
          Verdict::lower("binomial_upper_side", worst_upper, 0.0, 0.0, "worst relative margin over samples")};
}

/// g(x0) <= g(x) for random positive (a, b, alpha, beta) and random x.
inline Verdict check_min_power_sum(std::size_t param_draws, std::size_t x_draws, std::uint64_t seed) {
  Stream rng = derive(seed, 1);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < param_draws; ++k) {
    const double a = std::exp(4.0 * rng.uniform() - 2.0);
    const double b = std::exp(4.0 * rng.uniform() - 2.0);
    const double alpha = 0.1 + 3.0 * rng.uniform();
    const double beta = 0.1 + 3.0 * rng.uniform();
    const auto opt = min_power_sum(a, b, alpha, beta);
    for (std::size_t i = 0; i < x_draws; ++i) {
      const double x = opt.x0 * std::exp(6.0 * rng.uniform() - 3.0);
      const double g = a * std::pow(x, alpha) + b * std::pow(x, -beta);
      worst = std::min(worst, (g - opt.minimum) / g);
    }
  }
  return Verdict::lower("power_sum_minimum", worst + 1e-12, 0.0, 0.0, "min relative gap g(x) - g(x0)");
}

/// Jensen for partly concave g over a fixed catalog of functions and sample laws.
inline Verdict check_jensen_catalog(std::size_t samples_per_case, std::uint64_t seed) {
  struct Case {
    double c;
    double (*g)(double, double);
  };
  const Case catalog[] = {
      {0.0, [](double x, double) { return std::sqrt(x); }},
      {0.0, [](double x, double) { return std::log1p(x); }},
      {0.5, [](double x, double c) { return std::min(x, c) + std::sqrt(std::max(x - c, 0.0)); }},
      {1.0, [](double x, double c) { return x < c ? x * x * x : c * c * c + std::log1p(x - c); }},
  };
  double worst = std::numeric_limits<double>::infinity();
  std::uint64_t stream = 2;
  std::vector<double> xs(samples_per_case);
  for (const auto& cs : catalog) {
    for (int law = 0; law < 3; ++law) {
      Stream rng = derive(seed, stream++);
      for (auto& x : xs) {
        switch (law) {
          case 0: x = rng.normal(); break;
          case 1: x = -std::log(rng.uniform_positive()); break;
          default: x = 3.0 * rng.uniform(); break;
        }
      }
      const double c = cs.c;
      const auto g = [&](double x) { return cs.g(x, c); };
      const auto cmp = jensen_partly_concave_bound(g, c, xs);
      worst = std::min(worst, (cmp.rhs - cmp.lhs) / std::max(1.0, std::abs(cmp.rhs)));
    }
  }
  return Verdict::lower("jensen_partly_concave", worst + 1e-12, 0.0, 0.0, "min relative rhs - lhs");
}

/// Largest a^{1/2kappa} admissible under a <= b + c (a^{1/2kappa} + b^{1/2kappa}),
/// found by bisection on y = a^{1/2kappa}.
inline double largest_recursive_root(double b, double c, double kappa) {
  const double e = 2.0 * kappa;
  const double q = b + c * std::pow(b, 1.0 / e);
  const auto phi = [&](double y) { return std::pow(y, e) - c * y - q; };
  double lo = 0.0;
  double hi = 1.0;
  while (phi(hi) <= 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) <= 0.0 ? lo : hi) = mid;
  }
  return hi;
}

/// Closed-form inversion against the bisection root on random (b, c, kappa).
inline Verdict check_invert_recursive(std::size_t samples, std::uint64_t seed) {
  Stream rng = derive(seed, 20);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    const double b = std::exp(6.0 * rng.uniform() - 4.0);
    const double c = std::exp(6.0 * rng.uniform() - 4.0);
    const double kappa = 1.0 + 3.0 * rng.uniform();
    const double root = largest_recursive_root(b, c, kappa);
    const double bound = invert_recursive_bound(b, c, kappa);
    worst = std::min(worst, (bound - root) / bound);
  }
  return Verdict::lower("recursive_inversion", worst + 1e-12, 0.0, 0.0, "min relative bound - root");
}

}  // namespace ermlab

#endif  // ERMLAB_CONCENTRATION_HPP

#ifndef ERMLAB_BOUNDS_HPP
#define ERMLAB_BOUNDS_HPP

// Closed-form oracle bounds on the excess risk of the ERM selector, with
// branch selection, per-term breakdowns and parameter-validity flags.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ermlab/concentration.hpp"
#include "ermlab/error.hpp"
#include "ermlab/margins.hpp"

namespace ermlab {

struct ExpMomentTail {
  double K = 1.0;
};

struct PowerTail {
  double s = 2.0;
  double M = 1.0;
};

using TailSpec = std::variant<ExpMomentTail, PowerTail>;

inline void validate(const TailSpec& tail) {
  if (const auto* e = std::get_if<ExpMomentTail>(&tail)) {
    require(e->K >= 0.0, "exponential-moment scale K must be >= 0");
  } else {
    const auto& pt = std::get<PowerTail>(tail);
    require(pt.s > 1.0, "tail order s must be > 1");
    require(pt.M > 0.0, "tail scale M must be > 0");
  }
}

/// Sample size, candidate count and the complexity term Delta. Delta normally
/// equals 2 log(2p)/n but can be pinned for hand-worked examples.
struct Complexity {
  double n = 1.0;
  double p = 1.0;
  double delta = 0.0;

  static Complexity of(double n, double p) { return {n, p, ermlab::delta(n, p)}; }
  static Complexity with_delta(double delta_value, double n = 1.0, double p = 1.0) {
    require(delta_value >= 0.0, "Delta must be >= 0");
    require(n >= 1.0 && p >= 1.0, "n and p must be >= 1");
    return {n, p, delta_value};
  }
};

/// Tail mode: bound holds with probability >= 1 - e^{-t}. Moment mode: bound
/// on the m-th moment norm.
struct Mode {
  enum class Kind { tail, moment };
  Kind kind = Kind::moment;
  double value = 1.0;

  static Mode tail(double t) { return {Kind::tail, t}; }
  static Mode moment(double m) { return {Kind::moment, m}; }
  bool is_tail() const noexcept { return kind == Kind::tail; }
};

/// What the bound controls.
///   root:  Ehat^{1/2kappa} (moment norm, or tail threshold)
///   ratio: (Ehat / Estar)^{1/2kappa}
///   mean:  E Ehat
enum class Scale { root, ratio, mean };

inline const char* to_string(Scale s) {
  switch (s) {
    case Scale::root: return "root";
    case Scale::ratio: return "ratio";
    default: return "mean";
  }
}

struct BoundReport {
  std::string bound;
  std::string branch;
  Scale scale = Scale::root;
  double kappa = 1.0;
  std::optional<Mode> mode;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, bool>> flags;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::string> notes;

  bool valid() const {
    return std::all_of(flags.begin(), flags.end(), [](const auto& f) { return f.second; });
  }
  std::optional<double> term(const std::string& name) const {
    for (const auto& [k, v] : terms) {
      if (k == name) return v;
    }
    return std::nullopt;
  }
  void add_term(std::string name, double v) { terms.emplace_back(std::move(name), v); }
  void add_flag(std::string name, bool v) { flags.emplace_back(std::move(name), v); }
  void add_input(std::string name, double v) { inputs.emplace_back(std::move(name), v); }
};

// ---------------------------------------------------------------------------
// Constants.

/// C(a) = a^{1/(1+a)} + a^{-a/(1+a)}.
inline double curly_C(double a) {
  require(a > 0.0, "C(a) needs a > 0");
  return std::pow(a, 1.0 / (1.0 + a)) + std::pow(a, -a / (1.0 + a));
}

/// A(kappa) with denominator (2 kappa)^{1/(2 kappa - 1)}.
inline double A_kappa(double kappa) {
  require(kappa >= 1.0, "kappa must be >= 1");
  const double q = 2.0 * kappa - 1.0;
  return (1.0 + std::pow(q, 1.0 / q)) / std::pow(2.0 * kappa, 1.0 / q);
}

/// The same constant with denominator kappa^{1/(2 kappa - 1)}, as printed in
/// the general-margin display. Reported for comparison only.
inline double A_kappa_display(double kappa) {
  require(kappa >= 1.0, "kappa must be >= 1");
  const double q = 2.0 * kappa - 1.0;
  return (1.0 + std::pow(q, 1.0 / q)) / std::pow(kappa, 1.0 / q);
}

inline double c_ms(double m, double s) {
  require(m >= 1.0 && m < 2.0 * s, "c_{m,s} needs 1 <= m < 2s");
  return std::pow(m / (2.0 * s - m), 2.0 / (2.0 * s + m)) * curly_C((2.0 * s - m) / (2.0 * m));
}

inline double c_prime_ms(double m, double s) {
  return std::pow(c_ms(m, s), (2.0 * s + m) / (4.0 * s)) * curly_C((2.0 * s - m) / (2.0 * s + m));
}

/// c_s = 2 sqrt(2/pi) Gamma((s+1)/2)^{1/s}.
inline double c_s(double s) {
  require(s > 1.0, "c_s needs s > 1");
  return 2.0 * std::sqrt(2.0 / std::numbers::pi) * std::pow(std::tgamma((s + 1.0) / 2.0), 1.0 / s);
}

struct ConstantSet {
  double kappa = 1.0;
  double s = 2.0;
  double m = 2.0;
  double A = 1.0;
  double A_display = 1.0;
  double alpha = 1.0;
  double beta = 0.0;
  std::optional<double> xi;
  std::optional<double> B;
  std::optional<double> c_ms;
  std::optional<double> c_prime_ms;
  std::optional<double> ctilde;

  bool xi_valid() const { return xi.has_value(); }
  bool c_valid() const { return c_ms.has_value(); }
};

/// Constants for (kappa, s, m). Out-of-region constants are left empty.
inline ConstantSet evaluate_constants(double kappa, double s, double m) {
  require(kappa >= 1.0, "kappa must be >= 1");
  require(s > 1.0, "s must be > 1");
  require(m >= 1.0, "m must be >= 1");
  ConstantSet c;
  c.kappa = kappa;
  c.s = s;
  c.m = m;
  c.A = A_kappa(kappa);
  c.A_display = A_kappa_display(kappa);
  c.alpha = 1.0 / (2.0 * kappa - 1.0);
  c.beta = s / m - 1.0 / (2.0 * kappa);
  if (m < 2.0 * s * kappa) {
    const double a = c.alpha;
    const double b = c.beta;
    const double w = a / (a + b);
    c.ctilde = ctilde(a, b);
    c.B = std::pow(2.0, 1.0 / (2.0 * kappa)) * std::pow(m / (2.0 * s * kappa - m), 1.0 / m);
    c.xi = std::pow(c.A, b / (a + b)) * std::pow(2.0, w / (2.0 * kappa)) *
           std::pow(m / (2.0 * s * kappa - m), w / m) * *c.ctilde;
  }
  if (m < 2.0 * s) {
    c.c_ms = ermlab::c_ms(m, s);
    c.c_prime_ms = ermlab::c_prime_ms(m, s);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Helpers.

namespace detail {

inline double mode_E(const Complexity& cx, const Mode& mode) {
  if (mode.is_tail()) {
    require(mode.value > 0.0, "t must be > 0");
    return cx.delta + 2.0 * mode.value / cx.n;
  }
  return cx.delta;
}

inline void check_bernstein_m(const Complexity& cx, double m, double scale = 1.0) {
  if (m < 1.0 || m > max_bernstein_moment(cx.p) * scale) {
    throw PreconditionError("moment order exceeds " + std::string(scale == 1.0 ? "1+log p" : "(1+log p)(2kappa-1)"));
  }
}

inline void echo_common(BoundReport& r, const Complexity& cx, const Mode* mode) {
  r.add_input("n", cx.n);
  r.add_input("p", cx.p);
  r.add_input("delta", cx.delta);
  if (mode) {
    r.mode = *mode;
    r.add_input(mode->is_tail() ? "t" : "m", mode->value);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quadratic margin, exponential moments.

/// Root scale (sqrt Ehat). Large branch sqrt(E*) + C sqrt(E) + K E / sqrt(E*)
/// when E* > K E, otherwise (C + 2 sqrt K) sqrt(E); E = Delta or Delta + 2t/n.
inline BoundReport bound_quadratic_exp(const Complexity& cx, double C, double K, double estar, Mode mode) {
  require(estar >= 0.0, "estar must be >= 0");
  require(C >= 0.0, "C must be >= 0");
  require(K >= 0.0, "K must be >= 0");
  if (!mode.is_tail()) detail::check_bernstein_m(cx, mode.value);
  const double E = detail::mode_E(cx, mode);
  BoundReport r;
  r.bound = "quadratic_exp";
  r.scale = Scale::root;
  detail::echo_common(r, cx, &mode);
  r.add_input("C", C);
  r.add_input("K", K);
  r.add_input("estar", estar);
  const double small = (C + 2.0 * std::sqrt(K)) * std::sqrt(E);
  r.add_term("small_branch", small);
  if (estar > K * E) {
    const double root = std::sqrt(estar);
    const double a = C * std::sqrt(E);
    const double b = K * E / root;
    r.add_term("sqrt_estar", root);
    r.add_term("variance_term", a);
    r.add_term("scale_term", b);
    r.add_term("large_branch", root + a + b);
    r.add_term("ratio", 1.0 + a / root + b / root);
    r.branch = "large_estar";
    r.value = root + a + b;
  } else {
    r.branch = "small_estar";
    r.value = small;
  }
  return r;
}

/// Likelihood version with K = 1. Large branch on the ratio scale
/// sqrt(Khat / K*), small branch (K* <= E) on the root scale sqrt(Khat).
inline BoundReport bound_mle(const Complexity& cx, double C, double kstar, Mode mode) {
  require(kstar >= 0.0, "kstar must be >= 0");
  require(C >= 0.0, "C must be >= 0");
  if (!mode.is_tail()) detail::check_bernstein_m(cx, mode.value);
  const double E = detail::mode_E(cx, mode);
  BoundReport r;
  r.bound = "mle";
  detail::echo_common(r, cx, &mode);
  r.add_input("C", C);
  r.add_input("kstar", kstar);
  const double small = (C + 2.0) * std::sqrt(E);
  r.add_term("small_branch", small);
  if (kstar > E) {
    const double a = C * std::sqrt(E / kstar);
    const double b = E / kstar;
    r.add_term("variance_term", a);
    r.add_term("scale_term", b);
    r.add_term("large_branch", 1.0 + a + b);
    r.branch = "large_kstar";
    r.scale = Scale::ratio;
    r.value = 1.0 + a + b;
  } else {
    r.branch = "small_kstar";
    r.scale = Scale::root;
    r.value = small;
  }
  r.notes.push_back("requires max sqrt(f0/f*) <= C/8");
  return r;
}

// ---------------------------------------------------------------------------
// Quadratic margin, power tails.

inline double quadratic_power_crossover(double m, double s, double M, double delta_value) {
  const double c = c_ms(m, s);
  const double e = (2.0 * s + m) / (2.0 * s);
  return std::pow(c, e) * std::pow((2.0 * s - m) / (2.0 * s + m), e) * M *
         std::pow(delta_value, (2.0 * s - m) / (2.0 * s));
}

/// Moment bound under power tails of the envelope. Above the crossover the
/// value is on the ratio scale sqrt(Ehat/E*); below it on the root scale.
inline BoundReport bound_quadratic_power(const Complexity& cx, double C, double s, double M, double estar, double m) {
  require(estar >= 0.0, "estar must be >= 0");
  require(C >= 0.0, "C must be >= 0");
  require(s > 1.0, "s must be > 1");
  require(M >= 0.0, "M must be >= 0");
  detail::check_bernstein_m(cx, m);
  if (m >= 2.0 * s) throw PreconditionError("moment order m must be < 2s");
  const double D = cx.delta;
  const Mode mode = Mode::moment(m);
  BoundReport r;
  r.bound = "quadratic_power";
  detail::echo_common(r, cx, &mode);
  r.add_input("C", C);
  r.add_input("s", s);
  r.add_input("M", M);
  r.add_input("estar", estar);
  const double c = c_ms(m, s);
  const double cp = c_prime_ms(m, s);
  const double cross = quadratic_power_crossover(m, s, M, D);
  r.add_term("c_ms", c);
  r.add_term("c_prime_ms", cp);
  r.add_term("crossover", cross);
  const double small = C * std::sqrt(D) + cp * std::sqrt(M) * std::pow(D, (2.0 * s - m) / (4.0 * s));
  r.add_term("small_branch", small);
  if (estar > 0.0) {
    const double a = C * std::sqrt(D / estar);
    const double b = c * std::pow(M / estar, 2.0 * s / (2.0 * s + m)) * std::pow(D, (2.0 * s - m) / (2.0 * s + m));
    r.add_term("variance_term", a);
    r.add_term("tail_term", b);
    r.add_term("large_branch", 1.0 + a + b);
  }
  if (estar > cross) {
    r.branch = "large_estar";
    r.scale = Scale::ratio;
    r.value = *r.term("large_branch");
  } else {
    r.branch = "small_estar";
    r.scale = Scale::root;
    r.value = small;
  }
  return r;
}

/// (E (sqrt Ehat)^s)^{1/s} <= C c_s p^{1/s} M / sqrt(n) + sqrt(E*), with M^s = E|eps|^s.
inline BoundReport bound_small_p_ls(double n, double p, double C, double s, double M, double estar) {
  require(n >= 1.0 && p >= 1.0, "n and p must be >= 1");
  require(C >= 0.0, "C must be >= 0");
  require(s > 1.0, "s must be > 1");
  require(M >= 0.0, "M must be >= 0");
  require(estar >= 0.0, "estar must be >= 0");
  const auto cx = Complexity::of(n, p);
  BoundReport r;
  r.bound = "small_p_ls";
  r.branch = "small_p";
  r.scale = Scale::root;
  const Mode mode = Mode::moment(s);
  detail::echo_common(r, cx, &mode);
  r.add_input("C", C);
  r.add_input("s", s);
  r.add_input("M", M);
  r.add_input("estar", estar);
  const double cs = c_s(s);
  const double noise = C * cs * std::pow(p, 1.0 / s) * M / std::sqrt(n);
  r.add_term("c_s", cs);
  r.add_term("noise_term", noise);
  r.add_term("sqrt_estar", std::sqrt(estar));
  const double sq = C * cs * std::pow(n, -(s - 1.0) / (2.0 * s)) * M + std::sqrt(estar);
  r.add_term("mean_bound_squared", sq * sq);
  // p <= sqrt(n), compared without rounding for integer inputs
  r.add_flag("p_at_most_sqrt_n", p * p <= n);
  r.value = noise + std::sqrt(estar);
  r.notes.push_back("mean_bound_squared bounds E Ehat only when p <= sqrt(n) and s >= 2");
  r.add_flag("mean_bound_s_at_least_2", s >= 2.0);
  return r;
}

// ---------------------------------------------------------------------------
// General margin.

/// Grid spot check that v -> H(v^{1/r}) is concave on (0, vmax].
inline bool conjugate_power_concave(const MarginSpec& spec, double r, double vmax, int points = 256) {
  const double h = vmax / points;
  const auto f = [&](double v) { return conjugate_H(spec, std::pow(v, 1.0 / r)); };
  for (int k = 1; k < points; ++k) {
    const double v = k * h;
    const double second = f(v - h) - 2.0 * f(v) + f(v + h);
    if (second > 1e-9 * std::max(1.0, std::abs(f(v)))) return false;
  }
  return true;
}

/// Bound on E Ehat under a general margin G and exponential moments, using
/// the argument sqrt(Delta)/delta + K Delta / (delta G^{-1}(E* v eps)).
inline BoundReport bound_general_margin_expectation(const MarginSpec& spec, const Complexity& cx, double K, double estar,
                                                    double delta_opt, double eps_floor, double r) {
  if (!(delta_opt > 0.0 && delta_opt < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  require(eps_floor > 0.0, "eps must be > 0");
  require(K >= 0.0, "K must be >= 0");
  require(estar >= 0.0, "estar must be >= 0");
  require(r >= 1.0, "concavity order r must be >= 1");
  spec.validate();
  BoundReport r_;
  r_.bound = "general_margin_expectation";
  r_.branch = "proof_argument";
  r_.scale = Scale::mean;
  detail::echo_common(r_, cx, nullptr);
  r_.add_input("K", K);
  r_.add_input("estar", estar);
  r_.add_input("delta_opt", delta_opt);
  r_.add_input("eps", eps_floor);
  r_.add_input("r", r);
  const double d = delta_opt;
  const double ginv = margin_G_inverse(spec, std::max(estar, eps_floor));
  const double base = std::sqrt(cx.delta) / d;
  const double arg = base + K * cx.delta / (d * ginv);
  const double arg_stated = base + K * cx.delta / (2.0 * d * ginv);
  const double value = (2.0 * d * conjugate_H(spec, arg) + (1.0 + d) * estar) / (1.0 - d);
  const double stated = (2.0 * d * conjugate_H(spec, arg_stated) + (1.0 + d) * estar) / (1.0 - d);
  r_.add_term("G_inverse", ginv);
  r_.add_term("argument", arg);
  r_.add_term("H_argument", conjugate_H(spec, arg));
  r_.add_term("statement_argument", arg_stated);
  r_.add_term("statement_value", stated);
  r_.value = value;
  r_.add_flag("r_in_range", r <= max_bernstein_moment(cx.p));
  r_.add_flag("H_root_concave", conjugate_power_concave(spec, r, std::max(1.0, std::pow(2.0 * arg, r))));
  r_.notes.push_back("argument uses K Delta / (delta G^-1); the displayed statement has 2 delta (reported as statement_value)");
  return r_;
}

/// Moment or tail bound on Ehat^{1/2kappa} under a power margin and exponential
/// moments. With a floor tau the large-E* form is used with E* replaced by E* v tau.
inline BoundReport bound_general_margin_exp(const Complexity& cx, double kappa, double C, double K, double estar, Mode mode,
                                            std::optional<double> tau = std::nullopt) {
  require(kappa >= 1.0, "kappa must be >= 1");
  require(C >= 0.0, "C must be >= 0");
  require(K >= 0.0, "K must be >= 0");
  require(estar >= 0.0, "estar must be >= 0");
  if (!mode.is_tail()) detail::check_bernstein_m(cx, mode.value, 2.0 * kappa - 1.0);
  require(!tau || *tau > 0.0, "tau must be > 0");
  require(!tau || !mode.is_tail(), "tau floor applies to moment mode only");
  const double E = detail::mode_E(cx, mode);
  const double A = A_kappa(kappa);
  const double alpha = 1.0 / (2.0 * kappa - 1.0);
  const double inv = 1.0 / (2.0 * kappa);
  BoundReport r;
  r.bound = "general_margin_exp";
  r.scale = Scale::root;
  r.kappa = kappa;
  detail::echo_common(r, cx, &mode);
  r.add_input("kappa", kappa);
  r.add_input("C", C);
  r.add_input("K", K);
  r.add_input("estar", estar);
  if (tau) r.add_input("tau", *tau);
  r.add_term("A", A);
  r.add_term("A_display", A_kappa_display(kappa));
  const double small = A * std::pow(C * std::sqrt(E), alpha) + 2.0 * std::pow(K * E, inv);
  r.add_term("small_branch", small);
  const auto large = [&](double floor) {
    const double root = std::pow(floor, inv);
    return root + A * std::pow(C * std::sqrt(E) + K * E / root, alpha);
  };
  if (tau) {
    const double floor = std::max(estar, *tau);
    r.add_term("floor", floor);
    r.branch = "floored";
    r.value = large(floor);
  } else if (estar > K * E) {
    r.branch = "large_estar";
    r.value = large(estar);
    r.add_term("large_branch", r.value);
  } else {
    r.branch = "small_estar";
    r.value = small;
  }
  r.notes.push_back("A(kappa) uses (2kappa)^{1/(2kappa-1)}; A_display is the kappa^{1/(2kappa-1)} variant");
  return r;
}

/// Moment bound on Ehat^{1/2kappa} under a power margin and a power-tailed envelope.
inline BoundReport bound_master_power(const Complexity& cx, double kappa, double C, double s, double M, double estar,
                                      double m, double tau) {
  require(kappa >= 1.0, "kappa must be >= 1");
  require(C >= 0.0, "C must be >= 0");
  require(s > 1.0, "s must be > 1");
  require(M >= 0.0, "M must be >= 0");
  require(estar >= 0.0, "estar must be >= 0");
  require(tau > 0.0, "tau must be > 0");
  if (m < 2.0 * kappa) throw PreconditionError("moment order m must be >= 2kappa");
  if (m >= 2.0 * s * kappa) throw PreconditionError("moment order m must be < 2 s kappa");
  detail::check_bernstein_m(cx, m);
  const auto k = evaluate_constants(kappa, s, m);
  const double a = k.alpha;
  const double b = k.beta;
  const double floor = std::max(estar, tau);
  const Mode mode = Mode::moment(m);
  BoundReport r;
  r.bound = "master_power";
  r.branch = "floored";
  r.scale = Scale::root;
  r.kappa = kappa;
  detail::echo_common(r, cx, &mode);
  r.add_input("kappa", kappa);
  r.add_input("C", C);
  r.add_input("s", s);
  r.add_input("M", M);
  r.add_input("estar", estar);
  r.add_input("tau", tau);
  const double t1 = std::pow(floor, 1.0 / (2.0 * kappa));
  const double t2 = k.A * std::pow(C, a) * std::pow(cx.delta, a / 2.0);
  const double m_exp = (s / m) * a / (a + b);
  const double d_exp = a * b / (a + b);
  const double t3 = *k.xi * std::pow(M, m_exp) * std::pow(cx.delta, d_exp) * std::pow(floor, -d_exp / (2.0 * kappa));
  r.add_term("A", k.A);
  r.add_term("alpha", a);
  r.add_term("beta", b);
  r.add_term("xi", *k.xi);
  r.add_term("M_exponent", m_exp);
  r.add_term("delta_exponent", d_exp);
  r.add_term("floor_term", t1);
  r.add_term("variance_term", t2);
  r.add_term("tail_term", t3);
  r.value = t1 + t2 + t3;
  return r;
}

/// Optimizer of the floor for the power-tail master bound.
struct FloorOptimum {
  double tau = 0.0;
  double xi_tilde = 0.0;
};

inline FloorOptimum optimal_floor(double kappa, double s, double m, double M, double delta_value) {
  const auto k = evaluate_constants(kappa, s, m);
  require(k.xi_valid(), "moment order m must be < 2 s kappa");
  const double a = k.alpha;
  const double b = k.beta;
  const double bp = a * b / (a + b);
  const double coeff = *k.xi * std::pow(M, (s / m) * a / (a + b)) * std::pow(delta_value, bp);
  FloorOptimum out;
  out.xi_tilde = ctilde(1.0, bp) * std::pow(*k.xi, (a + b) / (a + b + a * b));
  // x + coeff x^{-bp} with x = tau^{1/2kappa}
  const double x0 = coeff > 0.0 ? std::pow(coeff * bp, 1.0 / (1.0 + bp)) : 0.0;
  out.tau = std::pow(x0, 2.0 * kappa);
  return out;
}

/// Floor-free forms: power tails (floor optimized) or exponential moments.
inline BoundReport bound_corollary71(const Complexity& cx, double kappa, double C, const TailSpec& tail, double estar,
                                     double m) {
  require(kappa >= 1.0, "kappa must be >= 1");
  require(C >= 0.0, "C must be >= 0");
  require(estar >= 0.0, "estar must be >= 0");
  validate(tail);
  const double a = 1.0 / (2.0 * kappa - 1.0);
  const double A = A_kappa(kappa);
  const Mode mode = Mode::moment(m);
  BoundReport r;
  r.bound = "corollary71";
  r.scale = Scale::root;
  r.kappa = kappa;
  detail::echo_common(r, cx, &mode);
  r.add_input("kappa", kappa);
  r.add_input("C", C);
  r.add_input("estar", estar);
  const double root = std::pow(estar, 1.0 / (2.0 * kappa));
  r.add_term("root_estar", root);
  if (const auto* pt = std::get_if<PowerTail>(&tail)) {
    if (m < 2.0 * kappa) throw PreconditionError("moment order m must be >= 2kappa");
    if (m >= 2.0 * pt->s * kappa) throw PreconditionError("moment order m must be < 2 s kappa");
    detail::check_bernstein_m(cx, m);
    r.add_input("s", pt->s);
    r.add_input("M", pt->M);
    const auto k = evaluate_constants(kappa, pt->s, m);
    const double b = k.beta;
    const double den = a + b + a * b;
    const auto opt = optimal_floor(kappa, pt->s, m, pt->M, cx.delta);
    const double t2 = A * std::pow(C, a) * std::pow(cx.delta, a / 2.0);
    const double t3 = opt.xi_tilde * std::pow(pt->M, (pt->s / m) * a / den) * std::pow(cx.delta, a * b / den);
    r.branch = "power_tail";
    r.add_term("xi_tilde", opt.xi_tilde);
    r.add_term("optimal_tau", opt.tau);
    r.add_term("M_exponent", (pt->s / m) * a / den);
    r.add_term("delta_exponent", a * b / den);
    r.add_term("variance_term", t2);
    r.add_term("tail_term", t3);
    r.value = root + t2 + t3;
    r.notes.push_back("xi_tilde computed by optimizing the floor in the power-tail master bound");
  } else {
    const double K = std::get<ExpMomentTail>(tail).K;
    detail::check_bernstein_m(cx, m, 2.0 * kappa - 1.0);
    r.add_input("K", K);
    const double t2 = std::pow(C, a) * std::pow(cx.delta, 1.0 / (4.0 * kappa - 2.0));
    const double t3 = std::sqrt(A) * std::pow(K, 1.0 / (2.0 * kappa)) * std::pow(cx.delta, 1.0 / (2.0 * kappa));
    r.branch = "exp_moment";
    r.add_term("variance_term", t2);
    r.add_term("scale_term", t3);
    r.value = root + t2 + t3;
  }
  return r;
}

/// Regime ratio: large values mean E(Ehat/E*)^{m/2kappa} should be close to 1.
inline double asymptotic_diagnostic(const Complexity& cx, double kappa, double C, const TailSpec& tail, double estar) {
  if (estar <= 0.0) throw PreconditionError("asymptotic diagnostic needs estar > 0");
  require(kappa >= 1.0, "kappa must be >= 1");
  validate(tail);
  const double D = cx.delta;
  if (const auto* pt = std::get_if<PowerTail>(&tail)) {
    require(kappa == 1.0, "power-tail diagnostic is defined for kappa = 1 only");
    const double s = pt->s;
    return estar / (C * C * D + std::pow(c_ms(2.0, s), (s + 1.0) / s) * pt->M * std::pow(D, (s - 1.0) / s));
  }
  const double K = std::get<ExpMomentTail>(tail).K;
  if (kappa == 1.0) return estar / ((K + C * C) * D);
  return estar / (C * std::pow(D, kappa / (2.0 * kappa - 1.0)) + K * D);
}

/// Tail bound of the maximal Bernstein inequality as a report.
inline BoundReport bound_bernstein(const Complexity& cx, double K, Mode mode, std::optional<double> tau = std::nullopt) {
  BoundReport r;
  r.bound = "bernstein";
  r.scale = Scale::root;
  detail::echo_common(r, cx, &mode);
  r.add_input("K", K);
  if (tau) {
    r.add_input("tau", *tau);
    r.branch = "weighted";
    r.value = mode.is_tail() ? weighted_bernstein(cx.n, cx.p, K, *tau, mode.value, std::nullopt)
                             : weighted_bernstein(cx.n, cx.p, K, *tau, std::nullopt, mode.value);
  } else if (mode.is_tail()) {
    r.branch = "tail";
    r.value = bernstein_tail_threshold(cx.n, cx.p, K, mode.value);
  } else {
    r.branch = "moment";
    r.value = bernstein_moment_bound(cx.n, cx.p, K, mode.value);
  }
  return r;
}

}  // namespace ermlab

#endif  // ERMLAB_BOUNDS_HPP

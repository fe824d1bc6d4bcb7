#ifndef ERMLAB_MARGINS_HPP
#define ERMLAB_MARGINS_HPP

// Margin functions G, their convex conjugates H, the Tsybakov construction
// for classification, and Hellinger geometry on finite density grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ermlab/core.hpp"
#include "ermlab/error.hpp"

namespace ermlab {

/// Which function the distance d(f_j, .) is measured from.
enum class Anchor { target, best };

inline const char* to_string(Anchor a) { return a == Anchor::target ? "target" : "best"; }

/// G(u) = u^{2 kappa} / C^{2 kappa}.
struct PowerMargin {
  double kappa = 1.0;
  double C = 1.0;
};

/// Piecewise-linear convex G through (u_k, g_k), starting at (0, 0).
struct TabulatedMargin {
  std::vector<double> u;
  std::vector<double> g;
};

struct MarginSpec {
  std::variant<PowerMargin, TabulatedMargin> form;
  Anchor anchor = Anchor::target;

  static MarginSpec power(double kappa, double C, Anchor anchor = Anchor::target) {
    MarginSpec m{PowerMargin{kappa, C}, anchor};
    m.validate();
    return m;
  }

  static MarginSpec tabulated(std::vector<double> u, std::vector<double> g, Anchor anchor = Anchor::target) {
    MarginSpec m{TabulatedMargin{std::move(u), std::move(g)}, anchor};
    m.validate();
    return m;
  }

  bool is_power() const noexcept { return std::holds_alternative<PowerMargin>(form); }
  const PowerMargin& as_power() const {
    require(is_power(), "margin is not of power form");
    return std::get<PowerMargin>(form);
  }

  void validate() const {
    if (const auto* pw = std::get_if<PowerMargin>(&form)) {
      require(pw->kappa >= 1.0, "margin exponent kappa must be >= 1");
      require(pw->C > 0.0 && std::isfinite(pw->C), "margin constant C must be > 0");
      return;
    }
    const auto& tab = std::get<TabulatedMargin>(form);
    require(tab.u.size() == tab.g.size(), "tabulated margin needs matching u and G columns");
    require(tab.u.size() >= 3, "tabulated margin needs at least 3 points");
    require(tab.u.front() == 0.0 && tab.g.front() == 0.0, "tabulated margin must start at G(0) = 0");
    double prev_slope = 0.0;
    for (std::size_t k = 1; k < tab.u.size(); ++k) {
      require(tab.u[k] > tab.u[k - 1], "tabulated margin u must be strictly increasing");
      const double slope = (tab.g[k] - tab.g[k - 1]) / (tab.u[k] - tab.u[k - 1]);
      require(k == 1 ? slope >= 0.0 : slope > prev_slope, "tabulated margin must be strictly convex and increasing");
      prev_slope = slope;
    }
  }
};

inline double margin_G(const MarginSpec& spec, double u) {
  require(u >= 0.0, "margin argument u must be >= 0");
  if (const auto* pw = std::get_if<PowerMargin>(&spec.form)) {
    return std::pow(u / pw->C, 2.0 * pw->kappa);
  }
  const auto& tab = std::get<TabulatedMargin>(spec.form);
  const auto& xs = tab.u;
  std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), u) - xs.begin());
  k = std::clamp<std::size_t>(k, 1, xs.size() - 1);
  const double slope = (tab.g[k] - tab.g[k - 1]) / (xs[k] - xs[k - 1]);
  return tab.g[k - 1] + slope * (u - xs[k - 1]);
}

/// Smallest u with G(u) >= y.
inline double margin_G_inverse(const MarginSpec& spec, double y) {
  require(y >= 0.0, "margin inverse argument must be >= 0");
  if (const auto* pw = std::get_if<PowerMargin>(&spec.form)) {
    return pw->C * std::pow(y, 1.0 / (2.0 * pw->kappa));
  }
  const auto& tab = std::get<TabulatedMargin>(spec.form);
  std::size_t k = 1;
  while (k + 1 < tab.g.size() && tab.g[k] < y) ++k;
  const double slope = (tab.g[k] - tab.g[k - 1]) / (tab.u[k] - tab.u[k - 1]);
  require(slope > 0.0 || y == 0.0, "tabulated margin is flat; inverse undefined");
  if (y == 0.0) return 0.0;
  return tab.u[k - 1] + (y - tab.g[k - 1]) / slope;
}

/// Convex conjugate H(v) = sup_u (u v - G(u)); for tabulated G the sup runs over
/// the grid points.
inline double conjugate_H(const MarginSpec& spec, double v) {
  require(v >= 0.0, "conjugate argument v must be >= 0");
  if (const auto* pw = std::get_if<PowerMargin>(&spec.form)) {
    const double e = 2.0 * pw->kappa;
    const double ustar = std::pow(v * std::pow(pw->C, e) / e, 1.0 / (e - 1.0));
    return ustar * v * (1.0 - 1.0 / e);
  }
  const auto& tab = std::get<TabulatedMargin>(spec.form);
  double best = 0.0;
  for (std::size_t k = 0; k < tab.u.size(); ++k) best = std::max(best, tab.u[k] * v - tab.g[k]);
  return best;
}

/// min_j (E_j - G(d_j)); nonnegative means the margin condition holds on the family.
inline double verify_margin(std::span<const double> excess, std::span<const double> distances,
                            const MarginSpec& spec) {
  if (distances.empty()) throw PreconditionError("missing distances");
  require(excess.size() == distances.size(), "excess and distance vectors differ in length");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < excess.size(); ++j) worst = std::min(worst, excess[j] - margin_G(spec, distances[j]));
  return worst;
}

// ---------------------------------------------------------------------------
// Tsybakov margin for classification.

struct TsybakovSpec {
  double C1 = 1.0;
  double gamma = 1.0;

  void validate() const {
    require(C1 >= 1.0, "Tsybakov C1 must be >= 1");
    require(gamma >= 0.0, "Tsybakov gamma must be >= 0");
  }
};

/// H_1(v) = v (C_1 v)^{1/gamma}; zero below 1/C_1 when gamma = 0.
inline double tsybakov_H1(const TsybakovSpec& spec, double v) {
  spec.validate();
  require(v >= 0.0, "v must be >= 0");
  if (spec.gamma == 0.0) return spec.C1 * v < 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return v * std::pow(spec.C1 * v, 1.0 / spec.gamma);
}

/// Constant of the power margin implied by a Tsybakov spec.
inline double tsybakov_C(const TsybakovSpec& spec) {
  spec.validate();
  if (spec.gamma == 0.0) return spec.C1;
  const double g = spec.gamma;
  return std::pow(spec.C1, 1.0 / (1.0 + g)) * std::pow(g, -g / (1.0 + g)) * (1.0 + g);
}

/// G_1(u) = u^{1+gamma} / C^{1+gamma}, the conjugate of H_1.
inline double tsybakov_G1(const TsybakovSpec& spec, double u) {
  require(u >= 0.0, "u must be >= 0");
  return std::pow(u / tsybakov_C(spec), 1.0 + spec.gamma);
}

/// Power margin with kappa = 1 + gamma. At gamma = 0 this is the limit of the
/// closed form (C = C_1), which stays strictly convex.
inline MarginSpec tsybakov_margin(const TsybakovSpec& spec) {
  return MarginSpec::power(1.0 + spec.gamma, tsybakov_C(spec));
}

/// Quadratic margin on the sigma scale when |1 - 2 eta| >= a_min everywhere:
/// P(gamma_f - gamma_0) >= a_min P|f - f_0| >= a_min sigma^2.
inline MarginSpec linear_margin(double a_min) {
  require(a_min > 0.0 && a_min <= 1.0, "a_min must lie in (0, 1]");
  return MarginSpec::power(1.0, 1.0 / std::sqrt(a_min));
}

/// Smallest Tsybakov exponent compatible with the finite law of |1 - 2 eta|
/// given by (values, weights), with C_1 = max(1, 1 / max value).
inline TsybakovSpec fit_tsybakov(std::span<const double> abs_margin, std::span<const double> weights) {
  require(!abs_margin.empty() && abs_margin.size() == weights.size(), "fit_tsybakov needs matching inputs");
  std::vector<std::pair<double, double>> pts;
  double total = 0.0;
  for (std::size_t k = 0; k < abs_margin.size(); ++k) {
    require(abs_margin[k] > 0.0 && abs_margin[k] <= 1.0, "|1 - 2 eta| must lie in (0, 1]");
    require(weights[k] >= 0.0, "weights must be >= 0");
    if (weights[k] > 0.0) pts.emplace_back(abs_margin[k], weights[k]);
    total += weights[k];
  }
  require(total > 0.0, "weights must not all vanish");
  std::sort(pts.begin(), pts.end());
  TsybakovSpec spec;
  spec.C1 = std::max(1.0, 1.0 / pts.back().first);
  spec.gamma = 0.0;
  // For v in (a_k, a_{k+1}] the mass below v is F_k; the binding v is a_k from above.
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    cum += pts[k].second / total;
    if (pts[k + 1].first == pts[k].first) continue;
    const double reach = spec.C1 * pts[k].first;
    if (reach >= 1.0 || cum >= 1.0) continue;
    spec.gamma = std::max(spec.gamma, std::log(reach) / std::log(cum));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Finite density grids.

class DensityGrid {
 public:
  DensityGrid(std::vector<double> support, std::vector<double> mu) : support_(std::move(support)), mu_(std::move(mu)) {
    require(!support_.empty(), "density grid needs at least one support point");
    require(support_.size() == mu_.size(), "support and mu must have equal length");
    for (double w : mu_) require(w > 0.0 && std::isfinite(w), "base measure weights must be > 0");
  }

  /// Stores a density and returns its id.
  std::size_t add(std::string name, std::vector<double> values) {
    require(values.size() == support_.size(), "density length does not match the grid");
    CompensatedSum total;
    for (std::size_t k = 0; k < values.size(); ++k) {
      require(values[k] >= 0.0 && std::isfinite(values[k]), "density values must be finite and >= 0");
      total.add(values[k] * mu_[k]);
    }
    require(std::abs(total.value() - 1.0) <= 1e-12, "density '" + name + "' does not integrate to 1");
    names_.push_back(std::move(name));
    values_.push_back(std::move(values));
    return values_.size() - 1;
  }

  std::size_t size() const noexcept { return support_.size(); }
  std::size_t count() const noexcept { return values_.size(); }
  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> mu() const noexcept { return mu_; }

  std::span<const double> density(std::size_t id) const {
    if (id >= values_.size()) throw PreconditionError("unknown density id " + std::to_string(id));
    return values_[id];
  }
  const std::string& name(std::size_t id) const {
    if (id >= names_.size()) throw PreconditionError("unknown density id " + std::to_string(id));
    return names_[id];
  }
  std::size_t id(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw PreconditionError("unknown density '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
  }

 private:
  std::vector<double> support_;
  std::vector<double> mu_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> values_;
};

/// Rescales `values` so that they integrate to one against mu.
inline std::vector<double> normalized(std::vector<double> values, std::span<const double> mu) {
  require(values.size() == mu.size(), "density length does not match the grid");
  CompensatedSum total;
  for (std::size_t k = 0; k < values.size(); ++k) total.add(values[k] * mu[k]);
  require(total.value() > 0.0, "cannot normalize a zero density");
  for (double& v : values) v /= total.value();
  return values;
}

inline double hellinger2(const DensityGrid& grid, std::size_t f, std::size_t g) {
  const auto a = grid.density(f);
  const auto b = grid.density(g);
  const auto mu = grid.mu();
  CompensatedSum sum;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::sqrt(a[k]) - std::sqrt(b[k]);
    sum.add(d * d * mu[k]);
  }
  return 0.5 * sum.value();
}

/// Loss of the transformed log-likelihood, gamma(a) = -log(a) / 2.
inline double likelihood_loss(double a) { return -0.5 * std::log(a); }

/// P(gamma_f - gamma_{f_0}) = KL(f_0 || f) / 2 under P = f_0 mu.
inline double half_kl(const DensityGrid& grid, std::size_t f0, std::size_t f) {
  const auto a = grid.density(f0);
  const auto b = grid.density(f);
  const auto mu = grid.mu();
  CompensatedSum sum;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    if (b[k] == 0.0) throw PreconditionError("density '" + grid.name(f) + "' vanishes where the target is positive");
    sum.add(a[k] * mu[k] * (likelihood_loss(b[k]) - likelihood_loss(a[k])));
  }
  return sum.value();
}

struct MleReport {
  double excess_minus_h2 = 0.0;        // must be >= 0
  double max_root_ratio = 0.0;         // max over the support of sqrt(f_0 / f_*)
  bool precondition = false;           // max_root_ratio <= C / 8
  double sigma_minus_C_h = 0.0;        // must be <= 0 when the precondition holds
};

/// Likelihood-margin diagnostics for f against the target f0 and best f_star,
/// with fbar = (f + f_star) / 2.
inline MleReport mle_checks(const DensityGrid& grid, std::size_t f, std::size_t f_star, std::size_t f0, double C) {
  require(C > 0.0, "C must be > 0");
  const auto a = grid.density(f);
  const auto s = grid.density(f_star);
  const auto t = grid.density(f0);
  const auto mu = grid.mu();
  MleReport r;
  r.excess_minus_h2 = half_kl(grid, f0, f) - hellinger2(grid, f, f0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] == 0.0) continue;
    if (s[k] == 0.0) throw PreconditionError("best density vanishes where the target is positive");
    r.max_root_ratio = std::max(r.max_root_ratio, std::sqrt(t[k] / s[k]));
  }
  r.precondition = r.max_root_ratio <= C / 8.0;
  // sigma under P of gamma_fbar - gamma_fstar, and h(fbar, fstar)
  CompensatedSum mean;
  CompensatedSum h2;
  std::vector<double> diff(t.size(), 0.0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double bar = 0.5 * (a[k] + s[k]);
    const double d = std::sqrt(bar) - std::sqrt(s[k]);
    h2.add(0.5 * d * d * mu[k]);
    if (t[k] == 0.0) continue;
    diff[k] = likelihood_loss(bar) - likelihood_loss(s[k]);
    mean.add(t[k] * mu[k] * diff[k]);
  }
  CompensatedSum var;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] == 0.0) continue;
    const double c = diff[k] - mean.value();
    var.add(t[k] * mu[k] * c * c);
  }
  r.sigma_minus_C_h = std::sqrt(var.value()) - C * std::sqrt(h2.value());
  return r;
}

}  // namespace ermlab

#endif  // ERMLAB_MARGINS_HPP

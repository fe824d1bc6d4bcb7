#ifndef ERMLAB_PROBLEMS_HPP
#define ERMLAB_PROBLEMS_HPP

// Synthetic model-selection problems on finite designs. Every population
// quantity (excess risks, variances, centered moments, KL numbers) is an exact
// finite sum; only the test sample is random.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ermlab/bounds.hpp"
#include "ermlab/core.hpp"
#include "ermlab/error.hpp"
#include "ermlab/margins.hpp"
#include "ermlab/rng.hpp"

namespace ermlab {

// ---------------------------------------------------------------------------
// Noise laws.

struct GaussianNoise {
  double sigma = 1.0;
};

/// Symmetric law with P(|eps| <= u) = 1 - (1 + u)^{-s}.
struct DoubleParetoNoise {
  double s = 3.0;
};

using Noise = std::variant<GaussianNoise, DoubleParetoNoise>;

inline double sample_double_pareto(const DoubleParetoNoise& spec, Stream& rng) {
  const double mag = std::pow(rng.uniform_positive(), -1.0 / spec.s) - 1.0;
  return rng.sign() * mag;
}

inline double sample_noise(const Noise& noise, Stream& rng) {
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) return g->sigma == 0.0 ? 0.0 : g->sigma * rng.normal();
  return sample_double_pareto(std::get<DoubleParetoNoise>(noise), rng);
}

/// E|eps|^m; infinite when the moment does not exist.
inline double noise_abs_moment(const Noise& noise, double m) {
  require(m >= 0.0, "moment order must be >= 0");
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) {
    return std::pow(g->sigma, m) * std::pow(2.0, m / 2.0) * std::tgamma((m + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
  }
  const double s = std::get<DoubleParetoNoise>(noise).s;
  if (m >= s) return std::numeric_limits<double>::infinity();
  return std::exp(std::lgamma(m + 1.0) + std::lgamma(s - m) - std::lgamma(s));
}

inline double noise_variance(const Noise& noise) { return noise_abs_moment(noise, 2.0); }

inline double double_pareto_cdf_abs(double s, double u) { return u <= 0.0 ? 0.0 : 1.0 - std::pow(1.0 + u, -s); }

// ---------------------------------------------------------------------------
// Claims attached to a problem.

struct MarginClaim {
  double kappa = 1.0;
  double C = 0.0;  // zero only for noiseless problems, where every distance vanishes
  std::string provenance;

  MarginSpec spec(Anchor anchor = Anchor::target) const { return MarginSpec::power(kappa, C, anchor); }
};

struct TailClaim {
  TailSpec tail;
  std::string provenance;
};

/// One random test sample and its loss table.
struct Draw {
  LossTable table{1, 1};
  std::vector<std::size_t> points;  // design / support index of each test point
  std::vector<double> noise;        // regression noise, or labels for classification
};

// ---------------------------------------------------------------------------
// Models.

/// Least squares on a finite design. Fixed design: test point i sits at design
/// point i and centering is per point. Random design: test points are i.i.d.
/// from `weights` and centering is global.
struct RegressionModel {
  std::vector<double> f0;
  std::vector<std::vector<double>> f;  // candidates, each over the design
  Noise noise;
  std::vector<double> weights;         // design weights (1/n each for fixed design)
  bool random_design = false;
  std::size_t sample_size = 0;
  std::vector<double> by_point;        // f transposed: by_point[i * p + j] = f[j][i]

  void index() {
    by_point.resize(f0.size() * p());
    for (std::size_t j = 0; j < p(); ++j) {
      for (std::size_t i = 0; i < f0.size(); ++i) by_point[i * p() + j] = f[j][i];
    }
  }

  std::size_t n() const { return sample_size; }
  std::size_t p() const { return f.size(); }
  std::size_t design_size() const { return f0.size(); }

  double excess(std::span<const double> g) const {
    CompensatedSum e;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const double d = g[i] - f0[i];
      e.add(weights[i] * d * d);
    }
    return e.value();
  }

  std::vector<double> mixture(std::size_t j, std::size_t star, double alpha) const {
    std::vector<double> g(f0.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = alpha * f[j][i] + (1.0 - alpha) * f[star][i];
    return g;
  }

  void draw(Stream& rng, Draw& out) const {
    const std::size_t n_ = n();
    const std::size_t p_ = p();
    if (out.table.n() != n_ || out.table.p() != p_) out.table = LossTable(n_, p_);
    out.points.resize(n_);
    out.noise.resize(n_);
    auto& tgt = out.table.target_column();
    tgt.resize(n_);
    std::vector<double> cum;
    if (random_design) cum = cumulative(weights);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t x = random_design ? pick(cum, rng) : i;
      const double eps = sample_noise(noise, rng);
      out.points[i] = x;
      out.noise[i] = eps;
      const double y = f0[x] + eps;
      auto row = out.table.row(i);
      const double* fx = by_point.data() + x * p_;
      for (std::size_t j = 0; j < p_; ++j) {
        const double r = y - fx[j];
        row[j] = r * r;
      }
      tgt[i] = eps * eps;
    }
  }

  double mixed_empirical(const Draw& d, std::span<const double> g) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < d.points.size(); ++i) {
      const std::size_t x = d.points[i];
      const double r = f0[x] + d.noise[i] - g[x];
      s.add(r * r);
    }
    return s.value() / static_cast<double>(d.points.size());
  }

  /// sigma(gamma_j - gamma_k); k = npos means the target.
  double sigma_between(std::size_t j, std::size_t k) const {
    const double var_eps = noise_variance(noise);
    CompensatedSum e_part;
    CompensatedSum l_mean;
    CompensatedSum l_sq;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const double gk = k == npos ? f0[i] : f[k][i];
      const double d = f[j][i] - gk;
      e_part.add(weights[i] * 4.0 * var_eps * d * d);
      if (random_design) {
        const double l = sq(f[j][i] - f0[i]) - sq(gk - f0[i]);
        l_mean.add(weights[i] * l);
        l_sq.add(weights[i] * l * l);
      }
    }
    const double l_var = random_design ? std::max(0.0, l_sq.value() - sq(l_mean.value())) : 0.0;
    return std::sqrt(e_part.value() + l_var);
  }

  /// P|gamma_j^c - gamma_k^c|^m, exact for fixed designs.
  double centered_abs_moment(std::size_t j, std::size_t k, double m) const {
    if (random_design) throw PreconditionError("exact moments unavailable");
    const double em = noise_abs_moment(noise, m);
    CompensatedSum s;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const double d = std::abs(f[j][i] - f[k][i]);
      if (d == 0.0) continue;
      s.add(weights[i] * std::pow(2.0 * d, m) * em);
    }
    return s.value();
  }

  /// (total, noise part, design part) of var(gamma_j - gamma_0).
  std::array<double, 3> variance_decomposition(std::size_t j) const {
    const double var_eps = noise_variance(noise);
    CompensatedSum e_part;
    CompensatedSum l_mean;
    CompensatedSum l_sq;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const double d = f[j][i] - f0[i];
      e_part.add(weights[i] * 4.0 * var_eps * d * d);
      l_mean.add(weights[i] * d * d);
      l_sq.add(weights[i] * d * d * d * d);
    }
    const double l_part = random_design ? std::max(0.0, l_sq.value() - sq(l_mean.value())) : 0.0;
    return {e_part.value() + l_part, e_part.value(), l_part};
  }

  /// n values of the envelope max_j |gamma_j^c - gamma_star^c| at test points.
  void envelope(Stream& rng, std::size_t star, std::vector<double>& out) const {
    if (random_design) throw PreconditionError("envelope sampling needs a fixed design");
    for (std::size_t i = 0; i < f0.size(); ++i) {
      double b = 0.0;
      for (std::size_t j = 0; j < p(); ++j) b = std::max(b, std::abs(f[j][i] - f[star][i]));
      out.push_back(2.0 * std::abs(sample_noise(noise, rng)) * b);
    }
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  static double sq(double x) { return x * x; }

  static std::vector<double> cumulative(std::span<const double> w) {
    std::vector<double> c(w.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) c[k] = (acc += w[k]);
    return c;
  }
  static std::size_t pick(const std::vector<double>& cum, Stream& rng) {
    const double u = rng.uniform() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
  }
};

/// 0/1 loss gamma_f(x, y) = (1 - y) f(x) + y (1 - f(x)) on a weighted finite design.
struct ClassificationModel {
  std::vector<double> weights;
  std::vector<double> eta;
  std::vector<double> f0;              // Bayes rule
  std::vector<std::vector<double>> f;  // candidates with values in [0, 1]
  std::size_t sample_size = 0;

  std::size_t n() const { return sample_size; }
  std::size_t p() const { return f.size(); }

  double excess(std::span<const double> g) const {
    CompensatedSum e;
    for (std::size_t k = 0; k < weights.size(); ++k) e.add(weights[k] * (g[k] - f0[k]) * (1.0 - 2.0 * eta[k]));
    return e.value();
  }

  std::vector<double> mixture(std::size_t j, std::size_t star, double alpha) const {
    std::vector<double> g(f0.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = alpha * f[j][k] + (1.0 - alpha) * f[star][k];
    return g;
  }

  void draw(Stream& rng, Draw& out) const {
    const std::size_t n_ = n();
    const std::size_t p_ = p();
    if (out.table.n() != n_ || out.table.p() != p_) out.table = LossTable(n_, p_);
    out.points.resize(n_);
    out.noise.resize(n_);
    auto& tgt = out.table.target_column();
    tgt.resize(n_);
    const auto cum = RegressionModel::cumulative(weights);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t x = RegressionModel::pick(cum, rng);
      const double y = rng.bernoulli(eta[x]) ? 1.0 : 0.0;
      out.points[i] = x;
      out.noise[i] = y;
      auto row = out.table.row(i);
      for (std::size_t j = 0; j < p_; ++j) row[j] = f[j][x] * (1.0 - 2.0 * y) + y;
      tgt[i] = f0[x] * (1.0 - 2.0 * y) + y;
    }
  }

  double mixed_empirical(const Draw& d, std::span<const double> g) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < d.points.size(); ++i) s.add(g[d.points[i]] * (1.0 - 2.0 * d.noise[i]) + d.noise[i]);
    return s.value() / static_cast<double>(d.points.size());
  }

  std::span<const double> values(std::size_t j) const {
    return j == RegressionModel::npos ? std::span<const double>(f0) : std::span<const double>(f[j]);
  }

  double sigma_between(std::size_t j, std::size_t k) const {
    const auto a = values(j);
    const auto b = values(k);
    CompensatedSum mean;
    CompensatedSum second;
    for (std::size_t x = 0; x < weights.size(); ++x) {
      const double d = a[x] - b[x];
      mean.add(weights[x] * d * (1.0 - 2.0 * eta[x]));
      second.add(weights[x] * d * d);
    }
    return std::sqrt(std::max(0.0, second.value() - mean.value() * mean.value()));
  }

  double centered_abs_moment(std::size_t j, std::size_t k, double m) const {
    const auto a = values(j);
    const auto b = values(k);
    CompensatedSum mean;
    for (std::size_t x = 0; x < weights.size(); ++x) mean.add(weights[x] * (a[x] - b[x]) * (1.0 - 2.0 * eta[x]));
    const double mu = mean.value();
    CompensatedSum s;
    for (std::size_t x = 0; x < weights.size(); ++x) {
      const double d = a[x] - b[x];
      // 1 - 2Y is -1 with probability eta and +1 otherwise
      s.add(weights[x] * (eta[x] * std::pow(std::abs(-d - mu), m) + (1.0 - eta[x]) * std::pow(std::abs(d - mu), m)));
    }
    return s.value();
  }

  std::array<double, 3> variance_decomposition(std::size_t j) const {
    CompensatedSum e_part;
    CompensatedSum l_mean;
    CompensatedSum l_sq;
    for (std::size_t x = 0; x < weights.size(); ++x) {
      const double d = f[j][x] - f0[x];
      const double l = d * (1.0 - 2.0 * eta[x]);
      e_part.add(weights[x] * d * d * 4.0 * eta[x] * (1.0 - eta[x]));
      l_mean.add(weights[x] * l);
      l_sq.add(weights[x] * l * l);
    }
    const double l_part = std::max(0.0, l_sq.value() - l_mean.value() * l_mean.value());
    return {e_part.value() + l_part, e_part.value(), l_part};
  }

  void envelope(Stream& rng, std::size_t star, std::vector<double>& out) const {
    std::vector<double> mu(p());
    for (std::size_t j = 0; j < p(); ++j) {
      CompensatedSum m;
      for (std::size_t x = 0; x < weights.size(); ++x) m.add(weights[x] * (f[j][x] - f[star][x]) * (1.0 - 2.0 * eta[x]));
      mu[j] = m.value();
    }
    const auto cum = RegressionModel::cumulative(weights);
    for (std::size_t i = 0; i < n(); ++i) {
      const std::size_t x = RegressionModel::pick(cum, rng);
      const double sgn = rng.bernoulli(eta[x]) ? -1.0 : 1.0;
      double g = 0.0;
      for (std::size_t j = 0; j < p(); ++j) g = std::max(g, std::abs((f[j][x] - f[star][x]) * sgn - mu[j]));
      out.push_back(g);
    }
  }
};

/// Likelihood loss gamma_f = -log(f)/2 on a finite density grid, sampling
/// from the target density.
struct DensityModel {
  DensityGrid grid{{0.0}, {1.0}};
  std::size_t target = 0;
  std::vector<std::size_t> candidates;
  std::size_t sample_size = 0;

  std::size_t n() const { return sample_size; }
  std::size_t p() const { return candidates.size(); }

  double excess(std::span<const double> g) const {
    const auto t = grid.density(target);
    const auto mu = grid.mu();
    CompensatedSum s;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] == 0.0) continue;
      if (g[k] <= 0.0) throw PreconditionError("candidate vanishes where the target is positive");
      s.add(t[k] * mu[k] * (likelihood_loss(g[k]) - likelihood_loss(t[k])));
    }
    return s.value();
  }

  std::vector<double> mixture(std::size_t j, std::size_t star, double alpha) const {
    const auto a = grid.density(candidates[j]);
    const auto b = grid.density(candidates[star]);
    std::vector<double> g(a.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = alpha * a[k] + (1.0 - alpha) * b[k];
    return g;
  }

  std::vector<double> probabilities() const {
    const auto t = grid.density(target);
    const auto mu = grid.mu();
    std::vector<double> w(t.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = t[k] * mu[k];
    return w;
  }

  void draw(Stream& rng, Draw& out) const {
    const std::size_t n_ = n();
    const std::size_t p_ = p();
    if (out.table.n() != n_ || out.table.p() != p_) out.table = LossTable(n_, p_);
    out.points.resize(n_);
    out.noise.clear();
    auto& tgt = out.table.target_column();
    tgt.resize(n_);
    const auto cum = RegressionModel::cumulative(probabilities());
    const auto t = grid.density(target);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t z = RegressionModel::pick(cum, rng);
      out.points[i] = z;
      auto row = out.table.row(i);
      for (std::size_t j = 0; j < p_; ++j) row[j] = likelihood_loss(grid.density(candidates[j])[z]);
      tgt[i] = likelihood_loss(t[z]);
    }
  }

  double mixed_empirical(const Draw& d, std::span<const double> g) const {
    CompensatedSum s;
    for (std::size_t z : d.points) s.add(likelihood_loss(g[z]));
    return s.value() / static_cast<double>(d.points.size());
  }

  std::span<const double> values(std::size_t j) const {
    return grid.density(j == RegressionModel::npos ? target : candidates[j]);
  }

  double sigma_between(std::size_t j, std::size_t k) const {
    const auto a = values(j);
    const auto b = values(k);
    const auto w = probabilities();
    CompensatedSum mean;
    CompensatedSum second;
    for (std::size_t z = 0; z < w.size(); ++z) {
      if (w[z] == 0.0) continue;
      const double d = likelihood_loss(a[z]) - likelihood_loss(b[z]);
      mean.add(w[z] * d);
      second.add(w[z] * d * d);
    }
    return std::sqrt(std::max(0.0, second.value() - mean.value() * mean.value()));
  }

  double centered_abs_moment(std::size_t j, std::size_t k, double m) const {
    const auto a = values(j);
    const auto b = values(k);
    const auto w = probabilities();
    CompensatedSum mean;
    for (std::size_t z = 0; z < w.size(); ++z) {
      if (w[z] > 0.0) mean.add(w[z] * (likelihood_loss(a[z]) - likelihood_loss(b[z])));
    }
    CompensatedSum s;
    for (std::size_t z = 0; z < w.size(); ++z) {
      if (w[z] > 0.0) s.add(w[z] * std::pow(std::abs(likelihood_loss(a[z]) - likelihood_loss(b[z]) - mean.value()), m));
    }
    return s.value();
  }

  void envelope(Stream& rng, std::size_t star, std::vector<double>& out) const {
    const auto w = probabilities();
    std::vector<double> mu(p());
    for (std::size_t j = 0; j < p(); ++j) {
      CompensatedSum m;
      for (std::size_t z = 0; z < w.size(); ++z) {
        if (w[z] > 0.0) m.add(w[z] * (likelihood_loss(values(j)[z]) - likelihood_loss(values(star)[z])));
      }
      mu[j] = m.value();
    }
    const auto cum = RegressionModel::cumulative(w);
    for (std::size_t i = 0; i < n(); ++i) {
      const std::size_t z = RegressionModel::pick(cum, rng);
      double g = 0.0;
      for (std::size_t j = 0; j < p(); ++j) {
        g = std::max(g, std::abs(likelihood_loss(values(j)[z]) - likelihood_loss(values(star)[z]) - mu[j]));
      }
      out.push_back(g);
    }
  }
};

using Model = std::variant<RegressionModel, ClassificationModel, DensityModel>;

// ---------------------------------------------------------------------------
// Problem instances.

struct ProblemInstance {
  std::string family;
  Model model;
  RiskProfile risk;
  MarginClaim margin;
  std::optional<TailClaim> tail;
  std::vector<double> distances_target;  // d(f_j, f_0)
  std::vector<double> distances_best;    // d(f_j, f_*)
  bool convex = false;                   // mixing candidates is meaningful
  std::optional<double> lower_bound_level;

  std::size_t n() const {
    return std::visit([](const auto& m) { return m.n(); }, model);
  }
  std::size_t p() const { return risk.p(); }

  const std::vector<double>& distances(Anchor a) const {
    return a == Anchor::target ? distances_target : distances_best;
  }

  void draw(Stream& rng, Draw& out) const {
    std::visit([&](const auto& m) { m.draw(rng, out); }, model);
  }

  /// Excess risk of alpha f_j + (1 - alpha) f_*.
  double mixed_excess(std::size_t j, double alpha) const {
    require(convex, "mixing is not available for this problem");
    return std::visit([&](const auto& m) { return m.excess(m.mixture(j, risk.star_index, alpha)); }, model);
  }

  /// P_n of the mixed candidate minus P_n of the best candidate.
  double mixture_gap(const Draw& d, std::size_t j, double alpha, std::span<const double> risks) const {
    require(convex, "mixing is not available for this problem");
    return std::visit(
        [&](const auto& m) { return m.mixed_empirical(d, m.mixture(j, risk.star_index, alpha)) - risks[risk.star_index]; },
        model);
  }

  double centered_abs_moment(std::size_t j, double m) const {
    return std::visit([&](const auto& mod) { return mod.centered_abs_moment(j, risk.star_index, m); }, model);
  }

  std::array<double, 3> variance_decomposition(std::size_t j) const {
    if (const auto* r = std::get_if<RegressionModel>(&model)) return r->variance_decomposition(j);
    if (const auto* c = std::get_if<ClassificationModel>(&model)) return c->variance_decomposition(j);
    throw PreconditionError("decomposition unavailable");
  }

  void envelope(Stream& rng, std::vector<double>& out) const {
    std::visit([&](const auto& m) { m.envelope(rng, risk.star_index, out); }, model);
  }

  const Noise* noise() const {
    const auto* r = std::get_if<RegressionModel>(&model);
    return r ? &r->noise : nullptr;
  }
};

// ---------------------------------------------------------------------------
// Moment conditions on a problem.

/// max over j, m in [2, m_max] of P|gamma_j^c - gamma_*^c|^m / ((m!/2) (2K)^{m-2} d_j^2),
/// with d_j the best-anchored distances.
inline double verify_exp_moments(const ProblemInstance& pb, double K, std::span<const double> d, int m_max) {
  require(m_max >= 2, "m_max must be >= 2");
  require(K >= 0.0, "K must be >= 0");
  require(d.size() == pb.p(), "one distance per candidate required");
  double worst = 0.0;
  for (std::size_t j = 0; j < pb.p(); ++j) {
    for (int m = 2; m <= m_max; ++m) {
      const double num = pb.centered_abs_moment(j, m);
      if (num == 0.0) continue;
      const double den = 0.5 * std::tgamma(m + 1.0) * std::pow(2.0 * K, m - 2) * d[j] * d[j];
      worst = std::max(worst, den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
    }
  }
  return worst;
}

/// Smallest K passing verify_exp_moments up to m_max, in closed form.
inline double fit_exp_moment_K(const ProblemInstance& pb, int m_max = 12) {
  double K = 0.0;
  for (std::size_t j = 0; j < pb.p(); ++j) {
    const double d2 = pb.distances_best[j] * pb.distances_best[j];
    for (int m = 3; m <= m_max; ++m) {
      const double num = pb.centered_abs_moment(j, m);
      if (num == 0.0) continue;
      if (!std::isfinite(num) || d2 == 0.0) return std::numeric_limits<double>::infinity();
      const double need = std::pow(2.0 * num / (std::tgamma(m + 1.0) * d2), 1.0 / (m - 2)) / 2.0;
      K = std::max(K, need);
    }
  }
  return K;
}

inline double verify_margin(const ProblemInstance& pb, const MarginSpec& spec) {
  return verify_margin(pb.risk.excess, pb.distances(spec.anchor), spec);
}

// ---------------------------------------------------------------------------
// Factories.

struct RandomDesign {
  std::vector<double> weights;
  std::size_t sample_size = 0;
  double K1 = 0.0;  // sup-norm bound on f_j - f_0
};

namespace detail {

template <class M>
void fill_distances(ProblemInstance& pb, const M& model) {
  pb.distances_target.resize(pb.p());
  pb.distances_best.resize(pb.p());
  for (std::size_t j = 0; j < pb.p(); ++j) {
    pb.distances_target[j] = model.sigma_between(j, RegressionModel::npos);
    pb.distances_best[j] = model.sigma_between(j, pb.risk.star_index);
  }
}

}  // namespace detail

/// Least squares with fixed design (one test point per design point), or
/// random design when `random` is given.
inline ProblemInstance make_regression(std::vector<double> f0, std::vector<std::vector<double>> candidates, Noise noise,
                                       std::optional<RandomDesign> random = std::nullopt) {
  require(!f0.empty(), "design must have at least one point");
  require(!candidates.empty(), "at least one candidate required");
  for (const auto& c : candidates) {
    require(c.size() == f0.size(), "candidate length does not match the design");
    for (double v : c) require(std::isfinite(v), "candidate values must be finite");
  }
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) require(g->sigma >= 0.0, "sigma must be >= 0");
  if (const auto* dp = std::get_if<DoubleParetoNoise>(&noise)) require(dp->s > 2.0, "double Pareto s must be > 2");
  RegressionModel m;
  m.f0 = std::move(f0);
  m.f = std::move(candidates);
  m.noise = noise;
  m.index();
  const std::size_t N = m.f0.size();
  if (random) {
    require(random->weights.size() == N, "design weights must match the design");
    require(random->sample_size >= 1, "sample size must be >= 1");
    double total = 0.0;
    for (double w : random->weights) {
      require(w >= 0.0, "design weights must be >= 0");
      total += w;
    }
    require(total > 0.0, "design weights must not all vanish");
    m.weights = random->weights;
    for (double& w : m.weights) w /= total;
    m.random_design = true;
    m.sample_size = random->sample_size;
  } else {
    m.weights.assign(N, 1.0 / static_cast<double>(N));
    m.sample_size = N;
  }
  ProblemInstance pb;
  pb.family = "regression";
  pb.convex = true;
  std::vector<double> excess(m.f.size());
  for (std::size_t j = 0; j < m.f.size(); ++j) excess[j] = m.excess(m.f[j]);
  pb.risk = RiskProfile::from_excess(std::move(excess));
  const double var_eps = noise_variance(noise);
  if (random) {
    double sup = 0.0;
    for (const auto& c : m.f) {
      for (std::size_t i = 0; i < N; ++i) {
        if (m.weights[i] > 0.0) sup = std::max(sup, std::abs(c[i] - m.f0[i]));
      }
    }
    require(random->K1 > 0.0 && sup <= random->K1, "random design needs K1 >= sup |f_j - f_0|");
    pb.margin = {1.0, std::sqrt(4.0 * var_eps + random->K1 * random->K1), "closed form: random-design least squares"};
  } else {
    pb.margin = {1.0, 2.0 * std::sqrt(var_eps), "closed form: fixed-design least squares"};
  }
  detail::fill_distances(pb, m);
  pb.model = std::move(m);
  const auto& model = std::get<RegressionModel>(pb.model);
  if (!model.random_design) {
    if (std::holds_alternative<GaussianNoise>(noise)) {
      pb.tail = TailClaim{ExpMomentTail{fit_exp_moment_K(pb)}, "fitted"};
    } else {
      const double s = std::get<DoubleParetoNoise>(noise).s;
      CompensatedSum bs;
      for (std::size_t i = 0; i < N; ++i) {
        double b = 0.0;
        for (const auto& c : model.f) b = std::max(b, std::abs(c[i] - model.f[pb.risk.star_index][i]));
        bs.add(model.weights[i] * std::pow(b, s));
      }
      pb.tail = TailClaim{PowerTail{s, 2.0 * std::pow(bs.value(), 1.0 / s)}, "derived"};
    }
  }
  return pb;
}

/// f_0 = sin(2 pi x) on x_i = i/n and f_j = f_0 + sqrt(2 E_j) cos(2 pi (j+1) x),
/// so that the fixed-design excess risk of f_j is E_j whenever 2(j+1) < n.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> orthogonal_candidates(
    std::size_t n, std::span<const double> excess) {
  require(n >= 1, "n must be >= 1");
  std::vector<double> f0(n);
  for (std::size_t i = 0; i < n; ++i) f0[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  std::vector<std::vector<double>> f;
  for (std::size_t j = 0; j < excess.size(); ++j) {
    require(excess[j] >= 0.0, "target excess risks must be >= 0");
    require(2 * (j + 1) < n, "too many candidates for the design size");
    std::vector<double> c(n);
    const double a = std::sqrt(2.0 * excess[j]);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = f0[i] + a * std::cos(2.0 * std::numbers::pi * static_cast<double>((j + 1) * i) / n);
    }
    f.push_back(std::move(c));
  }
  return {std::move(f0), std::move(f)};
}

/// Spikes of height n^{1/2s} at the first sqrt(n) design points plus f_0 = 0 as
/// the last candidate, with double Pareto(s) noise. Optional constant
/// candidates are inserted before f_0.
inline ProblemInstance make_lower_bound_construction(std::size_t n, double s, std::span<const double> extra_constants = {}) {
  require(s > 2.0, "s must be > 2");
  const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (root * root != n || static_cast<double>(n) < std::pow(2.0, 2.0 * s)) {
    throw PreconditionError("n must be a perfect square with n >= 2^{2s}");
  }
  const double h = std::pow(static_cast<double>(n), 1.0 / (2.0 * s));
  std::vector<double> f0(n, 0.0);
  std::vector<std::vector<double>> f;
  for (std::size_t j = 0; j < root; ++j) {
    std::vector<double> c(n, 0.0);
    c[j] = h;
    f.push_back(std::move(c));
  }
  for (double c : extra_constants) {
    require(std::abs(c) <= 1.0, "extra candidates must satisfy |f| <= 1");
    f.emplace_back(n, c);
  }
  f.emplace_back(n, 0.0);
  auto pb = make_regression(std::move(f0), std::move(f), DoubleParetoNoise{s});
  pb.family = "lower_bound";
  pb.margin.provenance = "closed form: C^2 = 8/((s-2)(s-1))";
  if (extra_constants.empty()) pb.tail->provenance = "closed form: M = 2";
  // n^{-(s-1)/s}, taken from the finite sums so that {Ehat >= level} is exact
  pb.lower_bound_level = *std::min_element(pb.risk.excess.begin(), pb.risk.excess.begin() + root);
  return pb;
}

/// 0/1 classification with the Bayes rule as target and a fitted Tsybakov margin.
inline ProblemInstance make_classification(std::size_t n, std::vector<double> weights, std::vector<double> eta,
                                           std::vector<std::vector<double>> candidates) {
  require(n >= 1, "n must be >= 1");
  require(!weights.empty() && weights.size() == eta.size(), "weights and eta must have equal nonzero length");
  require(!candidates.empty(), "at least one candidate required");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "design weights must be >= 0");
    total += w;
  }
  require(total > 0.0, "design weights must not all vanish");
  for (double& w : weights) w /= total;
  ClassificationModel m;
  m.sample_size = n;
  m.f0.resize(eta.size());
  std::vector<double> abs_margin(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) {
    require(eta[k] >= 0.0 && eta[k] <= 1.0, "eta must lie in [0, 1]");
    if (eta[k] == 0.5) throw PreconditionError("eta = 1/2 at design point " + std::to_string(k));
    m.f0[k] = (1.0 - 2.0 * eta[k] < 0.0) ? 1.0 : 0.0;
    abs_margin[k] = std::abs(1.0 - 2.0 * eta[k]);
  }
  for (const auto& c : candidates) {
    require(c.size() == eta.size(), "candidate length does not match the design");
    for (double v : c) require(v >= 0.0 && v <= 1.0, "classifier values must lie in [0, 1]");
  }
  m.weights = std::move(weights);
  m.eta = std::move(eta);
  m.f = std::move(candidates);
  ProblemInstance pb;
  pb.family = "classification";
  pb.convex = true;
  std::vector<double> excess(m.f.size());
  for (std::size_t j = 0; j < m.f.size(); ++j) excess[j] = m.excess(m.f[j]);
  pb.risk = RiskProfile::from_excess(std::move(excess));
  const auto ts = fit_tsybakov(abs_margin, m.weights);
  pb.margin = {1.0 + ts.gamma, tsybakov_C(ts), "fitted"};
  pb.tail = TailClaim{ExpMomentTail{1.0}, "closed form: K = 1 for 0/1 loss"};
  detail::fill_distances(pb, m);
  pb.model = std::move(m);
  return pb;
}

/// Tsybakov parameters fitted on a classification problem's design.
inline TsybakovSpec classification_tsybakov(const ProblemInstance& pb) {
  const auto& m = std::get<ClassificationModel>(pb.model);
  std::vector<double> a(m.eta.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::abs(1.0 - 2.0 * m.eta[k]);
  return fit_tsybakov(a, m.weights);
}

/// Smallest |1 - 2 eta| over the design support.
inline double classification_min_margin(const ProblemInstance& pb) {
  const auto& m = std::get<ClassificationModel>(pb.model);
  double a = 1.0;
  for (std::size_t k = 0; k < m.eta.size(); ++k) {
    if (m.weights[k] > 0.0) a = std::min(a, std::abs(1.0 - 2.0 * m.eta[k]));
  }
  return a;
}

/// Maximum likelihood over stored densities; C = 8 max sqrt(f_0 / f_*).
inline ProblemInstance make_density_family(DensityGrid grid, std::size_t f0, std::vector<std::size_t> candidate_ids,
                                           std::size_t n) {
  require(n >= 1, "n must be >= 1");
  require(!candidate_ids.empty(), "at least one candidate required");
  grid.density(f0);
  DensityModel m;
  m.grid = std::move(grid);
  m.target = f0;
  m.candidates = std::move(candidate_ids);
  m.sample_size = n;
  ProblemInstance pb;
  pb.family = "density";
  pb.convex = true;
  std::vector<double> excess(m.p());
  for (std::size_t j = 0; j < m.p(); ++j) excess[j] = half_kl(m.grid, f0, m.candidates[j]);
  pb.risk = RiskProfile::from_excess(std::move(excess));
  const auto t = m.grid.density(f0);
  const auto s = m.grid.density(m.candidates[pb.risk.star_index]);
  double ratio = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] > 0.0) ratio = std::max(ratio, std::sqrt(t[k] / s[k]));
  }
  const double C = 8.0 * ratio;
  pb.margin = {1.0, C, "likelihood precondition: C = 8 max sqrt(f0/f*)"};
  pb.distances_target.resize(m.p());
  pb.distances_best.resize(m.p());
  for (std::size_t j = 0; j < m.p(); ++j) {
    pb.distances_target[j] = C * std::sqrt(hellinger2(m.grid, m.candidates[j], f0));
    pb.distances_best[j] = C * std::sqrt(hellinger2(m.grid, m.candidates[j], m.candidates[pb.risk.star_index]));
  }
  pb.model = std::move(m);
  return pb;
}

// ---------------------------------------------------------------------------
// Envelope tail fit.

struct EnvelopeFit {
  double M = 0.0;
  double slack_factor = 1.0;  // 3-sigma relative allowance on the binding tail count, as a factor on M
  double binding_K = 0.0;
  std::size_t binding_count = 0;
  std::size_t samples = 0;
};

/// Smallest M with P(Gamma > K) <= (M/K)^s over a log-spaced K grid, using
/// reps * n envelope draws and only grid points with >= 100 exceedances.
inline EnvelopeFit estimate_envelope_M(const ProblemInstance& pb, double s, Stream& rng, std::size_t reps) {
  require(s > 1.0, "s must be > 1");
  require(reps >= 1, "reps must be >= 1");
  std::vector<double> g;
  g.reserve(reps * pb.n());
  for (std::size_t r = 0; r < reps; ++r) pb.envelope(rng, g);
  std::sort(g.begin(), g.end());
  EnvelopeFit fit;
  fit.samples = g.size();
  const auto first_pos = std::upper_bound(g.begin(), g.end(), 0.0);
  if (first_pos == g.end()) return fit;
  const double lo = *first_pos;
  const double hi = g.back();
  const int points = 200;
  const double total = static_cast<double>(g.size());
  for (int k = 0; k <= points; ++k) {
    const double K = lo * std::pow(hi / lo, static_cast<double>(k) / points);
    const auto count = static_cast<std::size_t>(g.end() - std::upper_bound(g.begin(), g.end(), K));
    if (count < 100) break;
    const double M = K * std::pow(static_cast<double>(count) / total, 1.0 / s);
    if (M > fit.M) {
      fit.M = M;
      fit.binding_K = K;
      fit.binding_count = count;
    }
  }
  if (fit.binding_count > 0) {
    fit.slack_factor = std::pow(1.0 + 3.0 / std::sqrt(static_cast<double>(fit.binding_count)), 1.0 / s);
  }
  return fit;
}

}  // namespace ermlab

#endif  // ERMLAB_PROBLEMS_HPP

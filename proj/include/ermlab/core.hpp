#ifndef ERMLAB_CORE_HPP
#define ERMLAB_CORE_HPP

// Loss tables, the ERM selector, excess-risk bookkeeping and Monte Carlo
// moment / tail estimators shared by every experiment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ermlab/error.hpp"

namespace ermlab {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// n x p matrix of candidate losses on a test sample, row-major (one row per
/// test point), with an optional column of target losses.
class LossTable {
 public:
  LossTable(std::size_t n, std::size_t p) : n_(n), p_(p), loss_(n * p, 0.0) {
    require(n >= 1, "loss table needs n >= 1");
    require(p >= 1, "loss table needs p >= 1");
  }

  /// Checked constructor: sizes must agree and every entry must be finite.
  LossTable(std::size_t n, std::size_t p, std::vector<double> row_major,
            std::vector<double> target = {})
      : n_(n), p_(p), loss_(std::move(row_major)), loss0_(std::move(target)) {
    require(n >= 1, "loss table needs n >= 1");
    require(p >= 1, "loss table needs p >= 1");
    require(loss_.size() == n * p, "loss table size does not match n * p");
    require(loss0_.empty() || loss0_.size() == n, "target loss column must have n entries");
    validate();
  }

  static LossTable from_columns(const std::vector<std::vector<double>>& columns) {
    require(!columns.empty(), "loss table needs p >= 1");
    const std::size_t n = columns.front().size();
    std::vector<double> data(n * columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      require(columns[j].size() == n, "all loss columns must have the same length");
      for (std::size_t i = 0; i < n; ++i) data[i * columns.size() + j] = columns[j][i];
    }
    return LossTable(n, columns.size(), std::move(data));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return loss_[i * p_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return loss_[i * p_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {loss_.data() + i * p_, p_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {loss_.data() + i * p_, p_}; }

  bool has_target() const noexcept { return !loss0_.empty(); }
  std::span<const double> target() const noexcept { return loss0_; }
  std::vector<double>& target_column() noexcept { return loss0_; }

  void validate() const {
    for (double v : loss_) require(std::isfinite(v), "loss table entries must be finite");
    for (double v : loss0_) require(std::isfinite(v), "target losses must be finite");
  }

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<double> loss_;
  std::vector<double> loss0_;
};

/// Exact population excess risks of the candidates.
struct RiskProfile {
  std::vector<double> excess;
  double estar = 0.0;
  std::size_t star_index = 0;

  static RiskProfile from_excess(std::vector<double> excess) {
    require(!excess.empty(), "risk profile needs at least one candidate");
    RiskProfile r;
    for (double e : excess) require(std::isfinite(e) && e >= 0.0, "excess risks must be finite and >= 0");
    r.star_index = static_cast<std::size_t>(std::min_element(excess.begin(), excess.end()) - excess.begin());
    r.estar = excess[r.star_index];
    r.excess = std::move(excess);
    return r;
  }

  std::size_t p() const noexcept { return excess.size(); }
};

struct TrialResult {
  std::size_t rep = 0;
  std::size_t selected = 0;
  double hat_e = 0.0;
  std::optional<double> hat_e_alpha;
  /// P_n of the mixed candidate minus P_n of the best candidate; <= 0 by convexity.
  std::optional<double> mixture_gap;
  std::uint64_t stream_key = 0;
};

struct MomentEstimate {
  double m = 1.0;
  double kappa = 1.0;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
};

struct TailFrequency {
  double threshold = 0.0;
  double frequency = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
};

/// One empirical-versus-bound comparison. `slack` is oriented so that a
/// negative value is a violation: bound - empirical for upper bounds,
/// empirical - bound for lower bounds.
struct Verdict {
  std::string quantity;
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
  std::string branch;

  static Verdict upper(std::string quantity, double empirical, double std_error, double bound,
                       std::string branch) {
    return make(std::move(quantity), empirical, std_error, bound, bound - empirical, std::move(branch));
  }
  static Verdict lower(std::string quantity, double empirical, double std_error, double bound,
                       std::string branch) {
    return make(std::move(quantity), empirical, std_error, bound, empirical - bound, std::move(branch));
  }

 private:
  static Verdict make(std::string quantity, double empirical, double std_error, double bound,
                      double slack, std::string branch) {
    Verdict v{std::move(quantity), empirical, std_error, bound, slack, false, std::move(branch)};
    // 3-sigma Monte Carlo slack plus a rounding allowance for exact quantities.
    const double rounding = 1e-12 * std::max({1.0, std::abs(empirical), std::abs(bound)});
    v.pass = !std::isnan(slack) && slack >= -(3.0 * std_error + rounding);
    return v;
  }
};

/// Column means P_n gamma_j, summed in row order.
inline std::vector<double> empirical_risks(const LossTable& table) {
  std::vector<double> sums(table.p(), 0.0);
  for (std::size_t i = 0; i < table.n(); ++i) {
    const auto row = table.row(i);
    for (std::size_t j = 0; j < table.p(); ++j) sums[j] += row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(table.n());
  for (double& s : sums) s *= inv_n;
  return sums;
}

/// Index of the smallest entry; ties go to the smallest index.
inline std::size_t argmin_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] < values[best]) best = j;
  }
  return best;
}

/// Empirical risk minimizer over the candidate columns.
inline std::size_t select_erm(const LossTable& table) { return argmin_first(empirical_risks(table)); }

/// (mean x^m)^{1/m} with a delta-method standard error.
inline MomentEstimate moment_norm(std::span<const double> samples, double m, double kappa = 1.0) {
  if (samples.empty()) throw PreconditionError("no samples");
  require(m >= 1.0, "moment order must be >= 1");
  CompensatedSum sum;
  for (double x : samples) {
    require(x >= 0.0, "moment_norm samples must be nonnegative");
    sum.add(std::pow(x, m));
  }
  const auto reps = samples.size();
  const double mean = sum.value() / static_cast<double>(reps);
  CompensatedSum sq;
  for (double x : samples) {
    const double d = std::pow(x, m) - mean;
    sq.add(d * d);
  }
  MomentEstimate est;
  est.m = m;
  est.kappa = kappa;
  est.reps = reps;
  est.value = std::pow(mean, 1.0 / m);
  if (reps < 2) {
    est.std_error = std::numeric_limits<double>::infinity();
    return est;
  }
  const double sd = std::sqrt(sq.value() / static_cast<double>(reps - 1));
  if (est.value == 0.0) {
    est.std_error = m > 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    est.std_error = sd / (std::sqrt(static_cast<double>(reps)) * m * std::pow(est.value, m - 1.0));
  }
  return est;
}

/// Fraction of samples >= threshold with its binomial standard error.
inline TailFrequency tail_frequency(std::span<const double> samples, double threshold) {
  if (samples.empty()) throw PreconditionError("no samples");
  std::size_t hits = 0;
  for (double x : samples) hits += (x >= threshold) ? 1 : 0;
  TailFrequency tf;
  tf.threshold = threshold;
  tf.reps = samples.size();
  tf.frequency = static_cast<double>(hits) / static_cast<double>(tf.reps);
  tf.std_error = std::sqrt(tf.frequency * (1.0 - tf.frequency) / static_cast<double>(tf.reps));
  return tf;
}

}  // namespace ermlab

#endif  // ERMLAB_CORE_HPP

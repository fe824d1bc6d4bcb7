#ifndef ERMLAB_EXPERIMENTS_HPP
#define ERMLAB_EXPERIMENTS_HPP

// Replicated ERM trials on a problem instance, Monte Carlo estimates of
// excess-risk moments and tails, and verdicts against the oracle bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ermlab/bounds.hpp"
#include "ermlab/core.hpp"
#include "ermlab/error.hpp"
#include "ermlab/problems.hpp"
#include "ermlab/rng.hpp"

namespace ermlab {

inline TrialResult run_trial(const ProblemInstance& pb, Stream& rng, Draw& scratch,
                             std::optional<double> alpha = std::nullopt) {
  TrialResult t;
  t.stream_key = rng.key();
  pb.draw(rng, scratch);
  const auto risks = empirical_risks(scratch.table);
  t.selected = argmin_first(risks);
  t.hat_e = pb.risk.excess[t.selected];
  if (alpha) {
    t.hat_e_alpha = pb.mixed_excess(t.selected, *alpha);
    t.mixture_gap = pb.mixture_gap(scratch, t.selected, *alpha, risks);
  }
  return t;
}

/// Runs `reps` trials; replication r always uses derive(seed, r), so the
/// output does not depend on the worker count.
inline std::vector<TrialResult> run_trials(const ProblemInstance& pb, std::size_t reps, std::uint64_t seed,
                                           std::size_t workers = 1, std::optional<double> alpha = std::nullopt) {
  require(reps >= 1, "reps must be >= 1");
  require(!alpha || (*alpha >= 0.0 && *alpha <= 1.0), "alpha must lie in [0, 1]");
  std::vector<TrialResult> out(reps);
  const auto body = [&](std::size_t first, std::size_t last) {
    Draw scratch;
    for (std::size_t r = first; r < last; ++r) {
      Stream rng = derive(seed, r);
      out[r] = run_trial(pb, rng, scratch, alpha);
      out[r].rep = r;
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, reps);
  if (workers == 1) {
    body(0, reps);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (reps + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t first = std::min(reps, w * chunk);
    const std::size_t last = std::min(reps, first + chunk);
    pool.emplace_back([&, w, first, last] {
      try {
        body(first, last);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct MomentRequest {
  double m = 2.0;
  double kappa = 1.0;
};

struct Summary {
  std::vector<MomentEstimate> moments;  // of Ehat^{1/2kappa}
  std::vector<TailFrequency> tails;     // of {Ehat >= threshold}
  double estar = 0.0;
  double star_selected_frequency = 0.0;
  std::optional<double> lower_bound_frequency;
};

inline std::vector<double> hat_e_values(const std::vector<TrialResult>& trials) {
  std::vector<double> v(trials.size());
  for (std::size_t r = 0; r < trials.size(); ++r) v[r] = trials[r].hat_e;
  return v;
}

inline std::vector<double> powered(const std::vector<double>& xs, double e) {
  std::vector<double> v(xs.size());
  for (std::size_t r = 0; r < xs.size(); ++r) v[r] = std::pow(xs[r], e);
  return v;
}

inline Summary estimate(const ProblemInstance& pb, const std::vector<TrialResult>& trials,
                        const std::vector<MomentRequest>& moments, const std::vector<double>& thresholds) {
  if (trials.empty()) throw PreconditionError("no samples");
  Summary s;
  s.estar = pb.risk.estar;
  const auto he = hat_e_values(trials);
  for (const auto& mr : moments) s.moments.push_back(moment_norm(powered(he, 1.0 / (2.0 * mr.kappa)), mr.m, mr.kappa));
  for (double th : thresholds) s.tails.push_back(tail_frequency(he, th));
  std::size_t star = 0;
  for (const auto& t : trials) star += pb.risk.excess[t.selected] == pb.risk.estar ? 1 : 0;
  s.star_selected_frequency = static_cast<double>(star) / static_cast<double>(trials.size());
  if (pb.lower_bound_level) {
    s.lower_bound_frequency = tail_frequency(he, *pb.lower_bound_level).frequency;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Verification.

/// One bound to check against the trials. Unset fields take problem defaults.
struct CheckSpec {
  std::string kind;
  std::optional<double> m = std::nullopt;
  std::optional<double> t = std::nullopt;
  std::optional<double> tau = std::nullopt;
  std::optional<double> s = std::nullopt;
  std::optional<double> delta_opt = std::nullopt;
  std::optional<double> eps = std::nullopt;
  std::optional<double> r = std::nullopt;
  double C_scale = 1.0;  // multiplies the claimed margin constant
};

inline const std::vector<std::string>& check_kinds() {
  static const std::vector<std::string> kinds = {
      "quadratic_exp", "mle", "quadratic_power", "small_p_ls", "general_margin_expectation", "general_margin_exp",
      "master_power", "corollary71", "lower_bound", "margin", "exp_moments", "mixture"};
  return kinds;
}

namespace detail {

inline double claimed_C(const ProblemInstance& pb, const CheckSpec& c) { return pb.margin.C * c.C_scale; }

inline void need_kappa_one(const ProblemInstance& pb, const std::string& kind) {
  if (pb.margin.kappa != 1.0) throw ConfigError(kind + ": requires margin exponent kappa = 1");
}

inline double need_K(const ProblemInstance& pb, const std::string& kind) {
  if (!pb.tail || !std::holds_alternative<ExpMomentTail>(pb.tail->tail)) {
    throw ConfigError(kind + ": requires an exponential-moment tail claim");
  }
  return std::get<ExpMomentTail>(pb.tail->tail).K;
}

inline PowerTail need_power_tail(const ProblemInstance& pb, const std::string& kind) {
  if (!pb.tail || !std::holds_alternative<PowerTail>(pb.tail->tail)) {
    throw ConfigError(kind + ": requires a power-tail claim on the envelope");
  }
  return std::get<PowerTail>(pb.tail->tail);
}

inline std::vector<double> values_on_scale(const std::vector<double>& he, double kappa, Scale scale, double estar) {
  std::vector<double> v(he.size());
  for (std::size_t r = 0; r < he.size(); ++r) {
    const double x = scale == Scale::ratio ? he[r] / estar : he[r];
    v[r] = std::pow(x, 1.0 / (2.0 * kappa));
  }
  return v;
}

/// Moment or tail verdict for a report on the root or ratio scale.
inline Verdict judge(const std::string& name, const BoundReport& rep, const std::vector<double>& he, double estar) {
  const auto vals = values_on_scale(he, rep.kappa, rep.scale, estar);
  const std::string branch = rep.bound + "." + rep.branch + "." + to_string(rep.scale);
  if (rep.mode && rep.mode->is_tail()) {
    const auto tf = tail_frequency(vals, rep.value);
    return Verdict::upper(name, tf.frequency, tf.std_error, std::exp(-rep.mode->value), branch);
  }
  const double m = rep.mode ? rep.mode->value : 1.0;
  const auto est = moment_norm(vals, m, rep.kappa);
  return Verdict::upper(name, est.value, est.std_error, rep.value, branch);
}

inline std::string label(const CheckSpec& c) {
  std::string s = c.kind;
  if (c.t) s += "(t=" + std::to_string(*c.t) + ")";
  if (c.m) s += "(m=" + std::to_string(*c.m) + ")";
  return s;
}

inline Mode mode_of(const CheckSpec& c) {
  if (c.t && c.m) throw ConfigError(c.kind + ": give either t or m, not both");
  return c.t ? Mode::tail(*c.t) : Mode::moment(c.m.value_or(2.0));
}

}  // namespace detail

/// Verdicts for one check. Incompatible problem/check pairs raise ConfigError.
inline std::vector<Verdict> verify_check(const ProblemInstance& pb, const std::vector<TrialResult>& trials,
                                         const CheckSpec& c, std::optional<double> alpha = std::nullopt) {
  if (trials.empty()) throw PreconditionError("no samples");
  const auto cx = Complexity::of(static_cast<double>(pb.n()), static_cast<double>(pb.p()));
  const auto he = hat_e_values(trials);
  const double estar = pb.risk.estar;
  const double C = detail::claimed_C(pb, c);
  const std::string name = detail::label(c);
  std::vector<Verdict> out;
  try {
    if (c.kind == "quadratic_exp") {
      detail::need_kappa_one(pb, c.kind);
      const auto rep = bound_quadratic_exp(cx, C, detail::need_K(pb, c.kind), estar, detail::mode_of(c));
      out.push_back(detail::judge(name, rep, he, estar));
    } else if (c.kind == "general_margin_exp") {
      const auto rep = bound_general_margin_exp(cx, pb.margin.kappa, C, detail::need_K(pb, c.kind), estar,
                                                detail::mode_of(c), c.tau);
      out.push_back(detail::judge(name, rep, he, estar));
    } else if (c.kind == "quadratic_power") {
      detail::need_kappa_one(pb, c.kind);
      const auto pt = detail::need_power_tail(pb, c.kind);
      const auto rep = bound_quadratic_power(cx, C, pt.s, pt.M, estar, c.m.value_or(2.0));
      out.push_back(detail::judge(name, rep, he, estar));
    } else if (c.kind == "master_power") {
      const auto pt = detail::need_power_tail(pb, c.kind);
      const double kappa = pb.margin.kappa;
      const double m = c.m.value_or(2.0 * kappa);
      double tau = c.tau.value_or(estar);
      if (tau <= 0.0) tau = optimal_floor(kappa, pt.s, m, pt.M, cx.delta).tau;
      const auto rep = bound_master_power(cx, kappa, C, pt.s, pt.M, estar, m, tau);
      out.push_back(detail::judge(name, rep, he, estar));
    } else if (c.kind == "corollary71") {
      if (!pb.tail) throw ConfigError(c.kind + ": requires a tail claim");
      const auto rep = bound_corollary71(cx, pb.margin.kappa, C, pb.tail->tail, estar, c.m.value_or(2.0 * pb.margin.kappa));
      out.push_back(detail::judge(name, rep, he, estar));
    } else if (c.kind == "small_p_ls") {
      detail::need_kappa_one(pb, c.kind);
      const Noise* noise = pb.noise();
      if (!noise) throw ConfigError(c.kind + ": requires a least-squares problem");
      const double s = c.s.value_or(2.0);
      const double M = std::pow(noise_abs_moment(*noise, s), 1.0 / s);
      if (!std::isfinite(M)) throw ConfigError(c.kind + ": noise has no finite moment of order s");
      const auto rep = bound_small_p_ls(cx.n, cx.p, C, s, M, estar);
      const auto est = moment_norm(powered(he, 0.5), s);
      out.push_back(Verdict::upper(name, est.value, est.std_error, rep.value, "small_p_ls.root"));
      if (rep.valid()) {
        const auto mean = moment_norm(he, 1.0);
        out.push_back(Verdict::upper(c.kind + ".mean", mean.value, mean.std_error, *rep.term("mean_bound_squared"),
                                     "small_p_ls.mean"));
      }
    } else if (c.kind == "general_margin_expectation") {
      const auto rep = bound_general_margin_expectation(pb.margin.spec(), cx, detail::need_K(pb, c.kind), estar,
                                                        c.delta_opt.value_or(0.5), c.eps.value_or(1e-12), c.r.value_or(2.0));
      if (!rep.valid()) throw ConfigError(c.kind + ": concavity order r out of range or H(v^{1/r}) not concave");
      const auto mean = moment_norm(he, 1.0);
      out.push_back(Verdict::upper(name, mean.value, mean.std_error, rep.value, "general_margin_expectation.mean"));
    } else if (c.kind == "mle") {
      if (pb.family != "density") throw ConfigError(c.kind + ": requires a density problem");
      if (!alpha || *alpha != 0.5) throw ConfigError(c.kind + ": requires alpha = 0.5");
      const auto mode = detail::mode_of(c);
      const auto rep = bound_mle(cx, C, estar, mode);
      std::vector<double> kh(trials.size());
      for (std::size_t r = 0; r < trials.size(); ++r) kh[r] = *trials[r].hat_e_alpha;
      out.push_back(detail::judge(name, rep, kh, estar));
      const auto& dm = std::get<DensityModel>(pb.model);
      const std::size_t star = dm.candidates[pb.risk.star_index];
      const auto chk = mle_checks(dm.grid, star, star, dm.target, C);
      out.push_back(Verdict::upper("mle.precondition", chk.max_root_ratio, 0.0, C / 8.0, "max sqrt(f0/f*) <= C/8"));
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& t : trials) worst = std::max(worst, *t.mixture_gap);
      out.push_back(Verdict::upper("mixture_gap", worst, 0.0, 0.0, "max over trials of P_n mix - P_n best"));
    } else if (c.kind == "mixture") {
      if (!alpha) throw ConfigError(c.kind + ": requires alpha");
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& t : trials) worst = std::max(worst, *t.mixture_gap);
      out.push_back(Verdict::upper("mixture_gap", worst, 0.0, 0.0, "max over trials of P_n mix - P_n best"));
    } else if (c.kind == "lower_bound") {
      if (!pb.lower_bound_level) throw ConfigError(c.kind + ": requires the lower-bound construction");
      const auto* noise = pb.noise();
      const double s = std::get<DoubleParetoNoise>(*noise).s;
      const auto tf = tail_frequency(he, *pb.lower_bound_level);
      out.push_back(Verdict::lower(name, tf.frequency, tf.std_error, 1.0 - std::exp(-std::pow(2.0, -s)),
                                   "lower_bound.frequency"));
    } else if (c.kind == "margin") {
      if (C <= 0.0) throw ConfigError(c.kind + ": margin constant must be > 0");
      const double worst = verify_margin(pb, MarginSpec::power(pb.margin.kappa, C));
      out.push_back(Verdict::lower(name, worst, 0.0, 0.0, "min_j E_j - G(d_j)"));
    } else if (c.kind == "exp_moments") {
      const double K = detail::need_K(pb, c.kind);
      const double ratio = verify_exp_moments(pb, K, pb.distances_best, 12);
      out.push_back(Verdict::upper(name, ratio, 0.0, 1.0, "max moment ratio up to m = 12"));
    } else {
      throw ConfigError("unknown check kind '" + c.kind + "'");
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(c.kind + ": " + e.what());
  }
  return out;
}

inline std::vector<Verdict> verify(const ProblemInstance& pb, const std::vector<TrialResult>& trials,
                                   const std::vector<CheckSpec>& checks, std::optional<double> alpha = std::nullopt) {
  std::vector<Verdict> out;
  for (const auto& c : checks) {
    auto v = verify_check(pb, trials, c, alpha);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

inline bool all_pass(const std::vector<Verdict>& vs) {
  return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.pass; });
}

// ---------------------------------------------------------------------------
// Asymptotic sweep.

using ProblemFamily = std::function<ProblemInstance(double)>;

inline double diagnostic_of(const ProblemInstance& pb) {
  if (!pb.tail) throw ConfigError("asymptotic diagnostic needs a tail claim");
  const auto cx = Complexity::of(static_cast<double>(pb.n()), static_cast<double>(pb.p()));
  return asymptotic_diagnostic(cx, pb.margin.kappa, pb.margin.C, pb.tail->tail, pb.risk.estar);
}

/// Multiplier at which the family's diagnostic equals `target`, by bisection
/// in log scale; the diagnostic must be increasing in the multiplier.
inline double multiplier_for_diagnostic(const ProblemFamily& family, double target, double lo = 1e-6, double hi = 1e6) {
  require(target > 0.0, "target diagnostic must be > 0");
  const auto f = [&](double a) { return diagnostic_of(family(a)) - target; };
  require(f(lo) < 0.0 && f(hi) > 0.0, "diagnostic target not bracketed by the multiplier range");
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
    const double mid = std::sqrt(lo * hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

struct SweepRow {
  double multiplier = 0.0;
  double estar = 0.0;
  double diagnostic = 0.0;
  double ratio = 0.0;  // mean of (Ehat / E*)^{m / 2kappa}
  double std_error = 0.0;
};

inline std::vector<SweepRow> asymptotic_sweep(const ProblemFamily& family, const std::vector<double>& multipliers,
                                              std::size_t reps, std::uint64_t seed, MomentRequest mr = {},
                                              std::size_t workers = 1) {
  std::vector<SweepRow> rows;
  for (double a : multipliers) {
    const auto pb = family(a);
    if (pb.risk.estar <= 0.0) throw PreconditionError("asymptotic sweep needs estar > 0 in every row");
    SweepRow row;
    row.multiplier = a;
    row.estar = pb.risk.estar;
    row.diagnostic = diagnostic_of(pb);
    const auto trials = run_trials(pb, reps, seed, workers);
    std::vector<double> v(trials.size());
    for (std::size_t r = 0; r < trials.size(); ++r) v[r] = std::pow(trials[r].hat_e / pb.risk.estar, mr.m / (2.0 * mr.kappa));
    const auto est = moment_norm(v, 1.0);
    row.ratio = est.value;
    row.std_error = est.std_error;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output.

/// Per-trial CSV: rep, selected, hat_e, hat_e_alpha, estar, ratio. Undefined
/// cells (no mixing, or E* = 0 for the ratio) are left empty.
inline void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials, double estar) {
  os << "rep,selected,hat_e,hat_e_alpha,estar,ratio\n";
  char buf[64];
  const auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (const auto& t : trials) {
    os << t.rep << ',' << t.selected << ',' << num(t.hat_e) << ',';
    if (t.hat_e_alpha) os << num(*t.hat_e_alpha);
    os << ',' << num(estar) << ',';
    if (estar > 0.0) os << num(t.hat_e / estar);
    os << '\n';
  }
}

}  // namespace ermlab

#endif  // ERMLAB_EXPERIMENTS_HPP

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ermlab/problems.hpp"
#include "support/oracles.hpp"

using namespace ermlab;

namespace {

double gaussian_abs_moment_quadrature(double sigma, double m) {
  const double phi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return 2.0 * oracle::simpson([&](double x) { return std::pow(sigma * x, m) * phi * std::exp(-0.5 * x * x); }, 0.0,
                               40.0, 200000);
}

}  // namespace

TEST(Noise, DoubleParetoMomentsMatchQuadrature) {
  for (const auto& [s, m] : std::vector<std::pair<double, double>>{{3, 1}, {3, 2}, {5, 2}, {5, 3.5}, {8, 4}}) {
    EXPECT_NEAR(noise_abs_moment(DoubleParetoNoise{s}, m), oracle::double_pareto_abs_moment(s, m), 1e-6) << s << " " << m;
  }
  EXPECT_DOUBLE_EQ(noise_variance(DoubleParetoNoise{3}), 1.0);
  EXPECT_TRUE(std::isinf(noise_abs_moment(DoubleParetoNoise{3}, 3)));
}

TEST(Noise, GaussianMomentsMatchQuadrature) {
  for (double m : {1.0, 2.0, 3.0, 4.5, 8.0}) {
    EXPECT_NEAR(noise_abs_moment(GaussianNoise{0.7}, m), gaussian_abs_moment_quadrature(0.7, m), 1e-9);
  }
  EXPECT_NEAR(noise_variance(GaussianNoise{2}), 4.0, 1e-12);
}

TEST(Noise, DoubleParetoSamplerMedianVarianceAndKs) {
  Stream rng = derive(5, 0);
  const int N = 1000000;
  std::vector<double> a(N);
  CompensatedSum sq;
  for (int k = 0; k < N; ++k) {
    const double e = sample_double_pareto(DoubleParetoNoise{3}, rng);
    a[k] = std::abs(e);
    sq.add(e * e);
  }
  std::sort(a.begin(), a.end());
  EXPECT_NEAR(a[N / 2], std::cbrt(2.0) - 1.0, 0.005);
  double ks = 0.0;
  for (int k = 0; k < N; ++k) {
    const double F = 1.0 - std::pow(1.0 + a[k], -3.0);
    ks = std::max({ks, std::abs(F - static_cast<double>(k) / N), std::abs(F - static_cast<double>(k + 1) / N)});
  }
  EXPECT_LE(ks, 0.002);
  // infinite fourth moment: compare with a loose heavy-tail allowance
  EXPECT_NEAR(sq.value() / N, 1.0, 0.1);
}

TEST(Regression, HandExcessRisks) {
  const std::vector<double> f0{0.0, 1.0, -1.0, 0.5};
  std::vector<double> shifted = f0;
  for (double& v : shifted) v += 0.3;
  const auto pb = make_regression(f0, {f0, shifted}, GaussianNoise{1.5});
  EXPECT_EQ(pb.risk.excess[0], 0.0);
  EXPECT_NEAR(pb.risk.excess[1], 0.09, 1e-15);
  EXPECT_EQ(pb.risk.star_index, 0u);
  EXPECT_EQ(pb.n(), 4u);
  EXPECT_EQ(pb.margin.kappa, 1.0);
  EXPECT_NEAR(pb.margin.C * pb.margin.C, 4 * 1.5 * 1.5, 1e-12);
  ASSERT_TRUE(pb.tail.has_value());
  EXPECT_EQ(pb.tail->provenance, "fitted");
}

TEST(Regression, OrthogonalCandidatesHitRequestedRisks) {
  const std::vector<double> E{0.05, 0.1, 0.3, 0.5};
  const auto [f0, f] = orthogonal_candidates(64, E);
  for (std::size_t j = 0; j < E.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 64; ++i) s += (f[j][i] - f0[i]) * (f[j][i] - f0[i]);
    EXPECT_NEAR(s / 64, E[j], 1e-14);
  }
  const auto pb = make_regression(f0, f, GaussianNoise{1});
  for (std::size_t j = 0; j < E.size(); ++j) EXPECT_NEAR(pb.risk.excess[j], E[j], 1e-14);
  EXPECT_THROW(orthogonal_candidates(8, std::vector<double>(4, 0.1)), PreconditionError);
}

TEST(Regression, RiskProfileMatchesBruteForce) {
  Stream rng = derive(17, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t N = 3 + rep % 5;
    std::vector<double> f0(N);
    for (double& v : f0) v = rng.normal();
    std::vector<std::vector<double>> f(4, std::vector<double>(N));
    for (auto& c : f) {
      for (double& v : c) v = rng.normal();
    }
    const auto pb = make_regression(f0, f, GaussianNoise{0.5});
    for (std::size_t j = 0; j < f.size(); ++j) {
      long double s = 0;
      for (std::size_t i = 0; i < N; ++i) s += static_cast<long double>(f[j][i] - f0[i]) * (f[j][i] - f0[i]);
      EXPECT_NEAR(pb.risk.excess[j], static_cast<double>(s / N), 1e-14);
    }
  }
}

TEST(Regression, FixedDesignVarianceDecomposition) {
  const std::vector<double> f0{0.0, 1.0, 2.0};
  const std::vector<double> g{0.5, 1.0, 1.0};
  const auto pb = make_regression(f0, {g}, GaussianNoise{0.8});
  const auto [total, e_part, l_part] = pb.variance_decomposition(0);
  const double pd2 = (0.25 + 0.0 + 1.0) / 3;
  EXPECT_EQ(l_part, 0.0);
  EXPECT_NEAR(e_part, 4 * 0.64 * pd2, 1e-14);
  EXPECT_NEAR(total, e_part, 1e-15);
  EXPECT_NEAR(pb.distances_target[0] * pb.distances_target[0], total, 1e-14);
}

TEST(Regression, RandomDesignVarianceDecomposition) {
  const std::vector<double> f0{0.0, 1.0, 2.0};
  const std::vector<double> g{0.5, 1.0, 1.0};
  const std::vector<double> w{1, 2, 1};
  const auto pb = make_regression(f0, {g}, GaussianNoise{0.8}, RandomDesign{w, 10, 1.0});
  const auto [total, e_part, l_part] = pb.variance_decomposition(0);
  // (f - f0)^2 takes 0.25, 0, 1 with probabilities 1/4, 1/2, 1/4
  const double mean = 0.25 / 4 + 1.0 / 4;
  const double var = 0.0625 / 4 + 1.0 / 4 - mean * mean;
  EXPECT_NEAR(l_part, var, 1e-14);
  EXPECT_NEAR(e_part, 4 * 0.64 * mean, 1e-14);
  EXPECT_NEAR(pb.margin.C * pb.margin.C, 4 * 0.64 + 1.0, 1e-12);
  EXPECT_NEAR(pb.risk.excess[0], mean, 1e-15);
  EXPECT_EQ(pb.n(), 10u);
  EXPECT_FALSE(pb.tail.has_value());
  EXPECT_THROW(make_regression(f0, {g}, GaussianNoise{0.8}, RandomDesign{w, 10, 0.5}), PreconditionError);
}

TEST(Regression, MarginHoldsForLeastSquares) {
  const auto [f0, f] = orthogonal_candidates(32, std::vector<double>{0.01, 0.2, 0.7});
  for (double sigma : {0.1, 1.0, 3.0}) {
    const auto pb = make_regression(f0, f, GaussianNoise{sigma});
    EXPECT_GE(verify_margin(pb, pb.margin.spec()), -1e-12);
  }
}

TEST(Regression, GaussianExpMomentScaleMatchesBisection) {
  // the first candidate equals f_0, so it is the best one
  const auto [f0, f] = orthogonal_candidates(16, std::vector<double>{0.0, 0.2, 0.4});
  const double sigma = 0.9;
  const auto pb = make_regression(f0, f, GaussianNoise{sigma});
  const double K = fit_exp_moment_K(pb, 12);
  std::vector<double> noise_moment(13, 0.0);
  for (int m = 2; m <= 12; ++m) noise_moment[m] = gaussian_abs_moment_quadrature(sigma, m);
  // Independent centered moments: gamma_j^c - gamma_0^c = 2 eps (f_0 - f_j) at each point.
  auto worst_ratio = [&](double k) {
    double worst = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < 16; ++i) d2 += 4 * sigma * sigma * (f[j][i] - f0[i]) * (f[j][i] - f0[i]) / 16;
      if (d2 == 0.0) continue;
      for (int m = 2; m <= 12; ++m) {
        double s = 0.0;
        for (std::size_t i = 0; i < 16; ++i) s += std::pow(2 * std::abs(f[j][i] - f0[i]), m) / 16;
        const double num = s * noise_moment[m];
        const double fact = std::tgamma(m + 1.0);
        worst = std::max(worst, num / (0.5 * fact * std::pow(2 * k, m - 2) * d2));
      }
    }
    return worst;
  };
  const double K_ref = oracle::bisect([&](double k) { return worst_ratio(k) - 1.0; }, 1e-3, 100.0);
  EXPECT_NEAR(K, K_ref, 1e-6 * K_ref);
  EXPECT_LE(verify_exp_moments(pb, K * (1 + 1e-9), pb.distances_best, 12), 1.0 + 1e-9);
  EXPECT_GT(verify_exp_moments(pb, 0.9 * K, pb.distances_best, 12), 1.0);
}

TEST(Regression, CenteredSecondMomentIsSquaredDistance) {
  const auto [f0, f] = orthogonal_candidates(20, std::vector<double>{0.3, 0.1, 0.6});
  for (const Noise noise : {Noise{GaussianNoise{0.5}}, Noise{DoubleParetoNoise{4}}}) {
    const auto pb = make_regression(f0, f, noise);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(pb.centered_abs_moment(j, 2), pb.distances_best[j] * pb.distances_best[j], 1e-13);
    }
  }
}

TEST(Regression, RejectsBadInput) {
  EXPECT_THROW(make_regression({}, {{}}, GaussianNoise{1}), PreconditionError);
  EXPECT_THROW(make_regression({0.0}, {}, GaussianNoise{1}), PreconditionError);
  EXPECT_THROW(make_regression({0.0, 1.0}, {{0.0}}, GaussianNoise{1}), PreconditionError);
  EXPECT_THROW(make_regression({0.0}, {{0.0}}, GaussianNoise{-1}), PreconditionError);
  EXPECT_THROW(make_regression({0.0}, {{0.0}}, DoubleParetoNoise{2}), PreconditionError);
}

TEST(Regression, NoiselessProblemIsAllowed) {
  const auto pb = make_regression({0.0, 1.0}, {{0.0, 1.0}, {1.0, 1.0}}, GaussianNoise{0});
  EXPECT_EQ(pb.margin.C, 0.0);
  EXPECT_EQ(pb.distances_target[1], 0.0);
  EXPECT_EQ(pb.distances_best[1], 0.0);
}

TEST(LowerBound, ConstructionAtSThreeNSixtyFour) {
  const auto pb = make_lower_bound_construction(64, 3);
  EXPECT_EQ(pb.family, "lower_bound");
  EXPECT_EQ(pb.p(), 9u);
  const auto& m = std::get<RegressionModel>(pb.model);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_NEAR(m.f[j][j], 2.0, 1e-14);
    EXPECT_NEAR(pb.risk.excess[j], 1.0 / 16, 1e-15);
  }
  EXPECT_EQ(pb.risk.excess[8], 0.0);
  EXPECT_EQ(pb.risk.star_index, 8u);
  EXPECT_EQ(pb.risk.estar, 0.0);
  EXPECT_NEAR(pb.margin.C * pb.margin.C, 4.0, 1e-12);
  ASSERT_TRUE(pb.tail.has_value());
  const auto& pt = std::get<PowerTail>(pb.tail->tail);
  EXPECT_EQ(pt.s, 3.0);
  EXPECT_NEAR(pt.M, 2.0, 1e-12);
  EXPECT_NEAR(*pb.lower_bound_level, 1.0 / 16, 1e-15);
  EXPECT_GE(verify_margin(pb, pb.margin.spec()), -1e-15);
}

TEST(LowerBound, MarginConstantAcrossS) {
  for (const auto& [n, s] : std::vector<std::pair<std::size_t, double>>{{256, 4}, {1024, 5}, {4096, 3}}) {
    const auto pb = make_lower_bound_construction(n, s);
    EXPECT_NEAR(pb.margin.C * pb.margin.C, 8.0 / ((s - 2) * (s - 1)), 1e-12);
    EXPECT_NEAR(pb.risk.excess[0], std::pow(static_cast<double>(n), -(s - 1) / s), 1e-14);
    EXPECT_EQ(pb.p(), static_cast<std::size_t>(std::sqrt(n)) + 1);
  }
}

TEST(LowerBound, RejectsInadmissibleN) {
  EXPECT_THROW(make_lower_bound_construction(63, 3), PreconditionError);
  EXPECT_THROW(make_lower_bound_construction(49, 3), PreconditionError);
  EXPECT_THROW(make_lower_bound_construction(64, 2), PreconditionError);
}

TEST(Envelope, LowerBoundFitStaysBelowTwo) {
  const auto pb = make_lower_bound_construction(64, 3);
  Stream rng = derive(3, 0);
  const auto fit = estimate_envelope_M(pb, 3, rng, 20000);
  EXPECT_EQ(fit.samples, 64u * 20000u);
  EXPECT_GT(fit.M, 1.0);
  EXPECT_LE(fit.M, 2.0 * fit.slack_factor);
}

TEST(Envelope, BoundedExtraCandidatesKeepFitBelowFour) {
  const std::vector<double> extra{1.0, -0.5, 0.25};
  const auto pb = make_lower_bound_construction(64, 3, extra);
  EXPECT_EQ(pb.p(), 12u);
  EXPECT_EQ(pb.risk.estar, 0.0);
  EXPECT_NEAR(pb.risk.excess[8], 1.0, 1e-15);
  Stream rng = derive(4, 0);
  const auto fit = estimate_envelope_M(pb, 3, rng, 20000);
  EXPECT_LE(fit.M, 4.0 * fit.slack_factor);
  EXPECT_THROW(make_lower_bound_construction(64, 3, std::vector<double>{1.5}), PreconditionError);
}

TEST(Envelope, BoundedEnvelopeGivesBoundedM) {
  const auto pb = make_classification(50, {1, 1, 1}, {0.1, 0.7, 0.4}, {{0, 1, 0}, {1, 1, 1}, {0, 0, 0}});
  Stream rng = derive(6, 0);
  const auto fit = estimate_envelope_M(pb, 2.5, rng, 200);
  EXPECT_LE(fit.M, 2.0);
}

TEST(Classification, TwoPointHandSum) {
  const auto pb = make_classification(10, {0.3, 0.7}, {0.2, 0.8}, {{1, 1}, {0, 1}});
  const auto& m = std::get<ClassificationModel>(pb.model);
  EXPECT_EQ(m.f0, (std::vector<double>{0, 1}));
  EXPECT_NEAR(pb.risk.excess[0], 0.3 * 0.6, 1e-15);
  EXPECT_EQ(pb.risk.excess[1], 0.0);
  EXPECT_EQ(pb.risk.star_index, 1u);
}

TEST(Classification, RejectsHalf) {
  EXPECT_THROW(make_classification(10, {1, 1}, {0.5, 0.8}, {{1, 1}}), PreconditionError);
  EXPECT_THROW(make_classification(10, {1, 1}, {0.2, 0.8}, {{1, 2}}), PreconditionError);
}

TEST(Classification, BoundedAwayMarginIsLinear) {
  const auto pb = make_classification(10, {1, 2, 1}, {0.1, 0.8, 0.15}, {{1, 1, 0}, {0, 0, 1}});
  EXPECT_NEAR(classification_min_margin(pb), 0.6, 1e-15);
  EXPECT_GE(verify_margin(pb, pb.margin.spec()), -1e-15);
  EXPECT_GE(verify_margin(pb, linear_margin(0.6)), -1e-15);
}

TEST(Classification, ExactPropertiesOnRandomDesigns) {
  Stream rng = derive(21, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t N = 2 + rep % 6;
    std::vector<double> w(N);
    std::vector<double> eta(N);
    for (std::size_t k = 0; k < N; ++k) {
      w[k] = 0.1 + rng.uniform();
      do eta[k] = rng.uniform();
      while (std::abs(eta[k] - 0.5) < 1e-3);
    }
    std::vector<std::vector<double>> f(5, std::vector<double>(N));
    for (auto& c : f) {
      for (double& v : c) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const auto pb = make_classification(30, w, eta, f);
    const auto& m = std::get<ClassificationModel>(pb.model);
    EXPECT_LE(verify_exp_moments(pb, 1.0, pb.distances_best, 12), 1.0 + 1e-12);
    EXPECT_GE(verify_margin(pb, pb.margin.spec()), -1e-12);
    for (std::size_t j = 0; j < f.size(); ++j) {
      double pd2 = 0.0;
      double e = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        pd2 += m.weights[k] * (f[j][k] - m.f0[k]) * (f[j][k] - m.f0[k]);
        // brute-force risk difference over the two labels
        const double loss_f = eta[k] * (1 - f[j][k]) + (1 - eta[k]) * f[j][k];
        const double loss_0 = eta[k] * (1 - m.f0[k]) + (1 - eta[k]) * m.f0[k];
        e += m.weights[k] * (loss_f - loss_0);
      }
      EXPECT_LE(pb.distances_target[j] * pb.distances_target[j], pd2 + 1e-14);
      EXPECT_NEAR(pb.risk.excess[j], e, 1e-14);
    }
  }
}

TEST(Density, HandValuesAndHellingerDomination) {
  DensityGrid g({0.0, 1.0}, {1.0, 1.0});
  const auto f0 = g.add("f0", {0.5, 0.5});
  const auto f1 = g.add("f1", {0.25, 0.75});
  const auto pb = make_density_family(g, f0, {f0, f1}, 40);
  EXPECT_EQ(pb.risk.excess[0], 0.0);
  EXPECT_NEAR(pb.risk.excess[1], 0.5 * (0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3)), 1e-15);
  EXPECT_EQ(pb.risk.star_index, 0u);
  EXPECT_NEAR(pb.margin.C, 8.0, 1e-15);
  const double h2 = 0.5 * (std::pow(std::sqrt(0.5) - 0.5, 2) + std::pow(std::sqrt(0.5) - std::sqrt(0.75), 2));
  EXPECT_GE(pb.risk.excess[1], h2);
  EXPECT_NEAR(pb.distances_target[1], 8.0 * std::sqrt(h2), 1e-14);
  EXPECT_GE(verify_margin(pb, pb.margin.spec()), 0.0);
}

TEST(Density, RejectsVanishingCandidate) {
  DensityGrid g({0.0, 1.0}, {1.0, 1.0});
  const auto f0 = g.add("f0", {0.5, 0.5});
  const auto f1 = g.add("f1", {0.0, 1.0});
  EXPECT_THROW(make_density_family(g, f0, {f1}, 10), PreconditionError);
}

TEST(Density, MixtureGapIsNonPositiveOnEveryDraw) {
  DensityGrid g({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
  const auto f0 = g.add("f0", {0.2, 0.3, 0.5});
  const auto a = g.add("a", {0.4, 0.3, 0.3});
  const auto b = g.add("b", {0.1, 0.5, 0.4});
  const auto pb = make_density_family(g, f0, {a, b}, 25);
  Draw d;
  for (int r = 0; r < 200; ++r) {
    Stream rng = derive(8, r);
    pb.draw(rng, d);
    const auto risks = empirical_risks(d.table);
    EXPECT_LE(pb.mixture_gap(d, select_erm(d.table), 0.5, risks), 1e-15);
  }
}

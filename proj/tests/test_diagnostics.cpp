#include "spcp/diagnostics.hpp"
#include "spcp/error.hpp"
#include "spcp/random.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace spcp;

namespace {

PosteriorSamples make_samples(const std::vector<EffectMatrix>& Phi, const Eigen::VectorXd& times) {
  PosteriorSamples s;
  s.variant = Variant::kNonspatialL;
  s.times = times;
  for (int i = 0; i < Phi[0].rows(); ++i) s.site_ids.push_back(i + 1);
  for (const auto& p : Phi) {
    s.Phi.push_back(p);
    s.delta.push_back(Eigen::VectorXd::Zero(kNumEffects));
    s.Sigma.push_back(Eigen::MatrixXd::Identity(kNumEffects, kNumEffects));
    s.alpha.push_back(0.0);
  }
  return s;
}

EffectMatrix flat_phi(int m, double beta0, double log_sd, double eta) {
  EffectMatrix Phi = EffectMatrix::Zero(m, kNumEffects);
  Phi.col(kBeta0).setConstant(beta0);
  Phi.col(kLambda0).setConstant(log_sd);
  Phi.col(kEta).setConstant(eta);
  return Phi;
}

Eigen::VectorXd ar1(int n, double phi, std::uint64_t seed, double shift_after = -1, double shift = 0) {
  Rng rng(seed);
  Eigen::VectorXd x(n);
  double v = 0.0;
  for (int k = 0; k < n; ++k) {
    v = phi * v + rng.normal();
    x[k] = v + (shift_after >= 0 && k >= shift_after * n ? shift : 0.0);
  }
  return x;
}

}  // namespace

TEST(Dic, DegenerateChainHasZeroPd) {
  Eigen::VectorXd times(3);
  times << 0, 0.5, 1;
  Eigen::MatrixXd obs(2, 3);
  obs << 2.0, 1.5, 0.0, 2.2, 1.8, 1.0;
  const auto series = test::observed_series(obs, times);
  const auto Phi = flat_phi(2, 1.8, std::log(0.5), 2.0);
  const auto s = make_samples({Phi, Phi, Phi}, times);
  const auto d = dic(s, series);
  EXPECT_NEAR(d.p_d, 0.0, 1e-12);
  EXPECT_NEAR(d.dic, -2.0 * observed_log_lik(series, Phi), 1e-9);
  EXPECT_EQ(d.excluded_draws, 0);
}

TEST(Dic, IdentityAndJensen) {
  Eigen::VectorXd times(4);
  times << 0, 0.3, 0.6, 1;
  Eigen::MatrixXd obs(3, 4);
  obs << 2.0, 1.9, 1.2, 0.4, 2.1, 2.0, 2.0, 1.9, 1.8, 0.0, 0.3, 0.0;
  const auto series = test::observed_series(obs, times);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  std::vector<EffectMatrix> draws;
  for (int k = 0; k < 200; ++k) {
    EffectMatrix Phi = flat_phi(3, 1.7, std::log(0.6), 0.5);
    for (int i = 0; i < 3; ++i) {
      Phi(i, kBeta0) += 0.1 * n(gen);
      Phi(i, kBeta1) = -1.0 + 0.2 * n(gen);
    }
    draws.push_back(Phi);
  }
  const auto s = make_samples(draws, times);
  const auto d = dic(s, series);
  double mean_dev = 0.0;
  for (const auto& p : draws) mean_dev += -2.0 * observed_log_lik(series, p) / draws.size();
  EXPECT_NEAR(d.mean_deviance, mean_dev, 1e-9);
  EXPECT_NEAR(d.deviance_at_mean, -2.0 * observed_log_lik(series, s.posterior_mean_phi()), 1e-9);
  EXPECT_NEAR(d.dic, d.mean_deviance + d.p_d, 1e-12);
  EXPECT_NEAR(d.p_d, d.mean_deviance - d.deviance_at_mean, 1e-12);
  EXPECT_GT(d.p_d, 0.0);
}

TEST(Dic, RejectsMismatchedSeries) {
  Eigen::VectorXd times(3);
  times << 0, 0.5, 1;
  const auto s = make_samples({flat_phi(2, 1, 0, 2), flat_phi(2, 1, 0, 2)}, times);
  EXPECT_THROW(dic(s, test::observed_series(Eigen::MatrixXd::Ones(3, 3), times)), ValidationError);
}

TEST(PredictiveCp, ClampsToPredictionTime) {
  EXPECT_EQ(predictive_cp(1.4, 0.0, 1.0, 2.0), 1.4);
  EXPECT_EQ(predictive_cp(1.4, 0.0, 1.0, 0.5), 1.0);
  EXPECT_EQ(predictive_cp(-1.0, 0.0, 1.0, 2.0), 0.0);
  EXPECT_EQ(predictive_cp(3.0, 0.0, 1.0, 2.0), 2.0);
}

TEST(Mspe, FlatModelMatchesTobitMean) {
  Eigen::VectorXd times(3);
  times << 0, 0.5, 1;
  const auto s = make_samples({flat_phi(2, 1.0, std::log(0.7), 5.0)}, times);
  Eigen::VectorXd held(2);
  held << 0.5, 1.5;
  const double mean = tobit_mean(1.0, 0.7);
  EXPECT_NEAR(mspe(s, 1.5, held), 0.5 * ((mean - 0.5) * (mean - 0.5) + (mean - 1.5) * (mean - 1.5)), 1e-12);
  EXPECT_THROW(mspe(s, 1.5, Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST(Mspe, ChangePointBeyondLastVisitActivatesInFuture) {
  // eta = 1.2 sits past the last visit; at x = 2 the decline has started.
  Eigen::VectorXd times(3);
  times << 0, 0.5, 1;
  EffectMatrix Phi = flat_phi(1, 3.0, std::log(1e-3), 1.2);
  Phi(0, kBeta1) = -1.0;
  const auto s = make_samples({Phi}, times);
  EXPECT_NEAR(predictive_mean(s, 2.0)[0], 2.2, 1e-9);
  EXPECT_NEAR(predictive_mean(s, 1.1)[0], 3.0, 1e-9);
}

TEST(Geweke, StationaryChainIsSmall) {
  int big = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed)
    if (std::abs(geweke(ar1(4000, 0.5, seed))) > 2.58) ++big;
  EXPECT_LE(big, 3);
}

TEST(Geweke, DriftIsDetected) {
  EXPECT_GT(std::abs(geweke(ar1(4000, 0.5, 7, 0.6, 1.5))), 4.0);
}

TEST(Geweke, RejectsDegenerateChains) {
  EXPECT_THROW(geweke(Eigen::VectorXd::Constant(500, 2.0)), ValidationError);
  EXPECT_THROW(geweke(ar1(50, 0.1, 1)), ValidationError);
}

TEST(CpProbability, MonotoneInTime) {
  Eigen::VectorXd times(5);
  times << 0, 0.25, 0.5, 0.75, 1;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  std::vector<EffectMatrix> draws;
  for (int k = 0; k < 300; ++k) {
    EffectMatrix Phi = flat_phi(4, 1, 0, 0);
    for (int i = 0; i < 4; ++i) Phi(i, kEta) = u(gen);
    draws.push_back(Phi);
  }
  const auto s = make_samples(draws, times);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(4);
  for (double t = 0.0; t <= 2.0; t += 0.05) {
    const auto p = cp_probability(s, t);
    EXPECT_TRUE((p.array() >= prev.array()).all());
    EXPECT_TRUE((p.array() >= 0).all() && (p.array() <= 1).all());
    prev = p;
  }
  EXPECT_TRUE((cp_probability(s, 0.0).array() == 0).all());
  EXPECT_TRUE((cp_probability(s, 2.0).array() == 1).all());
  const auto pm = progression_metric(s);
  EXPECT_EQ(pm.max_metric, pm.p.maxCoeff());
  EXPECT_EQ(pm.p, cp_probability(s, 1.0));
}

TEST(Auc, Cases) {
  EXPECT_EQ(auc({0.9, 0.8, 0.1, 0.2}, {true, true, false, false}), 1.0);
  EXPECT_EQ(auc({0.1, 0.2, 0.9, 0.8}, {true, true, false, false}), 0.0);
  EXPECT_EQ(auc({0.5, 0.5, 0.5, 0.5}, {true, false, true, false}), 0.5);
  EXPECT_EQ(auc({0.3, 0.7, 0.5}, {true, true, false}), 0.5);
  EXPECT_THROW(auc({0.1, 0.2}, {true, true}), ValidationError);
}

TEST(Logistic, SeparationFlagged) {
  const auto r = logistic_diagnostic({0.1, 0.2, 0.8, 0.9}, {false, false, true, true});
  EXPECT_TRUE(r.separated);
  EXPECT_TRUE(std::isnan(r.aic));
  EXPECT_TRUE(std::isnan(r.p_value));
  EXPECT_EQ(r.auc, 1.0);
}

TEST(Logistic, ScoreVanishesAtEstimate) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> x;
  std::vector<bool> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(u(gen));
    y.push_back(u(gen) < 1.0 / (1.0 + std::exp(-(-1.0 + 3.0 * x.back()))));
  }
  const auto r = logistic_diagnostic(x, y);
  ASSERT_TRUE(r.converged);
  ASSERT_FALSE(r.separated);
  double g0 = 0.0, g1 = 0.0, ll = 0.0, i00 = 0.0, i01 = 0.0, i11 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-(r.intercept + r.slope * x[i])));
    g0 += (y[i] ? 1.0 : 0.0) - mu;
    g1 += ((y[i] ? 1.0 : 0.0) - mu) * x[i];
    ll += y[i] ? std::log(mu) : std::log1p(-mu);
    const double w = mu * (1 - mu);
    i00 += w;
    i01 += w * x[i];
    i11 += w * x[i] * x[i];
  }
  EXPECT_NEAR(g0, 0.0, 1e-6);
  EXPECT_NEAR(g1, 0.0, 1e-6);
  EXPECT_NEAR(r.log_lik, ll, 1e-8);
  EXPECT_NEAR(r.aic, 4.0 - 2.0 * ll, 1e-8);
  EXPECT_NEAR(r.slope_se, std::sqrt(i00 / (i00 * i11 - i01 * i01)), 1e-8);
  EXPECT_NEAR(r.p_value, std::erfc(std::abs(r.slope / r.slope_se) / std::sqrt(2.0)), 1e-12);
  EXPECT_GT(r.slope, 0.0);
}

TEST(Logistic, NeedsTwoPerClass) {
  EXPECT_THROW(logistic_diagnostic({0.1, 0.2, 0.3}, {true, false, false}), ValidationError);
}

TEST(Quantile, TypeSeven) {
  std::vector<double> x;
  for (int k = 1; k <= 100; ++k) x.push_back(k);
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(x.data(), 100);
  const auto ci = credible_interval(v, 0.95);
  EXPECT_NEAR(ci.first, 3.475, 1e-12);
  EXPECT_NEAR(ci.second, 97.525, 1e-12);
  const auto full = credible_interval(v, 1.0);
  EXPECT_EQ(full.first, 1.0);
  EXPECT_EQ(full.second, 100.0);
  EXPECT_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_THROW(quantile({}, 0.5), ValidationError);
  EXPECT_THROW(credible_interval(Eigen::VectorXd::Ones(1)), ValidationError);
}

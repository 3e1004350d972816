#include "spcp/error.hpp"
#include "spcp/model_variants.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace spcp;

namespace {

struct Chain {
  SpatialGraph graph;
  VFSeries series;
  ModelSpec spec;
  std::unique_ptr<SamplerContext> ctx;
  ChainState state;

  Chain(SpatialGraph g, VFSeries s, ModelSpec sp)
      : graph(std::move(g)), series(std::move(s)), spec(std::move(sp)) {
    spec.hyper = resolve_hyperpriors(spec, graph);
    ctx = std::make_unique<SamplerContext>(spec, series, graph);
    state = initial_state(*ctx);
  }
};

// A declining series with a clear break at 0.5.
VFSeries broken_series(int m, int nu, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(nu, 0.0, 1.0);
  Eigen::MatrixXd obs(m, nu);
  for (int i = 0; i < m; ++i)
    for (int t = 0; t < nu; ++t)
      obs(i, t) = std::max(0.0, 3.0 - 4.0 * std::max(0.0, times[t] - 0.5) + 0.1 * n(gen));
  return test::observed_series(obs, times);
}

ModelSpec short_spec(Variant v, std::uint64_t seed) {
  ModelSpec spec;
  spec.variant = v;
  spec.mcmc.n_iter = 1200;
  spec.mcmc.n_burn = 200;
  spec.mcmc.n_thin = 10;
  spec.mcmc.seed = seed;
  return spec;
}

double latent_site_loglik(const Eigen::MatrixXd& latent, const Eigen::VectorXd& times, int i,
                          const Eigen::RowVectorXd& phi, double theta) {
  double ll = 0.0;
  for (Eigen::Index t = 0; t < times.size(); ++t) {
    const double off = std::max(0.0, times[t] - theta);
    const double mu = phi[kBeta0] + phi[kBeta1] * off;
    const double sd = std::exp(phi[kLambda0] + phi[kLambda1] * off);
    ll += test::mvn_logpdf(Eigen::VectorXd::Constant(1, latent(i, t)), Eigen::VectorXd::Constant(1, mu),
                           Eigen::MatrixXd::Constant(1, 1, sd * sd));
  }
  return ll;
}

}  // namespace

TEST(DiscreteGrid, DropsLastVisit) {
  Eigen::VectorXd t(4);
  t << 0.0, 0.3, 0.6, 1.0;
  const auto g = discrete_cp_grid(t);
  ASSERT_EQ(g.size(), 3);
  EXPECT_EQ(g, t.head(3));
  EXPECT_THROW(discrete_cp_grid(Eigen::VectorXd::Zero(1)), ValidationError);
}

TEST(HierarchicalColumns, PerVariant) {
  EXPECT_EQ(hierarchical_columns(Variant::kSpatialCP).size(), 5u);
  EXPECT_EQ(hierarchical_columns(Variant::kNonspatialL).size(), 5u);
  EXPECT_EQ(hierarchical_columns(Variant::kNonspatialC), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(hierarchical_columns(Variant::kNonspatialD), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(hierarchical_columns(Variant::kPLR).empty());
}

TEST(VariantNames, RoundTrip) {
  for (Variant v : {Variant::kSpatialCP, Variant::kNonspatialL, Variant::kNonspatialC,
                    Variant::kNonspatialD, Variant::kPLR})
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("spatial"), ValidationError);
}

TEST(GibbsDiscreteCp, MatchesEnumeratedConditional) {
  std::mt19937_64 gen(1);
  Chain c(test::random_graph(2, gen), broken_series(2, 6, gen), short_spec(Variant::kNonspatialD, 3));
  c.state.Phi.row(0) << 3.0, -4.0, std::log(0.3), 0.2, 0.0;
  const Eigen::VectorXd grid = discrete_cp_grid(c.series.times);
  Eigen::VectorXd logp(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    logp[k] = latent_site_loglik(c.state.latent, c.series.times, 0, c.state.Phi.row(0), grid[k]);
  const Eigen::VectorXd prob = (logp.array() - logp.maxCoeff()).exp().matrix();
  const Eigen::VectorXd expected = prob / prob.sum();

  const int n = 20000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(grid.size());
  for (int k = 0; k < n; ++k) {
    const int idx = gibbs_discrete_cp(c.state, *c.ctx, 0);
    ASSERT_EQ(c.state.Phi(0, kEta), grid[idx]);
    freq[idx] += 1.0 / n;
  }
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(freq[k], expected[k], 4.0 * std::sqrt(expected[k] * (1 - expected[k]) / n) + 1e-12);
}

TEST(GibbsSigmaDiagonal, InverseGammaMoments) {
  std::mt19937_64 gen(2);
  Chain c(test::random_graph(8, gen), broken_series(8, 5, gen), short_spec(Variant::kNonspatialL, 4));
  for (int i = 0; i < 8; ++i) c.state.Phi.row(i) = test::random_vector(kNumEffects, gen).transpose();
  c.state.delta = test::random_vector(kNumEffects, gen, 0.3);
  const int n = 20000;
  std::vector<std::vector<double>> draws(kNumEffects);
  for (int k = 0; k < n; ++k) {
    gibbs_sigma_diagonal(c.state, *c.ctx, {kBeta1, kEta});
    draws[kBeta1].push_back(c.state.Sigma(kBeta1, kBeta1));
    draws[kEta].push_back(c.state.Sigma(kEta, kEta));
  }
  for (int col : {kBeta1, kEta}) {
    double ss = 0.0;
    for (int i = 0; i < 8; ++i) ss += std::pow(c.state.Phi(i, col) - c.state.delta[col], 2);
    const double shape = c.spec.hyper.ig_shape + 4.0;
    const double scale = c.spec.hyper.ig_scale + 0.5 * ss;
    const double mean = scale / (shape - 1);
    const double var = mean * mean / (shape - 2);
    EXPECT_NEAR(test::mean_of(draws[col]), mean, 4.0 * std::sqrt(var / n));
  }
  // Columns not listed are untouched.
  EXPECT_EQ(c.state.Sigma(kBeta0, kBeta0), 1.0);
}

TEST(UniformCp, StaysInsideWindow) {
  std::mt19937_64 gen(3);
  Chain c(test::random_graph(3, gen), broken_series(3, 7, gen), short_spec(Variant::kNonspatialC, 5));
  c.state.proposal_sds.setConstant(2.0);
  for (int k = 0; k < 500; ++k) {
    metropolis_uniform_cp(c.state, *c.ctx, 1);
    ASSERT_GT(c.state.Phi(1, kEta), c.ctx->x1());
    ASSERT_LT(c.state.Phi(1, kEta), c.ctx->x_nu());
  }
}

TEST(UniformCp, PriorOnlyIsUniform) {
  std::mt19937_64 gen(4);
  auto spec = short_spec(Variant::kNonspatialC, 6);
  spec.use_likelihood = false;
  Chain c(test::random_graph(2, gen), broken_series(2, 5, gen), spec);
  c.state.proposal_sds.setConstant(0.4);
  std::vector<double> x;
  for (int k = 0; k < 60000; ++k) {
    metropolis_uniform_cp(c.state, *c.ctx, 0);
    if (k % 6 == 0) x.push_back(c.state.Phi(0, kEta));
  }
  EXPECT_LT(test::ks_distance(x, [](double v) { return std::clamp(v, 0.0, 1.0); }), 0.03);
}

TEST(Fit, EveryVariantHonoursItsSchema) {
  std::mt19937_64 gen(5);
  const auto g = test::random_graph(4, gen);
  const auto s = broken_series(4, 8, gen);
  const auto grid = discrete_cp_grid(s.times);
  for (Variant v : {Variant::kSpatialCP, Variant::kNonspatialL, Variant::kNonspatialC,
                    Variant::kNonspatialD, Variant::kPLR}) {
    SCOPED_TRACE(std::string(variant_name(v)));
    const auto out = fit(short_spec(v, 7), s, g);
    ASSERT_EQ(out.draws(), 100);
    EXPECT_EQ(out.variant, v);
    for (const auto& Phi : out.Phi) {
      ASSERT_EQ(Phi.cols(), kNumEffects);
      ASSERT_TRUE(Phi.allFinite());
      for (int i = 0; i < 4; ++i) {
        const double e = Phi(i, kEta);
        if (v == Variant::kNonspatialC) {
          EXPECT_GT(e, s.first_time());
          EXPECT_LT(e, s.last_time());
        } else if (v == Variant::kNonspatialD) {
          EXPECT_TRUE((grid.array() == e).any());
        } else if (v == Variant::kPLR) {
          EXPECT_EQ(e, s.first_time());
          EXPECT_EQ(Phi(i, kLambda1), 0.0);
        }
      }
    }
    if (v == Variant::kSpatialCP) {
      EXPECT_TRUE(out.acceptance.count("alpha"));
    } else {
      EXPECT_FALSE(out.acceptance.count("alpha"));
    }
    if (v == Variant::kNonspatialC) {
      EXPECT_TRUE(out.acceptance.count("theta"));
    }
  }
}

TEST(Fit, PlrRecoversLinearTrend) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> n;
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(10, 0.0, 2.0);
  Eigen::MatrixXd obs(2, 10);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 10; ++t) obs(i, t) = 3.0 - 0.8 * times[t] + 0.05 * n(gen);
  const auto s = test::observed_series(obs, times);
  auto spec = short_spec(Variant::kPLR, 8);
  spec.mcmc.n_iter = 3200;
  const auto out = fit(spec, s, test::random_graph(2, gen));
  const auto mean = out.posterior_mean_phi();
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(mean(i, kBeta0), 3.0, 0.1);
    EXPECT_NEAR(mean(i, kBeta1), -0.8, 0.1);
    EXPECT_NEAR(std::exp(mean(i, kLambda0)), 0.05, 0.05);
  }
}

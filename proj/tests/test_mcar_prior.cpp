#include "spcp/error.hpp"
#include "spcp/mcar_prior.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace spcp;

namespace {

struct Instance {
  SpatialGraph graph;
  double alpha;
  double rho;
  Eigen::VectorXd delta;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Phi;
};

Instance random_instance(int m, int p, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto g = test::random_graph(m, gen);
  const double alpha = m > 1 ? alpha_upper_bound(g) * u(gen) : 0.0;
  const double rho = 0.05 + 0.9 * u(gen);
  const Eigen::VectorXd delta = test::random_vector(p, gen, 2.0);
  const Eigen::MatrixXd Sigma = test::random_spd(p, gen);
  Eigen::MatrixXd Phi(m, p);
  for (int i = 0; i < m; ++i) Phi.row(i) = (delta + test::random_vector(p, gen)).transpose();
  return {std::move(g), alpha, rho, delta, Sigma, Phi};
}

double dense_log_density(const Instance& in) {
  const int m = in.graph.size();
  const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
  const Eigen::MatrixXd cov = test::kron(Q.inverse(), in.Sigma);
  const Eigen::VectorXd mean = test::kron(Eigen::VectorXd::Ones(m), in.delta);
  return test::mvn_logpdf(test::vec_sites(in.Phi), mean, cov);
}

}  // namespace

TEST(McarDensity, MatchesDenseKroneckerOracle) {
  std::mt19937_64 gen(101);
  for (int rep = 0; rep < 40; ++rep) {
    const int m = 1 + rep % 4;
    const int p = 1 + (rep / 4) % 3;
    const auto in = random_instance(m, p, gen);
    const PrecisionFactor f(precision_matrix(in.graph, in.alpha, in.rho));
    EXPECT_NEAR(mcar_log_density(in.Phi, in.delta, in.Sigma, f), dense_log_density(in), 1e-8)
        << "m=" << m << " p=" << p;
  }
}

TEST(McarDensity, SingleSiteReducesToMvn) {
  std::mt19937_64 gen(5);
  const auto g = test::random_graph(1, gen);
  const double rho = 1e-10;
  const PrecisionFactor f(precision_matrix(g, 0.0, rho));
  const Eigen::VectorXd delta = test::random_vector(3, gen);
  const Eigen::MatrixXd Sigma = test::random_spd(3, gen);
  const Eigen::VectorXd x = test::random_vector(3, gen);
  EXPECT_NEAR(mcar_log_density(x.transpose(), delta, Sigma, f), test::mvn_logpdf(x, delta, Sigma), 1e-8);
}

TEST(McarDensity, RowConstantAtDeltaIsTheMode) {
  std::mt19937_64 gen(6);
  auto in = random_instance(4, 3, gen);
  const PrecisionFactor f(precision_matrix(in.graph, in.alpha, in.rho));
  const Eigen::MatrixXd at_mode = Eigen::VectorXd::Ones(4) * in.delta.transpose();
  EXPECT_LT(mcar_scatter(at_mode, in.delta, f.Q()).cwiseAbs().maxCoeff(), 1e-14);
  const double top = mcar_log_density(at_mode, in.delta, in.Sigma, f);
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXd moved = at_mode;
    moved(k % 4, k % 3) += 0.01 * (k + 1);
    EXPECT_LT(mcar_log_density(moved, in.delta, in.Sigma, f), top);
  }
}

TEST(McarDensity, TraceIdentity) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto in = random_instance(2 + rep % 3, 1 + rep % 3, gen);
    const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
    const Eigen::MatrixXd S = mcar_scatter(in.Phi, in.delta, Q);
    const double lhs = (S * in.Sigma.inverse()).trace();
    const Eigen::VectorXd d =
        test::vec_sites(in.Phi) - test::kron(Eigen::VectorXd::Ones(in.graph.size()), in.delta);
    const double rhs = d.dot(test::kron(Q, in.Sigma.inverse()) * d);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(McarDensity, InvariantUnderSiteRelabeling) {
  std::mt19937_64 gen(8);
  const auto in = random_instance(4, 2, gen);
  const std::vector<int> perm = {2, 0, 3, 1};
  const auto g2 = in.graph.permuted(perm);
  Eigen::MatrixXd Phi2(4, 2);
  for (int k = 0; k < 4; ++k) Phi2.row(k) = in.Phi.row(perm[k]);
  const McarHyper h{in.delta, in.Sigma, in.alpha, in.rho};
  EXPECT_NEAR(mcar_log_density(in.Phi, h, in.graph), mcar_log_density(Phi2, h, g2), 1e-10);
}

TEST(McarSample, MeanAndSiteCovarianceMatchOracle) {
  std::mt19937_64 gen(9);
  const auto in = random_instance(3, 2, gen);
  const PrecisionFactor f(precision_matrix(in.graph, in.alpha, in.rho));
  const Eigen::MatrixXd Qinv = f.Q().inverse();
  Rng rng(99);
  const int n = 10000;
  std::vector<double> x00, x01, prod;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(3, 2);
  for (int d = 0; d < n; ++d) {
    const Eigen::MatrixXd Phi = mcar_sample(in.delta, in.Sigma, f, rng);
    sum += Phi;
    sumsq += Phi.cwiseProduct(Phi);
    prod.push_back((Phi(1, 0) - in.delta[0]) * (Phi(1, 1) - in.delta[1]));
  }
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k) {
      const double sd = std::sqrt(Qinv(i, i) * in.Sigma(k, k));
      EXPECT_NEAR(sum(i, k) / n, in.delta[k], 3.0 * sd / std::sqrt(n));
    }
  const double cov = test::mean_of(prod);
  const double se = std::sqrt(test::var_of(prod) / n);
  EXPECT_NEAR(cov, Qinv(1, 1) * in.Sigma(0, 1), 3.0 * se);
}

TEST(McarSample, ScalarCaseIsLerouxCar) {
  std::mt19937_64 gen(10);
  const auto in = random_instance(3, 1, gen);
  const PrecisionFactor f(precision_matrix(in.graph, in.alpha, in.rho));
  const Eigen::MatrixXd target = f.Q().inverse() * in.Sigma(0, 0);
  Rng rng(3);
  const int n = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int d = 0; d < n; ++d) {
    const Eigen::VectorXd x = mcar_sample(in.delta, in.Sigma, f, rng).col(0).array() - in.delta[0];
    acc += x * x.transpose();
  }
  acc /= n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) / n);
      EXPECT_NEAR(acc(i, j), target(i, j), 4.0 * se);
    }
}

TEST(McarSample, SemiDefiniteSigmaFreezesColumn) {
  std::mt19937_64 gen(12);
  const auto g = test::random_graph(4, gen);
  const PrecisionFactor f(precision_matrix(g, 0.1, 0.99));
  Eigen::MatrixXd Sigma = Eigen::MatrixXd::Identity(3, 3);
  Sigma(1, 1) = 0.0;
  const Eigen::Vector3d delta(1, 2, 3);
  Rng rng(1);
  const auto Phi = mcar_sample(delta, Sigma, f, rng);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(Phi(i, 1), 2.0, 1e-12);
}

TEST(ConditionalMoments, MatchesDensePartition) {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 30; ++rep) {
    const int m = 1 + rep % 4;
    const int p = 2 + rep % 2;
    const auto in = random_instance(m, p, gen);
    const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
    std::vector<int> k = {rep % p};
    if (p == 3 && rep % 3 == 0) k.push_back((rep + 1) % p);
    std::sort(k.begin(), k.end());
    const auto j = complement_columns(k, p);
    const auto cm = conditional_moments(in.Phi, in.delta, in.Sigma, Q, k, j);

    const Eigen::MatrixXd cov = test::kron(Q.inverse(), in.Sigma);
    const Eigen::VectorXd mean = test::kron(Eigen::VectorXd::Ones(m), in.delta);
    std::vector<int> keep, given;
    for (int i = 0; i < m; ++i) {
      for (int c : k) keep.push_back(i * p + c);
      for (int c : j) given.push_back(i * p + c);
    }
    const auto oracle = test::condition(mean, cov, keep, given, test::vec_sites(in.Phi));
    const auto nk = static_cast<int>(k.size());
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < nk; ++a) EXPECT_NEAR(cm.mean(i, a), oracle.mean[i * nk + a], 1e-8);
    const Eigen::MatrixXd factored = test::kron(cm.Q.inverse(), cm.sigma_cond);
    EXPECT_LT((factored - oracle.cov).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ConditionalMoments, DiagonalSigmaGivesMarginals) {
  std::mt19937_64 gen(14);
  auto in = random_instance(3, 3, gen);
  in.Sigma = Eigen::Vector3d(0.5, 2.0, 3.0).asDiagonal();
  const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
  const auto cm = conditional_moments(in.Phi, in.delta, in.Sigma, Q, {1}, {0, 2});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(cm.mean(i, 0), in.delta[1], 1e-12);
  EXPECT_NEAR(cm.sigma_cond(0, 0), 2.0, 1e-12);
}

TEST(ConditionalMoments, EmptyConditioningSetIsThePrior) {
  std::mt19937_64 gen(15);
  const auto in = random_instance(3, 2, gen);
  const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
  const auto cm = conditional_moments(in.Phi, in.delta, in.Sigma, Q, {0, 1}, {});
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(cm.mean(i, a), in.delta[a], 1e-12);
  EXPECT_LT((cm.sigma_cond - in.Sigma).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConditionalMoments, BrookSiteConditionalClosedForm) {
  // f(phi_i | phi_-i) from the joint equals
  // MVN((rho sum w phi_j + (1 - rho) delta) / d_i, Sigma / d_i), d_i = rho sum w + 1 - rho.
  std::mt19937_64 gen(16);
  const auto in = random_instance(3, 2, gen);
  const Eigen::MatrixXd Q = test::dense_precision(in.graph, in.alpha, in.rho);
  const Eigen::MatrixXd cov = test::kron(Q.inverse(), in.Sigma);
  const Eigen::VectorXd mean = test::kron(Eigen::VectorXd::Ones(3), in.delta);
  for (int i = 0; i < 3; ++i) {
    double wsum = 0.0;
    Eigen::VectorXd nb = Eigen::VectorXd::Zero(2);
    for (int j : in.graph.neighbors()[i]) {
      const double w = std::exp(-in.alpha * in.graph.pair_dissim(i, j));
      wsum += w;
      nb += w * in.Phi.row(j).transpose();
    }
    const double d = in.rho * wsum + 1.0 - in.rho;
    std::vector<int> keep = {i * 2, i * 2 + 1}, given;
    for (int s = 0; s < 6; ++s)
      if (s / 2 != i) given.push_back(s);
    const auto oracle = test::condition(mean, cov, keep, given, test::vec_sites(in.Phi));
    const Eigen::VectorXd closed_mean = (in.rho * nb + (1.0 - in.rho) * in.delta) / d;
    EXPECT_LT((oracle.mean - closed_mean).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((oracle.cov - in.Sigma / d).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ComplementColumns, Basic) {
  EXPECT_EQ(complement_columns({1, 3}, 5), (std::vector<int>{0, 2, 4}));
  EXPECT_TRUE(complement_columns({0, 1, 2}, 3).empty());
}

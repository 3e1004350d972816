#pragma once

// Dense reference computations and fixtures shared by the unit and
// acceptance tests. Everything here is built from textbook formulas on the
// full mp-dimensional objects, never from the library's factored shortcuts.

#include "spcp/cp_likelihood.hpp"
#include "spcp/mcar_prior.hpp"
#include "spcp/spatial_graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace spcp::test {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// (phi_1^T, ..., phi_m^T)^T
inline Eigen::VectorXd vec_sites(const Eigen::MatrixXd& Phi) {
  Eigen::VectorXd v(Phi.size());
  for (Eigen::Index i = 0; i < Phi.rows(); ++i)
    for (Eigen::Index k = 0; k < Phi.cols(); ++k) v[i * Phi.cols() + k] = Phi(i, k);
  return v;
}

inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd r = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * r.squaredNorm() - 0.5 * logdet -
         0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Brute-force conditioning of a joint Gaussian on the `given` coordinates.
inline Gaussian condition(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const std::vector<int>& keep, const std::vector<int>& given,
                          const Eigen::VectorXd& x) {
  const auto nk = static_cast<Eigen::Index>(keep.size());
  const auto ng = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd ckk(nk, nk), ckg(nk, ng), cgg(ng, ng);
  Eigen::VectorXd mk(nk), dg(ng);
  for (Eigen::Index a = 0; a < nk; ++a) {
    mk[a] = mean[keep[a]];
    for (Eigen::Index b = 0; b < nk; ++b) ckk(a, b) = cov(keep[a], keep[b]);
    for (Eigen::Index b = 0; b < ng; ++b) ckg(a, b) = cov(keep[a], given[b]);
  }
  for (Eigen::Index a = 0; a < ng; ++a) {
    dg[a] = x[given[a]] - mean[given[a]];
    for (Eigen::Index b = 0; b < ng; ++b) cgg(a, b) = cov(given[a], given[b]);
  }
  if (ng == 0) return {mk, ckk};
  const Eigen::MatrixXd gain = ckg * cgg.inverse();
  return {mk + gain * dg, ckk - gain * ckg.transpose()};
}

// Q built entry by entry from its definition.
inline Eigen::MatrixXd dense_precision(const SpatialGraph& g, double alpha, double rho) {
  const int m = g.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [i, j] : g.edges()) {
    const double w = std::exp(-std::abs(g.dissim()[i] - g.dissim()[j]) * alpha);
    Q(i, j) = Q(j, i) = -rho * w;
    Q(i, i) += rho * w;
    Q(j, j) += rho * w;
  }
  Q.diagonal().array() += 1.0 - rho;
  return Q;
}

inline Eigen::MatrixXd random_spd(int p, std::mt19937_64& gen, double ridge = 0.3) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = n(gen);
  return a * a.transpose() / p + ridge * Eigen::MatrixXd::Identity(p, p);
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(gen);
  return v;
}

// Connected random graph: a path plus random chords, random dissimilarities.
inline SpatialGraph random_graph(int m, std::mt19937_64& gen) {
  std::vector<Site> sites;
  for (int i = 0; i < m; ++i) sites.push_back({i + 1, i / 3, i % 3});
  std::vector<Edge> edges;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
  for (int i = 0; i < m; ++i)
    for (int j = i + 2; j < m; ++j)
      if (coin(gen)) edges.emplace_back(i, j);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = u(gen);
  return SpatialGraph(sites, edges, z, {});
}

// rows x cols lattice without blind spots; angles given row-major.
inline SpatialGraph grid_graph(int rows, int cols, const std::vector<double>& angles) {
  std::vector<SiteAngle> layout;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      layout.push_back({r * cols + c + 1, r, c, angles.at(r * cols + c), false});
  return build_vf_graph(layout);
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// Two-sided one-sample Kolmogorov-Smirnov distance.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

inline double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

// Standard error of the mean of x using batch means, which stays honest for
// correlated draws.
inline double batch_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += x[b * len + k];
    means.push_back(s / len);
  }
  return std::sqrt(var_of(means) / batches);
}

// Series with every cell observed (no censoring) at the given times.
inline VFSeries observed_series(const Eigen::MatrixXd& obs, const Eigen::VectorXd& times,
                                std::vector<int> ids = {}) {
  if (ids.empty())
    for (Eigen::Index i = 0; i < obs.rows(); ++i) ids.push_back(static_cast<int>(i) + 1);
  return VFSeries::from_observations("test", ids, times, obs);
}

// Joint prior of vec(Phi), site-major: mean 1 (x) delta, precision Q (x) Sigma^{-1}.
inline Gaussian mcar_joint(const Eigen::MatrixXd& Q, const Eigen::VectorXd& delta,
                           const Eigen::MatrixXd& Sigma) {
  const auto m = Q.rows();
  Eigen::VectorXd mean(m * delta.size());
  for (Eigen::Index i = 0; i < m; ++i) mean.segment(i * delta.size(), delta.size()) = delta;
  return {mean, kron(Q, Sigma.inverse()).inverse()};
}

// Full conditional of delta under a N(0, kappa2 I) prior, by brute force.
inline Gaussian delta_posterior(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Phi,
                                const Eigen::MatrixXd& Sigma, double kappa2) {
  const auto m = Q.rows();
  const auto p = Sigma.rows();
  const Eigen::MatrixXd A = kron(Eigen::MatrixXd::Ones(m, 1), Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd P = kron(Q, Sigma.inverse());
  const Eigen::MatrixXd prec =
      A.transpose() * P * A + Eigen::MatrixXd::Identity(p, p) / kappa2;
  const Eigen::MatrixXd cov = prec.inverse();
  return {cov * A.transpose() * P * vec_sites(Phi), cov};
}

// Full conditional of (beta0_i, beta1_i)_i given the other columns and the
// latent surface: the conditioned joint prior times the per-cell Gaussians.
inline Gaussian beta_posterior(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Phi,
                               const Eigen::VectorXd& delta, const Eigen::MatrixXd& Sigma,
                               const Eigen::VectorXd& times, const Eigen::MatrixXd& latent) {
  const int m = static_cast<int>(Q.rows());
  const int p = static_cast<int>(Sigma.rows());
  std::vector<int> keep, given;
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < p; ++k) (k < 2 ? keep : given).push_back(i * p + k);
  const Gaussian joint = mcar_joint(Q, delta, Sigma);
  const Gaussian prior = condition(joint.mean, joint.cov, keep, given, vec_sites(Phi));
  const Eigen::MatrixXd prior_prec = prior.cov.inverse();
  Eigen::MatrixXd prec = prior_prec;
  Eigen::VectorXd rhs = prior_prec * prior.mean;
  const double x1 = times[0];
  const double xn = times[times.size() - 1];
  for (int i = 0; i < m; ++i) {
    const double theta = std::clamp(Phi(i, kEta), x1, xn);
    for (Eigen::Index t = 0; t < times.size(); ++t) {
      const double off = std::max(0.0, times[t] - theta);
      const double sd = std::exp(Phi(i, kLambda0) + Phi(i, kLambda1) * off);
      const Eigen::Vector2d d(1.0, off);
      prec.block(2 * i, 2 * i, 2, 2) += d * d.transpose() / (sd * sd);
      rhs.segment(2 * i, 2) += d * latent(i, t) / (sd * sd);
    }
  }
  const Eigen::MatrixXd cov = prec.inverse();
  return {cov * rhs, cov};
}

// Inverse-Wishart full conditional of Sigma: (degrees of freedom, scale).
inline std::pair<double, Eigen::MatrixXd> sigma_posterior(const Eigen::MatrixXd& Q,
                                                          const Eigen::MatrixXd& Phi,
                                                          const Eigen::VectorXd& delta,
                                                          const Eigen::MatrixXd& Psi, double xi) {
  const auto m = Q.rows();
  Eigen::MatrixXd S = Psi;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd a = Phi.row(i).transpose() - delta;
      const Eigen::VectorXd b = Phi.row(j).transpose() - delta;
      S += Q(i, j) * a * b.transpose();
    }
  return {static_cast<double>(m) + xi, S};
}

// Entrywise variance of IW(df, S) in dimension p.
inline double iw_entry_var(double df, const Eigen::MatrixXd& S, int i, int j) {
  const double p = static_cast<double>(S.rows());
  const double a = df - p;
  return ((a + 1) * S(i, j) * S(i, j) + (a - 1) * S(i, i) * S(j, j)) /
         (a * (a - 1) * (a - 1) * (a - 3));
}

}  // namespace spcp::test

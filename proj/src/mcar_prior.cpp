#include "spcp/mcar_prior.hpp"

#include "spcp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spcp {

namespace {

void check_dims(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                const Eigen::MatrixXd& Sigma, Eigen::Index m) {
  const Eigen::Index p = Phi.cols();
  if (Phi.rows() != m) throw ValidationError("effect matrix rows do not match site count");
  if (delta.size() != p) throw ValidationError("delta length does not match effect columns");
  if (Sigma.rows() != p || Sigma.cols() != p)
    throw ValidationError("Sigma dimension does not match effect columns");
}

Eigen::MatrixXd select(const Eigen::MatrixXd& a, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
  return out;
}

}  // namespace

PrecisionFactor::PrecisionFactor(PrecisionMatrix precision)
    : precision_(std::move(precision)), llt_(precision_.Q) {
  if (llt_.info() != Eigen::Success)
    throw NumericalError("precision matrix Q is not positive definite");
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  total_ = precision_.Q.sum();
}

Eigen::MatrixXd mcar_scatter(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                             const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd dev = Phi.rowwise() - delta.transpose();
  return dev.transpose() * (Q * dev);
}

double mcar_log_density(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                        const Eigen::MatrixXd& Sigma, const PrecisionFactor& precision) {
  const Eigen::Index m = precision.Q().rows();
  const Eigen::Index p = Phi.cols();
  check_dims(Phi, delta, Sigma, m);
  Eigen::LLT<Eigen::MatrixXd> sigma_llt(Sigma);
  if (sigma_llt.info() != Eigen::Success)
    throw ValidationError("Sigma is not symmetric positive definite");
  const double log_det_sigma = 2.0 * sigma_llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::MatrixXd scatter = mcar_scatter(Phi, delta, precision.Q());
  const double quad = sigma_llt.solve(scatter).trace();
  return 0.5 * static_cast<double>(p) * precision.log_det() -
         0.5 * static_cast<double>(m) * log_det_sigma - 0.5 * quad -
         0.5 * static_cast<double>(m * p) * std::log(2.0 * std::numbers::pi);
}

double mcar_log_density(const EffectMatrix& Phi, const McarHyper& hyper,
                        const SpatialGraph& graph) {
  const PrecisionFactor precision(precision_matrix(graph, hyper.alpha, hyper.rho));
  return mcar_log_density(Phi, hyper.delta, hyper.Sigma, precision);
}

EffectMatrix mcar_sample(const Eigen::VectorXd& delta, const Eigen::MatrixXd& Sigma,
                         const PrecisionFactor& precision, Rng& rng) {
  const Eigen::Index m = precision.Q().rows();
  const Eigen::Index p = delta.size();
  if (Sigma.rows() != p || Sigma.cols() != p)
    throw ValidationError("Sigma dimension does not match delta");

  // Root R with R R^T = Sigma from a pivoted LDL^T, tolerating zero variances.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Sigma);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("Sigma factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if (d.minCoeff() < -1e-10 * scale)
    throw NumericalError("Sigma is not positive semi-definite");
  Eigen::MatrixXd lower = ldlt.matrixL();
  lower = lower * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::MatrixXd root = ldlt.transpositionsP().transpose() * lower;

  // Columns of Z^T are iid N(0, I_m); L_Q^{-T} maps them to N(0, Q^{-1}).
  Eigen::MatrixXd z(m, p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < m; ++r) z(r, c) = rng.normal();
  Eigen::MatrixXd spatial = precision.llt().matrixU().solve(z);
  EffectMatrix phi = spatial * root.transpose();
  phi.rowwise() += delta.transpose();
  return phi;
}

EffectMatrix mcar_sample(const McarHyper& hyper, const SpatialGraph& graph, Rng& rng) {
  const PrecisionFactor precision(precision_matrix(graph, hyper.alpha, hyper.rho));
  return mcar_sample(hyper.delta, hyper.Sigma, precision, rng);
}

std::vector<int> complement_columns(const std::vector<int>& k, int p) {
  std::vector<int> out;
  for (int c = 0; c < p; ++c)
    if (std::find(k.begin(), k.end(), c) == k.end()) out.push_back(c);
  return out;
}

ConditionalMoments conditional_moments(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                                       const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& Q,
                                       const std::vector<int>& k, const std::vector<int>& j) {
  const int p = static_cast<int>(Phi.cols());
  check_dims(Phi, delta, Sigma, Q.rows());
  std::vector<int> seen(p, 0);
  for (int c : k) {
    if (c < 0 || c >= p) throw ValidationError("conditional_moments: column out of range");
    ++seen[c];
  }
  for (int c : j) {
    if (c < 0 || c >= p) throw ValidationError("conditional_moments: column out of range");
    ++seen[c];
  }
  for (int c = 0; c < p; ++c)
    if (seen[c] != 1)
      throw ValidationError("conditional_moments: k and j must partition the columns");
  if (k.empty()) throw ValidationError("conditional_moments: k must be non-empty");

  const Eigen::Index m = Phi.rows();
  ConditionalMoments out;
  out.Q = Q;
  Eigen::MatrixXd mean(m, k.size());
  for (std::size_t a = 0; a < k.size(); ++a) mean.col(a).setConstant(delta[k[a]]);

  const Eigen::MatrixXd s_kk = select(Sigma, k, k);
  if (j.empty()) {
    out.mean = std::move(mean);
    out.sigma_cond = s_kk;
    out.regression = Eigen::MatrixXd(k.size(), 0);
    return out;
  }
  const Eigen::MatrixXd s_kj = select(Sigma, k, j);
  const Eigen::MatrixXd s_jj = select(Sigma, j, j);
  Eigen::LLT<Eigen::MatrixXd> jj(s_jj);
  if (jj.info() != Eigen::Success)
    throw NumericalError("conditional_moments: Sigma_jj is singular");
  // regression = Sigma_kj Sigma_jj^{-1}
  const Eigen::MatrixXd regression = jj.solve(s_kj.transpose()).transpose();

  Eigen::MatrixXd dev_j(m, j.size());
  for (std::size_t b = 0; b < j.size(); ++b)
    dev_j.col(b) = Phi.col(j[b]).array() - delta[j[b]];
  mean += dev_j * regression.transpose();

  out.mean = std::move(mean);
  out.sigma_cond = s_kk - regression * s_kj.transpose();
  out.regression = regression;
  return out;
}

ConditionalMoments conditional_moments(const EffectMatrix& Phi, const McarHyper& hyper,
                                       const SpatialGraph& graph, const std::vector<int>& k,
                                       const std::vector<int>& j) {
  const PrecisionMatrix precision = precision_matrix(graph, hyper.alpha, hyper.rho);
  return conditional_moments(Phi, hyper.delta, hyper.Sigma, precision.Q, k, j);
}

}  // namespace spcp

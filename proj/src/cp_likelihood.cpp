#include "spcp/cp_likelihood.hpp"

#include "spcp/error.hpp"

#include <cmath>
#include <numbers>

namespace spcp {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void check_effects(const VFSeries& series, const EffectMatrix& Phi) {
  if (Phi.rows() != series.sites() || Phi.cols() != kNumEffects)
    throw ValidationError("effect matrix must be sites x 5");
}

}  // namespace

VFSeries VFSeries::from_observations(std::string eye_id, std::vector<int> site_ids,
                                     Eigen::VectorXd times, Eigen::MatrixXd obs) {
  VFSeries s;
  s.eye_id = std::move(eye_id);
  s.site_ids = std::move(site_ids);
  s.times = std::move(times);
  s.obs = std::move(obs);
  s.censored = (s.obs.array() == 0.0);
  s.latent = s.obs;
  for (Eigen::Index i = 0; i < s.obs.rows(); ++i)
    for (Eigen::Index t = 0; t < s.obs.cols(); ++t)
      if (s.censored(i, t)) s.latent(i, t) = -0.1;
  return s;
}

void VFSeries::validate() const {
  const Eigen::Index m = obs.rows();
  const Eigen::Index nu = obs.cols();
  if (m == 0 || nu == 0) throw ValidationError("series " + eye_id + " is empty");
  if (times.size() != nu) throw ValidationError("series " + eye_id + ": times length mismatch");
  if (static_cast<Eigen::Index>(site_ids.size()) != m)
    throw ValidationError("series " + eye_id + ": site id count mismatch");
  if (times[0] != 0.0) throw ValidationError("series " + eye_id + ": first visit time must be 0");
  for (Eigen::Index t = 1; t < nu; ++t)
    if (!(times[t] > times[t - 1]))
      throw ValidationError("series " + eye_id + ": visit times must be strictly increasing");
  if (censored.rows() != m || censored.cols() != nu || latent.rows() != m ||
      latent.cols() != nu)
    throw ValidationError("series " + eye_id + ": censoring/latent shape mismatch");
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index t = 0; t < nu; ++t) {
      const double y = obs(i, t);
      if (!std::isfinite(y) || y < 0.0)
        throw ValidationError("series " + eye_id + ": observations must be finite and >= 0");
      if (censored(i, t) != (y == 0.0))
        throw ValidationError("series " + eye_id + ": censored flag inconsistent with obs");
      if (censored(i, t) ? !(latent(i, t) <= 0.0) : latent(i, t) != y)
        throw ValidationError("series " + eye_id + ": latent value inconsistent with obs");
    }
  }
}

VFSeries VFSeries::first_visits(int n) const {
  if (n < 1 || n > visits()) throw ValidationError("first_visits: bad visit count");
  VFSeries s = *this;
  s.times = times.head(n);
  s.obs = obs.leftCols(n);
  s.censored = censored.leftCols(n);
  s.latent = latent.leftCols(n);
  return s;
}

VFSeries VFSeries::permuted(const std::vector<int>& perm) const {
  const int m = sites();
  if (static_cast<int>(perm.size()) != m) throw ValidationError("permutation has wrong length");
  VFSeries s = *this;
  for (int k = 0; k < m; ++k) {
    s.site_ids[k] = site_ids[perm[k]];
    s.obs.row(k) = obs.row(perm[k]);
    s.censored.row(k) = censored.row(perm[k]);
    s.latent.row(k) = latent.row(perm[k]);
  }
  return s;
}

SiteParams SiteParams::from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, double x1,
                                double x_nu) {
  SiteParams p;
  p.beta0 = row[kBeta0];
  p.beta1 = row[kBeta1];
  p.lambda0 = row[kLambda0];
  p.lambda1 = row[kLambda1];
  p.eta = row[kEta];
  p.theta = observed_cp(p.eta, x1, x_nu);
  return p;
}

double observed_cp(double eta, double x1, double x_nu) {
  return std::max(std::min(eta, x_nu), x1);
}

std::array<double, 2> design_row(double x_t, double theta) {
  return {1.0, theta <= x_t ? x_t - theta : 0.0};
}

SiteMoments site_moments(const SiteParams& p, double x_t) {
  const double offset = p.theta <= x_t ? x_t - p.theta : 0.0;
  const double log_sigma = p.lambda0 + p.lambda1 * offset;
  if (!(std::abs(log_sigma) <= kMaxLogSigma))
    throw NumericalError("log-sigma exponent out of range");
  return {p.beta0 + p.beta1 * offset, std::exp(log_sigma)};
}

double normal_log_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

double log_normal_cdf(double x) {
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio asymptotic series below erfc's underflow point.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log(series);
}

double tobit_log_lik(double obs, bool censored, double mu, double sigma) {
  if (censored) return log_normal_cdf(-mu / sigma);
  return normal_log_pdf(obs, mu, sigma);
}

double tobit_mean(double mu, double sigma) {
  const double z = mu / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z - kLogSqrt2Pi);
  return mu * cdf + sigma * pdf;
}

double site_latent_log_lik(const VFSeries& series, int site, const SiteParams& p) {
  return site_latent_log_lik(series.latent, series.times, site, p);
}

double site_latent_log_lik(const Eigen::MatrixXd& y, const Eigen::VectorXd& times, int site,
                           const SiteParams& p) {
  double total = 0.0;
  const auto nu = static_cast<int>(times.size());
  for (int t = 0; t < nu; ++t) {
    const double x = times[t];
    const double offset = p.theta <= x ? x - p.theta : 0.0;
    const double log_sigma = p.lambda0 + p.lambda1 * offset;
    const double z = (y(site, t) - p.beta0 - p.beta1 * offset) * std::exp(-log_sigma);
    total += -0.5 * z * z - log_sigma;
  }
  return total - nu * kLogSqrt2Pi;
}

double latent_gaussian_log_lik(const VFSeries& series, const EffectMatrix& Phi) {
  check_effects(series, Phi);
  double total = 0.0;
  for (int i = 0; i < series.sites(); ++i) {
    const auto p = SiteParams::from_row(Phi.row(i), series.first_time(), series.last_time());
    total += site_latent_log_lik(series, i, p);
  }
  return total;
}

double observed_log_lik(const VFSeries& series, const EffectMatrix& Phi) {
  check_effects(series, Phi);
  double total = 0.0;
  for (int i = 0; i < series.sites(); ++i) {
    const auto p = SiteParams::from_row(Phi.row(i), series.first_time(), series.last_time());
    for (int t = 0; t < series.visits(); ++t) {
      const auto mom = site_moments(p, series.times[t]);
      total += tobit_log_lik(series.obs(i, t), series.censored(i, t), mom.mu, mom.sigma);
    }
  }
  return total;
}

}  // namespace spcp

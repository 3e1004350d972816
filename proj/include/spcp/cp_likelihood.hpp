#pragma once

#include "spcp/mcar_prior.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace spcp {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Censored visual-field series for one eye on the model scale.
///
/// `obs` holds Y* = max(0, Y); `latent` holds the working Y, equal to `obs`
/// wherever the cell is uncensored and <= 0 wherever it is censored. The
/// scale fields record how to map back to decibels and days.
struct VFSeries {
  std::string eye_id;
  std::vector<int> site_ids;
  Eigen::VectorXd times;  // years since the first visit; strictly increasing, times[0] == 0
  Eigen::MatrixXd obs;    // m x nu
  BoolMatrix censored;    // m x nu, true iff obs == 0
  Eigen::MatrixXd latent; // m x nu

  double sens_scale = 1.0;       // dB = model value * sens_scale
  double days_per_year = 365.25; // days = years * days_per_year + time_offset_days
  double time_offset_days = 0.0;

  /// Builds a series from model-scale observations. Censored flags follow
  /// obs == 0 and censored latent cells start at -0.1.
  static VFSeries from_observations(std::string eye_id, std::vector<int> site_ids,
                                    Eigen::VectorXd times, Eigen::MatrixXd obs);

  int sites() const { return static_cast<int>(obs.rows()); }
  int visits() const { return static_cast<int>(obs.cols()); }
  double first_time() const { return times[0]; }
  double last_time() const { return times[times.size() - 1]; }

  /// Throws ValidationError when any invariant above is violated.
  void validate() const;

  /// The first `n` visits (used to hold out future visits).
  VFSeries first_visits(int n) const;
  /// Same series with sites reordered: new site k is old site perm[k].
  VFSeries permuted(const std::vector<int>& perm) const;
};

struct SiteParams {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double eta = 0.0;
  double theta = 0.0;  // observed_cp(eta, x1, x_nu)

  static SiteParams from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, double x1,
                             double x_nu);
};

struct SiteMoments {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Largest |log sigma| accepted before a proposal is treated as overflow.
inline constexpr double kMaxLogSigma = 300.0;

/// theta = max(min(eta, x_nu), x1).
double observed_cp(double eta, double x1, double x_nu);

/// [1, (x_t - theta) * 1{theta <= x_t}].
std::array<double, 2> design_row(double x_t, double theta);

/// Mean and standard deviation at time x_t. Throws NumericalError when the
/// log-sigma exponent exceeds kMaxLogSigma.
SiteMoments site_moments(const SiteParams& p, double x_t);

double normal_log_pdf(double x, double mu, double sigma);
/// log Phi(x), accurate far into both tails.
double log_normal_cdf(double x);

/// Censored cell: log Phi(-mu / sigma). Otherwise log N(obs; mu, sigma^2).
double tobit_log_lik(double obs, bool censored, double mu, double sigma);

/// E[max(0, Y)] for Y ~ N(mu, sigma^2).
double tobit_mean(double mu, double sigma);

/// Augmented-data log-likelihood of the latent matrix at one site.
double site_latent_log_lik(const VFSeries& series, int site, const SiteParams& p);
double site_latent_log_lik(const Eigen::MatrixXd& latent, const Eigen::VectorXd& times, int site,
                           const SiteParams& p);

/// sum_{i,t} log N(latent_it; mu_t(s_i), sigma_t(s_i)^2). Phi has the five
/// change-point columns; theta is derived from the eta column.
double latent_gaussian_log_lik(const VFSeries& series, const EffectMatrix& Phi);

/// Observed-data (Tobit) log-likelihood; -2 times this is the DIC deviance.
double observed_log_lik(const VFSeries& series, const EffectMatrix& Phi);

}  // namespace spcp

#pragma once

#include "spcp/cp_likelihood.hpp"
#include "spcp/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace spcp {

// dic = mean_deviance + p_d, p_d = mean_deviance - deviance_at_mean.
struct FitDiagnostics {
  double dic = 0.0;
  double p_d = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
  int excluded_draws = 0;
};

/// Deviance is -2 x the observed-data Tobit log-likelihood. The plug-in point
/// is the posterior mean of Phi, with theta clamped from the mean eta.
FitDiagnostics dic(const PosteriorSamples& samples, const VFSeries& series);

/// Change point used when predicting at x: eta clamped to [x1, max(x_nu, x)].
double predictive_cp(double eta, double x1, double x_nu, double x);

/// Posterior mean of E[Y*] at time x for every site (model scale).
Eigen::VectorXd predictive_mean(const PosteriorSamples& samples, double x);

/// Mean over sites of the squared error between the posterior predictive mean
/// at x and the held-out observations (model scale).
double mspe(const PosteriorSamples& samples, double x, const Eigen::VectorXd& heldout);

/// z = (mean(first 10%) - mean(last 50%)) / sqrt(S_a/n_a + S_b/n_b), where S
/// is a Bartlett-window spectral density at zero with floor(sqrt(n)) lags.
double geweke(const Eigen::VectorXd& chain);

/// Largest |z| over delta, alpha (spatial only), the Sigma diagonal and
/// `n_phi` Phi entries chosen by `seed`. Constant chains are skipped.
double geweke_max_abs_z(const PosteriorSamples& samples, int n_phi = 5, std::uint64_t seed = 1);

/// p_i(t): share of draws with max(eta, x1) < t.
Eigen::VectorXd cp_probability(const PosteriorSamples& samples, double t);

struct ProgressionMetric {
  Eigen::VectorXd p;
  double max_metric = 0.0;
};
/// cp_probability at the last visit time, with its maximum over sites.
ProgressionMetric progression_metric(const PosteriorSamples& samples);

struct LogisticResult {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double log_lik = 0.0;
  double aic = 0.0;
  double auc = 0.0;
  double p_value = 0.0;
  bool converged = false;
  bool separated = false;
};

/// Mann-Whitney AUC; ties count one half.
double auc(const std::vector<double>& metric, const std::vector<bool>& label);

/// label ~ metric logistic regression by IRLS with a Wald test on the slope.
/// Perfect separation leaves aic and p_value as NaN with `separated` set.
LogisticResult logistic_diagnostic(const std::vector<double>& metric,
                                   const std::vector<bool>& label);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> x, double q);
std::pair<double, double> credible_interval(const Eigen::VectorXd& draws, double level = 0.95);

}  // namespace spcp

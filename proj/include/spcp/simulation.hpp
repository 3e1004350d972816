#pragma once

#include "spcp/cp_likelihood.hpp"
#include "spcp/model_spec.hpp"
#include "spcp/spatial_graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace spcp {

struct SimSetting {
  int id = 5;  // 1..5; 0 for the fixed-Phi study
  Eigen::VectorXd delta;
  Eigen::MatrixXd Sigma;
  double alpha = 0.10;
  double rho = 0.99;
  std::string description;
  // Factor applied to the correlations to keep Sigma positive definite.
  double correlation_shrink = 1.0;
};

/// Correlation pattern of the full cross-covariance (unit diagonal).
Eigen::MatrixXd reference_correlations();

/// Sigma_kl = s * R_kl * sqrt(v_k v_l) with the largest s in [0, 1] that keeps
/// the smallest eigenvalue >= 1e-6 (s = 1 when already positive definite).
Eigen::MatrixXd covariance_from_correlations(const Eigen::VectorXd& variances,
                                             const Eigen::MatrixXd& R, double* shrink = nullptr);

/// Data-generating settings 1-5:
///  1 progressing, 2 stable, 3 non-spatial CPs, 4 spatial CPs without
///  cross-covariance, 5 full model.
SimSetting sim_setting(int id);

/// Full cross-covariance with delta = (25, -30, 1, 0.5, 0.5).
SimSetting fixed_phi_setting();

/// 21 visits at 0, 0.05, ..., 1.
Eigen::VectorXd sim_times();

struct SimData {
  EffectMatrix truth;
  VFSeries series;
};

/// Draws Phi from the MCAR prior of the setting, then the Tobit series.
SimData generate_setting(const SimSetting& setting, const SpatialGraph& graph, std::uint64_t seed);

/// Tobit series for a fixed Phi (negative draws are recorded as censored zeros).
VFSeries simulate_series(const EffectMatrix& Phi, const std::vector<int>& site_ids,
                         const Eigen::VectorXd& times, Rng& rng, std::string eye_id);

struct StudyConfig {
  std::vector<int> settings = {5};
  std::vector<Variant> models = {Variant::kSpatialCP, Variant::kNonspatialL, Variant::kPLR};
  int n_replicates = 50;
  int fit_visits = 14;
  std::vector<double> horizons = {0.75, 1.0};
  McmcConfig mcmc = McmcConfig::desk_scale();
  std::uint64_t seed = 20190101;
  int threads = 0;  // 0: SPCP_THREADS, else hardware concurrency
};

/// Posterior summaries of one model fitted to one replicate.
struct ReplicateFit {
  int setting = 0;
  int replicate = 0;
  Variant model = Variant::kSpatialCP;
  bool ok = false;
  std::string error;
  double dic = 0.0;
  double p_d = 0.0;
  std::vector<double> mspe;  // one per horizon
  double max_metric = 0.0;
  Eigen::VectorXd theta_mean, theta_lo, theta_hi;
  Eigen::VectorXd eta_mean, eta_lo, eta_hi;
  std::map<std::string, double> acceptance;
  double seconds = 0.0;
};

struct ReplicateTruth {
  int setting = 0;
  int replicate = 0;
  Eigen::VectorXd theta;  // clamped to the fit window
  Eigen::VectorXd eta;
};

/// Averages over (replicate, site) pairs; sd is across those pairs.
struct EstimandSummary {
  double bias = 0.0, mse = 0.0, ec = 0.0;
  double bias_sd = 0.0, mse_sd = 0.0, ec_sd = 0.0;
  long n = 0;
};

struct ModelSummary {
  int setting = 0;
  Variant model = Variant::kSpatialCP;
  int n_ok = 0;
  int n_failed = 0;
  double dic = 0.0;
  double p_d = 0.0;
  std::vector<double> mspe;
  double max_metric = 0.0;
  bool has_theta = false;
  bool has_eta = false;
  EstimandSummary theta;
  EstimandSummary eta;
};

struct SimResult {
  StudyConfig config;
  std::vector<ReplicateTruth> truths;
  std::vector<ReplicateFit> fits;
  std::vector<ModelSummary> summary;
  // Fixed-Phi study only.
  EffectMatrix fixed_phi;
  int fixed_phi_index = 0;  // index of the chosen candidate draw

  const ModelSummary& find(int setting, Variant model) const;
  /// Fits for one (setting, model) in replicate order.
  std::vector<const ReplicateFit*> fits_for(int setting, Variant model) const;
};

bool estimates_theta(Variant v);
bool estimates_eta(Variant v);

/// Per replicate: simulate, fit each model on the first fit_visits visits,
/// predict the held-out horizons and score theta / eta against the truth.
SimResult run_study(const StudyConfig& config, const SpatialGraph& graph);

/// One Phi drawn so its change points span the window (some before, some
/// inside, some after); every replicate re-simulates data from it and fits
/// all visits.
SimResult fixed_phi_study(const StudyConfig& config, const SpatialGraph& graph);

/// Aggregates fits against truths for every (setting, model).
std::vector<ModelSummary> summarize(const StudyConfig& config,
                                    const std::vector<ReplicateTruth>& truths,
                                    const std::vector<ReplicateFit>& fits);

/// SPCP_THREADS if set and positive, else hardware concurrency (at least 1).
int default_thread_count();

}  // namespace spcp

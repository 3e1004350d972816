#pragma once

#include "spcp/cp_likelihood.hpp"
#include "spcp/mcar_prior.hpp"
#include "spcp/model_spec.hpp"
#include "spcp/random.hpp"
#include "spcp/spatial_graph.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace spcp {

// Metropolis-updated columns, in proposal_sds column order.
inline constexpr int kNumMetropolisColumns = 3;
inline constexpr std::array<int, kNumMetropolisColumns> kMetropolisEffects = {kLambda0, kLambda1,
                                                                              kEta};
int metropolis_slot(int effect);

struct AcceptanceCounts {
  Eigen::MatrixXi accepted;  // m x 3
  Eigen::MatrixXi attempted;
  long alpha_accepted = 0;
  long alpha_attempted = 0;

  void reset(int sites);
  double rate(int slot) const;
  double alpha_rate() const;
};

struct ChainState {
  EffectMatrix Phi;
  Eigen::VectorXd delta;
  Eigen::MatrixXd Sigma;
  double alpha = 0.0;
  Eigen::MatrixXd latent;
  Eigen::MatrixXd proposal_sds;  // m x 3, see kMetropolisEffects
  double alpha_proposal_sd = 0.5;
  AcceptanceCounts acceptance;
  long iteration = 0;
};

/// Fills defaulted hyperprior members from the graph and checks the rest.
Hyperpriors resolve_hyperpriors(const ModelSpec& spec, const SpatialGraph& graph);

/// Fixed inputs of one chain plus the cached precision factor for the current
/// alpha. Independent-site variants carry Q = I.
class SamplerContext {
 public:
  SamplerContext(const ModelSpec& spec, const VFSeries& series, const SpatialGraph& graph);

  const VFSeries& series() const { return series_; }
  const SpatialGraph& graph() const { return graph_; }
  const ModelSpec& spec() const { return spec_; }
  const Hyperpriors& hyper() const { return spec_.hyper; }
  Variant variant() const { return spec_.variant; }
  bool spatial() const { return spec_.variant == Variant::kSpatialCP; }
  bool use_likelihood() const { return spec_.use_likelihood; }
  double x1() const { return x1_; }
  double x_nu() const { return x_nu_; }

  const PrecisionFactor& precision() const { return precision_; }
  void set_precision(PrecisionFactor precision) { precision_ = std::move(precision); }
  void refresh_precision(double alpha);

  Rng& rng() { return rng_; }

  // Name of the step in progress, reported when a step fails.
  std::string step;

 private:
  ModelSpec spec_;
  const VFSeries& series_;
  const SpatialGraph& graph_;
  double x1_ = 0.0;
  double x_nu_ = 0.0;
  PrecisionFactor precision_;
  Rng rng_;
};

/// Starting values from per-site moments of the uncensored observations.
ChainState initial_state(SamplerContext& ctx);

/// Site parameters for row i with theta taken through the clamp.
SiteParams site_params(const ChainState& state, const SamplerContext& ctx, int site);

void gibbs_latent(ChainState& state, SamplerContext& ctx);
void gibbs_beta(ChainState& state, SamplerContext& ctx);
void gibbs_delta(ChainState& state, SamplerContext& ctx);
void gibbs_sigma(ChainState& state, SamplerContext& ctx);
bool metropolis_alpha(ChainState& state, SamplerContext& ctx);

/// Conditional prior of one column given the others: x ~ N(mean, var * Q^{-1}).
struct ColumnPrior {
  Eigen::VectorXd mean;
  double var = 1.0;
};
ColumnPrior column_prior(const ChainState& state, const SamplerContext& ctx, int effect);

/// Random-walk update of Phi(site, effect) for effect in {lambda0, lambda1, eta}.
/// `prior` must be the current column_prior for that effect.
bool metropolis_site_update(ChainState& state, SamplerContext& ctx, const ColumnPrior& prior,
                            int effect, int site);
/// Change in conditional log-prior when Phi(site, effect) moves by `step`.
double column_prior_log_ratio(const ChainState& state, const SamplerContext& ctx,
                              const ColumnPrior& prior, int effect, int site, double step);

/// alpha <-> Delta = log((alpha - a) / (b - alpha)).
double alpha_to_delta(double alpha, double a, double b);
double delta_to_alpha(double delta, double a, double b);
/// Log target for alpha on the Delta scale, Jacobian included.
double alpha_log_target(const ChainState& state, const SamplerContext& ctx,
                        const PrecisionFactor& precision, double delta);

/// One full iteration of the variant's scan.
void sweep(ChainState& state, SamplerContext& ctx);

/// Tunes proposal_sds in blocks; returns the number of blocks run.
int pilot_adapt(ChainState& state, SamplerContext& ctx, const PilotConfig& pilot);

struct PosteriorSamples {
  Variant variant = Variant::kSpatialCP;
  std::string eye_id;
  std::vector<int> site_ids;
  Eigen::VectorXd times;
  double sens_scale = 1.0;
  double days_per_year = 365.25;
  double time_offset_days = 0.0;
  McmcConfig config;
  Hyperpriors hyper;
  int pilot_blocks = 0;
  std::map<std::string, double> acceptance;

  std::vector<EffectMatrix> Phi;
  std::vector<Eigen::VectorXd> delta;
  std::vector<Eigen::MatrixXd> Sigma;
  std::vector<double> alpha;

  int draws() const { return static_cast<int>(Phi.size()); }
  int sites() const { return static_cast<int>(site_ids.size()); }
  double x1() const { return times[0]; }
  double x_nu() const { return times[times.size() - 1]; }
  double theta(int draw, int site) const;
  /// Draws of Phi(site, effect).
  Eigen::VectorXd trace(int site, int effect) const;
  Eigen::VectorXd theta_trace(int site) const;
  EffectMatrix posterior_mean_phi() const;
};

PosteriorSamples run_chain(const ModelSpec& spec, const VFSeries& series,
                           const SpatialGraph& graph);

}  // namespace spcp

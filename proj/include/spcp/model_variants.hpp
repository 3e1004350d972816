#pragma once

#include "spcp/model_spec.hpp"
#include "spcp/sampler.hpp"

#include <vector>

namespace spcp {

/// Fits any variant. Every variant returns the same five-column schema:
///  - ns-cont / ns-disc store theta itself in the eta column,
///  - plr stores log sigma in lambda0, zeros in lambda1 and x1 in eta.
PosteriorSamples fit(const ModelSpec& spec, const VFSeries& series, const SpatialGraph& graph);

/// Columns whose population mean / variance are sampled for this variant.
std::vector<int> hierarchical_columns(Variant v);

/// Puts a freshly initialized state into the variant's parameter space.
void constrain_initial_state(ChainState& state, const SamplerContext& ctx);

/// Candidate change points for the discrete model: x_1, ..., x_{nu-1}.
Eigen::VectorXd discrete_cp_grid(const Eigen::VectorXd& times);

/// Categorical full conditional over the grid (uniform prior). Returns the
/// chosen grid index.
int gibbs_discrete_cp(ChainState& state, SamplerContext& ctx, int site);

/// Random walk on theta with a Uniform(x1, x_nu) prior.
bool metropolis_uniform_cp(ChainState& state, SamplerContext& ctx, int site);

/// eta update with the independent N(delta_eta, Sigma_eta) prior.
bool nonspatial_latent_cp_update(ChainState& state, SamplerContext& ctx, int site);

/// Independent inverse-gamma draws for the diagonal of Sigma over `columns`.
void gibbs_sigma_diagonal(ChainState& state, SamplerContext& ctx, const std::vector<int>& columns);

/// plr: conjugate inverse-gamma draw of each site's constant variance.
void gibbs_plr_variance(ChainState& state, SamplerContext& ctx);

}  // namespace spcp

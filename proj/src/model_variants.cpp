#include "spcp/model_variants.hpp"

#include "spcp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spcp {

namespace {

double site_log_lik_or_reject(const ChainState& state, const SamplerContext& ctx, int site,
                              const SiteParams& p) {
  const double span = std::max(0.0, ctx.x_nu() - p.theta);
  if (std::abs(p.lambda0) > kMaxLogSigma || std::abs(p.lambda0 + p.lambda1 * span) > kMaxLogSigma)
    return -std::numeric_limits<double>::infinity();
  return site_latent_log_lik(state.latent, ctx.series().times, site, p);
}

}  // namespace

PosteriorSamples fit(const ModelSpec& spec, const VFSeries& series, const SpatialGraph& graph) {
  return run_chain(spec, series, graph);
}

std::vector<int> hierarchical_columns(Variant v) {
  switch (v) {
    case Variant::kSpatialCP:
    case Variant::kNonspatialL:
      return {kBeta0, kBeta1, kLambda0, kLambda1, kEta};
    case Variant::kNonspatialC:
    case Variant::kNonspatialD:
      return {kBeta0, kBeta1, kLambda0, kLambda1};
    case Variant::kPLR:
      return {};
  }
  return {};
}

Eigen::VectorXd discrete_cp_grid(const Eigen::VectorXd& times) {
  if (times.size() < 2) throw ValidationError("the discrete change point needs at least two visits");
  return times.head(times.size() - 1);
}

void constrain_initial_state(ChainState& state, const SamplerContext& ctx) {
  const double x1 = ctx.x1();
  const double x_nu = ctx.x_nu();
  const double mid = 0.5 * (x1 + x_nu);
  // theta is not hierarchical in ns-cont / ns-disc; its delta and Sigma
  // entries hold the moments of the uniform prior and are never updated.
  const double uniform_var = (x_nu - x1) * (x_nu - x1) / 12.0;
  switch (ctx.variant()) {
    case Variant::kSpatialCP:
    case Variant::kNonspatialL:
      break;
    case Variant::kNonspatialD: {
      const Eigen::VectorXd grid = discrete_cp_grid(ctx.series().times);
      Eigen::Index best = 0;
      (grid.array() - mid).abs().minCoeff(&best);
      state.Phi.col(kEta).setConstant(grid[best]);
      state.delta[kEta] = mid;
      state.Sigma(kEta, kEta) = uniform_var > 0 ? uniform_var : 1.0;
      break;
    }
    case Variant::kNonspatialC:
      state.Phi.col(kEta).setConstant(mid);
      state.delta[kEta] = mid;
      state.Sigma(kEta, kEta) = uniform_var > 0 ? uniform_var : 1.0;
      break;
    case Variant::kPLR:
      state.Phi.col(kLambda1).setZero();
      state.Phi.col(kEta).setConstant(x1);
      state.delta.setZero();
      state.Sigma = ctx.hyper().mean_prior_var *
                    Eigen::MatrixXd::Identity(kNumEffects, kNumEffects);
      break;
  }
}

int gibbs_discrete_cp(ChainState& state, SamplerContext& ctx, int site) {
  const Eigen::VectorXd grid = discrete_cp_grid(ctx.series().times);
  const auto n = grid.size();
  Eigen::VectorXd logp = Eigen::VectorXd::Zero(n);
  if (ctx.use_likelihood()) {
    SiteParams p = site_params(state, ctx, site);
    for (Eigen::Index c = 0; c < n; ++c) {
      p.eta = grid[c];
      p.theta = grid[c];
      logp[c] = site_log_lik_or_reject(state, ctx, site, p);
    }
  }
  const double top = logp.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("no admissible discrete change point");
  const Eigen::VectorXd w = (logp.array() - top).exp().matrix();
  double u = ctx.rng().uniform() * w.sum();
  Eigen::Index chosen = n - 1;
  for (Eigen::Index c = 0; c < n; ++c) {
    u -= w[c];
    if (u < 0) {
      chosen = c;
      break;
    }
  }
  state.Phi(site, kEta) = grid[chosen];
  return static_cast<int>(chosen);
}

bool metropolis_uniform_cp(ChainState& state, SamplerContext& ctx, int site) {
  const int slot = metropolis_slot(kEta);
  const double current = state.Phi(site, kEta);
  const double proposed = current + state.proposal_sds(site, slot) * ctx.rng().normal();
  const double u = ctx.rng().uniform();
  ++state.acceptance.attempted(site, slot);
  if (!(proposed > ctx.x1() && proposed < ctx.x_nu())) return false;
  double log_r = 0.0;
  if (ctx.use_likelihood()) {
    SiteParams p = site_params(state, ctx, site);
    const double ll0 = site_log_lik_or_reject(state, ctx, site, p);
    p.eta = proposed;
    p.theta = proposed;
    log_r = site_log_lik_or_reject(state, ctx, site, p) - ll0;
  }
  if (!std::isfinite(log_r) || std::log(u) >= log_r) return false;
  state.Phi(site, kEta) = proposed;
  ++state.acceptance.accepted(site, slot);
  return true;
}

bool nonspatial_latent_cp_update(ChainState& state, SamplerContext& ctx, int site) {
  const ColumnPrior prior{
      Eigen::VectorXd::Constant(ctx.series().sites(), state.delta[kEta]),
      state.Sigma(kEta, kEta)};
  return metropolis_site_update(state, ctx, prior, kEta, site);
}

void gibbs_sigma_diagonal(ChainState& state, SamplerContext& ctx, const std::vector<int>& columns) {
  const int m = ctx.series().sites();
  const Eigen::MatrixXd S = mcar_scatter(state.Phi, state.delta, ctx.precision().Q());
  const double shape = ctx.hyper().ig_shape + 0.5 * m;
  for (int k : columns) {
    const double rate = ctx.hyper().ig_scale + 0.5 * S(k, k);
    const double g = ctx.rng().gamma(shape, 1.0 / rate);
    if (!(g > 0)) throw NumericalError("variance draw underflowed");
    state.Sigma(k, k) = 1.0 / g;
  }
}

void gibbs_plr_variance(ChainState& state, SamplerContext& ctx) {
  const auto& s = ctx.series();
  const double shape = ctx.hyper().ig_shape + (ctx.use_likelihood() ? 0.5 * s.visits() : 0.0);
  for (int i = 0; i < s.sites(); ++i) {
    double ssr = 0.0;
    if (ctx.use_likelihood()) {
      for (int t = 0; t < s.visits(); ++t) {
        const double r = state.latent(i, t) - state.Phi(i, kBeta0) -
                         state.Phi(i, kBeta1) * (s.times[t] - ctx.x1());
        ssr += r * r;
      }
    }
    const double g = ctx.rng().gamma(shape, 1.0 / (ctx.hyper().ig_scale + 0.5 * ssr));
    const double log_sigma = g > 0 ? -0.5 * std::log(g) : kMaxLogSigma;
    state.Phi(i, kLambda0) = std::clamp(log_sigma, -kMaxLogSigma, kMaxLogSigma);
  }
}

}  // namespace spcp

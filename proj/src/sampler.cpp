#include "spcp/sampler.hpp"

#include "spcp/error.hpp"
#include "spcp/model_variants.hpp"

#include <cmath>
#include <string>

namespace spcp {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

// log sigma_t over the window is linear in the offset, so its extremes sit at
// the change point and at the last visit.
bool log_sigma_in_range(const SiteParams& p, double x_nu) {
  const double span = std::max(0.0, x_nu - p.theta);
  return std::abs(p.lambda0) <= kMaxLogSigma &&
         std::abs(p.lambda0 + p.lambda1 * span) <= kMaxLogSigma;
}

bool has_metropolis(Variant v, int effect) {
  switch (v) {
    case Variant::kSpatialCP:
    case Variant::kNonspatialL:
    case Variant::kNonspatialC:
      return true;
    case Variant::kNonspatialD:
      return effect != kEta;
    case Variant::kPLR:
      return false;
  }
  return false;
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSpatialCP: return "spatial-cp";
    case Variant::kNonspatialL: return "ns-latent";
    case Variant::kNonspatialC: return "ns-cont";
    case Variant::kNonspatialD: return "ns-disc";
    case Variant::kPLR: return "plr";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kSpatialCP, Variant::kNonspatialL, Variant::kNonspatialC,
                    Variant::kNonspatialD, Variant::kPLR})
    if (variant_name(v) == name) return v;
  throw ValidationError("unknown model '" + std::string(name) +
                        "' (expected spatial-cp, ns-latent, ns-cont, ns-disc or plr)");
}

McmcConfig McmcConfig::paper_scale() { return McmcConfig{}; }

McmcConfig McmcConfig::desk_scale() {
  McmcConfig c;
  c.n_iter = 20000;
  c.n_burn = 2000;
  c.n_thin = 10;
  return c;
}

long McmcConfig::stored_draws() const { return (n_iter - n_burn) / n_thin; }

void McmcConfig::validate() const {
  if (n_iter <= 0) throw ValidationError("n_iter must be positive");
  if (n_burn < 0 || n_burn >= n_iter) throw ValidationError("n_burn must lie in [0, n_iter)");
  if (n_thin < 1) throw ValidationError("n_thin must be at least 1");
  if ((n_iter - n_burn) % n_thin != 0)
    throw ValidationError("n_iter - n_burn must be a multiple of n_thin");
  if (pilot.block_size < 1) throw ValidationError("pilot block size must be at least 1");
  if (pilot.max_pilot_blocks < 0) throw ValidationError("pilot block count must be >= 0");
  if (!(pilot.target_rate_low >= 0 && pilot.target_rate_low < pilot.target_rate_high &&
        pilot.target_rate_high <= 1))
    throw ValidationError("pilot target rates must satisfy 0 <= low < high <= 1");
  if (!(initial_site_sd > 0) || !(initial_alpha_sd > 0))
    throw ValidationError("initial proposal sds must be positive");
}

int metropolis_slot(int effect) {
  for (int s = 0; s < kNumMetropolisColumns; ++s)
    if (kMetropolisEffects[s] == effect) return s;
  throw ValidationError("effect is not Metropolis-updated");
}

void AcceptanceCounts::reset(int sites) {
  accepted = Eigen::MatrixXi::Zero(sites, kNumMetropolisColumns);
  attempted = Eigen::MatrixXi::Zero(sites, kNumMetropolisColumns);
  alpha_accepted = 0;
  alpha_attempted = 0;
}

double AcceptanceCounts::rate(int slot) const {
  const double n = attempted.col(slot).sum();
  return n > 0 ? accepted.col(slot).sum() / n : std::nan("");
}

double AcceptanceCounts::alpha_rate() const {
  return alpha_attempted > 0 ? static_cast<double>(alpha_accepted) / alpha_attempted
                             : std::nan("");
}

Hyperpriors resolve_hyperpriors(const ModelSpec& spec, const SpatialGraph& graph) {
  Hyperpriors h = spec.hyper;
  const int p = kNumEffects;
  if (h.xi <= 0) h.xi = p + 1;
  if (h.xi <= p - 1) throw ValidationError("xi must exceed p - 1");
  if (h.Psi.size() == 0) h.Psi = Eigen::MatrixXd::Identity(p, p);
  if (h.Psi.rows() != p || h.Psi.cols() != p) throw ValidationError("Psi must be 5 x 5");
  if (Eigen::LLT<Eigen::MatrixXd>(h.Psi).info() != Eigen::Success)
    throw ValidationError("Psi must be symmetric positive definite");
  if (!(h.kappa2 > 0)) throw ValidationError("kappa2 must be positive");
  if (!(h.rho > 0 && h.rho < 1)) throw ValidationError("rho must lie in (0, 1)");
  if (!(h.mean_prior_var > 0) || !(h.ig_shape > 0) || !(h.ig_scale > 0))
    throw ValidationError("independent-site prior parameters must be positive");
  if (spec.variant == Variant::kSpatialCP) {
    if (h.a_alpha < 0) throw ValidationError("a_alpha must be >= 0");
    if (h.b_alpha <= 0) h.b_alpha = alpha_upper_bound(graph);
    if (!(h.b_alpha > h.a_alpha)) throw ValidationError("b_alpha must exceed a_alpha");
  }
  return h;
}

SamplerContext::SamplerContext(const ModelSpec& spec, const VFSeries& series,
                               const SpatialGraph& graph)
    : spec_(spec), series_(series), graph_(graph), rng_(spec.mcmc.seed) {
  x1_ = series.first_time();
  x_nu_ = series.last_time();
  if (!spatial()) {
    const auto m = series.sites();
    set_precision(PrecisionFactor(PrecisionMatrix{Eigen::MatrixXd::Identity(m, m), 0.0, 0.0}));
  }
}

void SamplerContext::refresh_precision(double alpha) {
  precision_ = PrecisionFactor(precision_matrix(graph_, alpha, spec_.hyper.rho));
}

ChainState initial_state(SamplerContext& ctx) {
  const auto& s = ctx.series();
  const int m = s.sites();
  const int nu = s.visits();
  ChainState st;
  st.Phi = EffectMatrix::Zero(m, kNumEffects);
  for (int i = 0; i < m; ++i) {
    double sum = 0, sum2 = 0;
    int n = 0;
    for (int t = 0; t < nu; ++t) {
      if (s.censored(i, t)) continue;
      sum += s.obs(i, t);
      sum2 += s.obs(i, t) * s.obs(i, t);
      ++n;
    }
    const double mean = n > 0 ? sum / n : 0.0;
    double sd = 0.0;
    if (n >= 2) sd = std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1)));
    st.Phi(i, kBeta0) = mean;
    st.Phi(i, kLambda0) = sd > 0 ? std::log(sd) : 0.0;
    st.Phi(i, kEta) = 0.5 * (ctx.x1() + ctx.x_nu());
  }
  st.delta = st.Phi.colwise().mean().transpose();
  st.Sigma = Eigen::MatrixXd::Identity(kNumEffects, kNumEffects);
  st.latent = s.obs;
  for (int i = 0; i < m; ++i)
    for (int t = 0; t < nu; ++t)
      if (s.censored(i, t)) st.latent(i, t) = -0.1;
  st.proposal_sds = Eigen::MatrixXd::Constant(m, kNumMetropolisColumns, ctx.spec().mcmc.initial_site_sd);
  st.alpha_proposal_sd = ctx.spec().mcmc.initial_alpha_sd;
  st.acceptance.reset(m);
  if (ctx.spatial()) {
    st.alpha = 0.5 * (ctx.hyper().a_alpha + ctx.hyper().b_alpha);
    ctx.refresh_precision(st.alpha);
  }
  constrain_initial_state(st, ctx);
  return st;
}

SiteParams site_params(const ChainState& state, const SamplerContext& ctx, int site) {
  return SiteParams::from_row(state.Phi.row(site), ctx.x1(), ctx.x_nu());
}

void gibbs_latent(ChainState& state, SamplerContext& ctx) {
  if (!ctx.use_likelihood()) return;
  const auto& s = ctx.series();
  for (int i = 0; i < s.sites(); ++i) {
    const SiteParams p = site_params(state, ctx, i);
    for (int t = 0; t < s.visits(); ++t) {
      if (!s.censored(i, t)) {
        state.latent(i, t) = s.obs(i, t);
        continue;
      }
      const SiteMoments mom = site_moments(p, s.times[t]);
      state.latent(i, t) = truncated_normal(mom.mu, mom.sigma, 0.0, ctx.rng());
    }
  }
}

void gibbs_beta(ChainState& state, SamplerContext& ctx) {
  const auto& s = ctx.series();
  const int m = s.sites();
  const std::vector<int> k = {kBeta0, kBeta1};
  const std::vector<int> j = {kLambda0, kLambda1, kEta};
  const ConditionalMoments cm =
      conditional_moments(state.Phi, state.delta, state.Sigma, ctx.precision().Q(), k, j);
  const Eigen::Matrix2d S_inv = spd_inverse(cm.sigma_cond, "conditional beta covariance");

  // Per-site data precision H_i and score g_i of the two-segment regression.
  std::vector<Eigen::Matrix2d> H(m, Eigen::Matrix2d::Zero());
  std::vector<Eigen::Vector2d> g(m, Eigen::Vector2d::Zero());
  if (ctx.use_likelihood()) {
    for (int i = 0; i < m; ++i) {
      const SiteParams p = site_params(state, ctx, i);
      for (int t = 0; t < s.visits(); ++t) {
        const double x = s.times[t];
        const SiteMoments mom = site_moments(p, x);
        const double w = 1.0 / (mom.sigma * mom.sigma);
        const auto d = design_row(x, p.theta);
        const Eigen::Vector2d dv(d[0], d[1]);
        H[i] += w * dv * dv.transpose();
        g[i] += w * state.latent(i, t) * dv;
      }
    }
  }

  if (!ctx.spatial()) {
    for (int i = 0; i < m; ++i) {
      const Eigen::Matrix2d P = S_inv + H[i];
      const Eigen::Vector2d b = S_inv * cm.mean.row(i).transpose() + g[i];
      Eigen::LLT<Eigen::Matrix2d> llt(P);
      if (llt.info() != Eigen::Success) throw NumericalError("singular beta posterior precision");
      const Eigen::Vector2d mean = llt.solve(b);
      Eigen::Vector2d z(ctx.rng().normal(), ctx.rng().normal());
      const Eigen::Vector2d draw = mean + llt.matrixU().solve(z);
      state.Phi(i, kBeta0) = draw[0];
      state.Phi(i, kBeta1) = draw[1];
    }
    return;
  }

  const Eigen::MatrixXd& Q = ctx.precision().Q();
  Eigen::MatrixXd P(2 * m, 2 * m);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) P.block<2, 2>(2 * a, 2 * c) = Q(a, c) * S_inv;
  const Eigen::MatrixXd prior_rhs = Q * cm.mean * S_inv;  // m x 2
  Eigen::VectorXd b(2 * m);
  for (int i = 0; i < m; ++i) {
    P.block<2, 2>(2 * i, 2 * i) += H[i];
    b.segment<2>(2 * i) = prior_rhs.row(i).transpose() + g[i];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw NumericalError("singular beta posterior precision");
  Eigen::VectorXd draw = llt.solve(b);
  draw += llt.matrixU().solve(standard_normal_vector(2 * m, ctx.rng()));
  for (int i = 0; i < m; ++i) {
    state.Phi(i, kBeta0) = draw[2 * i];
    state.Phi(i, kBeta1) = draw[2 * i + 1];
  }
}

void gibbs_delta(ChainState& state, SamplerContext& ctx) {
  const std::vector<int> cols = hierarchical_columns(ctx.variant());
  if (cols.empty()) return;
  const double kappa2 = ctx.spatial() ? ctx.hyper().kappa2 : ctx.hyper().mean_prior_var;
  const double total = ctx.precision().total();
  const Eigen::VectorXd q1 = ctx.precision().Q().rowwise().sum();
  const Eigen::VectorXd phi_q1 = state.Phi.transpose() * q1;  // Phi^T Q 1

  if (static_cast<int>(cols.size()) == kNumEffects) {
    const Eigen::MatrixXd S_inv = spd_inverse(state.Sigma, "Sigma");
    const Eigen::MatrixXd prec =
        total * S_inv + Eigen::MatrixXd::Identity(kNumEffects, kNumEffects) / kappa2;
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success) throw NumericalError("delta posterior precision factorization failed");
    state.delta = llt.solve(S_inv * phi_q1);
    state.delta += llt.matrixU().solve(standard_normal_vector(kNumEffects, ctx.rng()));
    return;
  }
  // Partial updates only occur with a diagonal Sigma, where columns decouple.
  for (int k : cols) {
    const double prec = total / state.Sigma(k, k) + 1.0 / kappa2;
    const double mean = (phi_q1[k] / state.Sigma(k, k)) / prec;
    state.delta[k] = mean + ctx.rng().normal() / std::sqrt(prec);
  }
}

void gibbs_sigma(ChainState& state, SamplerContext& ctx) {
  const int m = ctx.series().sites();
  Eigen::MatrixXd scale = mcar_scatter(state.Phi, state.delta, ctx.precision().Q()) + ctx.hyper().Psi;
  scale = 0.5 * (scale + scale.transpose());
  if (Eigen::LLT<Eigen::MatrixXd>(scale).info() != Eigen::Success)
    throw NumericalError("Sigma scale matrix is not positive definite");
  state.Sigma = inverse_wishart(m + ctx.hyper().xi, scale, ctx.rng());
}

double alpha_to_delta(double alpha, double a, double b) { return std::log((alpha - a) / (b - alpha)); }

double delta_to_alpha(double delta, double a, double b) {
  // (b e^D + a) / (1 + e^D), written to stay finite for large |D|.
  if (delta > 0) {
    const double e = std::exp(-delta);
    return (b + a * e) / (1.0 + e);
  }
  const double e = std::exp(delta);
  return (b * e + a) / (1.0 + e);
}

double alpha_log_target(const ChainState& state, const SamplerContext& ctx,
                        const PrecisionFactor& precision, double delta) {
  const Eigen::MatrixXd scatter = mcar_scatter(state.Phi, state.delta, precision.Q());
  Eigen::LLT<Eigen::MatrixXd> sigma_llt(state.Sigma);
  const double quad = sigma_llt.solve(scatter).trace();
  (void)ctx;
  return 0.5 * kNumEffects * precision.log_det() - 0.5 * quad + delta - 2.0 * softplus(delta);
}

bool metropolis_alpha(ChainState& state, SamplerContext& ctx) {
  const double a = ctx.hyper().a_alpha;
  const double b = ctx.hyper().b_alpha;
  const double d0 = alpha_to_delta(state.alpha, a, b);
  const double d1 = d0 + state.alpha_proposal_sd * ctx.rng().normal();
  const double alpha1 = delta_to_alpha(d1, a, b);
  ++state.acceptance.alpha_attempted;
  const double u = ctx.rng().uniform();
  if (!(alpha1 > a && alpha1 < b)) return false;
  PrecisionFactor proposal(precision_matrix(ctx.graph(), alpha1, ctx.hyper().rho));
  const double log_r = alpha_log_target(state, ctx, proposal, d1) -
                       alpha_log_target(state, ctx, ctx.precision(), d0);
  if (!std::isfinite(log_r) || std::log(u) >= log_r) return false;
  state.alpha = alpha1;
  ctx.set_precision(std::move(proposal));
  ++state.acceptance.alpha_accepted;
  return true;
}

ColumnPrior column_prior(const ChainState& state, const SamplerContext& ctx, int effect) {
  const std::vector<int> k = {effect};
  const ConditionalMoments cm = conditional_moments(state.Phi, state.delta, state.Sigma,
                                                    ctx.precision().Q(), k,
                                                    complement_columns(k, kNumEffects));
  return ColumnPrior{cm.mean.col(0), cm.sigma_cond(0, 0)};
}

double column_prior_log_ratio(const ChainState& state, const SamplerContext& ctx,
                              const ColumnPrior& prior, int effect, int site, double step) {
  const Eigen::MatrixXd& Q = ctx.precision().Q();
  const Eigen::VectorXd dev = state.Phi.col(effect) - prior.mean;
  const double q_dev = Q.row(site).dot(dev);
  return -(2.0 * step * q_dev + Q(site, site) * step * step) / (2.0 * prior.var);
}

bool metropolis_site_update(ChainState& state, SamplerContext& ctx, const ColumnPrior& prior,
                            int effect, int site) {
  const int slot = metropolis_slot(effect);
  const double sd = state.proposal_sds(site, slot);
  if (!(sd > 0)) throw ValidationError("proposal sd must be positive");
  const double current = state.Phi(site, effect);
  const double proposed = current + sd * ctx.rng().normal();
  const double u = ctx.rng().uniform();
  ++state.acceptance.attempted(site, slot);

  double log_r = column_prior_log_ratio(state, ctx, prior, effect, site, proposed - current);
  if (ctx.use_likelihood()) {
    const SiteParams p0 = site_params(state, ctx, site);
    state.Phi(site, effect) = proposed;
    const SiteParams p1 = site_params(state, ctx, site);
    state.Phi(site, effect) = current;
    if (!log_sigma_in_range(p1, ctx.x_nu())) return false;
    const auto& s = ctx.series();
    log_r += site_latent_log_lik(state.latent, s.times, site, p1) -
             site_latent_log_lik(state.latent, s.times, site, p0);
  }
  if (!std::isfinite(log_r) || std::log(u) >= log_r) return false;
  state.Phi(site, effect) = proposed;
  ++state.acceptance.accepted(site, slot);
  return true;
}

void sweep(ChainState& state, SamplerContext& ctx) {
  const int m = ctx.series().sites();
  const Variant v = ctx.variant();
  ctx.step = "latent";
  gibbs_latent(state, ctx);
  ctx.step = "beta";
  gibbs_beta(state, ctx);

  if (v == Variant::kPLR) {
    ctx.step = "lambda0";
    gibbs_plr_variance(state, ctx);
  } else {
    for (int effect : {kLambda0, kLambda1}) {
      ctx.step = std::string(kEffectNames[effect]);
      const ColumnPrior prior = column_prior(state, ctx, effect);
      for (int i = 0; i < m; ++i) metropolis_site_update(state, ctx, prior, effect, i);
    }
    ctx.step = "eta";
    switch (v) {
      case Variant::kSpatialCP: {
        const ColumnPrior prior = column_prior(state, ctx, kEta);
        for (int i = 0; i < m; ++i) metropolis_site_update(state, ctx, prior, kEta, i);
        break;
      }
      case Variant::kNonspatialL:
        for (int i = 0; i < m; ++i) nonspatial_latent_cp_update(state, ctx, i);
        break;
      case Variant::kNonspatialC:
        for (int i = 0; i < m; ++i) metropolis_uniform_cp(state, ctx, i);
        break;
      case Variant::kNonspatialD:
        for (int i = 0; i < m; ++i) gibbs_discrete_cp(state, ctx, i);
        break;
      case Variant::kPLR:
        break;
    }
    ctx.step = "delta";
    gibbs_delta(state, ctx);
    ctx.step = "Sigma";
    if (v == Variant::kSpatialCP)
      gibbs_sigma(state, ctx);
    else
      gibbs_sigma_diagonal(state, ctx, hierarchical_columns(v));
  }
  if (v == Variant::kSpatialCP) {
    ctx.step = "alpha";
    metropolis_alpha(state, ctx);
  }
  ++state.iteration;
}

int pilot_adapt(ChainState& state, SamplerContext& ctx, const PilotConfig& pilot) {
  const int m = ctx.series().sites();
  const Variant v = ctx.variant();
  bool any = false;
  for (int e : kMetropolisEffects) any = any || has_metropolis(v, e);
  if (!any || pilot.max_pilot_blocks == 0) return 0;

  auto adjust = [&](double rate, double& sd) {
    if (rate > pilot.target_rate_high) {
      sd *= 2.0;
      return false;
    }
    if (rate < pilot.target_rate_low) {
      sd *= 0.5;
      return false;
    }
    return true;
  };

  int blocks = 0;
  while (blocks < pilot.max_pilot_blocks) {
    state.acceptance.reset(m);
    for (int it = 0; it < pilot.block_size; ++it) sweep(state, ctx);
    ++blocks;
    bool all_in_range = true;
    for (int slot = 0; slot < kNumMetropolisColumns; ++slot) {
      if (!has_metropolis(v, kMetropolisEffects[slot])) continue;
      for (int i = 0; i < m; ++i) {
        const int n = state.acceptance.attempted(i, slot);
        if (n == 0) continue;
        const double rate = static_cast<double>(state.acceptance.accepted(i, slot)) / n;
        all_in_range = adjust(rate, state.proposal_sds(i, slot)) && all_in_range;
      }
    }
    if (ctx.spatial() && state.acceptance.alpha_attempted > 0)
      all_in_range = adjust(state.acceptance.alpha_rate(), state.alpha_proposal_sd) && all_in_range;
    if (all_in_range) break;
  }
  state.acceptance.reset(m);
  return blocks;
}

double PosteriorSamples::theta(int draw, int site) const {
  return observed_cp(Phi[draw](site, kEta), x1(), x_nu());
}

Eigen::VectorXd PosteriorSamples::trace(int site, int effect) const {
  Eigen::VectorXd out(draws());
  for (int d = 0; d < draws(); ++d) out[d] = Phi[d](site, effect);
  return out;
}

Eigen::VectorXd PosteriorSamples::theta_trace(int site) const {
  Eigen::VectorXd out(draws());
  for (int d = 0; d < draws(); ++d) out[d] = theta(d, site);
  return out;
}

EffectMatrix PosteriorSamples::posterior_mean_phi() const {
  if (Phi.empty()) throw ValidationError("no posterior draws");
  EffectMatrix sum = EffectMatrix::Zero(Phi[0].rows(), Phi[0].cols());
  for (const auto& p : Phi) sum += p;
  return sum / static_cast<double>(Phi.size());
}

PosteriorSamples run_chain(const ModelSpec& spec, const VFSeries& series,
                           const SpatialGraph& graph) {
  spec.mcmc.validate();
  series.validate();
  if (graph.size() != series.sites())
    throw ValidationError("graph has " + std::to_string(graph.size()) + " sites but the series has " +
                          std::to_string(series.sites()));
  if (graph.site_ids() != series.site_ids)
    throw ValidationError("graph and series site ids differ");

  ModelSpec resolved = spec;
  resolved.hyper = resolve_hyperpriors(spec, graph);
  SamplerContext ctx(resolved, series, graph);
  ChainState state = initial_state(ctx);

  PosteriorSamples out;
  out.variant = spec.variant;
  out.eye_id = series.eye_id;
  out.site_ids = series.site_ids;
  out.times = series.times;
  out.sens_scale = series.sens_scale;
  out.days_per_year = series.days_per_year;
  out.time_offset_days = series.time_offset_days;
  out.config = spec.mcmc;
  out.hyper = resolved.hyper;
  const long n_draws = spec.mcmc.stored_draws();
  out.Phi.reserve(n_draws);
  out.delta.reserve(n_draws);
  out.Sigma.reserve(n_draws);
  out.alpha.reserve(n_draws);

  try {
    out.pilot_blocks = pilot_adapt(state, ctx, spec.mcmc.pilot);
    state.iteration = 0;
    for (long it = 1; it <= spec.mcmc.n_iter; ++it) {
      sweep(state, ctx);
      if (it > spec.mcmc.n_burn && (it - spec.mcmc.n_burn) % spec.mcmc.n_thin == 0) {
        out.Phi.push_back(state.Phi);
        out.delta.push_back(state.delta);
        out.Sigma.push_back(state.Sigma);
        out.alpha.push_back(state.alpha);
      }
    }
  } catch (const std::exception& e) {
    throw NumericalError("iteration " + std::to_string(state.iteration + 1) + ", parameter " +
                         ctx.step + ": " + e.what());
  }

  for (int slot = 0; slot < kNumMetropolisColumns; ++slot) {
    const int effect = kMetropolisEffects[slot];
    if (!has_metropolis(spec.variant, effect)) continue;
    const std::string name = (effect == kEta && spec.variant == Variant::kNonspatialC)
                                 ? "theta"
                                 : std::string(kEffectNames[effect]);
    out.acceptance[name] = state.acceptance.rate(slot);
  }
  if (spec.variant == Variant::kSpatialCP) out.acceptance["alpha"] = state.acceptance.alpha_rate();
  return out;
}

}  // namespace spcp

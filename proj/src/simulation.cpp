#include "spcp/simulation.hpp"

#include "parallel.hpp"

#include "spcp/diagnostics.hpp"
#include "spcp/error.hpp"
#include "spcp/mcar_prior.hpp"
#include "spcp/model_variants.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace spcp {

namespace {

constexpr double kBaseVariance = 0.025;
constexpr double kNoSpatialAlpha = 1000.0;

Eigen::VectorXd reference_delta() {
  Eigen::VectorXd d(5);
  d << 25, -15, -0.5, 0.1, 0.5;
  return d;
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

int visit_index(const Eigen::VectorXd& times, double x) {
  for (Eigen::Index t = 0; t < times.size(); ++t)
    if (std::abs(times[t] - x) < 1e-9) return static_cast<int>(t);
  throw ValidationError("horizon " + std::to_string(x) + " is not a simulated visit time");
}

ReplicateFit fit_replicate(int setting, int replicate, Variant model, const VFSeries& fit_series,
                           const VFSeries& full, const SpatialGraph& graph,
                           const StudyConfig& config, std::uint64_t seed) {
  ReplicateFit out;
  out.setting = setting;
  out.replicate = replicate;
  out.model = model;
  const auto start = std::chrono::steady_clock::now();
  try {
    ModelSpec spec;
    spec.variant = model;
    spec.mcmc = config.mcmc;
    spec.mcmc.seed = seed;
    const PosteriorSamples samples = fit(spec, fit_series, graph);
    const FitDiagnostics d = dic(samples, fit_series);
    out.dic = d.dic;
    out.p_d = d.p_d;
    for (double h : config.horizons) {
      const int idx = visit_index(full.times, h);
      out.mspe.push_back(mspe(samples, h, full.obs.col(idx)));
    }
    out.max_metric = progression_metric(samples).max_metric;
    const int m = samples.sites();
    out.theta_mean.resize(m);
    out.theta_lo.resize(m);
    out.theta_hi.resize(m);
    out.eta_mean.resize(m);
    out.eta_lo.resize(m);
    out.eta_hi.resize(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd th = samples.theta_trace(i);
      const auto ci = credible_interval(th);
      out.theta_mean[i] = th.mean();
      out.theta_lo[i] = ci.first;
      out.theta_hi[i] = ci.second;
      const Eigen::VectorXd eta = samples.trace(i, kEta);
      const auto ce = credible_interval(eta);
      out.eta_mean[i] = eta.mean();
      out.eta_lo[i] = ce.first;
      out.eta_hi[i] = ce.second;
    }
    out.acceptance = samples.acceptance;
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void accumulate(EstimandSummary& s, const Eigen::VectorXd& truth, const Eigen::VectorXd& mean,
                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                std::vector<double>& err, std::vector<double>& sq, std::vector<double>& hit) {
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double e = mean[i] - truth[i];
    err.push_back(e);
    sq.push_back(e * e);
    hit.push_back(truth[i] >= lo[i] && truth[i] <= hi[i] ? 1.0 : 0.0);
  }
  s.n = static_cast<long>(err.size());
}

void finish(EstimandSummary& s, const std::vector<double>& err, const std::vector<double>& sq,
            const std::vector<double>& hit) {
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) {
      mean = sd = std::nan("");
      return;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
  };
  mean_sd(err, s.bias, s.bias_sd);
  mean_sd(sq, s.mse, s.mse_sd);
  mean_sd(hit, s.ec, s.ec_sd);
}

}  // namespace

Eigen::MatrixXd reference_correlations() {
  Eigen::MatrixXd R(5, 5);
  R << 1.0, -0.5, -0.5, -0.5, 0.5,
      -0.5, 1.0, 0.5, 0.5, -0.5,
      -0.5, 0.5, 1.0, 0.25, -0.5,
      -0.5, 0.5, 0.25, 1.0, -0.5,
      0.5, -0.5, -0.5, -0.5, 1.0;
  return R;
}

Eigen::MatrixXd covariance_from_correlations(const Eigen::VectorXd& variances,
                                             const Eigen::MatrixXd& R, double* shrink) {
  const auto p = variances.size();
  if (R.rows() != p || R.cols() != p) throw ValidationError("correlation matrix size mismatch");
  if ((variances.array() < 0).any()) throw ValidationError("variances must be non-negative");
  const Eigen::VectorXd sd = variances.array().sqrt();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  auto corr = [&](double s) { return Eigen::MatrixXd(I + s * (R - I)); };
  // Positivity is judged on the correlation scale so zero variances are allowed.
  constexpr double kFloor = 1e-6;
  double s = 1.0;
  if (min_eigenvalue(corr(1.0)) < kFloor) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (min_eigenvalue(corr(mid)) >= kFloor ? lo : hi) = mid;
    }
    s = lo;
  }
  if (shrink) *shrink = s;
  return sd.asDiagonal() * corr(s) * sd.asDiagonal();
}

SimSetting sim_setting(int id) {
  SimSetting s;
  s.id = id;
  s.delta = reference_delta();
  Eigen::VectorXd var = Eigen::VectorXd::Constant(5, kBaseVariance);
  switch (id) {
    case 1:
    case 2:
      s.alpha = kNoSpatialAlpha;
      var[kLambda1] = 0.0;
      s.delta[kLambda1] = 0.0;
      s.delta[kEta] = id == 1 ? -10.0 : 10.0;
      s.Sigma = var.asDiagonal();
      s.description = id == 1 ? "progressing" : "stable";
      break;
    case 3:
      s.alpha = kNoSpatialAlpha;
      s.Sigma = var.asDiagonal();
      s.description = "non-spatial CPs";
      break;
    case 4:
      s.Sigma = var.asDiagonal();
      s.description = "spatial CPs, no cross-covariance";
      break;
    case 5:
      s.Sigma = covariance_from_correlations(var, reference_correlations(), &s.correlation_shrink);
      s.description = "full spatial CP model";
      break;
    default:
      throw ValidationError("setting must be 1-5");
  }
  return s;
}

SimSetting fixed_phi_setting() {
  SimSetting s = sim_setting(5);
  s.id = 0;
  s.delta << 25, -30, 1, 0.5, 0.5;
  s.description = "fixed Phi";
  return s;
}

Eigen::VectorXd sim_times() {
  Eigen::VectorXd t(21);
  for (int k = 0; k < 21; ++k) t[k] = 0.05 * k;
  return t;
}

VFSeries simulate_series(const EffectMatrix& Phi, const std::vector<int>& site_ids,
                         const Eigen::VectorXd& times, Rng& rng, std::string eye_id) {
  const auto m = Phi.rows();
  const auto nu = times.size();
  const double x1 = times[0], x_nu = times[nu - 1];
  Eigen::MatrixXd obs(m, nu);
  for (Eigen::Index i = 0; i < m; ++i) {
    const SiteParams p = SiteParams::from_row(Phi.row(i), x1, x_nu);
    for (Eigen::Index t = 0; t < nu; ++t) {
      const SiteMoments mom = site_moments(p, times[t]);
      obs(i, t) = std::max(0.0, rng.normal(mom.mu, mom.sigma));
    }
  }
  return VFSeries::from_observations(std::move(eye_id), site_ids, times, std::move(obs));
}

SimData generate_setting(const SimSetting& setting, const SpatialGraph& graph, std::uint64_t seed) {
  Rng rng(seed);
  const PrecisionFactor precision(precision_matrix(graph, setting.alpha, setting.rho));
  SimData out;
  out.truth = mcar_sample(setting.delta, setting.Sigma, precision, rng);
  out.series = simulate_series(out.truth, graph.site_ids(), sim_times(), rng,
                               "setting" + std::to_string(setting.id));
  return out;
}

bool estimates_theta(Variant v) {
  return v == Variant::kSpatialCP || v == Variant::kNonspatialL || v == Variant::kNonspatialC;
}

bool estimates_eta(Variant v) { return v == Variant::kSpatialCP || v == Variant::kNonspatialL; }

int default_thread_count() {
  if (const char* env = std::getenv("SPCP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

const ModelSummary& SimResult::find(int setting, Variant model) const {
  for (const auto& s : summary)
    if (s.setting == setting && s.model == model) return s;
  throw ValidationError("no summary for setting " + std::to_string(setting) + ", model " +
                        std::string(variant_name(model)));
}

std::vector<const ReplicateFit*> SimResult::fits_for(int setting, Variant model) const {
  std::vector<const ReplicateFit*> out;
  for (const auto& f : fits)
    if (f.setting == setting && f.model == model) out.push_back(&f);
  std::sort(out.begin(), out.end(),
            [](const ReplicateFit* a, const ReplicateFit* b) { return a->replicate < b->replicate; });
  return out;
}

std::vector<ModelSummary> summarize(const StudyConfig& config,
                                    const std::vector<ReplicateTruth>& truths,
                                    const std::vector<ReplicateFit>& fits) {
  std::vector<int> settings;
  for (const auto& t : truths)
    if (std::find(settings.begin(), settings.end(), t.setting) == settings.end())
      settings.push_back(t.setting);
  std::vector<ModelSummary> out;
  for (int setting : settings) {
    for (Variant model : config.models) {
      ModelSummary s;
      s.setting = setting;
      s.model = model;
      s.has_theta = estimates_theta(model);
      s.has_eta = estimates_eta(model);
      s.mspe.assign(config.horizons.size(), 0.0);
      std::vector<double> te, ts, th, ee, es, eh;
      for (const auto& f : fits) {
        if (f.setting != setting || f.model != model) continue;
        if (!f.ok) {
          ++s.n_failed;
          continue;
        }
        ++s.n_ok;
        s.dic += f.dic;
        s.p_d += f.p_d;
        s.max_metric += f.max_metric;
        for (std::size_t h = 0; h < f.mspe.size(); ++h) s.mspe[h] += f.mspe[h];
        const auto truth = std::find_if(truths.begin(), truths.end(), [&](const ReplicateTruth& t) {
          return t.setting == setting && t.replicate == f.replicate;
        });
        if (truth == truths.end()) continue;
        if (s.has_theta) accumulate(s.theta, truth->theta, f.theta_mean, f.theta_lo, f.theta_hi, te, ts, th);
        if (s.has_eta) accumulate(s.eta, truth->eta, f.eta_mean, f.eta_lo, f.eta_hi, ee, es, eh);
      }
      if (s.n_ok > 0) {
        s.dic /= s.n_ok;
        s.p_d /= s.n_ok;
        s.max_metric /= s.n_ok;
        for (double& v : s.mspe) v /= s.n_ok;
      }
      finish(s.theta, te, ts, th);
      finish(s.eta, ee, es, eh);
      out.push_back(std::move(s));
    }
  }
  return out;
}

SimResult run_study(const StudyConfig& config, const SpatialGraph& graph) {
  config.mcmc.validate();
  if (config.n_replicates < 1) throw ValidationError("replicate count must be positive");
  if (config.fit_visits < 2 || config.fit_visits > 21)
    throw ValidationError("fit_visits must lie in [2, 21]");
  if (config.models.empty()) throw ValidationError("no models requested");
  std::vector<SimSetting> settings;
  for (int id : config.settings) settings.push_back(sim_setting(id));

  const int n_jobs = static_cast<int>(settings.size()) * config.n_replicates;
  std::vector<ReplicateTruth> truths(n_jobs);
  std::vector<std::vector<ReplicateFit>> fits(n_jobs);
  detail::run_pool(n_jobs, config.threads > 0 ? config.threads : default_thread_count(), [&](int job) {
    const SimSetting& setting = settings[job / config.n_replicates];
    const int rep = job % config.n_replicates;
    const std::uint64_t data_seed =
        split_seed(config.seed, static_cast<std::uint64_t>(setting.id) * 1000003ULL + rep);
    const SimData data = generate_setting(setting, graph, data_seed);
    const VFSeries fit_series = data.series.first_visits(config.fit_visits);
    ReplicateTruth& truth = truths[job];
    truth.setting = setting.id;
    truth.replicate = rep;
    truth.eta = data.truth.col(kEta);
    truth.theta = truth.eta.unaryExpr([&](double e) {
      return observed_cp(e, fit_series.first_time(), fit_series.last_time());
    });
    for (std::size_t k = 0; k < config.models.size(); ++k) {
      const Variant model = config.models[k];
      const std::uint64_t fit_seed =
          split_seed(data_seed, static_cast<std::uint64_t>(model) + 1);
      fits[job].push_back(fit_replicate(setting.id, rep, model, fit_series, data.series, graph,
                                        config, fit_seed));
    }
  });

  SimResult out;
  out.config = config;
  out.truths = std::move(truths);
  for (auto& f : fits)
    for (auto& r : f) out.fits.push_back(std::move(r));
  out.summary = summarize(config, out.truths, out.fits);
  return out;
}

SimResult fixed_phi_study(const StudyConfig& config, const SpatialGraph& graph) {
  config.mcmc.validate();
  if (config.n_replicates < 1) throw ValidationError("replicate count must be positive");
  const SimSetting setting = fixed_phi_setting();
  const Eigen::VectorXd times = sim_times();
  const double x1 = times[0], x_nu = times[times.size() - 1];
  const PrecisionFactor precision(precision_matrix(graph, setting.alpha, setting.rho));

  // Within one draw eta only spreads ~0.4 across sites, so a draw with change
  // points both before and after the window essentially never occurs. Among a
  // fixed batch of candidates with every third of the window occupied, keep
  // the one whose eta range covers most of [x1, x_nu].
  EffectMatrix phi;
  int chosen = -1;
  double best_cover = -1.0;
  constexpr int kCandidates = 20000;
  for (int k = 0; k < kCandidates; ++k) {
    Rng rng(split_seed(config.seed, 0xF1F1F1ULL + k));
    EffectMatrix cand = mcar_sample(setting.delta, setting.Sigma, precision, rng);
    const Eigen::VectorXd eta = cand.col(kEta);
    int thirds[3] = {0, 0, 0};
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      if (eta[i] >= x1 && eta[i] <= x_nu)
        ++thirds[std::min(2, static_cast<int>(3.0 * (eta[i] - x1) / (x_nu - x1)))];
    if (!(thirds[0] > 0 && thirds[1] > 0 && thirds[2] > 0)) continue;
    const double cover = std::min(eta.maxCoeff(), x_nu) - std::max(eta.minCoeff(), x1);
    if (cover > best_cover) {
      best_cover = cover;
      chosen = k;
      phi = std::move(cand);
    }
  }
  if (chosen < 0) throw NumericalError("no Phi draw spans the follow-up window");

  const int n = config.n_replicates;
  std::vector<ReplicateTruth> truths(n);
  std::vector<std::vector<ReplicateFit>> fits(n);
  detail::run_pool(n, config.threads > 0 ? config.threads : default_thread_count(), [&](int rep) {
    const std::uint64_t data_seed = split_seed(config.seed, 0xC0FFEEULL * 7 + rep);
    Rng rng(data_seed);
    const VFSeries series = simulate_series(phi, graph.site_ids(), times, rng, "fixed");
    ReplicateTruth& truth = truths[rep];
    truth.setting = 0;
    truth.replicate = rep;
    truth.eta = phi.col(kEta);
    truth.theta = truth.eta.unaryExpr([&](double e) { return observed_cp(e, x1, x_nu); });
    for (Variant model : config.models) {
      const std::uint64_t fit_seed = split_seed(data_seed, static_cast<std::uint64_t>(model) + 1);
      fits[rep].push_back(fit_replicate(0, rep, model, series, series, graph, config, fit_seed));
    }
  });

  SimResult out;
  out.config = config;
  out.truths = std::move(truths);
  for (auto& f : fits)
    for (auto& r : f) out.fits.push_back(std::move(r));
  out.summary = summarize(config, out.truths, out.fits);
  out.fixed_phi = phi;
  out.fixed_phi_index = chosen;
  return out;
}

}  // namespace spcp

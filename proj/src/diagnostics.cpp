#include "spcp/diagnostics.hpp"

#include "spcp/error.hpp"
#include "spcp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spcp {

namespace {

double deviance(const VFSeries& series, const EffectMatrix& Phi) {
  try {
    return -2.0 * observed_log_lik(series, Phi);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Bartlett-window estimate of the spectral density at frequency zero.
double spectrum0(const Eigen::VectorXd& x) {
  const auto n = x.size();
  const Eigen::VectorXd c = x.array() - x.mean();
  const auto lags = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  double s = c.squaredNorm() / n;
  for (Eigen::Index k = 1; k <= lags && k < n; ++k) {
    const double gamma = c.head(n - k).dot(c.tail(n - k)) / n;
    s += 2.0 * (1.0 - static_cast<double>(k) / (lags + 1)) * gamma;
  }
  return s;
}

}  // namespace

FitDiagnostics dic(const PosteriorSamples& samples, const VFSeries& series) {
  if (samples.draws() < 2) throw ValidationError("DIC needs at least two draws");
  if (series.sites() != samples.sites() || series.visits() != samples.times.size())
    throw ValidationError("series does not match the fitted data");
  FitDiagnostics out;
  double sum = 0.0;
  int used = 0;
  for (const auto& phi : samples.Phi) {
    const double d = deviance(series, phi);
    if (!std::isfinite(d)) {
      ++out.excluded_draws;
      continue;
    }
    sum += d;
    ++used;
  }
  if (used == 0) throw NumericalError("deviance is non-finite in every draw");
  out.mean_deviance = sum / used;
  out.deviance_at_mean = deviance(series, samples.posterior_mean_phi());
  if (!std::isfinite(out.deviance_at_mean))
    throw NumericalError("deviance at the posterior mean is non-finite");
  out.p_d = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.mean_deviance + out.p_d;
  return out;
}

double predictive_cp(double eta, double x1, double x_nu, double x) {
  return observed_cp(eta, x1, std::max(x_nu, x));
}

Eigen::VectorXd predictive_mean(const PosteriorSamples& samples, double x) {
  if (samples.draws() == 0) throw ValidationError("no posterior draws");
  const int m = samples.sites();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  for (const auto& phi : samples.Phi) {
    for (int i = 0; i < m; ++i) {
      SiteParams p = SiteParams::from_row(phi.row(i), samples.x1(), samples.x_nu());
      p.theta = predictive_cp(p.eta, samples.x1(), samples.x_nu(), x);
      const SiteMoments mom = site_moments(p, x);
      sum[i] += tobit_mean(mom.mu, mom.sigma);
    }
  }
  return sum / samples.draws();
}

double mspe(const PosteriorSamples& samples, double x, const Eigen::VectorXd& heldout) {
  if (heldout.size() != samples.sites())
    throw ValidationError("held-out visit has " + std::to_string(heldout.size()) +
                          " values for " + std::to_string(samples.sites()) + " sites");
  if (!heldout.allFinite()) throw ValidationError("held-out visit has missing values");
  return (predictive_mean(samples, x) - heldout).squaredNorm() / heldout.size();
}

double geweke(const Eigen::VectorXd& chain) {
  const auto n = chain.size();
  if (n < 100) throw ValidationError("Geweke needs at least 100 draws");
  const auto na = static_cast<Eigen::Index>(std::floor(0.1 * n));
  const auto nb = static_cast<Eigen::Index>(std::floor(0.5 * n));
  const Eigen::VectorXd a = chain.head(na);
  const Eigen::VectorXd b = chain.tail(nb);
  const double var = spectrum0(a) / na + spectrum0(b) / nb;
  if (!(var > 0) || (chain.array() == chain[0]).all())
    throw ValidationError("chain has zero variance");
  return (a.mean() - b.mean()) / std::sqrt(var);
}

double geweke_max_abs_z(const PosteriorSamples& samples, int n_phi, std::uint64_t seed) {
  const int n = samples.draws();
  std::vector<Eigen::VectorXd> chains;
  const int p = samples.delta.empty() ? 0 : static_cast<int>(samples.delta[0].size());
  for (int k = 0; k < p; ++k) {
    Eigen::VectorXd c(n), s(n);
    for (int d = 0; d < n; ++d) {
      c[d] = samples.delta[d][k];
      s[d] = samples.Sigma[d](k, k);
    }
    chains.push_back(c);
    chains.push_back(s);
  }
  if (samples.variant == Variant::kSpatialCP)
    chains.push_back(Eigen::Map<const Eigen::VectorXd>(samples.alpha.data(), n));
  Rng rng(seed);
  const int m = samples.sites();
  for (int r = 0; r < n_phi && m > 0; ++r) {
    const int site = static_cast<int>(rng.bits() % static_cast<std::uint64_t>(m));
    const int effect = static_cast<int>(rng.bits() % kNumEffects);
    chains.push_back(samples.trace(site, effect));
  }
  double best = 0.0;
  for (const auto& c : chains) {
    if ((c.array() == c[0]).all()) continue;
    best = std::max(best, std::abs(geweke(c)));
  }
  return best;
}

Eigen::VectorXd cp_probability(const PosteriorSamples& samples, double t) {
  const int m = samples.sites();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
  if (samples.draws() == 0) return p;
  for (const auto& phi : samples.Phi)
    for (int i = 0; i < m; ++i)
      if (std::max(phi(i, kEta), samples.x1()) < t) p[i] += 1.0;
  return p / samples.draws();
}

ProgressionMetric progression_metric(const PosteriorSamples& samples) {
  ProgressionMetric out;
  out.p = cp_probability(samples, samples.x_nu());
  out.max_metric = out.p.size() > 0 ? out.p.maxCoeff() : 0.0;
  return out;
}

double auc(const std::vector<double>& metric, const std::vector<bool>& label) {
  if (metric.size() != label.size()) throw ValidationError("metric and label lengths differ");
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t a = 0; a < metric.size(); ++a) {
    if (!label[a]) continue;
    for (std::size_t b = 0; b < metric.size(); ++b) {
      if (label[b]) continue;
      ++pairs;
      if (metric[a] > metric[b])
        wins += 1.0;
      else if (metric[a] == metric[b])
        wins += 0.5;
    }
  }
  if (pairs == 0) throw ValidationError("AUC needs both classes");
  return wins / pairs;
}

LogisticResult logistic_diagnostic(const std::vector<double>& metric,
                                   const std::vector<bool>& label) {
  if (metric.size() != label.size()) throw ValidationError("metric and label lengths differ");
  const auto positives = std::count(label.begin(), label.end(), true);
  const auto negatives = static_cast<long>(label.size()) - positives;
  if (positives < 2 || negatives < 2)
    throw ValidationError("logistic diagnostic needs at least two eyes per class");

  LogisticResult out;
  out.auc = auc(metric, label);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // A threshold splitting the classes exactly means the MLE does not exist.
  double max_neg = -std::numeric_limits<double>::infinity(), min_pos = -max_neg;
  double max_pos = max_neg, min_neg = min_pos;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    if (label[i]) {
      min_pos = std::min(min_pos, metric[i]);
      max_pos = std::max(max_pos, metric[i]);
    } else {
      min_neg = std::min(min_neg, metric[i]);
      max_neg = std::max(max_neg, metric[i]);
    }
  }
  if (max_neg < min_pos || max_pos < min_neg) {
    out.separated = true;
    out.aic = out.p_value = out.slope = out.slope_se = out.log_lik = out.intercept = nan;
    return out;
  }

  const auto n = static_cast<Eigen::Index>(metric.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = metric[i];
    y[i] = label[i] ? 1.0 : 0.0;
  }
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  auto log_lik = [&](const Eigen::Vector2d& b) {
    const Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + e^eta) computed stably.
      const double sp = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
      ll += y[i] * eta[i] - sp;
    }
    return ll;
  };
  double ll = log_lik(beta);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    const Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
    info = X.transpose() * w.asDiagonal() * X;
    const Eigen::Vector2d score = X.transpose() * (y - mu);
    Eigen::LDLT<Eigen::Matrix2d> ldlt(info);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0).all()) break;
    const Eigen::Vector2d next = beta + ldlt.solve(score);
    const double ll_next = log_lik(next);
    const bool done = std::abs(ll_next - ll) < 1e-10 * (1.0 + std::abs(ll));
    beta = next;
    ll = ll_next;
    if (done) {
      out.converged = true;
      break;
    }
  }
  const Eigen::VectorXd eta = X * beta;
  const Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
  info = X.transpose() * (mu.array() * (1.0 - mu.array())).matrix().asDiagonal() * X;
  out.intercept = beta[0];
  out.slope = beta[1];
  out.log_lik = ll;
  const Eigen::Matrix2d cov = info.inverse();
  out.slope_se = std::sqrt(cov(1, 1));
  if (!out.converged || !std::isfinite(out.slope_se)) {
    out.aic = out.p_value = nan;
    return out;
  }
  out.aic = 2.0 * 2.0 - 2.0 * ll;
  out.p_value = std::erfc(std::abs(out.slope / out.slope_se) / std::sqrt(2.0));
  return out;
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0 && q <= 1)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

std::pair<double, double> credible_interval(const Eigen::VectorXd& draws, double level) {
  if (draws.size() < 2) throw ValidationError("credible interval needs at least two draws");
  if (!(level > 0 && level <= 1)) throw ValidationError("level must lie in (0, 1]");
  std::vector<double> x(draws.data(), draws.data() + draws.size());
  const double tail = 0.5 * (1.0 - level);
  return {quantile(x, tail), quantile(std::move(x), 1.0 - tail)};
}

}  // namespace spcp

#include "spcp/random.hpp"

#include "spcp/error.hpp"

#include <cmath>

namespace spcp {

double Rng::exponential(double rate) {
  std::exponential_distribution<double> dist(rate);
  return dist(engine_);
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

double Rng::chi_squared(double df) { return gamma(0.5 * df, 2.0); }

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

namespace {

// Standard normal restricted to [lower, inf).
double lower_truncated_standard_normal(double lower, Rng& rng) {
  if (lower <= 0.0) {
    // Acceptance probability is at least one half.
    for (;;) {
      const double z = rng.normal();
      if (z >= lower) return z;
    }
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower + rng.exponential(rate);
    const double log_accept = -0.5 * (z - rate) * (z - rate);
    if (std::log(rng.uniform()) <= log_accept) return z;
  }
}

}  // namespace

double truncated_normal(double mu, double sigma, double upper_bound, Rng& rng) {
  if (!(sigma > 0.0)) throw ValidationError("truncated_normal: sigma must be positive");
  // Z <= b  <=>  -Z >= -b.
  const double b = (upper_bound - mu) / sigma;
  const double w = lower_truncated_standard_normal(-b, rng);
  return std::min(mu - sigma * w, upper_bound);
}

Eigen::MatrixXd inverse_wishart(double df, const Eigen::MatrixXd& scale,
                                Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (scale.cols() != p) throw ValidationError("inverse_wishart: scale must be square");
  if (!(df > static_cast<double>(p) - 1.0))
    throw ValidationError("inverse_wishart: df must exceed p - 1");
  Eigen::LLT<Eigen::MatrixXd> chol(0.5 * (scale + scale.transpose()));
  if (chol.info() != Eigen::Success)
    throw NumericalError("inverse_wishart: scale matrix is not positive definite");

  // Bartlett factor of Wishart(df, I).
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // IW(df, C C^T) = C (A A^T)^{-1} C^T = (C A^{-T}) (C A^{-T})^T.
  const Eigen::MatrixXd a_inv =
      bartlett.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd v = chol.matrixL() * a_inv.transpose();
  Eigen::MatrixXd draw = v * v.transpose();
  return 0.5 * (draw + draw.transpose());
}

}  // namespace spcp

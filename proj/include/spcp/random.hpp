#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace spcp {

/// Random stream owned by exactly one chain. Copying duplicates the stream,
/// which is what the determinism tests rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double exponential(double rate);
  double gamma(double shape, double scale);
  double chi_squared(double df);
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

/// Derives the seed of stream `stream` from a master seed (splitmix64 of
/// master + golden-ratio increment * (stream + 1)). Used for per-replicate and
/// per-eye streams.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng);

/// Exact draw from N(mu, sigma^2) restricted to (-inf, upper_bound]. Uses
/// Robert's exponential-proposal algorithm when the bound sits in the lower
/// tail, so a mean far above the bound still returns quickly.
double truncated_normal(double mu, double sigma, double upper_bound, Rng& rng);

/// Draw from Inverse-Wishart(df, scale), density proportional to
/// |S|^{-(df+p+1)/2} exp(-tr(scale S^{-1})/2). Bartlett construction.
Eigen::MatrixXd inverse_wishart(double df, const Eigen::MatrixXd& scale,
                                Rng& rng);

}  // namespace spcp

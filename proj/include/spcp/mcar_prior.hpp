#pragma once

#include "spcp/random.hpp"
#include "spcp/spatial_graph.hpp"

#include <Eigen/Dense>

#include <array>
#include <string_view>
#include <vector>

namespace spcp {

/// Column roles of the site-effect matrix for the change-point model.
enum Effect : int { kBeta0 = 0, kBeta1 = 1, kLambda0 = 2, kLambda1 = 3, kEta = 4 };
inline constexpr int kNumEffects = 5;
inline constexpr std::array<std::string_view, kNumEffects> kEffectNames = {
    "beta0", "beta1", "lambda0", "lambda1", "eta"};

/// m x p, one row per site. Vectorized site-major: phi = (phi_1^T, ..., phi_m^T)^T,
/// which is vec(Phi^T).
using EffectMatrix = Eigen::MatrixXd;

struct McarHyper {
  Eigen::VectorXd delta;  // p prior means
  Eigen::MatrixXd Sigma;  // p x p cross-covariance
  double alpha = 0.0;
  double rho = 0.99;
};

/// Cholesky of Q with its log-determinant. Rebuilt only when alpha moves.
class PrecisionFactor {
 public:
  PrecisionFactor() = default;
  explicit PrecisionFactor(PrecisionMatrix precision);

  const Eigen::MatrixXd& Q() const { return precision_.Q; }
  const PrecisionMatrix& precision() const { return precision_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }
  double log_det() const { return log_det_; }
  /// 1^T Q 1.
  double total() const { return total_; }

 private:
  PrecisionMatrix precision_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  double total_ = 0.0;
};

/// S = (Phi - 1 delta^T)^T Q (Phi - 1 delta^T), the p x p scatter whose trace
/// against Sigma^{-1} gives the MCAR quadratic form.
Eigen::MatrixXd mcar_scatter(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                             const Eigen::MatrixXd& Q);

/// log MVN(vec(Phi^T); 1_m (x) delta, Q^{-1} (x) Sigma), computed as
/// (p/2) log|Q| - (m/2) log|Sigma| - tr(S Sigma^{-1}) / 2 - (mp/2) log(2 pi).
double mcar_log_density(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                        const Eigen::MatrixXd& Sigma, const PrecisionFactor& precision);
double mcar_log_density(const EffectMatrix& Phi, const McarHyper& hyper,
                        const SpatialGraph& graph);

/// Exact draw: Phi = 1 delta^T + L_Q^{-T-applied} Z L_Sigma^T. Sigma may be
/// positive semi-definite (a pivoted LDL^T root is used), which the simulation
/// settings with a zeroed variance need.
EffectMatrix mcar_sample(const Eigen::VectorXd& delta, const Eigen::MatrixXd& Sigma,
                         const PrecisionFactor& precision, Rng& rng);
EffectMatrix mcar_sample(const McarHyper& hyper, const SpatialGraph& graph, Rng& rng);

/// Moments of the k-columns given the j-columns under the MCAR prior. The
/// conditional covariance is Q^{-1} (x) Sigma_{k|j}; it is returned in that
/// factored form and never densified.
struct ConditionalMoments {
  Eigen::MatrixXd mean;        // m x |k|; row i is E[phi_{ik} | phi^j]
  Eigen::MatrixXd Q;           // m x m site precision
  Eigen::MatrixXd sigma_cond;  // |k| x |k|
  Eigen::MatrixXd regression;  // |k| x |j|, Sigma_kj Sigma_jj^{-1}
};

ConditionalMoments conditional_moments(const EffectMatrix& Phi, const Eigen::VectorXd& delta,
                                       const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& Q,
                                       const std::vector<int>& k, const std::vector<int>& j);
ConditionalMoments conditional_moments(const EffectMatrix& Phi, const McarHyper& hyper,
                                       const SpatialGraph& graph, const std::vector<int>& k,
                                       const std::vector<int>& j);

/// The complement of `k` in {0, ..., p-1}.
std::vector<int> complement_columns(const std::vector<int>& k, int p);

}  // namespace spcp

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace spcp {

struct Site {
  int id = 0;
  int row = 0;
  int col = 0;
};

/// One record of the angle file (`site_id,row,col,angle_deg,is_blind_spot`).
/// Blind-spot records may leave the angle empty (NaN).
struct SiteAngle {
  int site_id = 0;
  int row = 0;
  int col = 0;
  double angle_deg = 0.0;
  bool is_blind_spot = false;
};

/// Site pair by position in the site list, with first < second.
using Edge = std::pair<int, int>;

/// Areal lattice with queen contiguity and a per-site dissimilarity covariate.
/// Immutable once built.
class SpatialGraph {
 public:
  SpatialGraph(std::vector<Site> sites, std::vector<Edge> edges,
               Eigen::VectorXd dissim, std::vector<int> blind_spot_ids);

  int size() const { return static_cast<int>(sites_.size()); }
  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  const Eigen::VectorXd& dissim() const { return dissim_; }
  const std::vector<int>& blind_spot_ids() const { return blind_spot_ids_; }

  /// z_ij = |z_i - z_j|.
  double pair_dissim(int i, int j) const;
  /// Position of `site_id` in sites(), or -1.
  int index_of(int site_id) const;
  std::vector<int> site_ids() const;

  /// Same graph with sites reordered: new site k is old site perm[k].
  SpatialGraph permuted(const std::vector<int>& perm) const;

  nlohmann::json to_json() const;

 private:
  std::vector<Site> sites_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  Eigen::VectorXd dissim_;
  std::vector<int> blind_spot_ids_;
};

/// Default divisor applied to angles before they are used as z_i.
inline constexpr double kDefaultDissimScale = 100.0;

/// Builds the lattice from angle-file records: queen contiguity on the grid
/// positions, blind-spot sites dropped, z_i = angle / dissim_scale.
SpatialGraph build_vf_graph(const std::vector<SiteAngle>& layout,
                            double dissim_scale = kDefaultDissimScale);

/// The 54-point 24-2 perimetry grid (8 rows by 9 columns, right-eye
/// orientation) with the two blind-spot points flagged. Angles are SYNTHETIC:
/// a smooth arcuate pattern split at the horizontal raphe, not measured
/// Garway-Heath values.
std::vector<SiteAngle> standard_vf_layout();

std::vector<SiteAngle> load_angle_csv(const std::string& path);
void write_angle_csv(const std::string& path, const std::vector<SiteAngle>& layout);

/// exp(-z_ij * alpha). The caller applies the adjacency mask.
double adjacency_weight(double alpha, double z_ij);

/// -log(0.5) / min z_ij over edges with z_ij > 0: the largest alpha for which
/// the most similar neighboring pair still has weight 0.5.
double alpha_upper_bound(const SpatialGraph& graph);

struct PrecisionMatrix {
  Eigen::MatrixXd Q;
  double alpha = 0.0;
  double rho = 0.0;
};

/// Q(alpha, rho) = rho * W*(alpha) + (1 - rho) * I, with W* the weighted graph
/// Laplacian. rho must lie in (0, 1).
PrecisionMatrix precision_matrix(const SpatialGraph& graph, double alpha,
                                 double rho);

}  // namespace spcp

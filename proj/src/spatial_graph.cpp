#include "spcp/spatial_graph.hpp"

#include "csv_util.hpp"
#include "spcp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

namespace spcp {

SpatialGraph::SpatialGraph(std::vector<Site> sites, std::vector<Edge> edges,
                           Eigen::VectorXd dissim, std::vector<int> blind_spot_ids)
    : sites_(std::move(sites)),
      edges_(std::move(edges)),
      dissim_(std::move(dissim)),
      blind_spot_ids_(std::move(blind_spot_ids)) {
  const int m = size();
  if (m == 0) throw ValidationError("spatial graph has no sites");
  if (dissim_.size() != m)
    throw ValidationError("dissimilarity vector length does not match site count");
  std::unordered_set<int> ids;
  for (const auto& s : sites_) {
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate site id " + std::to_string(s.id));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(dissim_[i]))
      throw ValidationError("non-finite dissimilarity for site " +
                            std::to_string(sites_[i].id));
  }
  std::set<Edge> seen;
  neighbors_.assign(m, {});
  for (auto& e : edges_) {
    if (e.first == e.second) throw ValidationError("self-edge in spatial graph");
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first < 0 || e.second >= m) throw ValidationError("edge index out of range");
    if (!seen.insert(e).second) throw ValidationError("duplicate edge in spatial graph");
    neighbors_[e.first].push_back(e.second);
    neighbors_[e.second].push_back(e.first);
  }
  std::sort(edges_.begin(), edges_.end());
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

double SpatialGraph::pair_dissim(int i, int j) const {
  return std::abs(dissim_[i] - dissim_[j]);
}

int SpatialGraph::index_of(int site_id) const {
  for (int i = 0; i < size(); ++i)
    if (sites_[i].id == site_id) return i;
  return -1;
}

std::vector<int> SpatialGraph::site_ids() const {
  std::vector<int> ids;
  ids.reserve(sites_.size());
  for (const auto& s : sites_) ids.push_back(s.id);
  return ids;
}

SpatialGraph SpatialGraph::permuted(const std::vector<int>& perm) const {
  const int m = size();
  if (static_cast<int>(perm.size()) != m) throw ValidationError("permutation has wrong length");
  std::vector<int> inverse(m, -1);
  for (int k = 0; k < m; ++k) inverse.at(perm[k]) = k;
  std::vector<Site> sites(m);
  Eigen::VectorXd dissim(m);
  for (int k = 0; k < m; ++k) {
    sites[k] = sites_[perm[k]];
    dissim[k] = dissim_[perm[k]];
  }
  std::vector<Edge> edges;
  edges.reserve(edges_.size());
  for (const auto& [a, b] : edges_) edges.emplace_back(inverse[a], inverse[b]);
  return SpatialGraph(std::move(sites), std::move(edges), std::move(dissim),
                      blind_spot_ids_);
}

nlohmann::json SpatialGraph::to_json() const {
  nlohmann::json j;
  j["m"] = size();
  auto& sites = j["sites"] = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    sites.push_back({{"site_id", sites_[i].id},
                     {"row", sites_[i].row},
                     {"col", sites_[i].col},
                     {"dissim", dissim_[i]}});
  }
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : edges_) edges.push_back({sites_[a].id, sites_[b].id});
  j["blind_spot_ids"] = blind_spot_ids_;
  return j;
}

SpatialGraph build_vf_graph(const std::vector<SiteAngle>& layout, double dissim_scale) {
  if (!(dissim_scale > 0.0)) throw ValidationError("dissimilarity scale must be positive");
  std::unordered_set<int> ids;
  std::set<std::pair<int, int>> cells;
  std::vector<Site> sites;
  std::vector<double> z;
  std::vector<int> blind;
  for (const auto& rec : layout) {
    if (!ids.insert(rec.site_id).second)
      throw ValidationError("duplicate site id " + std::to_string(rec.site_id));
    if (!cells.insert({rec.row, rec.col}).second)
      throw ValidationError("two sites share grid cell (" + std::to_string(rec.row) + "," +
                            std::to_string(rec.col) + ")");
    if (rec.is_blind_spot) {
      blind.push_back(rec.site_id);
      continue;
    }
    if (!std::isfinite(rec.angle_deg))
      throw ValidationError("missing angle for site " + std::to_string(rec.site_id));
    if (rec.angle_deg < 0.0 || rec.angle_deg >= 360.0)
      throw ValidationError("angle for site " + std::to_string(rec.site_id) +
                            " outside [0, 360)");
    sites.push_back({rec.site_id, rec.row, rec.col});
    z.push_back(rec.angle_deg / dissim_scale);
  }
  if (sites.empty()) throw ValidationError("empty graph: no informative sites");

  std::vector<Edge> edges;
  for (int i = 0; i < static_cast<int>(sites.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(sites.size()); ++j) {
      if (std::abs(sites[i].row - sites[j].row) <= 1 &&
          std::abs(sites[i].col - sites[j].col) <= 1)
        edges.emplace_back(i, j);
    }
  }
  Eigen::VectorXd dissim = Eigen::Map<const Eigen::VectorXd>(z.data(), z.size());
  return SpatialGraph(std::move(sites), std::move(edges), std::move(dissim), std::move(blind));
}

std::vector<SiteAngle> standard_vf_layout() {
  // 24-2 rows: first/last column of each row in a 9-column grid.
  constexpr int kFirst[8] = {3, 2, 1, 0, 0, 1, 2, 3};
  constexpr int kLast[8] = {6, 7, 8, 8, 8, 8, 7, 6};
  std::vector<SiteAngle> out;
  int id = 1;
  for (int row = 0; row < 8; ++row) {
    for (int col = kFirst[row]; col <= kLast[row]; ++col, ++id) {
      SiteAngle rec{id, row, col, 0.0, false};
      if (col == 7 && (row == 3 || row == 4)) {
        rec.is_blind_spot = true;
        rec.angle_deg = std::nan("");
      } else {
        // Synthetic arcuate pattern: fibres from the superior field enter the
        // disc inferiorly and vice versa; steeper arcs further from the disc.
        // The eccentricity term bends the arcs so no two neighbours share an
        // angle (a shared angle keeps them linked for any alpha).
        const double v = row - 3.5;
        const double d = (7.0 - col) + 0.5;
        const double f = std::atan2(std::abs(v), d) / std::numbers::pi;
        const double e = std::hypot(v, d);
        const double angle = v < 0 ? 195.0 + 150.0 * f + 5.0 * e : 165.0 - 150.0 * f - 5.0 * e;
        rec.angle_deg = std::round(angle);
      }
      out.push_back(rec);
    }
  }
  return out;
}

std::vector<SiteAngle> load_angle_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open angle file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("angle file " + path + " is empty");
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected = {"site_id", "row", "col", "angle_deg",
                                             "is_blind_spot"};
  if (header != expected)
    throw ValidationError("angle file header must be site_id,row,col,angle_deg,is_blind_spot");
  std::vector<SiteAngle> out;
  std::ostringstream errors;
  int n_errors = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    long long id = 0, row = 0, col = 0, blind = 0;
    double angle = 0.0;
    if (f.size() != 5 || !detail::parse_int(f[0], id) || !detail::parse_int(f[1], row) ||
        !detail::parse_int(f[2], col) || !detail::parse_int(f[4], blind) ||
        (blind != 0 && blind != 1)) {
      errors << "  row " << line_no << ": malformed record\n";
      ++n_errors;
      continue;
    }
    if (f[3].empty()) {
      angle = std::nan("");
    } else if (!detail::parse_double(f[3], angle)) {
      errors << "  row " << line_no << ": bad angle '" << f[3] << "'\n";
      ++n_errors;
      continue;
    }
    out.push_back({static_cast<int>(id), static_cast<int>(row), static_cast<int>(col), angle,
                   blind == 1});
  }
  if (n_errors > 0)
    throw ValidationError("angle file " + path + " has " + std::to_string(n_errors) +
                          " invalid rows:\n" + errors.str());
  return out;
}

void write_angle_csv(const std::string& path, const std::vector<SiteAngle>& layout) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "site_id,row,col,angle_deg,is_blind_spot\n";
  for (const auto& r : layout) {
    out << r.site_id << ',' << r.row << ',' << r.col << ','
        << (std::isfinite(r.angle_deg) ? detail::fmt(r.angle_deg) : std::string()) << ','
        << (r.is_blind_spot ? 1 : 0) << '\n';
  }
}

double adjacency_weight(double alpha, double z_ij) {
  if (alpha < 0.0) throw ValidationError("adjacency_weight: alpha must be non-negative");
  if (z_ij < 0.0) throw ValidationError("adjacency_weight: dissimilarity must be non-negative");
  return std::exp(-z_ij * alpha);
}

double alpha_upper_bound(const SpatialGraph& graph) {
  double min_z = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : graph.edges()) {
    const double z = graph.pair_dissim(a, b);
    if (z > 0.0) min_z = std::min(min_z, z);
  }
  if (!std::isfinite(min_z))
    throw ValidationError("degenerate dissimilarity: every neighboring pair has z_ij = 0; "
                          "supply an explicit upper bound for alpha");
  return -std::log(0.5) / min_z;
}

PrecisionMatrix precision_matrix(const SpatialGraph& graph, double alpha, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  if (alpha < 0.0) throw ValidationError("alpha must be non-negative");
  const int m = graph.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(m, m) * (1.0 - rho);
  for (const auto& [a, b] : graph.edges()) {
    const double w = rho * adjacency_weight(alpha, graph.pair_dissim(a, b));
    q(a, b) -= w;
    q(b, a) -= w;
    q(a, a) += w;
    q(b, b) += w;
  }
  return {std::move(q), alpha, rho};
}

}  // namespace spcp

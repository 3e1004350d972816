#pragma once

#include "spcp/cp_likelihood.hpp"
#include "spcp/sampler.hpp"
#include "spcp/spatial_graph.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace spcp {

/// Model-scale conversion applied on ingestion.
struct ScaleConfig {
  double sens_scale = 10.0;  // model value = dB / sens_scale
  double days_per_year = 365.25;
};

/// Reads `eye_id,visit_index,visit_time_days,site_id,sensitivity_db`. Every
/// eye must have a complete site x visit grid; problems are collected and
/// reported together with their line numbers. Eyes keep file order, sites are
/// sorted by id, and times are shifted so the first visit is at 0.
std::vector<VFSeries> load_vf_csv(const std::string& path, const ScaleConfig& scale = {});

/// Inverse of load_vf_csv (dB and days).
void write_vf_csv(const std::string& path, const std::vector<VFSeries>& eyes);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Column names of samples.csv: beta0[id] ... eta[id], delta[name],
/// Sigma[name:name] (upper triangle), alpha.
std::vector<std::string> sample_columns(const PosteriorSamples& samples);

void write_samples_csv(const std::string& path, const PosteriorSamples& samples);

/// Everything except the draws: variant, config, hyperpriors, scaling, site
/// ids, visit times and acceptance rates.
nlohmann::json samples_meta(const PosteriorSamples& samples);

/// Writes samples.csv and meta.json into `dir`. `extra` is merged into meta.json.
void write_samples_dir(const std::string& dir, const PosteriorSamples& samples,
                       const nlohmann::json& extra = nlohmann::json::object());

PosteriorSamples read_samples_dir(const std::string& dir);

/// x1 to x_nu + future in `step` increments; the last frame lands exactly on
/// the end, giving ceil(span / step) + 1 frames.
Eigen::VectorXd heatmap_grid(double x1, double x_nu, double step = 0.1, double future = 1.0);

/// One CSV (site_id,row,col,p) and one SVG per time plus index.csv. Returns
/// the frame CSV paths in order.
std::vector<std::string> emit_heatmap_frames(const PosteriorSamples& samples,
                                             const SpatialGraph& graph,
                                             const Eigen::VectorXd& times,
                                             const std::string& out_dir);

/// Posterior mean and 95% band of mu_t on a time grid per site, observed
/// values, and the change-point summary, in dB and days. Writes `out_path`
/// (CSV) and the same stem with .svg.
void emit_fit_plot_data(const PosteriorSamples& samples, const VFSeries& series,
                        const SpatialGraph& graph, const std::string& out_path);

/// Fill color for probability p on the white-to-red ramp.
std::string ramp_color(double p);

}  // namespace spcp

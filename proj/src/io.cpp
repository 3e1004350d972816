#include "spcp/io.hpp"

#include "csv_util.hpp"
#include "spcp/diagnostics.hpp"
#include "spcp/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace spcp {

namespace fs = std::filesystem;
using detail::fmt;
using nlohmann::json;

namespace {

struct RawRecord {
  long long visit = 0;
  double days = 0.0;
  int site = 0;
  double db = 0.0;
  int line = 0;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

json mcmc_json(const McmcConfig& c) {
  return {{"n_iter", c.n_iter},
          {"n_burn", c.n_burn},
          {"n_thin", c.n_thin},
          {"seed", c.seed},
          {"initial_site_sd", c.initial_site_sd},
          {"initial_alpha_sd", c.initial_alpha_sd},
          {"pilot",
           {{"block_size", c.pilot.block_size},
            {"target_rate_low", c.pilot.target_rate_low},
            {"target_rate_high", c.pilot.target_rate_high},
            {"max_pilot_blocks", c.pilot.max_pilot_blocks}}}};
}

McmcConfig mcmc_from_json(const json& j) {
  McmcConfig c;
  c.n_iter = j.at("n_iter").get<long>();
  c.n_burn = j.at("n_burn").get<long>();
  c.n_thin = j.at("n_thin").get<long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.initial_site_sd = j.at("initial_site_sd").get<double>();
  c.initial_alpha_sd = j.at("initial_alpha_sd").get<double>();
  const json& p = j.at("pilot");
  c.pilot.block_size = p.at("block_size").get<int>();
  c.pilot.target_rate_low = p.at("target_rate_low").get<double>();
  c.pilot.target_rate_high = p.at("target_rate_high").get<double>();
  c.pilot.max_pilot_blocks = p.at("max_pilot_blocks").get<int>();
  return c;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

json hyper_json(const Hyperpriors& h) {
  return {{"kappa2", h.kappa2},       {"xi", h.xi},
          {"Psi", matrix_json(h.Psi)}, {"rho", h.rho},
          {"a_alpha", h.a_alpha},     {"b_alpha", h.b_alpha},
          {"mean_prior_var", h.mean_prior_var}, {"ig_shape", h.ig_shape},
          {"ig_scale", h.ig_scale}};
}

Hyperpriors hyper_from_json(const json& j) {
  Hyperpriors h;
  h.kappa2 = j.at("kappa2").get<double>();
  h.xi = j.at("xi").get<double>();
  h.Psi = matrix_from_json(j.at("Psi"));
  h.rho = j.at("rho").get<double>();
  h.a_alpha = j.at("a_alpha").get<double>();
  h.b_alpha = j.at("b_alpha").get<double>();
  h.mean_prior_var = j.at("mean_prior_var").get<double>();
  h.ig_shape = j.at("ig_shape").get<double>();
  h.ig_scale = j.at("ig_scale").get<double>();
  return h;
}

double days_of(const PosteriorSamples& s, double years) {
  return years * s.days_per_year + s.time_offset_days;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<VFSeries> load_vf_csv(const std::string& path, const ScaleConfig& scale) {
  if (!(scale.sens_scale > 0) || !(scale.days_per_year > 0))
    throw ValidationError("scaling factors must be positive");
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("data file " + path + " is empty");
  const std::vector<std::string> expected = {"eye_id", "visit_index", "visit_time_days", "site_id",
                                             "sensitivity_db"};
  if (detail::split_csv_line(line) != expected)
    throw ValidationError(
        "data file header must be eye_id,visit_index,visit_time_days,site_id,sensitivity_db");

  std::vector<std::string> eye_order;
  std::map<std::string, std::vector<RawRecord>> by_eye;
  std::ostringstream errors;
  int n_errors = 0;
  auto fail = [&](int line_no, const std::string& msg) {
    if (n_errors < 50) errors << "  row " << line_no << ": " << msg << '\n';
    ++n_errors;
  };
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    RawRecord r;
    r.line = line_no;
    long long site = 0;
    if (f.size() != 5 || f[0].empty() || !detail::parse_int(f[1], r.visit) ||
        !detail::parse_double(f[2], r.days) || !detail::parse_int(f[3], site) ||
        !detail::parse_double(f[4], r.db)) {
      fail(line_no, "malformed record");
      continue;
    }
    r.site = static_cast<int>(site);
    if (!std::isfinite(r.days)) {
      fail(line_no, "visit time is not finite");
      continue;
    }
    if (!std::isfinite(r.db)) {
      fail(line_no, "sensitivity is not finite");
      continue;
    }
    if (r.db < 0) {
      fail(line_no, "negative sensitivity " + f[4]);
      continue;
    }
    if (!by_eye.count(f[0])) eye_order.push_back(f[0]);
    by_eye[f[0]].push_back(r);
  }

  std::vector<VFSeries> out;
  for (const auto& eye : eye_order) {
    const auto& recs = by_eye[eye];
    std::map<long long, double> visit_days;
    std::set<int> site_set;
    std::map<std::pair<long long, int>, const RawRecord*> cells;
    for (const auto& r : recs) {
      const auto [it, fresh] = visit_days.emplace(r.visit, r.days);
      if (!fresh && it->second != r.days)
        fail(r.line, "eye " + eye + " visit " + std::to_string(r.visit) +
                         " has two different visit times");
      site_set.insert(r.site);
      if (!cells.emplace(std::make_pair(r.visit, r.site), &r).second)
        fail(r.line, "duplicate record for eye " + eye + ", visit " + std::to_string(r.visit) +
                         ", site " + std::to_string(r.site));
    }
    double prev = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (const auto& [v, d] : visit_days) {
      if (!(d > prev)) monotone = false;
      prev = d;
    }
    if (!monotone) {
      fail(recs.front().line, "eye " + eye + ": visit times are not strictly increasing in visit_index");
      continue;
    }
    const std::vector<int> sites(site_set.begin(), site_set.end());
    const auto m = static_cast<Eigen::Index>(sites.size());
    const auto nu = static_cast<Eigen::Index>(visit_days.size());
    if (static_cast<Eigen::Index>(cells.size()) != m * nu) {
      fail(recs.front().line, "eye " + eye + ": incomplete grid, " + std::to_string(cells.size()) +
                                  " of " + std::to_string(m * nu) + " site x visit cells present");
      continue;
    }
    Eigen::MatrixXd obs(m, nu);
    Eigen::VectorXd times(nu);
    const double first = visit_days.begin()->second;
    Eigen::Index t = 0;
    for (const auto& [v, d] : visit_days) {
      times[t] = (d - first) / scale.days_per_year;
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto it = cells.find({v, sites[i]});
        if (it == cells.end()) continue;
        obs(i, t) = it->second->db / scale.sens_scale;
      }
      ++t;
    }
    VFSeries s = VFSeries::from_observations(eye, sites, times, obs);
    s.sens_scale = scale.sens_scale;
    s.days_per_year = scale.days_per_year;
    s.time_offset_days = first;
    out.push_back(std::move(s));
  }
  if (n_errors > 0)
    throw ValidationError("data file " + path + " has " + std::to_string(n_errors) +
                          " problems:\n" + errors.str());
  if (out.empty()) throw ValidationError("data file " + path + " has no records");
  return out;
}

void write_vf_csv(const std::string& path, const std::vector<VFSeries>& eyes) {
  auto out = open_out(path);
  out << "eye_id,visit_index,visit_time_days,site_id,sensitivity_db\n";
  for (const auto& s : eyes) {
    for (int t = 0; t < s.visits(); ++t) {
      const double days = s.times[t] * s.days_per_year + s.time_offset_days;
      for (int i = 0; i < s.sites(); ++i)
        out << s.eye_id << ',' << (t + 1) << ',' << fmt(days) << ',' << s.site_ids[i] << ','
            << fmt(s.obs(i, t) * s.sens_scale) << '\n';
    }
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("SHA-256 initialisation failed");
  }
  char buf[1 << 15];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return hex.str();
}

std::vector<std::string> sample_columns(const PosteriorSamples& samples) {
  std::vector<std::string> cols;
  for (int e = 0; e < kNumEffects; ++e)
    for (int id : samples.site_ids)
      cols.push_back(std::string(kEffectNames[e]) + "[" + std::to_string(id) + "]");
  for (int e = 0; e < kNumEffects; ++e)
    cols.push_back("delta[" + std::string(kEffectNames[e]) + "]");
  for (int a = 0; a < kNumEffects; ++a)
    for (int b = a; b < kNumEffects; ++b)
      cols.push_back("Sigma[" + std::string(kEffectNames[a]) + ":" + std::string(kEffectNames[b]) +
                     "]");
  cols.push_back("alpha");
  return cols;
}

void write_samples_csv(const std::string& path, const PosteriorSamples& samples) {
  auto out = open_out(path);
  const auto cols = sample_columns(samples);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  const int m = samples.sites();
  for (int d = 0; d < samples.draws(); ++d) {
    std::string row;
    for (int e = 0; e < kNumEffects; ++e)
      for (int i = 0; i < m; ++i) row += fmt(samples.Phi[d](i, e)) + ',';
    for (int e = 0; e < kNumEffects; ++e) row += fmt(samples.delta[d][e]) + ',';
    for (int a = 0; a < kNumEffects; ++a)
      for (int b = a; b < kNumEffects; ++b) row += fmt(samples.Sigma[d](a, b)) + ',';
    row += fmt(samples.alpha[d]);
    out << row << '\n';
  }
}

json samples_meta(const PosteriorSamples& s) {
  json acc = json::object();
  for (const auto& [k, v] : s.acceptance) acc[k] = std::isfinite(v) ? json(v) : json(nullptr);
  std::vector<double> times(s.times.data(), s.times.data() + s.times.size());
  return {{"format", "spcp-samples-1"},
          {"model", std::string(variant_name(s.variant))},
          {"eye_id", s.eye_id},
          {"site_ids", s.site_ids},
          {"times_years", times},
          {"scaling",
           {{"sens_scale", s.sens_scale},
            {"days_per_year", s.days_per_year},
            {"time_offset_days", s.time_offset_days}}},
          {"mcmc", mcmc_json(s.config)},
          {"hyper", hyper_json(s.hyper)},
          {"pilot_blocks", s.pilot_blocks},
          {"acceptance", acc},
          {"draws", s.draws()}};
}

void write_samples_dir(const std::string& dir, const PosteriorSamples& samples, const json& extra) {
  fs::create_directories(dir);
  write_samples_csv((fs::path(dir) / "samples.csv").string(), samples);
  json meta = samples_meta(samples);
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  auto out = open_out((fs::path(dir) / "meta.json").string());
  out << meta.dump(2) << '\n';
}

PosteriorSamples read_samples_dir(const std::string& dir) {
  const fs::path meta_path = fs::path(dir) / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw ValidationError("cannot open " + meta_path.string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }
  PosteriorSamples s;
  try {
    s.variant = parse_variant(meta.at("model").get<std::string>());
    s.eye_id = meta.at("eye_id").get<std::string>();
    s.site_ids = meta.at("site_ids").get<std::vector<int>>();
    const auto t = meta.at("times_years").get<std::vector<double>>();
    s.times = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    s.sens_scale = meta.at("scaling").at("sens_scale").get<double>();
    s.days_per_year = meta.at("scaling").at("days_per_year").get<double>();
    s.time_offset_days = meta.at("scaling").at("time_offset_days").get<double>();
    s.config = mcmc_from_json(meta.at("mcmc"));
    s.hyper = hyper_from_json(meta.at("hyper"));
    s.pilot_blocks = meta.value("pilot_blocks", 0);
    for (const auto& [k, v] : meta.at("acceptance").items())
      s.acceptance[k] = v.is_null() ? std::nan("") : v.get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }

  const fs::path csv_path = fs::path(dir) / "samples.csv";
  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open " + csv_path.string());
  std::string line;
  std::getline(in, line);
  const auto header = detail::split_csv_line(line);
  if (header != sample_columns(s))
    throw ValidationError(csv_path.string() + ": columns do not match meta.json");
  const int m = s.sites();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw ValidationError(csv_path.string() + ": line " + std::to_string(line_no) +
                            " has the wrong number of fields");
    std::vector<double> v(f.size());
    for (std::size_t k = 0; k < f.size(); ++k)
      if (!detail::parse_double(f[k], v[k]))
        throw ValidationError(csv_path.string() + ": line " + std::to_string(line_no) +
                              " has a non-numeric value");
    std::size_t k = 0;
    EffectMatrix phi(m, kNumEffects);
    for (int e = 0; e < kNumEffects; ++e)
      for (int i = 0; i < m; ++i) phi(i, e) = v[k++];
    Eigen::VectorXd delta(kNumEffects);
    for (int e = 0; e < kNumEffects; ++e) delta[e] = v[k++];
    Eigen::MatrixXd sigma(kNumEffects, kNumEffects);
    for (int a = 0; a < kNumEffects; ++a)
      for (int b = a; b < kNumEffects; ++b) sigma(a, b) = sigma(b, a) = v[k++];
    s.Phi.push_back(std::move(phi));
    s.delta.push_back(std::move(delta));
    s.Sigma.push_back(std::move(sigma));
    s.alpha.push_back(v[k]);
  }
  return s;
}

Eigen::VectorXd heatmap_grid(double x1, double x_nu, double step, double future) {
  if (!(step > 0)) throw ValidationError("heatmap step must be positive");
  if (!(future >= 0)) throw ValidationError("heatmap horizon must be non-negative");
  const double span = x_nu + future - x1;
  const auto n = static_cast<Eigen::Index>(std::ceil(span / step - 1e-9)) + 1;
  Eigen::VectorXd t(std::max<Eigen::Index>(n, 1));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = std::min(x1 + step * k, x1 + span);
  return t;
}

std::string ramp_color(double p) {
  p = std::clamp(std::isfinite(p) ? p : 0.0, 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - p)));
  const int red = static_cast<int>(std::lround(255.0 - 55.0 * p));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", red, fade, fade);
  return buf;
}

std::vector<std::string> emit_heatmap_frames(const PosteriorSamples& samples,
                                             const SpatialGraph& graph,
                                             const Eigen::VectorXd& times,
                                             const std::string& out_dir) {
  if (graph.site_ids() != samples.site_ids)
    throw ValidationError("angle layout sites do not match the samples");
  fs::create_directories(out_dir);
  const auto& sites = graph.sites();
  int max_row = 0, max_col = 0;
  for (const auto& s : sites) {
    max_row = std::max(max_row, s.row);
    max_col = std::max(max_col, s.col);
  }
  constexpr int cell = 40, margin = 20, top = 40;
  const int width = 2 * margin + (max_col + 1) * cell;
  const int height = top + margin + (max_row + 1) * cell + 30;

  std::vector<std::string> paths;
  auto index = open_out((fs::path(out_dir) / "index.csv").string());
  index << "frame,time_years,time_days,csv,svg\n";
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const Eigen::VectorXd p = cp_probability(samples, times[k]);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%03d", static_cast<int>(k));
    const std::string csv_name = std::string(stem) + ".csv";
    const std::string svg_name = std::string(stem) + ".svg";
    {
      auto csv = open_out((fs::path(out_dir) / csv_name).string());
      csv << "site_id,row,col,p\n";
      for (std::size_t i = 0; i < sites.size(); ++i)
        csv << sites[i].id << ',' << sites[i].row << ',' << sites[i].col << ',' << fmt(p[i]) << '\n';
    }
    {
      auto svg = open_out((fs::path(out_dir) / svg_name).string());
      svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
          << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
      svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"13\">"
          << svg_escape(samples.eye_id) << "  day " << fmt(days_of(samples, times[k]))
          << (times[k] > samples.x_nu() ? " (forecast)" : "") << "</text>\n";
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const int x = margin + sites[i].col * cell;
        const int y = top + sites[i].row * cell;
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell - 2 << "\" height=\""
            << cell - 2 << "\" fill=\"" << ramp_color(p[i]) << "\" stroke=\"#888\"><title>site "
            << sites[i].id << ": " << fmt(p[i]) << "</title></rect>\n";
        svg << "<text x=\"" << x + 4 << "\" y=\"" << y + 22 << "\">" << fmt(std::round(p[i] * 100) / 100)
            << "</text>\n";
      }
      const int ly = top + (max_row + 1) * cell + 10;
      for (int b = 0; b <= 10; ++b)
        svg << "<rect x=\"" << margin + b * 15 << "\" y=\"" << ly << "\" width=\"15\" height=\"10\" fill=\""
            << ramp_color(b / 10.0) << "\"/>\n";
      svg << "<text x=\"" << margin + 11 * 15 + 5 << "\" y=\"" << ly + 9 << "\">0 to 1</text>\n";
      svg << "</svg>\n";
    }
    index << k << ',' << fmt(times[k]) << ',' << fmt(days_of(samples, times[k])) << ',' << csv_name
          << ',' << svg_name << '\n';
    paths.push_back((fs::path(out_dir) / csv_name).string());
  }
  return paths;
}

void emit_fit_plot_data(const PosteriorSamples& samples, const VFSeries& series,
                        const SpatialGraph& graph, const std::string& out_path) {
  if (series.site_ids != samples.site_ids || series.visits() != samples.times.size())
    throw ValidationError("series does not match the samples");
  if (samples.draws() < 2) throw ValidationError("fit plot needs at least two draws");
  const int m = samples.sites();
  const double x1 = samples.x1(), x_nu = samples.x_nu();
  std::vector<double> grid(series.times.data(), series.times.data() + series.times.size());
  constexpr int kGrid = 41;
  for (int k = 0; k < kGrid; ++k) grid.push_back(x1 + (x_nu - x1) * k / (kGrid - 1));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             grid.end());

  struct SitePlot {
    std::vector<double> mean, lo, hi;
    double theta_mean = 0, theta_lo = 0, theta_hi = 0;
    bool censored_cp = false;
  };
  std::vector<SitePlot> plots(m);
  const double sc = samples.sens_scale;
  auto out = open_out(out_path);
  out << "site_id,time_days,mu_mean_db,mu_lo_db,mu_hi_db,observed_db,theta_mean_days,"
         "theta_lo_days,theta_hi_days,censored_cp\n";
  for (int i = 0; i < m; ++i) {
    SitePlot& sp = plots[i];
    const Eigen::VectorXd th = samples.theta_trace(i);
    const auto ci = credible_interval(th);
    sp.theta_mean = th.mean();
    sp.theta_lo = ci.first;
    sp.theta_hi = ci.second;
    sp.censored_cp = ci.second >= x_nu - 1e-12;
    for (double x : grid) {
      Eigen::VectorXd mu(samples.draws());
      for (int d = 0; d < samples.draws(); ++d) {
        const SiteParams p = SiteParams::from_row(samples.Phi[d].row(i), x1, x_nu);
        const auto row = design_row(x, p.theta);
        mu[d] = p.beta0 + p.beta1 * row[1];
      }
      const auto band = credible_interval(mu);
      sp.mean.push_back(mu.mean());
      sp.lo.push_back(band.first);
      sp.hi.push_back(band.second);
      std::string observed;
      for (int t = 0; t < series.visits(); ++t)
        if (std::abs(series.times[t] - x) < 1e-12) observed = fmt(series.obs(i, t) * sc);
      out << samples.site_ids[i] << ',' << fmt(days_of(samples, x)) << ',' << fmt(mu.mean() * sc)
          << ',' << fmt(band.first * sc) << ',' << fmt(band.second * sc) << ',' << observed << ','
          << fmt(days_of(samples, sp.theta_mean)) << ',' << fmt(days_of(samples, sp.theta_lo))
          << ',' << fmt(days_of(samples, sp.theta_hi)) << ',' << (sp.censored_cp ? "true" : "false")
          << '\n';
    }
  }

  // Small multiples on the field layout, common dB axis.
  double y_max = 1.0;
  for (int i = 0; i < m; ++i) {
    for (double v : plots[i].hi) y_max = std::max(y_max, v * sc);
    y_max = std::max(y_max, series.obs.row(i).maxCoeff() * sc);
  }
  int max_row = 0, max_col = 0;
  for (const auto& s : graph.sites()) {
    max_row = std::max(max_row, s.row);
    max_col = std::max(max_col, s.col);
  }
  constexpr int pw = 110, ph = 70, gap = 8, top = 30;
  auto px = [&](double x) { return (x - x1) / std::max(x_nu - x1, 1e-12) * (pw - 10) + 5; };
  auto py = [&](double y) { return ph - 5 - y / y_max * (ph - 10); };
  fs::path svg_path(out_path);
  svg_path.replace_extension(".svg");
  auto svg = open_out(svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (max_col + 1) * (pw + gap) + gap
      << "\" height=\"" << top + (max_row + 1) * (ph + gap) + gap
      << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
  svg << "<text x=\"" << gap << "\" y=\"18\" font-size=\"12\">" << svg_escape(samples.eye_id)
      << ": posterior mean (red), 95% band, change point (blue)</text>\n";
  for (int i = 0; i < m; ++i) {
    const int gi = graph.index_of(samples.site_ids[i]);
    const Site& site = graph.sites()[gi];
    const int ox = gap + site.col * (pw + gap);
    const int oy = top + site.row * (ph + gap);
    const SitePlot& sp = plots[i];
    svg << "<g transform=\"translate(" << ox << "," << oy << ")\">\n";
    svg << "<rect width=\"" << pw << "\" height=\"" << ph << "\" fill=\"white\" stroke=\"#aaa\"/>\n";
    svg << "<polygon fill=\"#f4b6b6\" points=\"";
    for (std::size_t k = 0; k < grid.size(); ++k) svg << fmt(px(grid[k])) << ',' << fmt(py(sp.hi[k] * sc)) << ' ';
    for (std::size_t k = grid.size(); k-- > 0;) svg << fmt(px(grid[k])) << ',' << fmt(py(sp.lo[k] * sc)) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"#c00\" points=\"";
    for (std::size_t k = 0; k < grid.size(); ++k) svg << fmt(px(grid[k])) << ',' << fmt(py(sp.mean[k] * sc)) << ' ';
    svg << "\"/>\n";
    for (int t = 0; t < series.visits(); ++t)
      svg << "<circle r=\"1.6\" fill=\"#333\" cx=\"" << fmt(px(series.times[t])) << "\" cy=\""
          << fmt(py(series.obs(i, t) * sc)) << "\"/>\n";
    svg << "<line stroke=\"#00c\" stroke-dasharray=\"" << (sp.censored_cp ? "2,2" : "none") << "\" x1=\""
        << fmt(px(sp.theta_mean)) << "\" x2=\"" << fmt(px(sp.theta_mean)) << "\" y1=\"0\" y2=\"" << ph
        << "\"/>\n";
    svg << "<text x=\"3\" y=\"10\">" << samples.site_ids[i] << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
}

}  // namespace spcp

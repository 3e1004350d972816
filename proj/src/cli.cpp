#include "spcp/cli.hpp"

#include "csv_util.hpp"
#include "parallel.hpp"
#include "spcp/diagnostics.hpp"
#include "spcp/error.hpp"
#include "spcp/io.hpp"
#include "spcp/model_variants.hpp"
#include "spcp/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

namespace spcp {

namespace {

namespace fs = std::filesystem;
using detail::fmt;
using nlohmann::json;

constexpr const char* kBuiltinLayout = "builtin-synthetic";

struct McmcFlags {
  bool desk = false;
  bool paper = false;
  long n_iter = -1;
  long n_burn = -1;
  long n_thin = -1;
  std::uint64_t seed = 1;

  void add(CLI::App* app, bool desk_default) {
    auto* d = app->add_flag("--desk-scale", desk,
                            "20000 iterations, 2000 burn-in, thin 10" +
                                std::string(desk_default ? " (default)" : ""));
    auto* p = app->add_flag("--paper-scale", paper,
                            "260000 iterations, 10000 burn-in, thin 25" +
                                std::string(desk_default ? "" : " (default)"));
    d->excludes(p);
    app->add_option("--n-iter", n_iter, "total sweeps after pilot tuning, burn-in included");
    app->add_option("--n-burn", n_burn, "burn-in sweeps");
    app->add_option("--n-thin", n_thin, "keep every n-th post burn-in sweep");
    app->add_option("--seed", seed, "master seed")->capture_default_str();
  }

  McmcConfig resolve(bool desk_default) const {
    McmcConfig c = (desk || (desk_default && !paper)) ? McmcConfig::desk_scale()
                                                      : McmcConfig::paper_scale();
    if (n_iter >= 0) c.n_iter = n_iter;
    if (n_burn >= 0) c.n_burn = n_burn;
    if (n_thin >= 0) c.n_thin = n_thin;
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct HyperFlags {
  Hyperpriors h;
  void add(CLI::App* app) {
    app->add_option("--kappa2", h.kappa2, "prior variance of the MCAR means")->capture_default_str();
    app->add_option("--xi", h.xi, "inverse-Wishart degrees of freedom (0: p + 1)")->capture_default_str();
    app->add_option("--rho", h.rho, "Leroux mixing weight, in (0, 1)")->capture_default_str();
    app->add_option("--alpha-upper", h.b_alpha,
                    "upper end of the uniform alpha prior (0: -log 0.5 / smallest neighbor dissimilarity)")
        ->capture_default_str();
  }
};

struct GraphFlags {
  std::string angles;
  double dissim_scale = kDefaultDissimScale;
  void add(CLI::App* app) {
    app->add_option("--angles", angles,
                    "site_id,row,col,angle_deg,is_blind_spot CSV (default: built-in synthetic layout)");
    app->add_option("--dissim-scale", dissim_scale, "angles are divided by this")->capture_default_str();
  }
  SpatialGraph load() const {
    if (!(dissim_scale > 0)) throw ValidationError("--dissim-scale must be positive");
    return build_vf_graph(angles.empty() ? standard_vf_layout() : load_angle_csv(angles), dissim_scale);
  }
  json describe() const {
    if (angles.empty()) return {{"path", kBuiltinLayout}, {"dissim_scale", dissim_scale}};
    return {{"path", angles}, {"sha256", sha256_file(angles)}, {"dissim_scale", dissim_scale}};
  }
};

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "spcp";
  for (const auto& a : args) s += " " + a;
  return s;
}

// Replaces `--config file.json` with the flags it lists, so flags given later
// on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw ValidationError("--config needs a file");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      out.push_back(args[k]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError("config " + path + " must be a JSON object");
    auto scalar = [&](const std::string& key, const json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number()) return fmt(v.get<double>());
      throw ValidationError("config " + path + ": unsupported value for " + key);
    };
    for (const auto& [key, v] : cfg.items()) {
      const std::string flag = "--" + key;
      if (v.is_boolean()) {
        if (v.get<bool>()) out.push_back(flag);
      } else if (v.is_array()) {
        for (const auto& e : v) {
          out.push_back(flag);
          out.push_back(scalar(key, e));
        }
      } else {
        out.push_back(flag);
        out.push_back(scalar(key, v));
      }
    }
  }
  return out;
}

void check_sites(const VFSeries& s, const SpatialGraph& graph) {
  const auto ids = graph.site_ids();
  if (static_cast<int>(ids.size()) != s.sites())
    throw ValidationError("angle layout has " + std::to_string(ids.size()) +
                          " informative sites but eye " + s.eye_id + " has " +
                          std::to_string(s.sites()) + " sites");
  for (int i = 0; i < s.sites(); ++i)
    if (ids[i] != s.site_ids[i])
      throw ValidationError("eye " + s.eye_id + " has site " + std::to_string(s.site_ids[i]) +
                            " where the angle layout has site " + std::to_string(ids[i]));
}

std::string safe_name(const std::string& id) {
  std::string s;
  for (char c : id) s += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
  return s.empty() ? "eye" : s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(nan_to_null(v[i]));
  return a;
}

// ---- fit -------------------------------------------------------------------

struct FitCmd {
  std::string model = "spatial-cp";
  std::string data;
  std::string out;
  std::string eye;
  int holdout = 0;
  int threads = 0;
  ScaleConfig scale;
  McmcFlags mcmc;
  HyperFlags hyper;
  GraphFlags graph;
};

json fit_diagnostics(const PosteriorSamples& samples, const VFSeries& fit_series,
                     const VFSeries& full, int holdout) {
  json d;
  d["eye_id"] = samples.eye_id;
  d["model"] = std::string(variant_name(samples.variant));
  try {
    const FitDiagnostics f = dic(samples, fit_series);
    d["dic"] = nan_to_null(f.dic);
    d["p_d"] = nan_to_null(f.p_d);
    d["excluded_draws"] = f.excluded_draws;
  } catch (const NumericalError& e) {
    d["dic"] = nullptr;
    d["p_d"] = nullptr;
    d["dic_error"] = e.what();
  }
  json by_visit = json::array();
  double last = std::nan("");
  for (int k = fit_series.visits(); k < full.visits(); ++k) {
    last = mspe(samples, full.times[k], full.obs.col(k));
    by_visit.push_back({{"time_days", full.times[k] * full.days_per_year + full.time_offset_days},
                        {"mspe", nan_to_null(last)}});
  }
  d["mspe"] = holdout > 0 ? nan_to_null(last) : json(nullptr);
  d["mspe_by_visit"] = by_visit;
  try {
    d["geweke_max_abs_z"] = nan_to_null(geweke_max_abs_z(samples));
  } catch (const ValidationError& e) {
    d["geweke_max_abs_z"] = nullptr;
    d["geweke_error"] = e.what();
  }
  const ProgressionMetric pm = progression_metric(samples);
  d["max_metric"] = pm.max_metric;
  d["per_site_p"] = vec_json(pm.p);
  d["site_ids"] = samples.site_ids;
  json acc = json::object();
  for (const auto& [k, v] : samples.acceptance) acc[k] = nan_to_null(v);
  d["acceptance"] = acc;
  return d;
}

int run_fit(const FitCmd& c, const std::vector<std::string>& args) {
  ModelSpec base;
  base.variant = parse_variant(c.model);
  base.hyper = c.hyper.h;
  base.mcmc = c.mcmc.resolve(false);
  if (c.holdout < 0) throw ValidationError("--holdout must be non-negative");
  const SpatialGraph graph = c.graph.load();
  std::vector<VFSeries> eyes = load_vf_csv(c.data, c.scale);
  if (!c.eye.empty()) {
    std::erase_if(eyes, [&](const VFSeries& s) { return s.eye_id != c.eye; });
    if (eyes.empty()) throw ValidationError("eye " + c.eye + " is not in " + c.data);
  }
  for (const auto& s : eyes) {
    check_sites(s, graph);
    if (s.visits() - c.holdout < 2)
      throw ValidationError("eye " + s.eye_id + " has " + std::to_string(s.visits()) +
                            " visits; at least two must remain after --holdout");
  }
  const json inputs = {{"data", {{"path", c.data}, {"sha256", sha256_file(c.data)}}},
                       {"angles", c.graph.describe()}};
  const bool multi = eyes.size() > 1;
  std::vector<std::string> errors(eyes.size());
  std::vector<int> codes(eyes.size(), 0);
  std::vector<json> reports(eyes.size());
  const int threads = c.threads > 0 ? c.threads : default_thread_count();
  detail::run_pool(static_cast<int>(eyes.size()), threads, [&](int k) {
    const VFSeries& full = eyes[k];
    try {
      const VFSeries fit_series = full.first_visits(full.visits() - c.holdout);
      ModelSpec spec = base;
      if (multi) spec.mcmc.seed = split_seed(base.mcmc.seed, static_cast<std::uint64_t>(k));
      const PosteriorSamples samples = fit(spec, fit_series, graph);
      const fs::path dir = multi ? fs::path(c.out) / safe_name(full.eye_id) : fs::path(c.out);
      json extra = {{"command", join_args(args)},
                    {"argv", args},
                    {"inputs", inputs},
                    {"holdout_visits", c.holdout},
                    {"master_seed", base.mcmc.seed}};
      write_samples_dir(dir.string(), samples, extra);
      reports[k] = fit_diagnostics(samples, fit_series, full, c.holdout);
      auto out = open_out(dir / "diagnostics.json");
      out << reports[k].dump(2) << '\n';
      emit_fit_plot_data(samples, fit_series, graph, (dir / "fit_plot.csv").string());
    } catch (const ValidationError& e) {
      errors[k] = e.what();
      codes[k] = 1;
    } catch (const std::exception& e) {
      errors[k] = e.what();
      codes[k] = 2;
    }
  });
  int code = 0;
  for (std::size_t k = 0; k < eyes.size(); ++k) {
    if (codes[k] != 0) {
      std::cerr << "eye " << eyes[k].eye_id << ": " << errors[k] << '\n';
      code = std::max(code, codes[k]);
      continue;
    }
    const json& r = reports[k];
    std::cout << "eye " << eyes[k].eye_id << ": " << r["model"].get<std::string>()
              << " dic=" << r["dic"].dump() << " max_metric=" << fmt(r["max_metric"].get<double>())
              << " geweke_max_abs_z=" << r["geweke_max_abs_z"].dump() << '\n';
  }
  return code;
}

// ---- predict ---------------------------------------------------------------

struct PredictCmd {
  std::string samples;
  std::vector<double> horizons{1.0};
  std::string out;
  std::uint64_t seed = 1;
};

int run_predict(const PredictCmd& c) {
  const PosteriorSamples s = read_samples_dir(c.samples);
  if (s.draws() < 2) throw ValidationError("samples have fewer than two draws");
  fs::path out_path = c.out.empty() ? fs::path(c.samples) / "predictions.csv" : fs::path(c.out);
  auto out = open_out(out_path);
  out << "site_id,horizon_years,time_days,mean_db,pred_lo_db,pred_hi_db,p_cp\n";
  Rng rng(c.seed);
  for (double h : c.horizons) {
    if (!(h >= 0)) throw ValidationError("--horizon must be non-negative");
    const double x = s.x_nu() + h;
    const Eigen::VectorXd mean = predictive_mean(s, x);
    const Eigen::VectorXd p = cp_probability(s, x);
    for (int i = 0; i < s.sites(); ++i) {
      Eigen::VectorXd y(s.draws());
      for (int d = 0; d < s.draws(); ++d) {
        SiteParams sp = SiteParams::from_row(s.Phi[d].row(i), s.x1(), s.x_nu());
        sp.theta = predictive_cp(sp.eta, s.x1(), s.x_nu(), x);
        const SiteMoments mom = site_moments(sp, x);
        y[d] = std::max(0.0, rng.normal(mom.mu, mom.sigma));
      }
      const auto band = credible_interval(y);
      out << s.site_ids[i] << ',' << fmt(h) << ',' << fmt(x * s.days_per_year + s.time_offset_days)
          << ',' << fmt(mean[i] * s.sens_scale) << ',' << fmt(band.first * s.sens_scale) << ','
          << fmt(band.second * s.sens_scale) << ',' << fmt(p[i]) << '\n';
    }
  }
  std::cout << "wrote " << out_path.string() << '\n';
  return 0;
}

// ---- diagnose --------------------------------------------------------------

struct DiagnoseCmd {
  std::vector<std::string> samples;
  std::string labels;
  std::string out;
};

std::map<std::string, bool> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open labels file " + path);
  std::string line;
  std::getline(in, line);
  if (detail::split_csv_line(line) != std::vector<std::string>{"eye_id", "progressed"})
    throw ValidationError("labels file header must be eye_id,progressed");
  std::map<std::string, bool> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    long long v = 0;
    if (f.size() != 2 || !detail::parse_int(f[1], v) || (v != 0 && v != 1))
      throw ValidationError(path + ": line " + std::to_string(line_no) + " must be eye_id,0|1");
    if (!labels.emplace(f[0], v == 1).second)
      throw ValidationError(path + ": duplicate label for eye " + f[0]);
  }
  return labels;
}

int run_diagnose(const DiagnoseCmd& c) {
  std::map<std::string, bool> labels;
  if (!c.labels.empty()) labels = load_labels(c.labels);
  json eyes = json::array();
  std::vector<double> metric;
  std::vector<bool> label;
  for (const auto& dir : c.samples) {
    const PosteriorSamples s = read_samples_dir(dir);
    const ProgressionMetric pm = progression_metric(s);
    json e = {{"eye_id", s.eye_id},
              {"samples", dir},
              {"model", std::string(variant_name(s.variant))},
              {"max_metric", pm.max_metric},
              {"site_ids", s.site_ids},
              {"per_site_p", vec_json(pm.p)}};
    if (!labels.empty()) {
      const auto it = labels.find(s.eye_id);
      if (it == labels.end()) throw ValidationError("no label for eye " + s.eye_id);
      e["progressed"] = it->second;
      metric.push_back(pm.max_metric);
      label.push_back(it->second);
    }
    eyes.push_back(e);
  }
  json report = {{"eyes", eyes}, {"logistic", nullptr}};
  if (!labels.empty()) {
    const LogisticResult r = logistic_diagnostic(metric, label);
    report["logistic"] = {{"intercept", nan_to_null(r.intercept)},
                          {"slope", nan_to_null(r.slope)},
                          {"slope_se", nan_to_null(r.slope_se)},
                          {"log_lik", nan_to_null(r.log_lik)},
                          {"aic", nan_to_null(r.aic)},
                          {"auc", nan_to_null(r.auc)},
                          {"p_value", nan_to_null(r.p_value)},
                          {"converged", r.converged},
                          {"separated", r.separated}};
  }
  if (c.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    auto out = open_out(c.out);
    out << report.dump(2) << '\n';
    std::cout << "wrote " << c.out << '\n';
  }
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateCmd {
  int setting = 5;
  int replicates = 1;
  int visits = 21;
  std::uint64_t seed = 20190101;
  std::string out;
  GraphFlags graph;
};

json setting_json(const SimSetting& s) {
  json sigma = json::array();
  for (Eigen::Index r = 0; r < s.Sigma.rows(); ++r) sigma.push_back(vec_json(s.Sigma.row(r).transpose()));
  return {{"id", s.id},
          {"description", s.description},
          {"delta", vec_json(s.delta)},
          {"Sigma", sigma},
          {"alpha", s.alpha},
          {"rho", s.rho},
          {"correlation_shrink", s.correlation_shrink}};
}

int run_simulate(const SimulateCmd& c, const std::vector<std::string>& args) {
  if (c.replicates < 1) throw ValidationError("--replicates must be positive");
  const SimSetting setting = sim_setting(c.setting);
  if (c.visits < 2 || c.visits > static_cast<int>(sim_times().size()))
    throw ValidationError("--visits must lie in [2, " + std::to_string(sim_times().size()) + "]");
  const SpatialGraph graph = c.graph.load();
  fs::create_directories(c.out);
  auto truth = open_out(fs::path(c.out) / "truth.csv");
  truth << "eye_id,setting,replicate,site_id,beta0,beta1,lambda0,lambda1,eta,theta\n";
  std::vector<VFSeries> eyes;
  for (int rep = 0; rep < c.replicates; ++rep) {
    const std::uint64_t seed =
        split_seed(c.seed, static_cast<std::uint64_t>(setting.id) * 1000003ULL + rep);
    SimData d = generate_setting(setting, graph, seed);
    VFSeries s = d.series.first_visits(c.visits);
    char id[32];
    std::snprintf(id, sizeof(id), "s%d_r%03d", setting.id, rep);
    s.eye_id = id;
    s.sens_scale = 10.0;
    s.days_per_year = 365.25;
    s.time_offset_days = 0.0;
    for (int i = 0; i < s.sites(); ++i) {
      truth << s.eye_id << ',' << setting.id << ',' << rep << ',' << s.site_ids[i];
      for (int e = 0; e < kNumEffects; ++e) truth << ',' << fmt(d.truth(i, e));
      truth << ',' << fmt(observed_cp(d.truth(i, kEta), s.first_time(), s.last_time())) << '\n';
    }
    eyes.push_back(std::move(s));
  }
  write_vf_csv((fs::path(c.out) / "data.csv").string(), eyes);
  json meta = {{"command", join_args(args)},
               {"argv", args},
               {"seed", c.seed},
               {"seed_rule", "split_seed(seed, setting * 1000003 + replicate)"},
               {"setting", setting_json(setting)},
               {"visits", c.visits},
               {"angles", c.graph.describe()},
               {"truth_scale", "model scale: sensitivity dB / 10, time in years"}};
  auto out = open_out(fs::path(c.out) / "meta.json");
  out << meta.dump(2) << '\n';
  std::cout << "wrote " << c.replicates << " eyes to " << c.out << '\n';
  return 0;
}

// ---- study -----------------------------------------------------------------

struct StudyCmd {
  std::vector<int> settings;
  int replicates = 50;
  std::vector<std::string> models;
  int fit_visits = 14;
  std::vector<double> horizons;
  bool fixed_phi = false;
  int threads = 0;
  std::string out;
  McmcFlags mcmc;
  GraphFlags graph;
};

void write_study(const SimResult& r, const fs::path& dir, const json& meta) {
  fs::create_directories(dir);
  const auto& cfg = r.config;
  {
    auto f = open_out(dir / "fits.csv");
    f << "setting,replicate,model,ok,dic,p_d";
    for (double h : cfg.horizons) f << ",mspe_" << fmt(h);
    f << ",max_metric,seconds,error\n";
    for (const auto& x : r.fits) {
      f << x.setting << ',' << x.replicate << ',' << variant_name(x.model) << ',' << (x.ok ? 1 : 0)
        << ',' << fmt(x.dic) << ',' << fmt(x.p_d);
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
        f << ',' << (h < x.mspe.size() ? fmt(x.mspe[h]) : "");
      std::string err = x.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      f << ',' << fmt(x.max_metric) << ',' << fmt(x.seconds) << ',' << err << '\n';
    }
  }
  {
    auto f = open_out(dir / "table2_dic.csv");
    f << "setting,model,n_ok,n_failed,dic,p_d\n";
    for (const auto& s : r.summary)
      f << s.setting << ',' << variant_name(s.model) << ',' << s.n_ok << ',' << s.n_failed << ','
        << fmt(s.dic) << ',' << fmt(s.p_d) << '\n';
  }
  if (!cfg.horizons.empty()) {
    auto f = open_out(dir / "table3_mspe.csv");
    f << "setting,model,horizon,mspe\n";
    for (const auto& s : r.summary)
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
        f << s.setting << ',' << variant_name(s.model) << ',' << fmt(cfg.horizons[h]) << ','
          << fmt(s.mspe[h]) << '\n';
  }
  {
    auto f = open_out(dir / (r.fixed_phi.size() > 0 ? "tableC1_estimates.csv" : "table4_estimates.csv"));
    f << "setting,model,estimand,bias,bias_sd,mse,mse_sd,ec,ec_sd,n\n";
    auto row = [&](const ModelSummary& s, const char* name, const EstimandSummary& e) {
      f << s.setting << ',' << variant_name(s.model) << ',' << name << ',' << fmt(e.bias) << ','
        << fmt(e.bias_sd) << ',' << fmt(e.mse) << ',' << fmt(e.mse_sd) << ',' << fmt(e.ec) << ','
        << fmt(e.ec_sd) << ',' << e.n << '\n';
    };
    for (const auto& s : r.summary) {
      if (s.has_theta) row(s, "theta", s.theta);
      if (s.has_eta) row(s, "eta", s.eta);
    }
  }
  {
    // Per-replicate orderings against the spatial model.
    auto f = open_out(dir / "comparisons.csv");
    f << "setting,model,metric,fraction_spatial_better,n\n";
    std::vector<int> settings;
    for (const auto& s : r.summary)
      if (std::find(settings.begin(), settings.end(), s.setting) == settings.end())
        settings.push_back(s.setting);
    for (int setting : settings) {
      const auto spatial = r.fits_for(setting, Variant::kSpatialCP);
      if (spatial.empty()) continue;
      for (Variant m : cfg.models) {
        if (m == Variant::kSpatialCP) continue;
        const auto other = r.fits_for(setting, m);
        auto compare = [&](const std::string& name, auto better) {
          int n = 0, wins = 0;
          for (std::size_t k = 0; k < std::min(spatial.size(), other.size()); ++k) {
            if (!spatial[k]->ok || !other[k]->ok) continue;
            ++n;
            if (better(*spatial[k], *other[k])) ++wins;
          }
          f << setting << ',' << variant_name(m) << ',' << name << ','
            << fmt(n > 0 ? static_cast<double>(wins) / n : std::nan("")) << ',' << n << '\n';
        };
        compare("dic_lower", [](const ReplicateFit& a, const ReplicateFit& b) { return a.dic < b.dic; });
        for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
          compare("mspe_" + fmt(cfg.horizons[h]) + "_not_higher",
                  [h](const ReplicateFit& a, const ReplicateFit& b) { return a.mspe[h] <= b.mspe[h]; });
      }
    }
  }
  if (r.fixed_phi.size() > 0) {
    auto f = open_out(dir / "fixed_phi.csv");
    f << "row,beta0,beta1,lambda0,lambda1,eta\n";
    for (Eigen::Index i = 0; i < r.fixed_phi.rows(); ++i) {
      f << i;
      for (int e = 0; e < kNumEffects; ++e) f << ',' << fmt(r.fixed_phi(i, e));
      f << '\n';
    }
  }
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

int run_study_cmd(const StudyCmd& c, const std::vector<std::string>& args) {
  StudyConfig cfg;
  cfg.n_replicates = c.replicates;
  cfg.fit_visits = c.fit_visits;
  cfg.mcmc = c.mcmc.resolve(true);
  cfg.seed = c.mcmc.seed;
  cfg.threads = c.threads;
  if (!c.settings.empty()) cfg.settings = c.settings;
  if (!c.horizons.empty()) cfg.horizons = c.horizons;
  if (!c.models.empty()) {
    cfg.models.clear();
    for (const auto& m : c.models) cfg.models.push_back(parse_variant(m));
  } else if (c.fixed_phi) {
    cfg.models = {Variant::kSpatialCP, Variant::kNonspatialC};
  }
  if (c.fixed_phi) cfg.horizons.clear();
  const SpatialGraph graph = c.graph.load();
  const SimResult r = c.fixed_phi ? fixed_phi_study(cfg, graph) : run_study(cfg, graph);
  json models = json::array();
  for (Variant m : cfg.models) models.push_back(std::string(variant_name(m)));
  json settings = json::array();
  if (c.fixed_phi) {
    settings.push_back(setting_json(fixed_phi_setting()));
  } else {
    for (int id : cfg.settings) settings.push_back(setting_json(sim_setting(id)));
  }
  const json meta = {{"command", join_args(args)},
                     {"argv", args},
                     {"seed", cfg.seed},
                     {"replicates", cfg.n_replicates},
                     {"fit_visits", c.fixed_phi ? 21 : cfg.fit_visits},
                     {"horizons", cfg.horizons},
                     {"models", models},
                     {"settings", settings},
                     {"fixed_phi", c.fixed_phi},
                     {"fixed_phi_index", r.fixed_phi_index},
                     {"mcmc",
                      {{"n_iter", cfg.mcmc.n_iter}, {"n_burn", cfg.mcmc.n_burn}, {"n_thin", cfg.mcmc.n_thin}}},
                     {"angles", c.graph.describe()}};
  write_study(r, c.out, meta);
  int failed = 0;
  for (const auto& s : r.summary) {
    failed += s.n_failed;
    std::cout << "setting " << s.setting << " " << variant_name(s.model) << ": ok=" << s.n_ok
              << " dic=" << fmt(s.dic);
    if (s.has_theta) std::cout << " theta bias=" << fmt(s.theta.bias) << " ec=" << fmt(s.theta.ec);
    if (s.has_eta) std::cout << " eta mse=" << fmt(s.eta.mse);
    std::cout << '\n';
  }
  if (failed > 0) std::cerr << failed << " fits failed; see fits.csv\n";
  std::cout << "wrote " << c.out << '\n';
  return 0;
}

// ---- heatmap ---------------------------------------------------------------

struct HeatmapCmd {
  std::string samples;
  std::string out;
  double step = 0.1;
  double future = 1.0;
  GraphFlags graph;
};

int run_heatmap(const HeatmapCmd& c) {
  const PosteriorSamples s = read_samples_dir(c.samples);
  const SpatialGraph graph = c.graph.load();
  const Eigen::VectorXd times = heatmap_grid(s.x1(), s.x_nu(), c.step, c.future);
  const auto frames = emit_heatmap_frames(s, graph, times, c.out);
  std::cout << "wrote " << frames.size() << " frames to " << c.out << '\n';
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& raw_args) {
  CLI::App app{"Spatially varying change-point models for visual-field series"};
  app.name("spcp");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "spcp 0.1.0");
  const std::string config_help =
      "JSON object of flag names to values; flags after it on the command line override it";
  std::string config_path;  // expanded before parsing; declared for --help

  FitCmd fit_c;
  auto* fit = app.add_subcommand("fit", "fit one model to every eye of a data file");
  fit->add_option("--config", config_path, config_help);
  fit->add_option("--model", fit_c.model, "spatial-cp, ns-latent, ns-cont, ns-disc or plr")
      ->capture_default_str();
  fit->add_option("--data", fit_c.data,
                  "eye_id,visit_index,visit_time_days,site_id,sensitivity_db CSV")
      ->required();
  fit->add_option("--out", fit_c.out, "output directory (one subdirectory per eye if several)")
      ->required();
  fit->add_option("--eye", fit_c.eye, "fit only this eye");
  fit->add_option("--holdout", fit_c.holdout, "hold out the last n visits and report their MSPE")
      ->capture_default_str();
  fit->add_option("--threads", fit_c.threads, "eyes fitted in parallel (0: SPCP_THREADS or all cores)");
  fit->add_option("--sens-scale", fit_c.scale.sens_scale, "model value = dB / this")->capture_default_str();
  fit->add_option("--days-per-year", fit_c.scale.days_per_year)->capture_default_str();
  fit_c.mcmc.add(fit, false);
  fit_c.hyper.add(fit);
  fit_c.graph.add(fit);

  PredictCmd pred_c;
  auto* pred = app.add_subcommand("predict", "posterior predictive summaries beyond the last visit");
  pred->add_option("--config", config_path, config_help);
  pred->add_option("--samples", pred_c.samples, "directory written by fit")->required();
  pred->add_option("--horizon", pred_c.horizons, "years after the last fitted visit (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str();
  pred->add_option("--out", pred_c.out, "CSV path (default: <samples>/predictions.csv)");
  pred->add_option("--seed", pred_c.seed, "seed for predictive draws")->capture_default_str();

  DiagnoseCmd diag_c;
  auto* diag = app.add_subcommand("diagnose", "progression metrics and logistic report over eyes");
  diag->add_option("--config", config_path, config_help);
  diag->add_option("--samples", diag_c.samples, "directory written by fit (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required();
  diag->add_option("--labels", diag_c.labels, "eye_id,progressed CSV with 0/1 labels");
  diag->add_option("--out", diag_c.out, "JSON report path (default: stdout)");

  SimulateCmd sim_c;
  auto* sim = app.add_subcommand("simulate", "simulate eyes from a study setting");
  sim->add_option("--config", config_path, config_help);
  sim->add_option("--setting", sim_c.setting, "1 progressing, 2 stable, 3-5 see README")
      ->capture_default_str();
  sim->add_option("--replicates", sim_c.replicates)->capture_default_str();
  sim->add_option("--visits", sim_c.visits, "visits written, from 0 in steps of 0.05 years")
      ->capture_default_str();
  sim->add_option("--seed", sim_c.seed)->capture_default_str();
  sim->add_option("--out", sim_c.out, "output directory")->required();
  sim_c.graph.add(sim);

  StudyCmd study_c;
  auto* study = app.add_subcommand("study", "simulation study with report tables");
  study->add_option("--config", config_path, config_help);
  study->add_option("--setting", study_c.settings, "setting id, repeatable (default 5)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  study->add_option("--replicates", study_c.replicates)->capture_default_str();
  study->add_option("--model", study_c.models,
                    "repeatable (default spatial-cp, ns-latent, plr; with --fixed-phi spatial-cp, ns-cont)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  study->add_option("--fit-visits", study_c.fit_visits)->capture_default_str();
  study->add_option("--horizon", study_c.horizons, "held-out visit times in years (default 0.75, 1.0)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  study->add_flag("--fixed-phi", study_c.fixed_phi, "one fixed Phi, data re-simulated per replicate");
  study->add_option("--threads", study_c.threads, "worker threads (0: SPCP_THREADS or all cores)");
  study->add_option("--out", study_c.out, "output directory")->required();
  study_c.mcmc.seed = 20190101;
  study_c.mcmc.add(study, true);
  study_c.graph.add(study);

  HeatmapCmd heat_c;
  auto* heat = app.add_subcommand("heatmap", "per-site change-point probability frames");
  heat->add_option("--config", config_path, config_help);
  heat->add_option("--samples", heat_c.samples, "directory written by fit")->required();
  heat->add_option("--out", heat_c.out, "frame directory")->required();
  heat->add_option("--step", heat_c.step, "years between frames")->capture_default_str();
  heat->add_option("--future", heat_c.future, "years past the last visit")->capture_default_str();
  heat_c.graph.add(heat);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }
    if (*fit) return run_fit(fit_c, raw_args);
    if (*pred) return run_predict(pred_c);
    if (*diag) return run_diagnose(diag_c);
    if (*sim) return run_simulate(sim_c, raw_args);
    if (*study) return run_study_cmd(study_c, raw_args);
    if (*heat) return run_heatmap(heat_c);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args);
}

}  // namespace spcp

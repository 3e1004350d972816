#include "spcp/cli.hpp"
#include "spcp/diagnostics.hpp"
#include "spcp/error.hpp"
#include "spcp/io.hpp"
#include "spcp/model_variants.hpp"
#include "spcp/simulation.hpp"
#include "spcp/spatial_graph.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace spcp;

namespace {

// draws x sites x 5, row-major copy.
py::array_t<double> phi_array(const PosteriorSamples& s) {
  py::array_t<double> out({s.draws(), s.sites(), kNumEffects});
  auto a = out.mutable_unchecked<3>();
  for (int d = 0; d < s.draws(); ++d)
    for (int i = 0; i < s.sites(); ++i)
      for (int k = 0; k < kNumEffects; ++k) a(d, i, k) = s.Phi[d](i, k);
  return out;
}

py::array_t<double> sigma_array(const PosteriorSamples& s) {
  py::array_t<double> out({s.draws(), kNumEffects, kNumEffects});
  auto a = out.mutable_unchecked<3>();
  for (int d = 0; d < s.draws(); ++d)
    for (int j = 0; j < kNumEffects; ++j)
      for (int k = 0; k < kNumEffects; ++k) a(d, j, k) = s.Sigma[d](j, k);
  return out;
}

Eigen::MatrixXd delta_array(const PosteriorSamples& s) {
  Eigen::MatrixXd out(s.draws(), kNumEffects);
  for (int d = 0; d < s.draws(); ++d) out.row(d) = s.delta[d].transpose();
  return out;
}

McmcConfig mcmc_from(const std::string& scale, long n_iter, long n_burn, long n_thin, std::uint64_t seed) {
  if (scale != "paper" && scale != "desk") throw ValidationError("scale must be 'paper' or 'desk'");
  McmcConfig c = scale == "paper" ? McmcConfig::paper_scale() : McmcConfig::desk_scale();
  if (n_iter > 0) c.n_iter = n_iter;
  if (n_burn >= 0) c.n_burn = n_burn;
  if (n_thin > 0) c.n_thin = n_thin;
  c.seed = seed;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<VFSeries>(m, "VFSeries")
      .def_static("from_observations", &VFSeries::from_observations, py::arg("eye_id"),
                  py::arg("site_ids"), py::arg("times"), py::arg("obs"))
      .def_readonly("eye_id", &VFSeries::eye_id)
      .def_readonly("site_ids", &VFSeries::site_ids)
      .def_readonly("times", &VFSeries::times)
      .def_readonly("obs", &VFSeries::obs)
      .def_property_readonly("sites", &VFSeries::sites)
      .def_property_readonly("visits", &VFSeries::visits)
      .def("first_visits", &VFSeries::first_visits, py::arg("n"));

  py::class_<SpatialGraph>(m, "SpatialGraph")
      .def_property_readonly("size", &SpatialGraph::size)
      .def_property_readonly("edges", &SpatialGraph::edges)
      .def_property_readonly("dissim", &SpatialGraph::dissim)
      .def_property_readonly("site_ids", &SpatialGraph::site_ids)
      .def_property_readonly("blind_spot_ids", &SpatialGraph::blind_spot_ids);

  m.def("standard_graph", [] { return build_vf_graph(standard_vf_layout()); },
        "24-2 lattice with the built-in synthetic angles.");
  m.def("graph_from_angle_csv", [](const std::string& path, double scale) {
        return build_vf_graph(load_angle_csv(path), scale);
      }, py::arg("path"), py::arg("dissim_scale") = kDefaultDissimScale);
  m.def("load_vf_csv", [](const std::string& path, double sens_scale) {
        ScaleConfig sc;
        sc.sens_scale = sens_scale;
        return load_vf_csv(path, sc);
      }, py::arg("path"), py::arg("sens_scale") = 10.0);

  py::class_<PosteriorSamples>(m, "PosteriorSamples")
      .def_property_readonly("variant", [](const PosteriorSamples& s) { return std::string(variant_name(s.variant)); })
      .def_readonly("eye_id", &PosteriorSamples::eye_id)
      .def_readonly("site_ids", &PosteriorSamples::site_ids)
      .def_readonly("times", &PosteriorSamples::times)
      .def_readonly("acceptance", &PosteriorSamples::acceptance)
      .def_readonly("alpha", &PosteriorSamples::alpha)
      .def_property_readonly("draws", &PosteriorSamples::draws)
      .def_property_readonly("phi", &phi_array)
      .def_property_readonly("delta", &delta_array)
      .def_property_readonly("sigma", &sigma_array)
      .def("posterior_mean_phi", &PosteriorSamples::posterior_mean_phi)
      .def("theta_trace", &PosteriorSamples::theta_trace, py::arg("site"));

  m.def("fit", [](const VFSeries& series, const SpatialGraph& graph, const std::string& variant,
                  const std::string& scale, long n_iter, long n_burn, long n_thin, std::uint64_t seed) {
        ModelSpec spec;
        spec.variant = parse_variant(variant);
        spec.mcmc = mcmc_from(scale, n_iter, n_burn, n_thin, seed);
        py::gil_scoped_release release;
        return fit(spec, series, graph);
      }, py::arg("series"), py::arg("graph"), py::arg("variant") = "spatial-cp",
        py::arg("scale") = "desk", py::arg("n_iter") = 0, py::arg("n_burn") = -1,
        py::arg("n_thin") = 0, py::arg("seed") = 1);

  m.def("read_samples_dir", &read_samples_dir, py::arg("dir"));
  m.def("write_samples_dir", [](const std::string& dir, const PosteriorSamples& s) { write_samples_dir(dir, s); },
        py::arg("dir"), py::arg("samples"));

  m.def("dic", [](const PosteriorSamples& s, const VFSeries& series) {
        const auto d = dic(s, series);
        py::dict out;
        out["dic"] = d.dic;
        out["p_d"] = d.p_d;
        out["mean_deviance"] = d.mean_deviance;
        out["deviance_at_mean"] = d.deviance_at_mean;
        out["excluded_draws"] = d.excluded_draws;
        return out;
      }, py::arg("samples"), py::arg("series"));
  m.def("mspe", &mspe, py::arg("samples"), py::arg("x"), py::arg("heldout"));
  m.def("predictive_mean", &predictive_mean, py::arg("samples"), py::arg("x"));
  m.def("cp_probability", &cp_probability, py::arg("samples"), py::arg("t"));
  m.def("max_metric", [](const PosteriorSamples& s) { return progression_metric(s).max_metric; });
  m.def("geweke", &geweke, py::arg("chain"));
  m.def("auc", &auc, py::arg("metric"), py::arg("label"));

  m.def("simulate", [](int setting, std::uint64_t seed, int visits) {
        const auto graph = build_vf_graph(standard_vf_layout());
        auto data = generate_setting(sim_setting(setting), graph, seed);
        return py::make_tuple(data.series.first_visits(visits), data.truth);
      }, py::arg("setting"), py::arg("seed") = 1, py::arg("visits") = 21,
      "(series, true Phi) for one synthetic eye on the standard lattice (model scale).");

  m.def("cli", [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli_main(args);
      }, py::arg("args"), "Runs the spcp command line with `args` (without the program name).");
}

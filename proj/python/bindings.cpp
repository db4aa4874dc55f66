// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "zsharp/convergence.hpp"
#include "zsharp/datasets.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/harness.hpp"
#include "zsharp/run_config.hpp"
#include "zsharp/sam.hpp"
#include "zsharp/zfilter.hpp"

namespace py = pybind11;
using namespace zsharp;

namespace {

using Layers = std::vector<std::vector<double>>;

GradientSet to_gradients(const Layers& layers) {
  GradientSet g;
  for (std::size_t i = 0; i < layers.size(); ++i) g.add("l" + std::to_string(i), {layers[i].size()}, FlatVec(layers[i]));
  return g;
}

Layers to_lists(const GradientSet& g) {
  Layers out;
  for (const auto& layer : g.layers()) out.emplace_back(layer.values.begin(), layer.values.end());
  return out;
}

FilterConfig make_filter(double qp, const std::string& scope) {
  FilterConfig cfg{qp, parse_scope(scope)};
  cfg.validate();
  return cfg;
}

py::dict filter_gradient_py(const Layers& layers, double qp, const std::string& scope) {
  const auto out = filter_gradient(to_gradients(layers), make_filter(qp, scope));
  py::dict d;
  d["filtered"] = to_lists(out.filtered);
  d["mask"] = out.mask.bits;
  d["kept_count"] = out.mask.kept_count;
  d["thresholds"] = out.thresholds;
  d["filtered_norm"] = out.filtered_norm;
  return d;
}

py::dict compute_perturbation_py(const Layers& layers, double rho, std::optional<double> qp, const std::string& scope) {
  const auto cfg = qp ? AscentConfig::zsharp(rho, make_filter(*qp, scope)) : AscentConfig::sam(rho);
  const auto p = compute_perturbation(to_gradients(layers), cfg);
  py::dict d;
  d["epsilon"] = to_lists(p.epsilon);
  d["fell_back"] = p.fell_back;
  d["source_norm"] = p.source_norm;
  if (p.filter) d["kept_count"] = p.filter->mask.kept_count;
  return d;
}

py::dict train_py(const std::map<std::string, std::string>& settings) {
  ConfigBuilder builder;
  for (const auto& [k, v] : settings) builder.set(k, v);
  const auto result = train(builder.build());

  py::list epochs;
  for (const auto& e : result.epochs) {
    py::dict row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["test_acc"] = e.test_acc;
    row["grad_norm"] = e.grad_norm;
    row["kept_fraction"] = e.kept_fraction;
    row["sharpness"] = e.sharpness;
    epochs.append(row);
  }
  py::dict d;
  d["ok"] = result.ok();
  d["error"] = result.error;
  d["epochs"] = epochs;
  d["final_train_loss"] = result.summary.final_train_loss;
  d["final_train_acc"] = result.summary.final_train_acc;
  d["final_test_acc"] = result.summary.final_test_acc;
  d["final_sharpness"] = result.summary.final_sharpness;
  d["mean_kept_fraction"] = result.summary.mean_kept_fraction;
  d["config_hash"] = config_hash(result.config);
  return d;
}

py::dict verify_constant_step_py(const std::vector<double>& diag, double eta, double r, std::size_t T, double qp,
                            const std::vector<double>& w0, bool normalized) {
  const auto rep = verify_constant_step(QuadraticProblem::diagonal(diag), eta, r, T,
                                   normalized ? AscentVariant::Normalized : AscentVariant::Unnormalized,
                                   make_filter(qp, "global"), FlatVec(w0));
  py::dict d;
  d["lhs"] = rep.lhs;
  d["rhs"] = rep.rhs;
  d["beta"] = rep.beta;
  d["satisfied"] = rep.satisfied;
  d["final_w"] = std::vector<double>(rep.final_w.begin(), rep.final_w.end());
  return d;
}

py::tuple gen_two_moons_py(std::size_t n, double noise, std::uint64_t seed) {
  const auto ds = gen_two_moons(n, noise, seed);
  std::vector<std::vector<double>> x;
  for (std::size_t i = 0; i < ds.size(); ++i) x.emplace_back(ds.row(i).begin(), ds.row(i).end());
  return py::make_tuple(x, ds.labels());
}

}  // namespace

PYBIND11_MODULE(_zsharp, m) {
  m.doc() = "Z-score filtered sharpness-aware minimization";
  m.attr("__version__") = kLibraryVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def("norm2", [](const std::vector<double>& v) { return norm2(v); }, py::arg("values"));
  m.def("percentile_threshold", [](const std::vector<double>& v, double qp) { return percentile_threshold(v, qp); },
        py::arg("values"), py::arg("qp"),
        "Nearest-rank percentile; -inf when floor(qp * n) == 0.");
  m.def("filter_gradient", &filter_gradient_py, py::arg("layers"), py::arg("qp") = 0.95,
        py::arg("scope") = "global", "Z-score filter a list of gradient layers.");
  m.def("compute_perturbation", &compute_perturbation_py, py::arg("layers"), py::arg("rho") = 0.05,
        py::arg("qp") = py::none(), py::arg("scope") = "global",
        "SAM perturbation, or the ZSharp one when qp is given.");
  m.def("train", &train_py, py::arg("settings") = std::map<std::string, std::string>{},
        "Train with dot-path settings, e.g. {'optimizer.kind': 'zsharp'}.");
  m.def("config_keys", [] {
    std::map<std::string, std::string> out;
    for (const auto& k : ConfigBuilder::keys()) out[k.name] = k.default_value;
    return out;
  });
  m.def("verify_constant_step", &verify_constant_step_py, py::arg("diag"), py::arg("eta"), py::arg("r"), py::arg("T"),
        py::arg("qp"), py::arg("w0"), py::arg("normalized") = false);
  m.def("gen_two_moons", &gen_two_moons_py, py::arg("n"), py::arg("noise") = 0.1, py::arg("seed") = 0);
}

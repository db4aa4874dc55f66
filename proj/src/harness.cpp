// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

namespace zsharp {

double sharpness_probe(const LossFn& loss_fn, const ParamSet& w, double rho, double delta) {
  if (!(rho > 0.0)) throw ConfigError("sharpness probe radius must be positive");
  const auto at_w = loss_fn(w);
  const auto eps = scale_to_radius(at_w.grad, rho, delta);
  const auto at_peak = loss_fn(ascend(w, eps));
  return at_peak.loss - at_w.loss;
}

namespace {

std::unique_ptr<BaseOptimizer> make_base_optimizer(const RunConfig& cfg) {
  if (cfg.base == BaseKind::AdamW) return std::make_unique<AdamW>(cfg.adamw);
  return std::make_unique<Sgd>(cfg.sgd);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunResult train(const RunConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  const auto data = prepare_data(cfg.data);
  const auto spec = model_spec(cfg, data.train);
  ParamSet w = init_params(spec);
  auto base = make_base_optimizer(cfg);
  const BatchPlan plan{cfg.batch_size, derive_seed(cfg.seed, 2), cfg.drop_last};
  if (cfg.drop_last && cfg.batch_size > data.train.size()) {
    throw ConfigError("train.batch_size exceeds the training set while train.drop_last is set");
  }

  RunResult result;
  result.config = cfg;
  result.summary.init_param_hash = param_hash(w);
  const auto full_train = make_loss_fn(spec, data.train);

  std::size_t step = 0;
  try {
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr = lr_at(cfg.schedule, epoch);
      const auto batches = minibatches(data.train.size(), plan, epoch);

      double loss_sum = 0.0;
      double grad_sum = 0.0;
      double kept_sum = 0.0;
      for (const auto& batch : batches) {
        const auto loss_fn = make_loss_fn(spec, data.train, batch);
        const auto report = cfg.kind == OptimizerKind::Base ? base_step(loss_fn, w, *base, lr, step)
                                                            : sam_step(loss_fn, w, *base, *cfg.ascent, lr, step);
        ++step;
        loss_sum += report.loss;
        grad_sum += report.grad_norm;
        if (report.kept_fraction) kept_sum += *report.kept_fraction;
      }

      const double nb = static_cast<double>(batches.size());
      EpochMetrics m;
      m.epoch = epoch;
      m.train_loss = loss_sum / nb;
      m.grad_norm = grad_sum / nb;
      if (cfg.kind == OptimizerKind::ZSharp) m.kept_fraction = kept_sum / nb;
      m.test_acc = predict_accuracy(spec, w, data.test);
      const bool last = epoch + 1 == cfg.epochs;
      const bool probe = last || (cfg.probe_every > 0 && (epoch + 1) % cfg.probe_every == 0);
      if (probe) m.sharpness = sharpness_probe(full_train, w, cfg.probe_rho);
      result.epochs.push_back(m);
    }
  } catch (const DivergenceError& e) {
    result.error = e.what();
  } catch (const NumericError& e) {
    result.error = "numerical divergence at step " + std::to_string(step) + ": " + e.what();
  }

  auto& s = result.summary;
  if (!result.epochs.empty()) {
    const auto& last = result.epochs.back();
    s.final_train_loss = last.train_loss;
    s.final_test_acc = last.test_acc;
    s.final_sharpness = last.sharpness;
    if (cfg.kind == OptimizerKind::ZSharp) {
      double sum = 0.0;
      for (const auto& e : result.epochs) sum += e.kept_fraction.value_or(0.0);
      s.mean_kept_fraction = sum / static_cast<double>(result.epochs.size());
    }
  }
  if (result.ok()) {
    if (result.epochs.empty()) {
      s.final_train_loss = loss_only(spec, w, data.train);
      s.final_test_acc = predict_accuracy(spec, w, data.test);
    }
    s.final_train_acc = predict_accuracy(spec, w, data.train);
  }
  s.final_param_hash = param_hash(w);
  result.final_params = std::move(w);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (first_error) std::rethrow_exception(first_error);
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(sq / n);
  return a;
}

namespace {

// A run that throws for a reason other than divergence is still recorded
// as a failed cell.
RunResult run_captured(const RunConfig& cfg) {
  try {
    return train(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    RunResult failed;
    failed.config = cfg;
    failed.error = e.what();
    return failed;
  }
}

}  // namespace

SweepResult sweep_qp(const RunConfig& base, const std::vector<double>& qp_values,
                     const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (qp_values.empty()) throw ConfigError("qp list must not be empty");
  if (seeds.empty()) throw ConfigError("seed list must not be empty");

  std::vector<RunConfig> configs;
  for (double qp : qp_values) {
    FilterConfig filter = base.ascent && base.ascent->filter ? *base.ascent->filter : FilterConfig{};
    filter.qp = qp;
    filter.validate();
    RunConfig cfg = with_kind(base, OptimizerKind::ZSharp, filter);
    cfg.ascent->filter = filter;
    for (auto seed : seeds) {
      cfg.seed = seed;
      cfg.validate();
      configs.push_back(cfg);
    }
  }

  SweepResult out;
  out.runs.resize(configs.size());
  run_parallel(configs.size(), jobs, [&](std::size_t i) { out.runs[i] = run_captured(configs[i]); });

  for (std::size_t q = 0; q < qp_values.size(); ++q) {
    SweepRow row;
    row.qp = qp_values[q];
    std::vector<double> acc;
    std::vector<double> loss;
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const auto& run = out.runs[q * seeds.size() + j];
      if (!run.ok()) {
        ++row.runs_failed;
        continue;
      }
      ++row.runs_ok;
      acc.push_back(run.summary.final_test_acc);
      loss.push_back(run.summary.final_train_loss);
    }
    row.test_acc = aggregate(acc);
    row.train_loss = aggregate(loss);
    out.rows.push_back(row);
  }
  return out;
}

CompareResult compare_methods(const RunConfig& base, const std::vector<OptimizerKind>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (methods.empty()) throw ConfigError("method list must not be empty");
  if (seeds.empty()) throw ConfigError("seed list must not be empty");

  std::vector<RunConfig> configs;
  for (auto method : methods) {
    for (auto seed : seeds) {
      RunConfig cfg = with_kind(base, method);
      cfg.seed = seed;
      cfg.validate();
      configs.push_back(cfg);
    }
  }

  CompareResult out;
  out.shared_config_hash = config_hash(base, {"optimizer.kind", "train.seed"});
  out.runs.resize(configs.size());
  run_parallel(configs.size(), jobs, [&](std::size_t i) { out.runs[i] = run_captured(configs[i]); });

  for (std::size_t j = 0; j < seeds.size(); ++j) {
    const auto expected = out.runs[j].summary.init_param_hash;
    for (std::size_t m = 1; m < methods.size(); ++m) {
      const auto& run = out.runs[m * seeds.size() + j];
      if (run.ok() && out.runs[j].ok() && run.summary.init_param_hash != expected) {
        throw std::logic_error("paired runs for seed " + std::to_string(seeds[j]) + " start from different weights");
      }
    }
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    CompareRow row;
    row.method = methods[m];
    std::vector<double> acc, loss, sharp, kept;
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const auto& run = out.runs[m * seeds.size() + j];
      if (!run.ok()) {
        ++row.runs_failed;
        continue;
      }
      ++row.runs_ok;
      acc.push_back(run.summary.final_test_acc);
      loss.push_back(run.summary.final_train_loss);
      if (run.summary.final_sharpness) sharp.push_back(*run.summary.final_sharpness);
      if (run.summary.mean_kept_fraction) kept.push_back(*run.summary.mean_kept_fraction);
    }
    row.test_acc = aggregate(acc);
    row.train_loss = aggregate(loss);
    row.sharpness = aggregate(sharp);
    if (methods[m] == OptimizerKind::ZSharp && !kept.empty()) row.mean_kept_fraction = aggregate(kept).mean;
    out.rows.push_back(row);
  }
  return out;
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_metrics_csv(std::ostream& out, const RunResult& result) {
  out << "epoch,train_loss,test_acc,grad_norm,kept_fraction,sharpness\n";
  for (const auto& m : result.epochs) {
    out << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.test_acc) << ','
        << format_double(m.grad_norm) << ',' << opt_field(m.kept_fraction) << ',' << opt_field(m.sharpness) << '\n';
  }
}

void write_manifest(std::ostream& out, const RunResult& result) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format"] = "zsharp-run-manifest";
  doc["format_version"] = 1;
  doc["library_version"] = kLibraryVersion;

  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : describe(result.config)) {
    const auto dot = key.find('.');
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  doc["config"] = config;
  doc["config_hash"] = hex64(config_hash(result.config));
  doc["seed"] = result.config.seed;
  doc["wall_clock_seconds"] = result.wall_seconds;
  doc["status"] = result.ok() ? "ok" : "diverged";
  if (result.error) doc["error"] = *result.error;
  doc["epochs_recorded"] = result.epochs.size();
  doc["train_loss_definition"] = "final-epoch mean of minibatch losses at pre-step weights";

  const auto& s = result.summary;
  ordered_json summary;
  summary["final_train_loss"] = s.final_train_loss;
  summary["final_test_acc"] = s.final_test_acc;
  summary["final_train_acc"] = s.final_train_acc;
  summary["final_sharpness"] = s.final_sharpness ? ordered_json(*s.final_sharpness) : ordered_json(nullptr);
  summary["mean_kept_fraction"] =
      s.mean_kept_fraction ? ordered_json(*s.mean_kept_fraction) : ordered_json(nullptr);
  summary["init_param_hash"] = hex64(s.init_param_hash);
  summary["final_param_hash"] = hex64(s.final_param_hash);
  doc["summary"] = summary;
  out << doc.dump(2) << '\n';
}

void write_run_artifacts(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  std::ofstream manifest(dir / "manifest", std::ios::binary);
  if (!metrics || !manifest) throw FormatError("cannot write run artifacts to " + dir.string());
  write_metrics_csv(metrics, result);
  write_manifest(manifest, result);
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "qp,runs,failed,mean_test_acc,std_test_acc,mean_train_loss,std_train_loss\n";
  for (const auto& r : sweep.rows) {
    out << format_double(r.qp) << ',' << r.runs_ok << ',' << r.runs_failed << ',' << format_double(r.test_acc.mean)
        << ',' << format_double(r.test_acc.std) << ',' << format_double(r.train_loss.mean) << ','
        << format_double(r.train_loss.std) << '\n';
  }
}

void write_compare_csv(std::ostream& out, const CompareResult& cmp) {
  out << "method,runs,failed,mean_test_acc,std_test_acc,mean_train_loss,std_train_loss,"
         "mean_sharpness,std_sharpness,mean_kept_fraction,config_hash\n";
  for (const auto& r : cmp.rows) {
    out << to_string(r.method) << ',' << r.runs_ok << ',' << r.runs_failed << ',' << format_double(r.test_acc.mean)
        << ',' << format_double(r.test_acc.std) << ',' << format_double(r.train_loss.mean) << ','
        << format_double(r.train_loss.std) << ',' << format_double(r.sharpness.mean) << ','
        << format_double(r.sharpness.std) << ',' << opt_field(r.mean_kept_fraction) << ','
        << hex64(cmp.shared_config_hash) << '\n';
  }
}

}  // namespace zsharp

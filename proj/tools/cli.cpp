// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "zsharp/convergence.hpp"
#include "zsharp/datasets.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/harness.hpp"
#include "zsharp/rng.hpp"
#include "zsharp/snapshot.hpp"

namespace zsharp::cli {
namespace {

namespace fs = std::filesystem;

std::string default_out() {
  const char* env = std::getenv("ZSHARP_OUT");
  return env ? env : "";
}

fs::path require_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required (or set ZSHARP_OUT)");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& flag, const std::string& text) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw ConfigError("invalid entry '" + item + "' in " + flag);
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError(flag + " must not be empty");
  return values;
}

/// Every RunConfig key as a `--dot.path` flag; --config file values are
/// applied first and flags override them.
struct RunOptions {
  std::string config_file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key = value config file");
    for (const auto& key : ConfigBuilder::keys()) {
      app.add_option_function<std::string>(
             "--" + key.name, [this, name = key.name](const std::string& v) { overrides[name] = v; }, key.help)
          ->default_str(key.default_value)
          ->type_name("TEXT");
    }
  }

  RunConfig build() const {
    ConfigBuilder builder;
    if (!config_file.empty()) builder.load_file(config_file);
    for (const auto& [k, v] : overrides) builder.set(k, v);
    return builder.build();
  }
};

int cmd_train(const RunOptions& opts, const std::string& out_flag, std::ostream& out) {
  const auto cfg = opts.build();
  const auto dir = require_out(out_flag);
  const auto result = train(cfg);
  write_run_artifacts(dir, result);
  save_params(dir / "params", result.final_params);
  if (!result.ok()) throw DivergenceError(0);
  out << "train: " << result.epochs.size() << " epochs, final test_acc " << format_double(result.summary.final_test_acc)
      << ", final train_loss " << format_double(result.summary.final_train_loss) << '\n';
  return kOk;
}

std::string run_dir_name(const std::string& label, std::uint64_t seed) {
  return label + "_seed" + std::to_string(seed);
}

int cmd_sweep(const RunOptions& opts, const std::string& qp_text, const std::string& seeds_text, std::size_t jobs,
              const std::string& out_flag, std::ostream& out, std::ostream& err) {
  const auto qps = parse_list<double>("--qp", qp_text);
  const auto seeds = parse_list<std::uint64_t>("--seeds", seeds_text);
  const auto cfg = opts.build();
  const auto dir = require_out(out_flag);

  const auto sweep = sweep_qp(cfg, qps, seeds, jobs);
  fs::create_directories(dir);
  for (std::size_t q = 0; q < qps.size(); ++q) {
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const auto& run = sweep.runs[q * seeds.size() + j];
      write_run_artifacts(dir / "runs" / run_dir_name("qp" + format_double(qps[q]), seeds[j]), run);
      if (!run.ok()) err << "sweep: qp " << format_double(qps[q]) << " seed " << seeds[j] << " failed: " << *run.error << '\n';
    }
  }
  std::ofstream csv(dir / "sweep.csv", std::ios::binary);
  write_sweep_csv(csv, sweep);
  write_sweep_csv(out, sweep);

  for (const auto& row : sweep.rows) {
    if (row.runs_failed > 0) return kPartialFailure;
  }
  return kOk;
}

int cmd_compare(const RunOptions& opts, const std::string& methods_text, const std::string& seeds_text,
                std::size_t jobs, const std::string& out_flag, std::ostream& out, std::ostream& err) {
  std::vector<OptimizerKind> methods;
  for (const auto& name : parse_list<std::string>("--methods", methods_text)) methods.push_back(parse_optimizer_kind(name));
  const auto seeds = parse_list<std::uint64_t>("--seeds", seeds_text);
  const auto cfg = opts.build();
  const auto dir = require_out(out_flag);

  const auto cmp = compare_methods(cfg, methods, seeds, jobs);
  fs::create_directories(dir);
  bool failed = false;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const auto& run = cmp.runs[m * seeds.size() + j];
      write_run_artifacts(dir / "runs" / run_dir_name(std::string(to_string(methods[m])), seeds[j]), run);
      if (!run.ok()) {
        failed = true;
        err << "compare: " << to_string(methods[m]) << " seed " << seeds[j] << " failed: " << *run.error << '\n';
      }
    }
  }
  std::ofstream csv(dir / "compare.csv", std::ios::binary);
  write_compare_csv(csv, cmp);
  write_compare_csv(out, cmp);
  return failed ? kPartialFailure : kOk;
}

struct VerifyOptions {
  double beta = 10.0;
  std::string diag;
  std::string w0;
  std::string etas = "0.025,0.01";
  std::string radii = "0.05,0.01";
  std::string qps = "0,0.5,0.95";
  std::size_t constant_T = 200;
  std::string variant = "unnormalized";
  std::vector<std::size_t> checkpoints;
  double eta0 = 0.025;
  double eta_power = 1.0;
  double r0 = 0.05;
  double r_power = 1.0;
  double diminishing_qp = 0.0;
  double threshold = -1.0;
};

int cmd_verify(const VerifyOptions& v, std::ostream& out) {
  const auto diag = v.diag.empty() ? std::vector<double>{1.0, v.beta} : parse_list<double>("--diag", v.diag);
  const auto prob = QuadraticProblem::diagonal(diag);
  const auto etas = parse_list<double>("--eta", v.etas);
  const auto radii = parse_list<double>("--r", v.radii);
  const auto qps = parse_list<double>("--qp", v.qps);
  const FlatVec w0 = v.w0.empty() ? FlatVec(prob.dim(), 1.0) : FlatVec::from_external(parse_list<double>("--w0", v.w0));
  if (w0.size() != prob.dim()) throw ConfigError("--w0 must have one entry per diagonal element");

  AscentVariant variant;
  if (v.variant == "unnormalized") variant = AscentVariant::Unnormalized;
  else if (v.variant == "normalized") variant = AscentVariant::Normalized;
  else throw ConfigError("--variant must be unnormalized or normalized");

  // Reject the whole battery before running anything.
  for (double eta : etas) {
    for (double r : radii) check_step_preconditions(prob.beta(), eta, r);
  }
  for (double qp : qps) FilterConfig{qp}.validate();
  const PowerSchedule schedule{v.eta0, v.eta_power, v.r0, v.r_power};
  schedule.validate(prob.beta());

  bool all_ok = true;
  for (double eta : etas) {
    for (double r : radii) {
      for (double qp : qps) {
        const auto rep = verify_constant_step(prob, eta, r, v.constant_T, variant, FilterConfig{qp}, w0);
        all_ok = all_ok && rep.satisfied;
        out << "constant-step beta=" << format_double(rep.beta) << " eta=" << format_double(eta) << " r=" << format_double(r)
            << " qp=" << format_double(qp) << " T=" << rep.T << " lhs=" << format_double(rep.lhs)
            << " rhs=" << format_double(rep.rhs) << (rep.satisfied ? " PASS" : " FAIL") << '\n';
      }
    }
  }

  auto checkpoints = v.checkpoints;
  if (checkpoints.empty()) checkpoints = {100, 1000, 10000};
  const auto cor =
      verify_diminishing_step(prob, schedule, FilterConfig{v.diminishing_qp}, w0, checkpoints, v.threshold);
  for (const auto& cp : cor.trace) {
    out << "diminishing-step T=" << cp.T << " min_grad_norm_sq=" << format_double(cp.min_grad_norm_sq) << '\n';
  }
  out << "diminishing-step monotone=" << (cor.monotone ? "yes" : "no") << " decreased=" << (cor.decreased ? "yes" : "no");
  if (v.threshold >= 0.0) {
    out << " threshold=" << format_double(v.threshold) << " below=" << (cor.below_threshold ? "yes" : "no");
  }
  out << (cor.satisfied ? " PASS" : " FAIL") << '\n';
  all_ok = all_ok && cor.satisfied;
  return all_ok ? kOk : kBoundViolated;
}

struct GenOptions {
  std::string generator;
  std::size_t n = 400;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::size_t classes = 3;
  double label_flip = 0.0;
};

int cmd_gen_data(const GenOptions& g, const std::string& out_flag, std::ostream& out) {
  const auto path = require_out(out_flag);
  Dataset ds;
  if (g.generator == "two-moons") ds = gen_two_moons(g.n, g.noise, g.seed);
  else if (g.generator == "blobs") ds = gen_blobs(g.n, g.classes, g.noise, g.seed);
  else if (g.generator == "spirals") ds = gen_spirals(g.n, g.noise, g.seed);
  else throw ConfigError("generator must be one of two-moons, blobs, spirals: got '" + g.generator + "'");
  if (g.label_flip > 0.0) ds = flip_labels(ds, g.label_flip, derive_seed(g.seed, 101));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(path, ds);
  out << "gen-data: wrote " << ds.size() << " samples to " << path.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ZSharp: Z-score filtered sharpness-aware minimization"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  std::string out_flag = default_out();
  std::size_t jobs = 1;

  auto* train_cmd = app.add_subcommand("train", "Train one model and write metrics.csv, manifest and params");
  RunOptions train_opts;
  train_opts.attach(*train_cmd);
  train_cmd->add_option("--out", out_flag, "output directory (default: $ZSHARP_OUT)")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run ZSharp over a grid of qp values and seeds");
  RunOptions sweep_opts;
  sweep_opts.attach(*sweep_cmd);
  std::string sweep_qps;
  std::string sweep_seeds;
  sweep_cmd->add_option("--qp", sweep_qps, "comma-separated qp values, e.g. 0.95,0.9,0.85,0.8,0.75")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated training seeds")->required();
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  sweep_cmd->add_option("--out", out_flag, "output directory (default: $ZSHARP_OUT)")->capture_default_str();

  auto* compare_cmd = app.add_subcommand("compare", "Paired-seed comparison of base, sam and zsharp");
  RunOptions compare_opts;
  compare_opts.attach(*compare_cmd);
  std::string methods = "base,sam,zsharp";
  std::string compare_seeds;
  compare_cmd->add_option("--methods", methods, "comma-separated methods")->capture_default_str();
  compare_cmd->add_option("--seeds", compare_seeds, "comma-separated training seeds")->required();
  compare_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  compare_cmd->add_option("--out", out_flag, "output directory (default: $ZSHARP_OUT)")->capture_default_str();

  auto* verify_cmd = app.add_subcommand("verify", "Check the convergence bounds on full-batch quadratics");
  VerifyOptions vopts;
  verify_cmd->add_option("--beta", vopts.beta, "largest eigenvalue; A = diag(1, beta)")->capture_default_str();
  verify_cmd->add_option("--diag", vopts.diag, "explicit diagonal of A (overrides --beta)");
  verify_cmd->add_option("--w0", vopts.w0, "starting point (default: all ones)");
  verify_cmd->add_option("--eta", vopts.etas, "step sizes")->capture_default_str();
  verify_cmd->add_option("--r", vopts.radii, "ascent radii")->capture_default_str();
  verify_cmd->add_option("--qp", vopts.qps, "filter percentiles")->capture_default_str();
  verify_cmd->add_option("--constant.T", vopts.constant_T, "iterations per constant-step check")->capture_default_str();
  verify_cmd->add_option("--variant", vopts.variant, "unnormalized | normalized ascent")->capture_default_str();
  verify_cmd->add_option("--T", vopts.checkpoints, "diminishing-step checkpoints (repeatable; default 100,1000,10000)")
      ->delimiter(',');
  verify_cmd->add_option("--eta0", vopts.eta0, "eta_t = eta0 / (1+t)^eta_power")->capture_default_str();
  verify_cmd->add_option("--eta_power", vopts.eta_power, "step-size decay power")->capture_default_str();
  verify_cmd->add_option("--r0", vopts.r0, "r_t = r0 / (1+t)^r_power")->capture_default_str();
  verify_cmd->add_option("--r_power", vopts.r_power, "radius decay power")->capture_default_str();
  verify_cmd->add_option("--diminishing.qp", vopts.diminishing_qp, "filter percentile for the diminishing-step run")
      ->capture_default_str();
  verify_cmd->add_option("--threshold", vopts.threshold, "required final min grad norm^2 (negative: off)")
      ->capture_default_str();

  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  GenOptions gopts;
  gen_cmd->add_option("generator", gopts.generator, "two-moons | blobs | spirals")->required();
  gen_cmd->add_option("--n", gopts.n, "number of samples")->capture_default_str();
  gen_cmd->add_option("--noise", gopts.noise, "Gaussian noise std")->capture_default_str();
  gen_cmd->add_option("--seed", gopts.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--classes", gopts.classes, "classes (blobs)")->capture_default_str();
  gen_cmd->add_option("--label-flip", gopts.label_flip, "fraction of labels reassigned")->capture_default_str();
  gen_cmd->add_option("--out", out_flag, "output CSV file (default: $ZSHARP_OUT)")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, out_flag, out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, sweep_qps, sweep_seeds, jobs, out_flag, out, err);
    if (*compare_cmd) return cmd_compare(compare_opts, methods, compare_seeds, jobs, out_flag, out, err);
    if (*verify_cmd) return cmd_verify(vopts, out);
    if (*gen_cmd) return cmd_gen_data(gopts, out_flag, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DivergenceError& e) {
    err << "error: numerical divergence; see manifest for partial metrics\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace zsharp::cli

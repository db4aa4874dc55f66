// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

namespace zsharp {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Base: return "base";
    case OptimizerKind::Sam: return "sam";
    case OptimizerKind::ZSharp: return "zsharp";
  }
  return "?";
}

std::string_view to_string(BaseKind kind) { return kind == BaseKind::AdamW ? "adamw" : "sgd"; }

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "base") return OptimizerKind::Base;
  if (text == "sam") return OptimizerKind::Sam;
  if (text == "zsharp") return OptimizerKind::ZSharp;
  throw ConfigError("optimizer.kind must be one of base, sam, zsharp: got '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  const auto& g = data.generator;
  if (g != "two-moons" && g != "blobs" && g != "spirals" && g != "idx") {
    throw ConfigError("data.generator must be one of two-moons, blobs, spirals, idx: got '" + g + "'");
  }
  if (g == "idx" && (data.idx_images.empty() || data.idx_labels.empty())) {
    throw ConfigError("data.idx_images and data.idx_labels are required for the idx generator");
  }
  if (!(data.noise >= 0.0)) throw ConfigError("data.noise must be >= 0");
  if (!(data.label_flip >= 0.0 && data.label_flip <= 1.0)) throw ConfigError("data.label_flip must be in [0, 1]");
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must be in (0, 1)");
  }
  for (auto h : hidden_dims) {
    if (h == 0) throw ConfigError("model.hidden widths must be >= 1");
  }
  schedule.validate();
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(probe_rho > 0.0)) throw ConfigError("train.probe_rho must be positive");

  const bool needs_ascent = kind != OptimizerKind::Base;
  if (needs_ascent != ascent.has_value()) {
    throw ConfigError("ascent settings must be present exactly for sam and zsharp runs");
  }
  if (ascent) {
    ascent->validate();
    if ((kind == OptimizerKind::ZSharp) != ascent->is_zsharp()) {
      throw ConfigError("filter settings must be present exactly for zsharp runs");
    }
  }
}

RunConfig with_kind(RunConfig cfg, OptimizerKind kind, const std::optional<FilterConfig>& filter) {
  const double rho = cfg.ascent ? cfg.ascent->rho : 0.05;
  const double delta = cfg.ascent ? cfg.ascent->delta : 1e-8;
  const auto existing = cfg.ascent ? cfg.ascent->filter : std::nullopt;
  cfg.kind = kind;
  switch (kind) {
    case OptimizerKind::Base: cfg.ascent.reset(); break;
    case OptimizerKind::Sam: cfg.ascent = AscentConfig::sam(rho, delta); break;
    case OptimizerKind::ZSharp: cfg.ascent = AscentConfig::zsharp(rho, filter.value_or(existing.value_or(FilterConfig{})), delta); break;
  }
  return cfg;
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const char* expected) {
  throw ConfigError("invalid value for " + key + ": '" + text + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) bad_value(key, text, "a number");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) bad_value(key, text, "a non-negative integer");
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(parse_u64(key, text));
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad_value(key, text, "true or false");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
  return out;
}

// Intermediate form: ascent/filter values are collected before the optimizer
// kind decides whether they belong in the config.
struct Draft {
  RunConfig cfg;
  std::string schedule_kind = "step";
  double lr = 1e-3;
  double rho = 0.05;
  double delta = 1e-8;
  FilterConfig filter;
};

struct KeyDef {
  ConfigKey key;
  std::function<void(Draft&, const std::string&, const std::string&)> apply;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {{"data.generator", "two-moons", "two-moons | blobs | spirals | idx"},
       [](Draft& d, const std::string&, const std::string& v) { d.cfg.data.generator = v; }},
      {{"data.n", "400", "number of generated samples"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.n = parse_size(k, v); }},
      {{"data.noise", "0.1", "Gaussian noise std of the generator"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.noise = parse_double(k, v); }},
      {{"data.classes", "3", "number of classes (blobs)"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.classes = parse_size(k, v); }},
      {{"data.label_flip", "0", "fraction of labels reassigned at random"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.label_flip = parse_double(k, v); }},
      {{"data.seed", "0", "seed for generation, label flips and the split"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.seed = parse_u64(k, v); }},
      {{"data.test_fraction", "0.2", "held-out fraction"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.data.test_fraction = parse_double(k, v); }},
      {{"data.idx_images", "", "IDX image file (idx generator)"},
       [](Draft& d, const std::string&, const std::string& v) { d.cfg.data.idx_images = v; }},
      {{"data.idx_labels", "", "IDX label file (idx generator)"},
       [](Draft& d, const std::string&, const std::string& v) { d.cfg.data.idx_labels = v; }},
      {{"model.hidden", "32,32", "comma-separated hidden widths"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.hidden_dims = parse_sizes(k, v); }},
      {{"optimizer.kind", "zsharp", "base | sam | zsharp"},
       [](Draft& d, const std::string&, const std::string& v) { d.cfg.kind = parse_optimizer_kind(v); }},
      {{"optimizer.base", "adamw", "adamw | sgd"},
       [](Draft& d, const std::string& k, const std::string& v) {
         if (v == "adamw") d.cfg.base = BaseKind::AdamW;
         else if (v == "sgd") d.cfg.base = BaseKind::Sgd;
         else bad_value(k, v, "adamw or sgd");
       }},
      {{"optimizer.lr", "0.001", "initial learning rate"},
       [](Draft& d, const std::string& k, const std::string& v) { d.lr = parse_double(k, v); }},
      {{"optimizer.weight_decay", "5e-05", "decoupled (adamw) or L2 (sgd) weight decay"},
       [](Draft& d, const std::string& k, const std::string& v) {
         d.cfg.adamw.weight_decay = parse_double(k, v);
         d.cfg.sgd.weight_decay = d.cfg.adamw.weight_decay;
       }},
      {{"optimizer.beta1", "0.9", "adamw first-moment decay"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.adamw.beta1 = parse_double(k, v); }},
      {{"optimizer.beta2", "0.999", "adamw second-moment decay"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.adamw.beta2 = parse_double(k, v); }},
      {{"optimizer.eps", "1e-08", "adamw denominator epsilon"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.adamw.eps = parse_double(k, v); }},
      {{"optimizer.momentum", "0", "sgd momentum"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.sgd.momentum = parse_double(k, v); }},
      {{"schedule.kind", "step", "step | constant"},
       [](Draft& d, const std::string& k, const std::string& v) {
         if (v != "step" && v != "constant") bad_value(k, v, "step or constant");
         d.schedule_kind = v;
       }},
      {{"schedule.factor", "0.75", "step-decay multiplier"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.schedule.factor = parse_double(k, v); }},
      {{"schedule.every", "10", "epochs between decays"},
       [](Draft& d, const std::string& k, const std::string& v) {
         d.cfg.schedule.every_n_epochs = parse_size(k, v);
       }},
      {{"ascent.rho", "0.05", "perturbation radius (sam, zsharp)"},
       [](Draft& d, const std::string& k, const std::string& v) { d.rho = parse_double(k, v); }},
      {{"ascent.delta", "1e-08", "normalization stabilizer"},
       [](Draft& d, const std::string& k, const std::string& v) { d.delta = parse_double(k, v); }},
      {{"filter.qp", "0.95", "percentile threshold in [0, 1) (zsharp)"},
       [](Draft& d, const std::string& k, const std::string& v) { d.filter.qp = parse_double(k, v); }},
      {{"filter.scope", "global", "global | per-layer"},
       [](Draft& d, const std::string&, const std::string& v) { d.filter.scope = parse_scope(v); }},
      {{"filter.sigma_eps", "1e-12", "layers with std below this are skipped"},
       [](Draft& d, const std::string& k, const std::string& v) { d.filter.sigma_eps = parse_double(k, v); }},
      {{"train.epochs", "50", "number of epochs"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.epochs = parse_size(k, v); }},
      {{"train.batch_size", "16", "minibatch size"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.batch_size = parse_size(k, v); }},
      {{"train.seed", "0", "seed for initialization and shuffling"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.seed = parse_u64(k, v); }},
      {{"train.drop_last", "false", "drop the final short batch"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.drop_last = parse_bool(k, v); }},
      {{"train.probe_rho", "0.05", "radius of the sharpness probe"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.probe_rho = parse_double(k, v); }},
      {{"train.probe_every", "1", "probe sharpness every k epochs (0: final epoch only)"},
       [](Draft& d, const std::string& k, const std::string& v) { d.cfg.probe_every = parse_size(k, v); }},
  };
  return defs;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&kv](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  const auto& d = cfg.data;
  put("data.generator", d.generator);
  put("data.n", std::to_string(d.n));
  put("data.noise", format_double(d.noise));
  put("data.classes", std::to_string(d.classes));
  put("data.label_flip", format_double(d.label_flip));
  put("data.seed", std::to_string(d.seed));
  put("data.test_fraction", format_double(d.test_fraction));
  put("data.idx_images", d.idx_images.string());
  put("data.idx_labels", d.idx_labels.string());
  put("model.hidden", join_sizes(cfg.hidden_dims));
  put("optimizer.kind", std::string(to_string(cfg.kind)));
  put("optimizer.base", std::string(to_string(cfg.base)));
  put("optimizer.lr", format_double(cfg.schedule.base_lr));
  put("optimizer.weight_decay",
      format_double(cfg.base == BaseKind::AdamW ? cfg.adamw.weight_decay : cfg.sgd.weight_decay));
  put("optimizer.beta1", format_double(cfg.adamw.beta1));
  put("optimizer.beta2", format_double(cfg.adamw.beta2));
  put("optimizer.eps", format_double(cfg.adamw.eps));
  put("optimizer.momentum", format_double(cfg.sgd.momentum));
  put("schedule.kind", cfg.schedule.kind == LrSchedule::Kind::StepDecay ? "step" : "constant");
  put("schedule.factor", format_double(cfg.schedule.factor));
  put("schedule.every", std::to_string(cfg.schedule.every_n_epochs));
  if (cfg.ascent) {
    put("ascent.rho", format_double(cfg.ascent->rho));
    put("ascent.delta", format_double(cfg.ascent->delta));
    if (cfg.ascent->filter) {
      put("filter.qp", format_double(cfg.ascent->filter->qp));
      put("filter.scope", std::string(to_string(cfg.ascent->filter->scope)));
      put("filter.sigma_eps", format_double(cfg.ascent->filter->sigma_eps));
    }
  }
  put("train.epochs", std::to_string(cfg.epochs));
  put("train.batch_size", std::to_string(cfg.batch_size));
  put("train.seed", std::to_string(cfg.seed));
  put("train.drop_last", cfg.drop_last ? "true" : "false");
  put("train.probe_rho", format_double(cfg.probe_rho));
  put("train.probe_every", std::to_string(cfg.probe_every));
  return kv;
}

std::uint64_t config_hash(const RunConfig& cfg, const std::vector<std::string>& exclude) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : describe(cfg)) {
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  return h;
}

ConfigBuilder::ConfigBuilder() {
  for (const auto& def : key_defs()) values_[def.key.name] = def.key.default_value;
}

const std::vector<ConfigKey>& ConfigBuilder::keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& def : key_defs()) out.push_back(def.key);
    return out;
  }();
  return keys;
}

void ConfigBuilder::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = trim(value);
}

void ConfigBuilder::parse_text(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
}

void ConfigBuilder::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  parse_text(buf.str(), path.string());
}

RunConfig ConfigBuilder::build() const {
  Draft draft;
  for (const auto& def : key_defs()) def.apply(draft, def.key.name, values_.at(def.key.name));

  auto& cfg = draft.cfg;
  cfg.schedule.base_lr = draft.lr;
  cfg.schedule.kind = draft.schedule_kind == "step" ? LrSchedule::Kind::StepDecay : LrSchedule::Kind::Constant;
  cfg.ascent.reset();
  if (cfg.kind == OptimizerKind::Sam) cfg.ascent = AscentConfig::sam(draft.rho, draft.delta);
  if (cfg.kind == OptimizerKind::ZSharp) cfg.ascent = AscentConfig::zsharp(draft.rho, draft.filter, draft.delta);
  // Filter settings are checked even when unused so a typo like qp = 1.5
  // never passes silently.
  draft.filter.validate();
  cfg.validate();
  return cfg;
}

Split prepare_data(const DataSpec& spec) {
  Dataset full;
  if (spec.generator == "two-moons") {
    full = gen_two_moons(spec.n, spec.noise, spec.seed);
  } else if (spec.generator == "blobs") {
    full = gen_blobs(spec.n, spec.classes, spec.noise, spec.seed);
  } else if (spec.generator == "spirals") {
    full = gen_spirals(spec.n, spec.noise, spec.seed);
  } else if (spec.generator == "idx") {
    full = load_idx_pair(spec.idx_images, spec.idx_labels);
  } else {
    throw ConfigError("unknown data.generator '" + spec.generator + "'");
  }
  // Label noise goes into the training part only; the test set stays clean.
  auto parts = split(full, spec.test_fraction, derive_seed(spec.seed, 102));
  if (spec.label_flip > 0.0) parts.train = flip_labels(parts.train, spec.label_flip, derive_seed(spec.seed, 101));
  return parts;
}

MlpSpec model_spec(const RunConfig& cfg, const Dataset& train) {
  MlpSpec spec;
  spec.input_dim = train.n_features();
  spec.hidden_dims = cfg.hidden_dims;
  spec.n_classes = train.n_classes();
  spec.init_seed = derive_seed(cfg.seed, 1);
  return spec;
}

}  // namespace zsharp

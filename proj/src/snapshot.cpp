// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace zsharp {

void save_params(std::ostream& out, const ParamSet& params) {
  out << "zsharp-params " << kSnapshotVersion << '\n';
  out << "layers " << params.num_layers() << '\n';
  for (const auto& layer : params.layers()) {
    if (layer.id.empty() || layer.id.find_first_of(" \t\r\n") != std::string::npos) {
      throw FormatError("layer id '" + layer.id + "' cannot be stored");
    }
    out << layer.id << ' ' << layer.shape.size();
    for (auto d : layer.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < layer.values.size(); ++i) {
      if (i) out << ' ';
      out << format_double(layer.values[i]);
    }
    out << '\n';
  }
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  save_params(out, params);
}

namespace {

template <typename T>
T read_token(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw FormatError(std::string("snapshot truncated while reading ") + what);
  T value{};
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw FormatError(std::string("snapshot: bad ") + what + " '" + token + "'");
  }
  return value;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) throw FormatError("snapshot: expected '" + word + "'");
}

}  // namespace

ParamSet load_params(std::istream& in) {
  expect_word(in, "zsharp-params");
  const int version = read_token<int>(in, "version");
  if (version != kSnapshotVersion) throw FormatError("unsupported snapshot version " + std::to_string(version));
  expect_word(in, "layers");
  const auto count = read_token<std::size_t>(in, "layer count");

  ParamSet params;
  for (std::size_t l = 0; l < count; ++l) {
    std::string id;
    if (!(in >> id)) throw FormatError("snapshot truncated while reading layer id");
    const auto rank = read_token<std::size_t>(in, "rank");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = read_token<std::size_t>(in, "dimension");
      n *= d;
    }
    FlatVec values(n);
    for (auto& x : values) x = read_token<double>(in, "value");
    params.add(std::move(id), std::move(shape), std::move(values));
  }
  return params;
}

ParamSet load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_params(in);
}

}  // namespace zsharp

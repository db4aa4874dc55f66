// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter snapshot file, format version 1 (text, UTF-8, '\n' line ends):
//
//   zsharp-params 1
//   layers <L>
//   then per layer, two lines:
//   <id> <rank> <dim_0> ... <dim_{rank-1}>
//   <v_0> <v_1> ... <v_{n-1}>        (row-major, space separated)
//
// Values are written as shortest round-trip decimals, so save followed by
// load reproduces every double bit for bit. Ids must not contain
// whitespace.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "zsharp/layer_set.hpp"

namespace zsharp {

inline constexpr int kSnapshotVersion = 1;

void save_params(std::ostream& out, const ParamSet& params);
void save_params(const std::filesystem::path& path, const ParamSet& params);

/// Throws FormatError on a bad header, unsupported version or malformed
/// layer record.
ParamSet load_params(std::istream& in);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace zsharp

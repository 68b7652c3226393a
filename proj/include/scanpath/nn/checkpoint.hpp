// Copyright 2026 The Scanpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scanpath/nn/optim.hpp"
#include "scanpath/nn/parameter.hpp"

namespace scanpath::nn {

// Versioned binary container of named tensors plus string metadata.
//
//   magic "SPCKPT" | u32 version
//   u32 meta_count, then per entry: u32 key_len, key, u32 value_len, value
//   u32 tensor_count, then per tensor: u16 name_len, name, u32 rows, u32 cols,
//     u8 dtype (1 = float32, 2 = float64), rows*cols little-endian values
//
// Tensors are written as float64 so that parameters and optimizer moments
// survive a round trip bit-exactly. Readers also accept float32 payloads.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  const Matrix* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Appends the current values of `params` to `ckpt`.
void store_parameters(Checkpoint& ckpt, const ParameterRefs& params);
// Copies values by name; missing names or shape mismatches raise FormatError.
void load_parameters(const Checkpoint& ckpt, const ParameterRefs& params);

}  // namespace scanpath::nn

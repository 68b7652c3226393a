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

#include "scanpath/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "scanpath/core/error.hpp"
#include "scanpath/io/binary.hpp"

namespace scanpath::nn {

namespace {
constexpr char kMagic[6] = {'S', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kFloat32 = 1;
constexpr std::uint8_t kFloat64 = 2;
}  // namespace

const Matrix* Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  io::BinaryWriter w(os);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.u32(static_cast<std::uint32_t>(k.size()));
    w.bytes(k.data(), k.size());
    w.u32(static_cast<std::uint32_t>(v.size()));
    w.bytes(v.data(), v.size());
  }
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.value.rows()));
    w.u32(static_cast<std::uint32_t>(t.value.cols()));
    w.u8(kFloat64);
    for (double v : t.value.values()) w.f64(v);
  }
  if (!os) throw Error("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint " + path.string());
  io::BinaryReader r(is, path.string());
  char magic[6];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  Checkpoint ckpt;
  const std::uint32_t meta_count = r.u32();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.string(r.u32());
    std::string v = r.string(r.u32());
    ckpt.meta.emplace(std::move(k), std::move(v));
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.string(r.u16());
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint8_t dtype = r.u8();
    Matrix m(rows, cols);
    if (dtype == kFloat64) {
      for (double& v : m.values()) v = r.f64();
    } else if (dtype == kFloat32) {
      for (double& v : m.values()) v = r.f32();
    } else {
      throw FormatError(path.string() + ": unknown dtype in tensor " + t.name);
    }
    t.value = std::move(m);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void store_parameters(Checkpoint& ckpt, const ParameterRefs& params) {
  for (const Parameter* p : params) ckpt.tensors.push_back({p->name, p->value});
}

void load_parameters(const Checkpoint& ckpt, const ParameterRefs& params) {
  for (Parameter* p : params) {
    const Matrix* m = ckpt.find(p->name);
    if (m == nullptr) throw FormatError("checkpoint lacks parameter " + p->name);
    if (!m->same_shape(p->value))
      throw FormatError("checkpoint shape mismatch for " + p->name);
    p->value = *m;
  }
}

}  // namespace scanpath::nn

/* Copyright 2026 The dynbatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dynbatch/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace dynbatch {
namespace {

constexpr char kMagic[] = "DYNBATCH-CKPT";
constexpr int kVersion = 1;

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kIO, "malformed checkpoint: " + what);
}

// Raw element bytes in little-endian order.
std::string LittleEndianBytes(const Tensor& t) {
  std::string bytes;
  DispatchDType(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto data = t.data<T>();
    bytes.resize(data.size() * sizeof(T));
    std::memcpy(bytes.data(), data.data(), bytes.size());
  });
  if constexpr (std::endian::native == std::endian::big) {
    const size_t w = DTypeSize(t.dtype());
    for (size_t i = 0; i < bytes.size(); i += w) {
      std::reverse(bytes.begin() + i, bytes.begin() + i + w);
    }
  }
  return bytes;
}

Tensor FromLittleEndian(DType dtype, Shape shape, std::string bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    const size_t w = DTypeSize(dtype);
    for (size_t i = 0; i < bytes.size(); i += w) {
      std::reverse(bytes.begin() + i, bytes.begin() + i + w);
    }
  }
  Tensor t(dtype, std::move(shape));
  DispatchDType(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto data = t.mutable_data<T>();
    if (bytes.size() != data.size() * sizeof(T)) Malformed("payload size mismatch");
    std::memcpy(data.data(), bytes.data(), bytes.size());
  });
  return t;
}

}  // namespace

void WriteCheckpoint(const ParameterStore& params, std::ostream& out) {
  std::vector<std::string> payloads;
  std::ostringstream manifest;
  manifest << kMagic << " " << kVersion << "\n" << params.values().size() << "\n";
  uint64_t offset = 0;
  for (const auto& [name, t] : params.values()) {
    if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
      throw Error(ErrorCode::kIO, "parameter name '" + name + "' cannot be checkpointed");
    }
    payloads.push_back(LittleEndianBytes(t));
    manifest << name << " " << DTypeName(t.dtype()) << " " << t.shape().ToString() << " "
             << offset << " " << payloads.back().size() << "\n";
    offset += payloads.back().size();
  }
  manifest << "\n";
  out << manifest.str();
  for (const std::string& p : payloads) out.write(p.data(), static_cast<std::streamsize>(p.size()));
  if (!out) throw Error(ErrorCode::kIO, "failed to write checkpoint");
}

ParameterStore ReadCheckpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) Malformed("missing header");
  {
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != kMagic) Malformed("bad magic");
    if (version != kVersion) Malformed("unsupported version " + std::to_string(version));
  }
  size_t count = 0;
  if (!std::getline(in, line)) Malformed("missing tensor count");
  try {
    count = std::stoull(line);
  } catch (const std::exception&) {
    Malformed("bad tensor count");
  }
  struct Entry {
    std::string name;
    DType dtype;
    Shape shape;
    uint64_t offset;
    uint64_t size;
  };
  std::vector<Entry> entries;
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) Malformed("truncated manifest");
    std::istringstream row(line);
    std::string name, dtype, dims;
    Entry e;
    if (!(row >> name >> dtype >> dims >> e.offset >> e.size)) Malformed("bad line: " + line);
    e.name = name;
    try {
      e.dtype = ParseDType(dtype);
    } catch (const Error&) {
      Malformed("bad dtype in line: " + line);
    }
    if (dims.size() < 2 || dims.front() != '[' || dims.back() != ']') {
      Malformed("bad shape in line: " + line);
    }
    std::vector<int64_t> extents;
    std::string inner = dims.substr(1, dims.size() - 2);
    std::istringstream ds(inner);
    std::string tok;
    while (std::getline(ds, tok, ',')) {
      try {
        extents.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        Malformed("bad shape in line: " + line);
      }
    }
    e.shape = Shape(std::move(extents));
    entries.push_back(std::move(e));
  }
  if (!std::getline(in, line) || !line.empty()) Malformed("missing manifest terminator");
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ParameterStore params;
  for (Entry& e : entries) {
    if (e.offset + e.size > payload.size()) Malformed("payload of '" + e.name + "' is truncated");
    params.Set(e.name, FromLittleEndian(e.dtype, std::move(e.shape),
                                        payload.substr(e.offset, e.size)));
  }
  return params;
}

void SaveCheckpoint(const ParameterStore& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIO, "cannot open " + path + " for writing");
  WriteCheckpoint(params, out);
}

ParameterStore LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + path);
  return ReadCheckpoint(in);
}

}  // namespace dynbatch

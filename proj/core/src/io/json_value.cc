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

#include "dynbatch/io/json_value.h"

#include <fstream>

#include <nlohmann/json.hpp>

namespace dynbatch::io {
namespace {

using ordered_json = nlohmann::ordered_json;

HostValue Convert(const ordered_json& j) {
  switch (j.type()) {
    case ordered_json::value_t::null: return HostValue();
    case ordered_json::value_t::boolean: return HostValue(j.get<bool>());
    case ordered_json::value_t::number_integer:
    case ordered_json::value_t::number_unsigned: return HostValue(j.get<int64_t>());
    case ordered_json::value_t::number_float: return HostValue(j.get<double>());
    case ordered_json::value_t::string: return HostValue(j.get<std::string>());
    case ordered_json::value_t::array: {
      HostValue::List out;
      for (const auto& v : j) out.push_back(Convert(v));
      return HostValue(std::move(out));
    }
    case ordered_json::value_t::object: {
      HostValue::Map out;
      for (const auto& [k, v] : j.items()) out.emplace_back(k, Convert(v));
      return HostValue(std::move(out));
    }
    default: throw Error(ErrorCode::kIO, "unsupported JSON value");
  }
}

}  // namespace

HostValue ParseJsonValue(std::string_view text) {
  try {
    return Convert(ordered_json::parse(text));
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kIO, std::string("invalid JSON: ") + e.what());
  }
}

std::vector<HostValue> ReadJsonLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + path);
  std::vector<HostValue> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ParseJsonValue(line));
    } catch (const Error& e) {
      throw e.WithContext(path + ":" + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace dynbatch::io

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

#include "dynbatch/host_value.h"

#include <sstream>

namespace dynbatch {
namespace {

[[noreturn]] void WrongKind(const HostValue& v, std::string_view wanted) {
  throw Error(ErrorCode::kTrace, "expected host " + std::string(wanted) +
                                     ", got " + v.TypeName() + " " +
                                     v.DebugString());
}

}  // namespace

bool HostValue::as_bool() const {
  if (!is_bool()) WrongKind(*this, "bool");
  return std::get<bool>(value_);
}

int64_t HostValue::as_int() const {
  if (!is_int()) WrongKind(*this, "int");
  return std::get<int64_t>(value_);
}

double HostValue::as_number() const {
  if (is_int()) return static_cast<double>(std::get<int64_t>(value_));
  if (!is_float()) WrongKind(*this, "number");
  return std::get<double>(value_);
}

const std::string& HostValue::as_string() const {
  if (!is_string()) WrongKind(*this, "string");
  return std::get<std::string>(value_);
}

const HostValue::List& HostValue::as_list() const {
  if (!is_list()) WrongKind(*this, "list");
  return *std::get<std::shared_ptr<const List>>(value_);
}

const HostValue::Map& HostValue::as_map() const {
  if (!is_map()) WrongKind(*this, "map");
  return *std::get<std::shared_ptr<const Map>>(value_);
}

const Tensor& HostValue::as_tensor() const {
  if (!is_tensor()) WrongKind(*this, "tensor");
  return *std::get<std::shared_ptr<const Tensor>>(value_);
}

const HostValue* HostValue::Find(std::string_view key) const {
  if (!is_map()) return nullptr;
  for (const auto& [k, v] : as_map()) {
    if (k == key) return &v;
  }
  return nullptr;
}

int64_t HostValue::size() const {
  if (is_list()) return static_cast<int64_t>(as_list().size());
  if (is_map()) return static_cast<int64_t>(as_map().size());
  if (is_string()) return static_cast<int64_t>(as_string().size());
  WrongKind(*this, "list, map or string");
}

std::string HostValue::TypeName() const {
  switch (value_.index()) {
    case 0: return "null";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "float";
    case 4: return "string";
    case 5: return "list";
    case 6: return "map";
    case 7: return "tensor";
  }
  return "?";
}

std::string HostValue::DebugString() const {
  std::ostringstream os;
  if (is_null()) {
    os << "null";
  } else if (is_bool()) {
    os << (as_bool() ? "true" : "false");
  } else if (is_int()) {
    os << as_int();
  } else if (is_float()) {
    os << as_number();
  } else if (is_string()) {
    os << '"' << as_string() << '"';
  } else if (is_list()) {
    os << "[";
    const auto& list = as_list();
    for (size_t i = 0; i < list.size(); ++i) {
      if (i > 0) os << ", ";
      os << list[i].DebugString();
    }
    os << "]";
  } else if (is_map()) {
    os << "{";
    const auto& map = as_map();
    for (size_t i = 0; i < map.size(); ++i) {
      if (i > 0) os << ", ";
      os << map[i].first << ": " << map[i].second.DebugString();
    }
    os << "}";
  } else {
    os << as_tensor().DebugString();
  }
  return os.str();
}

bool operator==(const HostValue& a, const HostValue& b) {
  if (a.is_number() && b.is_number() && (a.is_float() || b.is_float())) {
    return a.as_number() == b.as_number();
  }
  if (a.value_.index() != b.value_.index()) return false;
  if (a.is_list()) return a.as_list() == b.as_list();
  if (a.is_map()) return a.as_map() == b.as_map();
  if (a.is_tensor()) return a.as_tensor() == b.as_tensor();
  return a.value_ == b.value_;
}

}  // namespace dynbatch

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

#ifndef DYNBATCH_HOST_VALUE_H_
#define DYNBATCH_HOST_VALUE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dynbatch/tensor.h"

namespace dynbatch {

// Self-describing host input: what InputTransform functions, OneOf key
// functions, Record and the sequence combinators consume at trace time.
class HostValue {
 public:
  using List = std::vector<HostValue>;
  using Map = std::vector<std::pair<std::string, HostValue>>;  // ordered

  HostValue() = default;  // null
  HostValue(std::nullptr_t) {}
  HostValue(bool v) : value_(v) {}
  HostValue(int v) : value_(static_cast<int64_t>(v)) {}
  HostValue(int64_t v) : value_(v) {}
  HostValue(double v) : value_(v) {}
  HostValue(const char* v) : value_(std::string(v)) {}
  HostValue(std::string v) : value_(std::move(v)) {}
  HostValue(List v) : value_(std::make_shared<const List>(std::move(v))) {}
  HostValue(Map v) : value_(std::make_shared<const Map>(std::move(v))) {}
  HostValue(Tensor v) : value_(std::make_shared<const Tensor>(std::move(v))) {}

  bool is_null() const { return value_.index() == 0; }
  bool is_bool() const { return std::holds_alternative<bool>(value_); }
  bool is_int() const { return std::holds_alternative<int64_t>(value_); }
  bool is_float() const { return std::holds_alternative<double>(value_); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(value_); }
  bool is_list() const {
    return std::holds_alternative<std::shared_ptr<const List>>(value_);
  }
  bool is_map() const {
    return std::holds_alternative<std::shared_ptr<const Map>>(value_);
  }
  bool is_tensor() const {
    return std::holds_alternative<std::shared_ptr<const Tensor>>(value_);
  }

  bool as_bool() const;
  int64_t as_int() const;
  double as_number() const;  // int or float
  const std::string& as_string() const;
  const List& as_list() const;
  const Map& as_map() const;
  const Tensor& as_tensor() const;

  // Map lookup; nullptr if absent or not a map.
  const HostValue* Find(std::string_view key) const;
  // Element count of a list/map/string, else error.
  int64_t size() const;

  std::string TypeName() const;
  std::string DebugString() const;

  friend bool operator==(const HostValue& a, const HostValue& b);

 private:
  std::variant<std::monostate, bool, int64_t, double, std::string,
               std::shared_ptr<const List>, std::shared_ptr<const Map>,
               std::shared_ptr<const Tensor>>
      value_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_HOST_VALUE_H_

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

#ifndef DYNBATCH_IO_JSON_VALUE_H_
#define DYNBATCH_IO_JSON_VALUE_H_

#include <string>
#include <string_view>
#include <vector>

#include "dynbatch/host_value.h"

namespace dynbatch::io {

// JSON text -> HostValue. Objects keep their key order; integers stay
// integers. Throws kIO on malformed input.
HostValue ParseJsonValue(std::string_view text);
// One value per non-empty line; errors carry "path:line".
std::vector<HostValue> ReadJsonLines(const std::string& path);

}  // namespace dynbatch::io

#endif  // DYNBATCH_IO_JSON_VALUE_H_

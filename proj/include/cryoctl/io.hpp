// Copyright 2026 The cryoctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

namespace cryoctl {

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

/// Shortest decimal text that round-trips the value exactly.
std::string format_double(double value);

}  // namespace cryoctl

// Copyright 2026 The vulgraph Authors
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

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace vulgraph::io {

using Matrix = Eigen::MatrixXd;

inline constexpr std::uint32_t kArchiveVersion = 1;

// Row-major little-endian doubles.
void write_f64(std::ostream& out, const Matrix& m);
Matrix read_f64(std::istream& in, Eigen::Index rows, Eigen::Index cols);

// Named matrices plus free-form JSON metadata. Layout:
//   "VGRAPHAR" | u32 version | u64 header bytes | header JSON | tensor data
// Tensors are stored in key order, so encoding is a pure function of content.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Matrix> tensors;

  const Matrix& tensor(const std::string& name) const;
};

std::string encode_archive(const Archive& archive);
Archive decode_archive(std::string_view bytes);
void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace vulgraph::io

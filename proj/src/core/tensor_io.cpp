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

#include "core/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace vulgraph::io {

namespace {

constexpr char kMagic[8] = {'V', 'G', 'R', 'A', 'P', 'H', 'A', 'R'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_matrix(std::string& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
}

}  // namespace

void write_f64(std::ostream& out, const Matrix& m) {
  std::string buf;
  buf.reserve(static_cast<std::size_t>(m.size()) * 8);
  put_matrix(buf, m);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Matrix read_f64(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  std::string buf(static_cast<std::size_t>(rows * cols) * 8, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError("truncated matrix data");
  Matrix m(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, at += 8) m(r, c) = std::bit_cast<double>(get_u64(buf, at));
  return m;
}

const Matrix& Archive::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DimensionError("archive has no tensor '" + name + "'");
  return it->second;
}

std::string encode_archive(const Archive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : archive.tensors) {
    index.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 8;
  }
  header["tensors"] = std::move(index);
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((kArchiveVersion >> (8 * i)) & 0xff));
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& [name, m] : archive.tensors) put_matrix(out, m);
  return out;
}

Archive decode_archive(std::string_view bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not a vulgraph archive (bad magic)");
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (version != kArchiveVersion)
    throw ParseError("unsupported archive version " + std::to_string(version));
  const std::uint64_t header_len = get_u64(bytes, 12);
  if (20 + header_len > bytes.size()) throw ParseError("truncated archive header");
  nlohmann::json header = nlohmann::json::parse(bytes.substr(20, header_len), nullptr, false);
  if (header.is_discarded() || !header.contains("tensors")) throw ParseError("corrupt archive header");

  Archive archive;
  archive.meta = header.value("meta", nlohmann::json::object());
  const std::size_t data_start = 20 + header_len;
  for (const auto& t : header["tensors"]) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::uint64_t>();
    if (rows < 0 || cols < 0 || data_start + offset + static_cast<std::uint64_t>(rows * cols) * 8 > bytes.size())
      throw ParseError("tensor '" + t.at("name").get<std::string>() + "' exceeds archive bounds");
    Matrix m(rows, cols);
    std::size_t at = data_start + offset;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, at += 8) m(r, c) = std::bit_cast<double>(get_u64(bytes, at));
    archive.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }
  return archive;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  write_file(path, encode_archive(archive));
}

Archive load_archive(const std::filesystem::path& path) { return decode_archive(read_file(path)); }

}  // namespace vulgraph::io

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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include "json.hpp"
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vulgraph::cpg {

enum class EdgeKind : std::uint8_t { kAst = 0, kCfg = 1, kDdg = 2, kCdg = 3 };
inline constexpr std::array<EdgeKind, 4> kEdgeKinds = {EdgeKind::kAst, EdgeKind::kCfg, EdgeKind::kDdg,
                                                       EdgeKind::kCdg};

const char* edge_kind_name(EdgeKind kind) noexcept;
std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept;

struct CodeNode {
  std::int64_t id = 0;
  std::string node_type;
  std::string code_fragment;
  // No outgoing AST edge.
  bool is_leaf = true;

  bool operator==(const CodeNode&) const = default;
};

struct CodeEdge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  EdgeKind kind = EdgeKind::kAst;

  auto operator<=>(const CodeEdge&) const = default;
};

struct CodePropertyGraph {
  std::string function_id;
  std::vector<CodeNode> nodes;  // ascending id
  std::vector<CodeEdge> edges;  // sorted, no duplicate (src, dst, kind)
  int label = 0;
  std::vector<std::string> cwe_tags;
  std::string source_code;
  std::string content_hash;  // lowercase hex MD5 of source_code

  std::size_t node_count() const { return nodes.size(); }
  // Row of node `id` in `nodes`, if present.
  std::optional<std::size_t> index_of(std::int64_t id) const;
  std::size_t edge_count(EdgeKind kind) const;

  bool operator==(const CodePropertyGraph&) const = default;
};

enum class Split { kTrain, kValid, kTest };
const char* split_name(Split split) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;

struct CorpusRecord {
  CodePropertyGraph graph;
  Split split = Split::kTrain;
};

std::string md5_hex(std::string_view bytes);

// Validates a canonical CPG document. Throws ParseError naming the offending
// field, IntegrityError for dangling edge endpoints or duplicate node ids.
CodePropertyGraph parse_cpg_export(const nlohmann::json& document);
CodePropertyGraph parse_cpg_export(std::string_view text);
inline CodePropertyGraph parse_cpg_export(const std::string& text) { return parse_cpg_export(std::string_view(text)); }
inline CodePropertyGraph parse_cpg_export(const char* text) { return parse_cpg_export(std::string_view(text)); }
nlohmann::json to_json(const CodePropertyGraph& graph);

// Retained iff node_count() <= max_nodes.
std::optional<CodePropertyGraph> filter_by_node_count(CodePropertyGraph graph, std::size_t max_nodes = 500);

// Clears code fragments of non-leaf nodes.
CodePropertyGraph prune_nonleaf_properties(CodePropertyGraph graph);

// Keeps the first graph for each content hash, order-stable.
std::vector<CodePropertyGraph> dedup_by_hash(std::vector<CodePropertyGraph> corpus);

// One entry per non-empty source line that is not just braces.
std::vector<std::string> split_statements(std::string_view source_code);

// statement index -> node id. A statement goes to the node whose fragment
// equals it (whitespace-normalised, ignoring a trailing ";" and block
// braces); failing that, the shortest fragment that contains it. Unused nodes
// are preferred, lower ids win ties. Throws MappingError listing statements
// with no candidate.
std::map<std::size_t, std::int64_t> map_statements_to_nodes(std::string_view source_code,
                                                             const CodePropertyGraph& graph);

// Split from the md5 prefix: 80% train, 10% valid, 10% test.
Split split_from_hash(std::string_view content_hash);

// Corpus file: JSON Lines, one canonical document per line plus "split" and "md5".
nlohmann::json to_corpus_line(const CorpusRecord& record);
CorpusRecord parse_corpus_line(std::string_view line);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);

struct IngestOptions {
  std::size_t max_nodes = 500;
  bool dedup = true;
};

struct IngestStats {
  std::size_t documents = 0;
  std::size_t rejected = 0;   // failed parse or integrity checks
  std::size_t oversized = 0;  // exceeded max_nodes
  std::size_t duplicates = 0;
  std::size_t written = 0;
};

// Reads *.json (one document) and *.jsonl (one per line) from `input_dir` in
// name order; parse -> size filter -> prune -> dedup -> split assignment.
// Malformed documents are skipped with a warning.
std::vector<CorpusRecord> ingest_documents(const std::filesystem::path& input_dir, const IngestOptions& options,
                                           IngestStats* stats = nullptr);

}  // namespace vulgraph::cpg

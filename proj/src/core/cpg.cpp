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

#include "core/cpg.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "core/errors.hpp"
#include "core/log.hpp"

namespace vulgraph::cpg {

using nlohmann::json;

const char* edge_kind_name(EdgeKind kind) noexcept {
  switch (kind) {
    case EdgeKind::kAst: return "AST";
    case EdgeKind::kCfg: return "CFG";
    case EdgeKind::kDdg: return "DDG";
    case EdgeKind::kCdg: return "CDG";
  }
  return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept {
  for (EdgeKind k : kEdgeKinds)
    if (name == edge_kind_name(k)) return k;
  return std::nullopt;
}

const char* split_name(Split split) noexcept {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view name) noexcept {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::optional<std::size_t> CodePropertyGraph::index_of(std::int64_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const CodeNode& n, std::int64_t v) { return n.id < v; });
  if (it == nodes.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

std::size_t CodePropertyGraph::edge_count(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [kind](const CodeEdge& e) { return e.kind == kind; }));
}

std::string md5_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_md5(), nullptr) != 1)
    throw IoError("MD5 digest failed");
  static const char* const kHex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field '" + where + key + "'");
  return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw ParseError("field '" + where + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) throw ParseError("field '" + where + key + "' must be an integer");
  return v.get<std::int64_t>();
}

void mark_leaves(CodePropertyGraph& g) {
  std::unordered_set<std::int64_t> parents;
  for (const CodeEdge& e : g.edges)
    if (e.kind == EdgeKind::kAst) parents.insert(e.src);
  for (CodeNode& n : g.nodes) n.is_leaf = !parents.contains(n.id);
}

}  // namespace

CodePropertyGraph parse_cpg_export(const json& doc) {
  if (!doc.is_object()) throw ParseError("document must be a JSON object");
  CodePropertyGraph g;
  g.function_id = require_string(doc, "function_id", "");

  const json& label = require(doc, "label", "");
  if (!label.is_number_integer() || (label.get<std::int64_t>() != 0 && label.get<std::int64_t>() != 1))
    throw ParseError("field 'label' must be 0 or 1");
  g.label = label.get<int>();

  if (auto it = doc.find("cwe"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("field 'cwe' must be an array of strings");
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string()) throw ParseError("field 'cwe[" + std::to_string(i) + "]' must be a string");
      g.cwe_tags.push_back((*it)[i].get<std::string>());
    }
  }
  g.source_code = require_string(doc, "code", "");
  g.content_hash = md5_hex(g.source_code);

  const json& nodes = require(doc, "nodes", "");
  if (!nodes.is_array()) throw ParseError("field 'nodes' must be an array");
  g.nodes.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "].";
    if (!nodes[i].is_object()) throw ParseError("field 'nodes[" + std::to_string(i) + "]' must be an object");
    CodeNode n;
    n.id = require_int(nodes[i], "id", where);
    n.node_type = require_string(nodes[i], "type", where);
    if (n.node_type.empty()) throw ParseError("field '" + where + "type' must be non-empty");
    n.code_fragment = nodes[i].contains("code") ? require_string(nodes[i], "code", where) : std::string();
    g.nodes.push_back(std::move(n));
  }
  std::sort(g.nodes.begin(), g.nodes.end(), [](const CodeNode& a, const CodeNode& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < g.nodes.size(); ++i)
    if (g.nodes[i].id == g.nodes[i - 1].id)
      throw IntegrityError("duplicate node id " + std::to_string(g.nodes[i].id));

  const json& edges = require(doc, "edges", "");
  if (!edges.is_array()) throw ParseError("field 'edges' must be an array");
  g.edges.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "].";
    if (!edges[i].is_object()) throw ParseError("field 'edges[" + std::to_string(i) + "]' must be an object");
    CodeEdge e;
    e.src = require_int(edges[i], "src", where);
    e.dst = require_int(edges[i], "dst", where);
    const std::string kind = require_string(edges[i], "kind", where);
    auto k = parse_edge_kind(kind);
    if (!k) throw ParseError("field '" + where + "kind' has unknown value '" + kind + "'");
    e.kind = *k;
    for (std::int64_t endpoint : {e.src, e.dst})
      if (!g.index_of(endpoint))
        throw IntegrityError("edges[" + std::to_string(i) + "] references missing node " +
                             std::to_string(endpoint));
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  mark_leaves(g);
  return g;
}

CodePropertyGraph parse_cpg_export(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("document is not valid JSON");
  return parse_cpg_export(doc);
}

json to_json(const CodePropertyGraph& g) {
  json doc;
  doc["function_id"] = g.function_id;
  doc["label"] = g.label;
  doc["cwe"] = g.cwe_tags;
  doc["code"] = g.source_code;
  json nodes = json::array();
  for (const CodeNode& n : g.nodes) nodes.push_back({{"id", n.id}, {"type", n.node_type}, {"code", n.code_fragment}});
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const CodeEdge& e : g.edges)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", edge_kind_name(e.kind)}});
  doc["edges"] = std::move(edges);
  return doc;
}

std::optional<CodePropertyGraph> filter_by_node_count(CodePropertyGraph graph, std::size_t max_nodes) {
  if (graph.node_count() > max_nodes) return std::nullopt;
  return graph;
}

CodePropertyGraph prune_nonleaf_properties(CodePropertyGraph graph) {
  for (CodeNode& n : graph.nodes)
    if (!n.is_leaf) n.code_fragment.clear();
  return graph;
}

std::vector<CodePropertyGraph> dedup_by_hash(std::vector<CodePropertyGraph> corpus) {
  std::unordered_set<std::string> seen;
  std::vector<CodePropertyGraph> out;
  out.reserve(corpus.size());
  for (auto& g : corpus)
    if (seen.insert(g.content_hash).second) out.push_back(std::move(g));
  return out;
}

namespace {

std::string normalize_ws(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string statement_key(std::string_view s) {
  std::string n = normalize_ws(s);
  while (!n.empty() && (n.back() == ';' || n.back() == '{' || n.back() == ' ')) n.pop_back();
  std::size_t lead = 0;
  while (lead < n.size() && (n[lead] == '}' || n[lead] == ' ')) ++lead;
  return n.substr(lead);
}

}  // namespace

std::vector<std::string> split_statements(std::string_view source_code) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= source_code.size()) {
    std::size_t end = source_code.find('\n', start);
    if (end == std::string_view::npos) end = source_code.size();
    std::string line = normalize_ws(source_code.substr(start, end - start));
    const bool only_braces = std::all_of(line.begin(), line.end(), [](char c) { return c == '{' || c == '}' || c == ' '; });
    if (!line.empty() && !only_braces) out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}

std::map<std::size_t, std::int64_t> map_statements_to_nodes(std::string_view source_code,
                                                             const CodePropertyGraph& graph) {
  const std::vector<std::string> statements = split_statements(source_code);
  std::vector<std::string> keys;
  keys.reserve(graph.nodes.size());
  for (const CodeNode& n : graph.nodes) keys.push_back(statement_key(n.code_fragment));

  std::map<std::size_t, std::int64_t> mapping;
  std::set<std::size_t> used;
  std::vector<std::string> unmapped;
  for (std::size_t s = 0; s < statements.size(); ++s) {
    const std::string key = statement_key(statements[s]);
    // (unused-first, containment-only, fragment length, row)
    std::optional<std::tuple<bool, bool, std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i].empty()) continue;
      const bool exact = keys[i] == key;
      if (!exact && keys[i].find(key) == std::string::npos) continue;
      auto cand = std::make_tuple(used.contains(i), !exact, exact ? 0 : keys[i].size(), i);
      if (!best || cand < *best) best = cand;
    }
    if (!best) {
      unmapped.push_back(statements[s]);
      continue;
    }
    const std::size_t row = std::get<3>(*best);
    used.insert(row);
    mapping.emplace(s, graph.nodes[row].id);
  }
  if (!unmapped.empty()) {
    std::string msg = "no node carries statement(s):";
    for (const auto& u : unmapped) msg += " '" + u + "'";
    throw MappingError(msg);
  }
  return mapping;
}

Split split_from_hash(std::string_view content_hash) {
  if (content_hash.size() < 2) return Split::kTrain;
  const int bucket = std::stoi(std::string(content_hash.substr(0, 2)), nullptr, 16) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValid : Split::kTest;
}

json to_corpus_line(const CorpusRecord& record) {
  json line = to_json(record.graph);
  line["split"] = split_name(record.split);
  line["md5"] = record.graph.content_hash;
  return line;
}

CorpusRecord parse_corpus_line(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("corpus line is not valid JSON");
  CorpusRecord rec;
  rec.graph = parse_cpg_export(doc);
  if (auto it = doc.find("split"); it != doc.end()) {
    auto s = it->is_string() ? parse_split(it->get<std::string>()) : std::nullopt;
    if (!s) throw ParseError("field 'split' must be one of train/valid/test");
    rec.split = *s;
  } else {
    rec.split = split_from_hash(rec.graph.content_hash);
  }
  if (auto it = doc.find("md5"); it != doc.end() && (!it->is_string() || it->get<std::string>() != rec.graph.content_hash))
    throw IntegrityError("md5 of function '" + rec.graph.function_id + "' does not match its code");
  return rec;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& r : records) out << to_corpus_line(r).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path.string());
  std::vector<CorpusRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_corpus_line(line));
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CorpusRecord> ingest_documents(const std::filesystem::path& input_dir, const IngestOptions& options,
                                           IngestStats* stats) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(input_dir)) throw IoError("input directory not found: " + input_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".json" || ext == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestStats local;
  std::vector<CodePropertyGraph> graphs;
  std::vector<std::optional<Split>> explicit_split;
  auto take = [&](std::string_view text, const std::string& origin) {
    ++local.documents;
    try {
      json doc = json::parse(text, nullptr, false);
      if (doc.is_discarded()) throw ParseError("document is not valid JSON");
      CodePropertyGraph g = parse_cpg_export(doc);
      std::optional<Split> split;
      if (auto it = doc.find("split"); it != doc.end() && it->is_string()) split = parse_split(it->get<std::string>());
      auto kept = filter_by_node_count(std::move(g), options.max_nodes);
      if (!kept) {
        ++local.oversized;
        return;
      }
      graphs.push_back(prune_nonleaf_properties(std::move(*kept)));
      explicit_split.push_back(split);
    } catch (const Error& e) {
      ++local.rejected;
      log::warn("skipping " + origin + ": " + e.what());
    }
  };

  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError("cannot read " + f.string());
    if (f.extension() == ".jsonl") {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        take(line, f.filename().string() + ":" + std::to_string(lineno));
      }
    } else {
      std::stringstream ss;
      ss << in.rdbuf();
      take(ss.str(), f.filename().string());
    }
  }

  std::vector<CorpusRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (options.dedup && !seen.insert(graphs[i].content_hash).second) {
      ++local.duplicates;
      continue;
    }
    Split split = explicit_split[i].value_or(split_from_hash(graphs[i].content_hash));
    out.push_back({std::move(graphs[i]), split});
  }
  local.written = out.size();
  if (stats) *stats = local;
  return out;
}

}  // namespace vulgraph::cpg

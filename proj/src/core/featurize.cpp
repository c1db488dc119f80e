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

#include "core/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "core/errors.hpp"
#include "core/tensor_io.hpp"

namespace vulgraph::features {

TypeVocabulary::TypeVocabulary(std::vector<std::string> types) {
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  types_ = std::move(types);
  for (std::size_t i = 0; i < types_.size(); ++i) index_.emplace(types_[i], i);
}

TypeVocabulary TypeVocabulary::fit(std::span<const cpg::CodePropertyGraph* const> train_graphs) {
  std::vector<std::string> types;
  for (const auto* g : train_graphs)
    for (const auto& n : g->nodes) types.push_back(n.node_type);
  return TypeVocabulary(std::move(types));
}

std::size_t TypeVocabulary::index_of(std::string_view node_type) const {
  auto it = index_.find(std::string(node_type));
  return it == index_.end() ? unk_index() : it->second;
}

Vector encode_node_type(std::string_view node_type, const TypeVocabulary& vocab) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(vocab.width()));
  v(static_cast<Eigen::Index>(vocab.index_of(node_type))) = 1.0;
  return v;
}

std::vector<std::string> tokenize_code(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (word(c)) {
      std::size_t j = i;
      while (j < text.size() && word(text[j])) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashingProvider::HashingProvider(int dim) : dim_(dim) {
  if (dim < 1) throw ConfigError("hashing provider needs content_dim >= 1");
}

Vector HashingProvider::embed_fragment(std::string_view fragment) const {
  Vector v = Vector::Zero(dim_);
  const auto tokens = tokenize_code(fragment);
  if (tokens.empty()) return v;
  for (const auto& t : tokens) {
    const std::uint64_t h = fnv1a(t);
    v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))) += (h >> 63) ? -1.0 : 1.0;
  }
  return v / static_cast<double>(tokens.size());
}

Vector HashingProvider::embed_sequence(std::string_view code) const { return embed_fragment(code); }

std::unique_ptr<EmbeddingProvider> HashingProvider::clone() const { return std::make_unique<HashingProvider>(*this); }

const char* pooling_name(Pooling p) noexcept { return p == Pooling::kMean ? "mean" : "first"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::kMean;
  if (name == "first") return Pooling::kFirst;
  throw ConfigError("unknown pooling '" + std::string(name) + "' (expected mean or first)");
}

std::vector<int> TableProvider::pool_rows(std::vector<int> rows) const {
  if (pooling_ == Pooling::kFirst && rows.size() > 1) rows.resize(1);
  return rows;
}

Vector TableProvider::embed_fragment(std::string_view fragment) const {
  Vector v = Vector::Zero(table_.cols());
  const auto rows = lookup(fragment);
  if (rows.empty()) return v;
  for (int r : rows) v += table_.row(r).transpose();
  return v / static_cast<double>(rows.size());
}

Vector TableProvider::embed_sequence(std::string_view code) const { return embed_fragment(code); }

LookupTableProvider::LookupTableProvider(int buckets, int dim, std::uint64_t seed, Pooling pooling)
    : TableProvider(Matrix::Zero(buckets, dim), pooling) {
  if (buckets < 1 || dim < 1) throw ConfigError("lookup provider needs buckets >= 1 and content_dim >= 1");
  std::mt19937_64 rng(seed ^ 0x6c6f6f6b7570ULL);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (Eigen::Index r = 0; r < table().rows(); ++r)
    for (Eigen::Index c = 0; c < table().cols(); ++c) table()(r, c) = normal(rng);
}

LookupTableProvider::LookupTableProvider(Matrix table, Pooling pooling) : TableProvider(std::move(table), pooling) {}

std::vector<int> LookupTableProvider::lookup(std::string_view text) const {
  std::vector<int> rows;
  for (const auto& t : tokenize_code(text))
    rows.push_back(static_cast<int>(fnv1a(t) % static_cast<std::uint64_t>(table().rows())));
  return pool_rows(std::move(rows));
}

std::unique_ptr<EmbeddingProvider> LookupTableProvider::clone() const {
  return std::make_unique<LookupTableProvider>(*this);
}

PretrainedProvider::PretrainedProvider(std::string model_name, std::vector<std::string> tokens, Matrix table,
                                       Pooling pooling)
    : TableProvider(std::move(table), pooling), model_name_(std::move(model_name)), tokens_(std::move(tokens)) {
  if (static_cast<Eigen::Index>(tokens_.size()) != this->table().rows())
    throw DimensionError("pretrained table has " + std::to_string(this->table().rows()) + " rows but " +
                         std::to_string(tokens_.size()) + " tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
  if (auto it = index_.find("<unk>"); it != index_.end()) unk_row_ = it->second;
}

std::unique_ptr<PretrainedProvider> PretrainedProvider::load(const std::string& model_name, Pooling pooling) {
  namespace fs = std::filesystem;
  fs::path base(model_name);
  if (!fs::exists(base.string() + ".json")) {
    const char* dir = std::getenv("VULGRAPH_MODEL_DIR");
    if (dir) base = fs::path(dir) / model_name;
  }
  const std::string name = "pretrained:" + model_name;
  std::ifstream side(base.string() + ".json");
  if (!side) throw ProviderError(name, "no exported embedding table at " + base.string() + ".json");
  nlohmann::json meta = nlohmann::json::parse(side, nullptr, false);
  if (meta.is_discarded() || !meta.contains("tokens") || !meta.contains("rows") || !meta.contains("cols"))
    throw ProviderError(name, "sidecar must hold tokens, rows and cols");
  std::ifstream data(base.string() + ".bin", std::ios::binary);
  if (!data) throw ProviderError(name, "missing " + base.string() + ".bin");
  Matrix table;
  try {
    table = io::read_f64(data, meta["rows"].get<Eigen::Index>(), meta["cols"].get<Eigen::Index>());
  } catch (const Error& e) {
    throw ProviderError(name, e.what());
  }
  return std::make_unique<PretrainedProvider>(model_name, meta["tokens"].get<std::vector<std::string>>(),
                                              std::move(table), pooling);
}

std::vector<int> PretrainedProvider::lookup(std::string_view text) const {
  std::vector<int> rows;
  for (const auto& t : tokenize_code(text)) {
    auto it = index_.find(t);
    if (it != index_.end())
      rows.push_back(it->second);
    else if (unk_row_ >= 0)
      rows.push_back(unk_row_);
  }
  return pool_rows(std::move(rows));
}

std::unique_ptr<EmbeddingProvider> PretrainedProvider::clone() const {
  return std::make_unique<PretrainedProvider>(*this);
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec) {
  const Pooling pooling = parse_pooling(spec.pooling);
  if (spec.provider == "hashing") return std::make_unique<HashingProvider>(spec.content_dim);
  if (spec.provider.rfind("lookup:", 0) == 0) {
    int buckets = 0;
    try {
      buckets = std::stoi(spec.provider.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("provider '" + spec.provider + "': bucket count must be an integer");
    }
    return std::make_unique<LookupTableProvider>(buckets, spec.content_dim, spec.seed, pooling);
  }
  if (spec.provider.rfind("pretrained:", 0) == 0) {
    const std::string model = spec.provider.substr(11);
    if (model.empty()) throw ConfigError("provider 'pretrained:' needs a model name");
    return PretrainedProvider::load(model, pooling);
  }
  throw ConfigError("unknown provider '" + spec.provider + "' (expected hashing, lookup:<n> or pretrained:<name>)");
}

ProviderState save_provider(const EmbeddingProvider& provider) {
  ProviderState state;
  state.meta["name"] = provider.name();
  state.meta["content_dim"] = provider.content_dim();
  if (const auto* t = dynamic_cast<const TableProvider*>(&provider)) {
    state.meta["pooling"] = pooling_name(t->pooling());
    state.table = t->table();
  }
  if (const auto* p = dynamic_cast<const PretrainedProvider*>(&provider)) state.meta["tokens"] = p->tokens();
  return state;
}

std::unique_ptr<EmbeddingProvider> restore_provider(const ProviderState& state) {
  const auto name = state.meta.at("name").get<std::string>();
  if (name == "hashing") return std::make_unique<HashingProvider>(state.meta.at("content_dim").get<int>());
  const Pooling pooling = parse_pooling(state.meta.value("pooling", "mean"));
  if (name.rfind("lookup:", 0) == 0) return std::make_unique<LookupTableProvider>(state.table, pooling);
  if (name.rfind("pretrained:", 0) == 0)
    return std::make_unique<PretrainedProvider>(name.substr(11), state.meta.at("tokens").get<std::vector<std::string>>(),
                                                state.table, pooling);
  throw ConfigError("checkpoint references unknown provider '" + name + "'");
}

Vector embed_node_content(std::string_view fragment, const EmbeddingProvider& provider) {
  Vector v;
  try {
    v = provider.embed_fragment(fragment);
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(provider.name(), e.what());
  }
  if (v.size() != provider.content_dim())
    throw ProviderError(provider.name(), "returned " + std::to_string(v.size()) + " values, expected " +
                                             std::to_string(provider.content_dim()));
  if (!v.allFinite()) throw ProviderError(provider.name(), "returned a non-finite embedding");
  return v;
}

Vector build_node_feature(const Vector& type_vec, const Vector& content_vec) {
  if (type_vec.size() == 0) throw PreconditionError("node feature needs a non-empty type encoding");
  if (!type_vec.allFinite() || !content_vec.allFinite()) throw PreconditionError("node feature inputs must be finite");
  Vector x(type_vec.size() + content_vec.size());
  x << type_vec, content_vec;
  return x;
}

Matrix pad_to_state_dim(const Matrix& x, Eigen::Index state_dim) {
  if (state_dim < x.cols())
    throw DimensionError("state dim " + std::to_string(state_dim) + " is smaller than feature dim " +
                         std::to_string(x.cols()));
  Matrix h = Matrix::Zero(x.rows(), state_dim);
  h.leftCols(x.cols()) = x;
  return h;
}

Matrix NodeFeatures::x() const {
  Matrix out(type_onehot.rows(), type_onehot.cols() + content.cols());
  out << type_onehot, content;
  return out;
}

NodeFeatures featurize(const cpg::CodePropertyGraph& graph, const TypeVocabulary& vocab,
                       const EmbeddingProvider& provider) {
  const auto n = static_cast<Eigen::Index>(graph.node_count());
  NodeFeatures f;
  f.type_onehot = Matrix::Zero(n, static_cast<Eigen::Index>(vocab.width()));
  f.content = Matrix::Zero(n, provider.content_dim());
  const auto* table = dynamic_cast<const TableProvider*>(&provider);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = graph.nodes[static_cast<std::size_t>(i)];
    f.node_ids.push_back(node.id);
    f.type_onehot(i, static_cast<Eigen::Index>(vocab.index_of(node.node_type))) = 1.0;
    f.content.row(i) = embed_node_content(node.code_fragment, provider).transpose();
    if (table) f.content_rows.push_back(table->lookup(node.code_fragment));
  }
  try {
    f.sequence = provider.embed_sequence(graph.source_code);
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(provider.name(), e.what());
  }
  if (f.sequence.size() != provider.sequence_dim() || !f.sequence.allFinite())
    throw ProviderError(provider.name(), "invalid sequence embedding");
  if (table) f.sequence_rows = table->lookup(graph.source_code);
  return f;
}

void write_feature_dump(const std::filesystem::path& path, const NodeFeatures& features) {
  const Matrix x = features.x();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  io::write_f64(out, x);
  nlohmann::json side;
  side["node_ids"] = features.node_ids;
  side["rows"] = x.rows();
  side["cols"] = x.cols();
  side["type_width"] = features.type_onehot.cols();
  side["content_dim"] = features.content.cols();
  side["dtype"] = "f64le";
  side["layout"] = "row-major";
  io::write_file(path.string() + ".json", side.dump(2) + "\n");
}

Matrix read_feature_dump(const std::filesystem::path& path, std::vector<std::int64_t>* node_ids) {
  nlohmann::json side = nlohmann::json::parse(io::read_file(path.string() + ".json"), nullptr, false);
  if (side.is_discarded()) throw ParseError("feature dump sidecar is not valid JSON");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Matrix x = io::read_f64(in, side.at("rows").get<Eigen::Index>(), side.at("cols").get<Eigen::Index>());
  if (node_ids) *node_ids = side.at("node_ids").get<std::vector<std::int64_t>>();
  return x;
}

}  // namespace vulgraph::features

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
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/cpg.hpp"
#include "json.hpp"

namespace vulgraph::features {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Node-type label encoding. Known types take indices [0, size()); the UNK
// slot is index size(). Built from the training split only.
class TypeVocabulary {
 public:
  TypeVocabulary() = default;
  // Sorted unique types.
  explicit TypeVocabulary(std::vector<std::string> types);
  static TypeVocabulary fit(std::span<const cpg::CodePropertyGraph* const> train_graphs);

  std::size_t size() const { return types_.size(); }
  std::size_t width() const { return types_.size() + 1; }
  std::size_t unk_index() const { return types_.size(); }
  std::size_t index_of(std::string_view node_type) const;
  const std::vector<std::string>& types() const { return types_; }

 private:
  std::vector<std::string> types_;
  std::unordered_map<std::string, std::size_t> index_;
};

Vector encode_node_type(std::string_view node_type, const TypeVocabulary& vocab);

// Identifier/number runs are one token; every other non-space byte is its own token.
std::vector<std::string> tokenize_code(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text) noexcept;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual int content_dim() const = 0;
  virtual int sequence_dim() const = 0;
  virtual bool trainable() const = 0;
  // Must return zeros for text with no tokens.
  virtual Vector embed_fragment(std::string_view fragment) const = 0;
  virtual Vector embed_sequence(std::string_view code) const = 0;
  virtual std::unique_ptr<EmbeddingProvider> clone() const = 0;
};

// Signed feature hashing of tokens into `dim` buckets, averaged over tokens.
class HashingProvider final : public EmbeddingProvider {
 public:
  explicit HashingProvider(int dim = 64);

  std::string name() const override { return "hashing"; }
  int content_dim() const override { return dim_; }
  int sequence_dim() const override { return dim_; }
  bool trainable() const override { return false; }
  Vector embed_fragment(std::string_view fragment) const override;
  Vector embed_sequence(std::string_view code) const override;
  std::unique_ptr<EmbeddingProvider> clone() const override;

 private:
  int dim_;
};

enum class Pooling { kMean, kFirst };
const char* pooling_name(Pooling p) noexcept;
Pooling parse_pooling(std::string_view name);

// Provider backed by a token-embedding table. Embeddings pool table rows, so
// the table can be optimised together with the graph model.
class TableProvider : public EmbeddingProvider {
 public:
  int content_dim() const override { return static_cast<int>(table_.cols()); }
  int sequence_dim() const override { return static_cast<int>(table_.cols()); }
  bool trainable() const override { return true; }
  Vector embed_fragment(std::string_view fragment) const override;
  Vector embed_sequence(std::string_view code) const override;

  // Table rows that pool into the embedding of `text` (empty for no tokens).
  virtual std::vector<int> lookup(std::string_view text) const = 0;

  Matrix& table() { return table_; }
  const Matrix& table() const { return table_; }
  Pooling pooling() const { return pooling_; }

 protected:
  TableProvider(Matrix table, Pooling pooling) : table_(std::move(table)), pooling_(pooling) {}
  std::vector<int> pool_rows(std::vector<int> rows) const;

 private:
  Matrix table_;
  Pooling pooling_;
};

// Tokens hashed into `buckets` rows of a randomly initialised table.
class LookupTableProvider final : public TableProvider {
 public:
  LookupTableProvider(int buckets, int dim, std::uint64_t seed, Pooling pooling = Pooling::kMean);
  LookupTableProvider(Matrix table, Pooling pooling);

  std::string name() const override { return "lookup:" + std::to_string(table().rows()); }
  std::vector<int> lookup(std::string_view text) const override;
  std::unique_ptr<EmbeddingProvider> clone() const override;
};

// Token embeddings exported from a pretrained code language model: a
// row-major f64 matrix file plus a JSON sidecar {"tokens": [...], "rows", "cols"}.
// Tokens absent from the vocabulary map to the "<unk>" row when present,
// otherwise they are skipped.
class PretrainedProvider final : public TableProvider {
 public:
  PretrainedProvider(std::string model_name, std::vector<std::string> tokens, Matrix table,
                     Pooling pooling = Pooling::kMean);
  // Resolves `<model_name>` as a path prefix, else under $VULGRAPH_MODEL_DIR.
  static std::unique_ptr<PretrainedProvider> load(const std::string& model_name, Pooling pooling);

  std::string name() const override { return "pretrained:" + model_name_; }
  std::vector<int> lookup(std::string_view text) const override;
  std::unique_ptr<EmbeddingProvider> clone() const override;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::string model_name_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int unk_row_ = -1;
};

struct ProviderSpec {
  std::string provider = "hashing";  // hashing | lookup:<buckets> | pretrained:<model-name>
  int content_dim = 64;              // ignored by pretrained providers
  std::string pooling = "mean";
  std::uint64_t seed = 0;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec);

// Provider state for checkpoints: JSON metadata plus the table when there is one.
struct ProviderState {
  nlohmann::json meta;
  Matrix table;
};
ProviderState save_provider(const EmbeddingProvider& provider);
std::unique_ptr<EmbeddingProvider> restore_provider(const ProviderState& state);

// Fragment embedding with the provider contract enforced: wraps provider
// failures in ProviderError and rejects non-finite or mis-sized output.
Vector embed_node_content(std::string_view fragment, const EmbeddingProvider& provider);

// concat(type_vec, content_vec). An empty type vector is a PreconditionError.
Vector build_node_feature(const Vector& type_vec, const Vector& content_vec);

// Copies X into the leading columns of an n x state_dim zero matrix.
Matrix pad_to_state_dim(const Matrix& x, Eigen::Index state_dim);

// Per-graph featurisation in canonical (ascending id) node order.
struct NodeFeatures {
  std::vector<std::int64_t> node_ids;
  Matrix type_onehot;  // n x vocab.width()
  Matrix content;      // n x content_dim
  Vector sequence;     // sequence_dim
  // Table rows per node and for the whole function; only for TableProvider.
  std::vector<std::vector<int>> content_rows;
  std::vector<int> sequence_rows;

  Eigen::Index rows() const { return type_onehot.rows(); }
  Eigen::Index feature_dim() const { return type_onehot.cols() + content.cols(); }
  Matrix x() const;  // [type_onehot | content]
};

NodeFeatures featurize(const cpg::CodePropertyGraph& graph, const TypeVocabulary& vocab,
                       const EmbeddingProvider& provider);

// Feature dump: raw little-endian f64 rows at `path`, JSON sidecar at `path`.json.
void write_feature_dump(const std::filesystem::path& path, const NodeFeatures& features);
Matrix read_feature_dump(const std::filesystem::path& path, std::vector<std::int64_t>* node_ids = nullptr);

}  // namespace vulgraph::features

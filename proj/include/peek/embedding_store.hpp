// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "peek/kg_dataset.hpp"

namespace peek {

/// Read-only map from fact id to a fixed-dimension float vector.
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t dim, std::string source, std::optional<int> layer = std::nullopt);

  /// Validates length, finiteness and id uniqueness. Only used while building.
  void insert(const std::string& id, std::vector<float> v);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& source() const noexcept { return source_; }
  std::optional<int> layer() const noexcept { return layer_; }
  /// Ids in file order.
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::span<const float> get(const std::string& id) const;

  /// Copy with every vector scaled to unit L2 norm (zero vectors unchanged).
  EmbeddingStore l2_normalized() const;

 private:
  std::size_t dim_;
  std::string source_;
  std::optional<int> layer_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

/// Dispatches on the first bytes: "PEEKVEC1" selects the binary reader.
EmbeddingStore load_vectors(const std::filesystem::path& path);
EmbeddingStore load_vectors_jsonl(const std::filesystem::path& path);
EmbeddingStore load_vectors_binary(const std::filesystem::path& path);

void write_vectors_jsonl(const EmbeddingStore& store, const std::filesystem::path& path);
void write_vectors_binary(const EmbeddingStore& store, const std::filesystem::path& path);

struct CoverageReport {
  std::vector<std::string> missing_ids;
  bool complete() const noexcept { return missing_ids.empty(); }
};

CoverageReport coverage_check(const EmbeddingStore& store, const std::vector<Fact>& facts);

}  // namespace peek

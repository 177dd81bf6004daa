// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "peek/util.hpp"

namespace peek {

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Throws ValidationError if a field is empty or contains a tab or newline.
void validate_triple(const Triple& t);

/// Immutable indexed edge set. Construction deduplicates, keeping first occurrence.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(const std::vector<Triple>& triples);

  const std::vector<Triple>& triples() const noexcept { return triples_; }
  std::size_t size() const noexcept { return triples_.size(); }
  bool contains(const Triple& t) const;
  bool contains(std::string_view h, std::string_view r, std::string_view t) const;

  /// relation-id -> positions into triples(), ascending.
  const std::map<std::string, std::vector<std::size_t>>& relation_index() const noexcept {
    return relations_;
  }
  /// Sorted, unique.
  const std::vector<std::string>& entities() const noexcept { return entities_; }

 private:
  std::vector<Triple> triples_;
  std::unordered_set<std::string> edges_;
  std::map<std::string, std::vector<std::size_t>> relations_;
  std::vector<std::string> entities_;
};

KnowledgeGraph load_triples(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SampleSpec {
  double fraction = 1.0;
  std::size_t negatives_per_positive = 0;
  std::uint64_t seed = 0;
  SplitFractions splits;

  void validate() const;
};

/// Per-relation count: round(n * fraction), at least 1, at most n.
std::size_t stratified_count(std::size_t n, double fraction);

KnowledgeGraph stratified_sample(const KnowledgeGraph& g, const SampleSpec& spec);

/// Tail-corrupted negatives, k per positive of `g`, checked against `full`.
std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const KnowledgeGraph& full,
                                     std::size_t k, std::uint64_t seed);

class TemplateSet {
 public:
  TemplateSet() = default;
  void add(const std::string& relation, const std::string& tmpl);
  bool has(const std::string& relation) const { return templates_.count(relation) != 0; }
  const std::string& get(const std::string& relation) const;
  std::size_t size() const noexcept { return templates_.size(); }

 private:
  std::map<std::string, std::string> templates_;
};

TemplateSet load_templates(const std::filesystem::path& path);

/// Substitutes "{h}" and "{t}" in the template; nothing else changes.
std::string render_template(const std::string& tmpl, const std::string& head,
                            const std::string& tail);
std::string verbalize(const Triple& t, const TemplateSet& templates);

enum class Polarity { Positive, Negative };
enum class Split { Unassigned, Train, Val, Test };

const char* to_string(Polarity p);
const char* to_string(Split s);
Polarity polarity_from_string(std::string_view s);
Split split_from_string(std::string_view s);

struct Fact {
  std::string id;
  Triple triple;
  std::string text;
  Polarity polarity = Polarity::Positive;
  Split split = Split::Unassigned;
  /// For negatives: id of the positive fact it was corrupted from.
  std::string source_id;
};

std::string fact_id(const Triple& t, Polarity p);

Fact make_fact(const Triple& t, Polarity p, std::string text, std::string source_id = {});

/// Seeded shuffle of the positives, cut floor/floor/remainder; negatives
/// inherit the split of their source positive. Input order is preserved.
std::vector<Fact> assign_splits(std::vector<Fact> facts, const SampleSpec& spec);

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};
SplitCounts split_counts(std::size_t n, const SplitFractions& f);

struct InductiveStats {
  std::size_t train_entities = 0;
  std::size_t val_entities = 0;
  std::size_t test_entities = 0;
  std::size_t test_minus_train = 0;
};

InductiveStats inductive_stats(const std::vector<Fact>& facts);

json fact_to_json(const Fact& f);
Fact fact_from_json(const json& j);
std::vector<Fact> read_facts(const std::filesystem::path& path);
/// One canonical JSON object per line. `extra` keys are merged into each line.
std::string facts_to_jsonl(const std::vector<Fact>& facts, const json& extra = json::object());

}  // namespace peek

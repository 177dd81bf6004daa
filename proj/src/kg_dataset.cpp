// SPDX-License-Identifier: Apache-2.0
#include "peek/kg_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "peek/error.hpp"

namespace peek {

namespace {

constexpr char kSep = '\x1f';

std::string edge_key(std::string_view h, std::string_view r, std::string_view t) {
  std::string k;
  k.reserve(h.size() + r.size() + t.size() + 2);
  k.append(h).push_back(kSep);
  k.append(r).push_back(kSep);
  k.append(t);
  return k;
}

bool bad_field(std::string_view s) {
  return s.empty() || s.find_first_of("\t\n\r") != std::string_view::npos;
}

}  // namespace

void validate_triple(const Triple& t) {
  if (bad_field(t.head) || bad_field(t.relation) || bad_field(t.tail))
    throw ValidationError("invalid triple (" + t.head + ", " + t.relation + ", " + t.tail +
                          "): fields must be non-empty and free of tabs/newlines");
}

KnowledgeGraph::KnowledgeGraph(const std::vector<Triple>& triples) {
  std::set<std::string> entities;
  for (const auto& t : triples) {
    validate_triple(t);
    if (!edges_.insert(edge_key(t.head, t.relation, t.tail)).second) continue;
    relations_[t.relation].push_back(triples_.size());
    triples_.push_back(t);
    entities.insert(t.head);
    entities.insert(t.tail);
  }
  entities_.assign(entities.begin(), entities.end());
}

bool KnowledgeGraph::contains(const Triple& t) const {
  return contains(t.head, t.relation, t.tail);
}

bool KnowledgeGraph::contains(std::string_view h, std::string_view r, std::string_view t) const {
  return edges_.count(edge_key(h, r, t)) != 0;
}

KnowledgeGraph load_triples(const std::filesystem::path& path) {
  std::vector<Triple> triples;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 3)
      throw ValidationError(where + ": expected 3 tab-separated fields, got " +
                            std::to_string(fields.size()));
    for (auto f : fields)
      if (f.empty()) throw ValidationError(where + ": empty field");
    triples.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  });
  if (triples.empty()) throw ValidationError(path.string() + ": no triples");
  return KnowledgeGraph(triples);
}

void SampleSpec::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("sample fraction must be in (0, 1], got " + std::to_string(fraction));
  for (double f : {splits.train, splits.val, splits.test})
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0, 1]");
  if (std::abs(splits.train + splits.val + splits.test - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1");
}

std::size_t stratified_count(std::size_t n, double fraction) {
  if (n == 0) return 0;
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n);
}

KnowledgeGraph stratified_sample(const KnowledgeGraph& g, const SampleSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Triple> out;
  for (const auto& [relation, positions] : g.relation_index()) {
    const std::size_t k = stratified_count(positions.size(), spec.fraction);
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    std::vector<std::size_t> pool = positions;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    for (auto p : pool) out.push_back(g.triples()[p]);
  }
  return KnowledgeGraph(out);
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const KnowledgeGraph& full,
                                     std::size_t k, std::uint64_t seed) {
  std::vector<Triple> out;
  if (k == 0) return out;
  const auto& entities = full.entities();
  if (entities.empty()) throw ValidationError("negative sampling needs a non-empty entity set");
  const std::size_t max_draws = 100 * entities.size();
  Rng rng(seed);
  std::unordered_set<std::string> emitted;
  out.reserve(g.size() * k);
  for (const auto& pos : g.triples()) {
    for (std::size_t i = 0; i < k; ++i) {
      bool found = false;
      for (std::size_t draw = 0; draw < max_draws; ++draw) {
        const auto& cand = entities[rng.uniform_index(entities.size())];
        if (cand == pos.tail || full.contains(pos.head, pos.relation, cand)) continue;
        // Distinct negatives keep fact ids unique across the dataset.
        if (!emitted.insert(edge_key(pos.head, pos.relation, cand)).second) continue;
        out.push_back({pos.head, pos.relation, cand});
        found = true;
        break;
      }
      if (!found)
        throw ValidationError("negative sampling exhausted " + std::to_string(max_draws) +
                              " draws for (" + pos.head + ", " + pos.relation + ", " + pos.tail +
                              ")");
    }
  }
  return out;
}

void TemplateSet::add(const std::string& relation, const std::string& tmpl) {
  auto count = [&](std::string_view needle) {
    std::size_t c = 0;
    for (auto p = tmpl.find(needle); p != std::string::npos; p = tmpl.find(needle, p + 1)) ++c;
    return c;
  };
  if (relation.empty()) throw ValidationError("template with empty relation id");
  if (count("{h}") != 1 || count("{t}") != 1)
    throw ValidationError("template for relation '" + relation +
                          "' must contain {h} and {t} exactly once");
  templates_[relation] = tmpl;
}

const std::string& TemplateSet::get(const std::string& relation) const {
  auto it = templates_.find(relation);
  if (it == templates_.end())
    throw ValidationError("no template for relation '" + relation + "'");
  return it->second;
}

TemplateSet load_templates(const std::filesystem::path& path) {
  TemplateSet set;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected relation<TAB>template");
    try {
      set.add(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return set;
}

std::string render_template(const std::string& tmpl, const std::string& head,
                            const std::string& tail) {
  // Both placeholders are located in the original template so a head that
  // itself contains "{t}" is not substituted twice.
  const auto ph = tmpl.find("{h}");
  const auto pt = tmpl.find("{t}");
  if (ph == std::string::npos || pt == std::string::npos)
    throw ValidationError("template lacks a placeholder: " + tmpl);
  const bool head_first = ph < pt;
  const auto first = head_first ? ph : pt;
  const auto second = head_first ? pt : ph;
  std::string out;
  out.append(tmpl, 0, first);
  out += head_first ? head : tail;
  out.append(tmpl, first + 3, second - first - 3);
  out += head_first ? tail : head;
  out.append(tmpl, second + 3, std::string::npos);
  return out;
}

std::string verbalize(const Triple& t, const TemplateSet& templates) {
  return render_template(templates.get(t.relation), t.head, t.tail);
}

const char* to_string(Polarity p) { return p == Polarity::Positive ? "positive" : "negative"; }

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    default: return "unassigned";
  }
}

Polarity polarity_from_string(std::string_view s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  throw ValidationError("unknown polarity '" + std::string(s) + "'");
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

std::string fact_id(const Triple& t, Polarity p) {
  return md5_hex(edge_key(t.head, t.relation, t.tail) + kSep + to_string(p));
}

Fact make_fact(const Triple& t, Polarity p, std::string text, std::string source_id) {
  Fact f;
  f.id = fact_id(t, p);
  f.triple = t;
  f.text = std::move(text);
  f.polarity = p;
  f.source_id = std::move(source_id);
  return f;
}

SplitCounts split_counts(std::size_t n, const SplitFractions& f) {
  // The epsilon absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
  auto cut = [&](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  SplitCounts c;
  c.train = std::min(cut(f.train), n);
  c.val = std::min(cut(f.val), n - c.train);
  c.test = n - c.train - c.val;
  return c;
}

std::vector<Fact> assign_splits(std::vector<Fact> facts, const SampleSpec& spec) {
  spec.validate();
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < facts.size(); ++i)
    if (facts[i].polarity == Polarity::Positive) positives.push_back(i);
  if (positives.size() < 3)
    throw ValidationError("need at least 3 positive facts to populate train/val/test, got " +
                          std::to_string(positives.size()));

  Rng rng(spec.seed);
  rng.shuffle(positives);
  const auto counts = split_counts(positives.size(), spec.splits);
  std::unordered_map<std::string, Split> by_id;
  for (std::size_t r = 0; r < positives.size(); ++r) {
    auto& f = facts[positives[r]];
    f.split = r < counts.train                ? Split::Train
              : r < counts.train + counts.val ? Split::Val
                                              : Split::Test;
    by_id[f.id] = f.split;
  }
  for (auto& f : facts) {
    if (f.polarity != Polarity::Negative) continue;
    auto it = by_id.find(f.source_id);
    if (it == by_id.end())
      throw ValidationError("negative fact " + f.id + " has no source positive in the dataset");
    f.split = it->second;
  }
  return facts;
}

InductiveStats inductive_stats(const std::vector<Fact>& facts) {
  std::set<std::string> train, val, test;
  for (const auto& f : facts) {
    std::set<std::string>* bucket = f.split == Split::Train ? &train
                                    : f.split == Split::Val ? &val
                                    : f.split == Split::Test ? &test
                                                             : nullptr;
    if (!bucket) continue;
    bucket->insert(f.triple.head);
    bucket->insert(f.triple.tail);
  }
  InductiveStats s;
  s.train_entities = train.size();
  s.val_entities = val.size();
  s.test_entities = test.size();
  for (const auto& e : test)
    if (!train.count(e)) ++s.test_minus_train;
  return s;
}

json fact_to_json(const Fact& f) {
  json j = {{"id", f.id},
            {"head", f.triple.head},
            {"relation", f.triple.relation},
            {"tail", f.triple.tail},
            {"text", f.text},
            {"polarity", to_string(f.polarity)},
            {"split", to_string(f.split)}};
  if (!f.source_id.empty()) j["source_id"] = f.source_id;
  return j;
}

Fact fact_from_json(const json& j) {
  Fact f;
  f.id = j.at("id").get<std::string>();
  f.triple = {j.at("head").get<std::string>(), j.at("relation").get<std::string>(),
              j.at("tail").get<std::string>()};
  f.text = j.at("text").get<std::string>();
  f.polarity = polarity_from_string(j.at("polarity").get<std::string>());
  f.split = split_from_string(j.value("split", std::string("unassigned")));
  f.source_id = j.value("source_id", std::string());
  return f;
}

std::vector<Fact> read_facts(const std::filesystem::path& path) {
  std::vector<Fact> out;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    try {
      out.push_back(fact_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return out;
}

std::string facts_to_jsonl(const std::vector<Fact>& facts, const json& extra) {
  std::string out;
  for (const auto& f : facts) {
    json j = fact_to_json(f);
    j.update(extra);
    out += canonical_dump(j);
    out.push_back('\n');
  }
  return out;
}

}  // namespace peek

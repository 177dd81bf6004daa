// SPDX-License-Identifier: Apache-2.0
#include "peek/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "peek/error.hpp"

namespace peek {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'E', 'K', 'V', 'E', 'C', '1'};

static_assert(std::numeric_limits<float>::is_iec559);

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string source, std::optional<int> layer)
    : dim_(dim), source_(std::move(source)), layer_(layer) {
  if (dim_ == 0) throw ValidationError("embedding dim must be positive");
}

void EmbeddingStore::insert(const std::string& id, std::vector<float> v) {
  if (id.empty()) throw ValidationError("empty embedding id");
  if (v.size() != dim_)
    throw ValidationError("embedding '" + id + "' has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(dim_));
  for (float x : v)
    if (!std::isfinite(x)) throw ValidationError("embedding '" + id + "' has a non-finite component");
  if (!index_.emplace(id, ids_.size()).second)
    throw ValidationError("duplicate embedding id '" + id + "'");
  ids_.push_back(id);
  data_.insert(data_.end(), v.begin(), v.end());
}

std::span<const float> EmbeddingStore::get(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("no embedding for fact id '" + id + "'");
  return {data_.data() + it->second * dim_, dim_};
}

EmbeddingStore EmbeddingStore::l2_normalized() const {
  EmbeddingStore out(dim_, source_, layer_);
  for (const auto& id : ids_) {
    auto v = get(id);
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double norm = std::sqrt(sq);
    std::vector<float> n(v.begin(), v.end());
    if (norm > 0.0)
      for (auto& x : n) x = static_cast<float>(x / norm);
    out.insert(id, std::move(n));
  }
  return out;
}

EmbeddingStore load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char head[sizeof kMagic] = {};
  in.read(head, sizeof head);
  if (in.gcount() == sizeof head && std::memcmp(head, kMagic, sizeof kMagic) == 0)
    return load_vectors_binary(path);
  return load_vectors_jsonl(path);
}

EmbeddingStore load_vectors_jsonl(const std::filesystem::path& path) {
  std::optional<EmbeddingStore> store;
  std::size_t record = 0;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    const auto where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!store) {
      if (j.value("format", "") != "peekvec" || j.value("version", 0) != 1)
        throw ValidationError(where + ": missing peekvec version 1 header");
      const auto dim = j.value("dim", std::int64_t{0});
      if (dim <= 0) throw ValidationError(where + ": header dim must be positive");
      std::optional<int> layer;
      if (j.contains("layer") && !j["layer"].is_null()) layer = j["layer"].get<int>();
      store.emplace(static_cast<std::size_t>(dim), j.value("source", std::string()), layer);
      return;
    }
    const auto tag = where + " (record " + std::to_string(record++) + ")";
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("v") ||
        !j["v"].is_array())
      throw ValidationError(tag + ": expected {\"id\":..., \"v\":[...]}");
    std::vector<float> v;
    v.reserve(j["v"].size());
    for (const auto& x : j["v"]) {
      if (!x.is_number()) throw ValidationError(tag + ": non-finite or non-numeric component");
      v.push_back(static_cast<float>(x.get<double>()));
    }
    try {
      store->insert(j["id"].get<std::string>(), std::move(v));
    } catch (const ValidationError& e) {
      throw ValidationError(tag + ": " + e.what());
    }
  });
  if (!store) throw ValidationError(path.string() + ": empty vector file");
  return std::move(*store);
}

EmbeddingStore load_vectors_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < sizeof kMagic + 4 || std::memcmp(p, kMagic, sizeof kMagic) != 0)
    throw ValidationError(path.string() + ": not a PEEKVEC1 file");
  const auto dim = get_le<std::uint32_t>(p + sizeof kMagic);
  EmbeddingStore store(dim, path.stem().string());
  std::size_t off = sizeof kMagic + 4;
  std::size_t record = 0;
  while (off < n) {
    const auto tag = path.string() + " (record " + std::to_string(record) + ")";
    if (off + 2 > n) throw ValidationError(tag + ": truncated id length");
    const auto id_len = get_le<std::uint16_t>(p + off);
    off += 2;
    if (off + id_len + 4ull * dim > n) throw ValidationError(tag + ": truncated record");
    std::string id(bytes.data() + off, id_len);
    off += id_len;
    std::vector<float> v(dim);
    for (std::uint32_t i = 0; i < dim; ++i, off += 4)
      v[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + off));
    try {
      store.insert(id, std::move(v));
    } catch (const ValidationError& e) {
      throw ValidationError(tag + ": " + e.what());
    }
    ++record;
  }
  return store;
}

void write_vectors_jsonl(const EmbeddingStore& store, const std::filesystem::path& path) {
  json header = {{"format", "peekvec"}, {"version", 1}, {"dim", store.dim()},
                 {"source", store.source()}};
  if (store.layer()) header["layer"] = *store.layer();
  std::ostringstream out;
  out << header.dump() << '\n';
  char buf[32];
  for (const auto& id : store.ids()) {
    out << "{\"id\":" << json(id).dump() << ",\"v\":[";
    bool first = true;
    for (float x : store.get(id)) {
      // 9 significant digits round-trip any float exactly.
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(x));
      out << (first ? "" : ",") << buf;
      first = false;
    }
    out << "]}\n";
  }
  write_file_atomic(path, out.str());
}

void write_vectors_binary(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  for (const auto& id : store.ids()) {
    if (id.size() > 0xffff) throw ValidationError("id too long for binary format: " + id);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (float x : store.get(id)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  }
  write_file_atomic(path, out);
}

CoverageReport coverage_check(const EmbeddingStore& store, const std::vector<Fact>& facts) {
  CoverageReport r;
  for (const auto& f : facts)
    if (!store.contains(f.id)) r.missing_ids.push_back(f.id);
  return r;
}

}  // namespace peek

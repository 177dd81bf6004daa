// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <bit>
#include <cstring>
#include <limits>

#include "peek/embedding_store.hpp"
#include "peek/error.hpp"
#include "test_support.hpp"

using namespace peek;
using peek::testing::TempDir;
using peek::testing::write_text;

namespace {

std::string header(int dim, const std::string& extra = "") {
  return R"({"format":"peekvec","version":1,"dim":)" + std::to_string(dim) +
         R"(,"source":"toy")" + extra + "}\n";
}

std::string record(const std::string& id, std::size_t dim, double value) {
  json v = json::array();
  for (std::size_t i = 0; i < dim; ++i) v.push_back(value + static_cast<double>(i));
  return json({{"id", id}, {"v", v}}).dump() + "\n";
}

std::string binary_file(std::uint32_t dim, const std::vector<std::pair<std::string, std::vector<float>>>& recs) {
  std::string s = "PEEKVEC1";
  auto put = [&](const void* p, std::size_t n) { s.append(static_cast<const char*>(p), n); };
  put(&dim, 4);
  for (const auto& [id, v] : recs) {
    auto len = static_cast<std::uint16_t>(id.size());
    put(&len, 2);
    s += id;
    put(v.data(), v.size() * 4);
  }
  return s;
}

}  // namespace

TEST_CASE("load_vectors JSON-lines") {
  TempDir dir("emb");
  write_text(dir / "v.jsonl", header(768) + record("a", 768, 0) + record("b", 768, 1) + record("c", 768, 2));
  auto s = load_vectors(dir / "v.jsonl");
  CHECK(s.size() == 3);
  CHECK(s.dim() == 768);
  CHECK(s.source() == "toy");
  CHECK_FALSE(s.layer().has_value());
  CHECK(s.ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK(s.get("b")[5] == 6.0f);

  write_text(dir / "act.jsonl", header(4, R"(,"layer":15)") + record("x", 4, 0));
  CHECK(load_vectors(dir / "act.jsonl").layer() == 15);
}

TEST_CASE("load_vectors rejects bad records by index") {
  TempDir dir("emb");
  SUBCASE("dimension mismatch names the record") {
    write_text(dir / "v.jsonl", header(1024) + record("a", 768, 0));
    try {
      load_vectors(dir / "v.jsonl");
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      CHECK(msg.find("record 0") != std::string::npos);
      CHECK(msg.find("768") != std::string::npos);
    }
  }
  SUBCASE("null component") {
    write_text(dir / "v.jsonl", header(2) + R"({"id":"a","v":[1.0,null]})" "\n");
    CHECK_THROWS_AS(load_vectors(dir / "v.jsonl"), ValidationError);
  }
  SUBCASE("NaN through the binary format") {
    write_text(dir / "v.bin", binary_file(2, {{"a", {1.0f, std::numeric_limits<float>::quiet_NaN()}}}));
    CHECK_THROWS_AS(load_vectors(dir / "v.bin"), ValidationError);
  }
  SUBCASE("infinity through the binary format") {
    write_text(dir / "v.bin", binary_file(1, {{"a", {std::numeric_limits<float>::infinity()}}}));
    CHECK_THROWS_AS(load_vectors(dir / "v.bin"), ValidationError);
  }
  SUBCASE("duplicate id") {
    write_text(dir / "v.jsonl", header(2) + record("a", 2, 0) + record("a", 2, 1));
    try {
      load_vectors(dir / "v.jsonl");
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("record 1") != std::string::npos);
    }
  }
  SUBCASE("bad header") {
    write_text(dir / "v.jsonl", R"({"format":"other","version":1,"dim":2,"source":"x"})" "\n");
    CHECK_THROWS_AS(load_vectors(dir / "v.jsonl"), ValidationError);
    write_text(dir / "v2.jsonl", header(0));
    CHECK_THROWS_AS(load_vectors(dir / "v2.jsonl"), ValidationError);
  }
  SUBCASE("truncated binary") {
    auto bytes = binary_file(3, {{"a", {1, 2, 3}}});
    write_text(dir / "v.bin", bytes.substr(0, bytes.size() - 2));
    CHECK_THROWS_AS(load_vectors(dir / "v.bin"), ValidationError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_vectors(dir / "nope.jsonl"), IoError); }
}

TEST_CASE("get returns the stored vector bit-exactly") {
  EmbeddingStore s(3, "t");
  std::vector<float> v{0.1f, -2.5e-8f, 3.4e38f};
  s.insert("id", v);
  auto got = s.get("id");
  REQUIRE(got.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::bit_cast<std::uint32_t>(got[i]) == std::bit_cast<std::uint32_t>(v[i]));
  try {
    s.get("other");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("other") != std::string::npos);
  }
  CHECK_THROWS_AS(s.insert("x", {1, 2}), ValidationError);
  CHECK_THROWS_AS(EmbeddingStore(0, "t"), ValidationError);
}

TEST_CASE("l2_normalized gives unit norms and leaves zero vectors alone") {
  EmbeddingStore s(16, "t");
  for (int i = 0; i < 20; ++i) s.insert("f" + std::to_string(i), peek::testing::gaussian_embedding(std::to_string(i), 16, 4));
  s.insert("zero", std::vector<float>(16, 0.0f));
  auto n = s.l2_normalized();
  for (const auto& id : n.ids()) {
    double sq = 0;
    for (float x : n.get(id)) sq += double(x) * x;
    if (id == "zero") CHECK(sq == 0.0);
    else CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-6);
  }
  // The source store is untouched.
  CHECK(s.get("f0")[0] == peek::testing::gaussian_embedding("0", 16, 4)[0]);
}

TEST_CASE("write then load round trips") {
  TempDir dir("emb");
  EmbeddingStore s(32, "rt", 20);
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    std::vector<float> v(32);
    for (auto& x : v) x = static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform01() * 20 - 10));
    s.insert("id" + std::to_string(i), v);
  }
  SUBCASE("binary is bit-exact") {
    write_vectors_binary(s, dir / "v.bin");
    auto b = load_vectors(dir / "v.bin");
    CHECK(b.ids() == s.ids());
    for (const auto& id : s.ids())
      CHECK(std::memcmp(b.get(id).data(), s.get(id).data(), 32 * sizeof(float)) == 0);
  }
  SUBCASE("JSON-lines within 1e-7 relative") {
    write_vectors_jsonl(s, dir / "v.jsonl");
    auto b = load_vectors(dir / "v.jsonl");
    CHECK(b.source() == "rt");
    CHECK(b.layer() == 20);
    for (const auto& id : s.ids())
      for (std::size_t i = 0; i < 32; ++i) {
        double a = s.get(id)[i], c = b.get(id)[i];
        CHECK(std::abs(a - c) <= 1e-7 * std::abs(a));
      }
  }
}

TEST_CASE("coverage_check") {
  std::vector<Fact> facts;
  EmbeddingStore s(2, "c");
  for (int i = 0; i < 10; ++i) {
    facts.push_back(make_fact({"h" + std::to_string(i), "r", "t"}, Polarity::Positive, "x"));
    if (i != 3 && i != 7) s.insert(facts.back().id, {1, 2});
  }
  auto r = coverage_check(s, facts);
  CHECK(r.missing_ids == std::vector<std::string>{facts[3].id, facts[7].id});

  EmbeddingStore empty(2, "e");
  CHECK(coverage_check(empty, facts).missing_ids.size() == 10);

  s.insert(facts[3].id, {0, 0});
  s.insert(facts[7].id, {0, 0});
  CHECK(coverage_check(s, facts).complete());
}

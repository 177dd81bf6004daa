// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "peek/error.hpp"
#include "peek/evaluation.hpp"
#include "peek/probe_harness.hpp"
#include "test_support.hpp"

using namespace peek;
using peek::testing::TempDir;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return 100.0 * num / pairs;
}

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

Instance random_instance(Rng& rng, bool ties) {
  Instance in;
  const std::size_t n = 2 + rng.uniform_index(199);
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(ties ? static_cast<double>(rng.uniform_index(10)) : rng.normal());
    in.labels.push_back(rng.coin() ? 1 : 0);
  }
  in.labels[0] = 1;
  in.labels[1] = 0;
  return in;
}

}  // namespace

TEST_CASE("accuracy") {
  std::vector<int> a{1, 0, 1}, b{1, 1, 1};
  CHECK(accuracy(a, a) == 100.0);
  CHECK(accuracy(a, b) == doctest::Approx(200.0 / 3));
  std::vector<int> empty;
  CHECK_THROWS_AS(accuracy(empty, empty), ValidationError);
  CHECK_THROWS_AS(accuracy(a, std::vector<int>{1}), ValidationError);
}

TEST_CASE("auc fixed cases") {
  std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  std::vector<int> y{0, 0, 1, 1};
  CHECK(auc(s, y) == 100.0);
  std::vector<double> flat(4, 0.3);
  CHECK(auc(flat, y) == 50.0);
  std::vector<int> one{1, 1, 1, 1};
  try {
    auc(s, one);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("AUC undefined") != std::string::npos);
  }
}

TEST_CASE("auc equals the pairwise oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    auto in = random_instance(rng, trial % 2 == 0);
    CHECK(std::abs(auc(in.scores, in.labels) - brute_auc(in.scores, in.labels)) <= 1e-9);
  }
}

TEST_CASE("auc is invariant under increasing transforms") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, trial % 3 == 0);
    const double base = auc(in.scores, in.labels);
    std::vector<double> affine, cubic;
    for (double s : in.scores) {
      affine.push_back(3.5 * s - 2.0);
      cubic.push_back(s * s * s + s);
    }
    CHECK(auc(affine, in.labels) == doctest::Approx(base).epsilon(1e-12));
    CHECK(auc(cubic, in.labels) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("auc complement symmetry without ties") {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, false);
    std::vector<double> neg;
    for (double s : in.scores) neg.push_back(-s);
    CHECK(std::abs(auc(neg, in.labels) - (100.0 - auc(in.scores, in.labels))) <= 1e-9);
  }
}

TEST_CASE("mae") {
  std::vector<double> a{1, -1}, z{0, 0};
  CHECK(mae(a, a) == 0.0);
  CHECK(mae(a, z) == 1.0);
  std::vector<double> empty;
  CHECK_THROWS_AS(mae(empty, empty), ValidationError);

  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(50);
    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal() * 10;
      y[i] = rng.normal() * 10;
      w[i] = rng.normal() * 10;
    }
    CHECK(mae(x, w) <= mae(x, y) + mae(y, w) + 1e-12);
    CHECK(mae(x, y) >= 0.0);
  }
}

TEST_CASE("majority baseline") {
  std::vector<int> train(100, 0);
  std::fill(train.begin(), train.begin() + 70, 1);
  std::vector<int> test{1, 1, 0, 1, 0};
  auto r = majority_baseline(train, test);
  CHECK(r.metrics["ACC"] == doctest::Approx(60.0));
  CHECK_FALSE(r.metrics["AUC"].has_value());
  CHECK(r.meta["predicted_class"] == 1);

  std::vector<int> tie{1, 0, 1, 0};
  CHECK(majority_baseline(tie, test).meta["predicted_class"] == 1);
  std::vector<int> zeros{0, 0, 1};
  CHECK(majority_baseline(zeros, test).metrics["ACC"] == doctest::Approx(40.0));
  CHECK_THROWS_AS(majority_baseline(std::vector<int>{}, test), ValidationError);

  // Majority beats or ties both constant classifiers on the training labels.
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> y(1 + rng.uniform_index(60));
    for (auto& v : y) v = rng.uniform01() < rng.uniform01() ? 1 : 0;
    const double acc = *majority_baseline(y, y).metrics["ACC"];
    std::vector<int> ones(y.size(), 1), zs(y.size(), 0);
    CHECK(acc >= std::max(accuracy(ones, y), accuracy(zs, y)));
  }
}

TEST_CASE("random baseline") {
  std::vector<int> y(100000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  auto r = random_baseline(y, 3);
  CHECK(std::abs(*r.metrics["ACC"] - 50.0) <= 1.0);
  CHECK(random_baseline(y, 3).metrics["ACC"] == r.metrics["ACC"]);
  CHECK(random_baseline(y, 4).metrics["ACC"] != r.metrics["ACC"]);
  CHECK_THROWS_AS(random_baseline(std::vector<int>{}, 1), ValidationError);
}

TEST_CASE("base_llm_accuracy") {
  std::vector<ProbeRecord> recs(4);
  for (auto& r : recs) r.label = 1;
  CHECK(base_llm_accuracy(recs).accuracy == 100.0);
  recs[0].label = 0;
  recs[1].status = ProbeStatus::Unparsed;
  recs[1].label.reset();
  recs[2].status = ProbeStatus::BackendError;
  auto b = base_llm_accuracy(recs);
  CHECK(b.counted == 2);
  CHECK(b.excluded == 2);
  CHECK(b.accuracy == 50.0);
}

TEST_CASE("base accuracy of a yes-sayer is half the facts, enumerated over seeded bools") {
  // Always "yes" is correct on a positive fact only when the prompt asked "True?".
  std::vector<ProbeRecord> recs;
  std::size_t trues = 0;
  for (int i = 0; i < 4000; ++i) {
    ProbeRecord r;
    r.fact_id = md5_hex("fact" + std::to_string(i));
    const bool pol = sample_bool_polarity(r.fact_id, 7);
    trues += pol;
    r.bool_polarity = pol;
    r.label = parse_binary_response("yes", pol, Polarity::Positive);
    recs.push_back(r);
  }
  const double expected = 100.0 * static_cast<double>(trues) / 4000.0;
  CHECK(base_llm_accuracy(recs).accuracy == doctest::Approx(expected));
  CHECK(std::abs(expected - 50.0) <= 2.5);
}

TEST_CASE("report JSON and table") {
  EvalReport r;
  r.metrics["AUC"] = 91.234567;
  r.metrics["ACC"] = 88.0;
  r.n_test = 120;
  r.class_balance = 0.4;
  r.counts["excluded"] = 3;
  r.per_relation["zeta"] = {{"ACC", 50.0}, {"AUC", std::nullopt}};
  r.per_relation["alpha"] = {{"ACC", 75.0}, {"AUC", 80.0}};
  r.meta["source"] = "toy";

  auto j = report_to_json(r);
  CHECK(j["format"] == "peekreport");
  CHECK(j["version"] == 1);
  CHECK(j["metrics"]["AUC"].get<double>() == 91.2346);
  CHECK(j["counts"]["n_test"] == 120);
  CHECK(j["per_relation"]["zeta"]["AUC"].is_null());

  TempDir dir("eval");
  emit_report(r, dir / "a.json");
  emit_report(r, dir / "b.json");
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
  CHECK(read_file(dir / "a.txt") == read_file(dir / "b.txt"));
  CHECK(read_file(dir / "a.json").find("91.2346") != std::string::npos);

  auto back = report_from_json(json::parse(read_file(dir / "a.json")));
  CHECK(back.metrics["AUC"] == doctest::Approx(91.2346));
  CHECK(back.metrics["ACC"] == 88.0);
  CHECK(back.n_test == 120);
  CHECK(back.counts["excluded"] == 3);
  CHECK_FALSE(back.per_relation["zeta"]["AUC"].has_value());
  emit_report(back, dir / "c.json");
  CHECK(read_file(dir / "c.json") == read_file(dir / "a.json"));

  auto table = read_file(dir / "a.txt");
  auto pa = table.find("alpha"), pz = table.find("zeta");
  REQUIRE(pa != std::string::npos);
  REQUIRE(pz != std::string::npos);
  CHECK(pa < pz);
  CHECK(table.find("91.23") != std::string::npos);

  CHECK_THROWS_AS(report_from_json(json{{"format", "x"}}), ValidationError);
}

TEST_CASE("comparison table") {
  EvalReport a, m;
  a.metrics = {{"AUC", 80.8}, {"ACC", 81.714}};
  m.metrics = {{"AUC", std::nullopt}, {"ACC", 83.05}};
  auto t = comparison_table({{"NVE2", a}, {"Majority", m}}, {"AUC", "ACC"});
  CHECK(t.find("Method") == 0);
  CHECK(t.find("81.71") != std::string::npos);
  CHECK(t.find("83.05") != std::string::npos);
  CHECK(t.find("-") != std::string::npos);
  CHECK(std::count(t.begin(), t.end(), '\n') == 3);
}

TEST_CASE("overall rank") {
  std::map<std::string, std::map<std::string, double>> g{
      {"llm1", {{"A", 90}, {"B", 80}, {"C", 70}}},
      {"llm2", {{"A", 60}, {"B", 85}, {"C", 50}}},
      {"llm3", {{"A", 95}, {"B", 70}, {"C", 70}}}};
  auto r = overall_rank(g);
  CHECK(r["A"] == 1);  // ranks 1,2,1
  CHECK(r["B"] == 2);  // ranks 2,1,2
  CHECK(r["C"] == 3);
  auto ex = overall_rank(g, {"llm1", "llm3"});
  CHECK(ex["B"] == 1);
}

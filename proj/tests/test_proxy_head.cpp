// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "peek/error.hpp"
#include "peek/evaluation.hpp"
#include "peek/proxy_head.hpp"
#include "test_support.hpp"

using namespace peek;
using peek::testing::TempDir;

namespace {

// Direct log-likelihood forms, used as oracles only where they do not overflow.
double naive_bce(const std::vector<double>& z, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-z[i]));
    s += y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p);
  }
  return -s / static_cast<double>(z.size());
}

template <class F>
std::vector<double> central_diff(F f, std::vector<double> z, double h = 1e-5) {
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double z0 = z[i];
    z[i] = z0 + h;
    double up = f(z);
    z[i] = z0 - h;
    double down = f(z);
    z[i] = z0;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

struct Planted {
  EmbeddingStore store{64, "planted"};
  std::map<std::string, double> labels;
  std::vector<std::string> train, test;
};

Planted planted(std::size_t n, std::uint64_t seed) {
  Planted p;
  auto w = peek::testing::planted_teacher(64, seed);
  Rng rng(seed + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::string id = "f" + std::to_string(i);
    auto e = peek::testing::gaussian_embedding(id, 64, seed);
    double z = peek::testing::dot(w, e);
    p.labels[id] = sigmoid(z) > rng.uniform01() ? 1.0 : 0.0;
    p.store.insert(id, std::move(e));
    (i % 5 == 0 ? p.test : p.train).push_back(id);
  }
  return p;
}

}  // namespace

TEST_CASE("predict_logit") {
  LinearHead zero{std::vector<double>(3, 0.0), 0.0, true};
  std::vector<float> e{1.5f, -2.0f, 7.0f};
  CHECK(predict_logit(zero, e) == 0.0);

  LinearHead h{{1, 2}, 0.5, true};
  std::vector<float> e2{3, -1};
  CHECK(predict_logit(h, e2) == doctest::Approx(1.5));
  h.use_bias = false;
  CHECK(predict_logit(h, e2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(predict_logit(h, e), ValidationError);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    LinearHead r{std::vector<double>(100), rng.normal(), true};
    std::vector<float> v(100);
    for (auto& x : r.weights) x = rng.normal();
    for (auto& x : v) x = static_cast<float>(rng.normal());
    double oracle = r.bias;
    for (std::size_t i = 0; i < 100; ++i) oracle += r.weights[i] * static_cast<double>(v[i]);
    CHECK(std::abs(predict_logit(r, v) - oracle) <= 1e-12);
  }
}

TEST_CASE("sigmoid and softplus are stable") {
  CHECK(sigmoid(0) == 0.5);
  CHECK(sigmoid(1000) == 1.0);
  CHECK(sigmoid(-1000) == 0.0);
  CHECK(softplus(0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(1000) == 1000.0);
  CHECK(softplus(-1000) >= 0.0);
  CHECK(softplus(-1000) < 1e-300);
}

TEST_CASE("bce_loss values") {
  std::vector<double> z{0}, y{1};
  CHECK(bce_loss(z, y).loss == doctest::Approx(0.693147).epsilon(1e-6));
  z = {30};
  auto r = bce_loss(z, y);
  CHECK(r.loss >= 0.0);
  CHECK(r.loss <= 1e-12);
  z = {1000, -1000};
  y = {0, 1};
  r = bce_loss(z, y);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx(1000.0));
  CHECK(r.grad[0] == doctest::Approx(0.5));
  CHECK(r.grad[1] == doctest::Approx(-0.5));

  Rng rng(9);
  std::vector<double> zs(40), ys(40);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    zs[i] = rng.normal() * 4;
    ys[i] = rng.coin() ? 1 : 0;
  }
  CHECK(bce_loss(zs, ys).loss == doctest::Approx(naive_bce(zs, ys)).epsilon(1e-12));

  std::vector<double> empty;
  CHECK_THROWS_AS(bce_loss(empty, empty), ValidationError);
  std::vector<double> bad{0.5};
  CHECK_THROWS_AS(bce_loss(std::vector<double>{0.0}, bad), ValidationError);
  CHECK_THROWS_AS(bce_loss(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("distill_loss values") {
  std::vector<double> s{0}, t{0};
  for (double T : {1.0, 5.0, 10.0}) CHECK(distill_loss(s, t, T).loss == doctest::Approx(std::log(2.0)));
  Rng rng(10);
  std::vector<double> a(30);
  for (auto& x : a) x = rng.normal() * 5;
  for (double T : {1.0, 5.0, 10.0}) {
    auto r = distill_loss(a, a, T);
    for (double g : r.grad) CHECK(g == 0.0);
  }
  CHECK_THROWS_AS(distill_loss(s, t, 0.0), ValidationError);
  CHECK_THROWS_AS(distill_loss(s, t, -1.0), ValidationError);
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(21);
  for (int point = 0; point < 100; ++point) {
    const std::size_t n = 1 + rng.uniform_index(16);
    std::vector<double> z(n), y(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = rng.normal() * 3;
      y[i] = rng.coin() ? 1 : 0;
      t[i] = rng.normal() * 6;
    }
    auto g = bce_loss(z, y).grad;
    auto fd = central_diff([&](const std::vector<double>& zz) { return bce_loss(zz, y).loss; }, z);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(g[i], fd[i]) <= 1e-4);
    for (double T : {1.0, 5.0, 10.0}) {
      auto gd = distill_loss(z, t, T).grad;
      auto fdd = central_diff([&](const std::vector<double>& zz) { return distill_loss(zz, t, T).loss; }, z);
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(gd[i], fdd[i]) <= 1e-4);
    }
  }
}

TEST_CASE("distill at T=1 with saturated teachers equals bce") {
  Rng rng(5);
  std::vector<double> z(64), y(64), t(64);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = rng.normal() * 3;
    y[i] = rng.coin() ? 1 : 0;
    t[i] = y[i] == 1 ? 30.0 : -30.0;
  }
  auto b = bce_loss(z, y), d = distill_loss(z, t, 1.0);
  CHECK(std::abs(b.loss - d.loss) <= 1e-9);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(b.grad[i] - d.grad[i]) <= 1e-9);
}

TEST_CASE("TrainConfig validation and range warnings") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.range_warnings().empty());
  c.learning_rate = 1e-3;
  c.epochs = 20;
  CHECK(c.range_warnings().empty());
  c.learning_rate = 0.1;
  c.epochs = 100;
  CHECK(c.range_warnings().size() == 2);
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.temperature = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);

  c = {};
  c.loss = LossKind::Distill;
  c.temperature = 5;
  c.batch_size = 16;
  c.init = WeightInit::Gaussian;
  c.seed = 77;
  auto back = train_config_from_json(train_config_to_json(c));
  CHECK(back.loss == LossKind::Distill);
  CHECK(back.temperature == 5);
  CHECK(back.batch_size == 16);
  CHECK(back.init == WeightInit::Gaussian);
  CHECK(back.seed == 77);
}

TEST_CASE("train on a planted problem recovers the teacher") {
  auto p = planted(3000, 42);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 40;
  auto m = train(p.store, p.labels, p.train, cfg);
  CHECK(m.loss_curve.size() == 40);
  auto preds = predict_all(m.head, p.store, p.test);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& id : p.test) {
    scores.push_back(preds.at(id).logit);
    labels.push_back(static_cast<int>(p.labels.at(id)));
  }
  CHECK(auc(scores, labels) >= 80.0);
}

TEST_CASE("full-batch loss strictly decreases on a separable problem") {
  EmbeddingStore s(8, "sep");
  std::map<std::string, double> y;
  std::vector<std::string> ids;
  auto w = peek::testing::planted_teacher(8, 1);
  for (int i = 0; i < 400; ++i) {
    std::string id = std::to_string(i);
    auto e = peek::testing::gaussian_embedding(id, 8, 1);
    double sq = 0;
    for (float x : e) sq += double(x) * x;
    for (auto& x : e) x = static_cast<float>(x / std::sqrt(sq));
    y[id] = peek::testing::dot(w, e) > 0 ? 1 : 0;
    s.insert(id, e);
    ids.push_back(id);
  }
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 40;
  auto m = train(s, y, ids, cfg);
  for (std::size_t i = 1; i < m.loss_curve.size(); ++i) CHECK(m.loss_curve[i] < m.loss_curve[i - 1]);
}

TEST_CASE("training is deterministic under seed") {
  auto p = planted(500, 3);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.init = WeightInit::Gaussian;
  cfg.seed = 11;
  cfg.epochs = 20;
  auto a = train(p.store, p.labels, p.train, cfg), b = train(p.store, p.labels, p.train, cfg);
  REQUIRE(a.head.weights.size() == b.head.weights.size());
  CHECK(std::memcmp(a.head.weights.data(), b.head.weights.data(), a.head.weights.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(&a.head.bias, &b.head.bias, sizeof(double)) == 0);
  CHECK(a.loss_curve == b.loss_curve);
  cfg.seed = 12;
  auto c = train(p.store, p.labels, p.train, cfg);
  CHECK(c.head.weights != a.head.weights);
}

TEST_CASE("train rejects coverage gaps before computing") {
  auto p = planted(20, 4);
  TrainConfig cfg;
  int calls = 0;
  auto ids = p.train;
  ids.push_back("ghost");
  CHECK_THROWS_AS(train(p.store, p.labels, ids, cfg, [&](std::size_t, const LinearHead&) { ++calls; }),
                  ValidationError);
  CHECK(calls == 0);
  auto labels = p.labels;
  labels.erase(p.train.front());
  CHECK_THROWS_AS(train(p.store, labels, p.train, cfg), ValidationError);
  CHECK_THROWS_AS(train(p.store, p.labels, {}, cfg), ValidationError);
}

TEST_CASE("epoch callback sees every epoch") {
  auto p = planted(50, 6);
  TrainConfig cfg;
  cfg.epochs = 25;
  std::vector<std::size_t> seen;
  train(p.store, p.labels, p.train, cfg, [&](std::size_t e, const LinearHead&) { seen.push_back(e); });
  REQUIRE(seen.size() == 25);
  CHECK(seen.front() == 1);
  CHECK(seen.back() == 25);
}

TEST_CASE("scale covariance at fixed weights") {
  Rng rng(8);
  LinearHead h{std::vector<double>(16), 0.3, true};
  for (auto& x : h.weights) x = rng.normal();
  for (double c : {0.5, 2.0, 10.0}) {
    LinearHead hs = h;
    for (auto& x : hs.weights) x /= c;
    for (int k = 0; k < 20; ++k) {
      std::vector<float> e(16), es(16);
      for (std::size_t i = 0; i < 16; ++i) {
        e[i] = static_cast<float>(rng.normal());
        es[i] = static_cast<float>(e[i] * c);
      }
      CHECK(predict_logit(hs, es) == doctest::Approx(predict_logit(h, e)).epsilon(1e-6));
    }
  }
}

TEST_CASE("predict_all") {
  EmbeddingStore s(2, "p");
  s.insert("a", {0, 0});
  s.insert("b", {1, 0});
  s.insert("c", {-1, 3});
  LinearHead h{{2, -1}, 0.0, true};
  auto out = predict_all(h, s, {"a", "b", "c"});
  CHECK(out["a"].logit == 0.0);
  CHECK(out["a"].probability == 0.5);
  CHECK(out["b"].probability > out["a"].probability);
  CHECK(out["c"].probability < out["a"].probability);
  for (const auto& id : s.ids()) {
    double single = predict_logit(h, s.get(id));
    CHECK(std::memcmp(&single, &out[id].logit, sizeof(double)) == 0);
  }
  CHECK_THROWS_AS(predict_all(h, s, {"zz"}), ValidationError);
}

TEST_CASE("model file round trip") {
  TempDir dir("head");
  auto p = planted(60, 9);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.loss = LossKind::Bce;
  auto m = train(p.store, p.labels, p.train, cfg);
  m.source = "planted";
  save_model(m, dir / "m.json", {{"config_hash", "h"}});
  auto j = json::parse(read_file(dir / "m.json"));
  CHECK(j["format"] == "peekhead");
  CHECK(j["version"] == 1);
  CHECK(j["dim"] == 64);
  CHECK(j["config_hash"] == "h");
  auto back = load_model(dir / "m.json");
  CHECK(back.head.weights == m.head.weights);
  CHECK(back.head.bias == m.head.bias);
  CHECK(back.source == "planted");
  CHECK(back.loss_curve == m.loss_curve);

  cfg.use_bias = false;
  auto nb = train(p.store, p.labels, p.train, cfg);
  save_model(nb, dir / "nb.json");
  CHECK(json::parse(read_file(dir / "nb.json"))["bias"].is_null());
  CHECK_FALSE(load_model(dir / "nb.json").head.use_bias);
}

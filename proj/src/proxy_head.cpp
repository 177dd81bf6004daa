// SPDX-License-Identifier: Apache-2.0
#include "peek/proxy_head.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

#include "peek/error.hpp"

namespace peek {

double predict_logit(const LinearHead& head, std::span<const float> e) {
  if (e.size() != head.dim())
    throw ValidationError("embedding length " + std::to_string(e.size()) +
                          " does not match head dim " + std::to_string(head.dim()));
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) z += head.weights[i] * static_cast<double>(e[i]);
  return head.use_bias ? z + head.bias : z;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

namespace {

// Cross entropy of soft target q against sigmoid(z), written as softplus(z) - q z
// so neither log(p) nor log(1 - p) is ever formed.
LossResult soft_cross_entropy(std::span<const double> z, std::span<const double> q,
                              double grad_scale) {
  if (z.empty()) throw ValidationError("loss of an empty batch");
  if (z.size() != q.size()) throw ValidationError("logit/target length mismatch");
  const double n = static_cast<double>(z.size());
  LossResult r;
  r.grad.resize(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    total += softplus(z[i]) - q[i] * z[i];
    r.grad[i] = (sigmoid(z[i]) - q[i]) * grad_scale / n;
  }
  r.loss = total / n;
  return r;
}

}  // namespace

LossResult bce_loss(std::span<const double> logits, std::span<const double> labels) {
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw ValidationError("bce labels must be 0 or 1");
  return soft_cross_entropy(logits, labels, 1.0);
}

LossResult distill_loss(std::span<const double> student, std::span<const double> teacher,
                        double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("distillation temperature must be positive");
  if (student.size() != teacher.size()) throw ValidationError("student/teacher length mismatch");
  std::vector<double> z(student.size()), q(teacher.size());
  for (std::size_t i = 0; i < student.size(); ++i) {
    z[i] = student[i] / temperature;
    q[i] = sigmoid(teacher[i] / temperature);
  }
  return soft_cross_entropy(z, q, 1.0 / temperature);
}

const char* to_string(LossKind k) { return k == LossKind::Bce ? "bce" : "distill"; }

LossKind loss_kind_from_string(std::string_view s) {
  if (s == "bce") return LossKind::Bce;
  if (s == "distill") return LossKind::Distill;
  throw ValidationError("unknown loss '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (init == WeightInit::Gaussian && !(init_sigma > 0.0))
    throw ValidationError("gaussian init needs a positive sigma");
}

std::vector<std::string> TrainConfig::range_warnings() const {
  std::vector<std::string> w;
  if (learning_rate < 1e-3 || learning_rate > 1e-2)
    w.push_back("learning rate " + std::to_string(learning_rate) +
                " is outside the tuned range [1e-3, 1e-2]");
  if (epochs < 20 || epochs > 40)
    w.push_back("epoch count " + std::to_string(epochs) + " is outside the tuned range [20, 40]");
  return w;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"loss", to_string(c.loss)},
          {"temperature", c.temperature},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"init", c.init == WeightInit::Zeros ? "zeros" : "gaussian"},
          {"init_sigma", c.init_sigma},
          {"bias", c.use_bias}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.loss = loss_kind_from_string(j.value("loss", std::string("bce")));
  c.temperature = j.value("temperature", c.temperature);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  const auto init = j.value("init", std::string("zeros"));
  if (init == "zeros")
    c.init = WeightInit::Zeros;
  else if (init == "gaussian")
    c.init = WeightInit::Gaussian;
  else
    throw ValidationError("unknown weight init '" + init + "'");
  c.init_sigma = j.value("init_sigma", c.init_sigma);
  c.use_bias = j.value("bias", c.use_bias);
  return c;
}

TrainedModel train(const EmbeddingStore& store, const std::map<std::string, double>& targets,
                   const std::vector<std::string>& train_ids, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_ids.empty()) throw ValidationError("no training examples");
  std::vector<std::string> missing;
  for (const auto& id : train_ids)
    if (!store.contains(id) || !targets.count(id)) missing.push_back(id);
  if (!missing.empty())
    throw ValidationError(std::to_string(missing.size()) +
                          " training ids lack an embedding or target, first: " + missing.front());
  if (cfg.check_ranges)
    for (const auto& w : cfg.range_warnings()) std::clog << "warning: " << w << '\n';

  const std::size_t n = train_ids.size();
  const std::size_t d = store.dim();
  std::vector<double> x(n * d), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto e = store.get(train_ids[i]);
    std::copy(e.begin(), e.end(), x.begin() + static_cast<std::ptrdiff_t>(i * d));
    y[i] = targets.at(train_ids[i]);
  }

  auto loss_of = [&](std::span<const double> logits, std::span<const double> t) {
    return cfg.loss == LossKind::Bce ? bce_loss(logits, t)
                                     : distill_loss(logits, t, cfg.temperature);
  };

  Rng rng(cfg.seed);
  TrainedModel model;
  model.config = cfg;
  model.source = store.source();
  model.head.use_bias = cfg.use_bias;
  model.head.weights.assign(d, 0.0);
  if (cfg.init == WeightInit::Gaussian)
    for (auto& w : model.head.weights) w = cfg.init_sigma * rng.normal();

  auto logit_at = [&](std::size_t i) {
    const double* row = x.data() + i * d;
    double z = 0.0;
    for (std::size_t k = 0; k < d; ++k) z += model.head.weights[k] * row[k];
    return cfg.use_bias ? z + model.head.bias : z;
  };

  const std::size_t batch = cfg.batch_size == 0 || cfg.batch_size >= n ? n : cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> logits, batch_targets, grad_w(d);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (batch < n) rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      logits.clear();
      batch_targets.clear();
      for (std::size_t r = start; r < end; ++r) {
        logits.push_back(logit_at(order[r]));
        batch_targets.push_back(y[order[r]]);
      }
      const auto res = loss_of(logits, batch_targets);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t r = start; r < end; ++r) {
        const double g = res.grad[r - start];
        const double* row = x.data() + order[r] * d;
        for (std::size_t k = 0; k < d; ++k) grad_w[k] += g * row[k];
        grad_b += g;
      }
      for (std::size_t k = 0; k < d; ++k) model.head.weights[k] -= cfg.learning_rate * grad_w[k];
      if (cfg.use_bias) model.head.bias -= cfg.learning_rate * grad_b;
    }
    logits.resize(n);
    for (std::size_t i = 0; i < n; ++i) logits[i] = logit_at(i);
    model.loss_curve.push_back(loss_of(logits, y).loss);
    if (on_epoch) on_epoch(epoch, model.head);
  }
  return model;
}

std::map<std::string, Prediction> predict_all(const LinearHead& head, const EmbeddingStore& store,
                                              const std::vector<std::string>& ids) {
  std::map<std::string, Prediction> out;
  for (const auto& id : ids) {
    const double z = predict_logit(head, store.get(id));
    out[id] = {z, sigmoid(z)};
  }
  return out;
}

json model_to_json(const TrainedModel& m) {
  return {{"format", "peekhead"},
          {"version", 1},
          {"dim", m.head.dim()},
          {"bias", m.head.use_bias ? json(m.head.bias) : json(nullptr)},
          {"weights", m.head.weights},
          {"config", train_config_to_json(m.config)},
          {"loss_curve", m.loss_curve},
          {"source", m.source}};
}

void save_model(const TrainedModel& model, const std::filesystem::path& path, const json& extra) {
  json j = model_to_json(model);
  j.update(extra);
  write_file_atomic(path, j.dump() + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed model file (" + e.what() + ")");
  }
  if (j.value("format", "") != "peekhead" || j.value("version", 0) != 1)
    throw ValidationError(path.string() + ": not a peekhead version 1 file");
  TrainedModel m;
  m.head.weights = j.at("weights").get<std::vector<double>>();
  if (m.head.weights.size() != j.at("dim").get<std::size_t>())
    throw ValidationError(path.string() + ": weights length does not match dim");
  m.head.use_bias = !j.at("bias").is_null();
  m.head.bias = m.head.use_bias ? j["bias"].get<double>() : 0.0;
  m.config = train_config_from_json(j.value("config", json::object()));
  m.loss_curve = j.value("loss_curve", std::vector<double>{});
  m.source = j.value("source", std::string());
  for (double w : m.head.weights)
    if (!std::isfinite(w)) throw ValidationError(path.string() + ": non-finite weight");
  return m;
}

}  // namespace peek

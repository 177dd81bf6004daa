// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peek/embedding_store.hpp"

namespace peek {

/// Affine decoder over an embedding: logit = w . e + b.
struct LinearHead {
  std::vector<double> weights;
  double bias = 0.0;
  bool use_bias = true;

  std::size_t dim() const noexcept { return weights.size(); }
};

double predict_logit(const LinearHead& head, std::span<const float> e);

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logit
};

/// Mean binary cross entropy on logits, stable for large |logit|.
LossResult bce_loss(std::span<const double> logits, std::span<const double> labels);

/// Mean soft-label cross entropy between sigmoid(teacher/T) and sigmoid(student/T).
LossResult distill_loss(std::span<const double> student, std::span<const double> teacher,
                        double temperature);

enum class LossKind { Bce, Distill };
enum class WeightInit { Zeros, Gaussian };

const char* to_string(LossKind k);
LossKind loss_kind_from_string(std::string_view s);

struct TrainConfig {
  LossKind loss = LossKind::Bce;
  double temperature = 1.0;
  double learning_rate = 1e-2;
  std::size_t epochs = 40;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  WeightInit init = WeightInit::Zeros;
  double init_sigma = 0.01;
  bool use_bias = true;
  /// Emit range_warnings() from train(). Not serialized.
  bool check_ranges = true;

  void validate() const;
  /// Messages for values outside the tuned range (lr in [1e-3, 1e-2], 20..40 epochs).
  std::vector<std::string> range_warnings() const;
};

json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const json& j);

struct TrainedModel {
  LinearHead head;
  TrainConfig config;
  /// Mean training loss after each epoch; size == config.epochs.
  std::vector<double> loss_curve;
  std::string source;
};

/// Called after each epoch with the 1-based epoch and the current head.
using EpochCallback = std::function<void(std::size_t, const LinearHead&)>;

/// Gradient descent on the frozen embeddings of `train_ids`.
/// `targets` holds a 0/1 label (bce) or a teacher score (distill) per id.
TrainedModel train(const EmbeddingStore& store, const std::map<std::string, double>& targets,
                   const std::vector<std::string>& train_ids, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

struct Prediction {
  double logit = 0.0;
  double probability = 0.5;
};

std::map<std::string, Prediction> predict_all(const LinearHead& head, const EmbeddingStore& store,
                                              const std::vector<std::string>& ids);

void save_model(const TrainedModel& model, const std::filesystem::path& path,
                const json& extra = json::object());
TrainedModel load_model(const std::filesystem::path& path);
json model_to_json(const TrainedModel& model);

}  // namespace peek

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peek/util.hpp"

namespace peek {

struct ProbeRecord;

/// Percent of positions where the labels agree.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Area under the ROC curve in percent, via midrank sums (ties count one half).
double auc(std::span<const double> scores, std::span<const int> labels);

double mae(std::span<const double> predicted, std::span<const double> target);

/// A metric that may be undefined (rendered as "-" / null).
using MetricValue = std::optional<double>;

struct EvalReport {
  std::map<std::string, MetricValue> metrics;
  std::map<std::string, std::int64_t> counts;
  std::size_t n_test = 0;
  double class_balance = 0.0;
  std::map<std::string, std::map<std::string, MetricValue>> per_relation;
  json meta = json::object();
};

/// Predicts the train-majority class (ties go to 1) for every test item.
EvalReport majority_baseline(std::span<const int> train_labels, std::span<const int> test_labels);

/// Seeded fair-coin predictions.
EvalReport random_baseline(std::span<const int> test_labels, std::uint64_t seed);

struct BaseAccuracy {
  double accuracy = 0.0;  // percent of parsed records labelled 1
  std::size_t counted = 0;
  std::size_t excluded = 0;
};

/// Fraction of true facts the model affirms; unparsed and failed records are excluded.
BaseAccuracy base_llm_accuracy(std::span<const ProbeRecord> records);

json report_to_json(const EvalReport& report);
EvalReport report_from_json(const json& j);
std::string report_table(const EvalReport& report);

/// Writes `path` (canonical JSON) and `path` with a .txt extension (table).
void emit_report(const EvalReport& report, const std::filesystem::path& path);

/// One row per method with the listed metric columns, two decimals, "-" when undefined.
std::string comparison_table(const std::vector<std::pair<std::string, EvalReport>>& rows,
                             const std::vector<std::string>& metric_columns);

/// Ranks methods within each group (e.g. one LLM) by score, descending, with
/// ties sharing the better rank, then orders methods by mean rank over the
/// groups not excluded. Returns method -> overall rank (1 = best).
std::map<std::string, int> overall_rank(
    const std::map<std::string, std::map<std::string, double>>& score_by_group,
    const std::vector<std::string>& excluded_groups = {});

}  // namespace peek

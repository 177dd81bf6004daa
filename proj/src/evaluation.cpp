// SPDX-License-Identifier: Apache-2.0
#include "peek/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "peek/error.hpp"
#include "peek/probe_harness.hpp"

namespace peek {

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.empty()) throw ValidationError("accuracy of an empty set");
  if (predicted.size() != truth.size()) throw ValidationError("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("AUC undefined: only one class present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of 1-based midranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return 100.0 * u / (np * static_cast<double>(n_neg));
}

double mae(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.empty()) throw ValidationError("mae of an empty set");
  if (predicted.size() != target.size()) throw ValidationError("mae: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) s += std::abs(predicted[i] - target[i]);
  return s / static_cast<double>(predicted.size());
}

namespace {

double share_of_ones(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  return static_cast<double>(std::count(labels.begin(), labels.end(), 1)) /
         static_cast<double>(labels.size());
}

}  // namespace

EvalReport majority_baseline(std::span<const int> train_labels, std::span<const int> test_labels) {
  if (train_labels.empty()) throw ValidationError("majority baseline needs training labels");
  const auto ones = std::count(train_labels.begin(), train_labels.end(), 1);
  const int majority = 2 * static_cast<std::size_t>(ones) >= train_labels.size() ? 1 : 0;
  EvalReport r;
  r.n_test = test_labels.size();
  r.class_balance = share_of_ones(test_labels);
  r.metrics["AUC"] = std::nullopt;
  if (!test_labels.empty()) {
    std::vector<int> pred(test_labels.size(), majority);
    r.metrics["ACC"] = accuracy(pred, test_labels);
  } else {
    r.metrics["ACC"] = std::nullopt;
  }
  r.meta["method"] = "majority";
  r.meta["predicted_class"] = majority;
  return r;
}

EvalReport random_baseline(std::span<const int> test_labels, std::uint64_t seed) {
  if (test_labels.empty()) throw ValidationError("random baseline needs test labels");
  Rng rng(seed);
  std::vector<int> pred(test_labels.size());
  for (auto& p : pred) p = rng.coin() ? 1 : 0;
  EvalReport r;
  r.n_test = test_labels.size();
  r.class_balance = share_of_ones(test_labels);
  r.metrics["ACC"] = accuracy(pred, test_labels);
  r.metrics["AUC"] = std::nullopt;
  r.meta["method"] = "random";
  r.meta["seed"] = seed;
  return r;
}

BaseAccuracy base_llm_accuracy(std::span<const ProbeRecord> records) {
  BaseAccuracy b;
  std::size_t ones = 0;
  for (const auto& r : records) {
    if (r.status != ProbeStatus::Ok || !r.label) {
      ++b.excluded;
      continue;
    }
    ++b.counted;
    ones += *r.label == 1;
  }
  b.accuracy = b.counted ? 100.0 * static_cast<double>(ones) / static_cast<double>(b.counted) : 0.0;
  return b;
}

namespace {

json metric_json(const MetricValue& v) { return v ? json(round_to(*v, 4)) : json(nullptr); }

json metrics_json(const std::map<std::string, MetricValue>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = metric_json(v);
  return j;
}

std::map<std::string, MetricValue> metrics_from_json(const json& j) {
  std::map<std::string, MetricValue> m;
  for (auto it = j.begin(); it != j.end(); ++it)
    m[it.key()] = it.value().is_null() ? MetricValue{} : MetricValue{it.value().get<double>()};
  return m;
}

std::string cell(const MetricValue& v) { return v ? format_fixed(*v, 2) : "-"; }

std::string pad(const std::string& s, std::size_t w, bool left = true) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

}  // namespace

json report_to_json(const EvalReport& r) {
  json j = {{"format", "peekreport"},
            {"version", 1},
            {"metrics", metrics_json(r.metrics)},
            {"counts", json::object()},
            {"meta", r.meta}};
  for (const auto& [k, v] : r.counts) j["counts"][k] = v;
  j["counts"]["n_test"] = r.n_test;
  j["class_balance"] = round_to(r.class_balance, 4);
  if (!r.per_relation.empty()) {
    json pr = json::object();
    for (const auto& [rel, m] : r.per_relation) pr[rel] = metrics_json(m);
    j["per_relation"] = pr;
  }
  return j;
}

EvalReport report_from_json(const json& j) {
  if (j.value("format", "") != "peekreport" || j.value("version", 0) != 1)
    throw ValidationError("not a peekreport version 1 document");
  EvalReport r;
  r.metrics = metrics_from_json(j.at("metrics"));
  for (auto it = j.at("counts").begin(); it != j.at("counts").end(); ++it) {
    if (it.key() == "n_test")
      r.n_test = it.value().get<std::size_t>();
    else
      r.counts[it.key()] = it.value().get<std::int64_t>();
  }
  r.class_balance = j.value("class_balance", 0.0);
  if (j.contains("per_relation"))
    for (auto it = j["per_relation"].begin(); it != j["per_relation"].end(); ++it)
      r.per_relation[it.key()] = metrics_from_json(it.value());
  r.meta = j.value("meta", json::object());
  return r;
}

std::string report_table(const EvalReport& r) {
  std::ostringstream out;
  std::vector<std::string> cols;
  for (const auto& [k, _] : r.metrics) cols.push_back(k);
  out << pad("scope", 24);
  for (const auto& c : cols) out << pad(c, 10, false);
  out << '\n';
  out << pad("overall", 24);
  for (const auto& c : cols) out << pad(cell(r.metrics.at(c)), 10, false);
  out << '\n';
  for (const auto& [rel, m] : r.per_relation) {
    out << pad(rel, 24);
    for (const auto& c : cols) {
      auto it = m.find(c);
      out << pad(it == m.end() ? "-" : cell(it->second), 10, false);
    }
    out << '\n';
  }
  out << "n_test " << r.n_test << ", class balance " << format_fixed(100.0 * r.class_balance, 2)
      << "% positive\n";
  return out.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, canonical_dump(report_to_json(report), 4, 2) + "\n");
  auto txt = path;
  txt.replace_extension(".txt");
  write_file_atomic(txt, report_table(report));
}

std::string comparison_table(const std::vector<std::pair<std::string, EvalReport>>& rows,
                             const std::vector<std::string>& metric_columns) {
  std::size_t w = 10;
  for (const auto& [name, _] : rows) w = std::max(w, name.size() + 2);
  std::ostringstream out;
  out << pad("Method", w);
  for (const auto& c : metric_columns) out << pad(c, 10, false);
  out << '\n';
  for (const auto& [name, rep] : rows) {
    out << pad(name, w);
    for (const auto& c : metric_columns) {
      auto it = rep.metrics.find(c);
      out << pad(it == rep.metrics.end() ? "-" : cell(it->second), 10, false);
    }
    out << '\n';
  }
  return out.str();
}

std::map<std::string, int> overall_rank(
    const std::map<std::string, std::map<std::string, double>>& score_by_group,
    const std::vector<std::string>& excluded_groups) {
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& [group, scores] : score_by_group) {
    if (std::find(excluded_groups.begin(), excluded_groups.end(), group) != excluded_groups.end())
      continue;
    for (const auto& [method, s] : scores) {
      int better = 0;
      for (const auto& [_, other] : scores) better += other > s;
      ranks[method].push_back(1.0 + better);
    }
  }
  std::vector<std::pair<double, std::string>> mean;
  for (const auto& [method, rs] : ranks)
    mean.emplace_back(std::accumulate(rs.begin(), rs.end(), 0.0) / static_cast<double>(rs.size()),
                      method);
  std::sort(mean.begin(), mean.end());
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const bool tie = i > 0 && mean[i].first == mean[i - 1].first;
    out[mean[i].second] = tie ? out[mean[i - 1].second] : static_cast<int>(i + 1);
  }
  return out;
}

}  // namespace peek

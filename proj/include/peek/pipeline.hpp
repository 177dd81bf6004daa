// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "peek/evaluation.hpp"
#include "peek/probe_harness.hpp"
#include "peek/proxy_head.hpp"

namespace peek {

/// Effective run configuration: defaults, then the config file, then
/// dotted-key overrides. Relative paths resolve against `base_dir`.
class RunConfig {
 public:
  RunConfig();
  RunConfig(json doc, std::filesystem::path base_dir);

  /// Sets a dotted key ("train.learning_rates"). The value is parsed as
  /// JSON when possible, otherwise kept as a string.
  void set(const std::string& dotted_key, const std::string& value);
  void set_json(const std::string& dotted_key, const json& value);

  const json& doc() const noexcept { return doc_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  /// Resolved path for a dotted key, empty when unset.
  std::filesystem::path path(const std::string& dotted_key) const;

  std::uint64_t seed() const;
  SampleSpec sample_spec() const;
  ProbeKind probe_kind() const;
  BackendConfig backend_config() const;
  std::string backend_type() const;
  MockOptions mock_options() const;
  /// tag -> resolved path, sorted by tag.
  std::vector<std::pair<std::string, std::filesystem::path>> embeddings() const;
  /// One TrainConfig per grid point (lr x epochs x temperature for distillation).
  std::vector<TrainConfig> train_grid() const;
  bool normalize_embeddings() const;

  /// Hash of everything except output_dir; 12 hex digits.
  std::string hash() const;
  std::filesystem::path output_dir() const;
  /// output_dir / "run-<hash>".
  std::filesystem::path run_dir() const;

  void validate() const;

 private:
  json doc_;
  std::filesystem::path base_dir_;
};

json default_config();
RunConfig load_config(const std::filesystem::path& path);

/// Each command returns a JSON summary. Failures throw peek::Error.
json cmd_build_dataset(const RunConfig& cfg);
/// `backend` overrides the configured backend (used by tests and sweeps).
json cmd_probe(const RunConfig& cfg, Backend* backend = nullptr);
json cmd_train_eval(const RunConfig& cfg);
/// axis is one of negatives | fraction | temperature; values come from sweep.values.
json cmd_sweep(const RunConfig& cfg, const std::string& axis, Backend* backend = nullptr);

/// Comparison table for one run directory, or an overall-rank table of
/// 1/2 (AUC + ACC) across several run directories.
std::string cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::vector<std::string>& excluded_groups = {});

/// Per-split entity statistics table for a stats.json document.
std::string stats_table(const json& stats);

}  // namespace peek

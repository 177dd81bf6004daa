// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the toolkit only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "peek/peek.h"

namespace {

using ConfigPtr = std::unique_ptr<peek_config, decltype(&peek_config_free)>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { peek_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int exit_code(peek_status s) {
  switch (s) {
    case PEEK_OK: return 0;
    case PEEK_E_BACKEND: return 2;
    case PEEK_E_IO: return 3;
    default: return 1;
  }
}

int report_failure(peek_status s) {
  std::cerr << "error: " << peek_last_error() << '\n';
  return exit_code(s);
}

/// Pulls "--a.b=value" / "--a.b value" pairs out of argv; they become config overrides.
std::vector<std::pair<std::string, std::string>> take_overrides(std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) == 0) {
      const auto eq = a.find('=');
      const auto key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
      if (key.find('.') != std::string::npos) {
        if (eq != std::string::npos) {
          out.emplace_back(key, a.substr(eq + 1));
        } else if (i + 1 < args.size()) {
          out.emplace_back(key, args[++i]);
        } else {
          out.emplace_back(key, "true");
        }
        continue;
      }
    }
    rest.push_back(a);
  }
  args = std::move(rest);
  return out;
}

void print_summary(const std::string& summary) {
  auto j = nlohmann::json::parse(summary, nullptr, false);
  if (j.is_discarded()) {
    std::cout << summary << '\n';
    return;
  }
  std::string table;
  if (j.contains("table")) {
    table = j["table"].get<std::string>();
    j.erase("table");
  }
  if (j.contains("base_llm_accuracy"))
    std::printf("base LLM accuracy on true facts: %.2f%%\n", j["base_llm_accuracy"].get<double>());
  std::cout << j.dump(2) << '\n';
  if (!table.empty()) std::cout << '\n' << table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto overrides = take_overrides(args);

  CLI::App app{"peek: probe what an LLM knows and predict it from fact embeddings"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::string backend;
  long long seed = -1;
  int max_parallel = 0;
  app.add_option("--config", config_path, "Run configuration file (JSON)");
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--out", out_dir, "Output directory for run directories");
  app.add_option("--backend", backend, "LLM backend")->check(CLI::IsMember({"http", "mock"}));
  app.add_option("--max-parallel", max_parallel, "Concurrent backend requests")
      ->check(CLI::PositiveNumber);

  auto* build = app.add_subcommand("build-dataset", "Sample triples, add negatives, verbalize, split");
  auto* probe = app.add_subcommand("probe", "Probe the LLM (or ingest FactScore/activations)");
  auto* train = app.add_subcommand("train-eval", "Train linear heads per embedding and evaluate");
  auto* sweep = app.add_subcommand("sweep", "Repeat build/probe/train-eval over one axis");
  std::string axis;
  std::vector<std::string> values;
  sweep->add_option("--axis", axis, "Swept axis")
      ->required()
      ->check(CLI::IsMember({"negatives", "fraction", "temperature"}));
  sweep->add_option("--values", values, "Axis values (default: sweep.values from config)")
      ->delimiter(',');
  auto* report = app.add_subcommand("report", "Print a run's comparison table or rank several runs");
  std::vector<std::string> runs;
  std::vector<std::string> excluded;
  report->add_option("--runs", runs, "Run directories (default: the configured run)");
  report->add_option("--exclude", excluded, "Groups (LLM names) left out of the overall rank");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  peek_config* raw = nullptr;
  if (auto s = peek_config_load(config_path.empty() ? nullptr : config_path.c_str(), &raw))
    return report_failure(s);
  ConfigPtr cfg(raw, &peek_config_free);

  std::vector<std::pair<std::string, std::string>> sets;
  if (seed >= 0) sets.emplace_back("seed", std::to_string(seed));
  if (!out_dir.empty())
    sets.emplace_back("output_dir",
                      nlohmann::json(std::filesystem::absolute(out_dir).string()).dump());
  if (!backend.empty()) sets.emplace_back("backend.type", nlohmann::json(backend).dump());
  if (max_parallel > 0) sets.emplace_back("backend.max_parallel", std::to_string(max_parallel));
  if (!values.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& v : values) {
      auto parsed = nlohmann::json::parse(v, nullptr, false);
      arr.push_back(parsed.is_discarded() ? nlohmann::json(v) : parsed);
    }
    sets.emplace_back("sweep.values", arr.dump());
  }
  sets.insert(sets.end(), overrides.begin(), overrides.end());
  for (const auto& [k, v] : sets)
    if (auto s = peek_config_set(cfg.get(), k.c_str(), v.c_str())) return report_failure(s);

  OwnedString out;
  peek_status status = PEEK_OK;
  if (*build) {
    status = peek_build_dataset(cfg.get(), &out.p);
  } else if (*probe) {
    status = peek_probe(cfg.get(), &out.p);
  } else if (*train) {
    status = peek_train_eval(cfg.get(), &out.p);
  } else if (*sweep) {
    status = peek_sweep(cfg.get(), axis.c_str(), &out.p);
  } else if (*report) {
    if (runs.empty()) {
      OwnedString dir;
      if (auto s = peek_config_run_dir(cfg.get(), &dir.p)) return report_failure(s);
      runs.push_back(dir.str());
    }
    std::vector<const char*> run_ptrs, ex_ptrs;
    for (const auto& r : runs) run_ptrs.push_back(r.c_str());
    for (const auto& e : excluded) ex_ptrs.push_back(e.c_str());
    status = peek_report(run_ptrs.data(), run_ptrs.size(), ex_ptrs.data(), ex_ptrs.size(), &out.p);
    if (status == PEEK_OK) {
      std::cout << out.str();
      return 0;
    }
  }
  if (status != PEEK_OK) return report_failure(status);
  print_summary(out.str());
  return 0;
}

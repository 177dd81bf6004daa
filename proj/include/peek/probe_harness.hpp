// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "peek/embedding_store.hpp"
#include "peek/kg_dataset.hpp"
#include "peek/proxy_head.hpp"

namespace peek {

enum class ProbeKind { BinaryGeneration, BinaryLogits, ActivationPrediction, FactGeneration };
enum class ProbeStatus { Ok, Unparsed, BackendError };

const char* to_string(ProbeKind k);
const char* to_string(ProbeStatus s);
ProbeKind probe_kind_from_string(std::string_view s);
ProbeStatus probe_status_from_string(std::string_view s);

/// True when the probe yields a 0/1 label, false when it yields a real score.
bool yields_labels(ProbeKind k);

struct ProbeRecord {
  std::string fact_id;
  ProbeKind kind = ProbeKind::BinaryGeneration;
  std::optional<bool> bool_polarity;
  std::string prompt;
  std::string raw;
  std::optional<int> label;
  std::optional<double> score;
  ProbeStatus status = ProbeStatus::Ok;
};

json probe_record_to_json(const ProbeRecord& r);
ProbeRecord probe_record_from_json(const json& j);
std::string probe_records_to_jsonl(const std::vector<ProbeRecord>& records,
                                   const json& extra = json::object());
std::vector<ProbeRecord> read_probe_records(const std::filesystem::path& path);

/// The True/False word for a fact, drawn once per (fact id, run seed).
bool sample_bool_polarity(const std::string& fact_id, std::uint64_t seed);

std::string build_binary_prompt(const std::string& fact_text, bool polarity, bool cot);

/// Lowercased first token with surrounding punctuation removed; empty if none.
std::string normalize_answer(std::string_view raw);

/// Final yes/no from a chain-of-thought reply: the "answer" field of a JSON
/// object when present, else the last standalone yes/no token.
std::optional<std::string> extract_cot_answer(std::string_view raw);

/// 1 when the answer shows the model knows the fact, 0 when it does not,
/// nullopt for anything but yes/no.
std::optional<int> parse_binary_response(std::string_view raw, bool polarity,
                                         Polarity fact_polarity);

struct TokenCandidate {
  std::string token;
  double logprob = 0.0;
};

inline constexpr double kDefaultLogitFloor = -20.0;

/// Log-probability of "yes" (polarity True) or "no" (False) among the
/// candidates, case- and whitespace-insensitive; `floor` when absent.
double expected_token_score(const std::vector<TokenCandidate>& candidates, bool polarity,
                            double floor = kDefaultLogitFloor);

// ---------------------------------------------------------------------------
// Backend wire protocol (OpenAI-style chat completions)

struct ChatRequest {
  std::string model;
  std::string prompt;
  bool logprobs = false;
  int top_logprobs = 20;
  bool structured = false;
  int max_tokens = 0;  // 0 leaves it to the server
};

struct ChatReply {
  std::string content;
  bool has_logprobs = false;
  /// Top candidates at the first generated position whose token is not whitespace.
  std::vector<TokenCandidate> candidates;
};

json chat_request_to_wire(const ChatRequest& req);
ChatReply chat_reply_from_wire(const json& response);

class Backend {
 public:
  virtual ~Backend() = default;
  /// Sends one chat-completions request body, returns the response body.
  /// Throws BackendError; transient() marks retryable failures.
  virtual json send(const json& request) = 0;
  virtual bool supports_logprobs() const = 0;
};

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 3;
  double request_timeout_s = 60.0;
  int max_parallel = 4;
  bool cot = false;
  std::filesystem::path cache_path;
  bool logprobs_supported = true;
  int top_logprobs = 20;
  double logit_floor = kDefaultLogitFloor;
  double backoff_initial_s = 0.5;

  void validate() const;
};

/// HTTP client for a chat-completions endpoint. The API key is read from
/// the environment variable named in the config at construction.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  json send(const json& request) override;
  bool supports_logprobs() const override { return cfg_.logprobs_supported; }

 private:
  BackendConfig cfg_;
  std::string base_;
  std::string path_;
  std::string api_key_;
};

struct MockOptions {
  /// always_yes | always_no | bool_true_yes | beliefs | uniform | hedge
  std::string policy = "beliefs";
  /// statement text -> logit of the model's belief that it is true.
  std::unordered_map<std::string, double> beliefs;
  double default_logit = 0.0;
  bool logprobs = true;
  bool leading_whitespace = false;
  /// Every prompt fails this many times (transiently) before succeeding.
  int transient_failures = 0;
  /// Prompts whose statement is in this set always fail permanently.
  std::vector<std::string> permanent_failures;
};

/// Loads {"text":..., "logit":...} lines into options.beliefs.
void load_mock_beliefs(MockOptions& options, const std::filesystem::path& path);

/// In-process backend speaking the same wire format as HttpBackend.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockOptions options);
  json send(const json& request) override;
  bool supports_logprobs() const override { return options_.logprobs; }
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  MockOptions options_;
  std::atomic<std::size_t> requests_{0};
  std::mutex mu_;
  std::unordered_map<std::string, int> failures_seen_;
};

/// Append-only JSON-lines response cache keyed by hash(model, kind, prompt).
class ProbeCache {
 public:
  /// Empty path keeps the cache in memory only.
  explicit ProbeCache(std::filesystem::path path);

  static std::string key(const std::string& model, ProbeKind kind, const std::string& prompt);

  std::optional<ChatReply> get(const std::string& key) const;
  void put(const std::string& key, const std::string& model, ProbeKind kind,
           const std::string& prompt, const ChatReply& reply);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ChatReply> entries_;
};

struct ProbeRun {
  std::vector<ProbeRecord> records;  // sorted by fact id
  std::size_t backend_requests = 0;
  std::size_t backend_errors = 0;
  /// More than 10% of records ended in backend-error.
  bool failed = false;
};

/// Runs BinaryGeneration or BinaryLogits over the facts.
ProbeRun run_probe(const std::vector<Fact>& facts, ProbeKind kind, const BackendConfig& cfg,
                   Backend& backend, ProbeCache& cache, std::uint64_t seed);

/// Activation vectors keyed by fact id; every id must belong to `facts`
/// when `facts` is non-empty.
EmbeddingStore ingest_activations(const std::filesystem::path& path,
                                  const std::vector<Fact>& facts = {});

struct ActivationScores {
  std::map<std::string, double> scores;  // pre-sigmoid logit per fact
  std::vector<std::string> train_ids;
};

/// Fits a BCE linear head on a seeded 80% of the facts for 10 epochs
/// (positives -> 1, negatives -> 0) and scores every fact.
ActivationScores activation_probe_scores(const EmbeddingStore& activations,
                                         const std::vector<Fact>& facts, std::uint64_t seed,
                                         double learning_rate = 1e-2);

struct FactScoreItem {
  Fact fact;
  int label = 0;
  std::string raw_label;
};

struct FactScoreData {
  std::vector<FactScoreItem> items;
  std::size_t dropped_irrelevant = 0;
  std::size_t dropped_duplicates = 0;
};

/// Atomic-fact labels: supported -> 1, not-supported -> 0, irrelevant dropped.
FactScoreData ingest_factscore(const std::filesystem::path& path);

std::vector<ProbeRecord> factscore_records(const FactScoreData& data);
std::vector<ProbeRecord> activation_records(const ActivationScores& scores,
                                            const std::vector<Fact>& facts);

}  // namespace peek

// SPDX-License-Identifier: Apache-2.0
#include "peek/probe_harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "peek/error.hpp"

namespace peek {

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::BinaryGeneration: return "binary_generation";
    case ProbeKind::BinaryLogits: return "binary_logits";
    case ProbeKind::ActivationPrediction: return "activation_prediction";
    case ProbeKind::FactGeneration: return "fact_generation";
  }
  return "?";
}

const char* to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::Ok: return "ok";
    case ProbeStatus::Unparsed: return "unparsed";
    case ProbeStatus::BackendError: return "backend-error";
  }
  return "?";
}

ProbeKind probe_kind_from_string(std::string_view s) {
  for (auto k : {ProbeKind::BinaryGeneration, ProbeKind::BinaryLogits,
                 ProbeKind::ActivationPrediction, ProbeKind::FactGeneration})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown probe kind '" + std::string(s) + "'");
}

ProbeStatus probe_status_from_string(std::string_view s) {
  for (auto st : {ProbeStatus::Ok, ProbeStatus::Unparsed, ProbeStatus::BackendError})
    if (s == to_string(st)) return st;
  throw ValidationError("unknown probe status '" + std::string(s) + "'");
}

bool yields_labels(ProbeKind k) {
  return k == ProbeKind::BinaryGeneration || k == ProbeKind::FactGeneration;
}

json probe_record_to_json(const ProbeRecord& r) {
  return {{"fact_id", r.fact_id},
          {"kind", to_string(r.kind)},
          {"bool", r.bool_polarity ? json(*r.bool_polarity ? "True" : "False") : json(nullptr)},
          {"prompt", r.prompt},
          {"raw", r.raw},
          {"label", r.label ? json(*r.label) : json(nullptr)},
          {"score", r.score ? json(*r.score) : json(nullptr)},
          {"status", to_string(r.status)}};
}

ProbeRecord probe_record_from_json(const json& j) {
  ProbeRecord r;
  r.fact_id = j.at("fact_id").get<std::string>();
  r.kind = probe_kind_from_string(j.at("kind").get<std::string>());
  if (!j.at("bool").is_null()) r.bool_polarity = j["bool"].get<std::string>() == "True";
  r.prompt = j.at("prompt").get<std::string>();
  r.raw = j.at("raw").get<std::string>();
  if (!j.at("label").is_null()) r.label = j["label"].get<int>();
  if (!j.at("score").is_null()) r.score = j["score"].get<double>();
  r.status = probe_status_from_string(j.at("status").get<std::string>());
  return r;
}

std::string probe_records_to_jsonl(const std::vector<ProbeRecord>& records, const json& extra) {
  std::string out;
  for (const auto& r : records) {
    json j = probe_record_to_json(r);
    j.update(extra);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ProbeRecord> read_probe_records(const std::filesystem::path& path) {
  std::vector<ProbeRecord> out;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    try {
      out.push_back(probe_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return out;
}

bool sample_bool_polarity(const std::string& fact_id, std::uint64_t seed) {
  return (splitmix64(seed ^ hash64(fact_id)) >> 63) != 0;
}

std::string build_binary_prompt(const std::string& fact_text, bool polarity, bool cot) {
  std::string p = "You are only supposed to respond in yes/no.\nIs the following statement ";
  p += polarity ? "True" : "False";
  p += "?\nSTATEMENT: ";
  p += fact_text;
  p += "\nANSWER:";
  if (cot) p += "\nThink step-by-step.";
  return p;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim_whitespace(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string normalize_answer(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && (is_space(raw[i]) || is_punct(raw[i]))) ++i;
  std::size_t j = i;
  while (j < raw.size() && !is_space(raw[j])) ++j;
  std::string_view tok = raw.substr(i, j - i);
  while (!tok.empty() && is_punct(tok.back())) tok.remove_suffix(1);
  return lower(tok);
}

std::optional<std::string> extract_cot_answer(std::string_view raw) {
  try {
    auto j = json::parse(raw);
    if (j.is_object() && j.contains("answer") && j["answer"].is_string()) {
      auto a = normalize_answer(j["answer"].get<std::string>());
      if (a == "yes" || a == "no") return a;
      return std::nullopt;
    }
  } catch (const json::exception&) {
  }
  std::optional<std::string> last;
  std::string word;
  auto flush = [&] {
    auto w = lower(word);
    if (w == "yes" || w == "no") last = w;
    word.clear();
  };
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c)))
      word.push_back(c);
    else
      flush();
  }
  flush();
  return last;
}

std::optional<int> parse_binary_response(std::string_view raw, bool polarity,
                                         Polarity fact_polarity) {
  const auto tok = normalize_answer(raw);
  if (tok != "yes" && tok != "no") return std::nullopt;
  const bool said_yes = tok == "yes";
  // A true fact is known when the answer agrees with <bool>; a corrupted one
  // when it disagrees.
  const bool agrees = said_yes == polarity;
  return fact_polarity == Polarity::Positive ? (agrees ? 1 : 0) : (agrees ? 0 : 1);
}

double expected_token_score(const std::vector<TokenCandidate>& candidates, bool polarity,
                            double floor) {
  const std::string expected = polarity ? "yes" : "no";
  std::optional<double> best;
  for (const auto& c : candidates)
    if (lower(trim_whitespace(c.token)) == expected && (!best || c.logprob > *best))
      best = c.logprob;
  return best.value_or(floor);
}

json chat_request_to_wire(const ChatRequest& req) {
  json j = {{"model", req.model},
            {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
            {"temperature", 0}};
  if (req.logprobs) {
    j["logprobs"] = true;
    j["top_logprobs"] = req.top_logprobs;
  }
  if (req.max_tokens > 0) j["max_tokens"] = req.max_tokens;
  if (req.structured) {
    j["response_format"] = {
        {"type", "json_schema"},
        {"json_schema",
         {{"name", "binary_answer"},
          {"strict", true},
          {"schema",
           {{"type", "object"},
            {"properties",
             {{"reasoning", {{"type", "string"}}},
              {"answer", {{"type", "string"}, {"enum", {"yes", "no"}}}}}},
            {"required", {"reasoning", "answer"}},
            {"additionalProperties", false}}}}}};
  }
  return j;
}

ChatReply chat_reply_from_wire(const json& response) {
  try {
    const auto& choice = response.at("choices").at(0);
    ChatReply r;
    const auto& content = choice.at("message").at("content");
    r.content = content.is_null() ? std::string() : content.get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
      r.has_logprobs = true;
      for (const auto& pos : choice["logprobs"]["content"]) {
        const auto token = pos.at("token").get<std::string>();
        if (trim_whitespace(token).empty()) continue;
        if (pos.contains("top_logprobs") && pos["top_logprobs"].is_array() &&
            !pos["top_logprobs"].empty()) {
          for (const auto& c : pos["top_logprobs"])
            r.candidates.push_back({c.at("token").get<std::string>(), c.at("logprob").get<double>()});
        } else {
          r.candidates.push_back({token, pos.at("logprob").get<double>()});
        }
        break;
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat-completions response: ") + e.what(), false);
  }
}

void BackendConfig::validate() const {
  if (max_parallel < 1) throw ValidationError("backend.max_parallel must be at least 1");
  if (max_retries < 0) throw ValidationError("backend.max_retries must be non-negative");
  if (!(request_timeout_s > 0)) throw ValidationError("backend.timeout must be positive");
  if (top_logprobs < 1) throw ValidationError("backend.top_logprobs must be positive");
}

void load_mock_beliefs(MockOptions& options, const std::filesystem::path& path) {
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    try {
      auto j = json::parse(line);
      options.beliefs[j.at("text").get<std::string>()] = j.at("logit").get<double>();
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
}

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {
  static const std::set<std::string> kPolicies = {"always_yes", "always_no", "bool_true_yes",
                                                  "beliefs",    "uniform",   "hedge"};
  if (!kPolicies.count(options_.policy))
    throw ValidationError("unknown mock policy '" + options_.policy + "'");
}

json MockBackend::send(const json& request) {
  ++requests_;
  const auto prompt = request.at("messages").back().at("content").get<std::string>();
  std::string statement = prompt;
  if (auto s = prompt.find("STATEMENT: "); s != std::string::npos) {
    auto e = prompt.find('\n', s);
    statement = prompt.substr(s + 11, e == std::string::npos ? e : e - s - 11);
  }
  const bool polarity = prompt.find("Is the following statement False?") == std::string::npos;

  if (std::find(options_.permanent_failures.begin(), options_.permanent_failures.end(),
                statement) != options_.permanent_failures.end())
    throw BackendError("mock: permanent failure for '" + statement + "'", false);
  if (options_.transient_failures > 0) {
    std::lock_guard lock(mu_);
    auto& seen = failures_seen_[prompt];
    if (seen < options_.transient_failures) {
      ++seen;
      throw BackendError("mock: transient failure", true);
    }
  }

  // Logit of answering "yes".
  double yes_logit = 0.0;
  const auto& p = options_.policy;
  if (p == "always_yes")
    yes_logit = 5.0;
  else if (p == "always_no")
    yes_logit = -5.0;
  else if (p == "bool_true_yes")
    yes_logit = polarity ? 5.0 : -5.0;
  else if (p == "beliefs") {
    auto it = options_.beliefs.find(statement);
    const double belief = it == options_.beliefs.end() ? options_.default_logit : it->second;
    yes_logit = polarity ? belief : -belief;
  }

  const bool hedge = p == "hedge";
  const bool says_yes = yes_logit >= 0.0;
  std::string content;
  if (request.contains("response_format")) {
    content = json({{"reasoning", "Mock reasoning."},
                    {"answer", hedge ? "unsure" : says_yes ? "yes" : "no"}})
                  .dump();
  } else {
    content = hedge ? "Maybe." : says_yes ? "Yes." : "No.";
  }

  json choice = {{"index", 0},
                 {"message", {{"role", "assistant"}, {"content", content}}},
                 {"finish_reason", "stop"},
                 {"logprobs", nullptr}};
  if (request.value("logprobs", false) && options_.logprobs) {
    json positions = json::array();
    if (options_.leading_whitespace)
      positions.push_back({{"token", " "}, {"logprob", -0.01}, {"top_logprobs", json::array()}});
    json top = json::array();
    if (hedge) {
      top.push_back({{"token", "Maybe"}, {"logprob", -0.1}});
    } else {
      const double lp_yes = -softplus(-yes_logit);
      const double lp_no = -softplus(yes_logit);
      json yes = {{"token", "Yes"}, {"logprob", lp_yes}};
      json no = {{"token", "No"}, {"logprob", lp_no}};
      if (lp_yes >= lp_no)
        top = {yes, no};
      else
        top = {no, yes};
    }
    positions.push_back({{"token", top[0]["token"]},
                         {"logprob", top[0]["logprob"]},
                         {"top_logprobs", top}});
    choice["logprobs"] = {{"content", positions}};
  }
  return {{"object", "chat.completion"},
          {"model", request.value("model", std::string("mock"))},
          {"choices", json::array({choice})}};
}

ProbeCache::ProbeCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  for_each_line(path_, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    try {
      auto j = json::parse(line);
      ChatReply r;
      const auto& rep = j.at("reply");
      r.content = rep.at("content").get<std::string>();
      r.has_logprobs = rep.at("has_logprobs").get<bool>();
      for (const auto& c : rep.at("candidates"))
        r.candidates.push_back({c.at(0).get<std::string>(), c.at(1).get<double>()});
      entries_[j.at("key").get<std::string>()] = std::move(r);
    } catch (const json::exception& e) {
      std::clog << "warning: skipping unreadable cache line " << path_.string() << ":" << lineno
                << '\n';
    }
  });
}

std::string ProbeCache::key(const std::string& model, ProbeKind kind, const std::string& prompt) {
  std::string k = model;
  k.push_back('\x1f');
  k += to_string(kind);
  k.push_back('\x1f');
  k += prompt;
  return md5_hex(k);
}

std::optional<ChatReply> ProbeCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ProbeCache::put(const std::string& key, const std::string& model, ProbeKind kind,
                     const std::string& prompt, const ChatReply& reply) {
  json cands = json::array();
  for (const auto& c : reply.candidates) cands.push_back({c.token, c.logprob});
  json j = {{"key", key},
            {"model", model},
            {"kind", to_string(kind)},
            {"prompt", prompt},
            {"reply",
             {{"content", reply.content},
              {"has_logprobs", reply.has_logprobs},
              {"candidates", cands}}}};
  const std::string line = j.dump() + "\n";
  std::lock_guard lock(mu_);
  entries_[key] = reply;
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path_.string());
  out << line;
  out.flush();
}

std::size_t ProbeCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

namespace {

struct Job {
  std::string key;
  std::string prompt;
  std::optional<ChatReply> reply;
  std::string error;
};

}  // namespace

ProbeRun run_probe(const std::vector<Fact>& facts, ProbeKind kind, const BackendConfig& cfg,
                   Backend& backend, ProbeCache& cache, std::uint64_t seed) {
  cfg.validate();
  if (kind != ProbeKind::BinaryGeneration && kind != ProbeKind::BinaryLogits)
    throw ValidationError(std::string("run_probe does not query a backend for ") + to_string(kind));
  if (kind == ProbeKind::BinaryLogits && !backend.supports_logprobs())
    throw ValidationError("backend does not report token log-probabilities");
  // Logits are read at the first generated position, so reasoning is disabled.
  const bool cot = cfg.cot && kind == ProbeKind::BinaryGeneration;

  struct Pending {
    const Fact* fact;
    bool polarity;
    std::size_t job;
  };
  std::vector<Pending> pending;
  std::vector<Job> jobs;
  std::unordered_map<std::string, std::size_t> job_of_key;
  for (const auto& f : facts) {
    const bool polarity = sample_bool_polarity(f.id, seed);
    auto prompt = build_binary_prompt(f.text, polarity, cot);
    auto key = ProbeCache::key(cfg.model, kind, prompt);
    auto [it, fresh] = job_of_key.emplace(key, jobs.size());
    if (fresh) jobs.push_back({key, std::move(prompt), cache.get(key), {}});
    pending.push_back({&f, polarity, it->second});
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!jobs[i].reply) todo.push_back(i);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < todo.size(); t = next++) {
      Job& job = jobs[todo[t]];
      ChatRequest req;
      req.model = cfg.model;
      req.prompt = job.prompt;
      req.logprobs = kind == ProbeKind::BinaryLogits;
      req.top_logprobs = cfg.top_logprobs;
      req.structured = cot;
      req.max_tokens = cot ? 0 : 5;
      const json wire = chat_request_to_wire(req);
      for (int attempt = 0;; ++attempt) {
        try {
          ++requests;
          job.reply = chat_reply_from_wire(backend.send(wire));
          cache.put(job.key, cfg.model, kind, job.prompt, *job.reply);
          break;
        } catch (const BackendError& e) {
          job.error = e.what();
          if (!e.transient() || attempt >= cfg.max_retries) break;
          std::this_thread::sleep_for(
              std::chrono::duration<double>(cfg.backoff_initial_s * std::pow(2.0, attempt)));
        }
      }
    }
  };
  {
    const auto n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallel), todo.size());
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  ProbeRun run;
  run.backend_requests = requests.load();
  for (const auto& p : pending) {
    const Job& job = jobs[p.job];
    ProbeRecord r;
    r.fact_id = p.fact->id;
    r.kind = kind;
    r.bool_polarity = p.polarity;
    r.prompt = job.prompt;
    if (!job.reply) {
      r.status = ProbeStatus::BackendError;
      r.raw = job.error;
      ++run.backend_errors;
    } else if (kind == ProbeKind::BinaryGeneration) {
      r.raw = job.reply->content;
      std::optional<int> label;
      if (cot) {
        if (auto answer = extract_cot_answer(r.raw))
          label = parse_binary_response(*answer, p.polarity, p.fact->polarity);
      } else {
        label = parse_binary_response(r.raw, p.polarity, p.fact->polarity);
      }
      r.label = label;
      r.status = label ? ProbeStatus::Ok : ProbeStatus::Unparsed;
    } else {
      r.raw = job.reply->content;
      if (!job.reply->has_logprobs) {
        r.status = ProbeStatus::BackendError;
        ++run.backend_errors;
      } else {
        r.score = expected_token_score(job.reply->candidates, p.polarity, cfg.logit_floor);
      }
    }
    run.records.push_back(std::move(r));
  }
  std::sort(run.records.begin(), run.records.end(),
            [](const ProbeRecord& a, const ProbeRecord& b) { return a.fact_id < b.fact_id; });
  run.failed = !run.records.empty() &&
               static_cast<double>(run.backend_errors) > 0.1 * static_cast<double>(run.records.size());
  return run;
}

EmbeddingStore ingest_activations(const std::filesystem::path& path,
                                  const std::vector<Fact>& facts) {
  auto store = load_vectors(path);
  if (!facts.empty()) {
    std::set<std::string> known;
    for (const auto& f : facts) known.insert(f.id);
    for (std::size_t i = 0; i < store.ids().size(); ++i)
      if (!known.count(store.ids()[i]))
        throw ValidationError(path.string() + " (record " + std::to_string(i) +
                              "): unknown fact id '" + store.ids()[i] + "'");
  }
  return store;
}

ActivationScores activation_probe_scores(const EmbeddingStore& activations,
                                         const std::vector<Fact>& facts, std::uint64_t seed,
                                         double learning_rate) {
  if (activations.size() == 0) throw ValidationError("empty activation map");
  if (facts.empty()) throw ValidationError("no facts to score");
  const auto cov = coverage_check(activations, facts);
  if (!cov.complete())
    throw ValidationError(std::to_string(cov.missing_ids.size()) +
                          " facts have no activation vector, first: " + cov.missing_ids.front());

  std::vector<std::string> ids;
  std::map<std::string, double> targets;
  for (const auto& f : facts) {
    ids.push_back(f.id);
    targets[f.id] = f.polarity == Polarity::Positive ? 1.0 : 0.0;
  }
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  const auto n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(ids.size()) + 1e-9)));

  ActivationScores out;
  out.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  TrainConfig cfg;
  cfg.loss = LossKind::Bce;
  cfg.epochs = 10;
  cfg.learning_rate = learning_rate;
  cfg.seed = seed;
  cfg.check_ranges = false;
  const auto model = train(activations, targets, out.train_ids, cfg);
  for (const auto& f : facts) out.scores[f.id] = predict_logit(model.head, activations.get(f.id));
  return out;
}

namespace {

std::optional<int> factscore_label(std::string s, bool& irrelevant) {
  irrelevant = false;
  s = lower(trim_whitespace(s));
  std::replace(s.begin(), s.end(), '_', '-');
  std::replace(s.begin(), s.end(), ' ', '-');
  if (s == "supported" || s == "s") return 1;
  if (s == "not-supported" || s == "unsupported" || s == "ns") return 0;
  if (s == "irrelevant" || s == "ir") {
    irrelevant = true;
    return std::nullopt;
  }
  return std::nullopt;
}

std::string single_line(std::string s) {
  for (auto& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return trim_whitespace(s);
}

}  // namespace

FactScoreData ingest_factscore(const std::filesystem::path& path) {
  FactScoreData data;
  std::set<std::string> seen;
  std::size_t record = 0;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    const auto tag = path.string() + ":" + std::to_string(lineno) + " (record " +
                     std::to_string(record++) + ")";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(tag + ": malformed JSON");
    }
    const auto topic = single_line(j.value("topic", std::string()));
    const auto text = single_line(j.value("atomic_fact", j.value("text", std::string())));
    const auto raw_label = j.value("label", std::string());
    const auto generator = single_line(j.value("generator_model", j.value("model", std::string())));
    if (topic.empty() || text.empty()) throw ValidationError(tag + ": missing topic or atomic_fact");
    bool irrelevant = false;
    const auto label = factscore_label(raw_label, irrelevant);
    if (irrelevant) {
      ++data.dropped_irrelevant;
      return;
    }
    if (!label) throw ValidationError(tag + ": unknown label '" + raw_label + "'");
    Triple t{topic, generator.empty() ? "factscore" : "factscore:" + generator, text};
    auto fact = make_fact(t, Polarity::Positive, text);
    if (!seen.insert(fact.id).second) {
      ++data.dropped_duplicates;
      return;
    }
    data.items.push_back({std::move(fact), *label, raw_label});
  });
  return data;
}

std::vector<ProbeRecord> factscore_records(const FactScoreData& data) {
  std::vector<ProbeRecord> out;
  for (const auto& item : data.items) {
    ProbeRecord r;
    r.fact_id = item.fact.id;
    r.kind = ProbeKind::FactGeneration;
    r.prompt = item.fact.text;
    r.raw = item.raw_label;
    r.label = item.label;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const ProbeRecord& a, const ProbeRecord& b) { return a.fact_id < b.fact_id; });
  return out;
}

std::vector<ProbeRecord> activation_records(const ActivationScores& scores,
                                            const std::vector<Fact>& facts) {
  std::vector<ProbeRecord> out;
  for (const auto& f : facts) {
    ProbeRecord r;
    r.fact_id = f.id;
    r.kind = ProbeKind::ActivationPrediction;
    r.prompt = f.text;
    r.score = scores.scores.at(f.id);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const ProbeRecord& a, const ProbeRecord& b) { return a.fact_id < b.fact_id; });
  return out;
}

}  // namespace peek

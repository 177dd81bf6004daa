// SPDX-License-Identifier: Apache-2.0
#include "peek/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "peek/error.hpp"

namespace peek {

namespace {

void deep_merge(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ValidationError("malformed config key '" + dotted + "'");
    p += "/" + part;
  }
  return json::json_pointer(p);
}

template <typename T>
T get_or(const json& doc, const std::string& dotted, T fallback) {
  const auto ptr = pointer_of(dotted);
  if (!doc.contains(ptr) || doc.at(ptr).is_null()) return fallback;
  try {
    return doc.at(ptr).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key " + dotted + " has the wrong type");
  }
}

std::string relation_name(const Fact& f) { return f.triple.relation; }

}  // namespace

json default_config() {
  return {
      {"seed", 0},
      {"output_dir", "runs"},
      {"dataset", {{"triples", nullptr}, {"templates", nullptr}, {"factscore", nullptr},
                   {"activations", nullptr}}},
      {"sample",
       {{"fraction", 1.0},
        {"negatives", 0},
        {"splits", {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}}}}},
      {"probe", {{"kind", "binary_generation"}, {"activation_lr", 0.01}}},
      {"backend",
       {{"type", "mock"},
        {"endpoint", "https://api.openai.com/v1/chat/completions"},
        {"model", "gpt-4o-mini"},
        {"api_key_env", "OPENAI_API_KEY"},
        {"max_retries", 3},
        {"timeout", 60.0},
        {"max_parallel", 4},
        {"cot", false},
        {"cache", nullptr},
        {"logprobs", true},
        {"top_logprobs", 20},
        {"logit_floor", kDefaultLogitFloor},
        {"backoff", 0.5},
        {"mock",
         {{"policy", "beliefs"},
          {"beliefs", nullptr},
          {"default_logit", 0.0},
          {"leading_whitespace", false}}}}},
      {"embeddings", json::object()},
      {"train",
       {{"learning_rates", {0.001, 0.01}},
        {"epochs", {20, 40}},
        {"temperatures", {1.0, 5.0, 10.0}},
        {"batch_size", 0},
        {"bias", true},
        {"init", "zeros"},
        {"init_sigma", 0.01},
        {"normalize", false}}},
      {"sweep", {{"values", json::array()}}},
  };
}

RunConfig::RunConfig() : doc_(default_config()), base_dir_(std::filesystem::current_path()) {}

RunConfig::RunConfig(json doc, std::filesystem::path base_dir)
    : doc_(default_config()), base_dir_(std::move(base_dir)) {
  if (!doc.is_object()) throw ValidationError("config root must be an object");
  deep_merge(doc_, doc);
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::exception&) {
    v = value;
  }
  set_json(dotted_key, v);
}

void RunConfig::set_json(const std::string& dotted_key, const json& value) {
  doc_[pointer_of(dotted_key)] = value;
}

std::filesystem::path RunConfig::path(const std::string& dotted_key) const {
  const auto s = get_or<std::string>(doc_, dotted_key, "");
  if (s.empty()) return {};
  std::filesystem::path p(s);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::uint64_t RunConfig::seed() const { return get_or<std::uint64_t>(doc_, "seed", 0); }

SampleSpec RunConfig::sample_spec() const {
  SampleSpec s;
  s.fraction = get_or<double>(doc_, "sample.fraction", 1.0);
  const auto neg = get_or<std::int64_t>(doc_, "sample.negatives", 0);
  if (neg < 0) throw ValidationError("sample.negatives must be non-negative");
  s.negatives_per_positive = static_cast<std::size_t>(neg);
  s.seed = seed();
  s.splits.train = get_or<double>(doc_, "sample.splits.train", 0.8);
  s.splits.val = get_or<double>(doc_, "sample.splits.val", 0.1);
  s.splits.test = get_or<double>(doc_, "sample.splits.test", 0.1);
  return s;
}

ProbeKind RunConfig::probe_kind() const {
  return probe_kind_from_string(get_or<std::string>(doc_, "probe.kind", "binary_generation"));
}

std::string RunConfig::backend_type() const {
  return get_or<std::string>(doc_, "backend.type", "mock");
}

BackendConfig RunConfig::backend_config() const {
  BackendConfig b;
  b.endpoint = get_or<std::string>(doc_, "backend.endpoint", b.endpoint);
  b.model = get_or<std::string>(doc_, "backend.model", b.model);
  b.api_key_env = get_or<std::string>(doc_, "backend.api_key_env", b.api_key_env);
  b.max_retries = get_or<int>(doc_, "backend.max_retries", b.max_retries);
  b.request_timeout_s = get_or<double>(doc_, "backend.timeout", b.request_timeout_s);
  b.max_parallel = get_or<int>(doc_, "backend.max_parallel", b.max_parallel);
  b.cot = get_or<bool>(doc_, "backend.cot", b.cot);
  b.cache_path = path("backend.cache");
  if (b.cache_path.empty()) b.cache_path = output_dir() / "probe_cache.jsonl";
  b.logprobs_supported = get_or<bool>(doc_, "backend.logprobs", b.logprobs_supported);
  b.top_logprobs = get_or<int>(doc_, "backend.top_logprobs", b.top_logprobs);
  b.logit_floor = get_or<double>(doc_, "backend.logit_floor", b.logit_floor);
  b.backoff_initial_s = get_or<double>(doc_, "backend.backoff", b.backoff_initial_s);
  return b;
}

MockOptions RunConfig::mock_options() const {
  MockOptions m;
  m.policy = get_or<std::string>(doc_, "backend.mock.policy", m.policy);
  m.default_logit = get_or<double>(doc_, "backend.mock.default_logit", m.default_logit);
  m.leading_whitespace = get_or<bool>(doc_, "backend.mock.leading_whitespace", false);
  m.logprobs = get_or<bool>(doc_, "backend.logprobs", true);
  if (auto p = path("backend.mock.beliefs"); !p.empty()) load_mock_beliefs(m, p);
  return m;
}

std::vector<std::pair<std::string, std::filesystem::path>> RunConfig::embeddings() const {
  std::vector<std::pair<std::string, std::filesystem::path>> out;
  const auto& e = doc_.at("embeddings");
  if (!e.is_object()) throw ValidationError("embeddings must map tag -> vector file");
  for (auto it = e.begin(); it != e.end(); ++it) {
    std::filesystem::path p(it.value().get<std::string>());
    out.emplace_back(it.key(), p.is_absolute() ? p : base_dir_ / p);
  }
  return out;
}

std::vector<TrainConfig> RunConfig::train_grid() const {
  const auto lrs = get_or<std::vector<double>>(doc_, "train.learning_rates", {});
  const auto epochs = get_or<std::vector<std::size_t>>(doc_, "train.epochs", {});
  auto temps = get_or<std::vector<double>>(doc_, "train.temperatures", {1.0});
  if (lrs.empty() || epochs.empty())
    throw ValidationError("train.learning_rates and train.epochs must be non-empty");
  const bool labels = yields_labels(probe_kind());
  if (labels) temps = {1.0};
  if (temps.empty()) throw ValidationError("train.temperatures must be non-empty");

  TrainConfig base;
  base.loss = labels ? LossKind::Bce : LossKind::Distill;
  base.batch_size = get_or<std::size_t>(doc_, "train.batch_size", 0);
  base.seed = seed();
  base.use_bias = get_or<bool>(doc_, "train.bias", true);
  const auto init = get_or<std::string>(doc_, "train.init", "zeros");
  if (init == "zeros")
    base.init = WeightInit::Zeros;
  else if (init == "gaussian")
    base.init = WeightInit::Gaussian;
  else
    throw ValidationError("train.init must be zeros or gaussian");
  base.init_sigma = get_or<double>(doc_, "train.init_sigma", base.init_sigma);

  std::vector<TrainConfig> grid;
  for (double lr : lrs)
    for (auto ep : epochs)
      for (double t : temps) {
        TrainConfig c = base;
        c.learning_rate = lr;
        c.epochs = ep;
        c.temperature = t;
        c.validate();
        grid.push_back(c);
      }
  return grid;
}

bool RunConfig::normalize_embeddings() const { return get_or<bool>(doc_, "train.normalize", false); }

std::string RunConfig::hash() const {
  json d = doc_;
  d.erase("output_dir");
  return md5_hex(d.dump()).substr(0, 12);
}

std::filesystem::path RunConfig::output_dir() const {
  auto p = path("output_dir");
  return p.empty() ? base_dir_ / "runs" : p;
}

std::filesystem::path RunConfig::run_dir() const { return output_dir() / ("run-" + hash()); }

void RunConfig::validate() const {
  sample_spec().validate();
  (void)probe_kind();
  backend_config().validate();
  const auto type = backend_type();
  if (type != "mock" && type != "http")
    throw ValidationError("backend.type must be mock or http, got '" + type + "'");
}

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed config (" + e.what() + ")");
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return RunConfig(std::move(doc), base);
}

namespace {

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw ValidationError(what + " path is not configured");
  if (!std::filesystem::exists(p)) throw IoError(what + " not found: " + p.string());
}

json stamp(const RunConfig& cfg) { return {{"config_hash", cfg.hash()}}; }

void write_effective_config(const RunConfig& cfg) {
  json j = cfg.doc();
  j["config_hash"] = cfg.hash();
  write_file_atomic(cfg.run_dir() / "config.json", j.dump(2) + "\n");
}

}  // namespace

std::string stats_table(const json& stats) {
  std::ostringstream out;
  out << "Dataset | Sample Percentage | # Train Entities | # Val Entities | # Test Entities | "
         "# Test - Train Entities\n";
  const auto& e = stats.at("entities");
  out << stats.value("dataset", std::string("-")) << " | " << stats.at("sample_fraction").get<double>()
      << " | " << e.at("train_entities") << " | "
      << e.at("val_entities") << " | " << e.at("test_entities") << " | "
      << e.at("test_minus_train") << '\n';
  return out.str();
}

json cmd_build_dataset(const RunConfig& cfg) {
  cfg.validate();
  const auto spec = cfg.sample_spec();
  const auto kind = cfg.probe_kind();
  std::vector<Fact> facts;
  json counts = json::object();
  json per_relation = json::object();
  std::string dataset_name;

  if (kind == ProbeKind::FactGeneration) {
    const auto fs_path = cfg.path("dataset.factscore");
    require_file(fs_path, "FactScore file");
    auto data = ingest_factscore(fs_path);
    dataset_name = fs_path.stem().string();
    for (auto& item : data.items) facts.push_back(item.fact);
    counts["factscore_records"] = facts.size();
    counts["dropped_irrelevant"] = data.dropped_irrelevant;
    counts["dropped_duplicates"] = data.dropped_duplicates;
  } else {
    const auto triples_path = cfg.path("dataset.triples");
    const auto templates_path = cfg.path("dataset.templates");
    require_file(triples_path, "triples file");
    require_file(templates_path, "templates file");
    const auto templates = load_templates(templates_path);
    dataset_name = triples_path.stem().string();
    const auto full = load_triples(triples_path);
    const auto sampled = stratified_sample(full, spec);
    const auto negatives = sample_negatives(sampled, full, spec.negatives_per_positive,
                                            splitmix64(spec.seed + 1));
    const std::size_t k = spec.negatives_per_positive;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      const auto& t = sampled.triples()[i];
      auto pos = make_fact(t, Polarity::Positive, verbalize(t, templates));
      const auto pos_id = pos.id;
      facts.push_back(std::move(pos));
      for (std::size_t j = 0; j < k; ++j) {
        const auto& n = negatives[i * k + j];
        facts.push_back(make_fact(n, Polarity::Negative, verbalize(n, templates), pos_id));
      }
    }
    counts["triples_loaded"] = full.size();
    counts["triples_sampled"] = sampled.size();
    counts["relations"] = full.relation_index().size();
    counts["entities"] = full.entities().size();
    counts["negatives"] = negatives.size();
    for (const auto& [rel, pos] : full.relation_index()) {
      auto it = sampled.relation_index().find(rel);
      per_relation[rel] = {{"full", pos.size()},
                           {"sampled", it == sampled.relation_index().end() ? 0 : it->second.size()}};
    }
  }

  SampleSpec split_spec = spec;
  split_spec.seed = splitmix64(spec.seed + 2);
  facts = assign_splits(std::move(facts), split_spec);
  const auto st = inductive_stats(facts);

  std::size_t n_train = 0, n_val = 0, n_test = 0;
  for (const auto& f : facts) {
    n_train += f.split == Split::Train;
    n_val += f.split == Split::Val;
    n_test += f.split == Split::Test;
  }
  counts["facts"] = facts.size();
  counts["train"] = n_train;
  counts["val"] = n_val;
  counts["test"] = n_test;

  json stats = {{"format", "peekstats"},
                {"version", 1},
                {"config_hash", cfg.hash()},
                {"dataset", dataset_name},
                {"sample_fraction", spec.fraction},
                {"negatives_per_positive", spec.negatives_per_positive},
                {"counts", counts},
                {"entities",
                 {{"train_entities", st.train_entities},
                  {"val_entities", st.val_entities},
                  {"test_entities", st.test_entities},
                  {"test_minus_train", st.test_minus_train}}}};
  if (!per_relation.empty()) stats["per_relation"] = per_relation;

  const auto dir = cfg.run_dir();
  write_effective_config(cfg);
  write_file_atomic(dir / "facts.jsonl", facts_to_jsonl(facts, stamp(cfg)));
  write_file_atomic(dir / "stats.json", canonical_dump(stats, 4, 2) + "\n");
  write_file_atomic(dir / "stats.txt", stats_table(stats));
  return {{"command", "build-dataset"},
          {"run_dir", dir.string()},
          {"facts", facts.size()},
          {"counts", counts},
          {"entities", stats["entities"]}};
}

json cmd_probe(const RunConfig& cfg, Backend* backend) {
  cfg.validate();
  const auto kind = cfg.probe_kind();
  const auto dir = cfg.run_dir();
  // Inputs specific to the probe kind are checked before any work.
  if (kind == ProbeKind::ActivationPrediction)
    require_file(cfg.path("dataset.activations"), "activations file");
  if (kind == ProbeKind::FactGeneration) require_file(cfg.path("dataset.factscore"), "FactScore file");
  const auto facts_path = dir / "facts.jsonl";
  require_file(facts_path, "facts file (run build-dataset first)");
  const auto facts = read_facts(facts_path);

  json summary = {{"command", "probe"}, {"run_dir", dir.string()}, {"kind", to_string(kind)}};
  std::vector<ProbeRecord> records;
  bool failed = false;

  if (kind == ProbeKind::BinaryGeneration || kind == ProbeKind::BinaryLogits) {
    const auto bcfg = cfg.backend_config();
    std::unique_ptr<Backend> owned;
    if (!backend) {
      if (cfg.backend_type() == "mock")
        owned = std::make_unique<MockBackend>(cfg.mock_options());
      else
        owned = std::make_unique<HttpBackend>(bcfg);
      backend = owned.get();
    }
    ProbeCache cache(bcfg.cache_path);
    auto run = run_probe(facts, kind, bcfg, *backend, cache, cfg.seed());
    records = std::move(run.records);
    failed = run.failed;
    summary["backend_requests"] = run.backend_requests;
    summary["backend_errors"] = run.backend_errors;
    if (kind == ProbeKind::BinaryGeneration) {
      std::unordered_map<std::string, Polarity> polarity;
      for (const auto& f : facts) polarity[f.id] = f.polarity;
      std::vector<ProbeRecord> positives;
      for (const auto& r : records)
        if (polarity[r.fact_id] == Polarity::Positive) positives.push_back(r);
      const auto base = base_llm_accuracy(positives);
      summary["base_llm_accuracy"] = round_to(base.accuracy, 4);
      summary["base_llm_counted"] = base.counted;
      summary["base_llm_excluded"] = base.excluded;
    }
  } else if (kind == ProbeKind::ActivationPrediction) {
    const auto acts = ingest_activations(cfg.path("dataset.activations"), facts);
    const auto scores = activation_probe_scores(
        acts, facts, cfg.seed(), get_or<double>(cfg.doc(), "probe.activation_lr", 1e-2));
    records = activation_records(scores, facts);
    summary["activation_dim"] = acts.dim();
    summary["activation_layer"] = acts.layer() ? json(*acts.layer()) : json(nullptr);
    summary["activation_train_size"] = scores.train_ids.size();
  } else {
    const auto data = ingest_factscore(cfg.path("dataset.factscore"));
    std::set<std::string> ids;
    for (const auto& f : facts) ids.insert(f.id);
    for (auto& r : factscore_records(data))
      if (ids.count(r.fact_id)) records.push_back(std::move(r));
    summary["backend_requests"] = 0;
  }

  std::size_t ok = 0, unparsed = 0, errors = 0;
  for (const auto& r : records) {
    ok += r.status == ProbeStatus::Ok;
    unparsed += r.status == ProbeStatus::Unparsed;
    errors += r.status == ProbeStatus::BackendError;
  }
  summary["records"] = records.size();
  summary["ok"] = ok;
  summary["unparsed"] = unparsed;
  summary["failed"] = failed;
  write_file_atomic(dir / "probes.jsonl", probe_records_to_jsonl(records, stamp(cfg)));
  if (failed)
    throw Error(ErrorKind::Backend, "probe run failed: " + std::to_string(errors) + " of " +
                                        std::to_string(records.size()) +
                                        " records ended in backend-error");
  return summary;
}

namespace {

struct Example {
  std::string id;
  std::string relation;
  double target = 0.0;
};

struct Selection {
  TrainedModel model;
  LinearHead selected;
  std::size_t selected_epoch = 0;
  double val_metric = 0.0;
  std::string val_metric_name;
};

std::vector<std::string> ids_of(const std::vector<Example>& xs) {
  std::vector<std::string> out;
  for (const auto& x : xs) out.push_back(x.id);
  return out;
}

/// Higher is better: AUC (or ACC when one class) for labels, -MAE for scores.
std::pair<std::string, double> validation_metric(const LinearHead& head, const EmbeddingStore& store,
                                                 const std::vector<Example>& val, bool labels) {
  std::vector<double> logits;
  for (const auto& x : val) logits.push_back(predict_logit(head, store.get(x.id)));
  if (!labels) {
    std::vector<double> t;
    for (const auto& x : val) t.push_back(x.target);
    return {"neg_mae", -mae(logits, t)};
  }
  std::vector<int> y, pred;
  for (std::size_t i = 0; i < val.size(); ++i) {
    y.push_back(static_cast<int>(val[i].target));
    pred.push_back(logits[i] >= 0.0 ? 1 : 0);
  }
  const auto ones = std::count(y.begin(), y.end(), 1);
  if (ones > 0 && static_cast<std::size_t>(ones) < y.size()) return {"auc", auc(logits, y)};
  return {"acc", accuracy(pred, y)};
}

EvalReport evaluate_head(const LinearHead& head, const EmbeddingStore& store,
                         const std::vector<Example>& test, bool labels) {
  EvalReport r;
  r.n_test = test.size();
  auto metrics_of = [&](const std::vector<const Example*>& xs) {
    std::map<std::string, MetricValue> m;
    std::vector<double> logits, targets;
    std::vector<int> y, pred;
    for (const auto* x : xs) {
      const double z = predict_logit(head, store.get(x->id));
      logits.push_back(z);
      targets.push_back(x->target);
      y.push_back(static_cast<int>(x->target));
      pred.push_back(sigmoid(z) >= 0.5 ? 1 : 0);
    }
    if (xs.empty()) return m;
    if (labels) {
      m["ACC"] = accuracy(pred, y);
      const auto ones = std::count(y.begin(), y.end(), 1);
      m["AUC"] = ones > 0 && static_cast<std::size_t>(ones) < y.size() ? MetricValue(auc(logits, y))
                                                                        : std::nullopt;
    } else {
      m["MAE"] = mae(logits, targets);
    }
    return m;
  };
  std::vector<const Example*> all;
  std::map<std::string, std::vector<const Example*>> by_rel;
  double ones = 0;
  for (const auto& x : test) {
    all.push_back(&x);
    by_rel[x.relation].push_back(&x);
    ones += x.target == 1.0;
  }
  r.metrics = metrics_of(all);
  if (labels) {
    r.metrics.try_emplace("ACC", std::nullopt);
    r.metrics.try_emplace("AUC", std::nullopt);
  } else {
    r.metrics.try_emplace("MAE", std::nullopt);
  }
  for (const auto& [rel, xs] : by_rel) r.per_relation[rel] = metrics_of(xs);
  r.class_balance = labels && !test.empty() ? ones / static_cast<double>(test.size()) : 0.0;
  return r;
}

}  // namespace

json cmd_train_eval(const RunConfig& cfg) {
  cfg.validate();
  const auto kind = cfg.probe_kind();
  const bool labels = yields_labels(kind);
  const auto dir = cfg.run_dir();
  require_file(dir / "facts.jsonl", "facts file (run build-dataset first)");
  require_file(dir / "probes.jsonl", "probe results (run probe first)");
  const auto facts = read_facts(dir / "facts.jsonl");
  std::unordered_map<std::string, ProbeRecord> probes;
  for (auto& r : read_probe_records(dir / "probes.jsonl")) probes.emplace(r.fact_id, std::move(r));

  std::vector<Example> train_set, val_set, test_set;
  std::size_t excluded = 0;
  std::vector<Fact> usable;
  for (const auto& f : facts) {
    auto it = probes.find(f.id);
    if (it == probes.end() || it->second.status != ProbeStatus::Ok ||
        (labels ? !it->second.label : !it->second.score)) {
      ++excluded;
      continue;
    }
    Example x{f.id, relation_name(f),
              labels ? static_cast<double>(*it->second.label) : *it->second.score};
    usable.push_back(f);
    (f.split == Split::Train ? train_set : f.split == Split::Val ? val_set : test_set).push_back(x);
  }
  if (train_set.empty()) throw ValidationError("no usable training facts after probe filtering");

  const auto embeddings = cfg.embeddings();
  if (embeddings.empty()) throw ValidationError("no embeddings configured");
  const auto grid = cfg.train_grid();

  std::map<std::string, double> targets;
  for (const auto* set : {&train_set, &val_set, &test_set})
    for (const auto& x : *set) targets[x.id] = x.target;

  json summary = {{"command", "train-eval"}, {"run_dir", dir.string()}, {"embeddings", json::object()}};
  std::vector<std::pair<std::string, EvalReport>> rows;
  const std::vector<std::string> columns =
      labels ? std::vector<std::string>{"AUC", "ACC"} : std::vector<std::string>{"MAE"};

  if (labels) {
    std::vector<int> train_y, test_y;
    for (const auto& x : train_set) train_y.push_back(static_cast<int>(x.target));
    for (const auto& x : test_set) test_y.push_back(static_cast<int>(x.target));
    auto maj = majority_baseline(train_y, test_y);
    maj.meta["config_hash"] = cfg.hash();
    emit_report(maj, dir / "reports" / "majority.json");
    rows.emplace_back("Majority", maj);
    if (!test_y.empty()) {
      auto rnd = random_baseline(test_y, cfg.seed());
      rnd.meta["config_hash"] = cfg.hash();
      emit_report(rnd, dir / "reports" / "random.json");
      rows.emplace_back("Random", rnd);
    }
  }

  for (const auto& [tag, path] : embeddings) {
    require_file(path, "embedding file for '" + tag + "'");
    auto store = load_vectors(path);
    if (cfg.normalize_embeddings()) store = store.l2_normalized();
    const auto cov = coverage_check(store, usable);
    if (!cov.complete()) {
      std::string list;
      for (std::size_t i = 0; i < cov.missing_ids.size() && i < 10; ++i)
        list += (i ? ", " : "") + cov.missing_ids[i];
      throw ValidationError("embedding '" + tag + "' misses " +
                            std::to_string(cov.missing_ids.size()) + " fact ids: " + list +
                            (cov.missing_ids.size() > 10 ? ", ..." : ""));
    }

    const auto train_ids = ids_of(train_set);
    std::optional<Selection> best;
    json candidates = json::array();
    for (const auto& tc : grid) {
      Selection sel;
      bool have = false;
      sel.model = train(store, targets, train_ids, tc, [&](std::size_t epoch, const LinearHead& h) {
        if (val_set.empty()) return;
        auto [name, value] = validation_metric(h, store, val_set, labels);
        if (!have || value > sel.val_metric) {
          sel.selected = h;
          sel.selected_epoch = epoch;
          sel.val_metric = value;
          sel.val_metric_name = name;
          have = true;
        }
      });
      if (!have) {
        sel.selected = sel.model.head;
        sel.selected_epoch = tc.epochs;
        sel.val_metric_name = "none";
      }
      candidates.push_back({{"learning_rate", tc.learning_rate},
                            {"epochs", tc.epochs},
                            {"temperature", tc.temperature},
                            {"selected_epoch", sel.selected_epoch},
                            {"validation", sel.val_metric}});
      if (!best || sel.val_metric > best->val_metric) best = std::move(sel);
    }

    TrainedModel chosen = best->model;
    chosen.head = best->selected;
    save_model(chosen, dir / "models" / (tag + ".json"),
               {{"config_hash", cfg.hash()},
                {"selected_epoch", best->selected_epoch},
                {"validation", {{"metric", best->val_metric_name}, {"value", best->val_metric}}},
                {"final_checkpoint",
                 {{"weights", best->model.head.weights},
                  {"bias", best->model.head.use_bias ? json(best->model.head.bias) : json(nullptr)}}},
                {"candidates", candidates},
                {"tag", tag}});

    auto report = evaluate_head(chosen.head, store, test_set, labels);
    report.counts["n_train"] = static_cast<std::int64_t>(train_set.size());
    report.counts["n_val"] = static_cast<std::int64_t>(val_set.size());
    report.counts["n_excluded"] = static_cast<std::int64_t>(excluded);
    report.meta = {{"config_hash", cfg.hash()},
                   {"embedding", tag},
                   {"source", store.source()},
                   {"probe_kind", to_string(kind)},
                   {"model", cfg.backend_config().model},
                   {"selected", train_config_to_json(chosen.config)},
                   {"selected_epoch", best->selected_epoch},
                   {"validation_metric", best->val_metric_name},
                   {"validation_value", round_to(best->val_metric, 4)},
                   {"grid_size", grid.size()}};
    emit_report(report, dir / "reports" / (tag + ".json"));
    summary["embeddings"][tag] = report_to_json(report)["metrics"];
    rows.emplace_back(tag, std::move(report));
  }

  json comparison = {{"format", "peekcomparison"},
                     {"version", 1},
                     {"config_hash", cfg.hash()},
                     {"probe_kind", to_string(kind)},
                     {"model", cfg.backend_config().model},
                     {"columns", columns},
                     {"rows", json::array()}};
  for (const auto& [name, rep] : rows) {
    json m = json::object();
    for (const auto& c : columns) {
      auto it = rep.metrics.find(c);
      m[c] = it != rep.metrics.end() && it->second ? json(round_to(*it->second, 4)) : json(nullptr);
    }
    comparison["rows"].push_back({{"method", name}, {"metrics", m}});
  }
  write_file_atomic(dir / "comparison.json", canonical_dump(comparison, 4, 2) + "\n");
  const auto table = comparison_table(rows, columns);
  write_file_atomic(dir / "comparison.txt", table);
  summary["table"] = table;
  summary["n_train"] = train_set.size();
  summary["n_val"] = val_set.size();
  summary["n_test"] = test_set.size();
  summary["n_excluded"] = excluded;
  return summary;
}

json cmd_sweep(const RunConfig& cfg, const std::string& axis, Backend* backend) {
  std::string key;
  if (axis == "negatives")
    key = "sample.negatives";
  else if (axis == "fraction")
    key = "sample.fraction";
  else if (axis == "temperature")
    key = "train.temperatures";
  else
    throw ValidationError("sweep axis must be negatives, fraction or temperature");
  const auto values = get_or<std::vector<json>>(cfg.doc(), "sweep.values", {});
  if (values.empty()) throw ValidationError("sweep.values must be non-empty");
  if (axis == "temperature" && yields_labels(cfg.probe_kind()))
    std::clog << "warning: temperature sweep has no effect for label probes\n";

  std::ostringstream csv;
  csv << "axis,axis_value,embedding,metric,value\n";
  json runs = json::array();
  std::size_t requests = 0;
  for (const auto& v : values) {
    RunConfig point = cfg;
    point.set_json(key, axis == "temperature" ? json::array({v}) : v);
    cmd_build_dataset(point);
    auto probe = cmd_probe(point, backend);
    requests += probe.value("backend_requests", std::size_t{0});
    cmd_train_eval(point);
    const auto comparison = json::parse(read_file(point.run_dir() / "comparison.json"));
    const auto label = v.dump();
    for (const auto& row : comparison.at("rows"))
      for (auto it = row.at("metrics").begin(); it != row.at("metrics").end(); ++it)
        if (!it.value().is_null())
          csv << axis << ',' << label << ',' << row.at("method").get<std::string>() << ','
              << it.key() << ',' << format_fixed(it.value().get<double>(), 4) << '\n';
    runs.push_back({{"value", v}, {"run_dir", point.run_dir().string()}});
  }
  const auto out = cfg.output_dir() / ("sweep-" + axis + "-" + cfg.hash() + ".csv");
  write_file_atomic(out, csv.str());
  return {{"command", "sweep"},
          {"axis", axis},
          {"csv", out.string()},
          {"runs", runs},
          {"backend_requests", requests}};
}

std::string cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::vector<std::string>& excluded_groups) {
  if (run_dirs.empty()) throw ValidationError("report needs at least one run directory");
  if (run_dirs.size() == 1) {
    const auto p = run_dirs.front() / "comparison.txt";
    require_file(p, "comparison table");
    return read_file(p);
  }
  std::map<std::string, std::map<std::string, double>> scores;
  for (const auto& dir : run_dirs) {
    const auto p = dir / "comparison.json";
    require_file(p, "comparison table");
    const auto c = json::parse(read_file(p));
    auto group = c.value("model", std::string());
    if (group.empty() || scores.count(group)) group = dir.filename().string();
    for (const auto& row : c.at("rows")) {
      const auto method = row.at("method").get<std::string>();
      if (method == "Majority" || method == "Random") continue;
      const auto& m = row.at("metrics");
      if (!m.contains("AUC") || !m.contains("ACC") || m["AUC"].is_null() || m["ACC"].is_null())
        continue;
      scores[group][method] = 0.5 * (m["AUC"].get<double>() + m["ACC"].get<double>());
    }
  }
  const auto ranks = overall_rank(scores, excluded_groups);
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [m, r] : ranks) order.emplace_back(r, m);
  std::sort(order.begin(), order.end());
  std::ostringstream out;
  out << "Overall rank for 1/2(AUC+ACC)";
  if (!excluded_groups.empty()) {
    out << " (excluding";
    for (const auto& g : excluded_groups) out << ' ' << g;
    out << ')';
  }
  out << '\n';
  for (const auto& [r, m] : order) out << r << "  " << m << '\n';
  return out.str();
}

}  // namespace peek

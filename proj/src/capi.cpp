// SPDX-License-Identifier: Apache-2.0
#include "peek/peek.h"

#include <cstdlib>
#include <cstring>
#include <span>

#include "peek/error.hpp"
#include "peek/pipeline.hpp"

struct peek_config {
  peek::RunConfig cfg;
};
struct peek_graph {
  peek::KnowledgeGraph graph;
};
struct peek_store {
  peek::EmbeddingStore store;
};
struct peek_model {
  peek::TrainedModel model;
};

namespace {

thread_local std::string g_last_error;

peek_status fail(peek_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
peek_status guarded(F&& f) {
  try {
    f();
    return PEEK_OK;
  } catch (const peek::Error& e) {
    return fail(static_cast<peek_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(PEEK_E_VALIDATION, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PEEK_E_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PEEK_E_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PEEK_E_INTERNAL, e.what());
  } catch (...) {
    return fail(PEEK_E_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string("null argument: ") + what);
}

}  // namespace

namespace {

template <typename F>
peek_status run_command(const peek_config* cfg, char** summary, F&& f) {
  return guarded([&] {
    need(cfg, "cfg");
    if (summary) *summary = nullptr;
    auto s = f(cfg->cfg);
    if (summary) *summary = dup(s.dump());
  });
}

}  // namespace

extern "C" {

const char* peek_version(void) { return "1.0.0"; }
const char* peek_last_error(void) { return g_last_error.c_str(); }
void peek_string_free(char* s) { std::free(s); }

peek_status peek_config_load(const char* path, peek_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto cfg = path ? peek::load_config(path) : peek::RunConfig();
    *out = new peek_config{std::move(cfg)};
  });
}

peek_status peek_config_from_json(const char* json_text, const char* base_dir, peek_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = nullptr;
    std::filesystem::path base = base_dir ? base_dir : std::filesystem::current_path().string();
    *out = new peek_config{peek::RunConfig(peek::json::parse(json_text), base)};
  });
}

peek_status peek_config_set(peek_config* cfg, const char* dotted_key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(dotted_key, "dotted_key");
    need(value, "value");
    cfg->cfg.set(dotted_key, value);
  });
}

peek_status peek_config_hash(const peek_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cfg->cfg.hash());
  });
}

peek_status peek_config_run_dir(const peek_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cfg->cfg.run_dir().string());
  });
}

peek_status peek_config_dump(const peek_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cfg->cfg.doc().dump(2));
  });
}

void peek_config_free(peek_config* cfg) { delete cfg; }

peek_status peek_build_dataset(const peek_config* cfg, char** summary_json) {
  return run_command(cfg, summary_json, [](const auto& c) { return peek::cmd_build_dataset(c); });
}

peek_status peek_probe(const peek_config* cfg, char** summary_json) {
  return run_command(cfg, summary_json, [](const auto& c) { return peek::cmd_probe(c); });
}

peek_status peek_train_eval(const peek_config* cfg, char** summary_json) {
  return run_command(cfg, summary_json, [](const auto& c) { return peek::cmd_train_eval(c); });
}

peek_status peek_sweep(const peek_config* cfg, const char* axis, char** summary_json) {
  if (!axis) return fail(PEEK_E_ARGUMENT, "null argument: axis");
  return run_command(cfg, summary_json,
                     [axis](const auto& c) { return peek::cmd_sweep(c, axis); });
}

peek_status peek_report(const char* const* run_dirs, size_t n_run_dirs,
                        const char* const* excluded_groups, size_t n_excluded, char** text) {
  return guarded([&] {
    need(text, "text");
    *text = nullptr;
    if (n_run_dirs) need(run_dirs, "run_dirs");
    if (n_excluded) need(excluded_groups, "excluded_groups");
    std::vector<std::filesystem::path> dirs(run_dirs, run_dirs + n_run_dirs);
    std::vector<std::string> ex(excluded_groups, excluded_groups + n_excluded);
    *text = dup(peek::cmd_report(dirs, ex));
  });
}

peek_status peek_graph_load(const char* path, peek_graph** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new peek_graph{peek::load_triples(path)};
  });
}

size_t peek_graph_size(const peek_graph* g) { return g ? g->graph.size() : 0; }
size_t peek_graph_relation_count(const peek_graph* g) {
  return g ? g->graph.relation_index().size() : 0;
}
size_t peek_graph_entity_count(const peek_graph* g) { return g ? g->graph.entities().size() : 0; }

peek_status peek_graph_contains(const peek_graph* g, const char* head, const char* relation,
                                const char* tail, int* out) {
  return guarded([&] {
    need(g, "g");
    need(head, "head");
    need(relation, "relation");
    need(tail, "tail");
    need(out, "out");
    *out = g->graph.contains(head, relation, tail) ? 1 : 0;
  });
}

peek_status peek_graph_sample(const peek_graph* g, double fraction, uint64_t seed,
                              peek_graph** out) {
  return guarded([&] {
    need(g, "g");
    need(out, "out");
    *out = nullptr;
    peek::SampleSpec spec;
    spec.fraction = fraction;
    spec.seed = seed;
    *out = new peek_graph{peek::stratified_sample(g->graph, spec)};
  });
}

void peek_graph_free(peek_graph* g) { delete g; }

peek_status peek_store_load(const char* path, peek_store** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new peek_store{peek::load_vectors(path)};
  });
}

size_t peek_store_dim(const peek_store* s) { return s ? s->store.dim() : 0; }
size_t peek_store_size(const peek_store* s) { return s ? s->store.size() : 0; }

peek_status peek_store_get(const peek_store* s, const char* id, const float** data, size_t* dim) {
  return guarded([&] {
    need(s, "s");
    need(id, "id");
    need(data, "data");
    auto v = s->store.get(id);
    *data = v.data();
    if (dim) *dim = v.size();
  });
}

void peek_store_free(peek_store* s) { delete s; }

peek_status peek_model_load(const char* path, peek_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new peek_model{peek::load_model(path)};
  });
}

size_t peek_model_dim(const peek_model* m) { return m ? m->model.head.dim() : 0; }

peek_status peek_model_predict(const peek_model* m, const float* embedding, size_t dim,
                               double* logit, double* probability) {
  return guarded([&] {
    need(m, "m");
    need(embedding, "embedding");
    const double z = peek::predict_logit(m->model.head, std::span<const float>(embedding, dim));
    if (logit) *logit = z;
    if (probability) *probability = peek::sigmoid(z);
  });
}

void peek_model_free(peek_model* m) { delete m; }

peek_status peek_build_binary_prompt(const char* fact_text, int polarity_true, int cot,
                                     char** out) {
  return guarded([&] {
    need(fact_text, "fact_text");
    need(out, "out");
    if (!*fact_text) throw peek::ValidationError("fact text must be non-empty");
    *out = dup(peek::build_binary_prompt(fact_text, polarity_true != 0, cot != 0));
  });
}

peek_status peek_parse_binary_response(const char* raw, int polarity_true, int fact_is_positive,
                                       int* label) {
  return guarded([&] {
    need(raw, "raw");
    need(label, "label");
    auto l = peek::parse_binary_response(
        raw, polarity_true != 0,
        fact_is_positive ? peek::Polarity::Positive : peek::Polarity::Negative);
    *label = l ? *l : -1;
  });
}

peek_status peek_accuracy(const int* predicted, const int* truth, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n) {
      need(predicted, "predicted");
      need(truth, "truth");
    }
    *out = peek::accuracy({predicted, n}, {truth, n});
  });
}

peek_status peek_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n) {
      need(scores, "scores");
      need(labels, "labels");
    }
    *out = peek::auc({scores, n}, {labels, n});
  });
}

peek_status peek_mae(const double* predicted, const double* target, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n) {
      need(predicted, "predicted");
      need(target, "target");
    }
    *out = peek::mae({predicted, n}, {target, n});
  });
}

}  // extern "C"

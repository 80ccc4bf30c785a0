#include "casekg/pipeline/config.hpp"

#include <filesystem>
#include <fstream>

#include "casekg/error.hpp"

namespace casekg::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const json& j, const char* key, const std::string& base) {
    const auto value = j.value(key, std::string());
    if (value.empty() || base.empty() || fs::path(value).is_absolute()) return value;
    return (fs::path(base) / value).lexically_normal().string();
}

std::optional<std::string> resolve_opt(const json& j, const char* key, const std::string& base) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return resolve(j, key, base);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
    if (k < 1) throw Error("k must be at least 1");
    if (paths < 1) throw Error("paths (P) must be at least 1");
    if (layers < 1) throw Error("layers (L) must be at least 1");
    if (candidates < 1) throw Error("candidates (N) must be at least 1");
    if (task_mode == kg::TaskMode::multilabel && candidates < 5) {
        throw Error("multilabel mode needs at least 5 candidates");
    }
    if (workers < 1) throw Error("workers must be at least 1");
    if (!(emerging_fraction >= 0.0 && emerging_fraction <= 1.0)) throw Error("emerging_fraction must lie in [0, 1]");
    if (!(s0_fraction >= 0.0 && s0_fraction < 1.0)) throw Error("s0_fraction must lie in [0, 1)");
    if (!(repository_sample > 0.0 && repository_sample <= 1.0)) throw Error("repository_sample must lie in (0, 1]");
    if (gnn.hidden < 1) throw Error("gnn hidden width must be at least 1");
    refinement.validate();
    gnn.train.validate();
    chat.validate();
}

PipelineConfig config_from_json(const json& j, const std::string& base_dir) {
    PipelineConfig c;
    read(j, "lambda", c.lambda);
    read(j, "k", c.k);
    read(j, "paths", c.paths);
    read(j, "layers", c.layers);
    read(j, "online_refine", c.online_refine);
    read(j, "record_timing", c.record_timing);
    read(j, "workers", c.workers);
    read(j, "seed", c.seed);
    if (j.contains("task_mode")) c.task_mode = kg::parse_task_mode(j.at("task_mode").get<std::string>());
    c.candidates = c.task_mode == kg::TaskMode::multiclass ? 3 : 10;
    read(j, "candidates", c.candidates);
    read(j, "emerging_fraction", c.emerging_fraction);
    read(j, "s0_fraction", c.s0_fraction);
    read(j, "repository_sample", c.repository_sample);
    read(j, "mechanism_budget", c.mechanism_budget);
    read(j, "task_description", c.task_description);
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        read(a, "with_cases", c.with_cases);
        read(a, "with_assoc", c.with_assoc);
    }
    if (j.contains("refinement")) {
        const auto& r = j.at("refinement");
        read(r, "size_threshold", c.refinement.size_threshold);
        read(r, "new_case_trigger", c.refinement.new_case_trigger);
        read(r, "keep_fraction", c.refinement.keep_fraction);
        read(r, "min_per_category", c.refinement.min_per_category);
        read(r, "seed", c.refinement.seed);
    }
    c.gnn.train.loss_mode = gnn::loss_mode_for(c.task_mode);
    c.gnn.train.seed = c.seed;
    if (j.contains("gnn")) {
        const auto& g = j.at("gnn");
        read(g, "hidden", c.gnn.hidden);
        if (g.contains("activation")) c.gnn.activation = gnn::parse_activation(g.at("activation").get<std::string>());
        read(g, "learning_rate", c.gnn.train.learning_rate);
        read(g, "epochs", c.gnn.train.epochs);
        read(g, "batch_size", c.gnn.train.batch_size);
        read(g, "weight_decay", c.gnn.train.weight_decay);
        read(g, "negatives_per_positive", c.gnn.train.negatives_per_positive);
        read(g, "seed", c.gnn.train.seed);
        read(g, "exclude_direct_interaction", c.gnn.train.exclude_direct_interaction);
        if (g.contains("loss_mode")) c.gnn.train.loss_mode = gnn::parse_loss_mode(g.at("loss_mode").get<std::string>());
    }
    if (j.contains("embedding")) {
        const auto& e = j.at("embedding");
        const auto provider = e.value("provider", std::string("hashed"));
        if (provider == "hashed") {
            c.embedding.provider = embedding::ProviderKind::hashed;
        } else if (provider == "remote") {
            c.embedding.provider = embedding::ProviderKind::remote;
        } else {
            throw Error("unknown embedding provider '" + provider + "'");
        }
        read(e, "dim", c.embedding.dim);
        read(e, "endpoint", c.embedding.endpoint);
        read(e, "model", c.embedding.model);
        read(e, "api_key_env", c.embedding.api_key_env);
        read(e, "max_retries", c.embedding.max_retries);
        read(e, "timeout_seconds", c.embedding.timeout_seconds);
        c.embedding.cache_path = resolve_opt(e, "cache", base_dir);
    }
    if (j.contains("chat")) {
        const auto& ch = j.at("chat");
        const auto backend = ch.value("backend", std::string("mock"));
        if (backend == "mock") {
            c.chat.backend = llm::Backend::mock;
        } else if (backend == "remote") {
            c.chat.backend = llm::Backend::remote;
        } else {
            throw Error("unknown chat backend '" + backend + "'");
        }
        read(ch, "endpoint", c.chat.endpoint);
        read(ch, "model", c.chat.model);
        read(ch, "api_key_env", c.chat.api_key_env);
        read(ch, "temperature", c.chat.temperature);
        read(ch, "max_retries", c.chat.max_retries);
        read(ch, "timeout_seconds", c.chat.timeout_seconds);
        read(ch, "max_in_flight", c.chat.max_in_flight);
        c.chat.cache_path = resolve_opt(ch, "cache", base_dir);
        c.chat.mock_policy_path = resolve_opt(ch, "mock_policy", base_dir);
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        c.data.graph = resolve(d, "graph", base_dir);
        c.data.dataset = resolve(d, "dataset", base_dir);
        c.data.labels = resolve(d, "labels", base_dir);
        c.data.bundle = resolve(d, "bundle", base_dir);
        c.data.splits = resolve(d, "splits", base_dir);
        c.data.checkpoint = resolve(d, "checkpoint", base_dir);
        c.data.repository = resolve(d, "repository", base_dir);
        c.data.output_dir = resolve(d, "output_dir", base_dir);
    }
    return c;
}

json config_to_json(const PipelineConfig& c) {
    json j;
    j["lambda"] = c.lambda;
    j["k"] = c.k;
    j["paths"] = c.paths;
    j["candidates"] = c.candidates;
    j["layers"] = c.layers;
    j["online_refine"] = c.online_refine;
    j["record_timing"] = c.record_timing;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    j["task_mode"] = kg::to_string(c.task_mode);
    j["emerging_fraction"] = c.emerging_fraction;
    j["s0_fraction"] = c.s0_fraction;
    j["repository_sample"] = c.repository_sample;
    j["mechanism_budget"] = c.mechanism_budget;
    j["task_description"] = c.task_description;
    j["ablation"] = {{"with_cases", c.with_cases}, {"with_assoc", c.with_assoc}};
    j["refinement"] = {{"size_threshold", c.refinement.size_threshold},
                       {"new_case_trigger", c.refinement.new_case_trigger},
                       {"keep_fraction", c.refinement.keep_fraction},
                       {"min_per_category", c.refinement.min_per_category},
                       {"seed", c.refinement.seed}};
    const auto& t = c.gnn.train;
    j["gnn"] = {{"hidden", c.gnn.hidden},
                {"activation", gnn::to_string(c.gnn.activation)},
                {"learning_rate", t.learning_rate},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"weight_decay", t.weight_decay},
                {"negatives_per_positive", t.negatives_per_positive},
                {"seed", t.seed},
                {"exclude_direct_interaction", t.exclude_direct_interaction},
                {"loss_mode", gnn::to_string(t.loss_mode)}};
    const auto& e = c.embedding;
    j["embedding"] = {{"provider", e.provider == embedding::ProviderKind::hashed ? "hashed" : "remote"},
                      {"dim", e.dim},
                      {"endpoint", e.endpoint},
                      {"model", e.model},
                      {"api_key_env", e.api_key_env},
                      {"max_retries", e.max_retries},
                      {"timeout_seconds", e.timeout_seconds},
                      {"cache", e.cache_path ? json(*e.cache_path) : json(nullptr)}};
    const auto& ch = c.chat;
    j["chat"] = {{"backend", ch.backend == llm::Backend::mock ? "mock" : "remote"},
                 {"endpoint", ch.endpoint},
                 {"model", ch.model},
                 {"api_key_env", ch.api_key_env},
                 {"temperature", ch.temperature},
                 {"max_retries", ch.max_retries},
                 {"timeout_seconds", ch.timeout_seconds},
                 {"max_in_flight", ch.max_in_flight},
                 {"cache", ch.cache_path ? json(*ch.cache_path) : json(nullptr)},
                 {"mock_policy", ch.mock_policy_path ? json(*ch.mock_policy_path) : json(nullptr)}};
    const auto& d = c.data;
    j["data"] = {{"graph", d.graph},           {"dataset", d.dataset},     {"labels", d.labels},
                 {"bundle", d.bundle},         {"splits", d.splits},       {"checkpoint", d.checkpoint},
                 {"repository", d.repository}, {"output_dir", d.output_dir}};
    return j;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    auto c = config_from_json(j, fs::absolute(path).parent_path().string());
    c.validate();
    return c;
}

}  // namespace casekg::pipeline

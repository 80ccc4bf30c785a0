#include "casekg/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <thread>

#include "casekg/kg/propagation.hpp"
#include "casekg/paths/path_extractor.hpp"

namespace casekg::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

class StageClock {
public:
    explicit StageClock(std::map<std::string, double>* out) : out_(out) {}
    void lap(const std::string& name) {
        if (out_ == nullptr) return;
        const auto now = std::chrono::steady_clock::now();
        (*out_)[name] = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
    }

private:
    std::map<std::string, double>* out_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::vector<std::string> names_of(std::span<const kg::LabelId> ids, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto id : ids) out.push_back(id < names.size() ? names[id] : std::to_string(id));
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

bool is_test_split(const std::string& split) { return split.find("test") != std::string::npos; }

}  // namespace

json PredictionRecord::to_json(const std::vector<std::string>& label_names, kg::TaskMode mode) const {
    json j;
    if (index) j["index"] = *index;
    j["drugs"] = drugs;
    j["truth"] = names_of(truth, label_names);
    if (!error.empty()) {
        j["error"] = error;
        return j;
    }
    j["candidates"] = names_of(candidates, label_names);
    json hits = json::array();
    for (const auto& h : retrieved) hits.push_back({{"case_id", h.case_id}, {"score", h.score}});
    j["retrieved"] = hits;
    j["paths"] = paths;
    j["mechanism"] = mechanism;
    j["prediction"] = names_of(predicted, label_names);
    j["parse_status"] = llm::to_string(parse_status);
    if (!truth.empty() && !predicted.empty()) {
        if (mode == kg::TaskMode::multiclass) {
            j["correct"] = std::find(truth.begin(), truth.end(), predicted.front()) != truth.end();
        } else {
            j["recall_at_5"] = recall_at_5(predicted, truth);
            j["ndcg_at_5"] = ndcg_at_5(predicted, truth);
        }
    }
    j["prompt"] = prompt;
    if (!timing_ms.empty()) j["timing_ms"] = timing_ms;
    return j;
}

kg::Workspace load_workspace(const PipelineConfig& config) {
    const auto& d = config.data;
    if (!d.bundle.empty() && fs::exists(d.bundle)) return kg::load_bundle(d.bundle);
    if (d.dataset.empty()) throw Error("config names neither an existing bundle nor a dataset file");
    kg::Workspace ws;
    if (!d.graph.empty()) {
        ws.kg = kg::load_triples(d.graph, ws.registry);
    }
    std::vector<std::string> vocab;
    if (!d.labels.empty()) vocab = kg::load_label_names(d.labels);
    ws.dataset = kg::load_ddi_dataset(d.dataset, config.task_mode, ws.registry, d.labels.empty() ? nullptr : &vocab);
    return ws;
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<net::HttpTransport> transport) : config_(std::move(config)) {
    config_.validate();
    workspace_ = load_workspace(config_);
    if (workspace_.dataset.mode() != config_.task_mode) {
        throw Error("dataset is " + kg::to_string(workspace_.dataset.mode()) + " but the config asks for " +
                    kg::to_string(config_.task_mode));
    }
    if (config_.task_mode == kg::TaskMode::multiclass) {
        config_.gnn.train.loss_mode = gnn::LossMode::softmax_ce;
    } else {
        config_.gnn.train.loss_mode = gnn::LossMode::sigmoid_bce;
    }
    if (!config_.data.splits.empty() && fs::exists(config_.data.splits)) {
        splits_ = kg::load_splits(config_.data.splits, workspace_.registry);
    } else {
        splits_ = kg::make_splits(workspace_.dataset, config_.emerging_fraction, config_.seed, config_.s0_fraction);
    }
    kg::validate_splits(splits_, workspace_.dataset);
    graph_ = kg::merge_for_propagation(workspace_.kg, workspace_.dataset, splits_.train, workspace_.registry);
    embedder_ = std::make_unique<embedding::EmbeddingProvider>(config_.embedding, transport);
    chat_ = llm::make_chat_client(config_.chat, transport);
}

const gnn::GnnParams& Pipeline::params() {
    if (!params_) {
        const auto& path = config_.data.checkpoint;
        if (path.empty() || !fs::exists(path)) throw Error("no GNN checkpoint at '" + path + "'; run train-gnn first");
        set_params(gnn::load_checkpoint(path));
    }
    return *params_;
}

void Pipeline::set_params(gnn::GnnParams params) {
    if (params.shape.relations != static_cast<int>(graph_.relation_count()) ||
        params.shape.labels != static_cast<int>(workspace_.dataset.relation_count())) {
        throw ShapeError("checkpoint does not match this workspace (" + std::to_string(params.shape.relations) +
                         " relations, " + std::to_string(params.shape.labels) + " labels)");
    }
    params_ = std::move(params);
}

cases::Repository& Pipeline::repository() {
    if (!repo_) {
        const auto& path = config_.data.repository;
        if (path.empty() || !fs::exists(path)) throw Error("no repository at '" + path + "'; run build-repo first");
        repo_ = cases::load_repository(path);
        repo_->set_config(config_.refinement);
    }
    return *repo_;
}

void Pipeline::set_repository(cases::Repository repo) { repo_ = std::move(repo); }

kg::EntityId Pipeline::drug(const std::string& name) const {
    const auto id = workspace_.registry.find(name);
    if (!id) throw NotFoundError("unknown drug '" + name + "'");
    return *id;
}

std::string Pipeline::description(kg::EntityId drug) {
    {
        std::lock_guard lock(description_mutex_);
        if (auto it = descriptions_.find(drug); it != descriptions_.end()) return it->second;
    }
    auto text = llm::generate_description(*chat_, workspace_.registry.name(drug));
    std::lock_guard lock(description_mutex_);
    return descriptions_.emplace(drug, std::move(text)).first->second;
}

std::vector<double> Pipeline::embed(const std::string& text) { const auto e = embedder_->embed(text);
    return {e.values().begin(), e.values().end()};
}

std::vector<double> Pipeline::feature(kg::EntityId drug) { return embed(description(drug)); }

gnn::FeatureTable Pipeline::features_for(std::span<const std::size_t> pair_indices) {
    std::vector<kg::EntityId> drugs;
    for (const auto i : pair_indices) {
        const auto p = workspace_.dataset.pair(i);
        drugs.push_back(p.u);
        drugs.push_back(p.v);
    }
    std::sort(drugs.begin(), drugs.end());
    drugs.erase(std::unique(drugs.begin(), drugs.end()), drugs.end());
    if (drugs.empty()) return gnn::FeatureTable(0);
    auto first = feature(drugs.front());
    gnn::FeatureTable table(static_cast<int>(first.size()));
    table.set(drugs.front(), std::move(first));
    for (std::size_t i = 1; i < drugs.size(); ++i) table.set(drugs[i], feature(drugs[i]));
    return table;
}

gnn::TrainResult Pipeline::train_gnn() {
    const auto& train = splits_.train;
    if (train.empty()) throw Error("training split is empty");
    const auto features = features_for(train);
    const auto examples = gnn::make_examples(workspace_.dataset, train);
    const gnn::GnnShape shape{config_.layers, config_.gnn.hidden, features.dim(),
                              static_cast<int>(graph_.relation_count()),
                              static_cast<int>(workspace_.dataset.relation_count())};
    auto init = gnn::GnnParams::initialize(shape, config_.gnn.activation, config_.gnn.train.seed);
    auto result = gnn::train(std::move(init), graph_, examples, features, config_.gnn.train);
    set_params(result.params);
    return result;
}

PairAnalysis Pipeline::analyze(kg::EntityId u, kg::EntityId v) {
    const auto& p = params();
    PairAnalysis a;
    a.descriptions = stage("descriptions", [&] { return std::array<std::string, 2>{description(u), description(v)}; });
    std::vector<double> f_u, f_v;
    stage("embedding", [&] {
        f_u = feature(u);
        f_v = feature(v);
        a.sem_vec = embed(cases::semantic_text(a.descriptions[0], a.descriptions[1]));
        a.sem_vec_swapped = embed(cases::semantic_text(a.descriptions[1], a.descriptions[0]));
        return 0;
    });
    a.rep = stage("encode", [&] { return gnn::encode_pair(p, graph_, u, v, f_u, f_v, {true}); });
    a.paths = stage("paths", [&] {
        std::vector<std::string> out;
        for (const auto& path : paths::extract_paths(p, graph_, u, v, f_u, f_v, p.shape.layers, config_.paths)) {
            out.push_back(paths::render_path(path, graph_));
        }
        return out;
    });
    stage("candidates", [&] {
        const Eigen::VectorXd z = gnn::score_relations(p, a.rep);
        a.logits.assign(z.data(), z.data() + z.size());
        a.candidates = gnn::candidate_filter(a.logits, static_cast<std::size_t>(config_.candidates));
        return 0;
    });
    return a;
}

cases::InitResult Pipeline::build_repository() {
    const auto& train = splits_.train;
    if (train.empty()) throw Error("training split is empty");
    std::vector<std::size_t> sample(train);
    Rng rng(config_.seed);
    rng.shuffle(std::span<std::size_t>(sample));
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(config_.repository_sample * static_cast<double>(sample.size()) - 1e-9)));
    sample.resize(std::min(n, sample.size()));
    std::sort(sample.begin(), sample.end());

    std::vector<cases::CaseSeed> seeds;
    int embed_dim = 0;
    for (const auto i : sample) {
        const auto pair = workspace_.dataset.pair(i);
        const auto a = analyze(pair.u, pair.v);
        embed_dim = static_cast<int>(a.sem_vec.size());
        seeds.push_back({{workspace_.registry.name(pair.u), workspace_.registry.name(pair.v)},
                         {pair.u, pair.v},
                         a.descriptions,
                         a.paths,
                         a.rep.values,
                         workspace_.dataset.labels(i)});
    }
    const cases::RepositoryShape shape{embed_dim, params().shape.hidden,
                                       static_cast<int>(workspace_.dataset.relation_count()), config_.task_mode};
    auto mechanism = [&](const cases::CaseSeed& s) {
        return llm::distill_mechanism(*chat_, s.drug_names[0], s.drug_names[1], join(names_of(s.labels, label_names()), "; "),
                                      s.paths);
    };
    auto result = cases::init_repository(seeds, shape, config_.refinement, mechanism,
                                         [&](const std::string& t) { return embed(t); });
    repo_ = result.repository;
    return result;
}

PredictionRecord Pipeline::predict_pair(kg::EntityId u, kg::EntityId v, std::optional<std::size_t> index) {
    std::optional<kg::DdiDataset::Seal> seal;
    if (index) seal.emplace(workspace_.dataset, *index);

    PredictionRecord r;
    r.index = index;
    r.drugs = {workspace_.registry.name(u), workspace_.registry.name(v)};
    StageClock clock(config_.record_timing ? &r.timing_ms : nullptr);

    const auto a = analyze(u, v);
    clock.lap("analyze");
    r.candidates = a.candidates;
    r.paths = a.paths;

    llm::PromptBundle bundle;
    bundle.task_description = config_.task_description;
    bundle.drug_u = r.drugs[0];
    bundle.drug_v = r.drugs[1];
    bundle.paths = a.paths;
    bundle.with_cases = config_.with_cases;
    bundle.with_assoc = config_.with_assoc;
    bundle.mechanism_budget = config_.mechanism_budget;
    bundle.mode = config_.task_mode;
    for (const auto id : a.candidates) bundle.candidates.push_back({id, label_names().at(id)});

    if (config_.with_cases) {
        const auto& repo = repository();
        r.retrieved = stage("retrieve", [&] {
            cases::RetrievalQuery q{a.sem_vec, a.sem_vec_swapped, a.rep.values, config_.lambda, config_.k,
                                    std::array<kg::EntityId, 2>{u, v}};
            return cases::retrieve(repo, q);
        });
        for (const auto& hit : r.retrieved) {
            const auto& c = repo.at(hit.index);
            bundle.cases.push_back(
                {c.drug_names[0], c.drug_names[1], c.paths, c.mechanism, names_of(c.labels, label_names())});
        }
    }
    clock.lap("retrieve");

    r.prompt = llm::render_prompt(bundle);
    const auto prediction = stage("predict", [&] { return llm::predict(*chat_, bundle); });
    clock.lap("predict");
    r.mechanism = prediction.mechanism;
    r.predicted = prediction.labels;
    r.parse_status = prediction.status;
    return r;
}

void Pipeline::online_update(const PredictionRecord& record) {
    auto& repo = repository();
    const auto pair = workspace_.dataset.pair(*record.index);
    const auto a = analyze(pair.u, pair.v);
    const bool correct = std::find(record.truth.begin(), record.truth.end(), record.predicted.front()) !=
                         record.truth.end();
    const std::string truth_names = join(names_of(record.truth, label_names()), "; ");
    std::string mechanism = record.mechanism;
    try {
        if (!correct) {
            const llm::CaseBlock shown{record.drugs[0], record.drugs[1], a.paths, record.mechanism,
                                       names_of(record.predicted, label_names())};
            mechanism = llm::revise_mechanism(*chat_, llm::render_case(shown), truth_names);
        } else if (mechanism.empty()) {
            mechanism = llm::distill_mechanism(*chat_, record.drugs[0], record.drugs[1], truth_names, a.paths);
        }
    } catch (const std::exception& e) {
        std::cerr << "warning: revision skipped for " << record.drugs[0] << " / " << record.drugs[1] << ": " << e.what()
                  << '\n';
        return;
    }
    cases::Case c;
    c.case_id = repo.next_case_id();
    c.drug_names = record.drugs;
    c.drug_ids = {pair.u, pair.v};
    c.descriptions = a.descriptions;
    c.paths = a.paths;
    c.h_c = a.rep.values;
    c.mechanism = mechanism;
    c.labels = record.truth;
    c.sem_vec = a.sem_vec;
    c.mech_vec = embed(mechanism);
    c.revised = !correct;
    repo.insert(std::move(c));
    if (repo.refinement_due()) repo = cases::refine(repo);
}

EvaluationResult Pipeline::run_evaluation(const std::string& split) {
    const auto& indices = splits_.select(split);
    if (indices.empty()) throw Error("split " + split + " is empty");
    if (config_.online_refine && is_test_split(split)) {
        throw Error("online refinement uses ground truth and is limited to train and valid splits");
    }
    params();
    if (config_.with_cases || config_.online_refine) repository();

    EvaluationResult result;
    result.records.resize(indices.size());
    auto run_one = [&](std::size_t pos) {
        const std::size_t idx = indices[pos];
        const auto pair = workspace_.dataset.pair(idx);
        try {
            result.records[pos] = predict_pair(pair.u, pair.v, idx);
        } catch (const std::exception& e) {
            PredictionRecord failed;
            failed.index = idx;
            failed.drugs = {workspace_.registry.name(pair.u), workspace_.registry.name(pair.v)};
            failed.error = e.what();
            result.records[pos] = std::move(failed);
        }
    };

    if (config_.online_refine) {
        for (std::size_t pos = 0; pos < indices.size(); ++pos) {
            run_one(pos);
            auto& r = result.records[pos];
            r.truth = workspace_.dataset.labels(indices[pos]);
            if (r.error.empty()) online_update(r);
        }
    } else {
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.workers), indices.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t pos = next++; pos < indices.size(); pos = next++) run_one(pos);
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        for (std::size_t pos = 0; pos < indices.size(); ++pos) {
            result.records[pos].truth = workspace_.dataset.labels(indices[pos]);
        }
    }

    std::map<std::string, std::size_t> statuses;
    for (const auto& r : result.records) {
        if (!r.error.empty()) {
            ++result.failed;
            continue;
        }
        ++statuses[llm::to_string(r.parse_status)];
        result.outcomes.push_back({r.truth, r.predicted});
    }

    json report;
    report["split"] = split;
    report["samples"] = result.outcomes.size();
    report["failed"] = result.failed;
    report["parse_status"] = statuses;
    if (!result.outcomes.empty()) {
        const auto labels = workspace_.dataset.relation_count();
        if (config_.task_mode == kg::TaskMode::multiclass) {
            report["accuracy"] = accuracy(result.outcomes);
            report["f1_macro"] = f1_macro(result.outcomes, labels);
            report["f1_macro_all_classes"] = f1_macro(result.outcomes, labels, true);
            json per_class = json::array();
            for (const auto& s : class_scores(result.outcomes, labels)) {
                if (s.support == 0 && s.predicted == 0) continue;
                per_class.push_back({{"label", label_names().at(s.label)},
                                     {"precision", s.precision},
                                     {"recall", s.recall},
                                     {"f1", s.f1},
                                     {"support", s.support}});
            }
            report["per_class"] = per_class;
        } else {
            report["recall_at_5"] = mean_recall_at_5(result.outcomes);
            report["ndcg_at_5"] = mean_ndcg_at_5(result.outcomes);
        }
    }
    if (repo_) report["repository_size"] = repo_->size();
    report["config"] = config_to_json(config_);
    result.report = std::move(report);
    return result;
}

std::vector<cases::LabeledQuery> Pipeline::retrieval_queries(const std::string& split) {
    std::vector<cases::LabeledQuery> out;
    for (const auto idx : splits_.select(split)) {
        const auto pair = workspace_.dataset.pair(idx);
        const auto a = analyze(pair.u, pair.v);
        cases::LabeledQuery q;
        q.query = {a.sem_vec, a.sem_vec_swapped, a.rep.values, config_.lambda, config_.k,
                   std::array<kg::EntityId, 2>{pair.u, pair.v}};
        q.labels = workspace_.dataset.labels(idx);
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace casekg::pipeline

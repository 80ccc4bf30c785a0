#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "casekg/cases/repository.hpp"
#include "casekg/embedding/embedding_provider.hpp"
#include "casekg/gnn/encoder.hpp"
#include "casekg/gnn/training.hpp"
#include "casekg/kg/bundle.hpp"
#include "casekg/kg/splits.hpp"
#include "casekg/llm/gateway.hpp"
#include "casekg/pipeline/config.hpp"
#include "casekg/pipeline/metrics.hpp"

namespace casekg::pipeline {

// Failure inside one prediction step; `stage` names the step.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Everything the pipeline derives for a pair before asking the model.
struct PairAnalysis {
    std::array<std::string, 2> descriptions;
    std::vector<double> sem_vec;
    std::vector<double> sem_vec_swapped;
    gnn::PairRepresentation rep;
    std::vector<std::string> paths;  // rendered
    std::vector<double> logits;
    std::vector<kg::LabelId> candidates;
};

struct PredictionRecord {
    std::optional<std::size_t> index;  // dataset row, when the pair comes from the dataset
    std::array<std::string, 2> drugs;
    std::vector<kg::LabelId> truth;
    std::vector<kg::LabelId> candidates;
    std::vector<cases::RetrievalHit> retrieved;
    std::vector<std::string> paths;
    std::string mechanism;
    std::vector<kg::LabelId> predicted;
    llm::ParseStatus parse_status = llm::ParseStatus::fallback;
    std::string prompt;
    std::map<std::string, double> timing_ms;  // empty unless timing is recorded
    std::string error;                        // "<stage>: <message>" for failed pairs

    nlohmann::json to_json(const std::vector<std::string>& label_names, kg::TaskMode mode) const;
};

struct EvaluationResult {
    std::vector<PredictionRecord> records;  // dataset order, failed pairs included
    std::vector<Outcome> outcomes;          // successful pairs only
    std::size_t failed = 0;
    nlohmann::json report;
};

// Loaded workspace plus models. Construction reads the bundle (or the raw
// graph and dataset files), the splits (or draws them from the config seed)
// and the propagation graph over training pairs. The checkpoint and the
// repository are loaded on first use.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config, std::shared_ptr<net::HttpTransport> transport = nullptr);

    const PipelineConfig& config() const noexcept { return config_; }
    PipelineConfig& mutable_config() noexcept { return config_; }
    const kg::Workspace& workspace() const noexcept { return workspace_; }
    const kg::SplitSpec& splits() const noexcept { return splits_; }
    const kg::KnowledgeGraph& graph() const noexcept { return graph_; }
    const std::vector<std::string>& label_names() const { return workspace_.dataset.relation_names(); }

    const gnn::GnnParams& params();
    void set_params(gnn::GnnParams params);
    cases::Repository& repository();
    void set_repository(cases::Repository repo);

    kg::EntityId drug(const std::string& name) const;

    // Cached per drug; safe to call from several threads.
    std::string description(kg::EntityId drug);
    std::vector<double> embed(const std::string& text);
    std::vector<double> feature(kg::EntityId drug);

    gnn::FeatureTable features_for(std::span<const std::size_t> pair_indices);
    gnn::TrainResult train_gnn();

    PairAnalysis analyze(kg::EntityId u, kg::EntityId v);
    cases::InitResult build_repository();

    // Runs every stage for one pair. When `index` is set the pair's labels are
    // sealed for the duration, so nothing in here can read them.
    PredictionRecord predict_pair(kg::EntityId u, kg::EntityId v, std::optional<std::size_t> index = std::nullopt);

    EvaluationResult run_evaluation(const std::string& split);

    // One labeled retrieval query per pair of the split.
    std::vector<cases::LabeledQuery> retrieval_queries(const std::string& split);

private:
    void online_update(const PredictionRecord& record);

    PipelineConfig config_;
    kg::Workspace workspace_;
    kg::SplitSpec splits_;
    kg::KnowledgeGraph graph_;
    std::optional<gnn::GnnParams> params_;
    std::optional<cases::Repository> repo_;
    std::unique_ptr<embedding::EmbeddingProvider> embedder_;
    std::unique_ptr<llm::ChatClient> chat_;
    std::mutex description_mutex_;
    std::map<kg::EntityId, std::string> descriptions_;
};

// Loads the workspace from config.data: the bundle when it exists, otherwise
// the raw graph and dataset files.
kg::Workspace load_workspace(const PipelineConfig& config);

}  // namespace casekg::pipeline

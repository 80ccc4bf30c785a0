#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "casekg/cases/repository.hpp"
#include "casekg/embedding/embedding_provider.hpp"
#include "casekg/gnn/params.hpp"
#include "casekg/gnn/training.hpp"
#include "casekg/kg/dataset.hpp"
#include "casekg/llm/chat_client.hpp"

namespace casekg::pipeline {

// Input and output locations. Relative paths in a config file are resolved
// against the directory holding that file.
struct DataPaths {
    std::string graph;     // head<TAB>relation<TAB>tail
    std::string dataset;   // drug<TAB>drug<TAB>labels
    std::string labels;    // optional closed label vocabulary
    std::string bundle;    // output of `ingest`
    std::string splits;
    std::string checkpoint;
    std::string repository;
    std::string output_dir;  // records, reports, sweeps
};

struct GnnSettings {
    int hidden = 16;
    gnn::Activation activation = gnn::Activation::relu;
    gnn::TrainConfig train;
};

struct PipelineConfig {
    double lambda = 0.5;
    std::size_t k = 5;        // reference cases
    int paths = 5;            // P
    int candidates = 3;       // N; 10 is the usual multilabel choice
    int layers = 3;           // L
    bool with_cases = true;
    bool with_assoc = true;
    bool online_refine = false;
    bool record_timing = false;
    int workers = 1;
    std::uint64_t seed = 0;
    kg::TaskMode task_mode = kg::TaskMode::multiclass;
    double emerging_fraction = 0.2;
    double s0_fraction = 0.0;
    double repository_sample = 0.1;  // share of training pairs that seed the repository
    std::size_t mechanism_budget = 600;
    std::string task_description;    // empty: built-in text
    cases::RefinementConfig refinement;
    GnnSettings gnn;
    embedding::EmbeddingConfig embedding;
    llm::ChatClientConfig chat;
    DataPaths data;

    // N >= 5 in multilabel mode, lambda in [0, 1], K, P, L >= 1, and so on.
    void validate() const;
};

PipelineConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);

}  // namespace casekg::pipeline

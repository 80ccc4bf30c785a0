#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "casekg/kg/dataset.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::cases {

// A resolved interaction: who, what the model was shown, why, and the answer.
struct Case {
    std::string case_id;
    std::array<std::string, 2> drug_names;
    std::array<kg::EntityId, 2> drug_ids{};
    std::array<std::string, 2> descriptions;
    std::vector<std::string> paths;  // rendered relational paths
    std::vector<double> h_c;         // structural representation
    std::string mechanism;
    std::vector<kg::LabelId> labels;  // sorted, distinct
    std::vector<double> sem_vec;      // unit embedding of semantic_text(descriptions)
    std::vector<double> mech_vec;     // unit embedding of the mechanism
    std::uint64_t created_at = 0;     // repository clock tick, not wall time
    bool revised = false;

    // Category used for grouping: the smallest label.
    kg::LabelId category() const { return labels.front(); }
    bool operator==(const Case&) const = default;
};

// Text embedded for semantic similarity.
std::string semantic_text(const std::string& description_u, const std::string& description_v);

struct RefinementConfig {
    std::size_t size_threshold = 0;  // 0 disables the size trigger
    std::size_t new_case_trigger = 1000;
    double keep_fraction = 0.05;
    std::size_t min_per_category = 10;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const RefinementConfig&) const = default;
};

struct RepositoryShape {
    int embed_dim = 0;
    int hidden_dim = 0;  // h_c has 2 * hidden_dim entries
    int label_count = 0;
    kg::TaskMode task_mode = kg::TaskMode::multiclass;

    bool operator==(const RepositoryShape&) const = default;
};

class Repository {
public:
    Repository() = default;
    Repository(RepositoryShape shape, RefinementConfig config);

    const RepositoryShape& shape() const noexcept { return shape_; }
    const RefinementConfig& config() const noexcept { return config_; }
    void set_config(RefinementConfig config);

    std::size_t size() const noexcept { return cases_.size(); }
    bool empty() const noexcept { return cases_.empty(); }
    const std::vector<Case>& cases() const noexcept { return cases_; }
    const Case& at(std::size_t index) const { return cases_.at(index); }
    const Case* find(const std::string& case_id) const;

    // label -> case ids, in insertion order.
    const std::map<kg::LabelId, std::vector<std::string>>& categories() const noexcept { return categories_; }

    std::size_t pending() const noexcept { return pending_; }
    std::uint64_t clock() const noexcept { return clock_; }

    // Fresh id of the form case-000001, unique within this repository.
    std::string next_case_id() const;

    // Validates the case, stamps created_at and counts it as pending.
    // Throws on a duplicate id and leaves the repository unchanged.
    void insert(Case c);

    void revise(const std::string& case_id, std::string mechanism, std::vector<double> mech_vec);

    bool refinement_due() const;

    // Copy holding only the listed cases, in that order, with pending reset.
    Repository retain(std::span<const std::size_t> indices) const;

    bool operator==(const Repository& other) const;

private:
    friend Repository load_repository(const std::string& path);
    void check(const Case& c) const;

    RepositoryShape shape_;
    RefinementConfig config_;
    std::vector<Case> cases_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<kg::LabelId, std::vector<std::string>> categories_;
    std::size_t pending_ = 0;
    std::uint64_t clock_ = 0;
};

// Header line, then one JSON object per case.
void save_repository(const Repository& repo, const std::string& path);
Repository load_repository(const std::string& path);

struct RetrievalQuery {
    std::vector<double> sem_vec;
    // Embedding of the descriptions in the opposite pair order; when present
    // the semantic term is the better of the two orientations.
    std::optional<std::vector<double>> sem_vec_swapped;
    std::vector<double> h_p;
    double lambda = 0.5;
    std::size_t k = 5;
    // Cases about this unordered pair are never returned.
    std::optional<std::array<kg::EntityId, 2>> exclude_pair;
};

struct RetrievalHit {
    std::size_t index = 0;  // position in Repository::cases()
    std::string case_id;
    double score = 0.0;
    double semantic = 0.0;
    double structural = 0.0;
};

// score = lambda * semantic + (1 - lambda) * structural over every case,
// sorted by score descending then case_id ascending, top k returned.
std::vector<RetrievalHit> retrieve(const Repository& repo, const RetrievalQuery& query);

struct LabeledQuery {
    RetrievalQuery query;
    std::vector<kg::LabelId> labels;
};

// Majority category among the top-k cases (ties: larger summed score, then
// smaller label) scored against the query labels.
double retrieval_majority_accuracy(const Repository& repo, std::span<const LabeledQuery> queries, double lambda,
                                   std::size_t k);

struct KMedoidsResult {
    std::vector<std::size_t> medoids;     // ascending point indices
    std::vector<std::size_t> assignment;  // per point, position in `medoids`
    double cost = 0.0;                    // sum of distances to the assigned medoid
};

// PAM with distance 1 - cosine: greedy BUILD, then best-improvement swaps
// until none lowers the cost. BUILD is deterministic, so `seed` only exists
// for interface stability.
KMedoidsResult k_medoids(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed = 0);

struct CategoryRefinement {
    std::size_t before = 0;
    std::size_t after = 0;
    std::size_t k = 0;
};

struct RefinementReport {
    std::map<kg::LabelId, CategoryRefinement> categories;
    std::size_t before = 0;
    std::size_t after = 0;
};

std::size_t refined_size(std::size_t n, const RefinementConfig& config);

// Keeps only the mechanism-embedding medoids of each category.
Repository refine(const Repository& repo, RefinementReport* report = nullptr);

// {"<label>": {"before", "after", "k"}}; label names are used when given.
std::string report_json(const RefinementReport& report, const std::vector<std::string>* label_names = nullptr);

// Everything a case needs except its mechanism.
struct CaseSeed {
    std::array<std::string, 2> drug_names;
    std::array<kg::EntityId, 2> drug_ids{};
    std::array<std::string, 2> descriptions;
    std::vector<std::string> paths;
    std::vector<double> h_c;
    std::vector<kg::LabelId> labels;
};

using MechanismSource = std::function<std::string(const CaseSeed&)>;
using Embedder = std::function<std::vector<double>(const std::string&)>;

struct InitResult {
    Repository repository;
    std::vector<std::string> warnings;  // one per skipped seed
};

// Builds one case per seed. A seed whose mechanism source throws is skipped
// with a warning.
InitResult init_repository(std::span<const CaseSeed> seeds, RepositoryShape shape, RefinementConfig config,
                           const MechanismSource& mechanism, const Embedder& embed);

// Revision helper that re-embeds the text.
void revise_case(Repository& repo, const std::string& case_id, std::string mechanism, const Embedder& embed);

}  // namespace casekg::cases

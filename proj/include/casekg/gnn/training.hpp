#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casekg/error.hpp"
#include "casekg/gnn/encoder.hpp"
#include "casekg/gnn/params.hpp"
#include "casekg/kg/dataset.hpp"
#include "casekg/kg/knowledge_graph.hpp"
#include "casekg/rng.hpp"

namespace casekg::gnn {

enum class LossMode { softmax_ce, sigmoid_bce };

std::string to_string(LossMode m);
LossMode parse_loss_mode(std::string_view s);
LossMode loss_mode_for(kg::TaskMode mode);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 16;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    LossMode loss_mode = LossMode::softmax_ce;
    int negatives_per_positive = 1;
    // Hide each training pair's own interaction edges while it is encoded.
    bool exclude_direct_interaction = true;

    void validate() const;
};

// Text embedding per entity id; rows of non-drug entities stay empty.
class FeatureTable {
public:
    FeatureTable() = default;
    explicit FeatureTable(int dim) : dim_(dim) {}

    int dim() const noexcept { return dim_; }
    void set(kg::EntityId e, std::vector<double> values);
    bool has(kg::EntityId e) const noexcept { return e < rows_.size() && !rows_[e].empty(); }
    std::span<const double> at(kg::EntityId e) const;

private:
    int dim_ = 0;
    std::vector<std::vector<double>> rows_;
};

struct TrainingExample {
    kg::EntityId u = 0;
    kg::EntityId v = 0;
    std::vector<kg::LabelId> labels;
};

std::vector<TrainingExample> make_examples(const kg::DdiDataset& dataset, std::span<const std::size_t> indices);

// Supervision for one pair. softmax_ce reads positives[0]; sigmoid_bce scores
// every positive and every listed negative.
struct LossTarget {
    std::vector<kg::LabelId> positives;
    std::vector<kg::LabelId> negatives;
};

// Uniform draw without replacement from labels outside `positives`, up to
// negatives_per_positive * |positives| of them.
std::vector<kg::LabelId> sample_negatives(std::span<const kg::LabelId> positives, int label_count,
                                          int negatives_per_positive, Rng& rng);

// Loss of one pair; when `grad` is non-null the gradient is added into it.
double example_loss(const GnnParams& params, const kg::KnowledgeGraph& graph, const FeatureTable& features,
                    const TrainingExample& example, const LossTarget& target, LossMode mode,
                    const EncodeOptions& options, GnnParams* grad);

struct TrainingDiverged : Error {
    TrainingDiverged(int epoch, double loss);
    int epoch;
};

struct TrainResult {
    GnnParams params;
    std::vector<double> epoch_loss;  // mean per-example loss of each epoch
};

// Adam over shuffled mini-batches. Fully deterministic for a given seed.
TrainResult train(GnnParams params, const kg::KnowledgeGraph& graph, std::span<const TrainingExample> examples,
                  const FeatureTable& features, const TrainConfig& config);

// Fraction of examples whose top logit is one of their labels.
double training_accuracy(const GnnParams& params, const kg::KnowledgeGraph& graph,
                         std::span<const TrainingExample> examples, const FeatureTable& features,
                         const EncodeOptions& options = {});

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t coordinates = 50;
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
    EncodeOptions encode;
    // Applied to the analytic gradient before comparison (negative controls).
    std::function<void(std::vector<double>&)> tamper;
    // Coordinates checked in addition to the sampled ones.
    std::vector<std::size_t> extra_coordinates;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
    std::size_t worst_coordinate = 0;
    std::string worst_tensor;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    bool passed = false;
};

// Analytic gradient against central differences (loss(x+e) - loss(x-e)) / 2e
// on a seeded sample of coordinates. Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport grad_check(const GnnParams& params, const kg::KnowledgeGraph& graph, const FeatureTable& features,
                           const TrainingExample& example, const LossTarget& target, LossMode mode,
                           const GradCheckOptions& options = {});

}  // namespace casekg::gnn

#pragma once

#include <span>
#include <vector>

#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::pipeline {

// Ranked prediction against ground truth; multiclass uses predicted[0].
struct Outcome {
    std::vector<kg::LabelId> truth;
    std::vector<kg::LabelId> predicted;
};

// Fraction of outcomes whose first prediction is a true label.
double accuracy(std::span<const Outcome> outcomes);

struct ClassScore {
    kg::LabelId label = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;    // true occurrences
    std::size_t predicted = 0;  // predicted occurrences
};

// Per-class scores over the first prediction, 0/0 read as 0, for every label
// below label_count.
std::vector<ClassScore> class_scores(std::span<const Outcome> outcomes, std::size_t label_count);

// Mean per-class F1 over the classes that occur in the truth or the
// predictions; with `strict`, over all label_count classes.
double f1_macro(std::span<const Outcome> outcomes, std::size_t label_count, bool strict = false);

// |R[0:5] & T| / |T|.
double recall_at_5(std::span<const kg::LabelId> recommended, std::span<const kg::LabelId> truth);

// sum_i [R_i in T] / log2(i + 1) over the first five, divided by the same sum
// for an ideal ranking of min(|T|, 5) hits.
double ndcg_at_5(std::span<const kg::LabelId> recommended, std::span<const kg::LabelId> truth);

double mean_recall_at_5(std::span<const Outcome> outcomes);
double mean_ndcg_at_5(std::span<const Outcome> outcomes);

}  // namespace casekg::pipeline

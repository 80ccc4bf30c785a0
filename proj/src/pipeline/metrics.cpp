#include "casekg/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "casekg/error.hpp"

namespace casekg::pipeline {

namespace {

void require_nonempty(std::span<const Outcome> outcomes) {
    if (outcomes.empty()) throw Error("metric over an empty record set");
}

bool contains(std::span<const kg::LabelId> set, kg::LabelId x) { return std::find(set.begin(), set.end(), x) != set.end(); }

void require_ranking(std::span<const kg::LabelId> recommended, std::span<const kg::LabelId> truth) {
    if (truth.empty()) throw Error("ranking metric with an empty truth set");
    if (recommended.empty()) throw Error("ranking metric with an empty recommendation list");
}

}  // namespace

double accuracy(std::span<const Outcome> outcomes) {
    require_nonempty(outcomes);
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
        if (!o.predicted.empty() && contains(o.truth, o.predicted.front())) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::vector<ClassScore> class_scores(std::span<const Outcome> outcomes, std::size_t label_count) {
    std::vector<ClassScore> scores(label_count);
    std::vector<std::size_t> tp(label_count, 0);
    for (std::size_t i = 0; i < label_count; ++i) scores[i].label = static_cast<kg::LabelId>(i);
    for (const auto& o : outcomes) {
        if (o.truth.empty()) throw Error("outcome without a true label");
        const kg::LabelId t = o.truth.front();
        if (t >= label_count) throw NotFoundError("label out of range in metrics");
        ++scores[t].support;
        if (o.predicted.empty()) continue;
        const kg::LabelId p = o.predicted.front();
        if (p >= label_count) throw NotFoundError("label out of range in metrics");
        ++scores[p].predicted;
        if (p == t) ++tp[t];
    }
    for (std::size_t i = 0; i < label_count; ++i) {
        auto& s = scores[i];
        const auto t = static_cast<double>(tp[i]);
        s.precision = s.predicted ? t / static_cast<double>(s.predicted) : 0.0;
        s.recall = s.support ? t / static_cast<double>(s.support) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    }
    return scores;
}

double f1_macro(std::span<const Outcome> outcomes, std::size_t label_count, bool strict) {
    require_nonempty(outcomes);
    const auto scores = class_scores(outcomes, label_count);
    double sum = 0.0;
    std::size_t classes = 0;
    for (const auto& s : scores) {
        if (!strict && s.support == 0 && s.predicted == 0) continue;
        sum += s.f1;
        ++classes;
    }
    return classes ? sum / static_cast<double>(classes) : 0.0;
}

double recall_at_5(std::span<const kg::LabelId> recommended, std::span<const kg::LabelId> truth) {
    require_ranking(recommended, truth);
    const auto top = recommended.subspan(0, std::min<std::size_t>(5, recommended.size()));
    std::size_t hits = 0;
    for (const auto t : truth) hits += contains(top, t);
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ndcg_at_5(std::span<const kg::LabelId> recommended, std::span<const kg::LabelId> truth) {
    require_ranking(recommended, truth);
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, recommended.size()); ++i) {
        if (contains(truth, recommended[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, truth.size()); ++i) {
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / ideal;
}

double mean_recall_at_5(std::span<const Outcome> outcomes) {
    require_nonempty(outcomes);
    double s = 0.0;
    for (const auto& o : outcomes) s += recall_at_5(o.predicted, o.truth);
    return s / static_cast<double>(outcomes.size());
}

double mean_ndcg_at_5(std::span<const Outcome> outcomes) {
    require_nonempty(outcomes);
    double s = 0.0;
    for (const auto& o : outcomes) s += ndcg_at_5(o.predicted, o.truth);
    return s / static_cast<double>(outcomes.size());
}

}  // namespace casekg::pipeline

#include "casekg/paths/path_extractor.hpp"

#include <algorithm>

#include "casekg/error.hpp"
#include "casekg/gnn/encoder.hpp"
#include "casekg/kg/layers.hpp"

namespace casekg::paths {

namespace {

// Compares entity sequences first, then relation sequences.
int compare_steps(const std::vector<kg::Triple>& a, const std::vector<kg::Triple>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].tail != b[i].tail) return a[i].tail < b[i].tail ? -1 : 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].relation != b[i].relation) return a[i].relation < b[i].relation ? -1 : 1;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

}  // namespace

bool path_before(const RelPath& a, const RelPath& b) {
    if (a.score != b.score) return a.score > b.score;
    return compare_steps(a.steps, b.steps) < 0;
}

std::vector<RelPath> extract_paths(const gnn::GnnParams& params, const kg::KnowledgeGraph& graph, kg::EntityId u,
                                   kg::EntityId v, std::span<const double> f_u, std::span<const double> f_v,
                                   int depth, int beam) {
    if (beam < 1) throw Error("beam width must be at least 1");
    if (depth > params.shape.layers) {
        throw Error("path depth " + std::to_string(depth) + " exceeds the encoder's " +
                    std::to_string(params.shape.layers) + " layers");
    }
    const auto flow = kg::flow_layers(graph, u, v, depth);  // validates u, v, depth
    if (u == v) return {};

    // viable[l]: flow-layer-l nodes with an in-layer continuation to v.
    std::vector<std::vector<kg::EntityId>> viable(static_cast<std::size_t>(depth) + 1);
    viable.back() = {v};
    for (int l = depth - 1; l >= 0; --l) {
        const auto& next = viable[static_cast<std::size_t>(l) + 1];
        for (const kg::EntityId e : flow.layers[static_cast<std::size_t>(l)]) {
            const auto out = graph.out_edges(e);
            if (std::any_of(out.begin(), out.end(),
                            [&](const kg::Edge& edge) { return std::binary_search(next.begin(), next.end(), edge.node); })) {
                viable[static_cast<std::size_t>(l)].push_back(e);
            }
        }
    }
    if (viable.front().empty()) return {};

    std::vector<RelPath> open{RelPath{}};
    for (int l = 1; l <= depth; ++l) {
        const auto& allowed = viable[static_cast<std::size_t>(l)];
        std::vector<RelPath> close;
        for (const auto& prefix : open) {
            const kg::EntityId at = prefix.steps.empty() ? u : prefix.steps.back().tail;
            for (const auto& edge : graph.out_edges(at)) {
                if (!std::binary_search(allowed.begin(), allowed.end(), edge.node)) continue;
                RelPath next = prefix;
                next.steps.push_back({at, edge.relation, edge.node});
                next.score = prefix.score + gnn::attention_weight(params, edge.relation, l, f_u, f_v);
                close.push_back(std::move(next));
            }
        }
        const auto keep = std::min(close.size(), static_cast<std::size_t>(beam));
        std::partial_sort(close.begin(), close.begin() + static_cast<std::ptrdiff_t>(keep), close.end(), path_before);
        close.resize(keep);
        open = std::move(close);
    }
    return open;
}

std::string render_path(const RelPath& path, const kg::KnowledgeGraph& graph) {
    if (path.steps.empty()) throw Error("cannot render an empty path");
    std::string out = graph.entity(path.steps.front().head).name;
    for (const auto& step : path.steps) {
        if (step.relation >= graph.relation_count()) {
            throw NotFoundError("relation id " + std::to_string(step.relation) + " not in vocabulary");
        }
        out += " --" + graph.relations().display_name(step.relation) + "--> " + graph.entity(step.tail).name;
    }
    return out;
}

}  // namespace casekg::paths

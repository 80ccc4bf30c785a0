#pragma once

#include <vector>

#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::kg {

inline constexpr int kUnreached = -1;

// Per-layer node sets {e : d(u,e) = l and d(e,v) = L - l}, layer 0 = {u},
// layer L = {v}. Distances are directed hop counts.
struct FlowLayers {
    std::vector<std::vector<EntityId>> layers;  // L + 1 sorted sets

    int depth() const noexcept { return static_cast<int>(layers.size()) - 1; }
    bool contains(int layer, EntityId e) const;
};

// Breadth-first hop distances from `source` along out-edges (or along in-edges
// when `reverse`), truncated at max_depth. Unreached entities hold kUnreached.
std::vector<int> bfs_distances(const KnowledgeGraph& graph, EntityId source, int max_depth, bool reverse);

FlowLayers flow_layers(const KnowledgeGraph& graph, EntityId u, EntityId v, int depth);

// Nodes that carry signal from u to v in exactly `depth` steps: layer l holds
// every e with a walk of length l from u to e and a walk of length depth - l
// from e to v. Walks may revisit nodes. All layers are empty when no walk of
// length `depth` exists.
FlowLayers walk_layers(const KnowledgeGraph& graph, EntityId u, EntityId v, int depth);

}  // namespace casekg::kg

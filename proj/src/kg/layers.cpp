#include "casekg/kg/layers.hpp"

#include <algorithm>
#include <deque>

#include "casekg/error.hpp"

namespace casekg::kg {

bool FlowLayers::contains(int layer, EntityId e) const {
    if (layer < 0 || layer >= static_cast<int>(layers.size())) return false;
    const auto& set = layers[static_cast<std::size_t>(layer)];
    return std::binary_search(set.begin(), set.end(), e);
}

std::vector<int> bfs_distances(const KnowledgeGraph& graph, EntityId source, int max_depth, bool reverse) {
    if (!graph.contains(source)) throw NotFoundError("entity not in graph: " + std::to_string(source));
    std::vector<int> dist(graph.entity_count(), kUnreached);
    std::deque<EntityId> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const EntityId e = queue.front();
        queue.pop_front();
        if (dist[e] >= max_depth) continue;
        for (const auto& edge : reverse ? graph.in_edges(e) : graph.out_edges(e)) {
            if (dist[edge.node] == kUnreached) {
                dist[edge.node] = dist[e] + 1;
                queue.push_back(edge.node);
            }
        }
    }
    return dist;
}

namespace {

void check_query(const KnowledgeGraph& graph, EntityId u, EntityId v, int depth) {
    if (depth < 1) throw Error("path depth must be at least 1");
    if (!graph.contains(u)) throw NotFoundError("entity not in graph: " + std::to_string(u));
    if (!graph.contains(v)) throw NotFoundError("entity not in graph: " + std::to_string(v));
}

}  // namespace

FlowLayers flow_layers(const KnowledgeGraph& graph, EntityId u, EntityId v, int depth) {
    check_query(graph, u, v, depth);
    const auto from_u = bfs_distances(graph, u, depth, false);
    const auto to_v = bfs_distances(graph, v, depth, true);
    FlowLayers out;
    out.layers.resize(static_cast<std::size_t>(depth) + 1);
    out.layers.front() = {u};
    out.layers.back() = {v};
    for (EntityId e = 0; e < graph.entity_count(); ++e) {
        const int l = from_u[e];
        if (l > 0 && l < depth && to_v[e] == depth - l) out.layers[static_cast<std::size_t>(l)].push_back(e);
    }
    return out;
}

FlowLayers walk_layers(const KnowledgeGraph& graph, EntityId u, EntityId v, int depth) {
    check_query(graph, u, v, depth);
    const auto steps = static_cast<std::size_t>(depth);

    // forward[l][e]: some walk of length l reaches e from u.
    std::vector<std::vector<char>> forward(steps + 1, std::vector<char>(graph.entity_count(), 0));
    std::vector<std::vector<char>> backward(steps + 1, std::vector<char>(graph.entity_count(), 0));
    std::vector<EntityId> frontier{u};
    forward[0][u] = 1;
    for (std::size_t l = 1; l <= steps; ++l) {
        std::vector<EntityId> next;
        for (EntityId e : frontier) {
            for (const auto& edge : graph.out_edges(e)) {
                if (!forward[l][edge.node]) {
                    forward[l][edge.node] = 1;
                    next.push_back(edge.node);
                }
            }
        }
        frontier = std::move(next);
    }
    frontier = {v};
    backward[0][v] = 1;
    for (std::size_t l = 1; l <= steps; ++l) {
        std::vector<EntityId> next;
        for (EntityId e : frontier) {
            for (const auto& edge : graph.in_edges(e)) {
                if (!backward[l][edge.node]) {
                    backward[l][edge.node] = 1;
                    next.push_back(edge.node);
                }
            }
        }
        frontier = std::move(next);
    }

    FlowLayers out;
    out.layers.resize(steps + 1);
    if (!forward[steps][v]) return out;
    for (std::size_t l = 0; l <= steps; ++l) {
        for (EntityId e = 0; e < graph.entity_count(); ++e) {
            if (forward[l][e] && backward[steps - l][e]) out.layers[l].push_back(e);
        }
    }
    return out;
}

}  // namespace casekg::kg

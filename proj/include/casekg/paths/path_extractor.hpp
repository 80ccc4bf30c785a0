#pragma once

#include <span>
#include <string>
#include <vector>

#include "casekg/gnn/params.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::paths {

// Length-L relational path u = e_0 -> e_1 -> ... -> e_L = v.
struct RelPath {
    std::vector<kg::Triple> steps;
    double score = 0.0;  // sum of per-step attention weights

    double average() const { return steps.empty() ? 0.0 : score / static_cast<double>(steps.size()); }
    bool operator==(const RelPath&) const = default;
};

// Beam search for the top-`beam` paths of exactly `depth` steps from u to v.
// Step l must land in flow layer l (hop distance l from u, depth - l to v) and
// adds attention_weight(relation, l) to the score. The beam holds whole path
// prefixes, ranked by score descending, then by the entity sequence, then by
// the relation sequence. Prefixes that cannot reach v are never admitted, so
// a beam at least as wide as the number of paths returns all of them.
std::vector<RelPath> extract_paths(const gnn::GnnParams& params, const kg::KnowledgeGraph& graph, kg::EntityId u,
                                   kg::EntityId v, std::span<const double> f_u, std::span<const double> f_v,
                                   int depth, int beam);

// Ranking used by extract_paths: true when a sorts before b.
bool path_before(const RelPath& a, const RelPath& b);

// "Name --rel--> Name --rel--> Name"; inverse relations print as rel⁻¹.
std::string render_path(const RelPath& path, const kg::KnowledgeGraph& graph);

}  // namespace casekg::paths

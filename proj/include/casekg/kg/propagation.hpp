#pragma once

#include <span>
#include <vector>

#include "casekg/kg/dataset.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::kg {

// Graph used for message passing and path search: KG triples plus one
// interaction triple per (train pair, label), closed under inverses.
// Entities are the full registry so drugs absent from the KG still have ids.
// Interaction relation for label i is vocabulary id |KG relations| + i.
KnowledgeGraph merge_for_propagation(const KnowledgeGraph& kg, const DdiDataset& dataset,
                                     std::span<const std::size_t> train_pairs, const EntityRegistry& registry);

}  // namespace casekg::kg

#include "casekg/kg/propagation.hpp"

namespace casekg::kg {

KnowledgeGraph merge_for_propagation(const KnowledgeGraph& kg, const DdiDataset& dataset,
                                     std::span<const std::size_t> train_pairs, const EntityRegistry& registry) {
    if (registry.size() < kg.entity_count()) throw Error("registry does not cover the knowledge graph");

    RelationVocab base;
    for (RelationId r = 0; r < kg.relation_count(); ++r) {
        const auto& info = kg.relations().info(r);
        if (info.inverse) throw Error("knowledge graph is already merged");
        base.add(info.name, info.kind, info.label);
    }
    for (LabelId l = 0; l < dataset.relation_count(); ++l) {
        base.add(dataset.relation_names()[l], RelationKind::interaction, l);
    }
    RelationVocab vocab = base.with_inverses();

    std::vector<Triple> triples;
    triples.reserve(2 * (kg.triple_count() + train_pairs.size()));
    for (const auto& t : kg.triples()) {
        triples.push_back(t);
        triples.push_back(Triple{t.tail, vocab.inverse(t.relation), t.head});
    }
    for (std::size_t index : train_pairs) {
        const auto p = dataset.pair(index);
        for (LabelId l : dataset.labels(index)) {
            const RelationId r = vocab.interaction_relation(l);
            triples.push_back(Triple{p.u, r, p.v});
            triples.push_back(Triple{p.v, vocab.inverse(r), p.u});
        }
    }
    return KnowledgeGraph(registry.snapshot(), std::move(vocab), std::move(triples));
}

}  // namespace casekg::kg

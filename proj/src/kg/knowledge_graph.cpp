#include "casekg/kg/knowledge_graph.hpp"

#include <algorithm>
#include <fstream>

#include "casekg/error.hpp"
#include "casekg/text.hpp"

namespace casekg::kg {

EntityId EntityRegistry::intern(std::string_view name) {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    const auto id = static_cast<EntityId>(names_.size());
    names_.emplace_back(name);
    kinds_.push_back(EntityKind::other);
    index_.emplace(names_.back(), id);
    return id;
}

std::optional<EntityId> EntityRegistry::find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
}

const std::string& EntityRegistry::name(EntityId id) const {
    if (id >= names_.size()) throw NotFoundError("unknown entity id " + std::to_string(id));
    return names_[id];
}

EntityKind EntityRegistry::kind(EntityId id) const {
    if (id >= kinds_.size()) throw NotFoundError("unknown entity id " + std::to_string(id));
    return kinds_[id];
}

void EntityRegistry::mark_drug(EntityId id) {
    if (id >= kinds_.size()) throw NotFoundError("unknown entity id " + std::to_string(id));
    kinds_[id] = EntityKind::drug;
}

std::vector<Entity> EntityRegistry::snapshot() const {
    std::vector<Entity> out;
    out.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
        out.push_back(Entity{static_cast<EntityId>(i), names_[i], kinds_[i]});
    }
    return out;
}

RelationId RelationVocab::add(std::string_view name, RelationKind kind, std::optional<LabelId> label) {
    if (has_inverses_) throw Error("cannot add relations to a vocabulary closed under inverses");
    if (auto existing = find(name, kind)) return *existing;
    const auto id = static_cast<RelationId>(relations_.size());
    relations_.push_back(RelationInfo{std::string(name), kind, false, kNoRelation, label});
    if (kind == RelationKind::interaction && label) {
        if (interaction_by_label_.size() <= *label) interaction_by_label_.resize(*label + 1, kNoRelation);
        interaction_by_label_[*label] = id;
    }
    return id;
}

std::optional<RelationId> RelationVocab::find(std::string_view name, RelationKind kind) const {
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        const auto& r = relations_[i];
        if (!r.inverse && r.kind == kind && r.name == name) return static_cast<RelationId>(i);
    }
    return std::nullopt;
}

const RelationInfo& RelationVocab::info(RelationId id) const {
    if (id >= relations_.size()) throw NotFoundError("unknown relation id " + std::to_string(id));
    return relations_[id];
}

RelationId RelationVocab::inverse(RelationId id) const {
    const auto& r = info(id);
    if (r.inverse_id == kNoRelation) throw NotFoundError("relation has no inverse: " + r.name);
    return r.inverse_id;
}

RelationId RelationVocab::interaction_relation(LabelId label) const {
    if (label >= interaction_by_label_.size() || interaction_by_label_[label] == kNoRelation) {
        throw NotFoundError("no interaction relation for label " + std::to_string(label));
    }
    return interaction_by_label_[label];
}

std::string RelationVocab::display_name(RelationId id) const {
    const auto& r = info(id);
    return r.inverse ? r.name + "⁻¹" : r.name;
}

RelationVocab RelationVocab::with_inverses() const {
    if (has_inverses_) return *this;
    RelationVocab out = *this;
    const auto n = static_cast<RelationId>(relations_.size());
    for (RelationId r = 0; r < n; ++r) {
        RelationInfo inv = relations_[r];
        inv.inverse = true;
        inv.inverse_id = r;
        out.relations_[r].inverse_id = r + n;
        out.relations_.push_back(std::move(inv));
    }
    out.has_inverses_ = true;
    return out;
}

KnowledgeGraph::KnowledgeGraph(std::vector<Entity> entities, RelationVocab relations, std::vector<Triple> triples)
    : entities_(std::move(entities)), relations_(std::move(relations)), triples_(std::move(triples)) {
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        if (entities_[i].id != i) throw Error("entity ids must be contiguous from 0");
        if (!name_index_.emplace(entities_[i].name, entities_[i].id).second) {
            throw Error("duplicate entity name: " + entities_[i].name);
        }
    }
    for (const auto& t : triples_) {
        if (t.head >= entities_.size() || t.tail >= entities_.size()) {
            throw NotFoundError("triple references unknown entity");
        }
        if (t.relation >= relations_.size()) throw NotFoundError("triple references unknown relation");
    }
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());

    const std::size_t n = entities_.size();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const auto& t : triples_) {
        ++out_offsets_[t.head + 1];
        ++in_offsets_[t.tail + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        out_offsets_[i + 1] += out_offsets_[i];
        in_offsets_[i + 1] += in_offsets_[i];
    }
    out_edges_.resize(triples_.size());
    in_edges_.resize(triples_.size());
    std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (const auto& t : triples_) {
        out_edges_[out_fill[t.head]++] = Edge{t.relation, t.tail};
        in_edges_[in_fill[t.tail]++] = Edge{t.relation, t.head};
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(in_edges_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[i]),
                  in_edges_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[i + 1]));
    }
}

const Entity& KnowledgeGraph::entity(EntityId id) const {
    if (id >= entities_.size()) throw NotFoundError("unknown entity id " + std::to_string(id));
    return entities_[id];
}

std::span<const Edge> KnowledgeGraph::out_edges(EntityId e) const {
    if (e >= entities_.size()) throw NotFoundError("unknown entity id " + std::to_string(e));
    return std::span<const Edge>(out_edges_).subspan(out_offsets_[e], out_offsets_[e + 1] - out_offsets_[e]);
}

std::span<const Edge> KnowledgeGraph::in_edges(EntityId e) const {
    if (e >= entities_.size()) throw NotFoundError("unknown entity id " + std::to_string(e));
    return std::span<const Edge>(in_edges_).subspan(in_offsets_[e], in_offsets_[e + 1] - in_offsets_[e]);
}

bool KnowledgeGraph::has_triple(const Triple& t) const {
    return std::binary_search(triples_.begin(), triples_.end(), t);
}

std::optional<EntityId> KnowledgeGraph::find(std::string_view name) const {
    if (auto it = name_index_.find(std::string(name)); it != name_index_.end()) return it->second;
    return std::nullopt;
}

KnowledgeGraph load_triples(const std::string& path, EntityRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open triple file: " + path);

    RelationVocab relations;
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 3) {
            throw ParseError(path, line_no, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
        }
        if (cols[0].empty() || cols[1].empty() || cols[2].empty()) {
            throw ParseError(path, line_no, "empty column");
        }
        const EntityId head = registry.intern(cols[0]);
        const RelationId rel = relations.add(cols[1], RelationKind::knowledge);
        const EntityId tail = registry.intern(cols[2]);
        triples.push_back(Triple{head, rel, tail});
    }
    return KnowledgeGraph(registry.snapshot(), std::move(relations), std::move(triples));
}

}  // namespace casekg::kg

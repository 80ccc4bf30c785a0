#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace casekg::kg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using LabelId = std::uint32_t;

inline constexpr RelationId kNoRelation = std::numeric_limits<RelationId>::max();

enum class EntityKind : std::uint8_t { drug, other };

struct Entity {
    EntityId id = 0;
    std::string name;
    EntityKind kind = EntityKind::other;

    bool operator==(const Entity&) const = default;
};

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    auto operator<=>(const Triple&) const = default;
};

// Adjacency entry. `node` is the tail for out-edges and the head for in-edges.
struct Edge {
    RelationId relation = 0;
    EntityId node = 0;

    auto operator<=>(const Edge&) const = default;
};

// Name -> dense id map shared by every file loaded into one workspace.
// Ids are handed out in first-seen order.
class EntityRegistry {
public:
    EntityId intern(std::string_view name);
    std::optional<EntityId> find(std::string_view name) const;

    const std::string& name(EntityId id) const;
    EntityKind kind(EntityId id) const;
    void mark_drug(EntityId id);

    std::size_t size() const noexcept { return names_.size(); }
    std::vector<Entity> snapshot() const;

private:
    std::vector<std::string> names_;
    std::vector<EntityKind> kinds_;
    std::unordered_map<std::string, EntityId> index_;
};

enum class RelationKind : std::uint8_t { knowledge, interaction };

struct RelationInfo {
    std::string name;
    RelationKind kind = RelationKind::knowledge;
    bool inverse = false;
    RelationId inverse_id = kNoRelation;
    // Interaction label index for interaction relations (forward and inverse).
    std::optional<LabelId> label;

    bool operator==(const RelationInfo&) const = default;
};

class RelationVocab {
public:
    RelationId add(std::string_view name, RelationKind kind, std::optional<LabelId> label = std::nullopt);

    // Forward (non-inverse) relation with this name and kind.
    std::optional<RelationId> find(std::string_view name, RelationKind kind = RelationKind::knowledge) const;

    const RelationInfo& info(RelationId id) const;
    std::size_t size() const noexcept { return relations_.size(); }

    bool has_inverses() const noexcept { return has_inverses_; }
    RelationId inverse(RelationId id) const;

    // Forward relation carrying interaction label `label`.
    RelationId interaction_relation(LabelId label) const;

    // Display form; inverse relations get a superscript -1 suffix.
    std::string display_name(RelationId id) const;

    // Copy with a synthesized inverse appended for every relation: inv(r) = r + n.
    RelationVocab with_inverses() const;

    bool operator==(const RelationVocab& other) const { return relations_ == other.relations_; }

private:
    std::vector<RelationInfo> relations_;
    std::vector<RelationId> interaction_by_label_;
    bool has_inverses_ = false;
};

// Immutable multigraph of deduplicated triples with CSR out- and in-adjacency.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::vector<Entity> entities, RelationVocab relations, std::vector<Triple> triples);

    std::size_t entity_count() const noexcept { return entities_.size(); }
    std::size_t relation_count() const noexcept { return relations_.size(); }
    std::size_t triple_count() const noexcept { return triples_.size(); }

    const std::vector<Entity>& entities() const noexcept { return entities_; }
    const Entity& entity(EntityId id) const;
    const RelationVocab& relations() const noexcept { return relations_; }

    // Sorted by (head, relation, tail).
    std::span<const Triple> triples() const noexcept { return triples_; }

    // Sorted by (relation, tail).
    std::span<const Edge> out_edges(EntityId e) const;
    // Sorted by (relation, head).
    std::span<const Edge> in_edges(EntityId e) const;

    bool contains(EntityId e) const noexcept { return e < entities_.size(); }
    bool has_triple(const Triple& t) const;
    std::optional<EntityId> find(std::string_view name) const;

    bool operator==(const KnowledgeGraph& other) const {
        return entities_ == other.entities_ && relations_ == other.relations_ && triples_ == other.triples_;
    }

private:
    std::vector<Entity> entities_;
    RelationVocab relations_;
    std::vector<Triple> triples_;
    std::vector<std::size_t> out_offsets_;
    std::vector<Edge> out_edges_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Edge> in_edges_;
    std::unordered_map<std::string, EntityId> name_index_;
};

// Reads `head<TAB>relation<TAB>tail` lines; `#` lines and blank lines are skipped.
KnowledgeGraph load_triples(const std::string& path, EntityRegistry& registry);

}  // namespace casekg::kg

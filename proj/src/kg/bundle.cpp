#include "casekg/kg/bundle.hpp"

#include <array>
#include <cstdint>
#include <fstream>

namespace casekg::kg {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'K', 'G', 'B'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t x) { out_.put(static_cast<char>(x)); }
    void u32(std::uint32_t x) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(x >> (8 * i)));
    }
    void u64(std::uint64_t x) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(x >> (8 * i)));
    }
    void str(const std::string& s) {
        u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    std::uint8_t u8() {
        const int c = in_.get();
        if (c == std::char_traits<char>::eof()) throw Error("bundle " + path_ + ": unexpected end of file");
        return static_cast<std::uint8_t>(c);
    }
    std::uint32_t u32() {
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return x;
    }
    std::uint64_t u64() {
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return x;
    }
    std::string str() {
        const auto n = u64();
        if (n > (1ull << 32)) throw Error("bundle " + path_ + ": corrupt string length");
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        if (static_cast<std::uint64_t>(in_.gcount()) != n) throw Error("bundle " + path_ + ": unexpected end of file");
        return s;
    }

private:
    std::istream& in_;
    std::string path_;
};

}  // namespace

void save_bundle(const Workspace& ws, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write bundle: " + path);
    out.write(kMagic.data(), kMagic.size());
    Writer w(out);
    w.u32(kVersion);

    const auto entities = ws.registry.snapshot();
    w.u64(entities.size());
    for (const auto& e : entities) {
        w.str(e.name);
        w.u8(e.kind == EntityKind::drug ? 1 : 0);
    }

    w.u64(ws.kg.entity_count());
    w.u64(ws.kg.relation_count());
    for (RelationId r = 0; r < ws.kg.relation_count(); ++r) w.str(ws.kg.relations().info(r).name);
    w.u64(ws.kg.triple_count());
    for (const auto& t : ws.kg.triples()) {
        w.u32(t.head);
        w.u32(t.relation);
        w.u32(t.tail);
    }

    const auto& ds = ws.dataset;
    w.u8(ds.mode() == TaskMode::multiclass ? 0 : 1);
    w.u64(ds.relation_count());
    for (const auto& name : ds.relation_names()) w.str(name);
    w.u64(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = ds.pair(i);
        w.u32(p.u);
        w.u32(p.v);
        const auto& labels = ds.labels(i);
        w.u32(static_cast<std::uint32_t>(labels.size()));
        for (LabelId l : labels) w.u32(l);
    }
    if (!out) throw Error("write failed: " + path);
}

Workspace load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open bundle: " + path);
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (magic != kMagic) throw Error("not a bundle file: " + path);
    Reader r(in, path);
    if (const auto version = r.u32(); version != kVersion) {
        throw Error("bundle " + path + ": unsupported version " + std::to_string(version));
    }

    Workspace ws;
    const auto n_entities = r.u64();
    for (std::uint64_t i = 0; i < n_entities; ++i) {
        const EntityId id = ws.registry.intern(r.str());
        if (r.u8() == 1) ws.registry.mark_drug(id);
    }

    const auto kg_entities = r.u64();
    if (kg_entities > n_entities) throw Error("bundle " + path + ": KG entity count exceeds registry");
    RelationVocab relations;
    const auto n_relations = r.u64();
    for (std::uint64_t i = 0; i < n_relations; ++i) relations.add(r.str(), RelationKind::knowledge);
    const auto n_triples = r.u64();
    std::vector<Triple> triples;
    triples.reserve(n_triples);
    for (std::uint64_t i = 0; i < n_triples; ++i) {
        Triple t;
        t.head = r.u32();
        t.relation = r.u32();
        t.tail = r.u32();
        triples.push_back(t);
    }
    auto entities = ws.registry.snapshot();
    entities.resize(kg_entities);
    ws.kg = KnowledgeGraph(std::move(entities), std::move(relations), std::move(triples));

    const TaskMode mode = r.u8() == 0 ? TaskMode::multiclass : TaskMode::multilabel;
    std::vector<std::string> names(r.u64());
    for (auto& n : names) n = r.str();
    ws.dataset = DdiDataset(mode, std::move(names));
    const auto n_pairs = r.u64();
    for (std::uint64_t i = 0; i < n_pairs; ++i) {
        const EntityId u = r.u32();
        const EntityId v = r.u32();
        std::vector<LabelId> labels(r.u32());
        for (auto& l : labels) l = r.u32();
        ws.dataset.add_pair(u, v, std::move(labels));
    }
    return ws;
}

}  // namespace casekg::kg

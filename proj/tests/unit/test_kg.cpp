#include <algorithm>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>

#include <gtest/gtest.h>

#include "casekg/error.hpp"
#include "casekg/kg/bundle.hpp"
#include "casekg/kg/layers.hpp"
#include "casekg/kg/propagation.hpp"
#include "casekg/kg/splits.hpp"
#include "random_graph.hpp"

using namespace casekg;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("casekg-kg-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" + std::to_string(counter_++))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path_ / name).string();
        std::ofstream(p) << content;
        return p;
    }
    std::string path(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

// Every unordered pair of n drugs d0..d{n-1}, labels cycling over `labels`.
kg::Workspace complete_dataset(int n, int labels) {
    std::string text;
    kg::Workspace ws;
    std::vector<std::string> names;
    for (int l = 0; l < labels; ++l) names.push_back("t" + std::to_string(l));
    ws.dataset = kg::DdiDataset(kg::TaskMode::multiclass, names);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto u = ws.registry.intern("d" + std::to_string(i));
            const auto v = ws.registry.intern("d" + std::to_string(j));
            ws.dataset.add_pair(u, v, {static_cast<kg::LabelId>(k++ % labels)});
        }
    }
    return ws;
}

std::vector<int> bfs(const kg::KnowledgeGraph& g, kg::EntityId s, bool reverse) {
    std::vector<int> d(g.entity_count(), -1);
    std::queue<kg::EntityId> q;
    d[s] = 0;
    q.push(s);
    while (!q.empty()) {
        const auto x = q.front();
        q.pop();
        for (const auto& t : g.triples()) {
            const auto from = reverse ? t.tail : t.head;
            const auto to = reverse ? t.head : t.tail;
            if (from == x && d[to] < 0) {
                d[to] = d[x] + 1;
                q.push(to);
            }
        }
    }
    return d;
}

}  // namespace

TEST(LoadTriples, DeduplicatesAndSkipsComments) {
    TempDir dir;
    const auto path = dir.file("g.tsv", "# header\na\tr\tb\n\na\tr\tb\nb\ts\tc\r\n");
    kg::EntityRegistry reg;
    const auto g = kg::load_triples(path, reg);
    EXPECT_EQ(g.entity_count(), 3u);
    EXPECT_EQ(g.relation_count(), 2u);
    EXPECT_EQ(g.triple_count(), 2u);
    EXPECT_EQ(reg.name(0), "a");
    EXPECT_EQ(reg.name(2), "c");
}

TEST(LoadTriples, EmptyFileGivesEmptyGraph) {
    TempDir dir;
    kg::EntityRegistry reg;
    const auto g = kg::load_triples(dir.file("e.tsv", ""), reg);
    EXPECT_EQ(g.entity_count(), 0u);
    EXPECT_EQ(g.triple_count(), 0u);
}

TEST(LoadTriples, MalformedLineNamesLineNumber) {
    TempDir dir;
    const auto path = dir.file("bad.tsv", "a\tr\tb\n# c\na\tr\n");
    kg::EntityRegistry reg;
    try {
        kg::load_triples(path, reg);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(kg::load_triples(dir.path("missing.tsv"), reg), Error);
}

TEST(LoadTriples, LoadingTwiceIsIdempotent) {
    TempDir dir;
    Rng rng(3);
    std::string text;
    for (int i = 0; i < 300; ++i) {
        text += "e" + std::to_string(rng.uniform_index(40)) + "\tr" + std::to_string(rng.uniform_index(5)) + "\te" +
                std::to_string(rng.uniform_index(40)) + "\n";
    }
    const auto path = dir.file("g.tsv", text);
    kg::EntityRegistry a, b;
    EXPECT_EQ(kg::load_triples(path, a), kg::load_triples(path, b));
}

TEST(LoadDataset, SingleLineAndModes) {
    TempDir dir;
    kg::EntityRegistry reg;
    const auto one = kg::load_ddi_dataset(dir.file("one.tsv", "a\tb\tr0\n"), kg::TaskMode::multiclass, reg);
    EXPECT_EQ(one.size(), 1u);
    EXPECT_EQ(one.labels(0), std::vector<kg::LabelId>{0});
    EXPECT_EQ(reg.kind(*reg.find("a")), kg::EntityKind::drug);

    const auto multi = dir.file("multi.tsv", "a\tb\tr0,r3\n");
    EXPECT_THROW(kg::load_ddi_dataset(multi, kg::TaskMode::multiclass, reg), Error);
    const auto ml = kg::load_ddi_dataset(multi, kg::TaskMode::multilabel, reg);
    EXPECT_EQ(ml.labels(0).size(), 2u);

    const std::vector<std::string> vocab{"r0", "r1"};
    EXPECT_THROW(kg::load_ddi_dataset(multi, kg::TaskMode::multilabel, reg, &vocab), Error);
}

TEST(LoadDataset, SealBlocksLabelReads) {
    kg::Workspace ws = complete_dataset(4, 2);
    {
        kg::DdiDataset::Seal seal(ws.dataset, 2);
        EXPECT_THROW(ws.dataset.labels(2), kg::LabelLeakError);
        EXPECT_NO_THROW(ws.dataset.labels(1));
    }
    EXPECT_NO_THROW(ws.dataset.labels(2));
}

TEST(Splits, TenDrugsTwoEmerging) {
    const auto ws = complete_dataset(10, 3);
    const auto s = kg::make_splits(ws.dataset, 0.2, 7);
    ASSERT_EQ(s.emerging_drugs.size(), 2u);
    kg::validate_splits(s, ws.dataset);
    std::vector<std::size_t> s2 = s.valid_s2;
    s2.insert(s2.end(), s.test_s2.begin(), s.test_s2.end());
    ASSERT_EQ(s2.size(), 1u);
    const auto p = ws.dataset.pair(s2[0]);
    EXPECT_TRUE(s.is_emerging(p.u) && s.is_emerging(p.v));
    EXPECT_EQ(s.valid_s1.size() + s.test_s1.size(), 16u);
    EXPECT_EQ(s.train.size(), 28u);
    EXPECT_EQ(s, kg::make_splits(ws.dataset, 0.2, 7));
}

TEST(Splits, NearlyAllEmerging) {
    const auto ws = complete_dataset(10, 3);
    const auto s = kg::make_splits(ws.dataset, 0.99, 1);
    kg::validate_splits(s, ws.dataset);
    EXPECT_EQ(s.emerging_drugs.size(), 9u);
    EXPECT_TRUE(s.train.empty());
    EXPECT_EQ(s.valid_s2.size() + s.test_s2.size(), 36u);
    EXPECT_THROW(kg::make_splits(ws.dataset, 0.05, 1), Error);
}

TEST(Splits, SoundnessOnRandomDatasets) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        kg::Workspace ws;
        ws.dataset = kg::DdiDataset(kg::TaskMode::multiclass, {"x", "y"});
        for (int i = 0; i < 80; ++i) {
            const auto a = rng.uniform_index(30), b = rng.uniform_index(30);
            if (a == b) continue;
            ws.dataset.add_pair(ws.registry.intern("d" + std::to_string(a)), ws.registry.intern("d" + std::to_string(b)),
                                {static_cast<kg::LabelId>(rng.uniform_index(2))});
        }
        const auto s = kg::make_splits(ws.dataset, 0.3, seed, 0.2);
        EXPECT_NO_THROW(kg::validate_splits(s, ws.dataset));
        for (const auto i : s.train) {
            const auto p = ws.dataset.pair(i);
            EXPECT_FALSE(s.is_emerging(p.u) || s.is_emerging(p.v));
        }
    }
}

TEST(Splits, FileRoundTrip) {
    TempDir dir;
    const auto ws = complete_dataset(8, 2);
    const auto s = kg::make_splits(ws.dataset, 0.25, 4, 0.3);
    kg::save_splits(s, dir.path("s.json"));
    EXPECT_EQ(kg::load_splits(dir.path("s.json"), ws.registry), s);
}

TEST(Merge, InverseDoublingCounts) {
    TempDir dir;
    kg::Workspace ws;
    ws.kg = kg::load_triples(dir.file("g.tsv", "a\tr\tb\nb\tr\tc\nc\ts\td\nd\ts\ta\na\ts\tc\n"), ws.registry);
    ws.dataset = kg::load_ddi_dataset(dir.file("d.tsv", "a\tb\tx\nb\tc\ty\nc\td\tx\na\td\ty\n"),
                                      kg::TaskMode::multiclass, ws.registry);
    const std::vector<std::size_t> train{0, 1, 2};
    const auto merged = kg::merge_for_propagation(ws.kg, ws.dataset, train, ws.registry);
    EXPECT_EQ(merged.triple_count(), 16u);
    EXPECT_EQ(kg::merge_for_propagation(ws.kg, ws.dataset, {}, ws.registry).triple_count(), 10u);

    // Inverse closure and involution.
    const auto& rel = merged.relations();
    for (const auto& t : merged.triples()) {
        EXPECT_TRUE(merged.has_triple({t.tail, rel.inverse(t.relation), t.head}));
        EXPECT_EQ(rel.inverse(rel.inverse(t.relation)), t.relation);
    }
    // The held-out pair (a, d) contributes no edge in either direction.
    const auto a = *ws.registry.find("a"), d = *ws.registry.find("d");
    for (const auto& t : merged.triples()) {
        if (rel.info(t.relation).kind != kg::RelationKind::interaction) continue;
        EXPECT_FALSE((t.head == a && t.tail == d) || (t.head == d && t.tail == a));
    }
}

TEST(Merge, NoHeldOutEdgesOnRandomSplits) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ws = complete_dataset(12, 3);
        const auto s = kg::make_splits(ws.dataset, 0.25, seed, 0.2);
        const auto merged = kg::merge_for_propagation(ws.kg, ws.dataset, s.train, ws.registry);
        std::set<std::pair<kg::EntityId, kg::EntityId>> train_pairs;
        for (const auto i : s.train) {
            const auto p = ws.dataset.pair(i);
            train_pairs.insert({std::min(p.u, p.v), std::max(p.u, p.v)});
        }
        for (const auto& t : merged.triples()) {
            EXPECT_TRUE(train_pairs.count({std::min(t.head, t.tail), std::max(t.head, t.tail)}));
        }
        EXPECT_EQ(merged.triple_count(), 2 * s.train.size());
    }
}

TEST(FlowLayers, ChainAndDisconnected) {
    kg::RelationVocab vocab;
    vocab.add("r", kg::RelationKind::knowledge);
    std::vector<kg::Entity> ents{{0, "u", kg::EntityKind::drug}, {1, "a", kg::EntityKind::other},
                                 {2, "v", kg::EntityKind::drug}, {3, "w", kg::EntityKind::drug}};
    const kg::KnowledgeGraph g(ents, vocab, {{0, 0, 1}, {1, 0, 2}});
    const auto fl = kg::flow_layers(g, 0, 2, 2);
    ASSERT_EQ(fl.depth(), 2);
    EXPECT_EQ(fl.layers[1], std::vector<kg::EntityId>{1});
    const auto none = kg::flow_layers(g, 0, 3, 3);
    for (int l = 1; l < 3; ++l) EXPECT_TRUE(none.layers[l].empty());
    EXPECT_THROW(kg::flow_layers(g, 0, 9, 2), Error);
}

TEST(FlowLayers, MatchesBruteForceBfs) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        casekg::testing::RandomGraphSpec spec;
        spec.nodes = 50;
        spec.edges = 100;
        spec.inverses = seed % 2 == 0;
        const auto g = casekg::testing::random_graph(spec, rng);
        for (int trial = 0; trial < 5; ++trial) {
            const auto u = static_cast<kg::EntityId>(rng.uniform_index(50));
            const auto v = static_cast<kg::EntityId>(rng.uniform_index(50));
            const int depth = 1 + static_cast<int>(rng.uniform_index(3));
            const auto from_u = bfs(g, u, false);
            const auto to_v = bfs(g, v, true);
            const auto fl = kg::flow_layers(g, u, v, depth);
            for (int l = 1; l < depth; ++l) {
                std::vector<kg::EntityId> expect;
                for (kg::EntityId e = 0; e < g.entity_count(); ++e) {
                    if (from_u[e] == l && to_v[e] == depth - l) expect.push_back(e);
                }
                EXPECT_EQ(fl.layers[l], expect) << "seed " << seed << " layer " << l;
            }
        }
    }
}

TEST(Bundle, RoundTrip) {
    TempDir dir;
    kg::Workspace ws;
    ws.kg = kg::load_triples(dir.file("g.tsv", "a\tr\tb\nb\ts\tgene\n"), ws.registry);
    ws.dataset = kg::load_ddi_dataset(dir.file("d.tsv", "a\tb\tx\nb\tc\ty,x\n"), kg::TaskMode::multilabel, ws.registry);
    kg::save_bundle(ws, dir.path("w.ckgb"));
    const auto back = kg::load_bundle(dir.path("w.ckgb"));
    // Entity kinds are refreshed from the registry on load, so compare structure.
    EXPECT_EQ(back.kg.entity_count(), ws.kg.entity_count());
    EXPECT_EQ(back.kg.relations(), ws.kg.relations());
    EXPECT_TRUE(std::ranges::equal(back.kg.triples(), ws.kg.triples()));
    EXPECT_EQ(back.registry.snapshot(), ws.registry.snapshot());
    ASSERT_EQ(back.dataset.size(), ws.dataset.size());
    EXPECT_EQ(back.dataset.relation_names(), ws.dataset.relation_names());
    EXPECT_EQ(back.dataset.mode(), kg::TaskMode::multilabel);
    for (std::size_t i = 0; i < ws.dataset.size(); ++i) EXPECT_EQ(back.dataset.labels(i), ws.dataset.labels(i));

    std::ofstream(dir.path("junk.ckgb")) << "nope";
    EXPECT_THROW(kg::load_bundle(dir.path("junk.ckgb")), Error);
}

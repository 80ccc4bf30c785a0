#include <cmath>

#include <gtest/gtest.h>

#include "casekg/error.hpp"
#include "casekg/kg/layers.hpp"
#include "casekg/paths/path_extractor.hpp"
#include "path_oracle.hpp"
#include "random_graph.hpp"

using namespace casekg;
using casekg::testing::random_graph;
using casekg::testing::random_vector;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// u -r1-> a -r1-> v and u -r2-> b -r2-> v, attention fixed through the bias
// trick: f = (1, 0) so the first attention column is the logit.
struct Diamond {
    kg::KnowledgeGraph graph;
    gnn::GnnParams params;
    std::vector<double> f{1.0, 0.0};
};

Diamond diamond(double a1, double a2) {
    kg::RelationVocab vocab;
    vocab.add("r1", kg::RelationKind::knowledge);
    vocab.add("r2", kg::RelationKind::knowledge);
    std::vector<kg::Entity> ents{{0, "u", kg::EntityKind::drug},
                                 {1, "a", kg::EntityKind::other},
                                 {2, "b", kg::EntityKind::other},
                                 {3, "v", kg::EntityKind::drug}};
    Diamond d;
    d.graph = kg::KnowledgeGraph(ents, vocab, {{0, 0, 1}, {1, 0, 3}, {0, 1, 2}, {2, 1, 3}});
    d.params = gnn::GnnParams::zeros({2, 2, 2, 2, 1});
    for (auto& w : d.params.attention) {
        w(0, 0) = logit(a1);
        w(1, 0) = logit(a2);
    }
    return d;
}

}  // namespace

TEST(AttentionWeight, Sigmoid) {
    const auto d = diamond(0.9, 0.2);
    auto p = gnn::GnnParams::zeros({2, 2, 2, 2, 1});
    EXPECT_EQ(gnn::attention_weight(p, 0, 1, d.f, d.f), 0.5);
    p.attention[0](0, 0) = 800.0;
    EXPECT_EQ(gnn::attention_weight(p, 0, 1, d.f, d.f), 1.0);
    EXPECT_THROW(gnn::attention_weight(p, 0, 3, d.f, d.f), Error);

    Rng rng(1);
    const auto q = gnn::GnnParams::initialize({2, 2, 3, 4, 1}, gnn::Activation::relu, 3);
    const auto fu = random_vector(3, rng), fv = random_vector(3, rng);
    for (int r = 0; r < 4; ++r) {
        double z = 0.0;
        for (int k = 0; k < 3; ++k) z += q.attention[1](r, k) * fu[k] + q.attention[1](r, 3 + k) * fv[k];
        EXPECT_NEAR(gnn::attention_weight(q, static_cast<kg::RelationId>(r), 2, fu, fv), 1.0 / (1.0 + std::exp(-z)),
                    1e-12);
    }
}

TEST(ExtractPaths, DiamondBeamOfOne) {
    const auto d = diamond(0.9, 0.2);
    const auto paths = paths::extract_paths(d.params, d.graph, 0, 3, d.f, d.f, 2, 1);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0].steps[0].tail, 1u);
    EXPECT_NEAR(paths[0].score, 1.8, 1e-12);
    EXPECT_NEAR(paths[0].average(), 0.9, 1e-12);

    const auto both = paths::extract_paths(d.params, d.graph, 0, 3, d.f, d.f, 2, 5);
    ASSERT_EQ(both.size(), 2u);
    EXPECT_EQ(both[1].steps[0].tail, 2u);
    EXPECT_NEAR(both[1].score, 0.4, 1e-12);
}

TEST(ExtractPaths, DisconnectedAndErrors) {
    const auto d = diamond(0.9, 0.2);
    EXPECT_TRUE(paths::extract_paths(d.params, d.graph, 3, 0, d.f, d.f, 2, 5).empty());
    EXPECT_TRUE(paths::extract_paths(d.params, d.graph, 0, 3, d.f, d.f, 1, 5).empty());
    EXPECT_THROW(paths::extract_paths(d.params, d.graph, 0, 9, d.f, d.f, 2, 5), NotFoundError);
    EXPECT_THROW(paths::extract_paths(d.params, d.graph, 0, 3, d.f, d.f, 2, 0), Error);
    EXPECT_THROW(paths::extract_paths(d.params, d.graph, 0, 3, d.f, d.f, 3, 5), Error);
}

TEST(ExtractPaths, FourPathsMatchEnumeration) {
    kg::RelationVocab vocab;
    vocab.add("p", kg::RelationKind::knowledge);
    vocab.add("q", kg::RelationKind::knowledge);
    std::vector<kg::Entity> ents;
    for (int i = 0; i < 4; ++i) ents.push_back({static_cast<kg::EntityId>(i), "e" + std::to_string(i)});
    // u=0, v=3; middles 1 and 2, each reachable by two relations on the first hop.
    const kg::KnowledgeGraph g(ents, vocab, {{0, 0, 1}, {0, 1, 1}, {0, 0, 2}, {0, 1, 2}, {1, 0, 3}, {2, 1, 3}});
    const auto p = gnn::GnnParams::initialize({2, 2, 2, 2, 1}, gnn::Activation::relu, 4);
    const std::vector<double> fu{0.3, -1.0}, fv{1.5, 0.2};
    const auto got = paths::extract_paths(p, g, 0, 3, fu, fv, 2, 50);
    const auto want = casekg::testing::enumerate_paths(p, g, 0, 3, fu, fv, 2);
    ASSERT_EQ(want.size(), 4u);
    EXPECT_EQ(got, want);
}

TEST(ExtractPaths, RandomGraphsAgainstOracle) {
    Rng rng(77);
    int nonempty = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto g = random_graph({15, 3, 1, 35, trial % 3 != 0}, rng);
        const int L = 1 + static_cast<int>(rng.uniform_index(3));
        const auto p = gnn::GnnParams::initialize({3, 2, 3, static_cast<int>(g.relation_count()), 1},
                                                  gnn::Activation::relu, static_cast<std::uint64_t>(trial));
        const auto fu = random_vector(3, rng), fv = random_vector(3, rng);
        const auto u = static_cast<kg::EntityId>(rng.uniform_index(15));
        const auto v = static_cast<kg::EntityId>((u + 1 + rng.uniform_index(14)) % 15);
        const auto want = casekg::testing::enumerate_paths(p, g, u, v, fu, fv, L);
        const int beam = std::max<int>(1, static_cast<int>(want.size()));
        const auto got = paths::extract_paths(p, g, u, v, fu, fv, L, beam);
        ASSERT_EQ(got, want) << "trial " << trial;
        nonempty += !got.empty();

        const auto flow = kg::flow_layers(g, u, v, L);
        for (const auto& path : got) {
            double s = 0.0;
            for (std::size_t i = 0; i < path.steps.size(); ++i) {
                EXPECT_TRUE(flow.contains(static_cast<int>(i) + 1, path.steps[i].tail));
                if (i > 0) EXPECT_EQ(path.steps[i].head, path.steps[i - 1].tail);
                const auto& w = p.attention[i];
                double z = 0.0;
                for (int k = 0; k < 3; ++k) z += w(path.steps[i].relation, k) * fu[k] + w(path.steps[i].relation, 3 + k) * fv[k];
                s += 1.0 / (1.0 + std::exp(-z));
            }
            EXPECT_NEAR(path.score, s, 1e-9);
        }
        // A narrower beam returns a prefix-consistent subset of valid paths.
        if (want.size() > 1) {
            const auto narrow = paths::extract_paths(p, g, u, v, fu, fv, L, 1);
            ASSERT_EQ(narrow.size(), 1u);
            EXPECT_NE(std::find(want.begin(), want.end(), narrow[0]), want.end());
        }
    }
    EXPECT_GT(nonempty, 20);
}

TEST(RenderPath, ArrowFormat) {
    kg::RelationVocab vocab;
    vocab.add("binds", kg::RelationKind::knowledge);
    vocab = vocab.with_inverses();
    std::vector<kg::Entity> ents{{0, "Fosphenytoin", kg::EntityKind::drug},
                                 {1, "CYP3A4", kg::EntityKind::other},
                                 {2, "Diphenhydramine", kg::EntityKind::drug}};
    const kg::KnowledgeGraph g(ents, vocab, {{0, 0, 1}, {1, 1, 2}});
    const paths::RelPath path{{{0, 0, 1}, {1, 1, 2}}, 1.0};
    const auto text = paths::render_path(path, g);
    EXPECT_EQ(text, "Fosphenytoin --binds--> CYP3A4 --binds⁻¹--> Diphenhydramine");
    EXPECT_EQ(paths::render_path(path, g), text);
    EXPECT_EQ(paths::render_path({{{0, 0, 1}}, 0.5}, g), "Fosphenytoin --binds--> CYP3A4");
    EXPECT_THROW(paths::render_path({{{0, 9, 1}}, 0.5}, g), NotFoundError);
    EXPECT_THROW(paths::render_path({{{0, 0, 7}}, 0.5}, g), Error);
}

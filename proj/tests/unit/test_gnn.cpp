#include <cmath>

#include <gtest/gtest.h>

#include "casekg/gnn/encoder.hpp"
#include "casekg/gnn/training.hpp"
#include "dense_encoder.hpp"
#include "random_graph.hpp"

using namespace casekg;
using casekg::testing::dense_encode;
using casekg::testing::random_graph;
using casekg::testing::random_vector;

namespace {

gnn::GnnShape shape_for(const kg::KnowledgeGraph& g, int layers, int hidden, int embed, int labels) {
    return {layers, hidden, embed, static_cast<int>(g.relation_count()), labels};
}

kg::KnowledgeGraph single_edge() {
    kg::RelationVocab vocab;
    vocab.add("binds", kg::RelationKind::knowledge);
    vocab = vocab.with_inverses();
    std::vector<kg::Entity> ents{{0, "u", kg::EntityKind::drug}, {1, "v", kg::EntityKind::drug}};
    return kg::KnowledgeGraph(ents, vocab, {{0, 0, 1}, {1, 1, 0}});
}

}  // namespace

TEST(EncodePair, SingleEdgeOneStep) {
    const auto g = single_edge();
    auto p = gnn::GnnParams::zeros(shape_for(g, 1, 2, 2, 1), gnn::Activation::identity);
    p.weight[0].setIdentity();
    p.relation[0].setOnes();
    p.feat_proj.setIdentity();
    p.attention[0] << 0.5, -0.25, 0.0, 0.0,  // binds
        0.0, 0.0, 1.0, 0.0;                   // binds inverse
    const std::vector<double> fu{1.0, 2.0}, fv{-3.0, 0.5};

    const auto rep = gnn::encode_pair(p, g, 0, 1, fu, fv);
    const double a = 1.0 / (1.0 + std::exp(-(0.5 * 1.0 - 0.25 * 2.0)));
    const double a_inv = 1.0 / (1.0 + std::exp(-(1.0 * -3.0)));
    ASSERT_EQ(rep.dim(), 4u);
    EXPECT_NEAR(rep.values[0], a * 1.0, 1e-15);
    EXPECT_NEAR(rep.values[1], a * 2.0, 1e-15);
    EXPECT_NEAR(rep.values[2], a_inv * -3.0, 1e-15);
    EXPECT_NEAR(rep.values[3], a_inv * 0.5, 1e-15);
    EXPECT_NEAR(gnn::attention_weight(p, 0, 1, fu, fv), a, 1e-15);
}

TEST(EncodePair, UnreachableGivesZero) {
    Rng rng(3);
    kg::RelationVocab vocab;
    vocab.add("r", kg::RelationKind::knowledge);
    std::vector<kg::Entity> ents{{0, "a", kg::EntityKind::drug}, {1, "b", kg::EntityKind::drug},
                                 {2, "c", kg::EntityKind::other}};
    const kg::KnowledgeGraph g(ents, vocab, {{0, 0, 2}});
    const auto p = gnn::GnnParams::initialize(shape_for(g, 2, 4, 3, 2), gnn::Activation::relu, 1);
    const auto rep = gnn::encode_pair(p, g, 0, 1, random_vector(3, rng), random_vector(3, rng));
    EXPECT_TRUE(rep.is_zero());
}

TEST(EncodePair, MatchesDenseReference) {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = random_graph({30, 3, 2, 45, true}, rng);
        const int L = 1 + static_cast<int>(rng.uniform_index(3));
        const auto act = trial % 2 ? gnn::Activation::relu : gnn::Activation::identity;
        const auto p = gnn::GnnParams::initialize(shape_for(g, L, 5, 4, 2), act, 100 + trial);
        const auto fu = random_vector(4, rng), fv = random_vector(4, rng);
        const auto u = static_cast<kg::EntityId>(rng.uniform_index(30));
        auto v = static_cast<kg::EntityId>(rng.uniform_index(29));
        if (v >= u) ++v;
        for (const bool exclude : {false, true}) {
            const auto rep = gnn::encode_pair(p, g, u, v, fu, fv, {exclude});
            const auto ref = dense_encode(p, g, u, v, fu, fv, exclude);
            ASSERT_EQ(rep.values.size(), ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(rep.values[i], ref[i], 1e-9) << trial;
        }
    }
}

TEST(EncodePair, RejectsBadInput) {
    const auto g = single_edge();
    const auto p = gnn::GnnParams::initialize(shape_for(g, 1, 2, 2, 1), gnn::Activation::relu, 0);
    const std::vector<double> f{1.0, 1.0}, short_f{1.0};
    EXPECT_THROW(gnn::encode_pair(p, g, 0, 0, f, f), Error);
    EXPECT_THROW(gnn::encode_pair(p, g, 0, 7, f, f), NotFoundError);
    EXPECT_THROW(gnn::encode_pair(p, g, 0, 1, short_f, f), ShapeError);
}

TEST(ScoreRelations, LinearHead) {
    auto p = gnn::GnnParams::zeros({1, 2, 2, 2, 3});
    p.score_bias << 1.0, 2.0, 3.0;
    const gnn::PairRepresentation zero{{0, 0, 0, 0}};
    const auto z = gnn::score_relations(p, zero);
    EXPECT_EQ(z, p.score_bias);
    const auto top = gnn::candidate_filter(std::span<const double>(z.data(), 3), 1);
    EXPECT_EQ(top, std::vector<kg::LabelId>{2});
    EXPECT_THROW(gnn::score_relations(p, gnn::PairRepresentation{{1.0}}), ShapeError);

    Rng rng(5);
    p = gnn::GnnParams::initialize({1, 3, 2, 2, 4}, gnn::Activation::relu, 9);
    const gnn::PairRepresentation h{random_vector(6, rng)};
    const auto logits = gnn::score_relations(p, h);
    for (int r = 0; r < 4; ++r) {
        double s = p.score_bias(r);
        for (int k = 0; k < 6; ++k) s += p.score_weight(r, k) * h.values[static_cast<std::size_t>(k)];
        EXPECT_NEAR(logits(r), s, 1e-14);
    }
}

TEST(CandidateFilter, OrderAndTies) {
    using V = std::vector<kg::LabelId>;
    EXPECT_EQ(gnn::candidate_filter(std::vector<double>{0.1, 0.9, 0.5}, 2), (V{1, 2}));
    EXPECT_EQ(gnn::candidate_filter(std::vector<double>{0.1, 0.9, 0.5}, 10), (V{1, 2, 0}));
    EXPECT_EQ(gnn::candidate_filter(std::vector<double>{0.5, 0.5, 0.1}, 1), (V{0}));
    EXPECT_THROW(gnn::candidate_filter(std::vector<double>{0.5}, 0), Error);

    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> z(12);
        for (auto& x : z) x = static_cast<double>(rng.uniform_index(4));  // many ties
        std::vector<kg::LabelId> ids(z.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<kg::LabelId>(i);
        std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return z[a] > z[b]; });
        const std::size_t n = 1 + rng.uniform_index(12);
        ids.resize(n);
        EXPECT_EQ(gnn::candidate_filter(z, n), ids);
    }
}

TEST(StructSim, Conventions) {
    const gnn::PairRepresentation a{{1, 0, 0, 0}}, b{{0, 1, 0, 0}}, zero{{0, 0, 0, 0}}, c{{0.3, -2, 5, 1}};
    EXPECT_DOUBLE_EQ(gnn::struct_sim(c, c), 1.0);
    EXPECT_EQ(gnn::struct_sim(zero, c), 0.0);
    EXPECT_EQ(gnn::struct_sim(a, b), 0.0);
    EXPECT_THROW(gnn::struct_sim(a, gnn::PairRepresentation{{1.0}}), ShapeError);
}

namespace {

struct Toy {
    kg::KnowledgeGraph graph;
    gnn::FeatureTable features{3};
    std::vector<gnn::TrainingExample> examples;
};

// Pairs (d_i, d_i') joined through gene g_i by a relation that encodes the label.
Toy separable_toy(int pairs, Rng& rng) {
    kg::RelationVocab vocab;
    vocab.add("up", kg::RelationKind::knowledge);
    vocab.add("down", kg::RelationKind::knowledge);
    vocab = vocab.with_inverses();
    std::vector<kg::Entity> ents;
    std::vector<kg::Triple> triples;
    Toy toy;
    for (int i = 0; i < pairs; ++i) {
        const auto base = static_cast<kg::EntityId>(ents.size());
        ents.push_back({base, "a" + std::to_string(i), kg::EntityKind::drug});
        ents.push_back({base + 1, "b" + std::to_string(i), kg::EntityKind::drug});
        ents.push_back({base + 2, "g" + std::to_string(i), kg::EntityKind::other});
        const kg::RelationId r = i % 2;
        for (const auto d : {base, base + 1}) {
            triples.push_back({d, r, base + 2});
            triples.push_back({base + 2, vocab.inverse(r), d});
        }
        toy.features.set(base, random_vector(3, rng));
        toy.features.set(base + 1, random_vector(3, rng));
        toy.examples.push_back({base, base + 1, {static_cast<kg::LabelId>(r)}});
    }
    toy.graph = kg::KnowledgeGraph(ents, vocab, triples);
    return toy;
}

}  // namespace

TEST(Train, SeparableToyReachesFullAccuracy) {
    Rng rng(4);
    auto toy = separable_toy(20, rng);
    const auto init = gnn::GnnParams::initialize({2, 8, 3, 4, 2}, gnn::Activation::relu, 7);
    gnn::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs = 200;
    cfg.batch_size = 4;
    cfg.seed = 1;
    const auto result = gnn::train(init, toy.graph, toy.examples, toy.features, cfg);
    ASSERT_EQ(result.epoch_loss.size(), 200u);
    EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
    EXPECT_EQ(gnn::training_accuracy(result.params, toy.graph, toy.examples, toy.features), 1.0);

    const auto again = gnn::train(init, toy.graph, toy.examples, toy.features, cfg);
    EXPECT_TRUE(again.params == result.params);
    EXPECT_EQ(again.epoch_loss, result.epoch_loss);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
    Rng rng(4);
    auto toy = separable_toy(6, rng);
    const auto init = gnn::GnnParams::initialize({2, 4, 3, 4, 2}, gnn::Activation::relu, 7);
    gnn::TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    const auto result = gnn::train(init, toy.graph, toy.examples, toy.features, cfg);
    EXPECT_TRUE(result.params == init);
}

TEST(Train, MultilabelAndErrors) {
    Rng rng(4);
    auto toy = separable_toy(6, rng);
    for (auto& ex : toy.examples) ex.labels = {ex.labels[0], 2};
    const auto init = gnn::GnnParams::initialize({2, 4, 3, 4, 4}, gnn::Activation::relu, 7);
    gnn::TrainConfig cfg;
    cfg.loss_mode = gnn::LossMode::sigmoid_bce;
    cfg.epochs = 20;
    cfg.learning_rate = 0.02;
    const auto result = gnn::train(init, toy.graph, toy.examples, toy.features, cfg);
    EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());

    cfg.epochs = 0;
    EXPECT_THROW(gnn::train(init, toy.graph, toy.examples, toy.features, cfg), Error);
    cfg.epochs = 1;
    EXPECT_THROW(gnn::train(init, toy.graph, {}, toy.features, cfg), Error);

    cfg.learning_rate = 1e300;
    cfg.epochs = 5;
    auto huge = init;
    huge.score_weight.setConstant(1e300);
    EXPECT_THROW(gnn::train(huge, toy.graph, toy.examples, toy.features, cfg), gnn::TrainingDiverged);
}

TEST(SampleNegatives, DrawsOutsideLabels) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<kg::LabelId> pos{1, 4};
        const auto neg = gnn::sample_negatives(pos, 6, 1, rng);
        ASSERT_EQ(neg.size(), 2u);
        EXPECT_LT(neg[0], neg[1]);
        for (const auto r : neg) EXPECT_TRUE(r != 1 && r != 4 && r < 6);
    }
    EXPECT_EQ(gnn::sample_negatives(std::vector<kg::LabelId>{0, 1}, 3, 5, rng), std::vector<kg::LabelId>{2});
}

TEST(GradCheck, RandomInitializations) {
    Rng rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const auto g = random_graph({12, 2, 2, 30, true}, rng);
        const auto act = trial % 2 ? gnn::Activation::relu : gnn::Activation::identity;
        const auto p = gnn::GnnParams::initialize(shape_for(g, 2, 4, 3, 3), act, 50 + trial);
        gnn::FeatureTable feats(3);
        for (kg::EntityId e = 0; e < 12; ++e) feats.set(e, random_vector(3, rng));
        gnn::TrainingExample ex{0, 1, {1}};
        while (gnn::encode_pair(p, g, ex.u, ex.v, feats.at(ex.u), feats.at(ex.v)).is_zero()) {
            ASSERT_LT(++ex.v, 12u) << "no connected pair in trial " << trial;
        }
        const auto mode = trial < 3 ? gnn::LossMode::softmax_ce : gnn::LossMode::sigmoid_bce;
        const gnn::LossTarget target{{1}, {0, 2}};
        gnn::GradCheckOptions opt;
        opt.seed = static_cast<std::uint64_t>(trial);
        opt.coordinates = 200;
        const auto report = gnn::grad_check(p, g, feats, ex, target, mode, opt);
        EXPECT_GE(report.coordinates_checked, 50u);
        EXPECT_TRUE(report.passed) << report.worst_tensor << " a=" << report.worst_analytic
                                   << " n=" << report.worst_numeric;
    }
}

TEST(GradCheck, CorruptedGradientFails) {
    Rng rng(21);
    const auto g = random_graph({10, 2, 1, 25, true}, rng);
    const auto p = gnn::GnnParams::initialize(shape_for(g, 2, 3, 2, 2), gnn::Activation::relu, 5);
    gnn::FeatureTable feats(2);
    for (kg::EntityId e = 0; e < 10; ++e) feats.set(e, random_vector(2, rng));
    gnn::GradCheckOptions opt;
    opt.tamper = [](std::vector<double>& grad) { grad[0] += 1.0; };
    opt.extra_coordinates = {0};
    const auto report = gnn::grad_check(p, g, feats, {0, 1, {0}}, {{0}, {}}, gnn::LossMode::softmax_ce, opt);
    EXPECT_FALSE(report.passed);
    EXPECT_THROW(gnn::grad_check(p, g, feats, {0, 1, {0}}, {{0}, {}}, gnn::LossMode::softmax_ce,
                                 {.epsilon = 1e-2}),
                 Error);
}

TEST(GradCheck, ZeroRepresentationIsFlat) {
    kg::RelationVocab vocab;
    vocab.add("r", kg::RelationKind::knowledge);
    std::vector<kg::Entity> ents{{0, "a", kg::EntityKind::drug}, {1, "b", kg::EntityKind::drug}};
    const kg::KnowledgeGraph g(ents, vocab, {});
    const auto p = gnn::GnnParams::initialize({2, 3, 2, 1, 2}, gnn::Activation::relu, 5);
    gnn::FeatureTable feats(2);
    feats.set(0, {1.0, 0.5});
    feats.set(1, {0.2, -1.0});
    gnn::GnnParams grad = gnn::GnnParams::zeros(p.shape);
    gnn::example_loss(p, g, feats, {0, 1, {0}}, {{0}, {}}, gnn::LossMode::softmax_ce, {}, &grad);
    EXPECT_TRUE(grad.score_weight.isZero());
    for (const auto& w : grad.weight) EXPECT_TRUE(w.isZero());
    EXPECT_FALSE(grad.score_bias.isZero());
}

TEST(Checkpoint, RoundTripsExactly) {
    const auto p = gnn::GnnParams::initialize({2, 3, 4, 5, 2}, gnn::Activation::relu, 42);
    const std::string path = ::testing::TempDir() + "ckpt.json";
    gnn::save_checkpoint(p, nlohmann::json{{"lr", 0.01}}, path);
    nlohmann::json cfg;
    const auto q = gnn::load_checkpoint(path, &cfg);
    EXPECT_TRUE(p == q);
    EXPECT_EQ(cfg["lr"], 0.01);
}

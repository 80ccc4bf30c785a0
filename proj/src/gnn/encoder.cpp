#include "casekg/gnn/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "casekg/embedding/text_embedding.hpp"
#include "casekg/error.hpp"
#include "casekg/kg/layers.hpp"

namespace casekg::gnn {

using kg::EntityId;

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_features(const GnnParams& params, std::span<const double> f_u, std::span<const double> f_v) {
    const auto d = static_cast<std::size_t>(params.shape.embed_dim);
    if (f_u.size() != d || f_v.size() != d) {
        throw ShapeError("feature dimension " + std::to_string(f_u.size()) + "/" + std::to_string(f_v.size()) +
                         " does not match embed_dim " + std::to_string(d));
    }
}

Eigen::VectorXd concat_features(std::span<const double> f_u, std::span<const double> f_v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(f_u.size() + f_v.size()));
    std::copy(f_u.begin(), f_u.end(), x.data());
    std::copy(f_v.begin(), f_v.end(), x.data() + f_u.size());
    return x;
}

int column_of(const std::vector<EntityId>& nodes, EntityId e) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), e);
    if (it == nodes.end() || *it != e) return -1;
    return static_cast<int>(it - nodes.begin());
}

bool skip_edge(const kg::KnowledgeGraph& graph, const detail::PairTrace& t, EntityId from, kg::RelationId r,
               EntityId to) {
    if (!t.options.exclude_direct_interaction) return false;
    const bool joins_pair = (from == t.u && to == t.v) || (from == t.v && to == t.u);
    return joins_pair && graph.relations().info(r).kind == kg::RelationKind::interaction;
}

void run_direction(const GnnParams& params, const kg::KnowledgeGraph& graph, detail::PairTrace& t,
                   detail::DirectionTrace& d, std::span<const double> f_source) {
    const int L = params.shape.layers;
    const int H = params.shape.hidden;
    auto layers = kg::walk_layers(graph, d.source, d.target, L);
    d.nodes = std::move(layers.layers);
    d.reached = !d.nodes.back().empty();
    if (!d.reached) return;

    const Eigen::Map<const Eigen::VectorXd> f(f_source.data(), static_cast<Eigen::Index>(f_source.size()));
    d.state.resize(static_cast<std::size_t>(L) + 1);
    d.message.resize(static_cast<std::size_t>(L));
    d.preactivation.resize(static_cast<std::size_t>(L));
    d.state[0] = params.feat_proj * f;

    for (int l = 1; l <= L; ++l) {
        const auto& prev_nodes = d.nodes[static_cast<std::size_t>(l - 1)];
        const auto& nodes = d.nodes[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd& prev = d.state[static_cast<std::size_t>(l - 1)];
        const Eigen::MatrixXd& rel = params.relation[static_cast<std::size_t>(l - 1)];
        Eigen::MatrixXd msg = Eigen::MatrixXd::Zero(H, static_cast<Eigen::Index>(nodes.size()));
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            for (const auto& edge : graph.in_edges(nodes[j])) {
                const int i = column_of(prev_nodes, edge.node);
                if (i < 0 || skip_edge(graph, t, edge.node, edge.relation, nodes[j])) continue;
                const double a = t.alpha(l - 1, edge.relation);
                msg.col(static_cast<Eigen::Index>(j)).array() +=
                    a * prev.col(i).array() * rel.row(edge.relation).transpose().array();
            }
        }
        Eigen::MatrixXd pre = params.weight[static_cast<std::size_t>(l - 1)] * msg;
        d.state[static_cast<std::size_t>(l)] =
            params.activation == Activation::relu ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
        d.message[static_cast<std::size_t>(l - 1)] = std::move(msg);
        d.preactivation[static_cast<std::size_t>(l - 1)] = std::move(pre);
    }
}

void backprop_direction(const GnnParams& params, const kg::KnowledgeGraph& graph, const detail::PairTrace& t,
                        const detail::DirectionTrace& d, const Eigen::VectorXd& grad_out,
                        std::span<const double> f_source, Eigen::MatrixXd& grad_alpha, GnnParams& grad) {
    if (!d.reached) return;
    const int L = params.shape.layers;
    const int H = params.shape.hidden;

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(H, 1);
    g.col(0) = grad_out;
    for (int l = L; l >= 1; --l) {
        const auto li = static_cast<std::size_t>(l - 1);
        const auto& prev_nodes = d.nodes[li];
        const auto& nodes = d.nodes[li + 1];
        const Eigen::MatrixXd& prev = d.state[li];
        const Eigen::MatrixXd& rel = params.relation[li];

        Eigen::MatrixXd g_pre = g;
        if (params.activation == Activation::relu) {
            g_pre = (d.preactivation[li].array() > 0.0).select(g.array(), 0.0);
        }
        grad.weight[li].noalias() += g_pre * d.message[li].transpose();
        const Eigen::MatrixXd g_msg = params.weight[li].transpose() * g_pre;

        Eigen::MatrixXd g_prev = Eigen::MatrixXd::Zero(H, static_cast<Eigen::Index>(prev_nodes.size()));
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const auto gm = g_msg.col(static_cast<Eigen::Index>(j)).array();
            for (const auto& edge : graph.in_edges(nodes[j])) {
                const int i = column_of(prev_nodes, edge.node);
                if (i < 0 || skip_edge(graph, t, edge.node, edge.relation, nodes[j])) continue;
                const double a = t.alpha(l - 1, edge.relation);
                const auto hr = rel.row(edge.relation).transpose().array();
                const auto hp = prev.col(i).array();
                g_prev.col(i).array() += a * gm * hr;
                grad.relation[li].row(edge.relation).array() += (a * gm * hp).transpose();
                grad_alpha(l - 1, edge.relation) += (gm * hp * hr).sum();
            }
        }
        g = std::move(g_prev);
    }
    const Eigen::Map<const Eigen::VectorXd> f(f_source.data(), static_cast<Eigen::Index>(f_source.size()));
    grad.feat_proj.noalias() += g.col(0) * f.transpose();
}

}  // namespace

bool PairRepresentation::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

double attention_weight(const GnnParams& params, kg::RelationId relation, int layer, std::span<const double> f_u,
                        std::span<const double> f_v) {
    if (layer < 1 || layer > params.shape.layers) throw Error("attention layer out of range");
    if (relation >= static_cast<kg::RelationId>(params.shape.relations)) throw NotFoundError("relation out of range");
    check_features(params, f_u, f_v);
    const Eigen::VectorXd x = concat_features(f_u, f_v);
    return sigmoid(params.attention[static_cast<std::size_t>(layer - 1)].row(relation).dot(x));
}

namespace detail {

PairTrace forward_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, EntityId u, EntityId v,
                       std::span<const double> f_u, std::span<const double> f_v, const EncodeOptions& options) {
    if (!graph.contains(u) || !graph.contains(v)) throw NotFoundError("pair entity not in graph");
    if (u == v) throw Error("encode_pair needs two distinct entities");
    if (static_cast<std::size_t>(params.shape.relations) != graph.relation_count()) {
        throw ShapeError("parameters cover " + std::to_string(params.shape.relations) + " relations, graph has " +
                         std::to_string(graph.relation_count()));
    }
    check_features(params, f_u, f_v);

    PairTrace t;
    t.u = u;
    t.v = v;
    t.options = options;
    t.pair_features = concat_features(f_u, f_v);
    t.alpha.resize(params.shape.layers, params.shape.relations);
    for (int l = 0; l < params.shape.layers; ++l) {
        const Eigen::VectorXd z = params.attention[static_cast<std::size_t>(l)] * t.pair_features;
        for (int r = 0; r < params.shape.relations; ++r) t.alpha(l, r) = sigmoid(z(r));
    }

    t.forward.source = u;
    t.forward.target = v;
    t.backward.source = v;
    t.backward.target = u;
    run_direction(params, graph, t, t.forward, f_u);
    run_direction(params, graph, t, t.backward, f_v);

    const auto H = static_cast<std::size_t>(params.shape.hidden);
    t.rep.values.assign(2 * H, 0.0);
    if (t.forward.reached) {
        const auto& s = t.forward.state.back();
        std::copy(s.data(), s.data() + H, t.rep.values.begin());
    }
    if (t.backward.reached) {
        const auto& s = t.backward.state.back();
        std::copy(s.data(), s.data() + H, t.rep.values.begin() + static_cast<std::ptrdiff_t>(H));
    }
    return t;
}

void backward_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, const PairTrace& trace,
                   const Eigen::VectorXd& grad_rep, GnnParams& grad) {
    const int H = params.shape.hidden;
    if (grad_rep.size() != 2 * H) throw ShapeError("representation gradient has the wrong length");
    const int E = params.shape.embed_dim;
    const auto x = std::span<const double>(trace.pair_features.data(), static_cast<std::size_t>(2 * E));
    Eigen::MatrixXd grad_alpha = Eigen::MatrixXd::Zero(params.shape.layers, params.shape.relations);
    backprop_direction(params, graph, trace, trace.forward, grad_rep.head(H), x.subspan(0, static_cast<std::size_t>(E)),
                       grad_alpha, grad);
    backprop_direction(params, graph, trace, trace.backward, grad_rep.tail(H),
                       x.subspan(static_cast<std::size_t>(E)), grad_alpha, grad);
    for (int l = 0; l < params.shape.layers; ++l) {
        for (int r = 0; r < params.shape.relations; ++r) {
            const double ga = grad_alpha(l, r);
            if (ga == 0.0) continue;
            const double a = trace.alpha(l, r);
            grad.attention[static_cast<std::size_t>(l)].row(r) += (ga * a * (1.0 - a)) * trace.pair_features.transpose();
        }
    }
}

}  // namespace detail

PairRepresentation encode_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, EntityId u, EntityId v,
                               std::span<const double> f_u, std::span<const double> f_v, const EncodeOptions& options) {
    return detail::forward_pair(params, graph, u, v, f_u, f_v, options).rep;
}

Eigen::VectorXd score_relations(const GnnParams& params, const PairRepresentation& rep) {
    if (rep.dim() != static_cast<std::size_t>(2 * params.shape.hidden)) {
        throw ShapeError("representation length " + std::to_string(rep.dim()) + " does not match 2 * hidden");
    }
    const Eigen::Map<const Eigen::VectorXd> h(rep.values.data(), static_cast<Eigen::Index>(rep.values.size()));
    return params.score_weight * h + params.score_bias;
}

std::vector<kg::LabelId> candidate_filter(std::span<const double> logits, std::size_t n) {
    if (n < 1) throw Error("candidate count must be at least 1");
    std::vector<kg::LabelId> ids(logits.size());
    std::iota(ids.begin(), ids.end(), kg::LabelId{0});
    const std::size_t keep = std::min(n, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                      [&](kg::LabelId a, kg::LabelId b) {
                          if (logits[a] != logits[b]) return logits[a] > logits[b];
                          return a < b;
                      });
    ids.resize(keep);
    return ids;
}

double struct_sim(const PairRepresentation& a, const PairRepresentation& b) {
    return std::clamp(embedding::cosine(a.values, b.values), -1.0, 1.0);
}

}  // namespace casekg::gnn

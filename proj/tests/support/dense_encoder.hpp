#pragma once

#include <cmath>
#include <vector>

#include "casekg/gnn/params.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::testing {

// Reference encoder: every layer updates every entity from every triple,
// with plain loops and no graph restriction at all.
inline std::vector<double> dense_encode(const gnn::GnnParams& p, const kg::KnowledgeGraph& g, kg::EntityId u,
                                        kg::EntityId v, const std::vector<double>& f_u,
                                        const std::vector<double>& f_v, bool exclude_direct_interaction = false) {
    const int L = p.shape.layers, H = p.shape.hidden, E = p.shape.embed_dim, R = p.shape.relations;
    const std::size_t n = g.entity_count();

    std::vector<double> x(f_u);
    x.insert(x.end(), f_v.begin(), f_v.end());
    std::vector<std::vector<double>> alpha(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(R)));
    for (int l = 0; l < L; ++l) {
        for (int r = 0; r < R; ++r) {
            double z = 0.0;
            for (int k = 0; k < 2 * E; ++k) z += p.attention[static_cast<std::size_t>(l)](r, k) * x[static_cast<std::size_t>(k)];
            alpha[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] = 1.0 / (1.0 + std::exp(-z));
        }
    }

    auto run = [&](kg::EntityId src, kg::EntityId dst, const std::vector<double>& f) {
        std::vector<std::vector<double>> h(n, std::vector<double>(static_cast<std::size_t>(H), 0.0));
        for (int a = 0; a < H; ++a) {
            double s = 0.0;
            for (int b = 0; b < E; ++b) s += p.feat_proj(a, b) * f[static_cast<std::size_t>(b)];
            h[src][static_cast<std::size_t>(a)] = s;
        }
        for (int l = 0; l < L; ++l) {
            std::vector<std::vector<double>> msg(n, std::vector<double>(static_cast<std::size_t>(H), 0.0));
            for (const auto& t : g.triples()) {
                if (exclude_direct_interaction && g.relations().info(t.relation).kind == kg::RelationKind::interaction &&
                    ((t.head == u && t.tail == v) || (t.head == v && t.tail == u))) {
                    continue;
                }
                const double a = alpha[static_cast<std::size_t>(l)][t.relation];
                for (int k = 0; k < H; ++k) {
                    msg[t.tail][static_cast<std::size_t>(k)] +=
                        a * h[t.head][static_cast<std::size_t>(k)] * p.relation[static_cast<std::size_t>(l)](t.relation, k);
                }
            }
            for (std::size_t e = 0; e < n; ++e) {
                for (int a = 0; a < H; ++a) {
                    double s = 0.0;
                    for (int b = 0; b < H; ++b) s += p.weight[static_cast<std::size_t>(l)](a, b) * msg[e][static_cast<std::size_t>(b)];
                    h[e][static_cast<std::size_t>(a)] = p.activation == gnn::Activation::relu ? std::max(0.0, s) : s;
                }
            }
        }
        return h[dst];
    };
    auto out = run(u, v, f_u);
    const auto back = run(v, u, f_v);
    out.insert(out.end(), back.begin(), back.end());
    return out;
}

}  // namespace casekg::testing

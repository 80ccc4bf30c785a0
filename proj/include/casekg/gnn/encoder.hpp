#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "casekg/gnn/params.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::gnn {

// [h_{u,v}; h_{v,u}] of length 2 * hidden.
struct PairRepresentation {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool is_zero() const;
    bool operator==(const PairRepresentation&) const = default;
};

struct EncodeOptions {
    // Skip interaction edges that join u and v directly. Training sets this so
    // a pair cannot read its own label off the propagation graph.
    bool exclude_direct_interaction = false;
};

// sigmoid(w_r^(layer) . [f_u; f_v]); `layer` is 1-based.
double attention_weight(const GnnParams& params, kg::RelationId relation, int layer, std::span<const double> f_u,
                        std::span<const double> f_v);

// Pair-wise flow encoder. The u->v state starts at feat_proj * f_u on u and is
// zero elsewhere; each layer sets
//     h_e = act(W * sum over edges (e', r, e) of alpha_r * (h_e' (.) rel_r))
// and the representation is the final state at v, concatenated with the
// symmetric v->u state at u. Only nodes on some length-L walk between the pair
// are visited, which leaves the result identical to a sweep over all entities.
PairRepresentation encode_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, kg::EntityId u,
                               kg::EntityId v, std::span<const double> f_u, std::span<const double> f_v,
                               const EncodeOptions& options = {});

// score_weight * h_p + score_bias.
Eigen::VectorXd score_relations(const GnnParams& params, const PairRepresentation& rep);

// Top-n label ids by logit, ties to the smaller id.
std::vector<kg::LabelId> candidate_filter(std::span<const double> logits, std::size_t n);

// Cosine of two representations, 0 when either is all zeros.
double struct_sim(const PairRepresentation& a, const PairRepresentation& b);

namespace detail {

// Forward state of one propagation direction, kept for the backward pass.
struct DirectionTrace {
    kg::EntityId source = 0;
    kg::EntityId target = 0;
    std::vector<std::vector<kg::EntityId>> nodes;  // sorted active nodes per layer 0..L
    std::vector<Eigen::MatrixXd> state;            // hidden x |nodes[l]|, l = 0..L
    std::vector<Eigen::MatrixXd> message;          // hidden x |nodes[l]|, l = 1..L at index l-1
    std::vector<Eigen::MatrixXd> preactivation;    // same layout as message
    bool reached = false;
};

struct PairTrace {
    Eigen::VectorXd pair_features;  // [f_u; f_v]
    Eigen::MatrixXd alpha;          // layers x relations
    DirectionTrace forward;         // u -> v
    DirectionTrace backward;        // v -> u
    kg::EntityId u = 0;
    kg::EntityId v = 0;
    EncodeOptions options;
    PairRepresentation rep;
};

PairTrace forward_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, kg::EntityId u, kg::EntityId v,
                       std::span<const double> f_u, std::span<const double> f_v, const EncodeOptions& options);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(h_p).
void backward_pair(const GnnParams& params, const kg::KnowledgeGraph& graph, const PairTrace& trace,
                   const Eigen::VectorXd& grad_rep, GnnParams& grad);

}  // namespace detail

}  // namespace casekg::gnn

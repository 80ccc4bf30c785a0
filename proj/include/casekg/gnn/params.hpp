#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace casekg::gnn {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);

struct GnnShape {
    int layers = 3;      // L
    int hidden = 16;     // hidden width
    int embed_dim = 64;  // text embedding width
    int relations = 0;   // relations of the propagation graph, inverses included
    int labels = 0;      // interaction types

    bool operator==(const GnnShape&) const = default;
};

// Learnable state of the pair encoder and its scoring head.
//   weight[l]     hidden x hidden            message transform of layer l+1
//   attention[l]  relations x 2*embed_dim    row r is the attention vector of relation r
//   relation[l]   relations x hidden         row r is the relation embedding
//   score_weight  labels x 2*hidden, score_bias labels
//   feat_proj     hidden x embed_dim         maps a text embedding to the initial state
struct GnnParams {
    GnnShape shape;
    Activation activation = Activation::relu;
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::MatrixXd> attention;
    std::vector<Eigen::MatrixXd> relation;
    Eigen::MatrixXd score_weight;
    Eigen::VectorXd score_bias;
    Eigen::MatrixXd feat_proj;

    static GnnParams zeros(const GnnShape& shape, Activation activation = Activation::relu);
    // Glorot-uniform weights, relation embeddings at 1 + U(-0.1, 0.1), zero bias.
    static GnnParams initialize(const GnnShape& shape, Activation activation, std::uint64_t seed);

    // Throws ShapeError on inconsistent shapes and Error on non-finite entries.
    void validate() const;

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    // Visits every tensor in a fixed order as (name, contiguous storage).
    template <typename F>
    void for_each_tensor(F&& f) {
        for (std::size_t l = 0; l < weight.size(); ++l) {
            f("weight[" + std::to_string(l) + "]", std::span<double>(weight[l].data(), weight[l].size()));
            f("attention[" + std::to_string(l) + "]", std::span<double>(attention[l].data(), attention[l].size()));
            f("relation[" + std::to_string(l) + "]", std::span<double>(relation[l].data(), relation[l].size()));
        }
        f("score_weight", std::span<double>(score_weight.data(), score_weight.size()));
        f("score_bias", std::span<double>(score_bias.data(), score_bias.size()));
        f("feat_proj", std::span<double>(feat_proj.data(), feat_proj.size()));
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        const_cast<GnnParams*>(this)->for_each_tensor(
            [&](const std::string& name, std::span<double> data) { f(name, std::span<const double>(data)); });
    }

    bool operator==(const GnnParams& other) const;
};

// Versioned JSON checkpoint: shape, activation, the producing config, then
// each tensor as {name, rows, cols, data} in column-major order. Doubles are
// written in shortest round-trip form so reloading is bit-exact.
void save_checkpoint(const GnnParams& params, const nlohmann::json& config, const std::string& path);
GnnParams load_checkpoint(const std::string& path, nlohmann::json* config = nullptr);

}  // namespace casekg::gnn

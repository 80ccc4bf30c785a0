#include "casekg/gnn/params.hpp"

#include <cmath>
#include <fstream>

#include "casekg/error.hpp"
#include "casekg/rng.hpp"

namespace casekg::gnn {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

void fill_uniform(Eigen::MatrixXd& m, double limit, Rng& rng) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

double glorot(int fan_in, int fan_out) { return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)); }

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(name + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw Error("unknown activation: " + std::string(s));
}

GnnParams GnnParams::zeros(const GnnShape& shape, Activation activation) {
    if (shape.layers < 1 || shape.hidden < 1 || shape.embed_dim < 1 || shape.relations < 0 || shape.labels < 1) {
        throw ShapeError("invalid GNN shape");
    }
    GnnParams p;
    p.shape = shape;
    p.activation = activation;
    for (int l = 0; l < shape.layers; ++l) {
        p.weight.push_back(Eigen::MatrixXd::Zero(shape.hidden, shape.hidden));
        p.attention.push_back(Eigen::MatrixXd::Zero(shape.relations, 2 * shape.embed_dim));
        p.relation.push_back(Eigen::MatrixXd::Zero(shape.relations, shape.hidden));
    }
    p.score_weight = Eigen::MatrixXd::Zero(shape.labels, 2 * shape.hidden);
    p.score_bias = Eigen::VectorXd::Zero(shape.labels);
    p.feat_proj = Eigen::MatrixXd::Zero(shape.hidden, shape.embed_dim);
    return p;
}

GnnParams GnnParams::initialize(const GnnShape& shape, Activation activation, std::uint64_t seed) {
    GnnParams p = zeros(shape, activation);
    Rng rng(seed);
    fill_uniform(p.feat_proj, glorot(shape.embed_dim, shape.hidden), rng);
    for (int l = 0; l < shape.layers; ++l) {
        fill_uniform(p.weight[l], glorot(shape.hidden, shape.hidden), rng);
        fill_uniform(p.attention[l], glorot(2 * shape.embed_dim, 1), rng);
        fill_uniform(p.relation[l], 0.1, rng);
        p.relation[l].array() += 1.0;
    }
    fill_uniform(p.score_weight, glorot(2 * shape.hidden, shape.labels), rng);
    return p;
}

void GnnParams::validate() const {
    const auto L = static_cast<std::size_t>(shape.layers);
    if (weight.size() != L || attention.size() != L || relation.size() != L) {
        throw ShapeError("parameter layer count does not match shape");
    }
    for (std::size_t l = 0; l < L; ++l) {
        expect_shape(weight[l], shape.hidden, shape.hidden, "weight");
        expect_shape(attention[l], shape.relations, 2 * shape.embed_dim, "attention");
        expect_shape(relation[l], shape.relations, shape.hidden, "relation");
    }
    expect_shape(score_weight, shape.labels, 2 * shape.hidden, "score_weight");
    if (score_bias.size() != shape.labels) throw ShapeError("score_bias length does not match label count");
    expect_shape(feat_proj, shape.hidden, shape.embed_dim, "feat_proj");
    for_each_tensor([](const std::string& name, std::span<const double> data) {
        for (double x : data) {
            if (!std::isfinite(x)) throw Error("non-finite entry in " + name);
        }
    });
}

std::size_t GnnParams::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, std::span<const double> data) { n += data.size(); });
    return n;
}

std::vector<double> GnnParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each_tensor([&](const std::string&, std::span<const double> data) { out.insert(out.end(), data.begin(), data.end()); });
    return out;
}

void GnnParams::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
    std::size_t offset = 0;
    for_each_tensor([&](const std::string&, std::span<double> data) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), data.size(), data.begin());
        offset += data.size();
    });
}

bool GnnParams::operator==(const GnnParams& other) const {
    if (!(shape == other.shape) || activation != other.activation) return false;
    return flatten() == other.flatten();
}

void save_checkpoint(const GnnParams& params, const json& config, const std::string& path) {
    json doc;
    doc["format"] = "casekg-gnn";
    doc["version"] = kCheckpointVersion;
    doc["shape"] = {{"layers", params.shape.layers},
                    {"hidden", params.shape.hidden},
                    {"embed_dim", params.shape.embed_dim},
                    {"relations", params.shape.relations},
                    {"labels", params.shape.labels}};
    doc["activation"] = to_string(params.activation);
    doc["config"] = config;
    json tensors = json::array();
    auto add = [&](const std::string& name, const Eigen::MatrixXd& m) {
        tensors.push_back({{"name", name},
                           {"rows", m.rows()},
                           {"cols", m.cols()},
                           {"data", std::vector<double>(m.data(), m.data() + m.size())}});
    };
    for (std::size_t l = 0; l < params.weight.size(); ++l) {
        add("weight[" + std::to_string(l) + "]", params.weight[l]);
        add("attention[" + std::to_string(l) + "]", params.attention[l]);
        add("relation[" + std::to_string(l) + "]", params.relation[l]);
    }
    add("score_weight", params.score_weight);
    add("score_bias", params.score_bias);
    add("feat_proj", params.feat_proj);
    doc["tensors"] = std::move(tensors);

    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out << doc.dump() << '\n';
    if (!out) throw Error("write failed: " + path);
}

GnnParams load_checkpoint(const std::string& path, json* config) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint: " + path);
    try {
        const json doc = json::parse(in);
        if (doc.at("format") != "casekg-gnn") throw Error("not a GNN checkpoint: " + path);
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw Error("checkpoint " + path + " has unsupported version " + doc.at("version").dump());
        }
        GnnShape shape;
        const auto& s = doc.at("shape");
        shape.layers = s.at("layers").get<int>();
        shape.hidden = s.at("hidden").get<int>();
        shape.embed_dim = s.at("embed_dim").get<int>();
        shape.relations = s.at("relations").get<int>();
        shape.labels = s.at("labels").get<int>();
        GnnParams p = GnnParams::zeros(shape, parse_activation(doc.at("activation").get<std::string>()));

        const auto& tensors = doc.at("tensors");
        std::size_t index = 0;
        p.for_each_tensor([&](const std::string& name, std::span<double> data) {
            if (index >= tensors.size()) throw Error("checkpoint " + path + " is missing tensor " + name);
            const auto& t = tensors[index++];
            if (t.at("name") != name) throw Error("checkpoint " + path + ": expected tensor " + name);
            const auto values = t.at("data").get<std::vector<double>>();
            if (values.size() != data.size()) throw ShapeError("checkpoint tensor " + name + " has the wrong size");
            std::copy(values.begin(), values.end(), data.begin());
        });
        if (index != tensors.size()) throw Error("checkpoint " + path + " has extra tensors");
        if (config) *config = doc.value("config", json::object());
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw Error("checkpoint " + path + ": " + e.what());
    }
}

}  // namespace casekg::gnn

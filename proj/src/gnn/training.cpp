#include "casekg/gnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace casekg::gnn {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string tensor_of(const GnnParams& params, std::size_t coordinate) {
    std::string found;
    std::size_t offset = 0;
    params.for_each_tensor([&](const std::string& name, std::span<const double> data) {
        if (found.empty() && coordinate < offset + data.size()) {
            found = name + "#" + std::to_string(coordinate - offset);
        }
        offset += data.size();
    });
    return found;
}

}  // namespace

std::string to_string(LossMode m) { return m == LossMode::softmax_ce ? "softmax_ce" : "sigmoid_bce"; }

LossMode parse_loss_mode(std::string_view s) {
    if (s == "softmax_ce") return LossMode::softmax_ce;
    if (s == "sigmoid_bce") return LossMode::sigmoid_bce;
    throw Error("unknown loss mode '" + std::string(s) + "'");
}

LossMode loss_mode_for(kg::TaskMode mode) {
    return mode == kg::TaskMode::multiclass ? LossMode::softmax_ce : LossMode::sigmoid_bce;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be finite and >= 0");
    if (epochs < 1) throw Error("epochs must be at least 1");
    if (batch_size < 1) throw Error("batch_size must be at least 1");
    if (weight_decay < 0.0) throw Error("weight_decay must be >= 0");
    if (negatives_per_positive < 0) throw Error("negatives_per_positive must be >= 0");
}

void FeatureTable::set(kg::EntityId e, std::vector<double> values) {
    if (static_cast<int>(values.size()) != dim_) {
        throw ShapeError("feature of length " + std::to_string(values.size()) + " for table of dim " +
                         std::to_string(dim_));
    }
    if (e >= rows_.size()) rows_.resize(static_cast<std::size_t>(e) + 1);
    rows_[e] = std::move(values);
}

std::span<const double> FeatureTable::at(kg::EntityId e) const {
    if (!has(e)) throw NotFoundError("no text feature for entity " + std::to_string(e));
    return rows_[e];
}

std::vector<TrainingExample> make_examples(const kg::DdiDataset& dataset, std::span<const std::size_t> indices) {
    std::vector<TrainingExample> out;
    out.reserve(indices.size());
    for (const std::size_t i : indices) {
        const auto p = dataset.pair(i);
        out.push_back({p.u, p.v, dataset.labels(i)});
    }
    return out;
}

std::vector<kg::LabelId> sample_negatives(std::span<const kg::LabelId> positives, int label_count,
                                          int negatives_per_positive, Rng& rng) {
    std::vector<kg::LabelId> pool;
    const std::set<kg::LabelId> pos(positives.begin(), positives.end());
    for (int r = 0; r < label_count; ++r) {
        if (!pos.contains(static_cast<kg::LabelId>(r))) pool.push_back(static_cast<kg::LabelId>(r));
    }
    const std::size_t want =
        std::min(pool.size(), static_cast<std::size_t>(negatives_per_positive) * positives.size());
    // Partial Fisher-Yates: the first `want` slots end up a uniform sample.
    for (std::size_t i = 0; i < want; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(want);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double example_loss(const GnnParams& params, const kg::KnowledgeGraph& graph, const FeatureTable& features,
                    const TrainingExample& example, const LossTarget& target, LossMode mode,
                    const EncodeOptions& options, GnnParams* grad) {
    if (target.positives.empty()) throw Error("loss target has no positive label");
    const auto trace =
        detail::forward_pair(params, graph, example.u, example.v, features.at(example.u), features.at(example.v), options);
    const Eigen::VectorXd logits = score_relations(params, trace.rep);
    const auto R = logits.size();
    auto check_label = [&](kg::LabelId r) {
        if (static_cast<Eigen::Index>(r) >= R) throw NotFoundError("label " + std::to_string(r) + " out of range");
    };

    double loss = 0.0;
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(R);
    if (mode == LossMode::softmax_ce) {
        const kg::LabelId y = target.positives.front();
        check_label(y);
        const double m = logits.maxCoeff();
        const Eigen::ArrayXd e = (logits.array() - m).exp();
        const double sum = e.sum();
        loss = m + std::log(sum) - logits(y);
        dz = e.matrix() / sum;
        dz(y) -= 1.0;
    } else {
        const double n = static_cast<double>(target.positives.size() + target.negatives.size());
        for (const auto r : target.positives) {
            check_label(r);
            loss += softplus(-logits(r));
            dz(r) += (sigmoid(logits(r)) - 1.0) / n;
        }
        for (const auto r : target.negatives) {
            check_label(r);
            loss += softplus(logits(r));
            dz(r) += sigmoid(logits(r)) / n;
        }
        loss /= n;
    }

    if (grad != nullptr) {
        const Eigen::Map<const Eigen::VectorXd> h(trace.rep.values.data(),
                                                  static_cast<Eigen::Index>(trace.rep.values.size()));
        grad->score_weight.noalias() += dz * h.transpose();
        grad->score_bias += dz;
        const Eigen::VectorXd dh = params.score_weight.transpose() * dz;
        detail::backward_pair(params, graph, trace, dh, *grad);
    }
    return loss;
}

TrainingDiverged::TrainingDiverged(int epoch_, double loss)
    : Error("training diverged at epoch " + std::to_string(epoch_) + " (loss " + std::to_string(loss) + ")"),
      epoch(epoch_) {}

TrainResult train(GnnParams params, const kg::KnowledgeGraph& graph, std::span<const TrainingExample> examples,
                  const FeatureTable& features, const TrainConfig& config) {
    config.validate();
    params.validate();
    if (examples.empty()) throw Error("training split is empty");

    Rng rng(config.seed);
    const EncodeOptions options{config.exclude_direct_interaction};
    const std::size_t n_params = params.parameter_count();
    std::vector<double> m(n_params, 0.0), s(n_params, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            GnnParams grad = GnnParams::zeros(params.shape, params.activation);
            double batch_total = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto& ex = examples[order[k]];
                LossTarget target{ex.labels, {}};
                if (config.loss_mode == LossMode::sigmoid_bce) {
                    target.negatives =
                        sample_negatives(ex.labels, params.shape.labels, config.negatives_per_positive, rng);
                }
                batch_total += example_loss(params, graph, features, ex, target, config.loss_mode, options, &grad);
            }
            if (!std::isfinite(batch_total)) throw TrainingDiverged(epoch, batch_total);
            epoch_total += batch_total;

            auto theta = params.flatten();
            auto g = grad.flatten();
            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < n_params; ++i) {
                const double gi = g[i] * scale + config.weight_decay * theta[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                s[i] = beta2 * s[i] + (1.0 - beta2) * gi * gi;
                theta[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(s[i] / c2) + eps);
            }
            params.assign(theta);
        }
        const double mean = epoch_total / static_cast<double>(examples.size());
        if (!std::isfinite(mean)) throw TrainingDiverged(epoch, mean);
        result.epoch_loss.push_back(mean);
    }
    result.params = std::move(params);
    return result;
}

double training_accuracy(const GnnParams& params, const kg::KnowledgeGraph& graph,
                         std::span<const TrainingExample> examples, const FeatureTable& features,
                         const EncodeOptions& options) {
    if (examples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : examples) {
        const auto rep = encode_pair(params, graph, ex.u, ex.v, features.at(ex.u), features.at(ex.v), options);
        const Eigen::VectorXd z = score_relations(params, rep);
        const auto top = candidate_filter(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), 1);
        if (std::find(ex.labels.begin(), ex.labels.end(), top.front()) != ex.labels.end()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

GradCheckReport grad_check(const GnnParams& params, const kg::KnowledgeGraph& graph, const FeatureTable& features,
                           const TrainingExample& example, const LossTarget& target, LossMode mode,
                           const GradCheckOptions& options) {
    if (!(options.epsilon >= 1e-7 && options.epsilon <= 1e-3)) throw Error("epsilon must lie in [1e-7, 1e-3]");

    GnnParams grad = GnnParams::zeros(params.shape, params.activation);
    example_loss(params, graph, features, example, target, mode, options.encode, &grad);
    auto analytic = grad.flatten();
    if (options.tamper) options.tamper(analytic);

    const std::size_t n = analytic.size();
    std::vector<std::size_t> nonzero;
    for (std::size_t i = 0; i < n; ++i) {
        if (analytic[i] != 0.0) nonzero.push_back(i);
    }
    Rng rng(options.seed);
    std::set<std::size_t> chosen(options.extra_coordinates.begin(), options.extra_coordinates.end());
    const std::size_t want = std::min(n, options.coordinates);
    rng.shuffle(std::span<std::size_t>(nonzero));
    for (std::size_t i = 0; i < nonzero.size() && chosen.size() < want / 2; ++i) chosen.insert(nonzero[i]);
    while (chosen.size() < want + options.extra_coordinates.size() && chosen.size() < n) {
        chosen.insert(static_cast<std::size_t>(rng.uniform_index(n)));
    }

    GnnParams probe = params;
    auto theta = params.flatten();
    auto loss_at = [&](std::size_t i, double value) {
        const double saved = theta[i];
        theta[i] = value;
        probe.assign(theta);
        theta[i] = saved;
        return example_loss(probe, graph, features, example, target, mode, options.encode, nullptr);
    };

    GradCheckReport report;
    for (const std::size_t i : chosen) {
        if (i >= n) throw Error("grad_check coordinate out of range");
        const double x = theta[i];
        const double numeric =
            (loss_at(i, x + options.epsilon) - loss_at(i, x - options.epsilon)) / (2.0 * options.epsilon);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        ++report.coordinates_checked;
        if (rel > report.max_relative_error || report.coordinates_checked == 1) {
            report.max_relative_error = rel;
            report.worst_coordinate = i;
            report.worst_analytic = a;
            report.worst_numeric = numeric;
        }
    }
    report.worst_tensor = tensor_of(params, report.worst_coordinate);
    report.passed = report.max_relative_error < options.tolerance;
    return report;
}

}  // namespace casekg::gnn

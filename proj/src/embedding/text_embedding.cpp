#include "casekg/embedding/text_embedding.hpp"

#include <algorithm>
#include <cmath>

#include "casekg/error.hpp"

namespace casekg::embedding {

TextEmbedding TextEmbedding::normalized(std::vector<double> values) {
    double sq = 0.0;
    for (double x : values) {
        if (!std::isfinite(x)) throw Error("embedding has a non-finite entry");
        sq += x * x;
    }
    if (sq == 0.0) throw Error("cannot normalize a zero embedding");
    const double norm = std::sqrt(sq);
    for (double& x : values) x /= norm;
    return TextEmbedding(std::move(values));
}

TextEmbedding TextEmbedding::from_unit(std::vector<double> values) {
    double sq = 0.0;
    for (double x : values) {
        if (!std::isfinite(x)) throw Error("embedding has a non-finite entry");
        sq += x * x;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) throw Error("embedding is not unit norm");
    return TextEmbedding(std::move(values));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_sim(const TextEmbedding& a, const TextEmbedding& b) {
    return std::clamp(cosine(a.values(), b.values()), -1.0, 1.0);
}

}  // namespace casekg::embedding

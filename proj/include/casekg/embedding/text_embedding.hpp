#pragma once

#include <span>
#include <vector>

namespace casekg::embedding {

// Unit-norm real vector.
class TextEmbedding {
public:
    TextEmbedding() = default;

    // L2-normalizes `values`. Throws on non-finite entries or a zero vector.
    static TextEmbedding normalized(std::vector<double> values);
    // Adopts values that are already unit norm (within 1e-6) without touching their bits.
    static TextEmbedding from_unit(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    bool operator==(const TextEmbedding&) const = default;

private:
    explicit TextEmbedding(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

// dot(a, b) / (|a| |b|), or 0 when either vector is all zeros. Throws ShapeError
// on a dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

// Cosine of two embeddings clamped to [-1, 1].
double cosine_sim(const TextEmbedding& a, const TextEmbedding& b);

}  // namespace casekg::embedding

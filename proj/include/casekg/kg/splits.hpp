#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casekg/kg/dataset.hpp"

namespace casekg::kg {

enum class Setting { s0, s1, s2 };
enum class Stage { train, valid, test };

struct SplitSpec {
    std::vector<EntityId> emerging_drugs;  // sorted
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid_s0;
    std::vector<std::size_t> test_s0;
    std::vector<std::size_t> valid_s1;
    std::vector<std::size_t> test_s1;
    std::vector<std::size_t> valid_s2;
    std::vector<std::size_t> test_s2;
    std::uint64_t seed = 0;

    bool operator==(const SplitSpec&) const = default;

    // Pair indices for a split name such as "s1-test", "s0-valid" or "train".
    const std::vector<std::size_t>& select(const std::string& name) const;
    bool is_emerging(EntityId drug) const;
};

// Emerging drugs are floor(fraction * |drugs|) drugs drawn by seed. Pairs are
// routed by their number of emerging endpoints (0 -> train, 1 -> S1, 2 -> S2)
// and S1/S2 are halved into valid/test. With s0_fraction > 0 that share of the
// non-emerging pairs is held out (half valid, half test) as the S0 setting.
SplitSpec make_splits(const DdiDataset& dataset, double emerging_fraction, std::uint64_t seed,
                      double s0_fraction = 0.0);

// Throws Error naming the first violated split invariant.
void validate_splits(const SplitSpec& splits, const DdiDataset& dataset);

void save_splits(const SplitSpec& splits, const std::string& path);
// Emerging drugs may be listed as ids or as entity names.
SplitSpec load_splits(const std::string& path, const EntityRegistry& registry);

}  // namespace casekg::kg

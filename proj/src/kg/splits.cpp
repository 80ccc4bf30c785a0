#include "casekg/kg/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "casekg/rng.hpp"

namespace casekg::kg {

using nlohmann::json;

const std::vector<std::size_t>& SplitSpec::select(const std::string& name) const {
    if (name == "train") return train;
    if (name == "s0-valid") return valid_s0;
    if (name == "s0-test") return test_s0;
    if (name == "s1-valid") return valid_s1;
    if (name == "s1-test") return test_s1;
    if (name == "s2-valid") return valid_s2;
    if (name == "s2-test") return test_s2;
    throw Error("unknown split name: " + name);
}

bool SplitSpec::is_emerging(EntityId drug) const {
    return std::binary_search(emerging_drugs.begin(), emerging_drugs.end(), drug);
}

namespace {

void halve(std::vector<std::size_t> items, Rng& rng, std::vector<std::size_t>& first,
           std::vector<std::size_t>& second) {
    rng.shuffle(std::span<std::size_t>(items));
    const std::size_t cut = items.size() / 2;
    first.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(cut));
    second.assign(items.begin() + static_cast<std::ptrdiff_t>(cut), items.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
}

}  // namespace

SplitSpec make_splits(const DdiDataset& dataset, double emerging_fraction, std::uint64_t seed, double s0_fraction) {
    if (dataset.size() == 0) throw Error("cannot split an empty dataset");
    if (!(emerging_fraction > 0.0 && emerging_fraction < 1.0)) {
        throw Error("emerging fraction must lie in (0, 1)");
    }
    if (!(s0_fraction >= 0.0 && s0_fraction < 1.0)) throw Error("S0 fraction must lie in [0, 1)");

    std::vector<EntityId> drugs = dataset.drugs();
    const auto n_emerging =
        static_cast<std::size_t>(std::floor(emerging_fraction * static_cast<double>(drugs.size()) + 1e-9));
    if (n_emerging == 0) throw Error("emerging fraction selects zero emerging drugs");
    if (n_emerging >= drugs.size()) throw Error("emerging fraction leaves no existing drug");

    Rng rng(seed);
    rng.shuffle(std::span<EntityId>(drugs));
    SplitSpec out;
    out.seed = seed;
    out.emerging_drugs.assign(drugs.begin(), drugs.begin() + static_cast<std::ptrdiff_t>(n_emerging));
    std::sort(out.emerging_drugs.begin(), out.emerging_drugs.end());

    std::vector<std::size_t> known, s1, s2;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto p = dataset.pair(i);
        const int count = (out.is_emerging(p.u) ? 1 : 0) + (out.is_emerging(p.v) ? 1 : 0);
        (count == 0 ? known : count == 1 ? s1 : s2).push_back(i);
    }

    if (s0_fraction > 0.0 && !known.empty()) {
        rng.shuffle(std::span<std::size_t>(known));
        const auto held = static_cast<std::size_t>(std::floor(s0_fraction * static_cast<double>(known.size())));
        std::vector<std::size_t> s0(known.begin(), known.begin() + static_cast<std::ptrdiff_t>(held));
        known.erase(known.begin(), known.begin() + static_cast<std::ptrdiff_t>(held));
        halve(std::move(s0), rng, out.valid_s0, out.test_s0);
    }
    std::sort(known.begin(), known.end());
    out.train = std::move(known);
    halve(std::move(s1), rng, out.valid_s1, out.test_s1);
    halve(std::move(s2), rng, out.valid_s2, out.test_s2);
    return out;
}

void validate_splits(const SplitSpec& splits, const DdiDataset& dataset) {
    std::vector<int> seen(dataset.size(), 0);
    auto check = [&](const std::vector<std::size_t>& list, const char* name, int emerging_endpoints) {
        for (std::size_t i : list) {
            if (i >= dataset.size()) throw Error(std::string(name) + ": pair index out of range");
            ++seen[i];
            const auto p = dataset.pair(i);
            const int count = (splits.is_emerging(p.u) ? 1 : 0) + (splits.is_emerging(p.v) ? 1 : 0);
            if (count != emerging_endpoints) {
                throw Error(std::string(name) + ": pair " + std::to_string(i) + " has " + std::to_string(count) +
                            " emerging endpoints, expected " + std::to_string(emerging_endpoints));
            }
        }
    };
    if (!std::is_sorted(splits.emerging_drugs.begin(), splits.emerging_drugs.end())) {
        throw Error("emerging drug list must be sorted");
    }
    check(splits.train, "train", 0);
    check(splits.valid_s0, "valid_s0", 0);
    check(splits.test_s0, "test_s0", 0);
    check(splits.valid_s1, "valid_s1", 1);
    check(splits.test_s1, "test_s1", 1);
    check(splits.valid_s2, "valid_s2", 2);
    check(splits.test_s2, "test_s2", 2);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] != 1) {
            throw Error("splits do not partition the dataset: pair " + std::to_string(i) + " appears " +
                        std::to_string(seen[i]) + " times");
        }
    }
}

void save_splits(const SplitSpec& splits, const std::string& path) {
    json doc;
    doc["emerging_drugs"] = splits.emerging_drugs;
    doc["train"] = splits.train;
    doc["valid_s0"] = splits.valid_s0;
    doc["test_s0"] = splits.test_s0;
    doc["valid_s1"] = splits.valid_s1;
    doc["test_s1"] = splits.test_s1;
    doc["valid_s2"] = splits.valid_s2;
    doc["test_s2"] = splits.test_s2;
    doc["seed"] = splits.seed;
    std::ofstream out(path);
    if (!out) throw Error("cannot write split file: " + path);
    out << doc.dump(1) << '\n';
}

SplitSpec load_splits(const std::string& path, const EntityRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("split file " + path + ": " + e.what());
    }
    SplitSpec out;
    try {
        for (const auto& d : doc.at("emerging_drugs")) {
            if (d.is_string()) {
                const auto id = registry.find(d.get<std::string>());
                if (!id) throw NotFoundError("split file names unknown drug " + d.get<std::string>());
                out.emerging_drugs.push_back(*id);
            } else {
                out.emerging_drugs.push_back(d.get<EntityId>());
            }
        }
        std::sort(out.emerging_drugs.begin(), out.emerging_drugs.end());
        out.train = doc.at("train").get<std::vector<std::size_t>>();
        out.valid_s1 = doc.at("valid_s1").get<std::vector<std::size_t>>();
        out.test_s1 = doc.at("test_s1").get<std::vector<std::size_t>>();
        out.valid_s2 = doc.at("valid_s2").get<std::vector<std::size_t>>();
        out.test_s2 = doc.at("test_s2").get<std::vector<std::size_t>>();
        out.valid_s0 = doc.value("valid_s0", std::vector<std::size_t>{});
        out.test_s0 = doc.value("test_s0", std::vector<std::size_t>{});
        out.seed = doc.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw Error("split file " + path + ": " + e.what());
    }
    return out;
}

}  // namespace casekg::kg

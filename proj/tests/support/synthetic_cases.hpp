#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "casekg/cases/repository.hpp"
#include "casekg/rng.hpp"

namespace casekg::testing {

inline std::vector<double> unit(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
    return v;
}

inline std::vector<double> random_unit(int dim, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.normal();
    return unit(std::move(v));
}

// Unit vector near `center`, perturbed by isotropic noise of scale `spread`.
inline std::vector<double> near(const std::vector<double>& center, double spread, Rng& rng) {
    std::vector<double> v(center);
    for (auto& x : v) x += spread * rng.normal();
    return unit(std::move(v));
}

inline cases::Case make_case(std::size_t i, int embed_dim, int hidden, kg::LabelId label, Rng& rng) {
    cases::Case c;
    c.case_id = "case-" + std::to_string(100000 + i);
    c.drug_names = {"d" + std::to_string(2 * i), "d" + std::to_string(2 * i + 1)};
    c.drug_ids = {static_cast<kg::EntityId>(2 * i), static_cast<kg::EntityId>(2 * i + 1)};
    c.descriptions = {"first drug " + std::to_string(i), "second drug " + std::to_string(i)};
    c.paths = {"d --r--> g --r--> d"};
    c.h_c.resize(static_cast<std::size_t>(2 * hidden));
    for (auto& x : c.h_c) x = rng.uniform(-1.0, 1.0);
    c.mechanism = "mechanism " + std::to_string(i);
    c.labels = {label};
    c.sem_vec = random_unit(embed_dim, rng);
    c.mech_vec = random_unit(embed_dim, rng);
    return c;
}

}  // namespace casekg::testing

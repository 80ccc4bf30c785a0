#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "casekg/cases/repository.hpp"

namespace casekg::testing {

inline double plain_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct Ranked {
    std::string case_id;
    double score;
};

// Scores every case, sorts everything, keeps the first k.
inline std::vector<Ranked> brute_force_retrieve(const cases::Repository& repo, const cases::RetrievalQuery& q) {
    std::vector<Ranked> all;
    for (const auto& c : repo.cases()) {
        if (q.exclude_pair) {
            const auto p = *q.exclude_pair;
            const bool same = (c.drug_ids[0] == p[0] && c.drug_ids[1] == p[1]) ||
                              (c.drug_ids[0] == p[1] && c.drug_ids[1] == p[0]);
            if (same) continue;
        }
        double sem = plain_cosine(q.sem_vec, c.sem_vec);
        if (q.sem_vec_swapped) sem = std::max(sem, plain_cosine(*q.sem_vec_swapped, c.sem_vec));
        const double st = plain_cosine(q.h_p, c.h_c);
        all.push_back({c.case_id, q.lambda * sem + (1.0 - q.lambda) * st});
    }
    std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
        return a.score > b.score || (a.score == b.score && a.case_id < b.case_id);
    });
    if (all.size() > q.k) all.resize(q.k);
    return all;
}

}  // namespace casekg::testing

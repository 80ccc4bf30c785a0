#include <algorithm>
#include <map>

#include "casekg/cases/repository.hpp"
#include "casekg/embedding/text_embedding.hpp"
#include "casekg/error.hpp"

namespace casekg::cases {

std::vector<RetrievalHit> retrieve(const Repository& repo, const RetrievalQuery& query) {
    if (repo.empty()) throw Error("cannot retrieve from an empty repository");
    if (!(query.lambda >= 0.0 && query.lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
    if (query.k < 1) throw Error("k must be at least 1");

    std::vector<RetrievalHit> hits;
    hits.reserve(repo.size());
    const auto& cases = repo.cases();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& c = cases[i];
        if (query.exclude_pair) {
            const auto [a, b] = *query.exclude_pair;
            if ((c.drug_ids[0] == a && c.drug_ids[1] == b) || (c.drug_ids[0] == b && c.drug_ids[1] == a)) continue;
        }
        RetrievalHit h;
        h.index = i;
        h.case_id = c.case_id;
        h.semantic = embedding::cosine(query.sem_vec, c.sem_vec);
        if (query.sem_vec_swapped) {
            h.semantic = std::max(h.semantic, embedding::cosine(*query.sem_vec_swapped, c.sem_vec));
        }
        h.structural = embedding::cosine(query.h_p, c.h_c);
        h.score = query.lambda * h.semantic + (1.0 - query.lambda) * h.structural;
        hits.push_back(std::move(h));
    }
    const auto keep = std::min(query.k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      [](const RetrievalHit& a, const RetrievalHit& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.case_id < b.case_id;
                      });
    hits.resize(keep);
    return hits;
}

double retrieval_majority_accuracy(const Repository& repo, std::span<const LabeledQuery> queries, double lambda,
                                   std::size_t k) {
    if (queries.empty()) throw Error("query set is empty");
    std::size_t correct = 0;
    for (const auto& q : queries) {
        if (q.labels.empty()) throw Error("query without a ground-truth label");
        RetrievalQuery query = q.query;
        query.lambda = lambda;
        query.k = k;
        const auto hits = retrieve(repo, query);
        std::map<kg::LabelId, std::pair<std::size_t, double>> votes;  // label -> (count, summed score)
        for (const auto& h : hits) {
            auto& v = votes[repo.at(h.index).category()];
            ++v.first;
            v.second += h.score;
        }
        if (votes.empty()) continue;
        auto best = votes.begin();
        for (auto it = std::next(votes.begin()); it != votes.end(); ++it) {
            const auto& [n, s] = it->second;
            if (n > best->second.first || (n == best->second.first && s > best->second.second)) best = it;
        }
        if (std::find(q.labels.begin(), q.labels.end(), best->first) != q.labels.end()) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(queries.size());
}

}  // namespace casekg::cases

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "casekg/cases/repository.hpp"
#include "casekg/embedding/text_embedding.hpp"
#include "casekg/error.hpp"

namespace casekg::cases {

namespace {

struct Nearest {
    std::vector<std::size_t> first;  // medoid slot
    std::vector<double> d1;
    std::vector<double> d2;
};

Nearest nearest_medoids(const std::vector<double>& dist, std::size_t n, const std::vector<std::size_t>& medoids) {
    Nearest out{std::vector<std::size_t>(n), std::vector<double>(n), std::vector<double>(n)};
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        double best = inf, second = inf;
        std::size_t slot = 0;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            const double d = dist[j * n + medoids[m]];
            if (d < best) {
                second = best;
                best = d;
                slot = m;
            } else if (d < second) {
                second = d;
            }
        }
        out.first[j] = slot;
        out.d1[j] = best;
        out.d2[j] = second;
    }
    return out;
}

}  // namespace

KMedoidsResult k_medoids(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t /*seed*/) {
    const std::size_t n = points.size();
    if (k < 1) throw Error("k must be at least 1");
    if (k > n) throw Error("k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::max(0.0, 1.0 - embedding::cosine(points[i], points[j]));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // BUILD: the most central point, then repeatedly the point that lowers the
    // cost the most. Ties go to the smaller index.
    std::vector<std::size_t> medoids;
    std::vector<char> is_medoid(n, 0);
    std::vector<double> current(n, std::numeric_limits<double>::infinity());
    while (medoids.size() < k) {
        std::size_t pick = n;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = dist[j * n + i];
                gain += medoids.empty() ? -d : std::max(0.0, current[j] - d);
            }
            if (gain > best_gain) {
                best_gain = gain;
                pick = i;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = 1;
        for (std::size_t j = 0; j < n; ++j) current[j] = std::min(current[j], dist[j * n + pick]);
    }

    // SWAP: removing slot m and adding x changes point j's distance by
    //   min(d(j,x), d2_j) - d1_j   if m is j's nearest medoid
    //   min(0, d(j,x) - d1_j)      otherwise.
    // The second case does not depend on m, so it is accumulated once.
    if (k < n) {
        for (int iter = 0; iter < 100000; ++iter) {
            const auto near = nearest_medoids(dist, n, medoids);
            double best_delta = -1e-12;
            std::size_t best_slot = k, best_x = n;
            std::vector<double> delta(k);
            for (std::size_t x = 0; x < n; ++x) {
                if (is_medoid[x]) continue;
                std::fill(delta.begin(), delta.end(), 0.0);
                double shared = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double djx = dist[j * n + x];
                    if (djx < near.d1[j]) {
                        shared += djx - near.d1[j];
                    } else {
                        delta[near.first[j]] += std::min(djx, near.d2[j]) - near.d1[j];
                    }
                }
                for (std::size_t m = 0; m < k; ++m) {
                    if (shared + delta[m] < best_delta) {
                        best_delta = shared + delta[m];
                        best_slot = m;
                        best_x = x;
                    }
                }
            }
            if (best_x == n) break;
            is_medoid[medoids[best_slot]] = 0;
            is_medoid[best_x] = 1;
            medoids[best_slot] = best_x;
        }
    }

    std::sort(medoids.begin(), medoids.end());
    KMedoidsResult result;
    const auto near = nearest_medoids(dist, n, medoids);
    result.medoids = medoids;
    result.assignment = near.first;
    for (std::size_t j = 0; j < n; ++j) result.cost += near.d1[j];
    return result;
}

std::size_t refined_size(std::size_t n, const RefinementConfig& config) {
    const auto share = static_cast<std::size_t>(std::ceil(config.keep_fraction * static_cast<double>(n) - 1e-9));
    return std::min(n, std::max(config.min_per_category, share));
}

Repository refine(const Repository& repo, RefinementReport* report) {
    if (repo.empty()) throw Error("cannot refine an empty repository");
    std::vector<std::size_t> keep;
    RefinementReport local;
    for (const auto& [label, ids] : repo.categories()) {
        std::vector<std::size_t> members;
        std::vector<std::vector<double>> vecs;
        for (const auto& id : ids) {
            const Case* c = repo.find(id);
            members.push_back(static_cast<std::size_t>(c - repo.cases().data()));
            vecs.push_back(c->mech_vec);
        }
        const std::size_t k = refined_size(members.size(), repo.config());
        const auto clusters = k_medoids(vecs, k, repo.config().seed);
        for (const std::size_t m : clusters.medoids) keep.push_back(members[m]);
        local.categories[label] = {members.size(), k, k};
    }
    std::sort(keep.begin(), keep.end());
    local.before = repo.size();
    local.after = keep.size();
    if (report != nullptr) *report = std::move(local);
    return repo.retain(keep);
}

std::string report_json(const RefinementReport& report, const std::vector<std::string>* label_names) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [label, r] : report.categories) {
        const std::string key = label_names != nullptr && label < label_names->size() ? (*label_names)[label]
                                                                                      : std::to_string(label);
        j[key] = {{"before", r.before}, {"after", r.after}, {"k", r.k}};
    }
    return j.dump(2);
}

}  // namespace casekg::cases

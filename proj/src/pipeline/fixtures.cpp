#include "casekg/pipeline/fixtures.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "casekg/error.hpp"

namespace casekg::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& planted_label_names() {
    static const std::vector<std::string> names = {
        "amplifies sedation",    "reduces clearance",   "raises bleeding risk", "blunts absorption",
        "prolongs repolarization", "elevates potassium", "lowers seizure threshold", "masks hypoglycemia"};
    return names;
}

const std::vector<std::string>& planted_keywords() {
    static const std::vector<std::string> words = {"serotonergic", "cyp3a4",     "antiplatelet", "chelation",
                                                   "herg",         "aldosterone", "gabaergic",    "adrenergic"};
    return words;
}

namespace {

std::string numbered(const char* prefix, std::size_t i, const char* suffix = "") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%04zu%s", prefix, i, suffix);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace

std::string write_planted_fixture(const std::string& dir, const PlantedSpec& spec) {
    const auto& names = planted_label_names();
    const auto& keywords = planted_keywords();
    if (spec.classes < 2 || spec.classes > names.size()) {
        throw Error("planted fixture supports 2 to " + std::to_string(names.size()) + " classes");
    }
    if (spec.pairs < spec.classes) throw Error("planted fixture needs at least one pair per class");
    fs::create_directories(dir);
    const fs::path root(dir);

    auto graph = open_out(root / "graph.tsv");
    auto ddi = open_out(root / "ddi.tsv");
    // Pair p has class p % classes; the seed rotates which class comes first.
    for (std::size_t p = 0; p < spec.pairs; ++p) {
        const std::size_t c = (p + spec.seed) % spec.classes;
        const auto u = numbered("DRUG-", 2 * p);
        const auto v = numbered("DRUG-", 2 * p + 1);
        const auto gene = numbered("GENE-", p);
        const std::string rel = "binds-site-" + std::to_string(c + 1);
        graph << u << '\t' << rel << '\t' << gene << '\n' << v << '\t' << rel << '\t' << gene << '\n';
        ddi << u << '\t' << v << '\t' << names[c] << '\n';
    }

    auto labels = open_out(root / "labels.txt");
    json rules = json::array();
    for (std::size_t c = 0; c < spec.classes; ++c) {
        labels << names[c] << '\n';
        rules.push_back({{"pattern", names[c]},
                         {"mechanism", "Shared " + keywords[c] + " activity links the two drugs."}});
    }
    for (std::size_t c = 0; c < spec.classes; ++c) rules.push_back({{"pattern", keywords[c]}, {"label", names[c]}});
    const json policy = {{"rules", rules},
                         {"default",
                          {{"description", "A small-molecule drug with an unremarkable profile."},
                           {"mechanism", "No shared mechanism is evident."},
                           {"label", names[0]}}}};
    open_out(root / "mock.json") << policy.dump(2) << '\n';

    const json config = {
        {"task_mode", "multiclass"},
        {"seed", spec.seed},
        {"lambda", 0.5},
        {"k", 5},
        {"paths", 5},
        {"candidates", spec.classes},
        {"layers", 2},
        {"emerging_fraction", 0.2},
        {"repository_sample", 1.0},
        {"gnn", {{"hidden", 16}, {"activation", "relu"}, {"learning_rate", 0.05}, {"epochs", 60}, {"batch_size", 16}}},
        {"embedding", {{"provider", "hashed"}, {"dim", 64}}},
        {"chat", {{"backend", "mock"}, {"mock_policy", "mock.json"}}},
        {"data",
         {{"graph", "graph.tsv"},
          {"dataset", "ddi.tsv"},
          {"labels", "labels.txt"},
          {"bundle", "work/bundle.ckgb"},
          {"splits", "work/splits.json"},
          {"checkpoint", "work/gnn.json"},
          {"repository", "work/repository.jsonl"},
          {"output_dir", "out"}}}};
    const auto config_path = root / "config.json";
    open_out(config_path) << config.dump(2) << '\n';
    return config_path.string();
}

}  // namespace casekg::pipeline

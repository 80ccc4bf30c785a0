#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace casekg::pipeline {

// A toy interaction task whose answer is recoverable end to end. Every drug
// sits in exactly one pair, each pair shares a private gene, and the relation
// both drugs use to reach that gene encodes the class. The mock policy maps a
// class label to a mechanism carrying a class keyword, and that keyword back
// to the label, so a correctly retrieved case decides the answer.
struct PlantedSpec {
    std::size_t pairs = 200;
    std::size_t classes = 4;  // at most planted_label_names().size()
    std::uint64_t seed = 0;
};

const std::vector<std::string>& planted_label_names();
const std::vector<std::string>& planted_keywords();

// Writes graph.tsv, ddi.tsv, labels.txt, mock.json and config.json into
// `dir` (created if missing). Returns the config path.
std::string write_planted_fixture(const std::string& dir, const PlantedSpec& spec);

}  // namespace casekg::pipeline

#pragma once

#include <span>
#include <string>
#include <vector>

#include "casekg/kg/dataset.hpp"
#include "casekg/llm/chat_client.hpp"

namespace casekg::llm {

struct Candidate {
    kg::LabelId id = 0;
    std::string name;
};

// One retrieved case as shown to the model.
struct CaseBlock {
    std::string drug_u;
    std::string drug_v;
    std::vector<std::string> paths;
    std::string mechanism;
    std::vector<std::string> labels;
};

struct PromptBundle {
    std::string task_description;
    std::string drug_u;
    std::string drug_v;
    std::vector<CaseBlock> cases;
    std::vector<std::string> paths;
    std::vector<Candidate> candidates;
    bool with_cases = true;
    bool with_assoc = true;
    std::size_t mechanism_budget = 600;  // characters of each case mechanism
    kg::TaskMode mode = kg::TaskMode::multiclass;
};

std::string default_task_description(kg::TaskMode mode);

// Sections in order: task description, reference cases, drug associations,
// numbered candidates, answer format.
std::string render_prompt(const PromptBundle& bundle);

enum class ParseStatus { clean, repaired, fallback };
std::string to_string(ParseStatus s);

struct Prediction {
    std::string mechanism;
    std::vector<kg::LabelId> labels;  // one for multiclass, five for multilabel
    std::string raw;
    ParseStatus status = ParseStatus::fallback;
};

// Reads the "Mechanism:" and "Answer:" sections. Answers are matched to the
// candidates by name (case-insensitive) or by list number; otherwise snapped
// to the candidate sharing the most word tokens, else the first candidate.
// Multilabel answers are split on commas, semicolons and newlines, and padded
// from candidate order up to five labels.
Prediction parse_prediction(std::string_view raw, std::span<const Candidate> candidates, kg::TaskMode mode);

std::string generate_description(ChatClient& client, const std::string& drug_name);

std::string distill_mechanism(ChatClient& client, const std::string& drug_u, const std::string& drug_v,
                              const std::string& label_name, std::span<const std::string> paths);

Prediction predict(ChatClient& client, const PromptBundle& bundle);

std::string revise_mechanism(ChatClient& client, const std::string& case_text, const std::string& correct_label);

// Plain-text rendering of a case used by revise_mechanism.
std::string render_case(const CaseBlock& block, std::size_t mechanism_budget = 600);

}  // namespace casekg::llm

#include "casekg/llm/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "casekg/error.hpp"
#include "casekg/text.hpp"

namespace casekg::llm {

namespace {

constexpr const char* kSystem = "You are an expert clinical pharmacologist. Answer precisely and concisely.";

ChatRequest make_request(RequestKind kind, std::string prompt) {
    return {kind, {{"system", kSystem}, {"user", std::move(prompt)}}};
}

std::string nonempty(std::string reply, const char* what) {
    if (text::trim(reply).empty()) throw Error(std::string("model returned an empty ") + what);
    return text::trim(reply);
}

std::string truncate(const std::string& s, std::size_t budget) {
    if (s.size() <= budget) return s;
    std::size_t cut = budget;
    // Do not split a UTF-8 sequence.
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut) + "...";
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

std::string clean_item(std::string_view raw) {
    std::string s = text::trim(raw);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '"' || s.front() == '\'' ||
                          s.front() == '[' || s.front() == '(')) {
        s = text::trim(s.substr(1));
    }
    while (!s.empty() && (s.back() == '.' || s.back() == '"' || s.back() == '\'' || s.back() == ']' ||
                          s.back() == ')')) {
        s = text::trim(s.substr(0, s.size() - 1));
    }
    return s;
}

struct Resolved {
    std::size_t index;
    bool exact;
};

std::optional<Resolved> resolve(std::string_view raw, std::span<const Candidate> candidates) {
    std::string item = clean_item(raw);
    if (item.empty()) return std::nullopt;

    auto exact_name = [&](std::string_view s) -> std::optional<std::size_t> {
        const std::string n = text::normalize(s);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (text::normalize(candidates[i].name) == n) return i;
        }
        return std::nullopt;
    };
    if (auto i = exact_name(item)) return Resolved{*i, true};

    std::size_t digits = 0;
    while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) ++digits;
    if (digits > 0 && digits <= 4) {
        const std::size_t number = std::stoul(item.substr(0, digits));
        const std::string rest = clean_item(std::string_view(item).substr(digits));
        if (rest.empty()) {
            if (number >= 1 && number <= candidates.size()) return Resolved{number - 1, true};
        } else if (auto i = exact_name(rest)) {
            return Resolved{*i, true};
        } else if ((item[digits] == '.' || item[digits] == ')') && number >= 1 && number <= candidates.size()) {
            item = rest;  // "2. something else": judge the text
        }
    }

    const auto words = text::tokens(item);
    const std::set<std::string> mine(words.begin(), words.end());
    std::size_t best = 0, best_index = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto theirs = text::tokens(candidates[i].name);
        const std::set<std::string> other(theirs.begin(), theirs.end());
        std::size_t shared = 0;
        for (const auto& w : other) shared += mine.contains(w);
        if (shared > best) {
            best = shared;
            best_index = i;
        }
    }
    if (best == 0) return std::nullopt;
    return Resolved{best_index, false};
}

}  // namespace

std::string default_task_description(kg::TaskMode mode) {
    if (mode == kg::TaskMode::multiclass) {
        return "Task: determine the type of drug-drug interaction between Drug A and Drug B. Use the reference "
               "cases, which are similar drug pairs with known outcomes, and the drug associations from a "
               "biomedical knowledge graph. Choose exactly one answer from the candidates.";
    }
    return "Task: recommend the five most likely drug-drug interactions between Drug A and Drug B. Use the "
           "reference cases, which are similar drug pairs with known outcomes, and the drug associations from a "
           "biomedical knowledge graph. Choose five answers from the candidates, most likely first.";
}

std::string render_case(const CaseBlock& block, std::size_t mechanism_budget) {
    std::string out = "Drugs: " + block.drug_u + " and " + block.drug_v + "\n";
    if (!block.paths.empty()) {
        out += "Associations:\n";
        for (const auto& p : block.paths) out += "- " + p + "\n";
    }
    out += "Mechanism: " + truncate(block.mechanism, mechanism_budget) + "\n";
    out += "Type: " + join(block.labels, "; ") + "\n";
    return out;
}

std::string render_prompt(const PromptBundle& bundle) {
    if (bundle.candidates.empty()) throw Error("prompt needs at least one candidate");
    std::string out = bundle.task_description.empty() ? default_task_description(bundle.mode) : bundle.task_description;
    out += "\n\nDrug A: " + bundle.drug_u + "\nDrug B: " + bundle.drug_v + "\n";
    if (bundle.with_cases && !bundle.cases.empty()) {
        out += "\nReference cases:\n";
        for (std::size_t i = 0; i < bundle.cases.size(); ++i) {
            out += "Case " + std::to_string(i + 1) + ":\n" + render_case(bundle.cases[i], bundle.mechanism_budget);
        }
    }
    if (bundle.with_assoc && !bundle.paths.empty()) {
        out += "\nDrug associations:\n";
        for (const auto& p : bundle.paths) out += "- " + p + "\n";
    }
    out += "\nCandidates:\n";
    for (std::size_t i = 0; i < bundle.candidates.size(); ++i) {
        out += std::to_string(i + 1) + ". " + bundle.candidates[i].name + "\n";
    }
    if (bundle.mode == kg::TaskMode::multiclass) {
        out += "\nReply in exactly this format:\nMechanism: <the likely mechanism in one or two sentences>\n"
               "Answer: <one candidate, copied verbatim>\n";
    } else {
        out += "\nReply in exactly this format:\nMechanism: <the likely mechanism in one or two sentences>\n"
               "Answer: <five candidates copied verbatim, separated by semicolons, most likely first>\n";
    }
    return out;
}

std::string to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::clean: return "clean";
        case ParseStatus::repaired: return "repaired";
        case ParseStatus::fallback: return "fallback";
    }
    return "fallback";
}

Prediction parse_prediction(std::string_view raw, std::span<const Candidate> candidates, kg::TaskMode mode) {
    if (candidates.empty()) throw Error("cannot parse a prediction without candidates");
    Prediction p;
    p.raw = std::string(raw);

    // Last "Answer:" wins; the mechanism runs from "Mechanism:" up to it.
    std::size_t answer_at = std::string_view::npos;
    for (std::size_t at = text::ifind(raw, "answer:"); at != std::string_view::npos;
         at = text::ifind(raw, "answer:", at + 1)) {
        answer_at = at;
    }
    const std::size_t mech_at = text::ifind(raw, "mechanism:");
    if (mech_at != std::string_view::npos && (answer_at == std::string_view::npos || mech_at < answer_at)) {
        const auto start = mech_at + 10;
        const auto end = answer_at == std::string_view::npos ? raw.size() : answer_at;
        p.mechanism = text::trim(raw.substr(start, end - start));
    }

    const std::size_t want = mode == kg::TaskMode::multiclass ? 1 : std::min<std::size_t>(5, candidates.size());
    auto fallback = [&] {
        p.labels.clear();
        for (std::size_t i = 0; i < want; ++i) p.labels.push_back(candidates[i].id);
        p.status = ParseStatus::fallback;
        return p;
    };
    if (answer_at == std::string_view::npos) return fallback();
    const std::string_view answer = raw.substr(answer_at + 7);

    if (mode == kg::TaskMode::multiclass) {
        std::string first;
        for (const auto& line : text::split(answer, '\n')) {
            if (!text::trim(line).empty()) {
                first = line;
                break;
            }
        }
        const auto r = resolve(first, candidates);
        if (!r) return fallback();
        p.labels = {candidates[r->index].id};
        p.status = r->exact ? ParseStatus::clean : ParseStatus::repaired;
        return p;
    }

    std::string items(answer);
    std::replace(items.begin(), items.end(), ';', ',');
    std::replace(items.begin(), items.end(), '\n', ',');
    bool all_exact = true;
    std::vector<std::size_t> picked;
    for (const auto& item : text::split(items, ',')) {
        if (text::trim(item).empty()) continue;
        const auto r = resolve(item, candidates);
        if (!r) {
            all_exact = false;
            continue;
        }
        all_exact = all_exact && r->exact;
        if (std::find(picked.begin(), picked.end(), r->index) == picked.end()) picked.push_back(r->index);
    }
    if (picked.empty()) return fallback();
    if (picked.size() > want) picked.resize(want);
    const bool padded = picked.size() < want;
    for (std::size_t i = 0; picked.size() < want; ++i) {
        if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
    }
    for (const auto i : picked) p.labels.push_back(candidates[i].id);
    p.status = all_exact && !padded ? ParseStatus::clean : ParseStatus::repaired;
    return p;
}

std::string generate_description(ChatClient& client, const std::string& drug_name) {
    if (text::trim(drug_name).empty()) throw std::invalid_argument("drug name is empty");
    const std::string prompt = "Drug: " + drug_name +
                               "\nWrite a concise functional description of this drug: its class, main targets "
                               "and principal pharmacological action. Reply with the description only.";
    return nonempty(client.complete(make_request(RequestKind::description, prompt)), "description");
}

std::string distill_mechanism(ChatClient& client, const std::string& drug_u, const std::string& drug_v,
                              const std::string& label_name, std::span<const std::string> paths) {
    if (text::trim(label_name).empty()) throw std::invalid_argument("interaction label is empty");
    std::string prompt = "Interaction type: " + label_name + "\nDrug A: " + drug_u + "\nDrug B: " + drug_v + "\n";
    if (!paths.empty()) {
        prompt += "Drug associations:\n";
        for (const auto& p : paths) prompt += "- " + p + "\n";
    }
    prompt += "Explain clearly and accurately the pharmacological mechanism that produces this interaction type "
              "for these two drugs. Reply with the mechanism only.";
    return nonempty(client.complete(make_request(RequestKind::mechanism, prompt)), "mechanism");
}

Prediction predict(ChatClient& client, const PromptBundle& bundle) {
    const std::string prompt = render_prompt(bundle);
    const std::string raw = client.complete(make_request(RequestKind::predict, prompt));
    return parse_prediction(raw, bundle.candidates, bundle.mode);
}

std::string revise_mechanism(ChatClient& client, const std::string& case_text, const std::string& correct_label) {
    if (text::trim(correct_label).empty()) throw std::invalid_argument("correct label is empty");
    const std::string prompt = "Correct interaction type: " + correct_label +
                               "\nThe case below was answered incorrectly:\n" + case_text +
                               "\nRewrite the mechanism so that it explains the correct interaction type. Reply "
                               "with the mechanism only.";
    return nonempty(client.complete(make_request(RequestKind::revise, prompt)), "revised mechanism");
}

}  // namespace casekg::llm

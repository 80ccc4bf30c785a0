#include "casekg/cases/repository.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "casekg/error.hpp"

namespace casekg::cases {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "casekg-repository";
constexpr int kVersion = 1;

void check_unit(const std::vector<double>& v, int dim, const std::string& what, const std::string& id) {
    if (static_cast<int>(v.size()) != dim) {
        throw ShapeError(what + " of case " + id + " has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dim));
    }
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(what + " of case " + id + " is not finite");
        sq += x * x;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) throw Error(what + " of case " + id + " is not unit norm");
}

json config_to_json(const RefinementConfig& c) {
    return {{"size_threshold", c.size_threshold},
            {"new_case_trigger", c.new_case_trigger},
            {"keep_fraction", c.keep_fraction},
            {"min_per_category", c.min_per_category},
            {"seed", c.seed}};
}

RefinementConfig config_from_json(const json& j) {
    RefinementConfig c;
    c.size_threshold = j.at("size_threshold").get<std::size_t>();
    c.new_case_trigger = j.at("new_case_trigger").get<std::size_t>();
    c.keep_fraction = j.at("keep_fraction").get<double>();
    c.min_per_category = j.at("min_per_category").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json case_to_json(const Case& c) {
    return {{"case_id", c.case_id},
            {"drugs", json::array({{{"name", c.drug_names[0]}, {"id", c.drug_ids[0]}},
                                   {{"name", c.drug_names[1]}, {"id", c.drug_ids[1]}}})},
            {"descriptions", c.descriptions},
            {"paths", c.paths},
            {"h_c", c.h_c},
            {"mechanism", c.mechanism},
            {"labels", c.labels},
            {"sem_vec", c.sem_vec},
            {"mech_vec", c.mech_vec},
            {"created_at", c.created_at},
            {"revised", c.revised}};
}

Case case_from_json(const json& j) {
    Case c;
    c.case_id = j.at("case_id").get<std::string>();
    const auto& drugs = j.at("drugs");
    if (!drugs.is_array() || drugs.size() != 2) throw Error("drugs must list two entries");
    for (std::size_t i = 0; i < 2; ++i) {
        c.drug_names[i] = drugs[i].at("name").get<std::string>();
        c.drug_ids[i] = drugs[i].at("id").get<kg::EntityId>();
    }
    c.descriptions = j.at("descriptions").get<std::array<std::string, 2>>();
    c.paths = j.at("paths").get<std::vector<std::string>>();
    c.h_c = j.at("h_c").get<std::vector<double>>();
    c.mechanism = j.at("mechanism").get<std::string>();
    c.labels = j.at("labels").get<std::vector<kg::LabelId>>();
    c.sem_vec = j.at("sem_vec").get<std::vector<double>>();
    c.mech_vec = j.at("mech_vec").get<std::vector<double>>();
    c.created_at = j.value("created_at", std::uint64_t{0});
    c.revised = j.at("revised").get<bool>();
    return c;
}

}  // namespace

std::string semantic_text(const std::string& description_u, const std::string& description_v) {
    return "Drug A: " + description_u + " Drug B: " + description_v;
}

void RefinementConfig::validate() const {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw Error("keep_fraction must lie in (0, 1]");
    if (min_per_category < 1) throw Error("min_per_category must be at least 1");
    if (new_case_trigger < 1) throw Error("new_case_trigger must be at least 1");
}

Repository::Repository(RepositoryShape shape, RefinementConfig config) : shape_(shape), config_(config) {
    config_.validate();
    if (shape_.embed_dim < 1 || shape_.hidden_dim < 1 || shape_.label_count < 1) {
        throw ShapeError("repository dimensions must be positive");
    }
}

void Repository::set_config(RefinementConfig config) {
    config.validate();
    config_ = config;
}

const Case* Repository::find(const std::string& case_id) const {
    const auto it = index_.find(case_id);
    return it == index_.end() ? nullptr : &cases_[it->second];
}

std::string Repository::next_case_id() const {
    for (std::uint64_t n = clock_ + 1;; ++n) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "case-%06llu", static_cast<unsigned long long>(n));
        if (!index_.contains(buf)) return buf;
    }
}

void Repository::check(const Case& c) const {
    if (c.case_id.empty()) throw Error("case id is empty");
    if (c.labels.empty()) throw Error("case " + c.case_id + " has no label");
    if (!std::is_sorted(c.labels.begin(), c.labels.end()) ||
        std::adjacent_find(c.labels.begin(), c.labels.end()) != c.labels.end()) {
        throw Error("labels of case " + c.case_id + " must be sorted and distinct");
    }
    if (shape_.task_mode == kg::TaskMode::multiclass && c.labels.size() != 1) {
        throw Error("multiclass case " + c.case_id + " must carry exactly one label");
    }
    if (static_cast<int>(c.labels.back()) >= shape_.label_count) {
        throw NotFoundError("case " + c.case_id + " has label " + std::to_string(c.labels.back()) +
                            " outside the vocabulary");
    }
    if (static_cast<int>(c.h_c.size()) != 2 * shape_.hidden_dim) {
        throw ShapeError("h_c of case " + c.case_id + " has dimension " + std::to_string(c.h_c.size()));
    }
    check_unit(c.sem_vec, shape_.embed_dim, "sem_vec", c.case_id);
    check_unit(c.mech_vec, shape_.embed_dim, "mech_vec", c.case_id);
}

void Repository::insert(Case c) {
    check(c);
    if (index_.contains(c.case_id)) throw Error("duplicate case id " + c.case_id);
    c.created_at = ++clock_;
    index_.emplace(c.case_id, cases_.size());
    categories_[c.category()].push_back(c.case_id);
    cases_.push_back(std::move(c));
    ++pending_;
}

void Repository::revise(const std::string& case_id, std::string mechanism, std::vector<double> mech_vec) {
    const auto it = index_.find(case_id);
    if (it == index_.end()) throw NotFoundError("no case with id " + case_id);
    check_unit(mech_vec, shape_.embed_dim, "mech_vec", case_id);
    Case& c = cases_[it->second];
    c.mechanism = std::move(mechanism);
    c.mech_vec = std::move(mech_vec);
    c.revised = true;
}

bool Repository::refinement_due() const {
    if (config_.size_threshold > 0 && cases_.size() > config_.size_threshold) return true;
    return pending_ >= config_.new_case_trigger;
}

Repository Repository::retain(std::span<const std::size_t> indices) const {
    Repository out(shape_, config_);
    out.clock_ = clock_;
    for (const std::size_t i : indices) {
        const Case& c = cases_.at(i);
        if (out.index_.contains(c.case_id)) throw Error("case " + c.case_id + " retained twice");
        out.index_.emplace(c.case_id, out.cases_.size());
        out.categories_[c.category()].push_back(c.case_id);
        out.cases_.push_back(c);
    }
    return out;
}

bool Repository::operator==(const Repository& other) const {
    return shape_ == other.shape_ && config_ == other.config_ && cases_ == other.cases_ &&
           pending_ == other.pending_ && clock_ == other.clock_;
}

void save_repository(const Repository& repo, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write repository " + path);
    const auto& s = repo.shape();
    const json header{{"format", kFormat},
                      {"version", kVersion},
                      {"embed_dim", s.embed_dim},
                      {"hidden_dim", s.hidden_dim},
                      {"label_count", s.label_count},
                      {"task_mode", kg::to_string(s.task_mode)},
                      {"pending", repo.pending()},
                      {"clock", repo.clock()},
                      {"cases", repo.size()},
                      {"refinement", config_to_json(repo.config())}};
    out << header.dump() << '\n';
    for (const auto& c : repo.cases()) out << case_to_json(c).dump() << '\n';
    if (!out) throw Error("failed writing repository " + path);
}

Repository load_repository(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open repository " + path);
    std::string line;
    std::size_t line_no = 0;
    auto parse = [&](const std::string& text) {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
    };

    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
    ++line_no;
    const json header = parse(line);
    Repository repo;
    std::size_t expected = 0;
    try {
        if (header.at("format") != kFormat) throw ParseError(path, 1, "not a repository file");
        if (header.at("version").get<int>() != kVersion) {
            throw Error("repository " + path + " has version " + header.at("version").dump() + ", expected " +
                        std::to_string(kVersion));
        }
        RepositoryShape shape{header.at("embed_dim").get<int>(), header.at("hidden_dim").get<int>(),
                              header.at("label_count").get<int>(),
                              kg::parse_task_mode(header.at("task_mode").get<std::string>())};
        repo = Repository(shape, config_from_json(header.at("refinement")));
        repo.pending_ = header.at("pending").get<std::size_t>();
        repo.clock_ = header.at("clock").get<std::uint64_t>();
        expected = header.at("cases").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ParseError(path, 1, e.what());
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            Case c = case_from_json(parse(line));
            repo.check(c);
            if (repo.index_.contains(c.case_id)) throw Error("duplicate case id " + c.case_id);
            repo.index_.emplace(c.case_id, repo.cases_.size());
            repo.categories_[c.category()].push_back(c.case_id);
            repo.cases_.push_back(std::move(c));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
    }
    if (repo.cases_.size() != expected) {
        throw ParseError(path, line_no + 1,
                         "expected " + std::to_string(expected) + " cases, found " + std::to_string(repo.cases_.size()));
    }
    return repo;
}

InitResult init_repository(std::span<const CaseSeed> seeds, RepositoryShape shape, RefinementConfig config,
                           const MechanismSource& mechanism, const Embedder& embed) {
    if (seeds.empty()) throw Error("cannot build a repository from an empty sample");
    InitResult result{Repository(shape, config), {}};
    for (const auto& seed : seeds) {
        std::string text;
        try {
            text = mechanism(seed);
            if (text.empty()) throw Error("empty mechanism");
        } catch (const std::exception& e) {
            result.warnings.push_back("skipped " + seed.drug_names[0] + " / " + seed.drug_names[1] + ": " + e.what());
            continue;
        }
        Case c;
        c.case_id = result.repository.next_case_id();
        c.drug_names = seed.drug_names;
        c.drug_ids = seed.drug_ids;
        c.descriptions = seed.descriptions;
        c.paths = seed.paths;
        c.h_c = seed.h_c;
        c.labels = seed.labels;
        c.sem_vec = embed(semantic_text(seed.descriptions[0], seed.descriptions[1]));
        c.mech_vec = embed(text);
        c.mechanism = std::move(text);
        result.repository.insert(std::move(c));
    }
    return result;
}

void revise_case(Repository& repo, const std::string& case_id, std::string mechanism, const Embedder& embed) {
    if (repo.find(case_id) == nullptr) throw NotFoundError("no case with id " + case_id);
    auto vec = embed(mechanism);
    repo.revise(case_id, std::move(mechanism), std::move(vec));
}

}  // namespace casekg::cases

#include "casekg/kg/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "casekg/text.hpp"

namespace casekg::kg {

std::string to_string(TaskMode mode) { return mode == TaskMode::multiclass ? "multiclass" : "multilabel"; }

TaskMode parse_task_mode(std::string_view s) {
    if (s == "multiclass") return TaskMode::multiclass;
    if (s == "multilabel") return TaskMode::multilabel;
    throw Error("unknown task mode: " + std::string(s));
}

DdiDataset::DdiDataset() : seals_(std::make_shared<detail::SealState>()) {}

DdiDataset::DdiDataset(TaskMode mode, std::vector<std::string> relation_names)
    : mode_(mode), relation_names_(std::move(relation_names)), seals_(std::make_shared<detail::SealState>()) {}

DdiPair DdiDataset::pair(std::size_t index) const {
    if (index >= pairs_.size()) throw NotFoundError("pair index out of range: " + std::to_string(index));
    return pairs_[index].pair;
}

const std::vector<LabelId>& DdiDataset::labels(std::size_t index) const {
    if (index >= pairs_.size()) throw NotFoundError("pair index out of range: " + std::to_string(index));
    {
        std::lock_guard lock(seals_->mutex);
        if (seals_->sealed.count(index) != 0) {
            throw LabelLeakError("label of pair " + std::to_string(index) + " read while the pair is under evaluation");
        }
    }
    return pairs_[index].labels;
}

void DdiDataset::add_pair(EntityId u, EntityId v, std::vector<LabelId> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.empty()) throw Error("pair without labels");
    if (mode_ == TaskMode::multiclass && labels.size() != 1) {
        throw Error("multiclass pair with " + std::to_string(labels.size()) + " labels");
    }
    for (LabelId l : labels) {
        if (l >= relation_names_.size()) throw NotFoundError("label id out of range: " + std::to_string(l));
    }
    pairs_.push_back(Row{DdiPair{u, v}, std::move(labels)});
}

std::vector<EntityId> DdiDataset::drugs() const {
    std::vector<EntityId> out;
    out.reserve(2 * pairs_.size());
    for (const auto& row : pairs_) {
        out.push_back(row.pair.u);
        out.push_back(row.pair.v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DdiDataset::Seal::Seal(const DdiDataset& dataset, std::size_t index) : state_(dataset.seals_), index_(index) {
    std::lock_guard lock(state_->mutex);
    state_->sealed.insert(index_);
}

DdiDataset::Seal::~Seal() {
    std::lock_guard lock(state_->mutex);
    state_->sealed.erase(state_->sealed.find(index_));
}

DdiDataset load_ddi_dataset(const std::string& path, TaskMode mode, EntityRegistry& registry,
                            const std::vector<std::string>* label_names) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open DDI file: " + path);

    std::vector<std::string> names = label_names ? *label_names : std::vector<std::string>{};
    std::unordered_map<std::string, LabelId> label_index;
    for (std::size_t i = 0; i < names.size(); ++i) label_index.emplace(names[i], static_cast<LabelId>(i));

    struct Pending {
        EntityId u, v;
        std::vector<LabelId> labels;
    };
    std::vector<Pending> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 3) {
            throw ParseError(path, line_no, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
        }
        if (cols[0] == cols[1]) throw ParseError(path, line_no, "pair of a drug with itself");
        std::vector<LabelId> labels;
        for (const auto& raw : text::split(cols[2], ',')) {
            const std::string name = text::trim(raw);
            if (name.empty()) throw ParseError(path, line_no, "empty label");
            auto it = label_index.find(name);
            if (it == label_index.end()) {
                if (label_names) throw ParseError(path, line_no, "unknown label '" + name + "'");
                it = label_index.emplace(name, static_cast<LabelId>(names.size())).first;
                names.push_back(name);
            }
            labels.push_back(it->second);
        }
        if (mode == TaskMode::multiclass && labels.size() > 1) {
            throw ParseError(path, line_no, "multiclass dataset line carries " + std::to_string(labels.size()) + " labels");
        }
        const EntityId u = registry.intern(cols[0]);
        const EntityId v = registry.intern(cols[1]);
        registry.mark_drug(u);
        registry.mark_drug(v);
        rows.push_back(Pending{u, v, std::move(labels)});
    }

    DdiDataset dataset(mode, std::move(names));
    for (auto& r : rows) dataset.add_pair(r.u, r.v, std::move(r.labels));
    return dataset;
}

std::vector<std::string> load_label_names(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open label file: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto name = text::trim(line);
        if (name.empty() || name[0] == '#') continue;
        out.push_back(std::move(name));
    }
    return out;
}

}  // namespace casekg::kg

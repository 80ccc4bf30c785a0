#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "casekg/error.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::kg {

enum class TaskMode { multiclass, multilabel };

std::string to_string(TaskMode mode);
TaskMode parse_task_mode(std::string_view s);

// Raised when a sealed label is read, i.e. a pair's ground truth is consulted
// while that pair is being predicted.
class LabelLeakError : public Error {
public:
    using Error::Error;
};

namespace detail {
struct SealState {
    std::mutex mutex;
    std::unordered_multiset<std::size_t> sealed;
};
}  // namespace detail

struct DdiPair {
    EntityId u = 0;
    EntityId v = 0;
};

class DdiDataset {
public:
    DdiDataset();
    DdiDataset(TaskMode mode, std::vector<std::string> relation_names);

    TaskMode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    std::size_t relation_count() const noexcept { return relation_names_.size(); }
    const std::vector<std::string>& relation_names() const noexcept { return relation_names_; }

    DdiPair pair(std::size_t index) const;
    // Sorted, distinct label ids. Throws LabelLeakError while the pair is sealed.
    const std::vector<LabelId>& labels(std::size_t index) const;

    // Validates the task-mode invariant before appending.
    void add_pair(EntityId u, EntityId v, std::vector<LabelId> labels);

    // Sorted distinct drug entity ids appearing in any pair.
    std::vector<EntityId> drugs() const;

    // Makes labels(index) throw until the seal is released. Seals nest.
    class Seal {
    public:
        Seal(const DdiDataset& dataset, std::size_t index);
        ~Seal();
        Seal(const Seal&) = delete;
        Seal& operator=(const Seal&) = delete;

    private:
        std::shared_ptr<detail::SealState> state_;
        std::size_t index_;
    };

private:
    friend class Seal;
    struct Row {
        DdiPair pair;
        std::vector<LabelId> labels;
    };
    TaskMode mode_ = TaskMode::multiclass;
    std::vector<std::string> relation_names_;
    std::vector<Row> pairs_;
    std::shared_ptr<detail::SealState> seals_;
};

// Reads `drug_u<TAB>drug_v<TAB>label[,label...]` lines. When `label_names` is
// given it is the closed label vocabulary and unknown labels are errors;
// otherwise labels are registered in first-seen order.
DdiDataset load_ddi_dataset(const std::string& path, TaskMode mode, EntityRegistry& registry,
                            const std::vector<std::string>* label_names = nullptr);

// One label name per line; blank and `#` lines skipped.
std::vector<std::string> load_label_names(const std::string& path);

}  // namespace casekg::kg

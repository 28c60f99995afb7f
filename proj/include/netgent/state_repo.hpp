#pragma once

#include "netgent/actions.hpp"
#include "netgent/detectors.hpp"
#include "netgent/page_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netgent::repo {

struct TokenUsage {
    int64_t input_tokens = 0;
    int64_t output_tokens = 0;

    int64_t total() const { return input_tokens + output_tokens; }
    TokenUsage& operator+=(const TokenUsage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

enum class StateStatus { active, stale };

// Compiled realization of an abstract state: recognition detectors plus the
// replayable program. Identity is a content hash, so identical compilations
// collapse to one repository entry.
struct ConcreteState {
    std::string state_id;   // 64 hex chars over (workflow_id, abstract_name, detector_sets, program)
    std::string workflow_id;
    std::string abstract_name;
    std::vector<detect::DetectorSet> detector_sets;   // non-empty
    actions::ActionProgram program;
    int64_t created_at = 0;                           // unix epoch ms
    TokenUsage synthesis_tokens;
    StateStatus status = StateStatus::active;
};

struct RepoStats {
    int64_t hits = 0;
    int64_t misses = 0;
    int64_t invalidations = 0;
    TokenUsage total_tokens;
};

class StorageError : public Error {
public:
    using Error::Error;
};
class IntegrityError : public Error {
public:
    using Error::Error;
};
class NotFound : public Error {
public:
    using Error::Error;
};

// Canonical bytes the state_id is computed over (content fields only; status,
// created_at and token accounting are volatile metadata).
std::string concrete_state_content_text(const ConcreteState& cs);
std::string compute_state_id(const ConcreteState& cs);

nlohmann::ordered_json concrete_state_to_json(const ConcreteState& cs);
ConcreteState concrete_state_from_json(const nlohmann::json& j);

// On-disk layout: <root>/<workflow_id>/<state_id>.state plus an append-only
// audit.log per workflow. Writes are write-temp-then-rename, so concurrent
// writers across processes never produce torn files. Hit/miss counters are
// process-local.
class StateRepo {
public:
    explicit StateRepo(std::filesystem::path root);

    // Idempotent for identical content; verifies any caller-provided id.
    std::string store_state(const ConcreteState& cs);

    // Active states whose any detector set matches the snapshot, ordered by
    // (score desc, created_at desc, state_id asc). Non-empty result counts a
    // hit, empty a miss.
    std::vector<std::pair<ConcreteState, detect::MatchResult>> lookup(
        const std::string& workflow_id,
        const std::optional<std::string>& abstract_name_filter,
        const page::PageSnapshot& snap);

    // Marks the state stale and logs the reason; stale states never match.
    // Idempotent when already stale.
    void invalidate(const std::string& workflow_id, const std::string& state_id,
                    const std::string& reason);

    RepoStats stats() const { return stats_; }

    // Loads and hash-verifies one state file. IntegrityError when the stored
    // bytes do not hash to the filename id.
    ConcreteState load_verified(const std::string& workflow_id, const std::string& state_id) const;

    std::vector<std::string> list_state_ids(const std::string& workflow_id) const;
    size_t entry_count(const std::string& workflow_id) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path workflow_dir(const std::string& workflow_id) const;
    std::filesystem::path state_path(const std::string& workflow_id,
                                     const std::string& state_id) const;
    void write_atomic(const std::filesystem::path& path, const std::string& bytes);

    std::filesystem::path root_;
    RepoStats stats_;
};

int64_t now_epoch_ms();

} // namespace netgent::repo

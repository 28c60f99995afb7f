#include "netgent/state_repo.hpp"

#include "netgent/hash.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

namespace netgent::repo {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* status_name(StateStatus s) {
    return s == StateStatus::active ? "active" : "stale";
}

StateStatus status_from_name(const std::string& s) {
    if (s == "active") return StateStatus::active;
    if (s == "stale") return StateStatus::stale;
    throw IntegrityError("unknown state status '" + s + "'");
}

bool looks_like_state_id(const std::string& s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!hex) return false;
    }
    return true;
}

std::string iso_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace

int64_t now_epoch_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string concrete_state_content_text(const ConcreteState& cs) {
    nlohmann::ordered_json j;
    j["workflow_id"] = cs.workflow_id;
    j["abstract_name"] = cs.abstract_name;
    nlohmann::ordered_json sets = nlohmann::ordered_json::array();
    for (const auto& ds : cs.detector_sets) sets.push_back(detect::detector_set_to_json(ds));
    j["detector_sets"] = std::move(sets);
    j["program"] = actions::program_to_json(cs.program);
    return j.dump();
}

std::string compute_state_id(const ConcreteState& cs) {
    return sha256_hex(concrete_state_content_text(cs));
}

nlohmann::ordered_json concrete_state_to_json(const ConcreteState& cs) {
    nlohmann::ordered_json j;
    j["workflow_id"] = cs.workflow_id;
    j["abstract_name"] = cs.abstract_name;
    nlohmann::ordered_json sets = nlohmann::ordered_json::array();
    for (const auto& ds : cs.detector_sets) sets.push_back(detect::detector_set_to_json(ds));
    j["detector_sets"] = std::move(sets);
    j["program"] = actions::program_to_json(cs.program);
    j["created_at"] = cs.created_at;
    j["synthesis_tokens"] = nlohmann::ordered_json{{"input_tokens", cs.synthesis_tokens.input_tokens},
                                                   {"output_tokens", cs.synthesis_tokens.output_tokens}};
    j["status"] = status_name(cs.status);
    return j;
}

ConcreteState concrete_state_from_json(const nlohmann::json& j) {
    ConcreteState cs;
    cs.workflow_id = j.at("workflow_id").get<std::string>();
    cs.abstract_name = j.at("abstract_name").get<std::string>();
    for (const auto& ds : j.at("detector_sets"))
        cs.detector_sets.push_back(detect::detector_set_from_json(ds));
    if (cs.detector_sets.empty()) throw IntegrityError("state has no detector sets");
    cs.program = actions::program_from_json(j.at("program"));
    cs.created_at = j.at("created_at").get<int64_t>();
    cs.synthesis_tokens.input_tokens = j.at("synthesis_tokens").at("input_tokens").get<int64_t>();
    cs.synthesis_tokens.output_tokens = j.at("synthesis_tokens").at("output_tokens").get<int64_t>();
    cs.status = status_from_name(j.at("status").get<std::string>());
    cs.state_id = compute_state_id(cs);
    return cs;
}

StateRepo::StateRepo(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw StorageError("cannot create repository at " + root_.string());
}

fs::path StateRepo::workflow_dir(const std::string& workflow_id) const {
    return root_ / workflow_id;
}

fs::path StateRepo::state_path(const std::string& workflow_id, const std::string& state_id) const {
    return workflow_dir(workflow_id) / (state_id + ".state");
}

void StateRepo::write_atomic(const fs::path& path, const std::string& bytes) {
    static std::atomic<uint64_t> counter{0};
    std::random_device rd;
    std::ostringstream tmp_name;
    tmp_name << ".tmp-" << rd() << "-" << counter.fetch_add(1);
    const fs::path tmp = path.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out << bytes;
        if (!out.good()) throw StorageError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StorageError("cannot rename into place: " + path.string());
    }
}

std::string StateRepo::store_state(const ConcreteState& cs) {
    if (cs.status != StateStatus::active)
        throw StorageError("only active states may be stored");
    if (cs.detector_sets.empty()) throw StorageError("state has no detector sets");
    for (const auto& ds : cs.detector_sets) detect::validate_detector_set(ds);
    actions::validate_program(cs.program);

    const std::string id = compute_state_id(cs);
    if (!cs.state_id.empty() && cs.state_id != id)
        throw IntegrityError("provided state_id does not match content hash");

    std::error_code ec;
    fs::create_directories(workflow_dir(cs.workflow_id), ec);
    if (ec) throw StorageError("cannot create workflow dir for " + cs.workflow_id);

    const fs::path path = state_path(cs.workflow_id, id);
    if (fs::exists(path)) return id;   // identical content: single entry

    ConcreteState stored = cs;
    stored.state_id = id;
    write_atomic(path, concrete_state_to_json(stored).dump(2) + "\n");
    stats_.total_tokens += cs.synthesis_tokens;
    return id;
}

ConcreteState StateRepo::load_verified(const std::string& workflow_id,
                                       const std::string& state_id) const {
    const fs::path path = state_path(workflow_id, state_id);
    if (!fs::exists(path)) throw NotFound("no state " + state_id + " in " + workflow_id);
    ConcreteState cs;
    try {
        cs = concrete_state_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError("unreadable state file " + path.string() + ": " + e.what());
    }
    if (cs.state_id != state_id)
        throw IntegrityError("state file " + path.string() + " does not hash to its id");
    return cs;
}

std::vector<std::string> StateRepo::list_state_ids(const std::string& workflow_id) const {
    std::vector<std::string> ids;
    const fs::path dir = workflow_dir(workflow_id);
    if (!fs::exists(dir)) return ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".state") continue;
        const std::string stem = entry.path().stem().string();
        if (looks_like_state_id(stem)) ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

size_t StateRepo::entry_count(const std::string& workflow_id) const {
    return list_state_ids(workflow_id).size();
}

std::vector<std::pair<ConcreteState, detect::MatchResult>> StateRepo::lookup(
    const std::string& workflow_id, const std::optional<std::string>& abstract_name_filter,
    const page::PageSnapshot& snap) {
    std::vector<std::pair<ConcreteState, detect::MatchResult>> out;
    for (const std::string& id : list_state_ids(workflow_id)) {
        ConcreteState cs = load_verified(workflow_id, id);
        if (cs.status != StateStatus::active) continue;
        if (abstract_name_filter && cs.abstract_name != *abstract_name_filter) continue;
        detect::MatchResult best;
        bool any = false;
        for (const auto& ds : cs.detector_sets) {
            const detect::MatchResult r = detect::match_detector_set(ds, snap);
            if (r.matched && (!any || r.score > best.score)) {
                best = r;
                any = true;
            }
        }
        if (any) out.emplace_back(std::move(cs), best);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second.score != b.second.score) return a.second.score > b.second.score;
        if (a.first.created_at != b.first.created_at) return a.first.created_at > b.first.created_at;
        return a.first.state_id < b.first.state_id;
    });
    if (out.empty()) ++stats_.misses;
    else ++stats_.hits;
    return out;
}

void StateRepo::invalidate(const std::string& workflow_id, const std::string& state_id,
                           const std::string& reason) {
    ConcreteState cs = load_verified(workflow_id, state_id);
    if (cs.status != StateStatus::stale) {
        cs.status = StateStatus::stale;
        write_atomic(state_path(workflow_id, state_id),
                     concrete_state_to_json(cs).dump(2) + "\n");
    }
    std::ofstream audit(workflow_dir(workflow_id) / "audit.log", std::ios::app);
    audit << iso_timestamp_now() << " invalidate " << state_id << " " << reason << "\n";
    ++stats_.invalidations;
}

} // namespace netgent::repo

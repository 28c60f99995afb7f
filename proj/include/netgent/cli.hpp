#pragma once

#include "netgent/state_repo.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace netgent::cli {

struct PerRunCost {
    int run_index = 0;
    repo::TokenUsage tokens;
    double dollars = 0.0;
};

struct CostReport {
    std::vector<PerRunCost> per_run;
    struct Aggregate {
        int64_t runs = 0;
        repo::TokenUsage total_tokens;
        double total_dollars = 0.0;
        double hit_rate = 0.0;
    } aggregate;
    std::string scenario;
};

struct DriftReport {
    int64_t states_regenerated = 0;
    int64_t states_replayed = 0;
    int64_t tokens_drift_run = 0;
    int64_t tokens_cold_equivalent = 0;
    double ratio = 0.0;
};

// Exit codes: 0 success, 1 validation/run failure, 2 configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace netgent::cli

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "flakerank/rulebook.hpp"
#include "flakerank/types.hpp"

namespace flakerank {

inline constexpr const char* kUnknownCategory = "unknown";

struct LabelOptions {
    std::size_t workers = 1;
    std::size_t max_log_bytes = 0;  // 0 = unlimited
};

struct LabelSummary {
    std::size_t n_rows = 0;
    std::size_t n_flaky = 0;
    std::size_t n_unknown = 0;
    std::map<std::string, std::size_t> category_counts;
};

/// Flags, per input row, failures followed by a success of the same
/// (project_id, commit_sha, name) group. Group order is (created_at, id)
/// with missing created_at after all timestamped rows; only successes
/// with a created_at count as rerun evidence.
std::vector<bool> detect_flaky(const Dataset& jobs);

/// Stage 1: flags flaky jobs and assigns categories to their logs.
/// Output row order equals input row order regardless of worker count.
LabeledDataset label_dataset(const Dataset& jobs, const Rulebook& rb,
                             const LabelOptions& opts = {}, LabelSummary* summary = nullptr);

}  // namespace flakerank

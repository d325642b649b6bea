#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flakerank/time.hpp"

namespace flakerank {

enum class JobStatus { success, failed, canceled, skipped };

std::string_view to_string(JobStatus s);
std::optional<JobStatus> status_from_string(std::string_view s);

/// One CI job execution. `duration` is seconds; a missing input value is
/// back-filled at parse time (finished - started, else 0).
struct JobRecord {
    std::int64_t id = 0;
    std::string name;
    std::string project_id;
    std::string commit_sha;
    JobStatus status = JobStatus::success;
    std::optional<Timestamp> created_at;
    std::optional<Timestamp> started_at;
    std::optional<Timestamp> finished_at;
    double duration = 0.0;
    std::string logs;

    bool operator==(const JobRecord&) const = default;
};

struct LabeledJob {
    JobRecord job;
    bool flaky = false;
    std::string category;  // empty iff flaky is false

    bool operator==(const LabeledJob&) const = default;
};

struct ParseStats {
    std::size_t rows = 0;
    std::size_t duration_backfilled = 0;  // finished - started
    std::size_t duration_defaulted = 0;   // no timestamps, set to 0 (warned)
};

struct Dataset {
    std::vector<JobRecord> rows;
    std::string source_path;
    bool inline_logs = true;  // source file had a `logs` column
    ParseStats stats;
};

struct LabeledDataset {
    std::vector<LabeledJob> rows;
    std::string source_path;
    bool inline_logs = true;
    ParseStats stats;
};

/// Per-category recency/frequency/monetary triple.
struct CategoryRfm {
    std::string category;
    double recency_days = 0.0;
    std::int64_t frequency = 0;
    double monetary = 0.0;

    bool operator==(const CategoryRfm&) const = default;
};

struct EvolutionRow {
    std::string category;
    std::string period;  // YYYY-MM
    std::int64_t count = 0;

    bool operator==(const EvolutionRow&) const = default;
};

struct RankedCategory {
    CategoryRfm base;
    int r_score = 0;  // 1..5, high = recent
    int f_score = 0;
    int m_score = 0;
    int cluster = 0;
    std::string pattern;  // e.g. "R+F+M-"
    int rank = 0;         // 1 = highest priority

    bool operator==(const RankedCategory&) const = default;
};

}  // namespace flakerank

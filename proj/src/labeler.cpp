#include "flakerank/labeler.hpp"

#include <algorithm>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace flakerank {

namespace {

// Total order on group members: timestamped rows first by created_at,
// rows without created_at after them; id breaks every tie.
std::tuple<bool, std::int64_t, std::int64_t> order_key(const JobRecord& j) {
    return {!j.created_at.has_value(), j.created_at ? j.created_at->micros : 0, j.id};
}

struct GroupKey {
    std::string_view project;
    std::string_view sha;
    std::string_view name;

    bool operator==(const GroupKey&) const = default;
};

struct GroupKeyHash {
    std::size_t operator()(const GroupKey& k) const {
        const std::hash<std::string_view> h;
        std::size_t seed = h(k.project);
        seed ^= h(k.sha) + 0x9e3779b9 + (seed << 6) + (seed >> 2);
        seed ^= h(k.name) + 0x9e3779b9 + (seed << 6) + (seed >> 2);
        return seed;
    }
};

}  // namespace

std::vector<bool> detect_flaky(const Dataset& jobs) {
    std::vector<bool> flaky(jobs.rows.size(), false);

    std::unordered_map<GroupKey, std::vector<std::size_t>, GroupKeyHash> groups;
    groups.reserve(jobs.rows.size());
    for (std::size_t i = 0; i < jobs.rows.size(); ++i) {
        const JobRecord& j = jobs.rows[i];
        groups[GroupKey{j.project_id, j.commit_sha, j.name}].push_back(i);
    }

    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return order_key(jobs.rows[a]) < order_key(jobs.rows[b]);
        });
        bool later_success = false;
        for (auto it = members.rbegin(); it != members.rend(); ++it) {
            const JobRecord& j = jobs.rows[*it];
            if (j.status == JobStatus::failed && later_success) flaky[*it] = true;
            if (j.status == JobStatus::success && j.created_at) later_success = true;
        }
    }
    return flaky;
}

LabeledDataset label_dataset(const Dataset& jobs, const Rulebook& rb, const LabelOptions& opts,
                             LabelSummary* summary) {
    const std::vector<bool> flaky = detect_flaky(jobs);

    LabeledDataset out;
    out.source_path = jobs.source_path;
    out.inline_logs = jobs.inline_logs;
    out.stats = jobs.stats;
    out.rows.resize(jobs.rows.size());

    auto categorize = [&](std::size_t i) {
        LabeledJob& row = out.rows[i];
        row.job = jobs.rows[i];
        row.flaky = flaky[i];
        if (!row.flaky) return;
        std::string_view log = row.job.logs;
        if (opts.max_log_bytes > 0 && log.size() > opts.max_log_bytes) {
            log = log.substr(0, opts.max_log_bytes);
        }
        row.category = match_category(rb, log).value_or(kUnknownCategory);
    };

    const std::size_t n = jobs.rows.size();
    const std::size_t workers = std::max<std::size_t>(1, opts.workers);
    if (workers == 1 || n < 2 * workers) {
        for (std::size_t i = 0; i < n; ++i) categorize(i);
    } else {
        // Contiguous slices; each worker writes disjoint output rows, so
        // the result is independent of scheduling.
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi]() {
                for (std::size_t i = lo; i < hi; ++i) categorize(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    if (summary) {
        summary->n_rows = n;
        summary->n_flaky = 0;
        summary->n_unknown = 0;
        summary->category_counts.clear();
        for (const auto& row : out.rows) {
            if (!row.flaky) continue;
            ++summary->n_flaky;
            ++summary->category_counts[row.category];
            if (row.category == kUnknownCategory) ++summary->n_unknown;
        }
    }
    return out;
}

}  // namespace flakerank

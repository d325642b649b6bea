#include "flakerank/ingest.hpp"

#include <filesystem>
#include <ostream>
#include <unordered_set>

#include "flakerank/csv.hpp"
#include "flakerank/errors.hpp"
#include "flakerank/text.hpp"

namespace flakerank {

const std::vector<std::string> kJobsHeader = {
    "id", "name", "project_id", "commit_sha", "status",
    "created_at", "started_at", "finished_at", "duration"};
const std::vector<std::string> kJobsHeaderLogs = {
    "id", "name", "project_id", "commit_sha", "status",
    "created_at", "started_at", "finished_at", "duration", "logs"};
const std::vector<std::string> kLabeledExtra = {"flaky", "category"};
const std::vector<std::string> kRfmHeader = {"category", "recency", "frequency", "monetary"};
const std::vector<std::string> kEvolutionHeader = {"category", "period", "count"};
const std::vector<std::string> kRankedHeader = {
    "category", "recency", "frequency", "monetary",
    "r_score", "f_score", "m_score", "cluster", "pattern", "rank"};

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::success: return "success";
        case JobStatus::failed: return "failed";
        case JobStatus::canceled: return "canceled";
        case JobStatus::skipped: return "skipped";
    }
    return "success";
}

std::optional<JobStatus> status_from_string(std::string_view s) {
    if (s == "success") return JobStatus::success;
    if (s == "failed") return JobStatus::failed;
    if (s == "canceled") return JobStatus::canceled;
    if (s == "skipped") return JobStatus::skipped;
    return std::nullopt;
}

namespace {

std::string where(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line) + ": ";
}

/// Matches the actual header against candidate layouts; returns the index
/// of the matching candidate. Reports the first missing expected column.
std::size_t match_header(const std::string& path, const std::vector<std::string>& actual,
                         const std::vector<const std::vector<std::string>*>& candidates) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (*candidates[i] == actual) return i;
    }
    // Diagnose against the widest candidate.
    const std::vector<std::string>* widest = candidates.front();
    for (const auto* c : candidates) {
        if (c->size() > widest->size()) widest = c;
    }
    for (const auto& col : *widest) {
        bool found = false;
        for (const auto& a : actual) {
            if (a == col) {
                found = true;
                break;
            }
        }
        // `logs` alone may legitimately be absent.
        if (!found && col != "logs") {
            throw validation_error(path + ": missing column '" + col + "'");
        }
    }
    throw parse_error(path + ": unexpected header layout");
}

std::optional<Timestamp> parse_ts_field(const std::string& path, std::size_t line,
                                        const std::string& value, const char* field) {
    if (value.empty()) return std::nullopt;
    auto ts = parse_rfc3339(value);
    if (!ts) {
        throw validation_error(where(path, line) + "bad timestamp in '" + field + "': " + value);
    }
    return ts;
}

JobRecord parse_job_fields(const std::string& path, std::size_t line,
                           const std::vector<std::string>& f, bool has_logs,
                           ParseStats& stats) {
    JobRecord job;
    auto id = parse_int64(f[0]);
    if (!id) throw validation_error(where(path, line) + "bad id: " + f[0]);
    job.id = *id;
    job.name = f[1];
    job.project_id = f[2];
    job.commit_sha = f[3];
    auto status = status_from_string(f[4]);
    if (!status) throw validation_error(where(path, line) + "bad status token: " + f[4]);
    job.status = *status;
    job.created_at = parse_ts_field(path, line, f[5], "created_at");
    job.started_at = parse_ts_field(path, line, f[6], "started_at");
    job.finished_at = parse_ts_field(path, line, f[7], "finished_at");
    if (job.started_at && job.finished_at && *job.finished_at < *job.started_at) {
        throw validation_error(where(path, line) + "finished_at precedes started_at");
    }
    if (f[8].empty()) {
        if (job.started_at && job.finished_at) {
            job.duration = static_cast<double>(job.finished_at->micros - job.started_at->micros) / 1e6;
            ++stats.duration_backfilled;
        } else {
            job.duration = 0.0;
            ++stats.duration_defaulted;
        }
    } else {
        auto d = parse_double(f[8]);
        if (!d) throw validation_error(where(path, line) + "bad duration: " + f[8]);
        if (*d < 0) throw validation_error(where(path, line) + "negative duration: " + f[8]);
        job.duration = *d;
    }
    if (has_logs) job.logs = sanitize_utf8(f[9]);
    return job;
}

void load_sidecar_log(const std::string& path, const std::optional<std::string>& logs_dir,
                      JobRecord& job, bool has_inline) {
    if (!logs_dir) return;
    const std::filesystem::path log_path =
        std::filesystem::path(*logs_dir) / (std::to_string(job.id) + ".log");
    std::error_code ec;
    if (!std::filesystem::exists(log_path, ec)) {
        if (has_inline) return;  // keep the inline value
        throw validation_error(path + ": missing log file for job " + std::to_string(job.id) +
                               " (" + log_path.string() + ")");
    }
    job.logs = sanitize_utf8(read_file(log_path.string()));
}

void check_unique_id(const std::string& path, std::size_t line,
                     std::unordered_set<std::int64_t>& seen, std::int64_t id) {
    if (!seen.insert(id).second) {
        throw validation_error(where(path, line) + "duplicate id " + std::to_string(id));
    }
}

std::vector<std::string> read_header(const std::string& path, CsvReader& reader) {
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw parse_error(path + ": empty file, expected a header row");
    return fields;
}

void check_field_count(const std::string& path, std::size_t line, std::size_t got,
                       std::size_t want) {
    if (got != want) {
        throw parse_error(where(path, line) + "expected " + std::to_string(want) +
                          " fields, got " + std::to_string(got));
    }
}

std::vector<std::string> job_fields(const JobRecord& j, bool inline_logs) {
    std::vector<std::string> f;
    f.reserve(10);
    f.push_back(std::to_string(j.id));
    f.push_back(j.name);
    f.push_back(j.project_id);
    f.push_back(j.commit_sha);
    f.emplace_back(to_string(j.status));
    f.push_back(j.created_at ? format_rfc3339(*j.created_at) : "");
    f.push_back(j.started_at ? format_rfc3339(*j.started_at) : "");
    f.push_back(j.finished_at ? format_rfc3339(*j.finished_at) : "");
    f.push_back(format_double(j.duration));
    if (inline_logs) f.push_back(j.logs);
    return f;
}

}  // namespace

Dataset parse_jobs(const std::string& path, const std::optional<std::string>& logs_dir) {
    const std::string data = read_file(path);
    CsvReader reader(data, path);
    const auto header = read_header(path, reader);
    const std::size_t variant = match_header(path, header, {&kJobsHeaderLogs, &kJobsHeader});
    const bool has_logs = variant == 0;
    if (!has_logs && !logs_dir) {
        throw validation_error(path + ": missing column 'logs' (provide --logs-dir)");
    }

    Dataset ds;
    ds.source_path = path;
    ds.inline_logs = has_logs;
    std::unordered_set<std::int64_t> seen;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.record_line();
        check_field_count(path, line, f.size(), header.size());
        JobRecord job = parse_job_fields(path, line, f, has_logs, ds.stats);
        check_unique_id(path, line, seen, job.id);
        load_sidecar_log(path, logs_dir, job, has_logs);
        ds.rows.push_back(std::move(job));
    }
    ds.stats.rows = ds.rows.size();
    return ds;
}

LabeledDataset parse_labeled(const std::string& path) {
    const std::string data = read_file(path);
    CsvReader reader(data, path);
    const auto header = read_header(path, reader);

    std::vector<std::string> with_logs = kJobsHeaderLogs;
    std::vector<std::string> without_logs = kJobsHeader;
    for (const auto& c : kLabeledExtra) {
        with_logs.push_back(c);
        without_logs.push_back(c);
    }
    const std::size_t variant = match_header(path, header, {&with_logs, &without_logs});
    const bool has_logs = variant == 0;
    const std::size_t flaky_col = has_logs ? 10 : 9;

    LabeledDataset ds;
    ds.source_path = path;
    ds.inline_logs = has_logs;
    std::unordered_set<std::int64_t> seen;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.record_line();
        check_field_count(path, line, f.size(), header.size());
        LabeledJob row;
        row.job = parse_job_fields(path, line, f, has_logs, ds.stats);
        check_unique_id(path, line, seen, row.job.id);
        const std::string& flaky = f[flaky_col];
        if (flaky == "true") {
            row.flaky = true;
        } else if (flaky == "false") {
            row.flaky = false;
        } else {
            throw validation_error(where(path, line) + "bad flaky value: " + flaky);
        }
        row.category = f[flaky_col + 1];
        if (row.flaky && row.category.empty()) {
            throw validation_error(where(path, line) + "flaky row with empty category");
        }
        if (!row.flaky && !row.category.empty()) {
            throw validation_error(where(path, line) + "non-flaky row with category '" +
                                   row.category + "'");
        }
        if (row.flaky && row.job.status != JobStatus::failed) {
            throw validation_error(where(path, line) + "flaky row with non-failed status");
        }
        ds.rows.push_back(std::move(row));
    }
    ds.stats.rows = ds.rows.size();
    return ds;
}

std::vector<CategoryRfm> parse_rfm(const std::string& path) {
    const std::string data = read_file(path);
    CsvReader reader(data, path);
    const auto header = read_header(path, reader);
    match_header(path, header, {&kRfmHeader});

    std::vector<CategoryRfm> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.record_line();
        check_field_count(path, line, f.size(), 4);
        CategoryRfm r;
        r.category = f[0];
        if (r.category.empty()) throw validation_error(where(path, line) + "empty category");
        auto rec = parse_double(f[1]);
        if (!rec || *rec < 0) throw validation_error(where(path, line) + "bad recency: " + f[1]);
        r.recency_days = *rec;
        auto freq = parse_int64(f[2]);
        if (!freq || *freq < 1) throw validation_error(where(path, line) + "bad frequency: " + f[2]);
        r.frequency = *freq;
        auto mon = parse_double(f[3]);
        if (!mon || *mon < 0) throw validation_error(where(path, line) + "bad monetary: " + f[3]);
        r.monetary = *mon;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<RankedCategory> parse_ranked(const std::string& path) {
    const std::string data = read_file(path);
    CsvReader reader(data, path);
    const auto header = read_header(path, reader);
    match_header(path, header, {&kRankedHeader});

    std::vector<RankedCategory> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.record_line();
        check_field_count(path, line, f.size(), 10);
        RankedCategory r;
        r.base.category = f[0];
        auto rec = parse_double(f[1]);
        auto freq = parse_int64(f[2]);
        auto mon = parse_double(f[3]);
        if (!rec || !freq || !mon) throw validation_error(where(path, line) + "bad RFM values");
        r.base.recency_days = *rec;
        r.base.frequency = *freq;
        r.base.monetary = *mon;
        auto rs = parse_int64(f[4]);
        auto fs = parse_int64(f[5]);
        auto ms = parse_int64(f[6]);
        auto cl = parse_int64(f[7]);
        auto rk = parse_int64(f[9]);
        if (!rs || !fs || !ms || *rs < 1 || *rs > 5 || *fs < 1 || *fs > 5 || *ms < 1 || *ms > 5) {
            throw validation_error(where(path, line) + "scores must be in [1,5]");
        }
        if (!cl || *cl < 0) throw validation_error(where(path, line) + "bad cluster id");
        if (!rk || *rk < 1) throw validation_error(where(path, line) + "bad rank");
        r.r_score = static_cast<int>(*rs);
        r.f_score = static_cast<int>(*fs);
        r.m_score = static_cast<int>(*ms);
        r.cluster = static_cast<int>(*cl);
        r.pattern = f[8];
        r.rank = static_cast<int>(*rk);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_jobs(const Dataset& ds, std::ostream& out) {
    CsvWriter w(out);
    w.write_row(ds.inline_logs ? kJobsHeaderLogs : kJobsHeader);
    for (const auto& j : ds.rows) {
        w.write_row(job_fields(j, ds.inline_logs));
    }
}

void write_labeled(const LabeledDataset& ds, std::ostream& out) {
    CsvWriter w(out);
    std::vector<std::string> header = ds.inline_logs ? kJobsHeaderLogs : kJobsHeader;
    for (const auto& c : kLabeledExtra) header.push_back(c);
    w.write_row(header);
    for (const auto& r : ds.rows) {
        auto f = job_fields(r.job, ds.inline_logs);
        f.push_back(r.flaky ? "true" : "false");
        f.push_back(r.category);
        w.write_row(f);
    }
}

void write_rfm(const std::vector<CategoryRfm>& rows, std::ostream& out) {
    CsvWriter w(out);
    w.write_row(kRfmHeader);
    for (const auto& r : rows) {
        w.write_row(std::vector<std::string>{r.category, format_double(r.recency_days),
                                             std::to_string(r.frequency), format_double(r.monetary)});
    }
}

void write_evolution(const std::vector<EvolutionRow>& rows, std::ostream& out) {
    CsvWriter w(out);
    w.write_row(kEvolutionHeader);
    for (const auto& r : rows) {
        w.write_row(std::vector<std::string>{r.category, r.period, std::to_string(r.count)});
    }
}

void write_ranked(const std::vector<RankedCategory>& rows, std::ostream& out) {
    CsvWriter w(out);
    w.write_row(kRankedHeader);
    for (const auto& r : rows) {
        w.write_row(std::vector<std::string>{
            r.base.category, format_double(r.base.recency_days), std::to_string(r.base.frequency),
            format_double(r.base.monetary), std::to_string(r.r_score), std::to_string(r.f_score),
            std::to_string(r.m_score), std::to_string(r.cluster), r.pattern,
            std::to_string(r.rank)});
    }
}

}  // namespace flakerank

#include <doctest.h>

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "flakerank/generator.hpp"
#include "flakerank/ingest.hpp"
#include "flakerank/labeler.hpp"
#include "flakerank/rng.hpp"
#include "test_util.hpp"

using namespace flakerank;

namespace {

JobRecord job(std::int64_t id, JobStatus status, std::optional<std::int64_t> created_secs,
              const std::string& name = "build", const std::string& sha = "abc",
              const std::string& project = "p1") {
    JobRecord j;
    j.id = id;
    j.name = name;
    j.project_id = project;
    j.commit_sha = sha;
    j.status = status;
    if (created_secs) j.created_at = Timestamp::from_seconds(*created_secs);
    j.duration = 60.0;
    return j;
}

Dataset dataset(std::vector<JobRecord> rows) {
    Dataset ds;
    ds.rows = std::move(rows);
    ds.source_path = "<test>";
    return ds;
}

/// Direct pairwise re-statement of the flakiness definition.
std::vector<bool> flaky_oracle(const Dataset& ds) {
    auto key = [](const JobRecord& j) {
        return std::tuple<bool, std::int64_t, std::int64_t>{
            !j.created_at.has_value(), j.created_at ? j.created_at->micros : 0, j.id};
    };
    std::vector<bool> out(ds.rows.size(), false);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const JobRecord& a = ds.rows[i];
        if (a.status != JobStatus::failed) continue;
        for (const JobRecord& b : ds.rows) {
            if (b.status != JobStatus::success || !b.created_at) continue;
            if (b.project_id != a.project_id || b.commit_sha != a.commit_sha || b.name != a.name) {
                continue;
            }
            if (key(b) > key(a)) {
                out[i] = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("single failed job is not flaky") {
    const auto flags = detect_flaky(dataset({job(1, JobStatus::failed, 100)}));
    CHECK(flags == std::vector<bool>{false});
}

TEST_CASE("failure followed by success in the same group is flaky") {
    const auto flags = detect_flaky(dataset({
        job(1, JobStatus::failed, 100),
        job(2, JobStatus::success, 200),
    }));
    CHECK(flags == std::vector<bool>{true, false});
}

TEST_CASE("an earlier success is regression evidence, not flakiness") {
    const auto flags = detect_flaky(dataset({
        job(1, JobStatus::success, 100),
        job(2, JobStatus::failed, 200),
    }));
    CHECK(flags == std::vector<bool>{false, false});
}

TEST_CASE("the group key is (project, sha, name)") {
    const auto flags = detect_flaky(dataset({
        job(1, JobStatus::failed, 100, "build", "sha1"),
        job(2, JobStatus::success, 200, "build", "sha2"),   // different commit
        job(3, JobStatus::success, 200, "lint", "sha1"),    // different job name
        job(4, JobStatus::failed, 100, "test", "sha3", "p1"),
        job(5, JobStatus::success, 200, "test", "sha3", "p2"),  // different project
    }));
    CHECK(flags == std::vector<bool>{false, false, false, false, false});
}

TEST_CASE("canceled and skipped carry no signal") {
    const auto flags = detect_flaky(dataset({
        job(1, JobStatus::canceled, 100),
        job(2, JobStatus::failed, 200),
        job(3, JobStatus::skipped, 300),
        job(4, JobStatus::canceled, 400),
    }));
    CHECK(flags == std::vector<bool>{false, false, false, false});
}

TEST_CASE("id breaks created_at ties") {
    const auto flags = detect_flaky(dataset({
        job(5, JobStatus::failed, 100),
        job(6, JobStatus::success, 100),  // same instant, higher id => later
    }));
    CHECK(flags == std::vector<bool>{true, false});

    const auto reversed = detect_flaky(dataset({
        job(6, JobStatus::failed, 100),
        job(5, JobStatus::success, 100),
    }));
    CHECK(reversed == std::vector<bool>{false, false});
}

TEST_CASE("rows without created_at sort last and give no evidence") {
    // Success without created_at cannot prove a rerun happened later.
    const auto a = detect_flaky(dataset({
        job(1, JobStatus::failed, 100),
        job(2, JobStatus::success, std::nullopt),
    }));
    CHECK(a == std::vector<bool>{false, false});

    // A failure without created_at sorts after every timestamped success.
    const auto b = detect_flaky(dataset({
        job(1, JobStatus::failed, std::nullopt),
        job(2, JobStatus::success, 100),
    }));
    CHECK(b == std::vector<bool>{false, false});
}

TEST_CASE("randomized datasets agree with the pairwise oracle") {
    SplitMix64 rng(8241);
    static const char* shas[] = {"s1", "s2", "s3"};
    static const char* names[] = {"build", "test"};
    static const char* projects[] = {"p1", "p2"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<JobRecord> rows;
        const std::size_t n = rng.next_index(200);
        for (std::size_t i = 0; i < n; ++i) {
            const double status_roll = rng.next_double();
            const JobStatus status = status_roll < 0.4   ? JobStatus::failed
                                     : status_roll < 0.8 ? JobStatus::success
                                     : status_roll < 0.9 ? JobStatus::canceled
                                                         : JobStatus::skipped;
            std::optional<std::int64_t> created;
            if (rng.next_double() < 0.9) created = static_cast<std::int64_t>(rng.next_index(20));
            rows.push_back(job(static_cast<std::int64_t>(i + 1), status, created,
                               names[rng.next_index(2)], shas[rng.next_index(3)],
                               projects[rng.next_index(2)]));
        }
        const Dataset ds = dataset(std::move(rows));
        CHECK(detect_flaky(ds) == flaky_oracle(ds));
    }
}

TEST_CASE("label_dataset assigns categories to flaky rows only") {
    const Rulebook rb = builtin_rulebook();
    std::vector<JobRecord> rows = {
        job(1, JobStatus::failed, 100),
        job(2, JobStatus::success, 200),
        job(3, JobStatus::failed, 100, "other"),
    };
    rows[0].logs = "fatal error: runtime: out of memory";
    rows[2].logs = "fatal error: runtime: out of memory";  // not flaky, stays uncategorized
    LabelSummary summary;
    const LabeledDataset out = label_dataset(dataset(rows), rb, {}, &summary);
    REQUIRE(out.rows.size() == 3);
    CHECK(out.rows[0].flaky);
    CHECK(out.rows[0].category == "out_of_memory");
    CHECK_FALSE(out.rows[1].flaky);
    CHECK(out.rows[1].category.empty());
    CHECK_FALSE(out.rows[2].flaky);
    CHECK(out.rows[2].category.empty());
    CHECK(summary.n_rows == 3);
    CHECK(summary.n_flaky == 1);
    CHECK(summary.n_unknown == 0);
    CHECK(summary.category_counts.at("out_of_memory") == 1);
}

TEST_CASE("unmatched flaky logs get the unknown sentinel") {
    const Rulebook rb = builtin_rulebook();
    std::vector<JobRecord> rows = {
        job(1, JobStatus::failed, 100),
        job(2, JobStatus::success, 200),
    };
    rows[0].logs = "something nobody wrote a rule for";
    LabelSummary summary;
    const LabeledDataset out = label_dataset(dataset(rows), rb, {}, &summary);
    CHECK(out.rows[0].category == kUnknownCategory);
    CHECK(summary.n_unknown == 1);
}

TEST_CASE("a dataset with no failures labels everything non-flaky") {
    std::vector<JobRecord> rows;
    for (int i = 1; i <= 10; ++i) rows.push_back(job(i, JobStatus::success, i * 10));
    const LabeledDataset out = label_dataset(dataset(rows), builtin_rulebook());
    for (const auto& r : out.rows) {
        CHECK_FALSE(r.flaky);
        CHECK(r.category.empty());
    }
}

TEST_CASE("removing success rows makes every job non-flaky") {
    SplitMix64 rng(321);
    std::vector<JobRecord> rows;
    for (int i = 1; i <= 60; ++i) {
        const JobStatus status = rng.next_double() < 0.5 ? JobStatus::failed : JobStatus::success;
        rows.push_back(job(i, status, static_cast<std::int64_t>(rng.next_index(10)), "build",
                           rng.next_double() < 0.5 ? "s1" : "s2"));
    }
    Dataset with_successes = dataset(rows);
    std::vector<JobRecord> failures_only;
    for (const auto& r : rows) {
        if (r.status != JobStatus::success) failures_only.push_back(r);
    }
    const auto flags = detect_flaky(dataset(std::move(failures_only)));
    for (const bool f : flags) CHECK_FALSE(f);
}

TEST_CASE("labeling output does not depend on the worker count") {
    SplitMix64 rng(777);
    std::vector<JobRecord> rows;
    const auto mix = default_category_mix();
    for (int i = 1; i <= 151; ++i) {
        const bool fail = rng.next_double() < 0.5;
        JobRecord j = job(i, fail ? JobStatus::failed : JobStatus::success,
                          static_cast<std::int64_t>(rng.next_index(50)), "build",
                          "s" + std::to_string(rng.next_index(20)));
        j.logs = "noise line\n" + mix[rng.next_index(mix.size())].marker + "\ntail";
        rows.push_back(std::move(j));
    }
    const Dataset ds = dataset(std::move(rows));
    const Rulebook rb = builtin_rulebook();

    std::string reference;
    for (const std::size_t workers : {1u, 2u, 4u, 8u}) {
        LabelOptions opts;
        opts.workers = workers;
        const LabeledDataset out = label_dataset(ds, rb, opts);
        std::ostringstream buf;
        write_labeled(out, buf);
        if (reference.empty()) {
            reference = buf.str();
        } else {
            CHECK(buf.str() == reference);
        }
    }
}

TEST_CASE("max_log_bytes caps the scanned prefix") {
    const Rulebook rb = builtin_rulebook();
    std::vector<JobRecord> rows = {
        job(1, JobStatus::failed, 100),
        job(2, JobStatus::success, 200),
    };
    rows[0].logs = std::string(4096, 'x') + "\nfatal error: runtime: out of memory";
    LabelOptions opts;
    opts.max_log_bytes = 1024;
    const LabeledDataset capped = label_dataset(dataset(rows), rb, opts);
    CHECK(capped.rows[0].category == kUnknownCategory);
    const LabeledDataset full = label_dataset(dataset(rows), rb, {});
    CHECK(full.rows[0].category == "out_of_memory");
}

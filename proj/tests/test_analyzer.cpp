#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "flakerank/analyzer.hpp"
#include "flakerank/errors.hpp"
#include "flakerank/rng.hpp"

using namespace flakerank;

namespace {

LabeledJob flaky_row(std::int64_t id, const std::string& category, std::int64_t created_secs,
                     double duration) {
    LabeledJob row;
    row.job.id = id;
    row.job.name = "build";
    row.job.project_id = "p";
    row.job.commit_sha = "s" + std::to_string(id);
    row.job.status = JobStatus::failed;
    row.job.created_at = Timestamp::from_seconds(created_secs);
    row.job.duration = duration;
    row.flaky = true;
    row.category = category;
    return row;
}

LabeledJob plain_row(std::int64_t id, JobStatus status, std::int64_t created_secs,
                     std::optional<std::int64_t> finished_secs = std::nullopt) {
    LabeledJob row;
    row.job.id = id;
    row.job.status = status;
    row.job.created_at = Timestamp::from_seconds(created_secs);
    if (finished_secs) row.job.finished_at = Timestamp::from_seconds(*finished_secs);
    return row;
}

LabeledDataset make_ds(std::vector<LabeledJob> rows) {
    LabeledDataset ds;
    ds.rows = std::move(rows);
    return ds;
}

}  // namespace

TEST_CASE("single flaky job at the reference date") {
    CostModel cm;  // rate 1.0, overhead 0
    cm.reference_date = Timestamp::from_seconds(1000);
    const auto rfm = compute_rfm(make_ds({flaky_row(1, "oom", 1000, 3600.0)}), cm);
    REQUIRE(rfm.size() == 1);
    CHECK(rfm[0].category == "oom");
    CHECK(rfm[0].recency_days == 0.0);
    CHECK(rfm[0].frequency == 1);
    CHECK(rfm[0].monetary == 1.0);
}

TEST_CASE("cost rate and diagnosis overhead are linear") {
    CostModel cm;
    cm.cost_rate = 2.5;
    cm.diagnosis_overhead = 10.0;
    cm.reference_date = Timestamp::from_seconds(1000);
    const auto rfm = compute_rfm(make_ds({flaky_row(1, "oom", 1000, 3600.0)}), cm);
    REQUIRE(rfm.size() == 1);
    CHECK(rfm[0].monetary == 12.5);
}

TEST_CASE("no flaky rows yields an empty table") {
    CHECK(compute_rfm(make_ds({plain_row(1, JobStatus::success, 10)}), CostModel{}).empty());
    CHECK(compute_rfm(make_ds({}), CostModel{}).empty());
}

TEST_CASE("default reference date is max finished_at, else max created_at") {
    LabeledDataset ds = make_ds({
        flaky_row(1, "oom", 100, 60.0),
        plain_row(2, JobStatus::success, 500, 86900),  // finished at 86900s
        plain_row(3, JobStatus::success, 700),
    });
    const auto ref = resolve_reference_date(ds, CostModel{});
    REQUIRE(ref.has_value());
    CHECK(ref->micros == 86900LL * 1'000'000);
    const auto rfm = compute_rfm(ds, CostModel{});
    REQUIRE(rfm.size() == 1);
    // (86900 - 100) / 86400 days
    CHECK(rfm[0].recency_days == doctest::Approx((86900.0 - 100.0) / 86400.0).epsilon(1e-12));

    LabeledDataset no_finished = make_ds({
        flaky_row(1, "oom", 100, 60.0),
        plain_row(2, JobStatus::success, 500),
    });
    const auto ref2 = resolve_reference_date(no_finished, CostModel{});
    REQUIRE(ref2.has_value());
    CHECK(ref2->micros == 500LL * 1'000'000);
}

TEST_CASE("reference date before flaky data is rejected") {
    CostModel cm;
    cm.reference_date = Timestamp::from_seconds(50);
    CHECK_THROWS_AS(compute_rfm(make_ds({flaky_row(1, "oom", 100, 60.0)}), cm), validation_error);
}

TEST_CASE("output is sorted by monetary descending, ties by category") {
    CostModel cm;
    cm.reference_date = Timestamp::from_seconds(1000);
    const auto rfm = compute_rfm(make_ds({
                                     flaky_row(1, "zeta", 100, 3600.0),
                                     flaky_row(2, "alpha", 200, 3600.0),
                                     flaky_row(3, "mid", 300, 7200.0),
                                 }),
                                 cm);
    REQUIRE(rfm.size() == 3);
    CHECK(rfm[0].category == "mid");
    CHECK(rfm[1].category == "alpha");
    CHECK(rfm[2].category == "zeta");
}

TEST_CASE("randomized datasets agree with a flat re-aggregation oracle") {
    SplitMix64 rng(4242);
    static const char* cats[] = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LabeledJob> rows;
        const std::size_t n = 1 + rng.next_index(80);
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.next_double() < 0.5) {
                rows.push_back(flaky_row(static_cast<std::int64_t>(i), cats[rng.next_index(4)],
                                         static_cast<std::int64_t>(rng.next_index(100000)),
                                         static_cast<double>(rng.next_index(5000))));
            } else {
                rows.push_back(plain_row(static_cast<std::int64_t>(i), JobStatus::success,
                                         static_cast<std::int64_t>(rng.next_index(100000))));
            }
        }
        CostModel cm;
        cm.cost_rate = 1.0 + rng.next_double() * 4.0;
        cm.diagnosis_overhead = rng.next_double() * 20.0;
        cm.reference_date = Timestamp::from_seconds(200000);
        const LabeledDataset ds = make_ds(rows);
        const auto rfm = compute_rfm(ds, cm);

        // Independent flat re-scan per category.
        std::map<std::string, std::vector<const LabeledJob*>> groups;
        for (const auto& r : rows) {
            if (r.flaky) groups[r.category].push_back(&r);
        }
        REQUIRE(rfm.size() == groups.size());
        std::int64_t total_freq = 0;
        for (const auto& entry : rfm) {
            const auto& members = groups.at(entry.category);
            CHECK(entry.frequency == static_cast<std::int64_t>(members.size()));
            total_freq += entry.frequency;
            std::int64_t latest = 0;
            double hours = 0.0;
            for (const auto* m : members) {
                latest = std::max(latest, m->job.created_at->micros);
                hours += m->job.duration / 3600.0;
            }
            const double expect_recency =
                static_cast<double>(cm.reference_date->micros - latest) / 86400e6;
            CHECK(entry.recency_days == doctest::Approx(expect_recency).epsilon(1e-12));
            const double expect_monetary =
                hours * cm.cost_rate + static_cast<double>(members.size()) * cm.diagnosis_overhead;
            CHECK(entry.monetary == doctest::Approx(expect_monetary).epsilon(1e-12));
            CHECK(entry.recency_days >= 0.0);
        }
        // Conservation: frequencies sum to the flaky row count.
        std::size_t n_flaky = 0;
        for (const auto& r : rows) n_flaky += r.flaky ? 1 : 0;
        CHECK(total_freq == static_cast<std::int64_t>(n_flaky));
    }
}

TEST_CASE("scaling cost_rate scales every monetary value") {
    std::vector<LabeledJob> rows = {
        flaky_row(1, "a", 100, 120.0),
        flaky_row(2, "b", 300, 5000.0),
        flaky_row(3, "a", 200, 60.0),
    };
    CostModel base;
    base.reference_date = Timestamp::from_seconds(1000);
    const auto rfm1 = compute_rfm(make_ds(rows), base);
    CostModel scaled = base;
    scaled.cost_rate = 3.0;
    const auto rfm3 = compute_rfm(make_ds(rows), scaled);
    REQUIRE(rfm1.size() == rfm3.size());
    for (std::size_t i = 0; i < rfm1.size(); ++i) {
        CHECK(rfm3[i].monetary == doctest::Approx(3.0 * rfm1[i].monetary).epsilon(1e-12));
    }
}

TEST_CASE("evolution counts flaky rows per calendar month") {
    const std::int64_t feb2024 = 1706745600;  // 2024-02-01T00:00:00Z
    const std::int64_t mar2024 = 1709251200;  // 2024-03-01T00:00:00Z
    const auto table = compute_evolution(make_ds({
        flaky_row(1, "oom", feb2024 + 100, 60.0),
        flaky_row(2, "oom", feb2024 + 2000000, 60.0),
        flaky_row(3, "oom", feb2024 + 5, 60.0),
        flaky_row(4, "oom", mar2024 + 10, 60.0),
        plain_row(5, JobStatus::success, mar2024),
    }));
    REQUIRE(table.size() == 2);
    CHECK(table[0] == EvolutionRow{"oom", "2024-02", 3});
    CHECK(table[1] == EvolutionRow{"oom", "2024-03", 1});
}

TEST_CASE("evolution of an empty dataset is empty") {
    CHECK(compute_evolution(make_ds({})).empty());
    CHECK(compute_evolution(make_ds({plain_row(1, JobStatus::failed, 100)})).empty());
}

TEST_CASE("evolution counts sum to the flaky row count") {
    SplitMix64 rng(5110);
    static const char* cats[] = {"x", "y"};
    std::vector<LabeledJob> rows;
    std::size_t n_flaky = 0;
    for (int i = 0; i < 200; ++i) {
        if (rng.next_double() < 0.4) {
            rows.push_back(flaky_row(i, cats[rng.next_index(2)],
                                     static_cast<std::int64_t>(rng.next_double() * 4e7), 60.0));
            ++n_flaky;
        } else {
            rows.push_back(plain_row(i, JobStatus::success, 100));
        }
    }
    const auto table = compute_evolution(make_ds(rows));
    std::int64_t total = 0;
    for (const auto& row : table) total += row.count;
    CHECK(total == static_cast<std::int64_t>(n_flaky));
}

#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "flakerank/errors.hpp"
#include "flakerank/ingest.hpp"
#include "test_util.hpp"

using namespace flakerank;

namespace {

const char* kHeader =
    "id,name,project_id,commit_sha,status,created_at,started_at,finished_at,duration,logs\n";

std::string jobs_csv(const std::string& rows) { return std::string(kHeader) + rows; }

std::string write_jobs_str(const Dataset& ds) {
    std::ostringstream out;
    write_jobs(ds, out);
    return out.str();
}

}  // namespace

TEST_CASE("header-only file parses to zero rows") {
    const auto ds = parse_jobs(testutil::write_file("empty.csv", kHeader));
    CHECK(ds.rows.empty());
    CHECK(ds.stats.rows == 0);
    CHECK(ds.inline_logs);
}

TEST_CASE("basic row with all fields") {
    const auto ds = parse_jobs(testutil::write_file("one.csv",
        jobs_csv("7,build,p1,abc,failed,2024-01-01T00:00:00Z,2024-01-01T00:01:00Z,"
                 "2024-01-01T00:11:00Z,600,\"line1\nline2\"\n")));
    REQUIRE(ds.rows.size() == 1);
    const JobRecord& j = ds.rows[0];
    CHECK(j.id == 7);
    CHECK(j.name == "build");
    CHECK(j.status == JobStatus::failed);
    CHECK(j.duration == 600.0);
    CHECK(j.logs == "line1\nline2");
    CHECK(j.created_at->micros == 1704067200LL * 1'000'000);
}

TEST_CASE("offset timestamps normalize to UTC") {
    const auto ds = parse_jobs(testutil::write_file("tz.csv",
        jobs_csv("1,b,p,s,success,2024-01-01T02:00:00+02:00,,,60,\n")));
    CHECK(ds.rows[0].created_at->micros == 1704067200LL * 1'000'000);
    CHECK(write_jobs_str(ds).find("2024-01-01T00:00:00Z") != std::string::npos);
}

TEST_CASE("missing duration is backfilled from timestamps") {
    const auto ds = parse_jobs(testutil::write_file("backfill.csv",
        jobs_csv("1,b,p,s,success,2024-01-01T00:00:00Z,2024-01-01T00:00:00Z,"
                 "2024-01-01T01:00:00Z,,\n"
                 "2,b,p,s,failed,2024-01-01T00:00:00Z,,,,\n")));
    CHECK(ds.rows[0].duration == 3600.0);
    CHECK(ds.rows[1].duration == 0.0);
    CHECK(ds.stats.duration_backfilled == 1);
    CHECK(ds.stats.duration_defaulted == 1);
}

TEST_CASE("empty optional timestamps stay missing") {
    const auto ds = parse_jobs(testutil::write_file("opt.csv",
        jobs_csv("1,b,p,s,success,,,,5,\n")));
    CHECK_FALSE(ds.rows[0].created_at.has_value());
    CHECK_FALSE(ds.rows[0].started_at.has_value());
    CHECK_FALSE(ds.rows[0].finished_at.has_value());
}

TEST_CASE("validation errors carry the offending row") {
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("badstatus.csv", jobs_csv("1,b,p,s,running,,,,5,\n"))),
        doctest::Contains("bad status token: running"), validation_error);
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("badts.csv",
                                        jobs_csv("1,b,p,s,failed,2024-99-01T00:00:00Z,,,5,\n"))),
        doctest::Contains("created_at"), validation_error);
    CHECK_THROWS_AS(
        parse_jobs(testutil::write_file("badid.csv", jobs_csv("x,b,p,s,failed,,,,5,\n"))),
        validation_error);
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("dupid.csv",
                                        jobs_csv("1,b,p,s,failed,,,,5,\n1,c,p,s,failed,,,,5,\n"))),
        doctest::Contains("duplicate id 1"), validation_error);
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("negdur.csv", jobs_csv("1,b,p,s,failed,,,,-5,\n"))),
        doctest::Contains("negative duration"), validation_error);
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("order.csv",
                                        jobs_csv("1,b,p,s,failed,,2024-01-02T00:00:00Z,"
                                                 "2024-01-01T00:00:00Z,,\n"))),
        doctest::Contains("finished_at precedes"), validation_error);
}

TEST_CASE("structural problems are parse errors") {
    CHECK_THROWS_AS(
        parse_jobs(testutil::write_file("short.csv", jobs_csv("1,b,p,s,failed,,\n"))),
        parse_error);
    CHECK_THROWS_AS(parse_jobs(testutil::write_file("blank.csv", "")), parse_error);
}

TEST_CASE("missing required column is reported by name") {
    CHECK_THROWS_WITH_AS(
        parse_jobs(testutil::write_file("nocommit.csv",
                                        "id,name,project_id,status,created_at,started_at,"
                                        "finished_at,duration,logs\n")),
        doctest::Contains("missing column 'commit_sha'"), validation_error);
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(parse_jobs("/nonexistent/path/jobs.csv"), io_error);
}

TEST_CASE("logs column absent requires --logs-dir") {
    const std::string no_logs_header =
        "id,name,project_id,commit_sha,status,created_at,started_at,finished_at,duration\n";
    const std::string path = testutil::write_file("nologs.csv",
        no_logs_header + "3,b,p,s,failed,,,,5\n");
    CHECK_THROWS_WITH_AS(parse_jobs(path), doctest::Contains("logs"), validation_error);

    const auto dir = testutil::tmp_dir() / "logs_a";
    std::filesystem::create_directories(dir);
    testutil::write_file("logs_a/3.log", "fatal: out of memory\n");
    const auto ds = parse_jobs(path, dir.string());
    REQUIRE(ds.rows.size() == 1);
    CHECK(ds.rows[0].logs == "fatal: out of memory\n");
    CHECK_FALSE(ds.inline_logs);
    // Sidecar-mode serialization omits the logs column.
    CHECK(write_jobs_str(ds).find(",logs") == std::string::npos);
}

TEST_CASE("missing sidecar log file is reported with the job id") {
    const std::string no_logs_header =
        "id,name,project_id,commit_sha,status,created_at,started_at,finished_at,duration\n";
    const std::string path = testutil::write_file("nolog2.csv",
        no_logs_header + "9,b,p,s,failed,,,,5\n");
    const auto dir = testutil::tmp_dir() / "logs_empty";
    std::filesystem::create_directories(dir);
    CHECK_THROWS_WITH_AS(parse_jobs(path, dir.string()),
                         doctest::Contains("missing log file for job 9"), validation_error);
}

TEST_CASE("sidecar wins over the inline logs column") {
    const std::string path = testutil::write_file("both.csv",
        jobs_csv("4,b,p,s,failed,,,,5,inline text\n5,b,p,s2,failed,,,,5,kept inline\n"));
    const auto dir = testutil::tmp_dir() / "logs_b";
    std::filesystem::create_directories(dir);
    testutil::write_file("logs_b/4.log", "sidecar text");
    const auto ds = parse_jobs(path, dir.string());
    CHECK(ds.rows[0].logs == "sidecar text");
    CHECK(ds.rows[1].logs == "kept inline");  // no sidecar file for id 5
}

TEST_CASE("invalid UTF-8 in logs is replaced at parse time") {
    const auto ds = parse_jobs(testutil::write_file("utf8.csv",
        jobs_csv("1,b,p,s,failed,,,,5,bad\xFF byte\n")));
    CHECK(ds.rows[0].logs == "bad\xEF\xBF\xBD byte");
}

TEST_CASE("parse-write round trip is the identity and stabilizes byte-wise") {
    const std::string original = jobs_csv(
        "1,build,p1,abc,failed,2024-01-01T00:00:00Z,2024-01-01T00:01:00Z,2024-01-01T00:11:00Z,"
        "600,\"multi\nline, with comma and \"\"quote\"\"\"\n"
        "2,lint,p1,abc,success,2024-02-03T12:30:00+01:00,,,42.5,plain\n"
        "3,test,p2,def,canceled,,,,0,\n");
    const std::string path = testutil::write_file("round.csv", original);
    const Dataset first = parse_jobs(path);
    const std::string written = write_jobs_str(first);
    const Dataset second = parse_jobs(testutil::write_file("round2.csv", written));
    CHECK(first.rows == second.rows);
    CHECK(write_jobs_str(second) == written);
}

TEST_CASE("labeled rows serialize flaky and category in the last columns") {
    LabeledDataset ds;
    ds.inline_logs = true;
    LabeledJob row;
    row.job.id = 1;
    row.job.name = "b";
    row.job.project_id = "p";
    row.job.commit_sha = "s";
    row.job.status = JobStatus::failed;
    row.job.duration = 5.0;
    row.flaky = true;
    row.category = "oom";
    ds.rows.push_back(row);
    std::ostringstream out;
    write_labeled(ds, out);
    const std::string text = out.str();
    CHECK(text.find(",true,oom\n") != std::string::npos);
    CHECK(text.find("flaky,category") != std::string::npos);
}

TEST_CASE("labeled parse validates the flaky/category invariants") {
    const std::string header =
        "id,name,project_id,commit_sha,status,created_at,started_at,finished_at,duration,logs,"
        "flaky,category\n";
    CHECK_THROWS_AS(
        parse_labeled(testutil::write_file("lab1.csv",
                                           header + "1,b,p,s,failed,,,,5,,true,\n")),
        validation_error);
    CHECK_THROWS_AS(
        parse_labeled(testutil::write_file("lab2.csv",
                                           header + "1,b,p,s,success,,,,5,,false,oom\n")),
        validation_error);
    CHECK_THROWS_AS(
        parse_labeled(testutil::write_file("lab3.csv",
                                           header + "1,b,p,s,success,,,,5,,true,oom\n")),
        validation_error);
    CHECK_THROWS_AS(
        parse_labeled(testutil::write_file("lab4.csv",
                                           header + "1,b,p,s,failed,,,,5,,maybe,\n")),
        validation_error);
    const auto ok = parse_labeled(testutil::write_file("lab5.csv",
        header + "1,b,p,s,failed,,,,5,boom,true,oom\n2,b,p,s,success,,,,5,,false,\n"));
    REQUIRE(ok.rows.size() == 2);
    CHECK(ok.rows[0].flaky);
    CHECK(ok.rows[0].category == "oom");
    // Labeled data without a logs column needs no sidecar.
    const std::string slim_header =
        "id,name,project_id,commit_sha,status,created_at,started_at,finished_at,duration,"
        "flaky,category\n";
    const auto slim = parse_labeled(testutil::write_file("lab6.csv",
        slim_header + "1,b,p,s,failed,,,,5,true,oom\n"));
    CHECK(slim.rows[0].job.logs.empty());
    CHECK_FALSE(slim.inline_logs);
}

TEST_CASE("rfm and evolution and ranked tables round-trip") {
    std::vector<CategoryRfm> rfm = {
        {"oom", 1.5, 12, 340.25},
        {"net", 0.0, 3, 12.75},
    };
    std::ostringstream out;
    write_rfm(rfm, out);
    CHECK(out.str().rfind("category,recency,frequency,monetary\n", 0) == 0);
    const auto back = parse_rfm(testutil::write_file("rfm.csv", out.str()));
    CHECK(back == rfm);

    std::vector<EvolutionRow> evo = {{"oom", "2024-01", 3}, {"oom", "2024-02", 1}};
    std::ostringstream eout;
    write_evolution(evo, eout);
    CHECK(eout.str() == "category,period,count\noom,2024-01,3\noom,2024-02,1\n");

    std::vector<RankedCategory> ranked;
    RankedCategory rc;
    rc.base = {"oom", 1.5, 12, 340.25};
    rc.r_score = 5;
    rc.f_score = 4;
    rc.m_score = 5;
    rc.cluster = 1;
    rc.pattern = "R+F+M+";
    rc.rank = 1;
    ranked.push_back(rc);
    std::ostringstream rout;
    write_ranked(ranked, rout);
    const auto rback = parse_ranked(testutil::write_file("ranked.csv", rout.str()));
    REQUIRE(rback.size() == 1);
    CHECK(rback[0] == rc);
}

TEST_CASE("rfm parse validates value ranges") {
    const std::string header = "category,recency,frequency,monetary\n";
    CHECK_THROWS_AS(parse_rfm(testutil::write_file("rfm1.csv", header + "oom,-1,3,5\n")),
                    validation_error);
    CHECK_THROWS_AS(parse_rfm(testutil::write_file("rfm2.csv", header + "oom,1,0,5\n")),
                    validation_error);
    CHECK_THROWS_AS(parse_rfm(testutil::write_file("rfm3.csv", header + ",1,3,5\n")),
                    validation_error);
    CHECK_THROWS_AS(parse_rfm(testutil::write_file("rfm4.csv", header + "oom,1,3,x\n")),
                    validation_error);
}

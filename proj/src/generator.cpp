#include "flakerank/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "flakerank/errors.hpp"
#include "flakerank/ingest.hpp"
#include "flakerank/rng.hpp"

namespace flakerank {

namespace {

const std::vector<std::string>& job_names() {
    static const std::vector<std::string> kNames = {
        "build",         "lint",           "test-unit", "test-integration",
        "test-e2e",      "package",        "security-scan", "deploy-staging",
    };
    return kNames;
}

const std::vector<std::string>& project_ids() {
    static const std::vector<std::string> kProjects = {
        "team-alpha/api", "team-alpha/worker", "team-beta/webapp",
        "team-beta/mobile", "platform/data-pipeline",
    };
    return kProjects;
}

const std::vector<std::string>& noise_lines() {
    static const std::vector<std::string> kNoise = {
        "$ make -j4 all",
        "Compiling core v1.4.2",
        "Downloading artifacts for build 18234",
        "Restoring cache from key ci-cache-v3",
        "Running with runner 14.8.2 on shared-runner-7",
        "Step 7/12 : COPY . /app",
        "Linking target/debug/app",
        "[INFO] Resolving dependencies took 4.2s",
        "Uploading artifacts: 12 files",
        "All 148 tests passed",
        "warning: unused variable `tmp`",
        "Fetching changes with git depth set to 50",
        "Executing \"step_script\" stage of the job script",
        "Using docker image sha256:a1b2c3 for builder",
        "Installed 214 packages in 3.1s",
        "Cleaning up project directory and file based variables",
        "Finished in 12.8 seconds",
        "cc -O2 -o build/main.o -c src/main.c",
        "PASS src/pipeline_test.go 3.41s",
        "Seeding database fixtures, 82 rows",
    };
    return kNoise;
}

const std::vector<std::string>& failure_noise_lines() {
    static const std::vector<std::string> kFailNoise = {
        "error: expected ';' after expression",
        "FAIL src/api_test.go 1.22s",
        "make: *** [Makefile:112: all] Error 2",
        "assertion failed: left == right",
        "test result: FAILED. 3 passed; 1 failed",
    };
    return kFailNoise;
}

std::string random_sha(SplitMix64& rng) {
    static const char* kHex = "0123456789abcdef";
    std::string sha(40, '0');
    for (auto& c : sha) c = kHex[rng.next_index(16)];
    return sha;
}

std::string pick(const std::vector<std::string>& pool, SplitMix64& rng) {
    return pool[rng.next_index(pool.size())];
}

std::string build_log(SplitMix64& rng, std::size_t lines, const std::string* marker,
                      bool failure) {
    std::vector<std::string> out;
    out.reserve(lines + 1);
    for (std::size_t i = 0; i < lines; ++i) {
        std::string line = pick(noise_lines(), rng);
        if (failure && rng.next_double() < 0.25) line = pick(failure_noise_lines(), rng);
        if (rng.next_double() < 0.10) line = "\x1b[32m" + line + "\x1b[0m";
        if (rng.next_double() < 0.02) line += "\xFF";  // stray invalid byte, exports do this
        out.push_back(std::move(line));
    }
    if (marker) {
        std::string line = *marker;
        if (rng.next_double() < 0.30) {
            // Split the marker with a color code; only ANSI stripping
            // makes the literal contiguous again.
            const std::size_t cut = 1 + rng.next_index(line.size() - 1);
            line = line.substr(0, cut) + "\x1b[0;31m" + line.substr(cut) + "\x1b[0m";
        }
        const std::size_t at = rng.next_index(out.size() + 1);
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), line);
    }
    std::string joined;
    for (const auto& l : out) {
        joined += l;
        joined += '\n';
    }
    return joined;
}

struct PlannedJob {
    JobRecord job;
    std::size_t seq = 0;  // insertion order, tie-break for sorting
    std::optional<std::string> truth_category;
};

std::size_t weighted_pick(const std::vector<CategoryMix>& mix, SplitMix64& rng) {
    const double u = rng.next_double();
    double cum = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        cum += mix[i].weight;
        if (u < cum) return i;
    }
    return mix.size() - 1;
}

}  // namespace

std::vector<CategoryMix> default_category_mix() {
    return {
        {"job_timeout", 0.22, "ERROR: Job failed: execution took longer than 3600 seconds", 3600, 7200},
        {"runner_failure", 0.08, "ERROR: Job failed (system failure): runner system failure", 60, 900},
        {"connection_error", 0.20,
         "curl: (7) Failed to connect to proxy.internal port 443: Connection timed out", 120, 1200},
        {"out_of_memory", 0.15, "fatal error: runtime: out of memory", 300, 3600},
        {"docker_pull_error", 0.10,
         "ERROR: Job failed: failed to pull image \"registry.example.com/group/app:latest\"", 30, 600},
        {"git_checkout_error", 0.08,
         "fatal: unable to access 'https://git.example.com/group/repo.git/': The requested URL "
         "returned error: 503",
         20, 300},
        {"dependency_install_error", 0.12,
         "ERROR: Could not find a version that satisfies the requirement internal-lib==2.4.1", 120,
         1800},
        {"disk_quota_exceeded", 0.05,
         "write /builds/group/app/target/debug/deps/libapp.rlib: no space left on device", 600,
         5400},
    };
}

Manifest generate_corpus(const GeneratorSpec& spec, const std::string& csv_path,
                         const std::optional<std::string>& manifest_path) {
    if (spec.flaky_rate < 0.0 || spec.flaky_rate > 0.5) {
        throw validation_error("flaky_rate must be in [0, 0.5]");
    }
    if (spec.span_days <= 0.0) throw validation_error("span_days must be positive");
    const std::vector<CategoryMix> mix =
        spec.categories.empty() ? default_category_mix() : spec.categories;
    double weight_sum = 0.0;
    for (const auto& c : mix) weight_sum += c.weight;
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw validation_error("category weights must sum to 1");
    }

    SplitMix64 rng(spec.seed);
    const auto span_secs = static_cast<std::int64_t>(spec.span_days * 86400.0);
    std::size_t n_flaky = static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.n_jobs) * spec.flaky_rate));
    n_flaky = std::min(n_flaky, spec.n_jobs / 2);

    std::vector<PlannedJob> plan;
    plan.reserve(spec.n_jobs);

    auto schedule = [&](JobRecord& job, std::int64_t created_secs, int duration) {
        job.created_at = Timestamp{spec.start.micros + created_secs * 1'000'000};
        const std::int64_t queue = 5 + static_cast<std::int64_t>(rng.next_index(295));
        job.started_at = Timestamp{job.created_at->micros + queue * 1'000'000};
        job.finished_at = Timestamp{job.started_at->micros + std::int64_t{duration} * 1'000'000};
        job.duration = duration;
    };

    const std::int64_t pair_margin = 7200;
    for (std::size_t p = 0; p < n_flaky; ++p) {
        const CategoryMix& cat = mix[weighted_pick(mix, rng)];
        const std::string sha = random_sha(rng);
        const std::string project = pick(project_ids(), rng);
        const std::string name = pick(job_names(), rng);
        const std::int64_t t_fail =
            static_cast<std::int64_t>(rng.next_double() *
                                      static_cast<double>(std::max<std::int64_t>(1, span_secs - pair_margin)));
        const std::int64_t delta = 300 + static_cast<std::int64_t>(rng.next_index(5100));

        PlannedJob failed;
        failed.job.name = name;
        failed.job.project_id = project;
        failed.job.commit_sha = sha;
        failed.job.status = JobStatus::failed;
        const int fail_duration =
            cat.min_duration + static_cast<int>(rng.next_index(
                                   static_cast<std::size_t>(cat.max_duration - cat.min_duration + 1)));
        schedule(failed.job, t_fail, fail_duration);
        failed.job.logs = build_log(rng, 5 + rng.next_index(9), &cat.marker, true);
        failed.truth_category = cat.category;
        failed.seq = plan.size();
        plan.push_back(std::move(failed));

        PlannedJob rerun;
        rerun.job.name = name;
        rerun.job.project_id = project;
        rerun.job.commit_sha = sha;
        rerun.job.status = JobStatus::success;
        schedule(rerun.job, t_fail + delta, 60 + static_cast<int>(rng.next_index(3540)));
        rerun.job.logs = build_log(rng, 3 + rng.next_index(6), nullptr, false);
        rerun.seq = plan.size();
        plan.push_back(std::move(rerun));
    }

    const std::size_t fillers = spec.n_jobs - 2 * n_flaky;
    for (std::size_t i = 0; i < fillers; ++i) {
        PlannedJob filler;
        filler.job.name = pick(job_names(), rng);
        filler.job.project_id = pick(project_ids(), rng);
        filler.job.commit_sha = random_sha(rng);
        const double roll = rng.next_double();
        if (roll < 0.84) {
            filler.job.status = JobStatus::success;
        } else if (roll < 0.94) {
            filler.job.status = JobStatus::failed;
        } else if (roll < 0.98) {
            filler.job.status = JobStatus::canceled;
        } else {
            filler.job.status = JobStatus::skipped;
        }
        const std::int64_t t =
            static_cast<std::int64_t>(rng.next_double() * static_cast<double>(span_secs));
        const bool failed = filler.job.status == JobStatus::failed;
        schedule(filler.job, t, 30 + static_cast<int>(rng.next_index(1771)));
        filler.job.logs = build_log(rng, 4 + rng.next_index(7), nullptr, failed);
        filler.seq = plan.size();
        plan.push_back(std::move(filler));
    }

    std::sort(plan.begin(), plan.end(), [](const PlannedJob& a, const PlannedJob& b) {
        if (a.job.created_at->micros != b.job.created_at->micros) {
            return a.job.created_at->micros < b.job.created_at->micros;
        }
        return a.seq < b.seq;
    });

    Manifest manifest;
    manifest.n_rows = plan.size();
    manifest.n_flaky = n_flaky;
    manifest.seed = spec.seed;
    manifest.flaky_rate = spec.flaky_rate;

    Dataset ds;
    ds.source_path = csv_path;
    ds.inline_logs = true;
    ds.rows.reserve(plan.size());
    std::int64_t next_id = 1;
    for (auto& planned : plan) {
        planned.job.id = next_id++;
        if (planned.truth_category) {
            manifest.flaky[planned.job.id] = *planned.truth_category;
            ++manifest.category_counts[*planned.truth_category];
        }
        ds.rows.push_back(std::move(planned.job));
    }

    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw io_error("cannot write " + csv_path);
    write_jobs(ds, out);
    out.flush();
    if (!out) throw io_error("write failed: " + csv_path);

    if (manifest_path) save_manifest(manifest, *manifest_path);
    return manifest;
}

void save_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json j;
    j["n_rows"] = m.n_rows;
    j["n_flaky"] = m.n_flaky;
    j["seed"] = m.seed;
    j["flaky_rate"] = m.flaky_rate;
    j["category_counts"] = m.category_counts;
    nlohmann::json flaky = nlohmann::json::object();
    for (const auto& [id, category] : m.flaky) flaky[std::to_string(id)] = category;
    j["flaky"] = flaky;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    Manifest m;
    m.n_rows = j.at("n_rows").get<std::size_t>();
    m.n_flaky = j.at("n_flaky").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.flaky_rate = j.at("flaky_rate").get<double>();
    m.category_counts = j.at("category_counts").get<std::map<std::string, std::int64_t>>();
    for (const auto& [key, value] : j.at("flaky").items()) {
        m.flaky[std::stoll(key)] = value.get<std::string>();
    }
    return m;
}

}  // namespace flakerank

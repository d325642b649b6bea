#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flakerank/time.hpp"
#include "flakerank/types.hpp"

namespace flakerank {

struct CategoryMix {
    std::string category;
    double weight = 0.0;
    std::string marker;  // line embedded in the failed job's log
    int min_duration = 60;
    int max_duration = 3600;
};

struct GeneratorSpec {
    std::size_t n_jobs = 0;
    double flaky_rate = 0.05;
    std::vector<CategoryMix> categories;  // empty = default mix
    Timestamp start = Timestamp::from_seconds(1704067200);  // 2024-01-01T00:00:00Z
    double span_days = 365.0;
    std::uint64_t seed = 42;
};

/// Ground truth written alongside a generated corpus.
struct Manifest {
    std::size_t n_rows = 0;
    std::size_t n_flaky = 0;
    std::uint64_t seed = 0;
    double flaky_rate = 0.0;
    std::map<std::string, std::int64_t> category_counts;
    std::map<std::int64_t, std::string> flaky;  // job id -> injected category
};

/// The default category mix: the 8 starter-rulebook categories with
/// markers that each match exactly their own rule.
std::vector<CategoryMix> default_category_mix();

/// Writes a jobs CSV with inline logs. Flaky failures are realized as a
/// failed job plus a later success in the same (project, sha, name)
/// group, the category marker embedded in the failed log (sometimes
/// split by ANSI color codes). Deterministic for a given spec.
Manifest generate_corpus(const GeneratorSpec& spec, const std::string& csv_path,
                         const std::optional<std::string>& manifest_path = {});

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

}  // namespace flakerank

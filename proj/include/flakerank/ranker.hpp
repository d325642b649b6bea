#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flakerank/kmeans.hpp"
#include "flakerank/types.hpp"

namespace flakerank {

enum class Direction { higher_is_better, lower_is_better };

/// Strict-rank quintile scores in [1,5]: score = 1 + floor(5 * c / n)
/// capped at 5, where c counts values strictly better-ranked than v.
/// Equal values always receive equal scores.
std::vector<int> score_quintiles(std::span<const double> values, Direction direction);

struct RankResult {
    std::vector<RankedCategory> ranked;         // in rank order (rank 1 first)
    std::vector<std::string> point_categories;  // input order, aligns with model
    kmeans::ClusterModel model;
    std::size_t k_used = 0;
    bool auto_k = false;
};

/// Stage 3: quintile-scores the RFM triples, clusters the score triples
/// (auto-k by silhouette unless `k` is given; fewer than 3 categories all
/// land in cluster 0), derives per-cluster patterns against the global
/// score means, and ranks clusters by (M, F, R) centroid then categories
/// by monetary/frequency/recency/name.
RankResult rank_categories(const std::vector<CategoryRfm>& rfm,
                           std::optional<std::size_t> k = std::nullopt,
                           std::uint64_t seed = 42);

/// Human label for a serialized pattern such as "R+F+M-".
std::string_view pattern_label(std::string_view pattern);

/// Deterministic markdown report: ranking table, per-pattern summary,
/// top-5 costliest callout, and optional monthly sparklines.
std::string render_report(const std::vector<RankedCategory>& ranked,
                          const std::vector<EvolutionRow>& evolution = {});

}  // namespace flakerank

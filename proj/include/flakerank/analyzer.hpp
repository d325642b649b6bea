#pragma once

#include <optional>
#include <vector>

#include "flakerank/types.hpp"

namespace flakerank {

/// Prices flaky failures: machine time at a flat hourly rate plus an
/// optional flat per-failure diagnosis overhead.
struct CostModel {
    double cost_rate = 1.0;           // currency per compute-hour
    double diagnosis_overhead = 0.0;  // currency per flaky failure
    std::optional<Timestamp> reference_date;  // default: derived from the dataset
};

/// Resolved reference date: explicit value, else max finished_at, else
/// max created_at over the dataset.
std::optional<Timestamp> resolve_reference_date(const LabeledDataset& labeled,
                                                const CostModel& cm);

/// Stage 2: per-category R/F/M over flaky rows, sorted by monetary
/// descending (ties by category name). Validates that the reference date
/// is not before any flaky row's created_at.
std::vector<CategoryRfm> compute_rfm(const LabeledDataset& labeled, const CostModel& cm);

/// Flaky-failure counts per (category, calendar month of created_at),
/// sorted by category then period. Zero-count months are omitted.
std::vector<EvolutionRow> compute_evolution(const LabeledDataset& labeled);

}  // namespace flakerank

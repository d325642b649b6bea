#include "flakerank/analyzer.hpp"

#include <algorithm>
#include <map>

#include "flakerank/errors.hpp"

namespace flakerank {

std::optional<Timestamp> resolve_reference_date(const LabeledDataset& labeled,
                                                const CostModel& cm) {
    if (cm.reference_date) return cm.reference_date;
    std::optional<Timestamp> max_finished;
    std::optional<Timestamp> max_created;
    for (const auto& row : labeled.rows) {
        if (row.job.finished_at && (!max_finished || *row.job.finished_at > *max_finished)) {
            max_finished = row.job.finished_at;
        }
        if (row.job.created_at && (!max_created || *row.job.created_at > *max_created)) {
            max_created = row.job.created_at;
        }
    }
    return max_finished ? max_finished : max_created;
}

std::vector<CategoryRfm> compute_rfm(const LabeledDataset& labeled, const CostModel& cm) {
    if (cm.cost_rate < 0) throw validation_error("cost_rate must be >= 0");
    if (cm.diagnosis_overhead < 0) throw validation_error("diagnosis_overhead must be >= 0");

    struct Agg {
        Timestamp latest{};
        std::int64_t count = 0;
        double hours = 0.0;
    };
    std::map<std::string, Agg> by_category;
    for (const auto& row : labeled.rows) {
        if (!row.flaky) continue;
        // Flaky rows always carry created_at: rerun evidence is dated.
        Agg& agg = by_category[row.category];
        if (row.job.created_at && (agg.count == 0 || *row.job.created_at > agg.latest)) {
            agg.latest = *row.job.created_at;
        }
        ++agg.count;
        agg.hours += row.job.duration / 3600.0;
    }
    if (by_category.empty()) return {};

    const std::optional<Timestamp> ref = resolve_reference_date(labeled, cm);
    for (const auto& [category, agg] : by_category) {
        if (ref && agg.latest > *ref) {
            throw validation_error("reference date " + format_rfc3339(*ref) +
                                   " precedes flaky data in '" + category + "' (" +
                                   format_rfc3339(agg.latest) + ")");
        }
    }

    std::vector<CategoryRfm> out;
    out.reserve(by_category.size());
    for (const auto& [category, agg] : by_category) {
        CategoryRfm r;
        r.category = category;
        r.recency_days = ref ? static_cast<double>(ref->micros - agg.latest.micros) / 86400e6 : 0.0;
        r.frequency = agg.count;
        r.monetary = agg.hours * cm.cost_rate +
                     static_cast<double>(agg.count) * cm.diagnosis_overhead;
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const CategoryRfm& a, const CategoryRfm& b) {
        if (a.monetary != b.monetary) return a.monetary > b.monetary;
        return a.category < b.category;
    });
    return out;
}

std::vector<EvolutionRow> compute_evolution(const LabeledDataset& labeled) {
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (const auto& row : labeled.rows) {
        if (!row.flaky || !row.job.created_at) continue;
        ++counts[{row.category, month_of(*row.job.created_at)}];
    }
    std::vector<EvolutionRow> out;
    out.reserve(counts.size());
    for (const auto& [key, count] : counts) {
        out.push_back(EvolutionRow{key.first, key.second, count});
    }
    return out;
}

}  // namespace flakerank

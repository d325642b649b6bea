#include "flakerank/ranker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <tuple>

#include "flakerank/errors.hpp"

namespace flakerank {

std::vector<int> score_quintiles(std::span<const double> values, Direction direction) {
    if (values.empty()) throw validation_error("cannot score an empty value list");
    for (double v : values) {
        if (!std::isfinite(v)) throw validation_error("cannot score non-finite values");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<std::size_t>(values.size());

    std::vector<int> scores;
    scores.reserve(n);
    for (double v : values) {
        std::size_t better;
        if (direction == Direction::higher_is_better) {
            better = static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
        } else {
            better = static_cast<std::size_t>(
                sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v));
        }
        const int score = 1 + static_cast<int>(5 * better / n);
        scores.push_back(std::min(score, 5));
    }
    return scores;
}

namespace {

std::string make_pattern(std::span<const double> centroid, std::span<const double> means) {
    std::string p;
    const char names[3] = {'R', 'F', 'M'};
    for (std::size_t i = 0; i < 3; ++i) {
        p.push_back(names[i]);
        p.push_back(centroid[i] >= means[i] ? '+' : '-');
    }
    return p;
}

}  // namespace

std::string_view pattern_label(std::string_view pattern) {
    if (pattern == "R+F+M+") return "persistent & wasteful";
    if (pattern == "R+F+M-") return "persistent";
    if (pattern == "R+F-M+") return "recently expensive";
    if (pattern == "R-F+M+") return "legacy drain";
    if (pattern == "R+F-M-") return "emerging";
    if (pattern == "R-F+M-") return "fading churn";
    if (pattern == "R-F-M+") return "past incident";
    if (pattern == "R-F-M-") return "dormant";
    return "unknown";
}

RankResult rank_categories(const std::vector<CategoryRfm>& rfm, std::optional<std::size_t> k,
                           std::uint64_t seed) {
    RankResult result;
    const std::size_t n = rfm.size();
    if (n == 0) return result;

    std::vector<double> recency(n), frequency(n), monetary(n);
    for (std::size_t i = 0; i < n; ++i) {
        recency[i] = rfm[i].recency_days;
        frequency[i] = static_cast<double>(rfm[i].frequency);
        monetary[i] = rfm[i].monetary;
        result.point_categories.push_back(rfm[i].category);
    }
    const std::vector<int> r_scores = score_quintiles(recency, Direction::lower_is_better);
    const std::vector<int> f_scores = score_quintiles(frequency, Direction::higher_is_better);
    const std::vector<int> m_scores = score_quintiles(monetary, Direction::higher_is_better);

    kmeans::PointSet points;
    points.n = n;
    points.d = 3;
    points.xs.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        points.xs.push_back(static_cast<double>(r_scores[i]));
        points.xs.push_back(static_cast<double>(f_scores[i]));
        points.xs.push_back(static_cast<double>(m_scores[i]));
    }

    kmeans::FitParams params;
    params.seed = seed;
    if (k) {
        result.model = kmeans::kmeans_fit(points, *k, params);
        result.k_used = *k;
    } else if (n >= 3) {
        auto sel = kmeans::select_k(points, 2, 0, params);
        result.model = std::move(sel.model);
        result.k_used = sel.k;
        result.auto_k = true;
    } else {
        // Too few categories to cluster: one catch-all cluster.
        result.model = kmeans::kmeans_fit(points, 1, params);
        result.k_used = 1;
    }

    std::array<double, 3> means{};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 3; ++c) means[c] += points.xs[i * 3 + c];
    }
    for (auto& m : means) m /= static_cast<double>(n);

    const std::size_t n_clusters = result.model.k;
    std::vector<std::string> patterns(n_clusters);
    for (std::size_t j = 0; j < n_clusters; ++j) {
        patterns[j] = make_pattern(result.model.centroid(j), means);
    }

    // Cluster priority: descending lexicographic on (M, F, R) centroid.
    std::vector<std::size_t> cluster_order(n_clusters);
    for (std::size_t j = 0; j < n_clusters; ++j) cluster_order[j] = j;
    std::sort(cluster_order.begin(), cluster_order.end(), [&](std::size_t a, std::size_t b) {
        const auto ca = result.model.centroid(a);
        const auto cb = result.model.centroid(b);
        if (ca[2] != cb[2]) return ca[2] > cb[2];
        if (ca[1] != cb[1]) return ca[1] > cb[1];
        if (ca[0] != cb[0]) return ca[0] > cb[0];
        return a < b;
    });

    std::vector<std::vector<std::size_t>> members(n_clusters);
    for (std::size_t i = 0; i < n; ++i) members[result.model.assignments[i]].push_back(i);
    for (auto& m : members) {
        std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
            if (rfm[a].monetary != rfm[b].monetary) return rfm[a].monetary > rfm[b].monetary;
            if (rfm[a].frequency != rfm[b].frequency) return rfm[a].frequency > rfm[b].frequency;
            if (rfm[a].recency_days != rfm[b].recency_days) {
                return rfm[a].recency_days < rfm[b].recency_days;
            }
            return rfm[a].category < rfm[b].category;
        });
    }

    int rank = 1;
    for (const std::size_t j : cluster_order) {
        for (const std::size_t i : members[j]) {
            RankedCategory rc;
            rc.base = rfm[i];
            rc.r_score = r_scores[i];
            rc.f_score = f_scores[i];
            rc.m_score = m_scores[i];
            rc.cluster = static_cast<int>(j);
            rc.pattern = patterns[j];
            rc.rank = rank++;
            result.ranked.push_back(std::move(rc));
        }
    }
    return result;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

struct Period {
    int year;
    int month;

    bool operator<(const Period& o) const {
        return year != o.year ? year < o.year : month < o.month;
    }
    bool operator==(const Period& o) const = default;

    Period& operator++() {
        if (++month > 12) {
            month = 1;
            ++year;
        }
        return *this;
    }
    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
        return buf;
    }
};

Period parse_period(const std::string& s) {
    return Period{std::atoi(s.substr(0, 4).c_str()), std::atoi(s.substr(5, 2).c_str())};
}

// One glyph per month; '·' marks months with no failures.
std::string sparkline(const std::vector<std::int64_t>& counts) {
    static const char* kBlocks[8] = {"▁", "▂", "▃", "▄",
                                     "▅", "▆", "▇", "█"};
    std::int64_t peak = 0;
    for (auto c : counts) peak = std::max(peak, c);
    std::string out;
    for (auto c : counts) {
        if (c == 0) {
            out += "·";
        } else {
            const auto idx = static_cast<std::size_t>((7 * c) / peak);
            out += kBlocks[std::min<std::size_t>(idx, 7)];
        }
    }
    return out;
}

}  // namespace

std::string render_report(const std::vector<RankedCategory>& ranked,
                          const std::vector<EvolutionRow>& evolution) {
    std::string md;
    md += "# Flaky failure category report\n\n";
    if (ranked.empty()) {
        md += "No flaky failure categories found.\n";
        return md;
    }

    double total_cost = 0.0;
    std::int64_t total_freq = 0;
    std::size_t n_clusters = 0;
    for (const auto& r : ranked) {
        total_cost += r.base.monetary;
        total_freq += r.base.frequency;
        n_clusters = std::max(n_clusters, static_cast<std::size_t>(r.cluster) + 1);
    }
    md += std::to_string(ranked.size()) + (ranked.size() == 1 ? " category" : " categories");
    md += ", " + std::to_string(total_freq) + " flaky failures, total cost " +
          fixed(total_cost, 2) + ".\n\n";

    md += "## Ranking\n\n";
    md += "| Rank | Category | Pattern | Label | Cluster | Recency (days) | Frequency | "
          "Monetary | R | F | M |\n";
    md += "|---:|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : ranked) {
        md += "| " + std::to_string(r.rank) + " | `" + r.base.category + "` | " + r.pattern +
              " | " + std::string(pattern_label(r.pattern)) + " | " + std::to_string(r.cluster) +
              " | " + fixed(r.base.recency_days, 1) + " | " + std::to_string(r.base.frequency) +
              " | " + fixed(r.base.monetary, 2) + " | " + std::to_string(r.r_score) + " | " +
              std::to_string(r.f_score) + " | " + std::to_string(r.m_score) + " |\n";
    }

    md += "\n## Pattern summary\n\n";
    md += "| Pattern | Label | Categories | Failures | Monetary |\n";
    md += "|---|---|---:|---:|---:|\n";
    std::vector<std::string> pattern_order;
    std::map<std::string, std::tuple<std::size_t, std::int64_t, double>> by_pattern;
    for (const auto& r : ranked) {
        if (!by_pattern.count(r.pattern)) pattern_order.push_back(r.pattern);
        auto& [cats, freq, cost] = by_pattern[r.pattern];
        ++cats;
        freq += r.base.frequency;
        cost += r.base.monetary;
    }
    for (const auto& p : pattern_order) {
        const auto& [cats, freq, cost] = by_pattern[p];
        md += "| " + p + " | " + std::string(pattern_label(p)) + " | " + std::to_string(cats) +
              " | " + std::to_string(freq) + " | " + fixed(cost, 2) + " |\n";
    }

    md += "\n## Top 5 costliest categories\n\n";
    std::vector<const RankedCategory*> by_cost;
    for (const auto& r : ranked) by_cost.push_back(&r);
    std::sort(by_cost.begin(), by_cost.end(), [](const RankedCategory* a, const RankedCategory* b) {
        if (a->base.monetary != b->base.monetary) return a->base.monetary > b->base.monetary;
        return a->base.category < b->base.category;
    });
    const std::size_t top = std::min<std::size_t>(5, by_cost.size());
    for (std::size_t i = 0; i < top; ++i) {
        const auto freq = by_cost[i]->base.frequency;
        md += std::to_string(i + 1) + ". `" + by_cost[i]->base.category + "` — " +
              fixed(by_cost[i]->base.monetary, 2) + " (" + std::to_string(freq) +
              (freq == 1 ? " failure)\n" : " failures)\n");
    }

    if (!evolution.empty()) {
        Period lo = parse_period(evolution.front().period);
        Period hi = lo;
        for (const auto& row : evolution) {
            const Period p = parse_period(row.period);
            if (p < lo) lo = p;
            if (hi < p) hi = p;
        }
        std::map<std::string, std::map<std::string, std::int64_t>> per_cat;
        for (const auto& row : evolution) per_cat[row.category][row.period] = row.count;

        md += "\n## Monthly evolution (" + lo.str() + " to " + hi.str() + ")\n\n";
        md += "| Category | Trend | Total |\n";
        md += "|---|---|---:|\n";
        for (const auto& r : ranked) {
            const auto it = per_cat.find(r.base.category);
            if (it == per_cat.end()) continue;
            std::vector<std::int64_t> counts;
            for (Period p = lo;; ++p) {
                const auto c = it->second.find(p.str());
                counts.push_back(c == it->second.end() ? 0 : c->second);
                if (p == hi) break;
            }
            std::int64_t total = 0;
            for (auto c : counts) total += c;
            md += "| `" + r.base.category + "` | " + sparkline(counts) + " | " +
                  std::to_string(total) + " |\n";
        }
    }
    return md;
}

}  // namespace flakerank

#include "flakerank/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flakerank/rng.hpp"

namespace flakerank::kmeans {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

/// Kahan-compensated sum of squared distances to assigned centroids.
double total_inertia(const PointSet& ps, const std::vector<double>& centroids,
                     const std::vector<std::uint32_t>& assignments) {
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < ps.n; ++i) {
        const double v = dist2(ps.point(i), {centroids.data() + assignments[i] * ps.d, ps.d});
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

// k-means++ seeding. In greedy mode each new seed is drawn from the D^2
// distribution 2 + floor(log k) times and the candidate with the lowest
// resulting potential wins (ties to the earlier draw); otherwise a single
// draw is taken. Restarts alternate modes: greedy concentrates on good
// basins, plain draws keep the restart set diverse.
std::vector<double> kmeanspp_seed(const PointSet& ps, std::size_t k, SplitMix64& rng,
                                  bool greedy) {
    std::vector<double> centroids;
    centroids.reserve(k * ps.d);
    const auto first = ps.point(rng.next_index(ps.n));
    centroids.insert(centroids.end(), first.begin(), first.end());

    std::vector<double> d2(ps.n);
    for (std::size_t i = 0; i < ps.n; ++i) d2[i] = dist2(ps.point(i), first);

    const std::size_t local_trials =
        greedy ? 2 + static_cast<std::size_t>(std::log(static_cast<double>(k))) : 1;
    std::vector<double> cand_d2(ps.n);
    std::vector<double> best_d2(ps.n);
    for (std::size_t chosen = 1; chosen < k; ++chosen) {
        double total = 0.0;
        for (std::size_t i = 0; i < ps.n; ++i) total += d2[i];

        std::size_t pick = ps.n;
        if (total <= 0.0) {
            pick = rng.next_index(ps.n);  // all points coincide with seeds
            best_d2 = d2;
        } else {
            double best_potential = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < local_trials; ++t) {
                const double target = rng.next_double() * total;
                double cum = 0.0;
                std::size_t candidate = ps.n - 1;
                for (std::size_t i = 0; i < ps.n; ++i) {
                    cum += d2[i];
                    if (cum > target) {
                        candidate = i;
                        break;
                    }
                }
                double potential = 0.0;
                for (std::size_t i = 0; i < ps.n; ++i) {
                    cand_d2[i] = std::min(d2[i], dist2(ps.point(i), ps.point(candidate)));
                    potential += cand_d2[i];
                }
                if (potential < best_potential) {
                    best_potential = potential;
                    pick = candidate;
                    best_d2 = cand_d2;
                }
            }
        }
        const auto p = ps.point(pick);
        centroids.insert(centroids.end(), p.begin(), p.end());
        d2 = best_d2;
    }
    return centroids;
}

void assign_points(const PointSet& ps, const std::vector<double>& centroids, std::size_t k,
                   std::vector<std::uint32_t>& assignments) {
    for (std::size_t i = 0; i < ps.n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = dist2(ps.point(i), {centroids.data() + j * ps.d, ps.d});
            if (v < best) {
                best = v;
                arg = static_cast<std::uint32_t>(j);
            }
        }
        assignments[i] = arg;
    }
}

/// Gives each empty cluster the point currently farthest from its
/// centroid (lowest index on ties) as a singleton.
void repair_empty(const PointSet& ps, std::vector<double>& centroids, std::size_t k,
                  std::vector<std::uint32_t>& assignments) {
    std::vector<std::size_t> counts(k, 0);
    for (const auto a : assignments) ++counts[a];
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] != 0) continue;
        double far = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < ps.n; ++i) {
            if (counts[assignments[i]] <= 1) continue;  // don't empty another cluster
            const double v = dist2(ps.point(i), {centroids.data() + assignments[i] * ps.d, ps.d});
            if (v > far) {
                far = v;
                far_i = i;
            }
        }
        --counts[assignments[far_i]];
        assignments[far_i] = static_cast<std::uint32_t>(j);
        counts[j] = 1;
        std::copy_n(ps.point(far_i).begin(), ps.d, centroids.begin() + static_cast<std::ptrdiff_t>(j * ps.d));
    }
}

struct RunResult {
    std::vector<double> centroids;
    std::vector<std::uint32_t> assignments;
    double inertia = 0.0;
    std::vector<double> history;
};

// Hartigan-style single-point moves after Lloyd converges. The exact
// cost change of moving x from cluster A (size nA) to B (size nB) is
//   nB/(nB+1) * d2(x, cB)  -  nA/(nA-1) * d2(x, cA),
// which can be negative even when every point already sits at its
// nearest centroid, so this escapes Lloyd-stable local optima. Source
// clusters of size one are left alone (no cluster may empty).
void refine_moves(const PointSet& ps, std::vector<double>& centroids, std::size_t k,
                  std::vector<std::uint32_t>& assignments, std::vector<double>& history) {
    if (k < 2 || ps.n <= k) return;
    std::vector<std::size_t> counts(k, 0);
    for (const auto a : assignments) ++counts[a];

    auto recenter = [&](std::size_t j) {
        for (std::size_t c = 0; c < ps.d; ++c) centroids[j * ps.d + c] = 0.0;
        for (std::size_t i = 0; i < ps.n; ++i) {
            if (assignments[i] != j) continue;
            const auto p = ps.point(i);
            for (std::size_t c = 0; c < ps.d; ++c) centroids[j * ps.d + c] += p[c];
        }
        for (std::size_t c = 0; c < ps.d; ++c) {
            centroids[j * ps.d + c] /= static_cast<double>(counts[j]);
        }
    };
    // The move deltas are exact only for mean centroids; the repair step
    // may have left singleton centroids pinned to raw points.
    for (std::size_t j = 0; j < k; ++j) recenter(j);

    const std::size_t max_moves = 64 * ps.n * k + 64;
    for (std::size_t move = 0; move < max_moves; ++move) {
        const double current = total_inertia(ps, centroids, assignments);
        const double threshold = -1e-12 * std::max(1.0, current);
        double best_delta = threshold;
        std::size_t best_point = ps.n;
        std::size_t best_target = k;
        for (std::size_t i = 0; i < ps.n; ++i) {
            const std::size_t from = assignments[i];
            if (counts[from] <= 1) continue;
            const double leave = static_cast<double>(counts[from]) /
                                 static_cast<double>(counts[from] - 1) *
                                 dist2(ps.point(i), {centroids.data() + from * ps.d, ps.d});
            for (std::size_t j = 0; j < k; ++j) {
                if (j == from) continue;
                const double join = static_cast<double>(counts[j]) /
                                    static_cast<double>(counts[j] + 1) *
                                    dist2(ps.point(i), {centroids.data() + j * ps.d, ps.d});
                const double delta = join - leave;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_point = i;
                    best_target = j;
                }
            }
        }
        if (best_point == ps.n) break;
        const std::size_t from = assignments[best_point];
        --counts[from];
        ++counts[best_target];
        assignments[best_point] = static_cast<std::uint32_t>(best_target);
        recenter(from);
        recenter(best_target);
        history.push_back(total_inertia(ps, centroids, assignments));
    }
}

RunResult lloyd_once(const PointSet& ps, std::size_t k, std::uint64_t sub_seed,
                     std::size_t max_iter, double tol) {
    SplitMix64 rng(sub_seed);
    RunResult r;
    r.centroids = kmeanspp_seed(ps, k, rng);
    r.assignments.assign(ps.n, 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        assign_points(ps, r.centroids, k, r.assignments);
        repair_empty(ps, r.centroids, k, r.assignments);
        r.history.push_back(total_inertia(ps, r.centroids, r.assignments));

        std::vector<double> means(k * ps.d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < ps.n; ++i) {
            const auto p = ps.point(i);
            const std::size_t j = r.assignments[i];
            ++counts[j];
            for (std::size_t c = 0; c < ps.d; ++c) means[j * ps.d + c] += p[c];
        }
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t c = 0; c < ps.d; ++c) means[j * ps.d + c] /= static_cast<double>(counts[j]);
        }

        double movement = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            movement = std::max(movement, std::sqrt(dist2({means.data() + j * ps.d, ps.d},
                                                          {r.centroids.data() + j * ps.d, ps.d})));
        }
        r.centroids = std::move(means);
        if (movement < tol) break;
    }

    // Final consistency pass so assignments match the returned centroids.
    assign_points(ps, r.centroids, k, r.assignments);
    repair_empty(ps, r.centroids, k, r.assignments);
    refine_moves(ps, r.centroids, k, r.assignments, r.history);
    r.inertia = total_inertia(ps, r.centroids, r.assignments);
    r.history.push_back(r.inertia);
    return r;
}

}  // namespace

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
    PointSet ps;
    ps.n = rows.size();
    ps.d = rows.empty() ? 0 : rows.front().size();
    ps.xs.reserve(ps.n * ps.d);
    for (const auto& row : rows) {
        if (row.size() != ps.d) throw validation_error("points must share one dimension");
        for (double v : row) {
            if (!std::isfinite(v)) throw validation_error("points must have finite components");
            ps.xs.push_back(v);
        }
    }
    return ps;
}

ClusterModel kmeans_fit(const PointSet& ps, std::size_t k, const FitParams& params) {
    if (k == 0) throw invalid_k("k must be positive");
    if (k > ps.n) throw k_too_large(k, ps.n);

    RunResult best;
    bool have = false;
    for (std::size_t r = 0; r < params.restarts; ++r) {
        RunResult run = lloyd_once(ps, k, params.seed + r, params.max_iter, params.tol);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }

    ClusterModel model;
    model.k = k;
    model.centroids = std::move(best.centroids);
    model.assignments = std::move(best.assignments);
    model.inertia = best.inertia;
    model.seed = params.seed;
    model.inertia_history = std::move(best.history);
    if (k >= 2 && k <= ps.n - 1) {
        model.silhouette = silhouette(ps, model.assignments, k);
    }
    return model;
}

double silhouette(const PointSet& ps, std::span<const std::uint32_t> assignments, std::size_t k) {
    if (k < 2 || ps.n < 2 || k > ps.n - 1) {
        throw invalid_k("silhouette requires 2 <= k <= n-1");
    }
    std::vector<std::size_t> counts(k, 0);
    for (const auto a : assignments) {
        if (a >= k) throw invalid_k("assignment out of range");
        ++counts[a];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) throw invalid_k("empty cluster " + std::to_string(j));
    }

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (std::size_t i = 0; i < ps.n; ++i) {
        if (counts[assignments[i]] == 1) continue;  // singleton contributes 0
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t j = 0; j < ps.n; ++j) {
            if (j == i) continue;
            mean_dist[assignments[j]] += std::sqrt(dist2(ps.point(i), ps.point(j)));
        }
        const std::size_t own = assignments[i];
        const double a = mean_dist[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            if (j == own) continue;
            b = std::min(b, mean_dist[j] / static_cast<double>(counts[j]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(ps.n);
}

KSelection select_k(const PointSet& ps, std::size_t k_min, std::size_t k_max,
                    const FitParams& params) {
    if (ps.n < 3) throw too_few_points(ps.n);
    if (k_max == 0) k_max = std::min<std::size_t>(8, ps.n - 1);
    if (k_min < 2) k_min = 2;
    if (k_min > k_max) throw invalid_k("k_min exceeds k_max");

    KSelection best;
    double best_sil = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ClusterModel model = kmeans_fit(ps, k, params);
        const double sil = model.silhouette.value_or(-1.0);
        if (sil > best_sil) {
            best_sil = sil;
            best.k = k;
            best.model = std::move(model);
        }
    }
    return best;
}

}  // namespace flakerank::kmeans

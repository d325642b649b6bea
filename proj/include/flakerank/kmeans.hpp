#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flakerank/errors.hpp"

namespace flakerank::kmeans {

class k_too_large : public validation_error {
public:
    k_too_large(std::size_t k, std::size_t n)
        : validation_error("k=" + std::to_string(k) + " exceeds point count n=" + std::to_string(n)) {}
};

class invalid_k : public validation_error {
public:
    explicit invalid_k(const std::string& msg) : validation_error(msg) {}
};

class too_few_points : public validation_error {
public:
    explicit too_few_points(std::size_t n)
        : validation_error("need at least 3 points to select k, got " + std::to_string(n)) {}
};

/// Fixed-dimension point collection, row-major. Components must be finite.
struct PointSet {
    std::vector<double> xs;
    std::size_t n = 0;
    std::size_t d = 0;

    std::span<const double> point(std::size_t i) const { return {xs.data() + i * d, d}; }

    static PointSet from_rows(const std::vector<std::vector<double>>& rows);
};

struct FitParams {
    std::uint64_t seed = 42;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    double tol = 1e-6;
};

struct ClusterModel {
    std::size_t k = 0;
    std::vector<double> centroids;           // k x d, row-major
    std::vector<std::uint32_t> assignments;  // per point, in [0, k)
    double inertia = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> silhouette;     // defined for 2 <= k <= n-1
    std::vector<double> inertia_history;  // winning restart, per assignment pass

    std::span<const double> centroid(std::size_t j) const {
        const std::size_t d = k == 0 ? 0 : centroids.size() / k;
        return {centroids.data() + j * d, d};
    }
};

/// Lloyd's algorithm with k-means++ seeding. Runs `restarts` independent
/// starts (sub-seed = seed + restart index) and keeps the lowest inertia,
/// ties broken by earlier restart. Empty clusters are repaired by turning
/// the point farthest from its centroid into a singleton. Deterministic
/// for identical arguments.
ClusterModel kmeans_fit(const PointSet& ps, std::size_t k, const FitParams& params = {});

/// Mean silhouette over points; singleton-cluster points and 0/0 distances
/// contribute 0. Requires 2 <= k <= n-1 and no empty cluster.
double silhouette(const PointSet& ps, std::span<const std::uint32_t> assignments, std::size_t k);

struct KSelection {
    std::size_t k = 0;
    ClusterModel model;
};

/// Fits every k in [k_min, k_max] (k_max defaults to min(8, n-1)) and
/// returns the k with the highest silhouette, ties to the smaller k.
KSelection select_k(const PointSet& ps, std::size_t k_min = 2, std::size_t k_max = 0,
                    const FitParams& params = {});

}  // namespace flakerank::kmeans

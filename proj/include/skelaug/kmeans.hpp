#pragma once

// Seeded Lloyd k-means with k-means++ initialisation over dense row vectors.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "skelaug/error.hpp"
#include "skelaug/random.hpp"

namespace skelaug {

// Row-major N x D matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

struct KMeansConfig {
    std::size_t k = 1;
    std::size_t max_iters = 100;
    double tol = 1e-6;  // stop when sum |shift|^2 / sum |center|^2 drops below this
    std::uint64_t seed = 0;
    unsigned threads = 1;  // assignment step only; results do not depend on it
};

struct KMeansResult {
    Matrix centers;
    std::vector<std::size_t> assignments;
    std::vector<std::size_t> cluster_sizes;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // inertia after every assignment step
    std::size_t iterations = 0;
};

/// Index of the nearest center, ties to the lowest index.
inline std::size_t kmeans_assign(std::span<const double> point, const Matrix& centers) {
    if (centers.rows() == 0) throw InvalidInput("kmeans_assign: no centers");
    if (point.size() != centers.cols()) {
        throw InvalidInput("kmeans_assign: point has " + std::to_string(point.size()) + " dims, centers have " +
                           std::to_string(centers.cols()));
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(point, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace detail {

// Assign every point; returns inertia. Each point is independent, so the
// result is identical for any thread count. Inertia is summed sequentially.
inline double assign_all(const Matrix& points, const Matrix& centers, std::vector<std::size_t>& assign,
                         std::vector<double>& dist, unsigned threads) {
    const std::size_t n = points.rows();
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            assign[i] = kmeans_assign(points.row(i), centers);
            dist[i] = squared_distance(points.row(i), centers.row(assign[i]));
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n / 64, 1))));
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = std::min(n, t * chunk), hi = std::min(n, lo + chunk);
            pool.emplace_back(work, lo, hi);
        }
    }
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    return inertia;
}

inline Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(k, points.cols());
    std::size_t first = rng.uniform_index(n);
    std::ranges::copy(points.row(first), centers.row(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        if (!(total > 0.0)) throw InvalidInput("kmeans: fewer distinct points than k = " + std::to_string(k));
        const double target = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (acc > target) break;
        }
        std::ranges::copy(points.row(pick), centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
    }
    return centers;
}

}  // namespace detail

/// Lloyd iterations from a k-means++ start.
///
/// Stops when the relative center shift drops below cfg.tol, when an
/// assignment pass changes nothing, or after cfg.max_iters. A cluster that
/// ends up empty is re-seeded with the point currently farthest from its
/// own center. The returned assignments are the nearest-center assignments
/// for the returned centers and no cluster is empty.
inline KMeansResult kmeans_fit(const Matrix& points, const KMeansConfig& cfg) {
    const std::size_t n = points.rows();
    const std::size_t k = cfg.k;
    if (k == 0) throw InvalidInput("kmeans: k must be >= 1");
    if (n < k) throw InvalidInput("kmeans: " + std::to_string(n) + " points for k = " + std::to_string(k));
    for (double v : points.data())
        if (!std::isfinite(v)) throw InvalidInput("kmeans: non-finite input value");

    Rng rng(cfg.seed);
    KMeansResult res;
    res.centers = detail::kmeanspp_init(points, k, rng);
    res.assignments.assign(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> previous;

    for (std::size_t iter = 0;; ++iter) {
        res.inertia = detail::assign_all(points, res.centers, res.assignments, dist, cfg.threads);
        assert(res.inertia_history.empty() || res.inertia <= res.inertia_history.back() * (1.0 + 1e-12) + 1e-12);
        res.inertia_history.push_back(res.inertia);
        res.iterations = iter;

        res.cluster_sizes.assign(k, 0);
        for (std::size_t a : res.assignments) ++res.cluster_sizes[a];
        const bool has_empty = std::ranges::find(res.cluster_sizes, 0u) != res.cluster_sizes.end();

        if (!has_empty && (res.assignments == previous || iter >= cfg.max_iters)) break;
        if (iter >= cfg.max_iters + k) throw InvalidInput("kmeans: could not repair empty clusters");
        previous = res.assignments;

        // Update: sequential per-cluster accumulation in point order.
        Matrix next(k, points.cols());
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.row(res.assignments[i]);
            const auto src = points.row(i);
            for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (res.cluster_sizes[c] == 0) continue;
            for (double& v : next.row(c)) v /= static_cast<double>(res.cluster_sizes[c]);
        }

        // Empty clusters take the worst-served point.
        for (std::size_t c = 0; c < k; ++c) {
            if (res.cluster_sizes[c] != 0) continue;
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (dist[i] > dist[far]) far = i;
            if (!(dist[far] > 0.0)) throw InvalidInput("kmeans: fewer distinct points than k = " + std::to_string(k));
            std::ranges::copy(points.row(far), next.row(c).begin());
            dist[far] = 0.0;
        }

        double shift = 0.0, norm = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            shift += squared_distance(next.row(c), res.centers.row(c));
            for (double v : next.row(c)) norm += v * v;
        }
        res.centers = std::move(next);
        if (shift <= cfg.tol * std::max(norm, std::numeric_limits<double>::min()) && !has_empty) {
            // Converged: final assignment against the settled centers.
            res.inertia = detail::assign_all(points, res.centers, res.assignments, dist, cfg.threads);
            res.inertia_history.push_back(res.inertia);
            res.cluster_sizes.assign(k, 0);
            for (std::size_t a : res.assignments) ++res.cluster_sizes[a];
            if (std::ranges::find(res.cluster_sizes, 0u) == res.cluster_sizes.end()) break;
            previous.clear();
        }
    }
    return res;
}

}  // namespace skelaug

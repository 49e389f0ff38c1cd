#pragma once

// Boundary poses learned from first frames, and boundary-conditioned
// extrapolation: a sequence is squeezed to the tail of the clip and the head
// is infilled from an assigned boundary pose.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "skelaug/corpus.hpp"
#include "skelaug/kmeans.hpp"
#include "skelaug/random.hpp"
#include "skelaug/skeleton.hpp"

namespace skelaug {

inline constexpr std::size_t kDefaultBoundaryPoses = 10;
inline constexpr double kDefaultAlpha = 0.1;

struct BoundaryPoseSet {
    std::vector<Skeleton> poses;

    std::size_t size() const noexcept { return poses.size(); }
    bool empty() const noexcept { return poses.empty(); }
    friend bool operator==(const BoundaryPoseSet&, const BoundaryPoseSet&) = default;
};

struct ExtrapolationParams {
    double alpha = kDefaultAlpha;
    std::size_t length = kDefaultLength;
};

/// k-means over the flattened first frames of every sequence.
inline BoundaryPoseSet learn_boundary_poses(const Corpus& corpus, std::size_t n_poses, std::uint64_t seed,
                                            double* inertia = nullptr) {
    if (corpus.empty()) throw InvalidInput("learn_boundary_poses: empty corpus");
    if (corpus.size() < n_poses) {
        throw InvalidInput("learn_boundary_poses: " + std::to_string(corpus.size()) + " sequences for " +
                           std::to_string(n_poses) + " boundary poses");
    }
    const std::size_t dim = corpus.sequences.front().frame_size();
    Matrix points(corpus.size(), dim);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& seq = corpus.sequences[i];
        if (seq.frame_size() != dim) throw InvalidInput("learn_boundary_poses: mixed joint counts");
        if (seq.length() == 0) throw InvalidInput("learn_boundary_poses: empty sequence '" + seq.meta().id + "'");
        const auto f = seq.frame(0);
        std::copy(f.begin(), f.end(), points.row(i).begin());
    }
    const KMeansResult km = kmeans_fit(points, {.k = n_poses, .seed = seed});
    if (inertia) *inertia = km.inertia;

    BoundaryPoseSet set;
    for (std::size_t c = 0; c < n_poses; ++c) {
        Skeleton s(dim / 3);
        const auto row = km.centers.row(c);
        for (std::size_t d = 0; d < dim; ++d) s.flat()[d] = static_cast<float>(row[d]);
        set.poses.push_back(std::move(s));
    }
    return set;
}

/// Index of the pose nearest to `x0` in flattened L2, ties to the lowest index.
inline std::size_t nearest_boundary_index(std::span<const float> x0, const BoundaryPoseSet& poses) {
    if (poses.empty()) throw InvalidInput("assign_boundary: empty pose set");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const auto p = poses.poses[i].flat();
        if (p.size() != x0.size()) throw InvalidInput("assign_boundary: joint count mismatch");
        double d = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double diff = static_cast<double>(x0[k]) - static_cast<double>(p[k]);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

inline const Skeleton& assign_boundary(const Skeleton& x0, const BoundaryPoseSet& poses) {
    return poses.poses[nearest_boundary_index(x0.flat(), poses)];
}

/// t_p = round(b * T/2) with b ~ Beta(alpha, alpha); result in [0, T/2].
inline std::size_t sample_tp(const ExtrapolationParams& params, Rng& rng) {
    if (!(params.alpha > 0.0)) throw InvalidInput("sample_tp: alpha must be > 0");
    const double half = static_cast<double>(params.length) / 2.0;
    const double b = rng.beta(params.alpha, params.alpha);
    const auto tp = static_cast<std::size_t>(std::floor(b * half + 0.5));
    return std::min(tp, params.length / 2);
}

/// Prepend an infilled segment from boundary pose `p_prime`.
///
/// Frame 0 is p' exactly, x squeezed to T - t_p frames occupies [t_p, T), and
/// frames strictly between are a per-coordinate linear blend from p' (at 0)
/// to the squeezed first frame (at t_p). t_p = 0 returns x.
inline MotionSequence extrapolate(const MotionSequence& x, const Skeleton& p_prime, std::size_t t_p) {
    const std::size_t T = x.length();
    if (T < 2) throw InvalidInput("extrapolate: sequence needs at least 2 frames");
    if (t_p > T / 2) throw InvalidInput("extrapolate: t_p = " + std::to_string(t_p) + " exceeds T/2");
    if (p_prime.joint_count() != x.joint_count()) throw InvalidInput("extrapolate: boundary pose joint count mismatch");
    if (t_p == 0) return x;

    MotionSequence out(T, x.joint_count(), x.meta());
    const MotionSequence squeezed = resize_temporal(x, T - t_p, ResizeMode::linear);
    std::ranges::copy(squeezed.data(), out.data().subspan(t_p * out.frame_size()).begin());
    out.set_frame(0, p_prime.flat());

    const auto from = p_prime.flat();
    const auto to = squeezed.frame(0);
    for (std::size_t t = 1; t < t_p; ++t) {
        const double w = static_cast<double>(t) / static_cast<double>(t_p);
        auto dst = out.frame(t);
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] = static_cast<float>(static_cast<double>(from[k]) * (1.0 - w) + static_cast<double>(to[k]) * w);
        }
    }
    return out;
}

}  // namespace skelaug

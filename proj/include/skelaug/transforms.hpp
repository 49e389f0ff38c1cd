#pragma once

// Smooth linear temporal transforms learned from trimmed / full pairs.
//
// For a full sequence v and a trimmed-and-restretched copy u, row i of the
// similarity matrix is a softmax over -|v_i - u_j| / lambda. The expected
// column of row i, rounded, is the frame of u that best explains v_i; the
// resulting one-hot-per-row matrix W maps partial sequences to full ones
// (W u ~ v). It is stored as the vector of those column indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "skelaug/corpus.hpp"
#include "skelaug/kmeans.hpp"
#include "skelaug/skeleton.hpp"

namespace skelaug {

inline constexpr double kDefaultLambdaT = 0.1;
inline constexpr std::size_t kDefaultTransforms = 20;

// T x T row-stochastic matrix; rows index the full sequence, columns the partial one.
using SimilarityMatrix = Matrix;

struct LinearTransform {
    std::vector<std::size_t> indices;  // output frame i <- input frame indices[i]

    std::size_t length() const noexcept { return indices.size(); }

    static LinearTransform identity(std::size_t T) {
        LinearTransform w;
        w.indices.resize(T);
        for (std::size_t i = 0; i < T; ++i) w.indices[i] = i;
        return w;
    }

    friend bool operator==(const LinearTransform&, const LinearTransform&) = default;
};

struct CropWindow {
    double start = 0.0;
    double end = 1.0;
};

struct PairSpec {
    std::vector<CropWindow> windows = {{0.0, 1.0},    {0.0, 0.5},     {0.5, 1.0},  {0.25, 0.75},
                                       {0.125, 0.625}, {0.375, 0.875}, {0.0, 0.75}, {0.25, 1.0}};

    void validate() const {
        for (const auto& w : windows) {
            if (!(0.0 <= w.start && w.start < w.end && w.end <= 1.0)) {
                throw InvalidInput("crop window must satisfy 0 <= start < end <= 1");
            }
        }
    }
};

struct TrainingPair {
    MotionSequence partial;  // u
    const MotionSequence* full = nullptr;  // v, owned by the corpus
};

/// Crop v to [round(aT), round(bT)) and stretch back to T frames.
/// Returns nullopt when the crop has fewer than 2 frames.
inline std::optional<MotionSequence> crop_window(const MotionSequence& v, CropWindow w) {
    const std::size_t T = v.length();
    const auto lo = static_cast<std::size_t>(std::floor(w.start * static_cast<double>(T) + 0.5));
    const auto hi = std::min(T, static_cast<std::size_t>(std::floor(w.end * static_cast<double>(T) + 0.5)));
    if (hi < lo + 2) return std::nullopt;
    MotionSequence crop(hi - lo, v.joint_count(), v.meta());
    const auto src = v.data().subspan(lo * v.frame_size(), (hi - lo) * v.frame_size());
    std::ranges::copy(src, crop.data().begin());
    return resize_temporal(crop, T, ResizeMode::linear);
}

/// One (u, v) pair per sequence per window. `skipped`, if given, counts
/// windows dropped for being shorter than 2 frames.
inline std::vector<TrainingPair> make_pairs(const Corpus& corpus, const PairSpec& spec, std::size_t* skipped = nullptr) {
    spec.validate();
    std::vector<TrainingPair> pairs;
    pairs.reserve(corpus.size() * spec.windows.size());
    std::size_t dropped = 0;
    for (const auto& v : corpus.sequences) {
        for (const auto& w : spec.windows) {
            auto u = crop_window(v, w);
            if (!u) {
                ++dropped;
                continue;
            }
            pairs.push_back({std::move(*u), &v});
        }
    }
    if (skipped) *skipped = dropped;
    return pairs;
}

/// s_ij = softmax_j(-|v_i - u_j| / lambda_T), computed with the row minimum
/// distance subtracted first so small lambda cannot overflow. Entries are
/// in (0, 1] unless exp underflows for very distant frames.
inline SimilarityMatrix similarity_matrix(const MotionSequence& v, const MotionSequence& u, double lambda_t) {
    if (!(lambda_t > 0.0)) throw InvalidInput("similarity_matrix: lambda_T must be > 0");
    if (v.length() != u.length()) throw InvalidInput("similarity_matrix: sequence lengths differ");
    if (v.frame_size() != u.frame_size()) throw InvalidInput("similarity_matrix: joint counts differ");
    const std::size_t T = v.length();
    SimilarityMatrix s(T, T);
    std::vector<double> dist(T);
    for (std::size_t i = 0; i < T; ++i) {
        const auto vi = v.frame(i);
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < T; ++j) {
            const auto uj = u.frame(j);
            double d2 = 0.0;
            for (std::size_t k = 0; k < vi.size(); ++k) {
                const double diff = static_cast<double>(vi[k]) - static_cast<double>(uj[k]);
                d2 += diff * diff;
            }
            dist[j] = std::sqrt(d2);
            dmin = std::min(dmin, dist[j]);
        }
        double total = 0.0;
        auto row = s.row(i);
        for (std::size_t j = 0; j < T; ++j) {
            row[j] = std::exp(-(dist[j] - dmin) / lambda_t);
            total += row[j];
        }
        for (double& x : row) x /= total;
    }
    return s;
}

/// Renormalise rows (a zero row becomes uniform), take k_i = sum_j j * s_ij
/// with 0-based j, and round half up into [0, T-1].
inline LinearTransform transform_from_similarity(const SimilarityMatrix& m) {
    const std::size_t T = m.rows();
    LinearTransform w;
    w.indices.resize(T);
    for (std::size_t i = 0; i < T; ++i) {
        const auto row = m.row(i);
        double total = 0.0;
        for (double x : row) total += std::max(0.0, x);
        double k = 0.0;
        if (total > 0.0) {
            for (std::size_t j = 0; j < row.size(); ++j) k += static_cast<double>(j) * (std::max(0.0, row[j]) / total);
        } else {
            k = static_cast<double>(row.size() - 1) / 2.0;
        }
        const double r = std::floor(k + 0.5);
        w.indices[i] = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(T == 0 ? 0 : T - 1)));
    }
    return w;
}

struct TransformBank {
    std::vector<LinearTransform> transforms;
    std::vector<std::size_t> cluster_sizes;  // pairs behind each transform
    double inertia = 0.0;
};

/// Similarity matrices of every pair, flattened to T*T vectors and clustered
/// with k = n_transforms. Each center is row-normalised and converted.
inline TransformBank learn_transforms(const Corpus& corpus, const PairSpec& spec, double lambda_t,
                                      std::size_t n_transforms, std::uint64_t seed, unsigned threads = 1) {
    const auto pairs = make_pairs(corpus, spec);
    if (n_transforms == 0) throw InvalidInput("learn_transforms: need at least one transform");
    if (pairs.size() < n_transforms) {
        throw InvalidInput("learn_transforms: " + std::to_string(pairs.size()) + " pairs for " +
                           std::to_string(n_transforms) + " transforms");
    }
    const std::size_t T = pairs.front().partial.length();
    Matrix points(pairs.size(), T * T);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (pairs[p].full->length() != T) throw InvalidInput("learn_transforms: sequences must share one length");
        const SimilarityMatrix s = similarity_matrix(*pairs[p].full, pairs[p].partial, lambda_t);
        std::ranges::copy(s.data(), points.row(p).begin());
    }
    const KMeansResult km = kmeans_fit(points, {.k = n_transforms, .seed = seed, .threads = threads});

    TransformBank bank;
    bank.inertia = km.inertia;
    bank.cluster_sizes = km.cluster_sizes;
    for (std::size_t c = 0; c < n_transforms; ++c) {
        SimilarityMatrix center(T, T);
        const auto row = km.centers.row(c);
        std::ranges::copy(row, center.data().begin());
        bank.transforms.push_back(transform_from_similarity(center));
    }
    return bank;
}

/// Gather: output frame i is input frame w.indices[i].
inline MotionSequence apply_transform(const MotionSequence& x, const LinearTransform& w) {
    if (w.length() != x.length()) {
        throw InvalidInput("apply_transform: transform length " + std::to_string(w.length()) + " vs sequence length " +
                           std::to_string(x.length()));
    }
    MotionSequence out(x.length(), x.joint_count(), x.meta());
    for (std::size_t i = 0; i < w.length(); ++i) {
        if (w.indices[i] >= x.length()) throw InvalidInput("apply_transform: index out of range");
        out.set_frame(i, x.frame(w.indices[i]));
    }
    return out;
}

}  // namespace skelaug

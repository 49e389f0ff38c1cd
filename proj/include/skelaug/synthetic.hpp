#pragma once

// Synthetic "complete action" corpora with known structure, used as oracle
// data: every sequence leaves a rest pose, moves to a class-specific peak
// pose, and (for rise_peak_return) comes back.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "skelaug/corpus.hpp"
#include "skelaug/random.hpp"

namespace skelaug {

enum class SyntheticShape {
    rise_peak_return,  // ease up over the first third, hold, ease back over the last third
    ramp,              // straight line rest -> peak, strictly monotone in time
};

struct SyntheticSpec {
    std::size_t n_sequences = 100;
    std::size_t length = kDefaultLength;  // T_full
    std::size_t joints = kDefaultJoints;
    std::size_t n_classes = 4;
    std::size_t n_rest_poses = 1;
    std::uint64_t rest_pose_seed = 7;
    double amplitude = 0.5;  // spread of peak offsets around the rest pose, metres
    double noise_std = 0.0;
    SyntheticShape shape = SyntheticShape::rise_peak_return;
    std::uint64_t seed = 0;

    void validate() const {
        if (length < 4) throw InvalidInput("synthetic length must be >= 4");
        if (joints == 0) throw InvalidInput("synthetic joint count must be positive");
        if (n_classes == 0 || n_rest_poses == 0) throw InvalidInput("synthetic class / rest pose counts must be positive");
        if (!(amplitude > 0.0)) throw InvalidInput("synthetic amplitude must be > 0");
        if (!(noise_std >= 0.0)) throw InvalidInput("synthetic noise_std must be >= 0");
    }
};

// Rest pose r: root joint at the origin, other joints scattered around a
// roughly human-sized volume.
inline std::vector<float> synthetic_rest_pose(const SyntheticSpec& spec, std::size_t r) {
    Rng rng(splitmix64(spec.rest_pose_seed + 0x100 * r));
    std::vector<float> pose(3 * spec.joints);
    for (std::size_t j = 1; j < spec.joints; ++j) {
        pose[3 * j] = static_cast<float>(rng.uniform(-0.3, 0.3));
        pose[3 * j + 1] = static_cast<float>(rng.uniform(-0.2, 0.2));
        pose[3 * j + 2] = static_cast<float>(rng.uniform(-0.9, 0.9));
    }
    return pose;
}

// Peak offset of class c, added to the rest pose. The root joint never moves.
inline std::vector<float> synthetic_peak_offset(const SyntheticSpec& spec, std::size_t c) {
    Rng rng(splitmix64(spec.rest_pose_seed ^ (0xC1A55ULL + 0x1000 * c)));
    std::vector<float> off(3 * spec.joints);
    for (std::size_t k = 3; k < off.size(); ++k) off[k] = static_cast<float>(rng.uniform(-spec.amplitude, spec.amplitude));
    return off;
}

// Blend weight in [0, 1] from rest (0) to peak (1) at frame t.
inline double synthetic_envelope(SyntheticShape shape, std::size_t t, std::size_t length) {
    const double s = static_cast<double>(t) / static_cast<double>(length - 1);
    if (shape == SyntheticShape::ramp) return s;
    auto ease = [](double u) { return 0.5 - 0.5 * std::cos(std::numbers::pi * u); };
    if (s < 1.0 / 3.0) return ease(3.0 * s);
    if (s > 2.0 / 3.0) return ease(3.0 * (1.0 - s));
    return 1.0;
}

/// Sequence i has class i % n_classes and rest pose (i / n_classes) % n_rest_poses.
inline Corpus generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::vector<std::vector<float>> rests, peaks;
    for (std::size_t r = 0; r < spec.n_rest_poses; ++r) rests.push_back(synthetic_rest_pose(spec, r));
    for (std::size_t c = 0; c < spec.n_classes; ++c) peaks.push_back(synthetic_peak_offset(spec, c));

    Rng noise(spec.seed);
    Corpus corpus;
    corpus.sequences.reserve(spec.n_sequences);
    for (std::size_t i = 0; i < spec.n_sequences; ++i) {
        const std::size_t cls = i % spec.n_classes;
        const auto& rest = rests[(i / spec.n_classes) % spec.n_rest_poses];
        const auto& peak = peaks[cls];
        SequenceMeta meta{"synth-" + std::to_string(i), static_cast<int>(cls), "s" + std::to_string(i % 10)};
        MotionSequence seq(spec.length, spec.joints, std::move(meta));
        for (std::size_t t = 0; t < spec.length; ++t) {
            const double w = synthetic_envelope(spec.shape, t, spec.length);
            auto f = seq.frame(t);
            for (std::size_t k = 0; k < f.size(); ++k) {
                double v = rest[k] + w * peak[k];
                if (spec.noise_std > 0.0) v += noise.normal(0.0, spec.noise_std);
                f[k] = static_cast<float>(v);
            }
        }
        corpus.sequences.push_back(std::move(seq));
    }
    return corpus;
}

}  // namespace skelaug

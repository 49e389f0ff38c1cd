#pragma once

// Core skeleton / sequence types, temporal resizing and rigid preprocessing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skelaug/error.hpp"
#include "skelaug/random.hpp"

namespace skelaug {

inline constexpr std::size_t kDefaultJoints = 25;
inline constexpr std::size_t kDefaultLength = 64;

struct Vec3 {
    float x = 0.f, y = 0.f, z = 0.f;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

// One pose: J joints stored joint-major as x0 y0 z0 x1 y1 z1 ...
class Skeleton {
public:
    Skeleton() = default;
    explicit Skeleton(std::size_t joints) : coords_(3 * joints, 0.f) {}

    std::size_t joint_count() const noexcept { return coords_.size() / 3; }

    Vec3 joint(std::size_t j) const { return {coords_[3 * j], coords_[3 * j + 1], coords_[3 * j + 2]}; }
    void set_joint(std::size_t j, Vec3 p) {
        coords_[3 * j] = p.x;
        coords_[3 * j + 1] = p.y;
        coords_[3 * j + 2] = p.z;
    }

    std::span<const float> flat() const noexcept { return coords_; }
    std::span<float> flat() noexcept { return coords_; }

    bool is_finite() const {
        return std::all_of(coords_.begin(), coords_.end(), [](float v) { return std::isfinite(v); });
    }

    friend bool operator==(const Skeleton&, const Skeleton&) = default;

private:
    std::vector<float> coords_;
};

inline std::vector<float> flatten(const Skeleton& skel) {
    return {skel.flat().begin(), skel.flat().end()};
}

inline Skeleton unflatten(std::span<const float> flat) {
    if (flat.size() % 3 != 0) throw InvalidInput("flattened skeleton length must be a multiple of 3");
    Skeleton s(flat.size() / 3);
    std::copy(flat.begin(), flat.end(), s.flat().begin());
    return s;
}

struct SequenceMeta {
    std::string id;
    std::optional<int> label;
    std::optional<std::string> subject;

    friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

// T frames of J joints, stored contiguously as T x J x 3 floats.
class MotionSequence {
public:
    MotionSequence() = default;
    MotionSequence(std::size_t frames, std::size_t joints, SequenceMeta meta = {})
        : joints_(joints), data_(frames * joints * 3, 0.f), meta_(std::move(meta)) {}

    std::size_t length() const noexcept { return joints_ == 0 ? 0 : data_.size() / (3 * joints_); }
    std::size_t joint_count() const noexcept { return joints_; }
    std::size_t frame_size() const noexcept { return 3 * joints_; }

    std::span<float> frame(std::size_t t) { return {data_.data() + t * frame_size(), frame_size()}; }
    std::span<const float> frame(std::size_t t) const { return {data_.data() + t * frame_size(), frame_size()}; }

    Skeleton skeleton(std::size_t t) const { return unflatten(frame(t)); }
    void set_frame(std::size_t t, std::span<const float> pose) {
        if (pose.size() != frame_size()) throw InvalidInput("pose size does not match sequence joint count");
        std::copy(pose.begin(), pose.end(), frame(t).begin());
    }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    const SequenceMeta& meta() const noexcept { return meta_; }
    SequenceMeta& meta() noexcept { return meta_; }

    bool is_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
    }

    friend bool operator==(const MotionSequence&, const MotionSequence&) = default;

private:
    std::size_t joints_ = 0;
    std::vector<float> data_;
    SequenceMeta meta_;
};

enum class ResizeMode { linear, random_frame };

namespace detail {

// Linear resize of a T_in x D row block into T_out rows. Normalized time,
// endpoints pinned.
inline void resize_rows_linear(std::span<const float> in, std::size_t t_in, std::size_t dim,
                               std::span<float> out, std::size_t t_out) {
    for (std::size_t i = 0; i < t_out; ++i) {
        const double pos =
            t_out == 1 || t_in == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(t_in - 1) / static_cast<double>(t_out - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        if (lo > t_in - 1) lo = t_in - 1;
        const std::size_t hi = std::min(lo + 1, t_in - 1);
        const double w = pos - static_cast<double>(lo);
        const float* a = in.data() + lo * dim;
        const float* b = in.data() + hi * dim;
        float* o = out.data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            o[d] = static_cast<float>(static_cast<double>(a[d]) * (1.0 - w) + static_cast<double>(b[d]) * w);
        }
    }
}

}  // namespace detail

/// Resample a sequence to exactly `t_out` frames.
///
/// linear: each output frame i sits at normalized time i/(t_out-1) and is
/// interpolated per coordinate between its two neighbouring input frames;
/// the first and last input frames land exactly on the first and last output
/// frames. random_frame: [0, T) is split into t_out equal bins and one input
/// frame is drawn from each bin, which needs `rng`.
inline MotionSequence resize_temporal(const MotionSequence& seq, std::size_t t_out, ResizeMode mode = ResizeMode::linear,
                                      Rng* rng = nullptr) {
    const std::size_t t_in = seq.length();
    if (t_in == 0) throw InvalidInput("resize_temporal: empty sequence");
    if (t_out == 0) throw InvalidInput("resize_temporal: output length must be positive");
    MotionSequence out(t_out, seq.joint_count(), seq.meta());
    if (mode == ResizeMode::linear) {
        detail::resize_rows_linear(seq.data(), t_in, seq.frame_size(), out.data(), t_out);
        return out;
    }
    if (rng == nullptr) throw InvalidInput("resize_temporal: random_frame mode needs an rng");
    const double width = static_cast<double>(t_in) / static_cast<double>(t_out);
    for (std::size_t k = 0; k < t_out; ++k) {
        const double start = static_cast<double>(k) * width;
        auto src = static_cast<std::size_t>(std::floor(start + rng->uniform() * width));
        src = std::min(src, t_in - 1);
        out.set_frame(k, seq.frame(src));
    }
    return out;
}

struct PreprocessSpec {
    std::size_t root_joint = 0;
    bool align_axes = true;
    // NTU layout: 20 = spine at shoulder height, 4 = left shoulder, 8 = right shoulder.
    std::size_t spine_joint = 20;
    std::size_t shoulder_left = 4;
    std::size_t shoulder_right = 8;
};

namespace detail {

inline Eigen::Vector3d to_eigen(Vec3 v) { return {v.x, v.y, v.z}; }

inline void apply_rigid(MotionSequence& seq, const Eigen::Matrix3d& rot, const Eigen::Vector3d& offset) {
    auto data = seq.data();
    for (std::size_t i = 0; i + 2 < data.size(); i += 3) {
        const Eigen::Vector3d p = rot * (Eigen::Vector3d(data[i], data[i + 1], data[i + 2]) - offset);
        data[i] = static_cast<float>(p.x());
        data[i + 1] = static_cast<float>(p.y());
        data[i + 2] = static_cast<float>(p.z());
    }
}

}  // namespace detail

/// Remove trajectory and camera rotation using the first frame only.
///
/// The first-frame root position is subtracted from every frame. With
/// align_axes, one rotation is then built from the first frame: the spine
/// (root -> spine joint) becomes +z and the shoulder line (left -> right),
/// orthogonalised against the spine, becomes +x.
inline MotionSequence preprocess(const MotionSequence& seq, const PreprocessSpec& spec = {}) {
    const std::size_t joints = seq.joint_count();
    for (std::size_t idx : {spec.root_joint, spec.spine_joint, spec.shoulder_left, spec.shoulder_right}) {
        if (idx >= joints && (spec.align_axes || idx == spec.root_joint)) {
            throw InvalidInput("preprocess: joint index " + std::to_string(idx) + " out of range");
        }
    }
    if (seq.length() == 0) throw InvalidInput("preprocess: empty sequence");

    const Skeleton first = seq.skeleton(0);
    const Eigen::Vector3d root = detail::to_eigen(first.joint(spec.root_joint));
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();

    if (spec.align_axes) {
        const Eigen::Vector3d spine = detail::to_eigen(first.joint(spec.spine_joint)) - root;
        const Eigen::Vector3d shoulder =
            detail::to_eigen(first.joint(spec.shoulder_right)) - detail::to_eigen(first.joint(spec.shoulder_left));
        constexpr double eps = 1e-9;
        if (spine.norm() < eps || shoulder.norm() < eps) {
            throw AlignmentDegenerate("preprocess: zero-length spine or shoulder vector in first frame");
        }
        const Eigen::Vector3d z = spine.normalized();
        const Eigen::Vector3d x_raw = shoulder - shoulder.dot(z) * z;
        if (x_raw.norm() < eps * shoulder.norm() + eps) {
            throw AlignmentDegenerate("preprocess: shoulder line parallel to spine in first frame");
        }
        const Eigen::Vector3d x = x_raw.normalized();
        const Eigen::Vector3d y = z.cross(x);
        rot.row(0) = x;
        rot.row(1) = y;
        rot.row(2) = z;
    }

    MotionSequence out = seq;
    detail::apply_rigid(out, rot, root);
    return out;
}

// Per-axis bounds in degrees for random_rotation.
struct RotationBounds {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Eigen::Matrix3d euler_rotation(double ax, double ay, double az) {
    return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

// One rigid rotation about the origin, Euler angles uniform in [-bound, bound].
inline MotionSequence random_rotation(const MotionSequence& seq, RotationBounds bounds, Rng& rng) {
    if (bounds.x < 0 || bounds.y < 0 || bounds.z < 0) throw InvalidInput("random_rotation: negative bound");
    constexpr double deg = std::numbers::pi / 180.0;
    const double ax = rng.uniform(-bounds.x, bounds.x) * deg;
    const double ay = rng.uniform(-bounds.y, bounds.y) * deg;
    const double az = rng.uniform(-bounds.z, bounds.z) * deg;
    if (ax == 0.0 && ay == 0.0 && az == 0.0) return seq;
    MotionSequence out = seq;
    detail::apply_rigid(out, euler_rotation(ax, ay, az), Eigen::Vector3d::Zero());
    return out;
}

}  // namespace skelaug

#pragma once

// Recover-and-resample augmentation: complete an observed clip (boundary
// extrapolation, then a learned temporal transform), crop a random segment of
// the completed clip and stretch it back. Also prior learning, batch
// augmentation and the PriorSet JSON document.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelaug/boundary.hpp"
#include "skelaug/corpus.hpp"
#include "skelaug/random.hpp"
#include "skelaug/skeleton.hpp"
#include "skelaug/transforms.hpp"

namespace skelaug {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kPriorFormatVersion = 1;

struct AugmentConfig {
    std::size_t T = kDefaultLength;
    double alpha = kDefaultAlpha;
    double lambda_T = kDefaultLambdaT;
    std::size_t N_bkg = kDefaultBoundaryPoses;
    std::size_t N_tr = kDefaultTransforms;
    double m_aug = 0.75;
    double r_lo = 0.7;
    double r_hi = 1.0;
    ResizeMode resize_mode = ResizeMode::linear;
    bool weighted_transforms = false;  // sample W proportional to its cluster size
    std::uint64_t seed = 0;

    void validate() const {
        if (T < 2) throw InvalidInput("config: T must be >= 2");
        if (!(alpha > 0.0)) throw InvalidInput("config: alpha must be > 0");
        if (!(lambda_T > 0.0)) throw InvalidInput("config: lambda_T must be > 0");
        if (N_bkg == 0 || N_tr == 0) throw InvalidInput("config: N_bkg and N_tr must be >= 1");
        if (!(0.0 <= m_aug && m_aug <= 1.0)) throw InvalidInput("config: m_aug must be in [0, 1]");
        if (!(0.0 < r_lo && r_lo <= r_hi && r_hi <= 1.0)) throw InvalidInput("config: need 0 < r_lo <= r_hi <= 1");
    }

    friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

struct Provenance {
    std::string corpus_id;
    std::string timestamp;
    std::string library_version = kLibraryVersion;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PriorSet {
    BoundaryPoseSet boundary_poses;
    std::vector<LinearTransform> transforms;
    std::vector<std::size_t> transform_counts;  // cluster sizes, parallel to transforms
    AugmentConfig config;
    Provenance provenance;
    // Not serialised; filled by learn_priors for reporting.
    double pose_inertia = 0.0;
    double transform_inertia = 0.0;

    std::size_t joint_count() const { return boundary_poses.empty() ? 0 : boundary_poses.poses.front().joint_count(); }

    void validate() const {
        if (boundary_poses.empty()) throw InvalidInput("priors: no boundary poses");
        if (transforms.empty()) throw InvalidInput("priors: no transforms");
        const std::size_t J = joint_count();
        for (const auto& p : boundary_poses.poses) {
            if (p.joint_count() != J || J == 0) throw InvalidInput("priors: boundary poses disagree on joint count");
            if (!p.is_finite()) throw InvalidInput("priors: non-finite boundary pose");
        }
        for (const auto& w : transforms) {
            if (w.length() != config.T) {
                throw InvalidInput("priors: transform length " + std::to_string(w.length()) + " != T = " +
                                   std::to_string(config.T));
            }
            for (std::size_t idx : w.indices)
                if (idx >= config.T) throw InvalidInput("priors: transform index out of range");
        }
        if (!transform_counts.empty() && transform_counts.size() != transforms.size()) {
            throw InvalidInput("priors: transform_counts size mismatch");
        }
        config.validate();
    }
};

// ---------------------------------------------------------------- learning

/// Boundary poses with seed cfg.seed, transforms with cfg.seed + 1.
inline PriorSet learn_priors(const Corpus& corpus, const AugmentConfig& cfg, const PairSpec& pairs = {},
                             Provenance provenance = {}, unsigned threads = 1) {
    cfg.validate();
    if (corpus.empty()) throw InvalidInput("learn_priors: empty corpus");
    corpus.validate(cfg.T);
    PriorSet priors;
    priors.config = cfg;
    priors.provenance = std::move(provenance);
    priors.boundary_poses = learn_boundary_poses(corpus, cfg.N_bkg, cfg.seed, &priors.pose_inertia);
    TransformBank bank = learn_transforms(corpus, pairs, cfg.lambda_T, cfg.N_tr, cfg.seed + 1, threads);
    priors.transforms = std::move(bank.transforms);
    priors.transform_counts = std::move(bank.cluster_sizes);
    priors.transform_inertia = bank.inertia;
    return priors;
}

// ---------------------------------------------------------------- sampling

/// Crop a random segment of relative length r ~ U(r_lo, r_hi) and resize it
/// back to the input length.
inline MotionSequence resample(const MotionSequence& x, double r_lo, double r_hi, ResizeMode mode, Rng& rng) {
    if (!(0.0 < r_lo && r_lo <= r_hi && r_hi <= 1.0)) throw InvalidInput("resample: need 0 < r_lo <= r_hi <= 1");
    const std::size_t T = x.length();
    if (T < 2) throw InvalidInput("resample: sequence needs at least 2 frames");
    const double r = rng.uniform(r_lo, r_hi);
    const auto seg = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(r * static_cast<double>(T) + 0.5)), 2, T);
    const std::size_t start = rng.uniform_index(T - seg + 1);
    MotionSequence crop(seg, x.joint_count(), x.meta());
    std::ranges::copy(x.data().subspan(start * x.frame_size(), seg * x.frame_size()), crop.data().begin());
    return resize_temporal(crop, T, mode, &rng);
}

inline std::size_t sample_transform_index(const PriorSet& priors, Rng& rng) {
    const std::size_t n = priors.transforms.size();
    if (!priors.config.weighted_transforms || priors.transform_counts.size() != n) return rng.uniform_index(n);
    const double total = std::accumulate(priors.transform_counts.begin(), priors.transform_counts.end(), 0.0);
    if (!(total > 0.0)) return rng.uniform_index(n);
    const double target = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(priors.transform_counts[i]);
        if (acc > target) return i;
    }
    return n - 1;
}

inline void check_shape(const MotionSequence& x, const PriorSet& priors) {
    if (x.length() != priors.config.T || x.joint_count() != priors.joint_count()) {
        throw InvalidInput("sequence '" + x.meta().id + "' is " + std::to_string(x.length()) + "x" +
                           std::to_string(x.joint_count()) + ", priors expect " + std::to_string(priors.config.T) + "x" +
                           std::to_string(priors.joint_count()));
    }
}

// Fixed choices for one augmentation; unset fields are sampled.
struct RecoverOverrides {
    std::optional<std::size_t> t_p;
    std::optional<std::size_t> transform;
};

/// One augmentation, in this order: assign p' to the first frame, draw t_p,
/// extrapolate, draw W and apply it, resample.
inline MotionSequence recover_and_resample(const MotionSequence& x, const PriorSet& priors, Rng& rng,
                                           const RecoverOverrides& overrides = {}) {
    check_shape(x, priors);
    const AugmentConfig& cfg = priors.config;
    const Skeleton& p_prime = priors.boundary_poses.poses[nearest_boundary_index(x.frame(0), priors.boundary_poses)];
    const std::size_t t_p = overrides.t_p ? *overrides.t_p : sample_tp({cfg.alpha, cfg.T}, rng);
    MotionSequence recovered = extrapolate(x, p_prime, t_p);
    const std::size_t w = overrides.transform ? *overrides.transform : sample_transform_index(priors, rng);
    if (w >= priors.transforms.size()) throw InvalidInput("recover_and_resample: transform index out of range");
    recovered = apply_transform(recovered, priors.transforms[w]);
    return resample(recovered, cfg.r_lo, cfg.r_hi, cfg.resize_mode, rng);
}

// ---------------------------------------------------------------- batches

/// The round(m_aug * B) batch positions that get augmented, in ascending
/// order. Chosen by a Fisher-Yates shuffle seeded from master_seed.
inline std::vector<std::size_t> select_for_augmentation(std::size_t batch_size, double m_aug, std::uint64_t master_seed) {
    if (!(0.0 <= m_aug && m_aug <= 1.0)) throw InvalidInput("m_aug must be in [0, 1]");
    const auto count = std::min(batch_size, static_cast<std::size_t>(std::floor(m_aug * static_cast<double>(batch_size) + 0.5)));
    std::vector<std::size_t> order(batch_size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(splitmix64(master_seed ^ 0x5e1ec7ULL));
    for (std::size_t i = batch_size; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    order.resize(count);
    std::ranges::sort(order);
    return order;
}

/// Augment a batch. Slot i of the result holds the augmentation of batch[i],
/// or nullopt when it was not selected; originals are the inputs themselves.
/// Every selected sample uses its own stream seeded by (master_seed, id),
/// so outputs do not depend on batch order, composition or `threads`.
inline std::vector<std::optional<MotionSequence>> augment_batch(std::span<const MotionSequence> batch,
                                                                const PriorSet& priors, double m_aug,
                                                                std::uint64_t master_seed, unsigned threads = 1) {
    for (const auto& x : batch) check_shape(x, priors);
    const auto selected = select_for_augmentation(batch.size(), m_aug, master_seed);
    std::vector<std::optional<MotionSequence>> out(batch.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const MotionSequence& x = batch[selected[s]];
            Rng rng(stream_seed(master_seed, x.meta().id));
            out[selected[s]] = recover_and_resample(x, priors, rng);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(selected.size(), 1))));
    if (threads == 1) {
        work(0, selected.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (selected.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = std::min(selected.size(), t * chunk);
            pool.emplace_back(work, lo, std::min(selected.size(), lo + chunk));
        }
    }
    return out;
}

struct FlatAugmentResult {
    std::vector<float> augmented;       // B' x T x J x 3, row-major
    std::vector<std::size_t> selected;  // batch positions, ascending
};

/// Flat-array entry point for embedding hosts: `batch` is B x T x J x 3
/// row-major float32 and sample ids are the decimal batch positions.
inline FlatAugmentResult augment_flat(std::span<const float> batch, std::size_t batch_size, const PriorSet& priors,
                                      double m_aug, std::uint64_t seed, unsigned threads = 1) {
    const std::size_t per = priors.config.T * priors.joint_count() * 3;
    if (batch.size() != batch_size * per) {
        throw InvalidInput("augment_flat: array has " + std::to_string(batch.size()) + " floats, expected " +
                           std::to_string(batch_size) + " x " + std::to_string(per));
    }
    std::vector<MotionSequence> seqs;
    seqs.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        MotionSequence s(priors.config.T, priors.joint_count(), {std::to_string(b), std::nullopt, std::nullopt});
        std::ranges::copy(batch.subspan(b * per, per), s.data().begin());
        seqs.push_back(std::move(s));
    }
    const auto aug = augment_batch(seqs, priors, m_aug, seed, threads);
    FlatAugmentResult res;
    for (std::size_t b = 0; b < batch_size; ++b) {
        if (!aug[b]) continue;
        res.selected.push_back(b);
        res.augmented.insert(res.augmented.end(), aug[b]->data().begin(), aug[b]->data().end());
    }
    return res;
}

// ---------------------------------------------------------------- JSON

inline const char* to_string(ResizeMode m) { return m == ResizeMode::linear ? "linear" : "random_frame"; }

inline ResizeMode resize_mode_from_string(const std::string& s) {
    if (s == "linear") return ResizeMode::linear;
    if (s == "random_frame") return ResizeMode::random_frame;
    throw InvalidInput("unknown resize mode '" + s + "'");
}

inline nlohmann::ordered_json config_to_json(const AugmentConfig& c) {
    nlohmann::ordered_json j;
    j["T"] = c.T;
    j["alpha"] = c.alpha;
    j["lambda_T"] = c.lambda_T;
    j["N_bkg"] = c.N_bkg;
    j["N_tr"] = c.N_tr;
    j["m_aug"] = c.m_aug;
    j["resample_range"] = {c.r_lo, c.r_hi};
    j["resize_mode"] = to_string(c.resize_mode);
    j["weighted_transforms"] = c.weighted_transforms;
    j["seed"] = c.seed;
    return j;
}

// Fields absent from `j` keep the value already in `c`.
inline void merge_config_json(const nlohmann::json& j, AugmentConfig& c) {
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "T") c.T = value.get<std::size_t>();
            else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "lambda_T") c.lambda_T = value.get<double>();
            else if (key == "N_bkg") c.N_bkg = value.get<std::size_t>();
            else if (key == "N_tr") c.N_tr = value.get<std::size_t>();
            else if (key == "m_aug") c.m_aug = value.get<double>();
            else if (key == "resample_range") {
                if (!value.is_array() || value.size() != 2) throw FormatError("resample_range must be [lo, hi]");
                c.r_lo = value[0].get<double>();
                c.r_hi = value[1].get<double>();
            } else if (key == "resize_mode") c.resize_mode = resize_mode_from_string(value.get<std::string>());
            else if (key == "weighted_transforms") c.weighted_transforms = value.get<bool>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else throw FormatError("unknown config field '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    } catch (const InvalidInput& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
}

inline nlohmann::ordered_json priors_to_json(const PriorSet& p) {
    nlohmann::ordered_json j;
    j["version"] = kPriorFormatVersion;
    j["config"] = config_to_json(p.config);
    auto poses = nlohmann::ordered_json::array();
    for (const auto& pose : p.boundary_poses.poses) {
        auto joints = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < pose.joint_count(); ++k) {
            const Vec3 v = pose.joint(k);
            joints.push_back({v.x, v.y, v.z});
        }
        poses.push_back(std::move(joints));
    }
    j["poses"] = std::move(poses);
    auto transforms = nlohmann::ordered_json::array();
    for (const auto& w : p.transforms) transforms.push_back(w.indices);
    j["transforms"] = std::move(transforms);
    j["transform_counts"] = p.transform_counts;
    j["provenance"] = {{"corpus_id", p.provenance.corpus_id},
                       {"timestamp", p.provenance.timestamp},
                       {"library_version", p.provenance.library_version}};
    return j;
}

inline std::string serialize_priors(const PriorSet& p) { return priors_to_json(p).dump(2) + "\n"; }

inline PriorSet priors_from_json(const nlohmann::json& j) {
    PriorSet p;
    try {
        if (!j.is_object()) throw FormatError("priors: document is not an object");
        const int version = j.at("version").get<int>();
        if (version != kPriorFormatVersion) throw FormatError("priors: unsupported version " + std::to_string(version));
        merge_config_json(j.at("config"), p.config);
        for (const auto& pose : j.at("poses")) {
            Skeleton s(pose.size());
            for (std::size_t k = 0; k < pose.size(); ++k) {
                const auto& v = pose.at(k);
                if (v.size() != 3) throw FormatError("priors: pose joint is not [x, y, z]");
                s.set_joint(k, {v.at(0).get<float>(), v.at(1).get<float>(), v.at(2).get<float>()});
            }
            p.boundary_poses.poses.push_back(std::move(s));
        }
        for (const auto& w : j.at("transforms")) p.transforms.push_back({w.get<std::vector<std::size_t>>()});
        if (j.contains("transform_counts")) p.transform_counts = j.at("transform_counts").get<std::vector<std::size_t>>();
        if (j.contains("provenance")) {
            const auto& pv = j.at("provenance");
            p.provenance.corpus_id = pv.value("corpus_id", "");
            p.provenance.timestamp = pv.value("timestamp", "");
            p.provenance.library_version = pv.value("library_version", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("priors: ") + e.what());
    }
    try {
        p.validate();
    } catch (const InvalidInput& e) {
        throw FormatError(e.what());
    }
    return p;
}

inline PriorSet parse_priors(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("priors: ") + e.what());
    }
    return priors_from_json(j);
}

inline PriorSet load_priors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open priors file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_priors(ss.str());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void save_priors(const std::filesystem::path& path, const PriorSet& p) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out << serialize_priors(p);
        if (!out) throw FormatError("write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace skelaug

#pragma once

// Reader / writer for NTU-style `.skeleton` text recordings and primary-body
// selection.
//
// Layout:
//   <frame count>
//   per frame:  <body count>
//     per body: <body id> + 9 tracking values     (10 tokens)
//               <joint count>
//               <joint count> lines of 12 values, the first three x y z

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "skelaug/error.hpp"
#include "skelaug/skeleton.hpp"

namespace skelaug {

struct RawJoint {
    Vec3 pos;
    std::array<float, 9> aux{};  // depth/colour coords, orientation, tracking state
};

struct RawBody {
    std::string id;
    std::array<float, 9> tracking{};
    std::vector<RawJoint> joints;
};

struct RawFrame {
    std::vector<RawBody> bodies;
};

struct Recording {
    std::vector<RawFrame> frames;

    std::size_t joint_count() const {
        for (const auto& f : frames)
            for (const auto& b : f.bodies) return b.joints.size();
        return 0;
    }
};

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next line split on whitespace. Throws at EOF.
    std::vector<std::string_view> tokens(const char* expecting) {
        if (!std::getline(in_, line_)) {
            throw ParseError(line_no_ + 1, std::string("unexpected end of file, expected ") + expecting);
        }
        ++line_no_;
        return split();
    }

    // True once only blank lines remain.
    bool at_end() {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (!split().empty()) return false;
        }
        return true;
    }

    std::size_t line() const noexcept { return line_no_; }

private:
    std::vector<std::string_view> split() {
        std::vector<std::string_view> out;
        std::string_view sv(line_);
        std::size_t i = 0;
        while (i < sv.size()) {
            while (i < sv.size() && is_space(sv[i])) ++i;
            std::size_t j = i;
            while (j < sv.size() && !is_space(sv[j])) ++j;
            if (j > i) out.push_back(sv.substr(i, j - i));
            i = j;
        }
        return out;
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

    std::istream& in_;
    std::string line_;
    std::size_t line_no_ = 0;
};

inline float parse_float(std::string_view tok, std::size_t line) {
    // from_chars for floating point is not available on every libstdc++ we
    // target, strtof on a bounded copy is.
    std::string s(tok);
    char* end = nullptr;
    errno = 0;
    const float v = std::strtof(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty()) throw ParseError(line, "non-numeric token '" + s + "'");
    if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + s + "'");
    return v;
}

inline std::size_t parse_count(std::string_view tok, std::size_t line) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ParseError(line, "expected a non-negative integer, got '" + std::string(tok) + "'");
    }
    return v;
}

inline std::vector<std::string_view> expect_tokens(LineReader& r, std::size_t n, const char* what) {
    auto toks = r.tokens(what);
    if (toks.size() != n) {
        throw ParseError(r.line(), std::string("expected ") + std::to_string(n) + " values for " + what + ", got " +
                                       std::to_string(toks.size()));
    }
    return toks;
}

}  // namespace detail

/// Parse an NTU `.skeleton` stream. Counts are strict, whitespace and CRLF
/// are tolerated; every joint in the recording must share one joint count.
inline Recording parse_ntu_skeleton(std::istream& in) {
    detail::LineReader reader(in);
    Recording rec;
    const std::size_t n_frames = detail::parse_count(detail::expect_tokens(reader, 1, "frame count")[0], reader.line());
    std::size_t joint_count = 0;
    bool have_joint_count = false;
    rec.frames.reserve(std::min<std::size_t>(n_frames, 1 << 16));

    for (std::size_t f = 0; f < n_frames; ++f) {
        RawFrame frame;
        const std::size_t n_bodies = detail::parse_count(detail::expect_tokens(reader, 1, "body count")[0], reader.line());
        for (std::size_t b = 0; b < n_bodies; ++b) {
            RawBody body;
            auto info = detail::expect_tokens(reader, 10, "body info");
            std::uint64_t id_check = 0;
            auto [ptr, ec] = std::from_chars(info[0].data(), info[0].data() + info[0].size(), id_check);
            if (ec != std::errc{} || ptr != info[0].data() + info[0].size()) {
                throw ParseError(reader.line(), "non-numeric body id '" + std::string(info[0]) + "'");
            }
            body.id = std::string(info[0]);
            for (std::size_t k = 0; k < 9; ++k) body.tracking[k] = detail::parse_float(info[k + 1], reader.line());

            const std::size_t nj = detail::parse_count(detail::expect_tokens(reader, 1, "joint count")[0], reader.line());
            if (nj == 0) throw ParseError(reader.line(), "joint count must be positive");
            if (have_joint_count && nj != joint_count) {
                throw ParseError(reader.line(), "joint count " + std::to_string(nj) + " differs from " +
                                                    std::to_string(joint_count) + " used earlier");
            }
            joint_count = nj;
            have_joint_count = true;

            // grown per line so a corrupt count cannot force a huge allocation
            body.joints.reserve(std::min<std::size_t>(nj, 256));
            for (std::size_t j = 0; j < nj; ++j) {
                auto vals = detail::expect_tokens(reader, 12, "joint");
                RawJoint& joint = body.joints.emplace_back();
                joint.pos = {detail::parse_float(vals[0], reader.line()), detail::parse_float(vals[1], reader.line()),
                             detail::parse_float(vals[2], reader.line())};
                for (std::size_t k = 0; k < 9; ++k) joint.aux[k] = detail::parse_float(vals[k + 3], reader.line());
            }
            frame.bodies.push_back(std::move(body));
        }
        rec.frames.push_back(std::move(frame));
    }
    if (!reader.at_end()) throw ParseError(reader.line(), "trailing content after last frame");
    return rec;
}

inline Recording parse_ntu_skeleton(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_ntu_skeleton(in);
}

/// Companion writer; floats use 9 significant digits so a reparse is exact.
inline void write_ntu_skeleton(std::ostream& out, const Recording& rec) {
    char buf[64];
    auto put = [&](float v) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
        out << buf;
    };
    out << rec.frames.size() << '\n';
    for (const auto& frame : rec.frames) {
        out << frame.bodies.size() << '\n';
        for (const auto& body : frame.bodies) {
            out << body.id;
            for (float v : body.tracking) {
                out << ' ';
                put(v);
            }
            out << '\n' << body.joints.size() << '\n';
            for (const auto& j : body.joints) {
                put(j.pos.x);
                out << ' ';
                put(j.pos.y);
                out << ' ';
                put(j.pos.z);
                for (float v : j.aux) {
                    out << ' ';
                    put(v);
                }
                out << '\n';
            }
        }
    }
}

/// Pick the body that moves most and return it as a sequence.
///
/// Bodies are tracked by id across frames. Bodies whose coordinates are all
/// zero are dropped; among the rest the one with the largest summed
/// per-coordinate variance over its frames wins (ties -> first seen). Frames
/// where it is absent copy the nearest frame where it is present (ties ->
/// earlier frame).
inline MotionSequence select_primary_body(const Recording& rec, SequenceMeta meta = {}) {
    struct Track {
        std::size_t first_seen;
        std::vector<std::size_t> frames;
        std::vector<const RawBody*> bodies;
    };
    std::map<std::string, Track> tracks;
    std::size_t order = 0;
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
        for (const auto& body : rec.frames[f].bodies) {
            auto [it, inserted] = tracks.try_emplace(body.id, Track{order, {}, {}});
            if (inserted) ++order;
            // duplicate ids inside one frame: keep the first
            if (!it->second.frames.empty() && it->second.frames.back() == f) continue;
            it->second.frames.push_back(f);
            it->second.bodies.push_back(&body);
        }
    }

    const Track* best = nullptr;
    double best_var = -1.0;
    for (const auto& [id, track] : tracks) {
        bool all_zero = true;
        for (const RawBody* b : track.bodies)
            for (const auto& j : b->joints)
                if (j.pos.x != 0.f || j.pos.y != 0.f || j.pos.z != 0.f) all_zero = false;
        if (all_zero) continue;

        const std::size_t nj = track.bodies.front()->joints.size();
        const auto n = static_cast<double>(track.bodies.size());
        double total = 0.0;
        for (std::size_t j = 0; j < nj; ++j) {
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0, sq = 0.0;
                for (const RawBody* b : track.bodies) {
                    const Vec3 p = b->joints[j].pos;
                    const double v = c == 0 ? p.x : (c == 1 ? p.y : p.z);
                    sum += v;
                    sq += v * v;
                }
                const double mean = sum / n;
                total += std::max(0.0, sq / n - mean * mean);
            }
        }
        if (total > best_var || (total == best_var && best != nullptr && track.first_seen < best->first_seen)) {
            best_var = total;
            best = &track;
        }
    }
    if (best == nullptr) throw NoValidBody("recording has no body with non-zero coordinates");

    const std::size_t nj = best->bodies.front()->joints.size();
    MotionSequence seq(rec.frames.size(), nj, std::move(meta));
    std::size_t k = 0;  // index into best->frames of the nearest present frame
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
        while (k + 1 < best->frames.size() && best->frames[k + 1] <= f) ++k;
        std::size_t pick = k;
        if (best->frames[k] < f && k + 1 < best->frames.size() && best->frames[k + 1] - f < f - best->frames[k]) {
            pick = k + 1;
        }
        const RawBody& body = *best->bodies[pick];
        auto dst = seq.frame(f);
        for (std::size_t j = 0; j < nj; ++j) {
            dst[3 * j] = body.joints[j].pos.x;
            dst[3 * j + 1] = body.joints[j].pos.y;
            dst[3 * j + 2] = body.joints[j].pos.z;
        }
    }
    return seq;
}

}  // namespace skelaug

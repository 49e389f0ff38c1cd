#pragma once

// Corpus container and its two on-disk encodings.
//
// jsonl:  one object per line {"id", "label", "subject", "frames": T x J x 3}
// packed: little-endian binary
//           "SKL1" | u32 count | per record:
//           u32 id_len | id bytes (UTF-8) | i32 label (-1 = none) | u32 T | u32 J |
//           T*J*3 IEEE-754 float32
// Packed does not carry the subject field.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelaug/error.hpp"
#include "skelaug/skeleton.hpp"

namespace skelaug {

struct Corpus {
    std::vector<MotionSequence> sequences;

    bool empty() const noexcept { return sequences.empty(); }
    std::size_t size() const noexcept { return sequences.size(); }
    std::size_t joint_count() const { return sequences.empty() ? 0 : sequences.front().joint_count(); }

    // Throws InvalidInput unless J is shared and ids are unique. When
    // `length` is non-zero every sequence must have exactly that many frames.
    void validate(std::size_t length = 0) const {
        std::set<std::string> ids;
        for (const auto& s : sequences) {
            if (s.joint_count() != joint_count()) {
                throw InvalidInput("sequence '" + s.meta().id + "' has " + std::to_string(s.joint_count()) +
                                   " joints, corpus uses " + std::to_string(joint_count()));
            }
            if (length != 0 && s.length() != length) {
                throw InvalidInput("sequence '" + s.meta().id + "' has " + std::to_string(s.length()) +
                                   " frames, expected " + std::to_string(length));
            }
            if (!ids.insert(s.meta().id).second) throw InvalidInput("duplicate sequence id '" + s.meta().id + "'");
        }
    }
};

enum class CorpusFormat { jsonl, packed };

inline CorpusFormat format_for_path(const std::filesystem::path& p) {
    return p.extension() == ".jsonl" || p.extension() == ".json" ? CorpusFormat::jsonl : CorpusFormat::packed;
}

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

template <class T>
T get_le(std::istream& in, const char* what) {
    static_assert(sizeof(T) == 4);
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(std::string("short read while reading ") + what);
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    T value;
    std::memcpy(&value, &bits, 4);
    return value;
}

}  // namespace detail

inline void write_packed(std::ostream& out, const Corpus& corpus) {
    out.write("SKL1", 4);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(corpus.size()));
    for (const auto& s : corpus.sequences) {
        const std::string& id = s.meta().id;
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        detail::put_le<std::int32_t>(out, s.meta().label.value_or(-1));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.length()));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.joint_count()));
        for (float v : s.data()) detail::put_le<float>(out, v);
    }
}

inline Corpus read_packed(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4)) throw FormatError("short read while reading magic");
    if (std::memcmp(magic, "SKL1", 4) != 0) throw FormatError("bad magic, expected SKL1");
    const auto count = detail::get_le<std::uint32_t>(in, "record count");
    Corpus corpus;
    for (std::uint32_t r = 0; r < count; ++r) {
        const auto id_len = detail::get_le<std::uint32_t>(in, "id length");
        std::string id(id_len, '\0');
        if (id_len > 0 && !in.read(id.data(), id_len)) throw FormatError("short read in id of record " + std::to_string(r));
        const auto label = detail::get_le<std::int32_t>(in, "label");
        const auto frames = detail::get_le<std::uint32_t>(in, "frame count");
        const auto joints = detail::get_le<std::uint32_t>(in, "joint count");
        SequenceMeta meta{std::move(id), label < 0 ? std::nullopt : std::optional<int>(label), std::nullopt};
        const std::uint64_t n = std::uint64_t{frames} * joints * 3;
        if (n > (std::uint64_t{1} << 32)) throw FormatError("record " + std::to_string(r) + " declares an implausible size");
        MotionSequence seq(frames, joints, std::move(meta));
        for (float& v : seq.data()) v = detail::get_le<float>(in, "coordinates");
        corpus.sequences.push_back(std::move(seq));
    }
    return corpus;
}

inline nlohmann::ordered_json sequence_to_json(const MotionSequence& s) {
    nlohmann::ordered_json j;
    j["id"] = s.meta().id;
    j["label"] = s.meta().label ? nlohmann::ordered_json(*s.meta().label) : nlohmann::ordered_json(nullptr);
    j["subject"] = s.meta().subject ? nlohmann::ordered_json(*s.meta().subject) : nlohmann::ordered_json(nullptr);
    auto frames = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < s.length(); ++t) {
        auto frame = nlohmann::ordered_json::array();
        const auto f = s.frame(t);
        for (std::size_t k = 0; k < s.joint_count(); ++k) frame.push_back({f[3 * k], f[3 * k + 1], f[3 * k + 2]});
        frames.push_back(std::move(frame));
    }
    j["frames"] = std::move(frames);
    return j;
}

inline void write_jsonl(std::ostream& out, const Corpus& corpus) {
    for (const auto& s : corpus.sequences) out << sequence_to_json(s).dump() << '\n';
}

inline MotionSequence sequence_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("record is not a JSON object");
    if (!j.contains("frames")) throw FormatError("missing \"frames\" field");
    SequenceMeta meta;
    if (j.contains("id")) meta.id = j.at("id").get<std::string>();
    if (j.contains("label") && !j.at("label").is_null()) meta.label = j.at("label").get<int>();
    if (j.contains("subject") && !j.at("subject").is_null()) meta.subject = j.at("subject").get<std::string>();

    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty()) throw FormatError("\"frames\" must be a non-empty array");
    const std::size_t joints = frames.at(0).size();
    MotionSequence seq(frames.size(), joints, std::move(meta));
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& frame = frames[t];
        if (!frame.is_array() || frame.size() != joints) {
            throw FormatError("frame " + std::to_string(t) + " does not have " + std::to_string(joints) + " joints");
        }
        auto dst = seq.frame(t);
        for (std::size_t k = 0; k < joints; ++k) {
            const auto& p = frame[k];
            if (!p.is_array() || p.size() != 3) throw FormatError("joint is not an [x, y, z] triple");
            for (int c = 0; c < 3; ++c) dst[3 * k + c] = p[c].get<float>();
        }
    }
    return seq;
}

inline Corpus read_jsonl(std::istream& in) {
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            corpus.sequences.push_back(sequence_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

inline Corpus read_corpus(const std::filesystem::path& path, std::optional<CorpusFormat> format = std::nullopt) {
    const CorpusFormat fmt = format.value_or(format_for_path(path));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open corpus '" + path.string() + "'");
    return fmt == CorpusFormat::jsonl ? read_jsonl(in) : read_packed(in);
}

// Writes to a sibling temp file and renames it into place on success.
inline void write_corpus(const std::filesystem::path& path, const Corpus& corpus,
                         std::optional<CorpusFormat> format = std::nullopt) {
    const CorpusFormat fmt = format.value_or(format_for_path(path));
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        if (fmt == CorpusFormat::jsonl) {
            write_jsonl(out, corpus);
        } else {
            write_packed(out, corpus);
        }
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw FormatError("write failed for '" + path.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace skelaug

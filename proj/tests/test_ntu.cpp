#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace skelaug;

namespace {

Recording make_recording(std::size_t frames, std::size_t bodies, std::size_t joints, Rng& rng) {
    Recording rec;
    for (std::size_t f = 0; f < frames; ++f) {
        RawFrame frame;
        for (std::size_t b = 0; b < bodies; ++b) {
            RawBody body;
            body.id = std::to_string(72057594037931101ULL + b);
            for (float& v : body.tracking) v = float(rng.uniform_index(3));
            body.joints.resize(joints);
            for (auto& j : body.joints) {
                j.pos = {float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), float(rng.uniform(2, 4))};
                for (float& v : j.aux) v = float(rng.uniform(0, 500));
            }
            frame.bodies.push_back(std::move(body));
        }
        rec.frames.push_back(std::move(frame));
    }
    return rec;
}

std::string to_text(const Recording& rec) {
    std::ostringstream out;
    write_ntu_skeleton(out, rec);
    return out.str();
}

std::string minimal_file() {
    std::string s = "1\n1\n72057594037931101 0 1 1 1 1 0 -0.2 0.1 2\n25\n";
    for (int j = 0; j < 25; ++j) s += "0.1 0.2 3.0 250 200 1000 500 0.1 0.2 0.3 0.9 2\n";
    return s;
}

}  // namespace

TEST(ParseNtu, MinimalWellFormed) {
    const Recording rec = parse_ntu_skeleton(minimal_file());
    ASSERT_EQ(rec.frames.size(), 1u);
    ASSERT_EQ(rec.frames[0].bodies.size(), 1u);
    EXPECT_EQ(rec.frames[0].bodies[0].joints.size(), 25u);
    EXPECT_EQ(rec.frames[0].bodies[0].id, "72057594037931101");
    EXPECT_EQ(rec.frames[0].bodies[0].joints[3].pos, (Vec3{0.1f, 0.2f, 3.0f}));
}

TEST(ParseNtu, ToleratesCrlfAndTrailingWhitespace) {
    std::string crlf;
    for (char c : minimal_file()) {
        if (c == '\n') crlf += "  \r\n";
        else crlf += c;
    }
    crlf += "\r\n\r\n";
    EXPECT_EQ(parse_ntu_skeleton(crlf).frames[0].bodies[0].joints.size(), 25u);
}

TEST(ParseNtu, TruncationReportsEofLine) {
    std::string text = minimal_file();
    text[0] = '2';
    try {
        parse_ntu_skeleton(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 30u);  // 29 lines present, EOF on the 30th
    }
}

TEST(ParseNtu, NonNumericTokenNamesLine) {
    std::string text = minimal_file();
    text.replace(text.find("0.1 0.2 3.0"), 3, "abc");
    try {
        parse_ntu_skeleton(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 5u);
    }
}

TEST(ParseNtu, JointCountMismatchAcrossBodies) {
    Rng rng(1);
    Recording rec = make_recording(2, 1, 25, rng);
    rec.frames[1].bodies[0].joints.resize(20);
    EXPECT_THROW(parse_ntu_skeleton(to_text(rec)), ParseError);
}

TEST(ParseNtu, TrailingGarbageRejected) {
    EXPECT_THROW(parse_ntu_skeleton(minimal_file() + "7\n"), ParseError);
}

TEST(ParseNtu, WriterRoundTripIsExact) {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const Recording rec = make_recording(1 + rng.uniform_index(5), rng.uniform_index(3), 25, rng);
        const Recording back = parse_ntu_skeleton(to_text(rec));
        ASSERT_EQ(back.frames.size(), rec.frames.size());
        for (std::size_t f = 0; f < rec.frames.size(); ++f) {
            ASSERT_EQ(back.frames[f].bodies.size(), rec.frames[f].bodies.size());
            for (std::size_t b = 0; b < rec.frames[f].bodies.size(); ++b) {
                EXPECT_EQ(back.frames[f].bodies[b].id, rec.frames[f].bodies[b].id);
                for (std::size_t j = 0; j < 25; ++j)
                    EXPECT_EQ(back.frames[f].bodies[b].joints[j].pos, rec.frames[f].bodies[b].joints[j].pos);
            }
        }
    }
}

TEST(SelectPrimaryBody, SingleBody) {
    Rng rng(3);
    const Recording rec = make_recording(6, 1, 25, rng);
    const MotionSequence s = select_primary_body(rec);
    ASSERT_EQ(s.length(), 6u);
    EXPECT_EQ(s.skeleton(4).joint(7), rec.frames[4].bodies[0].joints[7].pos);
}

TEST(SelectPrimaryBody, PicksMovingBody) {
    Rng rng(4);
    Recording rec = make_recording(8, 2, 25, rng);
    // body 0 static, body 1 moving
    for (std::size_t f = 1; f < 8; ++f) rec.frames[f].bodies[0].joints = rec.frames[0].bodies[0].joints;

    // brute-force summed variance
    auto variance = [&](std::size_t b) {
        double total = 0;
        for (std::size_t j = 0; j < 25; ++j)
            for (int c = 0; c < 3; ++c) {
                std::vector<double> v;
                for (const auto& fr : rec.frames) {
                    const Vec3 p = fr.bodies[b].joints[j].pos;
                    v.push_back(c == 0 ? p.x : c == 1 ? p.y : p.z);
                }
                double m = 0;
                for (double x : v) m += x;
                m /= double(v.size());
                for (double x : v) total += (x - m) * (x - m) / double(v.size());
            }
        return total;
    };
    ASSERT_EQ(variance(0), 0.0);
    ASSERT_GT(variance(1), 0.0);
    const MotionSequence s = select_primary_body(rec);
    EXPECT_EQ(s.skeleton(5).joint(2), rec.frames[5].bodies[1].joints[2].pos);
}

TEST(SelectPrimaryBody, FillsMissingFramesFromNearest) {
    Rng rng(5);
    Recording rec = make_recording(5, 1, 3, rng);
    const Recording full = rec;
    rec.frames[0].bodies.clear();
    rec.frames[2].bodies.clear();
    rec.frames[3].bodies.clear();
    const MotionSequence s = select_primary_body(rec);
    EXPECT_EQ(s.skeleton(0).joint(0), full.frames[1].bodies[0].joints[0].pos);
    EXPECT_EQ(s.skeleton(2).joint(0), full.frames[1].bodies[0].joints[0].pos);
    EXPECT_EQ(s.skeleton(3).joint(0), full.frames[4].bodies[0].joints[0].pos);
}

TEST(SelectPrimaryBody, AllZeroBodyRejected) {
    Rng rng(6);
    Recording rec = make_recording(3, 1, 25, rng);
    for (auto& f : rec.frames)
        for (auto& j : f.bodies[0].joints) j.pos = {};
    EXPECT_THROW(select_primary_body(rec), NoValidBody);
    EXPECT_THROW(select_primary_body(Recording{}), NoValidBody);
}

TEST(ParseNtu, HugeJointCountIsParseError) {
    EXPECT_THROW(parse_ntu_skeleton(std::string_view("1\n1\n1 0 0 0 0 0 0 0 0 0\n25000000000000\n0 0 0 0 0 0 0 0 0 0 0 0\n")),
                 ParseError);
    EXPECT_THROW(parse_ntu_skeleton(std::string_view("99999999999999\n1\n")), ParseError);
}

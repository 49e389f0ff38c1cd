#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace skelaug;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("skelaug_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(SKELAUG_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                                (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string slurp(const std::string& name) const {
        std::ifstream in(dir_ / name, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

std::size_t count_aug(const Corpus& c) {
    return std::ranges::count_if(c.sequences, [](const auto& s) { return s.meta().id.ends_with("#aug"); });
}

}  // namespace

TEST_F(Cli, SynthLearnAugmentRoundTrip) {
    ASSERT_EQ(run("synth --out " + path("s.skl") + " --n 100 --noise 0.01 --seed 1"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("p.json")), 0);
    const PriorSet p = load_priors(path("p.json"));
    EXPECT_EQ(p.transforms.size(), 20u);
    EXPECT_EQ(p.boundary_poses.size(), 10u);
    EXPECT_EQ(p.provenance.corpus_id, "s");

    ASSERT_EQ(run("augment --corpus " + path("s.skl") + " --priors " + path("p.json") + " --out " + path("a.skl") +
                  " --m-aug 0.75 --seed 5"),
              0);
    ASSERT_EQ(run("augment --corpus " + path("s.skl") + " --priors " + path("p.json") + " --out " + path("b.skl") +
                  " --m-aug 0.75 --seed 5 --threads 3"),
              0);
    EXPECT_EQ(slurp("a.skl"), slurp("b.skl"));
    const Corpus a = read_corpus(path("a.skl"));
    EXPECT_EQ(a.size(), 175u);
    EXPECT_EQ(count_aug(a), 75u);
    for (std::size_t i = 1; i < a.size(); ++i)
        if (a.sequences[i].meta().id.ends_with("#aug"))
            EXPECT_EQ(a.sequences[i].meta().id, a.sequences[i - 1].meta().id + "#aug");

    ASSERT_EQ(run("augment --corpus " + path("s.skl") + " --priors " + path("p.json") + " --out " + path("z.skl") +
                  " --m-aug 0"),
              0);
    EXPECT_EQ(count_aug(read_corpus(path("z.skl"))), 0u);
}

TEST_F(Cli, LearnFlagsAndConfigFile) {
    ASSERT_EQ(run("synth --out " + path("s.jsonl") + " --n 20 --noise 0.01"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.jsonl") + " --out " + path("p.json") + " --n-tr 3 --n-bkg 2"), 0);
    EXPECT_EQ(load_priors(path("p.json")).transforms.size(), 3u);

    std::ofstream(path("cfg.json")) << R"({"N_tr": 4, "N_bkg": 3, "alpha": 0.2})";
    ASSERT_EQ(run("--config " + path("cfg.json") + " learn --corpus " + path("s.jsonl") + " --out " + path("q.json") +
                  " --n-tr 5"),
              0);
    const PriorSet q = load_priors(path("q.json"));
    EXPECT_EQ(q.transforms.size(), 5u);  // flag beats file
    EXPECT_EQ(q.boundary_poses.size(), 3u);
    EXPECT_EQ(q.config.alpha, 0.2);

    ASSERT_EQ(run("learn --corpus " + path("s.jsonl") + " --out " + path("r.json") + " --timestamp T0"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.jsonl") + " --out " + path("r2.json") + " --timestamp T0"), 0);
    EXPECT_EQ(slurp("r.json"), slurp("r2.json"));
}

TEST_F(Cli, UsageAndRuntimeErrors) {
    EXPECT_EQ(run("learn --out " + path("x.json")), 2);
    EXPECT_NE(slurp("stderr.txt").find("--corpus"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("x.json")));
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("--help"), 0);

    ASSERT_EQ(run("synth --out " + path("s.skl") + " --n 20 --noise 0.01"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("p.json") + " --n-tr 2 --n-bkg 2"), 0);
    ASSERT_EQ(run("synth --out " + path("short.skl") + " --n 3 --length 32"), 0);
    EXPECT_EQ(run("augment --corpus " + path("short.skl") + " --priors " + path("p.json") + " --out " + path("o.skl")), 1);
    EXPECT_NE(slurp("stderr.txt").find("synth-0"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("o.skl")));
    EXPECT_FALSE(fs::exists(path("o.skl.tmp")));

    std::ofstream(path("bad.json")) << "{ not json";
    EXPECT_EQ(run("inspect --priors " + path("bad.json") + " --out " + path("insp")), 1);
    EXPECT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("q.json") + " --alpha -1"), 2);
    EXPECT_FALSE(fs::exists(path("q.json")));
    EXPECT_EQ(run("augment --corpus " + path("s.skl") + " --priors " + path("p.json") + " --out " + path("o.skl") +
                  " --m-aug 1.5"),
              2);
    EXPECT_EQ(run("synth --out " + path("t.skl") + " --shape zigzag"), 2);
}

TEST_F(Cli, AnalyzeCsv) {
    ASSERT_EQ(run("synth --out " + path("s.skl") + " --n 40 --noise 0.01"), 0);
    ASSERT_EQ(run("analyze --corpus " + path("s.skl") + " --out " + path("d.csv")), 0);
    std::istringstream csv(slurp("d.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "t,diversity");
    std::vector<double> values;
    while (std::getline(csv, line)) values.push_back(std::stod(line.substr(line.find(',') + 1)));
    ASSERT_EQ(values.size(), 64u);
    EXPECT_LT(values[0], values[32]);

    ASSERT_EQ(run("synth --out " + path("same.skl") + " --n 4 --classes 1"), 0);
    ASSERT_EQ(run("analyze --corpus " + path("same.skl") + " --out " + path("z.csv")), 0);
    std::istringstream zeros(slurp("z.csv"));
    std::getline(zeros, line);
    while (std::getline(zeros, line)) EXPECT_EQ(line.substr(line.find(',') + 1), "0");

    ASSERT_EQ(run("synth --out " + path("one.skl") + " --n 1"), 0);
    EXPECT_EQ(run("analyze --corpus " + path("one.skl") + " --out " + path("o.csv")), 1);
}

TEST_F(Cli, InspectWritesGrids) {
    const std::string golden = (fs::path(SKELAUG_TEST_DATA) / "priors_small.json").string();
    ASSERT_EQ(run("inspect --priors " + golden + " --out " + path("insp")), 0);
    EXPECT_EQ(slurp("insp/transform_00.csv"), "1,0\n0,1\n");
    EXPECT_EQ(slurp("insp/transform_01.csv"), "0,1\n0,1\n");
    EXPECT_EQ(slurp("insp/pose_00.csv"), "0.5,-1,2\n");

    ASSERT_EQ(run("synth --out " + path("s.skl") + " --n 40 --noise 0.01"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("p.json")), 0);
    ASSERT_EQ(run("inspect --priors " + path("p.json") + " --out " + path("big")), 0);
    std::size_t transforms = 0, poses = 0;
    for (const auto& e : fs::directory_iterator(path("big"))) {
        const auto name = e.path().filename().string();
        transforms += name.starts_with("transform_");
        poses += name.starts_with("pose_");
    }
    EXPECT_EQ(transforms, 20u);
    EXPECT_EQ(poses, 10u);
    std::istringstream pose(slurp("big/pose_00.csv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(pose, line)) {
        ++rows;
        EXPECT_EQ(std::ranges::count(line, ','), 2);
    }
    EXPECT_EQ(rows, 25u);
}

TEST_F(Cli, IngestNtuFiles) {
    Rng rng(3);
    fs::create_directories(path("raw"));
    for (int f = 0; f < 3; ++f) {
        Recording rec;
        const auto seq = test::posed_sequence(40 + f, rng);
        for (std::size_t t = 0; t < seq.length(); ++t) {
            RawBody body{"72057594037931" + std::to_string(f), {}, {}};
            for (std::size_t j = 0; j < 25; ++j) body.joints.push_back({seq.skeleton(t).joint(j), {}});
            rec.frames.push_back({{body}});
        }
        std::ofstream out(path("raw/S001C001P00" + std::to_string(f + 1) + "R001A00" + std::to_string(f + 1) + ".skeleton"));
        write_ntu_skeleton(out, rec);
    }
    std::ofstream(path("raw/notes.txt")) << "ignored";
    ASSERT_EQ(run("ingest --input " + path("raw") + " --out " + path("c.jsonl")), 0);
    const Corpus c = read_corpus(path("c.jsonl"));
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c.sequences[1].meta().id, "S001C001P002R001A002");
    EXPECT_EQ(c.sequences[1].meta().label, 1);
    EXPECT_EQ(c.sequences[1].meta().subject, "P002");
    for (const auto& s : c.sequences) {
        EXPECT_EQ(s.length(), 64u);
        EXPECT_EQ(s.skeleton(0).joint(0), (Vec3{0, 0, 0}));
    }

    std::ofstream(path("raw/broken.skeleton")) << "2\n1\n";
    EXPECT_EQ(run("ingest --input " + path("raw") + " --out " + path("d.jsonl")), 1);
    EXPECT_NE(slurp("stderr.txt").find("broken.skeleton"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("d.jsonl")));
}

TEST_F(Cli, BenchReportsIdenticalOutputs) {
    ASSERT_EQ(run("synth --out " + path("s.skl") + " --n 30 --noise 0.01"), 0);
    ASSERT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("p.json") + " --n-tr 4 --n-bkg 3"), 0);
    ASSERT_EQ(run("bench --corpus " + path("s.skl") + " --priors " + path("p.json") + " --iters 500 --threads 3"), 0);
    const std::string out = slurp("stdout.txt");
    EXPECT_NE(out.find("identical outputs: yes"), std::string::npos);
    EXPECT_NE(out.find("seq/s"), std::string::npos);
}

TEST_F(Cli, FlatInterfaceMatchesCliAugment) {
    // Positional ids make the CLI and the flat-array entry point see the same streams.
    Corpus c = generate_synthetic({.n_sequences = 12, .noise_std = 0.01, .seed = 8});
    for (std::size_t i = 0; i < c.size(); ++i) c.sequences[i].meta().id = std::to_string(i);
    write_corpus(path("s.skl"), c);
    ASSERT_EQ(run("learn --corpus " + path("s.skl") + " --out " + path("p.json") + " --n-tr 3 --n-bkg 2"), 0);
    ASSERT_EQ(run("augment --corpus " + path("s.skl") + " --priors " + path("p.json") + " --out " + path("a.skl") +
                  " --m-aug 0.5 --seed 77"),
              0);
    const Corpus cli = read_corpus(path("a.skl"));

    std::vector<float> flat;
    for (const auto& s : c.sequences) flat.insert(flat.end(), s.data().begin(), s.data().end());
    const auto res = augment_flat(flat, c.size(), load_priors(path("p.json")), 0.5, 77);
    std::vector<float> from_cli;
    std::vector<std::size_t> selected;
    for (const auto& s : cli.sequences) {
        if (!s.meta().id.ends_with("#aug")) continue;
        selected.push_back(std::stoul(s.meta().id));
        from_cli.insert(from_cli.end(), s.data().begin(), s.data().end());
    }
    EXPECT_EQ(selected, res.selected);
    ASSERT_EQ(from_cli.size(), res.augmented.size());
    EXPECT_EQ(std::memcmp(from_cli.data(), res.augmented.data(), from_cli.size() * sizeof(float)), 0);
}

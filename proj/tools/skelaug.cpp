// skelaug command-line tool: corpus ingestion, prior learning, augmentation
// and the analysis/inspection outputs.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "skelaug/skelaug.hpp"

namespace fs = std::filesystem;
using namespace skelaug;

namespace {

// Bad flag values; reported with exit code 2 like parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    unsigned threads = 1;
};

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out << text;
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw FormatError("write failed for '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string input;
    std::string out;
    std::size_t length = kDefaultLength;
    bool no_align = false;
};

SequenceMeta meta_from_name(const std::string& stem) {
    // NTU names look like S001C002P003R002A013
    SequenceMeta meta{stem, std::nullopt, std::nullopt};
    static const std::regex action(R"(A(\d{3}))"), person(R"(P(\d{3}))");
    std::smatch m;
    if (std::regex_search(stem, m, action)) meta.label = std::stoi(m[1]) - 1;
    if (std::regex_search(stem, m, person)) meta.subject = m[0];
    return meta;
}

int cmd_ingest(const IngestArgs& a) {
    if (a.length < 2) throw UsageError("--length must be >= 2");
    std::vector<fs::path> files;
    if (fs::is_directory(a.input)) {
        for (const auto& e : fs::directory_iterator(a.input))
            if (e.is_regular_file() && e.path().extension() == ".skeleton") files.push_back(e.path());
        std::ranges::sort(files);
    } else {
        files.emplace_back(a.input);
    }
    if (files.empty()) throw InvalidInput("no .skeleton files under '" + a.input + "'");

    PreprocessSpec pre;
    pre.align_axes = !a.no_align;
    Corpus corpus;
    std::size_t skipped = 0;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw FormatError("cannot open '" + f.string() + "'");
        try {
            const Recording rec = parse_ntu_skeleton(in);
            MotionSequence seq = select_primary_body(rec, meta_from_name(f.stem().string()));
            corpus.sequences.push_back(resize_temporal(preprocess(seq, pre), a.length));
        } catch (const ParseError& e) {
            throw std::runtime_error(f.string() + ": " + e.what());
        } catch (const NoValidBody& e) {
            std::cerr << "skip " << f.string() << ": " << e.what() << "\n";
            ++skipped;
        } catch (const AlignmentDegenerate& e) {
            std::cerr << "skip " << f.string() << ": " << e.what() << "\n";
            ++skipped;
        }
    }
    corpus.validate(a.length);
    write_corpus(a.out, corpus);
    std::cout << "ingested " << corpus.size() << " sequences (" << skipped << " skipped) -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    SyntheticSpec spec;
    std::string shape = "rise_peak_return";
};

int cmd_synth(SynthArgs a, const Globals& g) {
    if (a.shape == "ramp") a.spec.shape = SyntheticShape::ramp;
    else if (a.shape != "rise_peak_return") throw UsageError("unknown shape '" + a.shape + "'");
    if (g.seed) a.spec.seed = *g.seed;
    try {
        a.spec.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    const Corpus corpus = generate_synthetic(a.spec);
    write_corpus(a.out, corpus);
    std::cout << "wrote " << corpus.size() << " synthetic sequences -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- learn

struct ConfigFlags {
    std::optional<std::size_t> T, n_bkg, n_tr;
    std::optional<double> alpha, lambda_t, m_aug, r_lo, r_hi;
    std::optional<std::string> resize_mode;
    bool weighted = false;
};

void add_config_flags(CLI::App* sub, ConfigFlags& f) {
    sub->add_option("--length", f.T, "canonical sequence length T");
    sub->add_option("--alpha", f.alpha, "Beta(alpha, alpha) shape for the infill length");
    sub->add_option("--lambda-t", f.lambda_t, "similarity temperature");
    sub->add_option("--n-bkg", f.n_bkg, "number of boundary poses");
    sub->add_option("--n-tr", f.n_tr, "number of transforms");
    sub->add_option("--m-aug", f.m_aug, "fraction of each batch that is augmented");
    sub->add_option("--r-lo", f.r_lo, "lower resample ratio");
    sub->add_option("--r-hi", f.r_hi, "upper resample ratio");
    sub->add_option("--resize-mode", f.resize_mode, "linear or random_frame");
    sub->add_flag("--weighted-transforms", f.weighted, "draw transforms proportional to cluster size");
}

// defaults < --config file < flags
AugmentConfig resolve_config(const ConfigFlags& f, const Globals& g) {
    AugmentConfig c;
    if (!g.config_path.empty()) merge_config_json(read_json_file(g.config_path), c);
    if (f.T) c.T = *f.T;
    if (f.alpha) c.alpha = *f.alpha;
    if (f.lambda_t) c.lambda_T = *f.lambda_t;
    if (f.n_bkg) c.N_bkg = *f.n_bkg;
    if (f.n_tr) c.N_tr = *f.n_tr;
    if (f.m_aug) c.m_aug = *f.m_aug;
    if (f.r_lo) c.r_lo = *f.r_lo;
    if (f.r_hi) c.r_hi = *f.r_hi;
    if (f.weighted) c.weighted_transforms = true;
    if (g.seed) c.seed = *g.seed;
    try {
        if (f.resize_mode) c.resize_mode = resize_mode_from_string(*f.resize_mode);
        c.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return c;
}

struct LearnArgs {
    std::string corpus, out, corpus_id, timestamp;
    ConfigFlags flags;
};

int cmd_learn(const LearnArgs& a, const Globals& g) {
    const AugmentConfig cfg = resolve_config(a.flags, g);
    const Corpus corpus = read_corpus(a.corpus);
    Provenance prov{a.corpus_id.empty() ? fs::path(a.corpus).stem().string() : a.corpus_id, a.timestamp, kLibraryVersion};
    const PriorSet priors = learn_priors(corpus, cfg, PairSpec{}, prov, g.threads);
    save_priors(a.out, priors);
    std::cout << "poses: " << priors.boundary_poses.size() << " (inertia " << fmt_double(priors.pose_inertia) << ")\n"
              << "transforms: " << priors.transforms.size() << " (inertia " << fmt_double(priors.transform_inertia)
              << ")\n"
              << "wrote " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
    std::string corpus, priors, out;
    std::optional<double> m_aug;
};

int cmd_augment(const AugmentArgs& a, const Globals& g) {
    if (a.m_aug && !(*a.m_aug >= 0.0 && *a.m_aug <= 1.0)) throw UsageError("--m-aug must be in [0, 1]");
    const PriorSet priors = load_priors(a.priors);
    const Corpus corpus = read_corpus(a.corpus);
    const double m_aug = a.m_aug.value_or(priors.config.m_aug);
    const std::uint64_t seed = g.seed.value_or(priors.config.seed);
    const auto aug = augment_batch(corpus.sequences, priors, m_aug, seed, g.threads);

    Corpus out;
    std::size_t n_aug = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out.sequences.push_back(corpus.sequences[i]);
        if (!aug[i]) continue;
        MotionSequence s = *aug[i];
        s.meta().id += "#aug";
        out.sequences.push_back(std::move(s));
        ++n_aug;
    }
    write_corpus(a.out, out, format_for_path(a.corpus));
    std::cout << "augmented " << n_aug << " of " << corpus.size() << " sequences -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string corpus, out;
    bool autoencoder = false;
    TrainConfig train;
};

int cmd_analyze(AnalyzeArgs a, const Globals& g) {
    const Corpus corpus = read_corpus(a.corpus);
    if (g.seed) a.train.seed = *g.seed;
    std::optional<AutoEncoder> model;
    if (a.autoencoder) model = ae_train(corpus, a.train);
    const DiversityCurve curve = diversity_curve(corpus, model ? &*model : nullptr);
    std::string csv = "t,diversity\n";
    for (std::size_t t = 0; t < curve.values.size(); ++t) csv += std::to_string(t) + "," + fmt_double(curve.values[t]) + "\n";
    write_text_atomic(a.out, csv);
    std::cout << "diversity (" << (model ? "latent" : "raw joint") << ") over " << curve.values.size() << " frames -> "
              << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
    std::string priors, out;
};

std::string numbered(const char* prefix, std::size_t i, std::size_t n) {
    const std::size_t width = std::max<std::size_t>(2, std::to_string(n == 0 ? 0 : n - 1).size());
    std::string idx = std::to_string(i);
    return prefix + std::string(width - std::min(width, idx.size()), '0') + idx + ".csv";
}

int cmd_inspect(const InspectArgs& a) {
    const PriorSet priors = load_priors(a.priors);
    fs::create_directories(a.out);
    const std::size_t T = priors.config.T;
    for (std::size_t w = 0; w < priors.transforms.size(); ++w) {
        std::string csv;
        csv.reserve(T * T * 2);
        for (std::size_t i = 0; i < T; ++i) {
            for (std::size_t j = 0; j < T; ++j) {
                csv += priors.transforms[w].indices[i] == j ? '1' : '0';
                csv += j + 1 < T ? ',' : '\n';
            }
        }
        write_text_atomic(fs::path(a.out) / numbered("transform_", w, priors.transforms.size()), csv);
    }
    for (std::size_t p = 0; p < priors.boundary_poses.size(); ++p) {
        const Skeleton& pose = priors.boundary_poses.poses[p];
        std::string csv;
        for (std::size_t j = 0; j < pose.joint_count(); ++j) {
            const Vec3 v = pose.joint(j);
            csv += fmt_double(v.x) + "," + fmt_double(v.y) + "," + fmt_double(v.z) + "\n";
        }
        write_text_atomic(fs::path(a.out) / numbered("pose_", p, priors.boundary_poses.size()), csv);
    }
    std::cout << "wrote " << priors.transforms.size() << " transforms and " << priors.boundary_poses.size()
              << " poses -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string corpus, priors;
    std::size_t iters = 10000;
};

int cmd_bench(const BenchArgs& a, const Globals& g) {
    const PriorSet priors = load_priors(a.priors);
    const Corpus corpus = read_corpus(a.corpus);
    if (corpus.empty()) throw InvalidInput("bench: empty corpus");
    std::vector<MotionSequence> batch;
    batch.reserve(a.iters);
    for (std::size_t i = 0; i < a.iters; ++i) {
        MotionSequence s = corpus.sequences[i % corpus.size()];
        s.meta().id += "/" + std::to_string(i);
        batch.push_back(std::move(s));
    }
    const std::uint64_t seed = g.seed.value_or(priors.config.seed);
    const unsigned threads = g.threads > 1 ? g.threads : std::max(2u, std::thread::hardware_concurrency());

    auto timed = [&](unsigned n) {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = augment_batch(batch, priors, 1.0, seed, n);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::pair{std::move(out), s};
    };
    const auto [single, t1] = timed(1);
    const auto [multi, tn] = timed(threads);
    const bool same = single == multi;
    std::cout << "sequences: " << a.iters << "\n"
              << "1 thread: " << fmt_double(double(a.iters) / t1) << " seq/s\n"
              << threads << " threads: " << fmt_double(double(a.iters) / tn) << " seq/s\n"
              << "identical outputs: " << (same ? "yes" : "no") << "\n";
    return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn complete-action priors from skeleton sequences and augment with them"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    Globals g;
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--config", g.config_path, "JSON config mirroring the augmentation config")->check(CLI::ExistingFile);
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    IngestArgs ingest;
    auto* s_ingest = app.add_subcommand("ingest", "parse NTU .skeleton files into a corpus");
    s_ingest->add_option("--input", ingest.input, ".skeleton file or directory")->required()->check(CLI::ExistingPath);
    s_ingest->add_option("--out", ingest.out, "output corpus (.jsonl or packed)")->required();
    s_ingest->add_option("--length", ingest.length, "resize every sequence to this many frames");
    s_ingest->add_flag("--no-align", ingest.no_align, "skip the spine/shoulder rotation");

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "generate a synthetic rise-peak-return corpus");
    s_synth->add_option("--out", synth.out, "output corpus")->required();
    s_synth->add_option("--n", synth.spec.n_sequences, "number of sequences");
    s_synth->add_option("--length", synth.spec.length, "frames per sequence");
    s_synth->add_option("--joints", synth.spec.joints, "joints per frame");
    s_synth->add_option("--classes", synth.spec.n_classes, "number of peak poses");
    s_synth->add_option("--rest-poses", synth.spec.n_rest_poses, "number of rest poses");
    s_synth->add_option("--amplitude", synth.spec.amplitude, "peak offset scale");
    s_synth->add_option("--noise", synth.spec.noise_std, "per-coordinate Gaussian noise");
    s_synth->add_option("--shape", synth.shape, "rise_peak_return or ramp");

    LearnArgs learn;
    auto* s_learn = app.add_subcommand("learn", "learn boundary poses and transforms");
    s_learn->add_option("--corpus", learn.corpus, "training corpus")->required()->check(CLI::ExistingFile);
    s_learn->add_option("--out", learn.out, "output priors JSON")->required();
    s_learn->add_option("--corpus-id", learn.corpus_id, "provenance corpus id (default: file stem)");
    s_learn->add_option("--timestamp", learn.timestamp, "provenance timestamp (default: empty)");
    add_config_flags(s_learn, learn.flags);

    AugmentArgs augment;
    auto* s_augment = app.add_subcommand("augment", "append augmented copies to a corpus");
    s_augment->add_option("--corpus", augment.corpus, "input corpus")->required()->check(CLI::ExistingFile);
    s_augment->add_option("--priors", augment.priors, "priors JSON")->required()->check(CLI::ExistingFile);
    s_augment->add_option("--out", augment.out, "output corpus")->required();
    s_augment->add_option("--m-aug", augment.m_aug, "fraction augmented (default: from priors)");

    AnalyzeArgs analyze;
    auto* s_analyze = app.add_subcommand("analyze", "per-frame diversity curve as CSV");
    s_analyze->add_option("--corpus", analyze.corpus, "corpus")->required()->check(CLI::ExistingFile);
    s_analyze->add_option("--out", analyze.out, "output CSV")->required();
    s_analyze->add_flag("--autoencoder", analyze.autoencoder, "measure in a trained autoencoder's latent space");
    s_analyze->add_option("--epochs", analyze.train.epochs, "autoencoder epochs");
    s_analyze->add_option("--lr", analyze.train.lr, "autoencoder learning rate");

    InspectArgs inspect;
    auto* s_inspect = app.add_subcommand("inspect", "dump transforms and poses as CSV");
    s_inspect->add_option("--priors", inspect.priors, "priors JSON")->required()->check(CLI::ExistingFile);
    s_inspect->add_option("--out", inspect.out, "output directory")->required();

    BenchArgs bench;
    auto* s_bench = app.add_subcommand("bench", "recover-and-resample throughput");
    s_bench->add_option("--corpus", bench.corpus, "corpus")->required()->check(CLI::ExistingFile);
    s_bench->add_option("--priors", bench.priors, "priors JSON")->required()->check(CLI::ExistingFile);
    s_bench->add_option("--iters", bench.iters, "augmentations per run")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (s_ingest->parsed()) return cmd_ingest(ingest);
        if (s_synth->parsed()) return cmd_synth(synth, g);
        if (s_learn->parsed()) return cmd_learn(learn, g);
        if (s_augment->parsed()) return cmd_augment(augment, g);
        if (s_analyze->parsed()) return cmd_analyze(analyze, g);
        if (s_inspect->parsed()) return cmd_inspect(inspect);
        if (s_bench->parsed()) return cmd_bench(bench, g);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

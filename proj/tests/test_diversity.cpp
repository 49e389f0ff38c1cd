#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace skelaug;

namespace {

void randomize(AutoEncoder& ae, Rng& rng) {
    for (auto& l : ae.layers()) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-1, 1);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = rng.uniform(-0.5, 0.5);
    }
}

Corpus constant_corpus(std::size_t n, std::size_t T, const std::vector<float>& pose) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i)
        c.sequences.push_back(test::make_sequence(T, pose.size() / 3, [&](auto, std::size_t k) { return pose[k]; },
                                                  "c" + std::to_string(i)));
    return c;
}

}  // namespace

TEST(AutoEncoder, ZeroNetworkGivesZero) {
    AutoEncoder ae = AutoEncoder::standard(25);
    EXPECT_EQ(ae.input_dim(), 75u);
    EXPECT_EQ(ae.latent_dim(), 32u);
    const std::vector<double> x(75, 0.7);
    const auto out = ae.forward(x);
    EXPECT_EQ(out.reconstruction.size(), 75);
    EXPECT_EQ(out.reconstruction.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(out.latent.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(ae.forward(std::vector<double>(74)), InvalidInput);
}

TEST(AutoEncoder, HandComputedSmallNetwork) {
    // 3 -> 2 (ReLU, latent) -> 3
    AutoEncoder ae(3, {2, 3}, 0);
    auto& l0 = ae.layers()[0];
    l0.weight << 1, 0, -1,
                 0, 2, 0;
    l0.bias << 0.5, -1;
    auto& l1 = ae.layers()[1];
    l1.weight << 1, 0,
                 0, 1,
                 1, 1;
    l1.bias << 0, 0, -3;
    const std::vector<double> x{1, 2, 3};
    // layer 0: (1 - 3 + 0.5, 4 - 1) = (-1.5, 3) -> ReLU (0, 3)
    const auto out = ae.forward(x);
    EXPECT_EQ(out.latent, Eigen::Vector2d(0, 3));
    EXPECT_EQ(out.reconstruction, Eigen::Vector3d(0, 3, 0));
    Eigen::MatrixXd batch(3, 1);
    batch << 1, 2, 3;
    // diff = (-1, 1, -3): mean square = 11 / 3
    EXPECT_NEAR(ae.loss_and_gradient(batch, nullptr), 11.0 / 3.0, 1e-15);
}

TEST(AutoEncoder, GradientMatchesFiniteDifferences) {
    Rng rng(1);
    AutoEncoder ae(6, {5, 3, 5, 6}, 1);
    randomize(ae, rng);
    Eigen::MatrixXd x(6, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    std::vector<DenseLayer> grads;
    ae.loss_and_gradient(x, &grads);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < ae.layers().size(); ++l) {
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = ae.loss_and_gradient(x, nullptr);
            param = saved - h;
            const double down = ae.loss_and_gradient(x, nullptr);
            param = saved;
            const double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic)));
        };
        auto& layer = ae.layers()[l];
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) check(layer.weight.data()[i], grads[l].weight.data()[i]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias[i], grads[l].bias[i]);
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(AeTrain, RepeatedPoseIsLearned) {
    Rng rng(2);
    std::vector<float> pose(75);
    for (float& v : pose) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    const Corpus c = constant_corpus(40, 64, pose);
    std::vector<double> history;
    const AutoEncoder ae = ae_train(c, {}, &history);
    ASSERT_EQ(history.size(), 30u);
    EXPECT_LT(history.back(), history.front());
    const std::vector<double> x(pose.begin(), pose.end());
    const auto out = ae.forward(x);
    const double mse = (out.reconstruction - Eigen::Map<const Eigen::VectorXd>(x.data(), 75)).squaredNorm() / 75.0;
    EXPECT_LT(mse, 1e-3);
}

TEST(AeTrain, DeterministicAndValidated) {
    const Corpus c = generate_synthetic({.n_sequences = 6, .noise_std = 0.01});
    const TrainConfig cfg{.epochs = 2, .seed = 3};
    const AutoEncoder a = ae_train(c, cfg), b = ae_train(c, cfg);
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
        EXPECT_EQ(a.layers()[l].weight, b.layers()[l].weight);
        EXPECT_EQ(a.layers()[l].bias, b.layers()[l].bias);
    }
    EXPECT_THROW(ae_train(Corpus{}, cfg), InvalidInput);
    EXPECT_THROW(ae_train(c, {.batch_size = 0}), InvalidInput);
}

TEST(Diversity, IdenticalSequencesGiveZero) {
    const Corpus c = constant_corpus(5, 10, std::vector<float>(12, 0.3f));
    for (double v : diversity_curve(c).values) EXPECT_EQ(v, 0.0);
    AutoEncoder ae = AutoEncoder::standard(4);
    ae.initialize(1);
    const auto curve = diversity_curve(c, &ae);
    EXPECT_EQ(curve.space, FeatureSpace::latent);
    for (double v : curve.values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Diversity, HandComputedPair) {
    // Two single-joint sequences; every coordinate is 0 then {0, 2}.
    Corpus c;
    c.sequences.push_back(test::make_sequence(2, 1, [](auto, auto) { return 0.0f; }, "a"));
    c.sequences.push_back(test::make_sequence(2, 1, [](std::size_t t, auto) { return t == 0 ? 0.0f : 2.0f; }, "b"));
    const auto curve = diversity_curve(c);
    EXPECT_EQ(curve.space, FeatureSpace::raw_joint);
    EXPECT_EQ(curve.values, (std::vector<double>{0.0, 1.0}));
}

TEST(Diversity, SyntheticMiddleExceedsStart) {
    const Corpus c = generate_synthetic({.n_sequences = 40, .noise_std = 0.01, .seed = 4});
    const auto raw = diversity_curve(c);
    EXPECT_LT(raw.values[0], raw.values[32]);
    const AutoEncoder ae = ae_train(c, {.epochs = 5, .seed = 4});
    const auto latent = diversity_curve(c, &ae);
    for (double v : latent.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Diversity, TranslationAndPermutationInvariant) {
    Rng rng(5);
    Corpus c;
    for (int i = 0; i < 6; ++i) c.sequences.push_back(test::random_sequence(8, 3, rng, "r" + std::to_string(i)));
    const auto base = diversity_curve(c).values;

    Corpus shifted = c;
    for (auto& s : shifted.sequences)
        for (float& v : s.data()) v += 0.25f;
    const auto moved = diversity_curve(shifted).values;

    Corpus permuted;
    permuted.sequences.assign(c.sequences.rbegin(), c.sequences.rend());
    const auto perm = diversity_curve(permuted).values;
    for (std::size_t t = 0; t < base.size(); ++t) {
        EXPECT_NEAR(moved[t], base[t], 1e-6);
        EXPECT_NEAR(perm[t], base[t], 1e-12);
    }
}

TEST(Diversity, Errors) {
    Corpus one;
    one.sequences.push_back(test::ramp_sequence(4, 2));
    EXPECT_THROW(diversity_curve(one), InvalidInput);
    Corpus ragged = one;
    ragged.sequences.push_back(test::ramp_sequence(5, 2, 0.05, "other"));
    EXPECT_THROW(diversity_curve(ragged), InvalidInput);
}

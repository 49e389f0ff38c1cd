#pragma once

// Per-frame feature diversity of a corpus, in raw joint space or in the
// latent space of a small fully connected autoencoder trained here with
// hand-written backpropagation.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "skelaug/corpus.hpp"
#include "skelaug/random.hpp"

namespace skelaug {

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

class AutoEncoder {
public:
    AutoEncoder() = default;

    // Layers with the given output widths on an `input_dim` input. ReLU follows
    // every layer but the last; the latent is the post-activation output of
    // layer `latent_layer` (0-based).
    AutoEncoder(std::size_t input_dim, const std::vector<std::size_t>& widths, std::size_t latent_layer)
        : input_dim_(input_dim), latent_layer_(latent_layer) {
        if (widths.empty() || latent_layer >= widths.size()) throw InvalidInput("autoencoder: bad layer layout");
        std::size_t in = input_dim;
        for (std::size_t w : widths) {
            layers_.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(in)),
                               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w))});
            in = w;
        }
    }

    // 3J -> 128 -> 64 -> 32 -> 64 -> 128 -> 3J, latent after the third layer.
    static AutoEncoder standard(std::size_t joints) {
        return AutoEncoder(3 * joints, {128, 64, 32, 64, 128, 3 * joints}, 2);
    }

    // He-uniform weights, zero biases.
    void initialize(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& l : layers_) {
            const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.cols()));
            for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-bound, bound);
            l.bias.setZero();
        }
    }

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t latent_dim() const { return static_cast<std::size_t>(layers_[latent_layer_].bias.size()); }
    std::size_t latent_layer() const noexcept { return latent_layer_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    struct Output {
        Eigen::VectorXd reconstruction;
        Eigen::VectorXd latent;
    };

    Output forward(std::span<const double> input) const {
        if (input.size() != input_dim_) {
            throw InvalidInput("autoencoder: input has " + std::to_string(input.size()) + " values, expected " +
                               std::to_string(input_dim_));
        }
        Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
        Output out;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            a = layers_[l].weight * a + layers_[l].bias;
            if (l + 1 < layers_.size()) a = a.cwiseMax(0.0);
            if (l == latent_layer_) out.latent = a;
        }
        out.reconstruction = std::move(a);
        return out;
    }

    // Batch forward keeping every activation; columns are samples.
    std::vector<Eigen::MatrixXd> forward_batch(const Eigen::MatrixXd& x) const {
        std::vector<Eigen::MatrixXd> acts{x};
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Eigen::MatrixXd z = (layers_[l].weight * acts.back()).colwise() + layers_[l].bias;
            if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
            acts.push_back(std::move(z));
        }
        return acts;
    }

    /// Mean squared reconstruction error over every coordinate of the batch
    /// (columns = samples), and its gradient w.r.t. every weight and bias.
    double loss_and_gradient(const Eigen::MatrixXd& x, std::vector<DenseLayer>* grads) const {
        const auto acts = forward_batch(x);
        const Eigen::MatrixXd diff = acts.back() - x;
        const double scale = 1.0 / static_cast<double>(x.size());
        const double loss = diff.squaredNorm() * scale;
        if (grads == nullptr) return loss;

        grads->resize(layers_.size());
        Eigen::MatrixXd delta = 2.0 * scale * diff;  // dL/dz of the last layer
        for (std::size_t l = layers_.size(); l-- > 0;) {
            (*grads)[l].weight = delta * acts[l].transpose();
            (*grads)[l].bias = delta.rowwise().sum();
            if (l == 0) break;
            delta = layers_[l].weight.transpose() * delta;
            delta = delta.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
        return loss;
    }

private:
    std::size_t input_dim_ = 0;
    std::size_t latent_layer_ = 0;
    std::vector<DenseLayer> layers_;
};

struct TrainConfig {
    std::size_t epochs = 30;
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
};

// Every frame of every sequence as a column.
inline Eigen::MatrixXd frames_matrix(const Corpus& corpus) {
    std::size_t n = 0;
    for (const auto& s : corpus.sequences) n += s.length();
    const auto dim = static_cast<Eigen::Index>(corpus.empty() ? 0 : corpus.sequences.front().frame_size());
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(n));
    Eigen::Index col = 0;
    for (const auto& s : corpus.sequences) {
        if (static_cast<Eigen::Index>(s.frame_size()) != dim) throw InvalidInput("autoencoder: mixed joint counts");
        for (std::size_t t = 0; t < s.length(); ++t, ++col) {
            const auto f = s.frame(t);
            for (Eigen::Index d = 0; d < dim; ++d) m(d, col) = f[static_cast<std::size_t>(d)];
        }
    }
    return m;
}

/// Mini-batch SGD with momentum on the mean squared reconstruction error of
/// single frames. `loss_history`, if given, receives the mean epoch loss.
inline AutoEncoder ae_train(const Corpus& corpus, const TrainConfig& cfg, std::vector<double>* loss_history = nullptr) {
    if (corpus.empty()) throw InvalidInput("ae_train: empty corpus");
    if (cfg.batch_size == 0) throw InvalidInput("ae_train: batch_size must be positive");
    const Eigen::MatrixXd data = frames_matrix(corpus);
    const auto n = static_cast<std::size_t>(data.cols());
    if (n == 0) throw InvalidInput("ae_train: corpus has no frames");

    AutoEncoder model = AutoEncoder::standard(corpus.joint_count());
    model.initialize(cfg.seed);
    std::vector<DenseLayer> velocity;
    for (const auto& l : model.layers()) {
        velocity.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    }

    Rng rng(splitmix64(cfg.seed));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<DenseLayer> grads;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            Eigen::MatrixXd batch(data.rows(), static_cast<Eigen::Index>(count));
            for (std::size_t c = 0; c < count; ++c) batch.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(order[start + c]));
            epoch_loss += model.loss_and_gradient(batch, &grads) * static_cast<double>(count);
            for (std::size_t l = 0; l < grads.size(); ++l) {
                velocity[l].weight = cfg.momentum * velocity[l].weight - cfg.lr * grads[l].weight;
                velocity[l].bias = cfg.momentum * velocity[l].bias - cfg.lr * grads[l].bias;
                model.layers()[l].weight += velocity[l].weight;
                model.layers()[l].bias += velocity[l].bias;
            }
        }
        if (loss_history) loss_history->push_back(epoch_loss / static_cast<double>(n));
    }
    return model;
}

enum class FeatureSpace { latent, raw_joint };

struct DiversityCurve {
    std::vector<double> values;
    FeatureSpace space = FeatureSpace::raw_joint;
};

/// Diversity(t) = sqrt( 1/(N*C) * sum_x sum_c (z(x_t)_c - mean_x z(x_t)_c)^2 ).
/// z is the autoencoder latent when `model` is given, the flattened frame
/// otherwise.
inline DiversityCurve diversity_curve(const Corpus& corpus, const AutoEncoder* model = nullptr) {
    if (corpus.size() < 2) throw InvalidInput("diversity_curve: need at least 2 sequences");
    const std::size_t T = corpus.sequences.front().length();
    corpus.validate(T);
    const std::size_t N = corpus.size();

    DiversityCurve curve;
    curve.space = model ? FeatureSpace::latent : FeatureSpace::raw_joint;
    curve.values.resize(T);
    std::vector<std::vector<double>> feats(N);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            const auto f = corpus.sequences[i].frame(t);
            std::vector<double> raw(f.begin(), f.end());
            if (model) {
                const auto z = model->forward(raw).latent;
                feats[i].assign(z.data(), z.data() + z.size());
            } else {
                feats[i] = std::move(raw);
            }
        }
        const std::size_t C = feats.front().size();
        double ss = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < N; ++i) mean += feats[i][c];
            mean /= static_cast<double>(N);
            for (std::size_t i = 0; i < N; ++i) {
                const double d = feats[i][c] - mean;
                ss += d * d;
            }
        }
        curve.values[t] = std::sqrt(ss / static_cast<double>(N * C));
    }
    return curve;
}

}  // namespace skelaug

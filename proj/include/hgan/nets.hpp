// The four networks: generator, discriminator, masked autoregressive density
// model, and the supervised mode classifier used by the evaluation metrics.
//
// All nets are stacks of dense layers over the autodiff tensor type. The
// autoregressive net is a masked fully connected network: binary masks on the
// weights enforce that output column i is a function of input columns < i
// only, so the product of per-dimension conditionals is a normalized density
// by construction.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/data.hpp"
#include "hgan/optim.hpp"
#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

namespace hgan {

inline constexpr double kWeightInitStd = 0.1;  // N(0, 0.01) variance, zero biases

struct DenseLayer {
    Tensor w;  // [in x out]
    Tensor b;  // [1 x out]
};

// Weights drawn row-major from the given stream; biases exactly zero.
inline DenseLayer make_dense_layer(std::size_t in, std::size_t out, Rng& rng) {
    DenseLayer layer;
    layer.w = Tensor::zeros({in, out});
    for (double& v : layer.w.values()) v = rng.normal(0.0, kWeightInitStd);
    layer.b = Tensor::zeros({1, out});
    layer.w.set_requires_grad(true);
    layer.b.set_requires_grad(true);
    return layer;
}

inline Tensor dense(const Tensor& x, const DenseLayer& layer) {
    return add(matmul(x, layer.w), tile_rows(layer.b, x.rows()));
}

inline Tensor dense_masked(const Tensor& x, const DenseLayer& layer, const Tensor& mask) {
    return add(matmul(x, mul(layer.w, mask)), tile_rows(layer.b, x.rows()));
}

inline void collect_params(NetworkParams& out, const std::string& prefix,
                           const std::vector<DenseLayer>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out.push_back({prefix + ".w" + std::to_string(i), layers[i].w});
        out.push_back({prefix + ".b" + std::to_string(i), layers[i].b});
    }
}

// ---------------------------------------------------------------------------
// Generator: z -> x, relu hidden layers, identity or sigmoid output head

struct GeneratorNet {
    std::vector<DenseLayer> layers;
    bool sigmoid_output = false;

    std::size_t input_dim() const { return layers.front().w.rows(); }
    std::size_t output_dim() const { return layers.back().w.cols(); }
    NetworkParams params() const {
        NetworkParams p;
        collect_params(p, "g", layers);
        return p;
    }
};

inline GeneratorNet make_generator(std::size_t dz, std::size_t d,
                                   const std::vector<std::size_t>& hidden, bool sigmoid_output,
                                   std::uint64_t seed) {
    GeneratorNet net;
    net.sigmoid_output = sigmoid_output;
    Rng rng = Rng(seed).stream("init.generator");
    std::size_t in = dz;
    for (std::size_t h : hidden) {
        net.layers.push_back(make_dense_layer(in, h, rng));
        in = h;
    }
    net.layers.push_back(make_dense_layer(in, d, rng));
    return net;
}

inline Tensor generator_forward(const GeneratorNet& net, const Tensor& z) {
    Tensor h = z;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) h = relu(dense(h, net.layers[i]));
    Tensor out = dense(h, net.layers.back());
    return net.sigmoid_output ? sigmoid(out) : out;
}

// ---------------------------------------------------------------------------
// Discriminator: x -> score in (0,1), leaky relu hidden layers

struct DiscriminatorNet {
    std::vector<DenseLayer> layers;
    double slope = 0.2;

    std::size_t input_dim() const { return layers.front().w.rows(); }
    NetworkParams params() const {
        NetworkParams p;
        collect_params(p, "d", layers);
        return p;
    }
};

inline DiscriminatorNet make_discriminator(std::size_t d, const std::vector<std::size_t>& hidden,
                                           std::uint64_t seed) {
    DiscriminatorNet net;
    Rng rng = Rng(seed).stream("init.discriminator");
    std::size_t in = d;
    for (std::size_t h : hidden) {
        net.layers.push_back(make_dense_layer(in, h, rng));
        in = h;
    }
    net.layers.push_back(make_dense_layer(in, 1, rng));
    return net;
}

inline Tensor discriminator_forward(const DiscriminatorNet& net, const Tensor& x) {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
        h = leaky_relu(dense(h, net.layers[i]), net.slope);
    return sigmoid(dense(h, net.layers.back()));
}

// ---------------------------------------------------------------------------
// Masked autoregressive density model over d dimensions in raster order

struct AutoregressiveNet {
    std::vector<DenseLayer> layers;
    std::vector<Tensor> masks;  // one binary mask per layer, shape of its w
    bool bernoulli_head = false;
    double sigma = 0.05;  // fixed conditional std for the continuous head

    std::size_t dim() const { return layers.front().w.rows(); }
    NetworkParams params() const {
        NetworkParams p;
        collect_params(p, "ar", layers);
        return p;
    }
};

// Degree-based mask construction: input k carries degree k+1, hidden units
// cycle through degrees 1..max(d-1, 1), and a weight is kept when it goes
// from lower to equal-or-higher degree (strictly higher into the outputs).
// Output column i then reaches only inputs with degree <= i, i.e. columns
// < i; column 0 is connected to nothing and stays a learned constant.
inline AutoregressiveNet make_autoregressive(std::size_t d,
                                             const std::vector<std::size_t>& hidden,
                                             bool bernoulli_head, std::uint64_t seed,
                                             double sigma = 0.05) {
    if (hidden.empty()) throw std::invalid_argument("ar net: needs at least one hidden layer");
    if (!(sigma > 0.0)) throw std::invalid_argument("ar net: sigma must be positive");
    AutoregressiveNet net;
    net.bernoulli_head = bernoulli_head;
    net.sigma = sigma;
    Rng rng = Rng(seed).stream("init.autoregressive");

    const std::size_t max_deg = std::max<std::size_t>(d - 1, 1);
    std::vector<std::size_t> prev_deg(d);
    for (std::size_t k = 0; k < d; ++k) prev_deg[k] = k + 1;

    std::size_t in = d;
    for (std::size_t hsize : hidden) {
        std::vector<std::size_t> deg(hsize);
        for (std::size_t j = 0; j < hsize; ++j) deg[j] = 1 + (j % max_deg);
        Tensor mask = Tensor::zeros({in, hsize});
        for (std::size_t k = 0; k < in; ++k)
            for (std::size_t j = 0; j < hsize; ++j)
                if (deg[j] >= prev_deg[k]) mask.at(k, j) = 1.0;
        net.layers.push_back(make_dense_layer(in, hsize, rng));
        net.masks.push_back(mask);
        prev_deg = std::move(deg);
        in = hsize;
    }

    Tensor out_mask = Tensor::zeros({in, d});
    for (std::size_t j = 0; j < in; ++j)
        for (std::size_t i = 0; i < d; ++i)
            if (i + 1 > prev_deg[j]) out_mask.at(j, i) = 1.0;
    net.layers.push_back(make_dense_layer(in, d, rng));
    net.masks.push_back(out_mask);
    return net;
}

// Teacher-forced prediction: column i is the Bernoulli probability or the
// Gaussian mean of x_i given the actual x_{<i}.
inline Tensor ar_forward(const AutoregressiveNet& net, const Tensor& x) {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
        h = relu(dense_masked(h, net.layers[i], net.masks[i]));
    Tensor out = dense_masked(h, net.layers.back(), net.masks.back());
    return net.bernoulli_head ? sigmoid(out) : out;
}

// Ancestral sampling; draw order is dimension-major then row, one draw per
// entry, so results are reproducible for a given rng state.
inline Tensor ar_sample(const AutoregressiveNet& net, std::size_t n, Rng& rng) {
    NoTapeGuard guard;
    const std::size_t d = net.dim();
    Tensor x = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < d; ++i) {
        Tensor pred = ar_forward(net, x);
        for (std::size_t r = 0; r < n; ++r)
            x.at(r, i) = net.bernoulli_head ? (rng.bernoulli(pred(r, i)) ? 1.0 : 0.0)
                                            : pred(r, i) + net.sigma * rng.normal();
    }
    return x;
}

inline Tensor ar_sample(const AutoregressiveNet& net, std::size_t n, std::uint64_t seed) {
    Rng rng = Rng(seed).stream("ar.sample");
    return ar_sample(net, n, rng);
}

// Per-sample log density under the model (not differentiable).
inline std::vector<double> ar_log_likelihood(const AutoregressiveNet& net, const Tensor& x) {
    NoTapeGuard guard;
    const std::size_t n = x.rows(), d = x.cols();
    if (!net.bernoulli_head && !all_finite(x))
        throw std::domain_error("ar_log_likelihood: non-finite input");
    Tensor pred = ar_forward(net, x);
    std::vector<double> ll(n, 0.0);
    const double gauss_const = -0.5 * std::log(2.0 * std::numbers::pi * net.sigma * net.sigma);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            if (net.bernoulli_head) {
                double p = std::clamp(pred(r, i), 1e-12, 1.0 - 1e-12);
                ll[r] += x(r, i) != 0.0 ? std::log(p) : std::log(1.0 - p);
            } else {
                double diff = x(r, i) - pred(r, i);
                ll[r] += gauss_const - diff * diff / (2.0 * net.sigma * net.sigma);
            }
        }
    return ll;
}

// Differentiable mean negative log-likelihood for training.
inline Tensor ar_nll(const AutoregressiveNet& net, const Tensor& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Tensor target = Tensor::from(x.values(), x.shape());  // constant copy
    Tensor pred = ar_forward(net, x);
    if (net.bernoulli_head) {
        Tensor ll = add(mul(target, clamped_log(pred)),
                        mul(sub(1.0, target), clamped_log(sub(1.0, pred))));
        return mul(sum(ll), -1.0 / static_cast<double>(n));
    }
    const double gauss_const = 0.5 * std::log(2.0 * std::numbers::pi * net.sigma * net.sigma);
    Tensor diff = sub(target, pred);
    Tensor quad = mul(sum(mul(diff, diff)),
                      1.0 / (2.0 * net.sigma * net.sigma * static_cast<double>(n)));
    return add(quad, static_cast<double>(d) * gauss_const);
}

// ---------------------------------------------------------------------------
// Mode classifier: four dense layers, relu hidden, softmax readout

struct ClassifierNet {
    std::vector<DenseLayer> layers;
    int class_count = 0;

    std::size_t input_dim() const { return layers.front().w.rows(); }
    NetworkParams params() const {
        NetworkParams p;
        collect_params(p, "clf", layers);
        return p;
    }
};

inline ClassifierNet make_classifier(std::size_t d, int classes, std::size_t width,
                                     std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("classifier: needs at least two classes");
    ClassifierNet net;
    net.class_count = classes;
    Rng rng = Rng(seed).stream("init.classifier");
    net.layers.push_back(make_dense_layer(d, width, rng));
    net.layers.push_back(make_dense_layer(width, width, rng));
    net.layers.push_back(make_dense_layer(width, width, rng));
    net.layers.push_back(make_dense_layer(width, static_cast<std::size_t>(classes), rng));
    return net;
}

inline Tensor classifier_logits(const ClassifierNet& net, const Tensor& x) {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) h = relu(dense(h, net.layers[i]));
    return dense(h, net.layers.back());
}

// Penultimate activations, used as the feature embedding for the
// distributional distance between real and generated samples.
inline Tensor classifier_features(const ClassifierNet& net, const Tensor& x) {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) h = relu(dense(h, net.layers[i]));
    return h;
}

inline Tensor classifier_forward(const ClassifierNet& net, const Tensor& x) {
    return softmax_rows(classifier_logits(net, x));
}

inline int classifier_predict_row(const ClassifierNet& net, const Tensor& probs, std::size_t r) {
    int best = 0;
    for (int j = 1; j < net.class_count; ++j)
        if (probs(r, j) > probs(r, best)) best = j;
    return best;
}

inline std::vector<int> classifier_predict(const ClassifierNet& net, const Tensor& x) {
    NoTapeGuard guard;
    Tensor probs = classifier_forward(net, x);
    std::vector<int> preds(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) preds[r] = classifier_predict_row(net, probs, r);
    return preds;
}

inline double classifier_accuracy(const ClassifierNet& net, const Tensor& x,
                                  const std::vector<int>& labels) {
    NoTapeGuard guard;
    Tensor probs = classifier_forward(net, x);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows(); ++r)
        hits += classifier_predict_row(net, probs, r) == labels[r];
    return static_cast<double>(hits) / static_cast<double>(x.rows());
}

struct TrainedClassifier {
    ClassifierNet net;
    double heldout_accuracy = 0.0;
};

// Supervised cross-entropy training with a held-out split for the reported
// accuracy. The batch is shuffled once for the split and re-shuffled each
// epoch for minibatch order.
inline TrainedClassifier classifier_train(const LabeledBatch& data, int classes, int epochs,
                                          std::uint64_t seed, std::size_t width = 64,
                                          std::size_t batch_size = 64, AdamConfig adam_cfg = {},
                                          double heldout_frac = 0.2) {
    const std::size_t n = data.samples.rows();
    if (n < 2) throw std::invalid_argument("classifier_train: needs at least two samples");
    Rng rng = Rng(seed).stream("classifier.train");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    const std::size_t train_n = std::max<std::size_t>(
        1, n - static_cast<std::size_t>(heldout_frac * static_cast<double>(n)));

    TrainedClassifier out;
    out.net = make_classifier(data.samples.cols(), classes, width, seed);
    Adam opt(out.net.params(), adam_cfg);

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_n);
    for (int e = 0; e < epochs; ++e) {
        for (std::size_t i = train_n; i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[rng.uniform_index(i)]);
        for (std::size_t start = 0; start < train_n; start += batch_size) {
            const std::size_t stop = std::min(train_n, start + batch_size);
            Tensor xb = Tensor::zeros({stop - start, data.samples.cols()});
            std::vector<int> yb(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                auto src = data.samples.row(train_idx[i]);
                std::copy(src.begin(), src.end(), xb.data() + (i - start) * xb.cols());
                yb[i - start] = data.labels[train_idx[i]];
            }
            Tape tape;
            Tensor loss = softmax_xent(classifier_logits(out.net, xb), yb);
            opt.zero_grad();
            tape.backward(loss);
            opt.step();
        }
    }

    const std::size_t held_n = n - train_n;
    if (held_n == 0) {
        out.heldout_accuracy = 1.0;
        return out;
    }
    Tensor xh = Tensor::zeros({held_n, data.samples.cols()});
    std::vector<int> yh(held_n);
    for (std::size_t i = 0; i < held_n; ++i) {
        auto src = data.samples.row(order[train_n + i]);
        std::copy(src.begin(), src.end(), xh.data() + i * xh.cols());
        yh[i] = data.labels[order[train_n + i]];
    }
    out.heldout_accuracy = classifier_accuracy(out.net, xh, yh);
    return out;
}

}  // namespace hgan

// Evaluation harness: mode histograms, smoothed KL divergence, Pearson
// chi-square on rescaled counts, covered-mode counting, the classifier-based
// mode score, and a Fréchet distance on classifier features. All metrics
// with an external reference implementation are surrogates computed with a
// small trained classifier, not an Inception network, and are only
// comparable within this codebase.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/data.hpp"
#include "hgan/nets.hpp"
#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

namespace hgan {

struct ModeHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;

    std::size_t bins() const { return counts.size(); }
};

inline ModeHistogram histogram_of_labels(const std::vector<int>& labels, int mode_count) {
    if (labels.empty()) throw std::invalid_argument("histogram: empty sample set");
    ModeHistogram h;
    h.counts.assign(static_cast<std::size_t>(mode_count), 0);
    for (int label : labels) {
        if (label < 0 || label >= mode_count)
            throw std::invalid_argument("histogram: label out of range");
        ++h.counts[static_cast<std::size_t>(label)];
        ++h.total;
    }
    return h;
}

template <class Labeler>
ModeHistogram histogram_of(const Tensor& samples, Labeler&& labeler, int mode_count) {
    if (samples.rows() == 0) throw std::invalid_argument("histogram: empty sample set");
    std::vector<int> labels(samples.rows());
    for (std::size_t i = 0; i < samples.rows(); ++i) labels[i] = labeler(samples.row(i));
    return histogram_of_labels(labels, mode_count);
}

// KL(p || q) with additive smoothing: each probability is
// (count + eps) / (total + bins * eps).
inline double kl_divergence(const ModeHistogram& p, const ModeHistogram& q, double eps = 1e-6) {
    if (p.bins() != q.bins()) throw std::invalid_argument("kl_divergence: bin count mismatch");
    if (p.total <= 0 || q.total <= 0) throw std::invalid_argument("kl_divergence: empty histogram");
    const double c = static_cast<double>(p.bins());
    const double pn = static_cast<double>(p.total) + c * eps;
    const double qn = static_cast<double>(q.total) + c * eps;
    double kl = 0.0;
    for (std::size_t j = 0; j < p.bins(); ++j) {
        const double pj = (static_cast<double>(p.counts[j]) + eps) / pn;
        const double qj = (static_cast<double>(q.counts[j]) + eps) / qn;
        kl += pj * std::log(pj / qj);
    }
    return kl;
}

// Pearson's statistic on counts, with the expected histogram rescaled to the
// observed total so only proportions matter.
inline double chi_square(const ModeHistogram& observed, const ModeHistogram& expected,
                         double eps = 1e-6) {
    if (observed.bins() != expected.bins())
        throw std::invalid_argument("chi_square: bin count mismatch");
    if (observed.total <= 0 || expected.total <= 0)
        throw std::invalid_argument("chi_square: empty histogram");
    const double scale = static_cast<double>(observed.total) / static_cast<double>(expected.total);
    double stat = 0.0;
    for (std::size_t j = 0; j < observed.bins(); ++j) {
        const double e = static_cast<double>(expected.counts[j]) * scale;
        const double diff = static_cast<double>(observed.counts[j]) - e;
        stat += diff * diff / std::max(e, eps);
    }
    return stat;
}

inline std::size_t modes_covered(const ModeHistogram& hist, std::int64_t min_count = 1) {
    if (min_count < 1) throw std::invalid_argument("modes_covered: min_count must be >= 1");
    std::size_t covered = 0;
    for (std::int64_t c : hist.counts) covered += c >= min_count;
    return covered;
}

// exp(E_x[KL(p(y|x) || p(y))]) on a row-stochastic probability matrix;
// p(y) is the column mean. Bounded by [1, C] since the mean KL is the
// mutual information I(x; y) <= log C.
inline double mode_score_from_probs(const Tensor& probs) {
    const std::size_t n = probs.rows(), c = probs.cols();
    if (n == 0) throw std::invalid_argument("mode_score: empty sample set");
    std::vector<double> marginal(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) marginal[j] += probs(i, j);
    for (double& m : marginal) m /= static_cast<double>(n);
    double mean_kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double kl = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double p = probs(i, j);
            if (p > 0.0) kl += p * std::log(p / marginal[j]);
        }
        mean_kl += kl;
    }
    return std::exp(mean_kl / static_cast<double>(n));
}

inline double mode_score(const Tensor& samples, const ClassifierNet& classifier) {
    if (samples.rows() < 100)
        throw std::invalid_argument("mode_score: needs at least 100 samples");
    NoTapeGuard guard;
    return mode_score_from_probs(classifier_forward(classifier, samples));
}

// ---------------------------------------------------------------------------
// Fréchet distance on feature embeddings

namespace detail {

struct EigenSym {
    std::vector<double> values;   // length n
    std::vector<double> vectors;  // n x n row-major; column j is eigenvector j
};

// Cyclic Jacobi for symmetric matrices. Small dimensions only (<= 64).
inline EigenSym jacobi_eigen(std::vector<double> a, std::size_t n, int max_sweeps = 100) {
    EigenSym out;
    out.vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + i] = 1.0;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    scale = std::max(scale, 1e-300);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (std::sqrt(off) <= 1e-14 * scale * static_cast<double>(n)) {
            out.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) out.values[i] = a[i * n + i];
            return out;
        }
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = out.vectors[k * n + p], vkq = out.vectors[k * n + q];
                    out.vectors[k * n + p] = c * vkp - s * vkq;
                    out.vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
    }
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    throw std::runtime_error("frechet: eigensolve did not converge (dim " + std::to_string(n) +
                             ", off-diagonal norm " + std::to_string(std::sqrt(off)) + ")");
}

inline std::vector<double> column_means(const Tensor& x) {
    std::vector<double> mu(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) mu[j] += x(i, j);
    for (double& m : mu) m /= static_cast<double>(x.rows());
    return mu;
}

inline std::vector<double> sample_covariance(const Tensor& x, const std::vector<double>& mu) {
    const std::size_t n = x.rows(), k = x.cols();
    std::vector<double> cov(k * k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a) {
            const double da = x(i, a) - mu[a];
            for (std::size_t b = a; b < k; ++b) cov[a * k + b] += da * (x(i, b) - mu[b]);
        }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            cov[a * k + b] /= static_cast<double>(n - 1);
            cov[b * k + a] = cov[a * k + b];
        }
    return cov;
}

inline std::vector<double> matmul_sq(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t n) {
    std::vector<double> c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
        }
    return c;
}

}  // namespace detail

// ||mu_r - mu_f||^2 + Tr(S_r + S_f - 2 (S_r S_f)^{1/2}), with the trace of
// the matrix square root computed as sum of sqrt(eig) of the symmetrized
// product S_r^{1/2} S_f S_r^{1/2}; negative eigenvalues are clipped at 0.
inline double frechet_distance(const Tensor& real, const Tensor& fake) {
    const std::size_t k = real.cols();
    if (fake.cols() != k) throw std::invalid_argument("frechet: feature dimension mismatch");
    if (k > 64) throw std::invalid_argument("frechet: feature dimension above 64");
    if (real.rows() < k + 1 || fake.rows() < k + 1)
        throw std::invalid_argument("frechet: needs at least dim + 1 samples per side");

    const auto mu_r = detail::column_means(real);
    const auto mu_f = detail::column_means(fake);
    const auto cov_r = detail::sample_covariance(real, mu_r);
    const auto cov_f = detail::sample_covariance(fake, mu_f);

    auto eig_r = detail::jacobi_eigen(cov_r, k);
    std::vector<double> sqrt_r(k * k, 0.0);  // V diag(sqrt(max(l,0))) V^T
    for (std::size_t j = 0; j < k; ++j) {
        const double s = std::sqrt(std::max(eig_r.values[j], 0.0));
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                sqrt_r[a * k + b] += s * eig_r.vectors[a * k + j] * eig_r.vectors[b * k + j];
    }

    auto prod = detail::matmul_sq(detail::matmul_sq(sqrt_r, cov_f, k), sqrt_r, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            const double sym = 0.5 * (prod[a * k + b] + prod[b * k + a]);
            prod[a * k + b] = prod[b * k + a] = sym;
        }
    auto eig_m = detail::jacobi_eigen(prod, k);

    double dist = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double d = mu_r[j] - mu_f[j];
        dist += d * d;
        dist += cov_r[j * k + j] + cov_f[j * k + j];
        dist -= 2.0 * std::sqrt(std::max(eig_m.values[j], 0.0));
    }
    return dist;
}

// ---------------------------------------------------------------------------
// End-to-end evaluation

struct EvalReport {
    double kl = 0.0;
    double chi_square = 0.0;
    std::size_t modes_covered = 0;
    double mode_score = std::numeric_limits<double>::quiet_NaN();
    double frechet = std::numeric_limits<double>::quiet_NaN();
    std::size_t sample_count = 0;
    double classifier_accuracy = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr const char* kEvalCsvHeader =
    "variant,seed,kl,chi2,modes_covered,mode_score,frechet,n,clf_acc";

struct EvalOptions {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    std::int64_t min_count = 1;
    double kl_eps = 1e-6;
    const ClassifierNet* classifier = nullptr;  // enables mode_score/frechet/clf_acc
};

using SampleFn = std::function<Tensor(std::size_t n, std::uint64_t seed)>;

// Draws n generated samples and an equal-size fresh ground-truth set, labels
// both with the dataset's exact oracle, and reports all metrics. Histogram
// metrics are oracle-based; mode_score/frechet/accuracy need the classifier.
inline EvalReport evaluate(const SampleFn& sampler, const Dataset& dataset,
                           const EvalOptions& opts = {}) {
    if (opts.n_samples < 1) throw std::invalid_argument("evaluate: n_samples must be >= 1");
    NoTapeGuard guard;
    Tensor fake = sampler(opts.n_samples, mix64(opts.seed, fnv1a64("eval.fake")));
    LabeledBatch real = dataset.sample(opts.n_samples, mix64(opts.seed, fnv1a64("eval.real")));

    auto oracle = [&](std::span<const double> row) { return dataset.mode_of(row); };
    ModeHistogram fake_hist = histogram_of(fake, oracle, dataset.mode_count());
    ModeHistogram real_hist = histogram_of(real.samples, oracle, dataset.mode_count());

    EvalReport report;
    report.sample_count = opts.n_samples;
    report.kl = kl_divergence(fake_hist, real_hist, opts.kl_eps);
    report.chi_square = chi_square(fake_hist, real_hist);
    report.modes_covered = modes_covered(fake_hist, opts.min_count);

    if (opts.classifier) {
        report.mode_score = mode_score(fake, *opts.classifier);
        report.frechet = frechet_distance(classifier_features(*opts.classifier, real.samples),
                                          classifier_features(*opts.classifier, fake));
        std::vector<int> oracle_labels(real.samples.rows());
        for (std::size_t i = 0; i < real.samples.rows(); ++i)
            oracle_labels[i] = dataset.mode_of(real.samples.row(i));
        report.classifier_accuracy =
            classifier_accuracy(*opts.classifier, real.samples, oracle_labels);
    }
    return report;
}

// Sampler adapters for the three sources we evaluate.
inline SampleFn generator_sampler(const GeneratorNet& g, std::size_t dz) {
    return [&g, dz](std::size_t n, std::uint64_t seed) {
        NoTapeGuard guard;
        Rng rng(seed);
        Tensor z = Tensor::zeros({n, dz});
        for (double& v : z.values()) v = rng.normal();
        return generator_forward(g, z);
    };
}

inline SampleFn dataset_sampler(const Dataset& dataset) {
    return [&dataset](std::size_t n, std::uint64_t seed) { return dataset.sample(n, seed).samples; };
}

inline SampleFn ar_sampler(const AutoregressiveNet& net) {
    return [&net](std::size_t n, std::uint64_t seed) { return ar_sample(net, n, seed); };
}

}  // namespace hgan

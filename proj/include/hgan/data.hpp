// Synthetic multi-modal datasets with analytically known mode identities.
//
// Two families: isotropic Gaussian mixtures in the plane (ring / grid
// layouts) and compositional binary pattern images, where a base glyph is
// drawn independently for each quadrant of a canvas so that K glyphs and Q
// quadrants give K^Q distinct modes. Both expose an exact mode oracle, so
// none of the evaluation metrics depend on a learned classifier being right.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

namespace hgan {

struct LabeledBatch {
    Tensor samples;           // [n x d]
    std::vector<int> labels;  // generating mode index per row
    int mode_count = 0;
};

// ---------------------------------------------------------------------------
// Gaussian mixtures

struct MixtureSpec {
    std::vector<std::vector<double>> centers;
    double stddev = 0.0;
    std::vector<double> weights;

    std::size_t size() const { return centers.size(); }
    std::size_t dim() const { return centers.empty() ? 0 : centers.front().size(); }

    void validate() const {
        if (centers.empty()) throw std::invalid_argument("mixture: needs at least one center");
        if (!(stddev > 0.0)) throw std::invalid_argument("mixture: stddev must be positive");
        if (weights.size() != centers.size())
            throw std::invalid_argument("mixture: weight count mismatch");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("mixture: weights must sum to 1");
        for (std::size_t i = 0; i < centers.size(); ++i) {
            if (centers[i].size() != dim())
                throw std::invalid_argument("mixture: center dimension mismatch");
            for (std::size_t j = i + 1; j < centers.size(); ++j)
                if (centers[i] == centers[j])
                    throw std::invalid_argument("mixture: duplicate centers");
        }
    }
};

// K centers equally spaced on a circle, uniform weights.
inline MixtureSpec ring_mixture(int k, double radius, double stddev) {
    if (k < 1) throw std::invalid_argument("ring_mixture: k must be >= 1");
    MixtureSpec spec;
    spec.stddev = stddev;
    for (int j = 0; j < k; ++j) {
        double a = 2.0 * std::numbers::pi * j / k;
        spec.centers.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    spec.weights.assign(k, 1.0 / k);
    spec.validate();
    return spec;
}

// side x side lattice centered on the origin; center (i, j) has index
// i * side + j and coordinates ((i - (side-1)/2) * spacing, likewise for j).
inline MixtureSpec grid_mixture(int side, double spacing, double stddev) {
    if (side < 1) throw std::invalid_argument("grid_mixture: side must be >= 1");
    MixtureSpec spec;
    spec.stddev = stddev;
    const double off = (side - 1) / 2.0;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            spec.centers.push_back({(i - off) * spacing, (j - off) * spacing});
    spec.weights.assign(spec.centers.size(), 1.0 / spec.centers.size());
    spec.validate();
    return spec;
}

inline LabeledBatch sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
    Rng rng(seed);
    const std::size_t d = spec.dim();
    LabeledBatch batch;
    batch.samples = Tensor::zeros({n, d});
    batch.labels.resize(n);
    batch.mode_count = static_cast<int>(spec.size());
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t idx = 0;
        double cum = 0.0;
        for (; idx + 1 < spec.size(); ++idx) {
            cum += spec.weights[idx];
            if (u < cum) break;
        }
        batch.labels[i] = static_cast<int>(idx);
        for (std::size_t j = 0; j < d; ++j)
            batch.samples.at(i, j) = spec.centers[idx][j] + spec.stddev * rng.normal();
    }
    return batch;
}

inline LabeledBatch sample_ring(int k, double radius, double stddev, std::size_t n,
                                std::uint64_t seed) {
    return sample_mixture(ring_mixture(k, radius, stddev), n, seed);
}

inline LabeledBatch sample_grid(int side, double spacing, double stddev, std::size_t n,
                                std::uint64_t seed) {
    return sample_mixture(grid_mixture(side, spacing, stddev), n, seed);
}

// Nearest center in Euclidean distance; ties go to the lowest index.
inline int true_mode_of(const MixtureSpec& spec, std::span<const double> point) {
    if (point.size() != spec.dim()) throw std::invalid_argument("true_mode_of: dimension mismatch");
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < spec.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < point.size(); ++k) {
            double diff = point[k] - spec.centers[j][k];
            d2 += diff * diff;
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(j);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Compositional pattern images

struct PatternDatasetSpec {
    std::vector<std::vector<double>> base_patterns;  // K binary images, g*g each
    int pattern_size = 0;                            // g
    int quadrant_count = 1;                          // Q in {1, 3}
    double noise_flip_prob = 0.0;

    int k() const { return static_cast<int>(base_patterns.size()); }

    int mode_count() const {
        int m = 1;
        for (int q = 0; q < quadrant_count; ++q) m *= k();
        return m;
    }

    // Q == 1 uses the bare g x g pattern; Q == 3 a 2g x 2g canvas with the
    // bottom-right quadrant blank.
    int canvas_side() const { return quadrant_count == 1 ? pattern_size : 2 * pattern_size; }
    std::size_t canvas_dim() const {
        return static_cast<std::size_t>(canvas_side()) * canvas_side();
    }

    void validate() const {
        if (k() < 2) throw std::invalid_argument("patterns: need at least two base patterns");
        if (quadrant_count != 1 && quadrant_count != 3)
            throw std::invalid_argument("patterns: quadrant_count must be 1 or 3");
        if (noise_flip_prob < 0.0 || noise_flip_prob >= 0.5)
            throw std::invalid_argument("patterns: noise_flip_prob must be in [0, 0.5)");
        const std::size_t px = static_cast<std::size_t>(pattern_size) * pattern_size;
        for (const auto& p : base_patterns) {
            if (p.size() != px) throw std::invalid_argument("patterns: pattern size mismatch");
            for (double v : p)
                if (v != 0.0 && v != 1.0)
                    throw std::invalid_argument("patterns: patterns must be binary");
        }
        for (std::size_t i = 0; i < base_patterns.size(); ++i)
            for (std::size_t j = i + 1; j < base_patterns.size(); ++j)
                if (base_patterns[i] == base_patterns[j])
                    throw std::invalid_argument("patterns: duplicate base patterns");
    }

    // Row/column of the top-left pixel of quadrant q.
    std::pair<int, int> quadrant_origin(int q) const {
        if (quadrant_count == 1) return {0, 0};
        switch (q) {
            case 0: return {0, 0};
            case 1: return {0, pattern_size};
            default: return {pattern_size, 0};
        }
    }
};

// Ten fixed 3x3 glyphs (ring, bar, diagonals, edges, plus, corners),
// pairwise distinct; the first K serve as base patterns.
inline std::vector<std::vector<double>> builtin_patterns(int k) {
    static const std::vector<std::vector<double>> glyphs = {
        {1, 1, 1, 1, 0, 1, 1, 1, 1},  // ring
        {0, 1, 0, 0, 1, 0, 0, 1, 0},  // center column
        {1, 0, 0, 0, 1, 0, 0, 0, 1},  // diagonal
        {0, 0, 1, 0, 1, 0, 1, 0, 0},  // anti-diagonal
        {1, 1, 1, 0, 0, 0, 0, 0, 0},  // top row
        {0, 0, 0, 0, 0, 0, 1, 1, 1},  // bottom row
        {1, 0, 0, 1, 0, 0, 1, 0, 0},  // left column
        {0, 0, 1, 0, 0, 1, 0, 0, 1},  // right column
        {0, 1, 0, 1, 1, 1, 0, 1, 0},  // plus
        {1, 0, 1, 0, 0, 0, 1, 0, 1},  // corners
    };
    if (k < 2 || k > static_cast<int>(glyphs.size()))
        throw std::invalid_argument("builtin_patterns: k must be in [2, 10]");
    return {glyphs.begin(), glyphs.begin() + k};
}

inline PatternDatasetSpec make_pattern_spec(int k, int quadrants, double noise_flip_prob) {
    PatternDatasetSpec spec;
    spec.base_patterns = builtin_patterns(k);
    spec.pattern_size = 3;
    spec.quadrant_count = quadrants;
    spec.noise_flip_prob = noise_flip_prob;
    spec.validate();
    return spec;
}

// Composite label: most significant digit first, base K, one digit per
// quadrant -- indices (3, 1, 4) with K = 10 give label 314.
inline int compose_pattern_label(const PatternDatasetSpec& spec, std::span<const int> indices) {
    int label = 0;
    for (int q = 0; q < spec.quadrant_count; ++q) label = label * spec.k() + indices[q];
    return label;
}

inline LabeledBatch sample_patterns(const PatternDatasetSpec& spec, std::size_t n,
                                    std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_patterns: n must be >= 1");
    Rng rng(seed);
    const int g = spec.pattern_size;
    const int side = spec.canvas_side();
    LabeledBatch batch;
    batch.samples = Tensor::zeros({n, spec.canvas_dim()});
    batch.labels.resize(n);
    batch.mode_count = spec.mode_count();
    std::vector<int> idx(spec.quadrant_count);
    for (std::size_t i = 0; i < n; ++i) {
        for (int q = 0; q < spec.quadrant_count; ++q)
            idx[q] = static_cast<int>(rng.uniform_index(spec.base_patterns.size()));
        batch.labels[i] = compose_pattern_label(spec, idx);
        double* canvas = batch.samples.data() + i * spec.canvas_dim();
        for (int q = 0; q < spec.quadrant_count; ++q) {
            auto [r0, c0] = spec.quadrant_origin(q);
            const auto& pat = spec.base_patterns[idx[q]];
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c)
                    canvas[(r0 + r) * side + (c0 + c)] = pat[r * g + c];
        }
        if (spec.noise_flip_prob > 0.0)
            for (std::size_t p = 0; p < spec.canvas_dim(); ++p)
                if (rng.bernoulli(spec.noise_flip_prob)) canvas[p] = 1.0 - canvas[p];
    }
    return batch;
}

// Exact labeler for canvases (possibly noisy or real-valued): every quadrant
// is matched to its nearest base pattern in squared L2, ties to the lowest
// index, and the per-quadrant indices are recomposed into the mode label.
inline int pattern_mode_of(const PatternDatasetSpec& spec, std::span<const double> canvas) {
    if (canvas.size() != spec.canvas_dim())
        throw std::invalid_argument("pattern_mode_of: canvas dimension mismatch");
    const int g = spec.pattern_size;
    const int side = spec.canvas_side();
    std::vector<int> idx(spec.quadrant_count);
    for (int q = 0; q < spec.quadrant_count; ++q) {
        auto [r0, c0] = spec.quadrant_origin(q);
        int best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int k = 0; k < spec.k(); ++k) {
            const auto& pat = spec.base_patterns[k];
            double d2 = 0.0;
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c) {
                    double diff = canvas[(r0 + r) * side + (c0 + c)] - pat[r * g + c];
                    d2 += diff * diff;
                }
            if (d2 < best_d2) {
                best_d2 = d2;
                best = k;
            }
        }
        idx[q] = best;
    }
    return compose_pattern_label(spec, idx);
}

// ---------------------------------------------------------------------------
// Dataset facade used by training, evaluation and the CLI

enum class DataFamily { ring, grid, patterns };

class Dataset {
public:
    static Dataset ring(int k, double radius, double stddev) {
        Dataset d;
        d.family_ = DataFamily::ring;
        d.mixture_ = ring_mixture(k, radius, stddev);
        return d;
    }
    static Dataset grid(int side, double spacing, double stddev) {
        Dataset d;
        d.family_ = DataFamily::grid;
        d.mixture_ = grid_mixture(side, spacing, stddev);
        return d;
    }
    static Dataset patterns(int k, int quadrants, double noise_flip_prob) {
        Dataset d;
        d.family_ = DataFamily::patterns;
        d.patterns_ = make_pattern_spec(k, quadrants, noise_flip_prob);
        return d;
    }

    DataFamily family() const { return family_; }
    bool binary() const { return family_ == DataFamily::patterns; }

    std::size_t dim() const {
        return binary() ? patterns_.canvas_dim() : mixture_.dim();
    }
    int mode_count() const {
        return binary() ? patterns_.mode_count() : static_cast<int>(mixture_.size());
    }

    LabeledBatch sample(std::size_t n, std::uint64_t seed) const {
        return binary() ? sample_patterns(patterns_, n, seed) : sample_mixture(mixture_, n, seed);
    }

    int mode_of(std::span<const double> x) const {
        return binary() ? pattern_mode_of(patterns_, x) : true_mode_of(mixture_, x);
    }

    const MixtureSpec& mixture() const { return mixture_; }
    const PatternDatasetSpec& pattern_spec() const { return patterns_; }

private:
    DataFamily family_ = DataFamily::ring;
    MixtureSpec mixture_;
    PatternDatasetSpec patterns_;
};

// ---------------------------------------------------------------------------
// Flat binary export: magic "HGD1", then u32 n, d, mode_count
// (little-endian), then n*d float64 row-major, then n u32 labels.

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    os.write(b, 4);
}

inline void put_f64_le(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    os.write(b, 8);
}

inline std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("dataset: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("dataset: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace detail

inline void write_dataset(const std::string& path, const LabeledBatch& batch) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("dataset: cannot open " + path + " for writing");
    os.write("HGD1", 4);
    detail::put_u32_le(os, static_cast<std::uint32_t>(batch.samples.rows()));
    detail::put_u32_le(os, static_cast<std::uint32_t>(batch.samples.cols()));
    detail::put_u32_le(os, static_cast<std::uint32_t>(batch.mode_count));
    for (double v : batch.samples.values()) detail::put_f64_le(os, v);
    for (int label : batch.labels) detail::put_u32_le(os, static_cast<std::uint32_t>(label));
    if (!os) throw std::runtime_error("dataset: write failed on " + path);
}

inline LabeledBatch read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("dataset: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string_view(magic, 4) != "HGD1")
        throw std::runtime_error("dataset: bad magic in " + path);
    const std::uint32_t n = detail::get_u32_le(is);
    const std::uint32_t d = detail::get_u32_le(is);
    LabeledBatch batch;
    batch.mode_count = static_cast<int>(detail::get_u32_le(is));
    batch.samples = Tensor::zeros({n, d});
    for (double& v : batch.samples.values()) v = detail::get_f64_le(is);
    batch.labels.resize(n);
    for (auto& label : batch.labels) label = static_cast<int>(detail::get_u32_le(is));
    return batch;
}

}  // namespace hgan

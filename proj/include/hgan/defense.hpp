// Gradient-based evasion attacks on the classifier (FGSM and PGD in the
// infinity norm) and a generative defense that purifies inputs by projecting
// them onto the generator's range before classification.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/nets.hpp"
#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

namespace hgan {

enum class AttackKind { fgsm, pgd };

inline std::string to_string(AttackKind kind) {
    return kind == AttackKind::fgsm ? "fgsm" : "pgd";
}

inline AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "fgsm") return AttackKind::fgsm;
    if (s == "pgd") return AttackKind::pgd;
    throw std::invalid_argument("unknown attack kind: " + s);
}

struct AttackConfig {
    AttackKind kind = AttackKind::fgsm;
    double epsilon = 0.3;  // infinity-norm budget; inputs live in [0, 1]
    int pgd_steps = 10;
    double pgd_step_size = 0.075;
    bool pgd_random_start = true;

    void validate() const {
        if (epsilon < 0.0) throw std::invalid_argument("attack: epsilon must be >= 0");
        if (pgd_steps < 1) throw std::invalid_argument("attack: pgd_steps must be >= 1");
        if (pgd_step_size <= 0.0) throw std::invalid_argument("attack: pgd_step_size must be > 0");
    }
};

struct DefenseConfig {
    int projection_steps = 200;  // gradient descent iterations per restart
    int restarts = 10;
    double lr = 0.05;
    std::size_t dz = 100;  // generator latent dimension

    void validate() const {
        if (projection_steps < 1) throw std::invalid_argument("defense: projection_steps >= 1");
        if (restarts < 1) throw std::invalid_argument("defense: restarts >= 1");
        if (lr <= 0.0) throw std::invalid_argument("defense: lr must be > 0");
        if (dz < 1) throw std::invalid_argument("defense: dz must be >= 1");
    }
};

namespace detail {

// Gradient of the mean cross-entropy at x, taken with respect to the input.
inline Tensor input_gradient(const ClassifierNet& net, const Tensor& x,
                             const std::vector<int>& labels) {
    Tensor input = Tensor::from(x.values(), x.shape());
    input.set_requires_grad(true);
    Tape tape;
    Tensor loss = softmax_xent(classifier_logits(net, input), labels);
    tape.backward(loss);
    return Tensor::from(input.grad(), x.shape());
}

inline void clip01(Tensor& x) {
    for (double& v : x.values()) v = std::min(std::max(v, 0.0), 1.0);
}

inline double sign_of(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

// x + eps * sign(grad_x CE), clipped to [0, 1].
inline Tensor fgsm_attack(const ClassifierNet& net, const Tensor& x, const std::vector<int>& labels,
                          double epsilon) {
    if (epsilon < 0.0) throw std::invalid_argument("attack: epsilon must be >= 0");
    if (x.rows() != labels.size()) throw std::invalid_argument("fgsm: label count mismatch");
    Tensor grad = detail::input_gradient(net, x, labels);
    Tensor adv = Tensor::from(x.values(), x.shape());
    auto& out = adv.values();
    const auto& g = grad.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += epsilon * detail::sign_of(g[i]);
    detail::clip01(adv);
    return adv;
}

// Iterated sign-gradient ascent projected back into the epsilon-ball around
// the clean input. One step from a zero start with step size epsilon is
// exactly FGSM.
inline Tensor pgd_attack(const ClassifierNet& net, const Tensor& x, const std::vector<int>& labels,
                         const AttackConfig& cfg, std::uint64_t seed = 0) {
    cfg.validate();
    if (x.rows() != labels.size()) throw std::invalid_argument("pgd: label count mismatch");
    Tensor adv = Tensor::from(x.values(), x.shape());
    if (cfg.pgd_random_start) {
        Rng rng = Rng(seed).stream("pgd.start");
        for (double& v : adv.values()) v += rng.uniform(-cfg.epsilon, cfg.epsilon);
        detail::clip01(adv);
    }
    for (int step = 0; step < cfg.pgd_steps; ++step) {
        Tensor grad = detail::input_gradient(net, adv, labels);
        auto& av = adv.values();
        const auto& g = grad.values();
        const auto& xv = x.values();
        for (std::size_t i = 0; i < av.size(); ++i) {
            av[i] += cfg.pgd_step_size * detail::sign_of(g[i]);
            av[i] = std::min(std::max(av[i], xv[i] - cfg.epsilon), xv[i] + cfg.epsilon);
        }
        detail::clip01(adv);
    }
    return adv;
}

inline Tensor run_attack(const ClassifierNet& net, const Tensor& x, const std::vector<int>& labels,
                         const AttackConfig& cfg, std::uint64_t seed = 0) {
    cfg.validate();
    return cfg.kind == AttackKind::fgsm ? fgsm_attack(net, x, labels, cfg.epsilon)
                                        : pgd_attack(net, x, labels, cfg, seed);
}

struct ProjectionResult {
    Tensor z;                      // best latent point per input row
    Tensor purified;               // G(z) for those latents
    std::vector<double> residual;  // squared reconstruction error per row
};

namespace detail {

inline std::vector<double> row_sq_error(const Tensor& recon, const Tensor& target) {
    std::vector<double> err(recon.rows(), 0.0);
    for (std::size_t i = 0; i < recon.rows(); ++i)
        for (std::size_t j = 0; j < recon.cols(); ++j) {
            const double d = recon(i, j) - target(i, j);
            err[i] += d * d;
        }
    return err;
}

}  // namespace detail

// Minimizes ||G(z) - x||^2 over z by plain gradient descent from the given
// starting points (one z row per x row). The objective is the per-row mean
// squared error, so each row's trajectory is independent of how many rows
// are projected together. Returns the final latents.
inline Tensor latent_project_from(const GeneratorNet& g, const Tensor& x, Tensor z, int steps,
                                  double lr) {
    if (steps < 0) throw std::invalid_argument("latent_project: steps must be >= 0");
    z.set_requires_grad(true);
    const double scale = 1.0 / static_cast<double>(x.cols());
    for (int it = 0; it < steps; ++it) {
        z.zero_grad();
        Tape tape;
        Tensor diff = sub(generator_forward(g, z), x);
        Tensor loss = mul(sum(mul(diff, diff)), scale);
        tape.backward(loss);
        auto& zv = z.values();
        const auto& zg = z.grad();
        for (std::size_t i = 0; i < zv.size(); ++i) zv[i] -= lr * zg[i];
    }
    z.set_requires_grad(false);
    return z;
}

// Full purification: R random restarts per input, keeping for each row the
// restart with the smallest reconstruction error. Restarts with a non-finite
// residual are discarded; if every restart fails for some row, throws.
inline ProjectionResult latent_project(const GeneratorNet& g, const Tensor& x,
                                       const DefenseConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::uint64_t base = mix64(seed, fnv1a64("defense.project"));
    ProjectionResult best;
    best.z = Tensor::zeros({x.rows(), cfg.dz});
    best.purified = Tensor::zeros(x.shape());
    best.residual.assign(x.rows(), std::numeric_limits<double>::infinity());
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(mix64(base, static_cast<std::uint64_t>(r)));
        Tensor z0 = Tensor::zeros({x.rows(), cfg.dz});
        for (double& v : z0.values()) v = rng.normal();
        Tensor z = latent_project_from(g, x, std::move(z0), cfg.projection_steps, cfg.lr);
        NoTapeGuard guard;
        Tensor recon = generator_forward(g, z);
        auto err = detail::row_sq_error(recon, x);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (!std::isfinite(err[i]) || err[i] >= best.residual[i]) continue;
            best.residual[i] = err[i];
            for (std::size_t j = 0; j < x.cols(); ++j) best.purified.at(i, j) = recon(i, j);
            for (std::size_t j = 0; j < cfg.dz; ++j) best.z.at(i, j) = z(i, j);
        }
    }
    for (double r : best.residual)
        if (!std::isfinite(r))
            throw std::runtime_error("latent_project: all restarts diverged for some input");
    return best;
}

// Classify after projecting through the generator.
inline std::vector<int> defended_classify(const ClassifierNet& net, const GeneratorNet& g,
                                          const Tensor& x, const DefenseConfig& cfg,
                                          std::uint64_t seed) {
    return classifier_predict(net, latent_project(g, x, cfg, seed).purified);
}

inline double accuracy_of(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size() || preds.empty())
        throw std::invalid_argument("accuracy: size mismatch or empty");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

struct DefenseSweepRow {
    int projection_steps = 0;
    int restarts = 0;
    std::uint64_t seed = 0;
    double clean_accuracy = 0.0;
    double attacked_accuracy = 0.0;
    double defended_accuracy = 0.0;
    AttackKind attack = AttackKind::fgsm;
    double epsilon = 0.0;
};

inline constexpr const char* kDefenseCsvHeader =
    "L,R,seed,clean_acc,attacked_acc,defended_acc,attack,epsilon";

// Grid of (L, R, seed) defense evaluations under a fixed attack. The attack
// and the clean accuracy depend only on the seed, not on the grid point.
inline std::vector<DefenseSweepRow> defense_sweep(
    const ClassifierNet& net, const GeneratorNet& g, const Tensor& x,
    const std::vector<int>& labels, const std::vector<int>& l_grid,
    const std::vector<int>& r_grid, const AttackConfig& attack, const DefenseConfig& base,
    const std::vector<std::uint64_t>& seeds) {
    if (l_grid.empty() || r_grid.empty() || seeds.empty())
        throw std::invalid_argument("defense_sweep: empty grid");
    const double clean = accuracy_of(classifier_predict(net, x), labels);
    std::vector<DefenseSweepRow> rows;
    for (std::uint64_t seed : seeds) {
        Tensor adv = run_attack(net, x, labels, attack, seed);
        const double attacked = accuracy_of(classifier_predict(net, adv), labels);
        for (int l : l_grid)
            for (int r : r_grid) {
                DefenseConfig cfg = base;
                cfg.projection_steps = l;
                cfg.restarts = r;
                DefenseSweepRow row;
                row.projection_steps = l;
                row.restarts = r;
                row.seed = seed;
                row.clean_accuracy = clean;
                row.attacked_accuracy = attacked;
                row.defended_accuracy =
                    accuracy_of(defended_classify(net, g, adv, cfg, seed), labels);
                row.attack = attack.kind;
                row.epsilon = attack.epsilon;
                rows.push_back(row);
            }
    }
    return rows;
}

}  // namespace hgan

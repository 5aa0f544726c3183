// Training loops: the hybrid variant plus the two ablation baselines.
//
// hgan    — D sees two real inputs (the teacher-forced autoregressive output
//           x_xi and the data x) and the generated x_hat as fake, twice; G
//           receives gradient through both fake heads; the AR model trains on
//           its own reconstruction loss. Update order D -> G -> AR, one Adam
//           step each per training step.
// gan     — the plain baseline: x real, x_hat fake, no AR pathway.
// autogan — distillation only: x_xi real, x_hat fake, AR still trained.
//
// Every step draws its data batch and latent noise from seeds derived as
// mix64(stream_seed, step_index), so a run is a pure function of (config,
// seed) and can resume from a checkpoint knowing only the step count.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/data.hpp"
#include "hgan/nets.hpp"
#include "hgan/optim.hpp"
#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"

namespace hgan {

enum class Variant { hgan, gan, autogan };
enum class ArLossKind { l1, nll };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::hgan: return "hgan";
        case Variant::gan: return "gan";
        default: return "autogan";
    }
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "hgan") return Variant::hgan;
    if (s == "gan") return Variant::gan;
    if (s == "autogan") return Variant::autogan;
    throw std::invalid_argument("unknown variant: " + s);
}

inline std::string to_string(ArLossKind k) { return k == ArLossKind::l1 ? "l1" : "nll"; }

inline ArLossKind ar_loss_from_string(const std::string& s) {
    if (s == "l1") return ArLossKind::l1;
    if (s == "nll") return ArLossKind::nll;
    throw std::invalid_argument("unknown ar_loss: " + s);
}

struct NetPlan {
    std::size_t dz = 16;
    std::vector<std::size_t> g_hidden = {128, 128, 128};
    std::vector<std::size_t> d_hidden = {128, 128, 128};
    std::vector<std::size_t> ar_hidden = {128, 128};
    double ar_sigma = 0.05;
};

struct TrainConfig {
    Variant variant = Variant::hgan;
    std::size_t steps = 20000;
    std::size_t batch = 64;
    double learning_rate = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    Dataset dataset = Dataset::ring(8, 2.0, 0.02);
    NetPlan plan;
    ArLossKind ar_loss = ArLossKind::l1;
    bool shared_z = true;
    std::size_t metrics_cadence = 100;

    void validate() const {
        if (steps < 1) throw std::invalid_argument("train config: steps must be >= 1");
        if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("train config: learning_rate must be positive");
        if (metrics_cadence < 1)
            throw std::invalid_argument("train config: metrics_cadence must be >= 1");
    }

    AdamConfig adam() const {
        return {learning_rate, adam_beta1, adam_beta2, adam_eps};
    }
};

// One logged row; heads a variant does not have are NaN sentinels (gan has
// no (x_xi, x_hat) head so sr1/sf1/loss_ar are NaN; autogan has no (x,
// x_hat) head so sr2/sf2 are NaN).
struct StepMetrics {
    std::size_t step = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double loss_ar = 0.0;
    double sr1 = 0.0, sr2 = 0.0, sf1 = 0.0, sf2 = 0.0;
};

inline constexpr const char* kMetricsCsvHeader = "step,loss_d,loss_g,loss_ar,sr1,sr2,sf1,sf2";

// Thrown when a step produces a non-finite loss; message carries the
// diagnostic snapshot.
struct TrainAbortError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Losses (descent forms: minimizing them implements the paper-intended
// directions; score logs are clamped away from {0,1} before the log)

namespace detail {
inline Tensor real_fake_terms(const Tensor& s_real, const Tensor& s_fake) {
    return add(mean(clamped_log(s_real)), mean(clamped_log(sub(1.0, s_fake))));
}
}  // namespace detail

inline Tensor discriminator_loss(const Tensor& sr1, const Tensor& sr2, const Tensor& sf1,
                                 const Tensor& sf2) {
    return neg(add(detail::real_fake_terms(sr1, sf1), detail::real_fake_terms(sr2, sf2)));
}

inline Tensor gan_discriminator_loss(const Tensor& sr2, const Tensor& sf2) {
    return neg(detail::real_fake_terms(sr2, sf2));
}

inline Tensor autogan_discriminator_loss(const Tensor& sr1, const Tensor& sf1) {
    return neg(detail::real_fake_terms(sr1, sf1));
}

inline Tensor generator_loss(const Tensor& sf1, const Tensor& sf2) {
    return neg(add(mean(clamped_log(sf1)), mean(clamped_log(sf2))));
}

inline Tensor gan_generator_loss(const Tensor& sf2) { return neg(mean(clamped_log(sf2))); }

inline Tensor autogan_generator_loss(const Tensor& sf1) { return neg(mean(clamped_log(sf1))); }

// Mean absolute teacher-forced error over batch and dimensions.
inline Tensor ar_l1_loss(const Tensor& x, const Tensor& pred) { return mean(abs(sub(x, pred))); }

inline Tensor ar_train_loss(const AutoregressiveNet& net, const Tensor& x, ArLossKind kind) {
    return kind == ArLossKind::l1 ? ar_l1_loss(x, ar_forward(net, x)) : ar_nll(net, x);
}

// ---------------------------------------------------------------------------
// Trainer

struct HganNets {
    GeneratorNet g;
    DiscriminatorNet d;
    AutoregressiveNet ar;
};

inline HganNets make_nets(const TrainConfig& cfg) {
    const bool binary = cfg.dataset.binary();
    const std::size_t d = cfg.dataset.dim();
    HganNets nets;
    nets.g = make_generator(cfg.plan.dz, d, cfg.plan.g_hidden, binary, cfg.seed);
    nets.d = make_discriminator(d, cfg.plan.d_hidden, cfg.seed);
    nets.ar = make_autoregressive(d, cfg.plan.ar_hidden, binary, cfg.seed, cfg.plan.ar_sigma);
    return nets;
}

class Trainer {
public:
    explicit Trainer(TrainConfig cfg)
        : cfg_(std::move(cfg)),
          nets_(make_nets(cfg_)),
          opt_d_(nets_.d.params(), cfg_.adam()),
          opt_g_(nets_.g.params(), cfg_.adam()),
          opt_ar_(nets_.ar.params(), cfg_.adam()),
          data_seed_(mix64(cfg_.seed, fnv1a64("train.data"))),
          z_seed_(mix64(cfg_.seed, fnv1a64("train.z"))) {
        cfg_.validate();
    }

    const TrainConfig& config() const { return cfg_; }
    HganNets& nets() { return nets_; }
    const HganNets& nets() const { return nets_; }
    std::uint64_t steps_done() const { return step_; }

    Adam& opt_d() { return opt_d_; }
    Adam& opt_g() { return opt_g_; }
    Adam& opt_ar() { return opt_ar_; }
    const Adam& opt_d() const { return opt_d_; }
    const Adam& opt_g() const { return opt_g_; }
    const Adam& opt_ar() const { return opt_ar_; }
    void set_steps_done(std::uint64_t s) { step_ = s; }

    // One full training step (D, then G, then AR where the variant has it).
    // The logged scores and losses come from each update's own pre-update
    // forward pass.
    StepMetrics step() {
        const std::uint64_t n = ++step_;
        constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
        StepMetrics m;
        m.step = n;
        m.loss_ar = kNaN;
        m.sr1 = m.sr2 = m.sf1 = m.sf2 = kNaN;

        LabeledBatch batch = cfg_.dataset.sample(cfg_.batch, mix64(data_seed_, n));
        const Tensor& x = batch.samples;
        Tensor z1 = draw_z(n);
        Tensor z2 = cfg_.shared_z ? z1 : draw_z(mix64(n, fnv1a64("second.draw")));

        const bool has_ar_head = cfg_.variant != Variant::gan;       // (x_xi, x_hat)
        const bool has_data_head = cfg_.variant != Variant::autogan;  // (x, x_hat)

        // -- discriminator update (fakes and teacher outputs detached)
        {
            Tensor x_xi, xh1, xh2;
            {
                NoTapeGuard guard;
                if (has_ar_head) x_xi = ar_forward(nets_.ar, x);
                xh1 = generator_forward(nets_.g, z1);
                xh2 = cfg_.shared_z ? xh1 : generator_forward(nets_.g, z2);
            }
            Tape tape;
            Tensor loss;
            if (cfg_.variant == Variant::hgan) {
                Tensor sr1 = discriminator_forward(nets_.d, x_xi);
                Tensor sr2 = discriminator_forward(nets_.d, x);
                Tensor sf1 = discriminator_forward(nets_.d, xh1);
                // one shared z means sf2 is the same node; the loss counts
                // it twice, which is exactly the shared-z semantics
                Tensor sf2 = cfg_.shared_z ? sf1 : discriminator_forward(nets_.d, xh2);
                loss = discriminator_loss(sr1, sr2, sf1, sf2);
                m.sr1 = score_mean(sr1);
                m.sr2 = score_mean(sr2);
                m.sf1 = score_mean(sf1);
                m.sf2 = score_mean(sf2);
            } else if (cfg_.variant == Variant::gan) {
                Tensor sr2 = discriminator_forward(nets_.d, x);
                Tensor sf2 = discriminator_forward(nets_.d, xh2);
                loss = gan_discriminator_loss(sr2, sf2);
                m.sr2 = score_mean(sr2);
                m.sf2 = score_mean(sf2);
            } else {
                Tensor sr1 = discriminator_forward(nets_.d, x_xi);
                Tensor sf1 = discriminator_forward(nets_.d, xh1);
                loss = autogan_discriminator_loss(sr1, sf1);
                m.sr1 = score_mean(sr1);
                m.sf1 = score_mean(sf1);
            }
            m.loss_d = loss.value();
            opt_d_.zero_grad();
            tape.backward(loss);
            opt_d_.step();
        }

        // -- generator update on a fresh forward through the updated D
        {
            Tape tape;
            Tensor xh1 = generator_forward(nets_.g, z1);
            Tensor xh2 = cfg_.shared_z ? xh1 : generator_forward(nets_.g, z2);
            Tensor loss;
            if (cfg_.variant == Variant::hgan) {
                Tensor sf1 = discriminator_forward(nets_.d, xh1);
                Tensor sf2 = cfg_.shared_z ? sf1 : discriminator_forward(nets_.d, xh2);
                loss = generator_loss(sf1, sf2);
            } else if (cfg_.variant == Variant::gan)
                loss = gan_generator_loss(discriminator_forward(nets_.d, xh2));
            else
                loss = autogan_generator_loss(discriminator_forward(nets_.d, xh1));
            m.loss_g = loss.value();
            opt_g_.zero_grad();
            tape.backward(loss);
            opt_g_.step();
        }

        // -- autoregressive update
        if (has_ar_head) {
            Tape tape;
            Tensor loss = ar_train_loss(nets_.ar, x, cfg_.ar_loss);
            m.loss_ar = loss.value();
            opt_ar_.zero_grad();
            tape.backward(loss);
            opt_ar_.step();
        }

        if (!std::isfinite(m.loss_d) || !std::isfinite(m.loss_g) ||
            (has_ar_head && !std::isfinite(m.loss_ar)))
            throw TrainAbortError("non-finite loss at step " + std::to_string(n) + ": loss_d=" +
                                  std::to_string(m.loss_d) + " loss_g=" + std::to_string(m.loss_g) +
                                  " loss_ar=" + std::to_string(m.loss_ar) +
                                  " sr1=" + std::to_string(m.sr1) + " sr2=" + std::to_string(m.sr2) +
                                  " sf1=" + std::to_string(m.sf1) + " sf2=" + std::to_string(m.sf2));
        return m;
    }

    // Runs through cfg.steps, logging at the cadence plus the first and
    // final steps.
    std::vector<StepMetrics> run() {
        std::vector<StepMetrics> log;
        while (step_ < cfg_.steps) {
            StepMetrics m = step();
            if (m.step == 1 || m.step == cfg_.steps || m.step % cfg_.metrics_cadence == 0)
                log.push_back(m);
        }
        return log;
    }

private:
    Tensor draw_z(std::uint64_t step_index) {
        Rng rng(mix64(z_seed_, step_index));
        Tensor z = Tensor::zeros({cfg_.batch, cfg_.plan.dz});
        for (double& v : z.values()) v = rng.normal();
        return z;
    }

    static double score_mean(const Tensor& s) {
        double total = 0.0;
        for (double v : s.values()) total += v;
        return total / static_cast<double>(s.size());
    }

    TrainConfig cfg_;
    HganNets nets_;
    Adam opt_d_, opt_g_, opt_ar_;
    std::uint64_t data_seed_, z_seed_;
    std::uint64_t step_ = 0;
};

struct TrainResult {
    HganNets nets;
    std::vector<StepMetrics> log;
};

inline TrainResult train(const TrainConfig& cfg) {
    Trainer trainer(cfg);
    TrainResult out;
    out.log = trainer.run();
    out.nets = trainer.nets();  // tensors are shared handles; this is cheap
    return out;
}

}  // namespace hgan

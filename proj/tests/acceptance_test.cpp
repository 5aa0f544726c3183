// Release gate: exercises the eight acceptance criteria end to end and
// prints one [PASS]/[FAIL] line per criterion with the measured numbers.
// Exit status is 0 iff all pass. Heavy runs are shared where criteria
// overlap (the ring study feeds criteria 4 and 6, the pattern study feeds
// criteria 5 and 7), so the whole gate fits a single-core budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hgan/checkpoint.hpp"
#include "hgan/config.hpp"
#include "hgan/data.hpp"
#include "hgan/defense.hpp"
#include "hgan/gradcheck.hpp"
#include "hgan/io.hpp"
#include "hgan/metrics.hpp"
#include "hgan/nets.hpp"
#include "hgan/rng.hpp"
#include "hgan/tensor.hpp"
#include "hgan/train.hpp"

namespace {

using namespace hgan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Criterion {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            Clock::time_point t0) {
    g_results.push_back({id, name, pass, detail});
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " (" << name
              << "): " << detail << "  [" << fmt(seconds_since(t0), 1) << " s]" << std::endl;
}

void progress(const std::string& line) { std::cout << "       " << line << std::endl; }

// ---------------------------------------------------------------------------
// Study configuration. The ring study runs the library defaults untouched
// except for variant and seed; the pattern study pins the coverage recipe
// used by the 512-mode benchmark.

const std::vector<std::uint64_t> kStudySeeds = {1, 2, 3, 4, 5};

TrainConfig ring_config(Variant variant, std::uint64_t seed) {
    TrainConfig cfg;  // defaults: ring-8 (radius 2, std 0.02), 20000 steps
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.metrics_cadence = 2000;
    return cfg;
}

ExperimentConfig pattern_experiment(Variant variant, std::uint64_t seed) {
    ExperimentConfig c;
    c.family = "patterns";
    c.pattern_k = 8;
    c.pattern_quadrants = 3;
    c.variant = to_string(variant);
    c.seed = seed;
    c.d_hidden = {64, 64};
    c.metrics_cadence = 2000;
    return c;
}

// Defense fixture (criterion 7). The classifier is accurate but not sharply
// trained (sharp training kills epsilon-ball attacks), and the defense
// generators are trained just long enough to cover the glyphs crisply —
// an overtrained G saturates its sigmoid head and cannot be inverted by
// gradient projection.
constexpr int kDefenseTestN = 200;
constexpr int kDefenseClfEpochs = 8;
constexpr std::size_t kDefenseClfWidth = 32;
constexpr std::size_t kDefenseClfSamples = 2000;
constexpr std::size_t kDefenseGSteps = 1500;

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness

void criterion_gradients() {
    const auto t0 = Clock::now();
    const auto results = run_gradcheck_battery(0);
    double worst = 0.0;
    std::string worst_name = "-";
    bool all_ok = true;
    for (const auto& r : results) {
        all_ok = all_ok && r.ok();
        if (r.max_err > worst) {
            worst = r.max_err;
            worst_name = r.name;
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = all_ok && elapsed < 120.0;
    report(1, "gradient correctness", pass,
           std::to_string(results.size()) + " checks, worst " + worst_name + " err " +
               fmt(worst, 12),
           t0);
}

// ---------------------------------------------------------------------------
// Criterion 2: autoregressive soundness

void criterion_autoregressive() {
    const auto t0 = Clock::now();
    bool causal_ok = true;
    for (bool binary : {false, true}) {
        AutoregressiveNet net = make_autoregressive(8, {32, 16}, binary, binary ? 11 : 12, 0.05);
        Rng rng(binary ? 21 : 22);
        for (int trial = 0; trial < 20 && causal_ok; ++trial) {
            Tensor x = Tensor::zeros({1, 8});
            for (double& v : x.values()) v = rng.normal();
            NoTapeGuard guard;
            Tensor base = ar_forward(net, x);
            for (std::size_t j = 0; j < 8; ++j) {
                Tensor xp = Tensor::zeros({1, 8});
                for (std::size_t k = 0; k < 8; ++k) xp.values()[k] = x.values()[k];
                xp.values()[j] += 0.7;
                Tensor out = ar_forward(net, xp);
                for (std::size_t k = 0; k <= j; ++k)
                    if (out.values()[k] != base.values()[k]) causal_ok = false;
            }
        }
    }

    AutoregressiveNet net = make_autoregressive(10, {24, 24}, true, 7, 0.05);
    Tensor configs = Tensor::zeros({1024, 10});
    for (std::size_t i = 0; i < 1024; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            configs.values()[i * 10 + j] = static_cast<double>((i >> j) & 1u);
    NoTapeGuard guard;
    double mass = 0.0;
    for (double ll : ar_log_likelihood(net, configs)) mass += std::exp(ll);
    const bool norm_ok = std::abs(mass - 1.0) <= 1e-8;

    const double elapsed = seconds_since(t0);
    const bool pass = causal_ok && norm_ok && elapsed < 60.0;
    report(2, "autoregressive soundness", pass,
           std::string("causality ") + (causal_ok ? "exact" : "VIOLATED") + ", binary mass 1" +
               (mass >= 1.0 ? "+" : "-") + fmt(std::abs(mass - 1.0), 12),
           t0);
}

// ---------------------------------------------------------------------------
// Criterion 3: metric oracles (fixtures frozen from independent brute-force
// reimplementations, including the hand anchors)

ModeHistogram hist_of(const std::vector<std::int64_t>& counts) {
    ModeHistogram h;
    h.counts = counts;
    for (auto c : counts) h.total += c;
    return h;
}

Tensor tensor_of(const std::vector<std::vector<double>>& rows) {
    Tensor t = Tensor::zeros({rows.size(), rows[0].size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[0].size(); ++j) t.values()[i * rows[0].size() + j] = rows[i][j];
    return t;
}

void criterion_metric_oracles() {
    const auto t0 = Clock::now();
    int checked = 0, agreed = 0;
    auto expect = [&](double got, double want) {
        ++checked;
        if (std::abs(got - want) < 1e-9) ++agreed;
    };

    // kl_divergence; the first row is the hand anchor log 2 at vanishing
    // smoothing.
    expect(kl_divergence(hist_of({1, 0}), hist_of({1, 1}), 1e-12), 0.6931471805313145);
    expect(kl_divergence(hist_of({10, 0, 0, 0}), hist_of({5, 5, 0, 0})), 0.6931453301216691);
    expect(kl_divergence(hist_of({1250, 1250, 1250, 1250, 1250, 1250, 1250, 1250}),
                         hist_of({1000, 1500, 1250, 1250, 900, 1600, 1300, 1200})),
           0.015508408090299693);
    expect(kl_divergence(hist_of({3, 7, 90}), hist_of({33, 33, 34})), 0.6956255039698707);
    expect(kl_divergence(hist_of({0, 0, 0, 100}), hist_of({25, 25, 25, 25})), 1.3862937784994909);

    // chi_square; the first row is the hand anchor 25.
    expect(chi_square(hist_of({75, 25}), hist_of({50, 50})), 25.0);
    expect(chi_square(hist_of({75, 25}), hist_of({5000, 5000})), 25.0);
    expect(chi_square(hist_of({10, 20, 30, 40}), hist_of({25, 25, 25, 25})), 20.0);
    expect(chi_square(hist_of({1250, 1250, 1250, 1250, 1250, 1250, 1250, 1250}),
                      hist_of({1000, 1500, 1250, 1250, 900, 1600, 1300, 1200})),
           320.846688034188);
    expect(chi_square(hist_of({7, 13, 20}), hist_of({20, 13, 7})), 32.59285714285714);

    // mode_score on explicit probability rows; anchors 1.0 (uninformative
    // and collapsed) and 4.0 (diverse one-hot).
    expect(mode_score_from_probs(tensor_of(std::vector<std::vector<double>>(
               4, std::vector<double>(4, 0.25)))),
           1.0);
    expect(mode_score_from_probs(
               tensor_of({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}})),
           4.0);
    expect(mode_score_from_probs(tensor_of({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}})), 1.0);
    expect(mode_score_from_probs(tensor_of({{0.7, 0.1, 0.1, 0.1},
                                            {0.1, 0.7, 0.1, 0.1},
                                            {0.25, 0.25, 0.25, 0.25},
                                            {0.4, 0.4, 0.1, 0.1}})),
           1.1807277342025009);
    expect(mode_score_from_probs(
               tensor_of({{0.9, 0.1}, {0.8, 0.2}, {0.1, 0.9}, {0.2, 0.8}, {0.5, 0.5}})),
           1.2514759135954787);

    // frechet_distance; the first row is the 1-D Gaussian hand anchor 1.0
    // (sample mean/variance exactly (0,1) vs (1,1)).
    const double a = std::sqrt(0.5);
    expect(frechet_distance(tensor_of({{a}, {-a}}), tensor_of({{1.0 + a}, {1.0 - a}})), 1.0);
    Tensor shift_r = tensor_of({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}});
    Tensor shift_f = tensor_of({{2, 1}, {3, 1}, {2, 2}, {3, 2}, {2.5, 1.5}});
    expect(frechet_distance(shift_r, shift_f), 5.0);
    expect(frechet_distance(shift_r, shift_r), 0.0);
    expect(frechet_distance(tensor_of({{1, 2}, {2, 4}, {3, 5}, {4, 8}, {5, 9}, {6, 12}}),
                            tensor_of({{1, 1}, {2, 3}, {3, 2}, {4, 5}, {5, 4}, {6, 6}})),
           13.538174017545455);
    expect(frechet_distance(tensor_of({{0.25, -1.50, 0.75},
                                       {1.00, 0.50, -0.25},
                                       {-0.75, 2.00, 1.25},
                                       {0.50, -0.25, -1.00},
                                       {-1.25, 0.75, 0.50},
                                       {2.00, 1.25, -0.50},
                                       {-0.50, -0.75, 2.25},
                                       {0.75, 1.00, 0.00}}),
                            tensor_of({{1.50, 0.25, -0.75},
                                       {-0.25, 1.75, 0.50},
                                       {0.75, -1.25, 1.00},
                                       {2.25, 0.50, 0.25},
                                       {-1.00, 0.75, -0.50},
                                       {0.50, 2.25, 0.75},
                                       {1.25, -0.50, 1.50},
                                       {0.00, 1.00, -1.25}})),
           0.7888538786268942);

    report(3, "metric oracles", checked == agreed,
           std::to_string(agreed) + "/" + std::to_string(checked) + " fixtures within 1e-9", t0);
}

// ---------------------------------------------------------------------------
// Ring study: 15 default-config runs (hgan/gan/autogan x 5 seeds) evaluated
// with one shared classifier. Feeds criteria 4 and 6.

struct RingStudy {
    std::map<std::string, EvalReport> reports;  // key "variant-seed"

    const EvalReport& at(Variant v, std::uint64_t s) const {
        return reports.at(to_string(v) + "-" + std::to_string(s));
    }
};

RingStudy run_ring_study() {
    RingStudy study;
    const Dataset data = Dataset::ring(8, 2.0, 0.02);

    LabeledBatch clf_data = data.sample(20000, mix64(77, fnv1a64("acceptance.ring.clfdata")));
    TrainedClassifier clf = classifier_train(clf_data, data.mode_count(), 30,
                                             mix64(77, fnv1a64("acceptance.ring.classifier")));
    progress("ring classifier heldout accuracy " + fmt(clf.heldout_accuracy, 4));

    for (Variant v : {Variant::hgan, Variant::gan, Variant::autogan}) {
        for (std::uint64_t s : kStudySeeds) {
            const auto t0 = Clock::now();
            Trainer trainer(ring_config(v, s));
            trainer.run();
            EvalOptions opts;
            opts.n_samples = 10000;
            opts.min_count = 20;
            opts.seed = mix64(fnv1a64("acceptance.ring.eval"), mix64(static_cast<std::uint64_t>(v), s));
            opts.classifier = &clf.net;
            EvalReport r = evaluate(generator_sampler(trainer.nets().g, trainer.config().plan.dz),
                                    data, opts);
            study.reports[to_string(v) + "-" + std::to_string(s)] = r;
            progress("ring " + to_string(v) + " seed " + std::to_string(s) + ": modes " +
                     std::to_string(r.modes_covered) + "/8, kl " + fmt(r.kl) + ", mode_score " +
                     fmt(r.mode_score) + " (" + fmt(seconds_since(t0), 0) + " s)");
        }
    }
    return study;
}

void criterion_ring_headline(const RingStudy& study) {
    const auto t0 = Clock::now();
    int full_coverage = 0;
    std::vector<double> kl_h, kl_g;
    for (std::uint64_t s : kStudySeeds) {
        const auto& h = study.at(Variant::hgan, s);
        full_coverage += h.modes_covered == 8;
        kl_h.push_back(h.kl);
        kl_g.push_back(study.at(Variant::gan, s).kl);
    }
    const double med_h = median_of(kl_h), med_g = median_of(kl_g);
    const bool pass = full_coverage >= 3 && med_h <= med_g;
    report(4, "ring-8 mode coverage", pass,
           "8/8 modes in " + std::to_string(full_coverage) + "/5 seeds, median kl hgan " +
               fmt(med_h) + " vs gan " + fmt(med_g),
           t0);
}

// ---------------------------------------------------------------------------
// Criterion 6: distillation ablation. Clause (a): AutoGAN's histogram KL to
// its teacher at the final step is at most half the step-0 value. Clause
// (b): HGAN's ring mode_score beats both ablations in median.

void criterion_ablation(const RingStudy& study) {
    const auto t0 = Clock::now();

    ExperimentConfig c = pattern_experiment(Variant::autogan, 1);
    c.pattern_k = 4;
    const Dataset data = c.dataset();
    Trainer trainer(c.train_config());
    auto teacher_kl = [&]() {
        const std::uint64_t base = fnv1a64("acceptance.distill");
        Tensor g_samples = generator_sampler(trainer.nets().g, c.dz)(10000, mix64(base, 1));
        Tensor ar_samples = ar_sampler(trainer.nets().ar)(10000, mix64(base, 2));
        auto oracle = [&](std::span<const double> row) { return data.mode_of(row); };
        return kl_divergence(histogram_of(g_samples, oracle, data.mode_count()),
                             histogram_of(ar_samples, oracle, data.mode_count()));
    };
    const double kl_start = teacher_kl();
    trainer.run();
    const double kl_end = teacher_kl();
    const bool distill_ok = kl_end <= 0.5 * kl_start;
    progress("autogan teacher kl: step 0 " + fmt(kl_start) + " -> final " + fmt(kl_end));

    std::vector<double> ms_h, ms_g, ms_a;
    for (std::uint64_t s : kStudySeeds) {
        ms_h.push_back(study.at(Variant::hgan, s).mode_score);
        ms_g.push_back(study.at(Variant::gan, s).mode_score);
        ms_a.push_back(study.at(Variant::autogan, s).mode_score);
    }
    const double med_h = median_of(ms_h);
    const double med_best = std::max(median_of(ms_g), median_of(ms_a));
    const bool order_ok = med_h >= med_best;

    report(6, "ablation direction", distill_ok && order_ok,
           "teacher kl " + fmt(kl_start) + "->" + fmt(kl_end) + ", ring mode_score hgan " +
               fmt(med_h) + " vs best ablation " + fmt(med_best),
           t0);
}

// ---------------------------------------------------------------------------
// Pattern study: hgan/gan x 5 seeds on the 512-mode dataset. Feeds criteria
// 5 and 7 (criterion 7 reuses the hgan generators of the first three seeds).

struct PatternStudy {
    std::vector<double> covered_h, covered_g;
};

PatternStudy run_pattern_study() {
    PatternStudy study;
    for (Variant v : {Variant::hgan, Variant::gan}) {
        for (std::uint64_t s : kStudySeeds) {
            const auto t0 = Clock::now();
            ExperimentConfig c = pattern_experiment(v, s);
            Trainer trainer(c.train_config());
            trainer.run();
            EvalOptions opts;
            opts.n_samples = 50000;
            opts.min_count = 1;
            opts.seed = mix64(fnv1a64("acceptance.pattern.eval"),
                              mix64(static_cast<std::uint64_t>(v), s));
            EvalReport r =
                evaluate(generator_sampler(trainer.nets().g, c.dz), c.dataset(), opts);
            (v == Variant::hgan ? study.covered_h : study.covered_g)
                .push_back(static_cast<double>(r.modes_covered));
            progress("patterns " + to_string(v) + " seed " + std::to_string(s) + ": modes " +
                     std::to_string(r.modes_covered) + "/512 (" + fmt(seconds_since(t0), 0) +
                     " s)");
        }
    }
    return study;
}

void criterion_pattern_coverage(const PatternStudy& study) {
    const auto t0 = Clock::now();
    int hit = 0;
    for (double c : study.covered_h) hit += c >= 461.0;  // 90% of 512 rounded up
    const double med_h = median_of(study.covered_h), med_g = median_of(study.covered_g);
    const bool pass = hit >= 3 && med_h >= med_g;
    report(5, "512-mode coverage", pass,
           ">=461/512 in " + std::to_string(hit) + "/5 seeds, median hgan " + fmt(med_h, 0) +
               " vs gan " + fmt(med_g, 0),
           t0);
}

// ---------------------------------------------------------------------------
// Criterion 7: attack and defense direction.

GeneratorNet train_defense_generator(const Dataset& data, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.dataset = data;
    cfg.variant = Variant::hgan;
    cfg.ar_loss = ArLossKind::nll;
    cfg.steps = kDefenseGSteps;
    cfg.seed = seed;
    cfg.plan.dz = 8;
    cfg.plan.g_hidden = {64, 64};
    cfg.plan.d_hidden = {64, 64};
    cfg.plan.ar_hidden = {64, 64};
    Trainer trainer(cfg);
    trainer.run();
    return trainer.nets().g;
}

void criterion_defense() {
    const auto t0 = Clock::now();
    const Dataset data = Dataset::patterns(4, 1, 0.0);

    LabeledBatch clf_data =
        data.sample(kDefenseClfSamples, mix64(88, fnv1a64("acceptance.defense.clfdata")));
    TrainedClassifier clf =
        classifier_train(clf_data, data.mode_count(), kDefenseClfEpochs,
                         mix64(88, fnv1a64("acceptance.defense.classifier")), kDefenseClfWidth);
    progress("defense classifier heldout accuracy " + fmt(clf.heldout_accuracy, 4));

    LabeledBatch test =
        data.sample(kDefenseTestN, mix64(88, fnv1a64("acceptance.defense.testset")));

    // Mechanical identities first: fgsm at epsilon 0 is the identity, and
    // one-step pgd from a zero start is exactly fgsm.
    AttackConfig fgsm_cfg;  // fgsm, epsilon 0.3
    Tensor unmoved = fgsm_attack(clf.net, test.samples, test.labels, 0.0);
    bool identity_ok = true;
    for (std::size_t i = 0; i < unmoved.size(); ++i)
        if (unmoved.values()[i] != test.samples.values()[i]) identity_ok = false;

    AttackConfig one_step = fgsm_cfg;
    one_step.kind = AttackKind::pgd;
    one_step.pgd_steps = 1;
    one_step.pgd_random_start = false;
    one_step.pgd_step_size = one_step.epsilon;
    Tensor via_fgsm = fgsm_attack(clf.net, test.samples, test.labels, fgsm_cfg.epsilon);
    Tensor via_pgd = pgd_attack(clf.net, test.samples, test.labels, one_step, 0);
    bool pgd_ok = via_pgd.size() == via_fgsm.size();
    for (std::size_t i = 0; pgd_ok && i < via_pgd.size(); ++i)
        if (via_pgd.values()[i] != via_fgsm.values()[i]) pgd_ok = false;

    DefenseConfig base;
    base.dz = 8;
    std::vector<double> drops, recovered, def_long, def_short;
    for (std::uint64_t s : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{3}}) {
        GeneratorNet g = train_defense_generator(data, s);
        const auto rows = defense_sweep(clf.net, g, test.samples, test.labels,
                                        {10, 200}, {10}, fgsm_cfg, base, {s});
        const auto& short_row = rows[0];  // L=10
        const auto& long_row = rows[1];   // L=200
        const double drop = short_row.clean_accuracy - short_row.attacked_accuracy;
        drops.push_back(drop);
        recovered.push_back(drop > 0.0
                                ? (long_row.defended_accuracy - long_row.attacked_accuracy) / drop
                                : 1.0);
        def_long.push_back(long_row.defended_accuracy);
        def_short.push_back(short_row.defended_accuracy);
        progress("defense seed " + std::to_string(s) + ": clean " +
                 fmt(short_row.clean_accuracy) + ", attacked " + fmt(short_row.attacked_accuracy) +
                 ", defended L=10 " + fmt(short_row.defended_accuracy) + ", L=200 " +
                 fmt(long_row.defended_accuracy));
    }
    const double med_drop = median_of(drops);
    const double med_rec = median_of(recovered);
    const bool pass = identity_ok && pgd_ok && med_drop >= 0.3 && med_rec >= 0.5 &&
                      median_of(def_long) >= median_of(def_short);
    report(7, "attack/defense direction", pass,
           "median drop " + fmt(med_drop) + ", median recovery " + fmt(med_rec) + ", L200 " +
               fmt(median_of(def_long)) + " vs L10 " + fmt(median_of(def_short)) +
               (identity_ok ? "" : ", eps0 NOT identity") + (pgd_ok ? "" : ", pgd!=fgsm"),
           t0);
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism and persistence.

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    const auto t0 = Clock::now();
    const fs::path dir = fs::temp_directory_path() / "hgan_acceptance";
    fs::create_directories(dir);

    ExperimentConfig c;
    c.family = "ring";
    c.ring_modes = 4;
    c.variant = "hgan";
    c.steps = 250;
    c.batch = 32;
    c.seed = 9;
    c.dz = 4;
    c.g_hidden = {16, 16};
    c.d_hidden = {16};
    c.ar_hidden = {8};
    c.metrics_cadence = 50;
    c.eval_samples = 400;
    c.min_count = 1;

    auto run_once = [&](const fs::path& metrics_path) {
        Trainer trainer(c.train_config());
        auto log = trainer.run();
        write_metrics_csv(metrics_path.string(), log);
        return trainer;
    };
    Trainer first = run_once(dir / "metrics_a.csv");
    run_once(dir / "metrics_b.csv");
    const bool metrics_same = slurp(dir / "metrics_a.csv") == slurp(dir / "metrics_b.csv");

    save_checkpoint((dir / "ck_a.hgck").string(), checkpoint_of(first, c));
    RestoredRun restored = restore_trainer(load_checkpoint((dir / "ck_a.hgck").string()));
    save_checkpoint((dir / "ck_b.hgck").string(), checkpoint_of(restored.trainer, restored.config));
    const bool ck_same = slurp(dir / "ck_a.hgck") == slurp(dir / "ck_b.hgck");

    // Every CSV the tooling emits parses against its declared header.
    EvalOptions opts = c.eval_options();
    EvalReport r = evaluate(generator_sampler(first.nets().g, c.dz), c.dataset(), opts);
    write_eval_csv((dir / "eval.csv").string(), {{c.variant, c.seed, r}});
    Tensor samples = generator_sampler(first.nets().g, c.dz)(8, 123);
    write_samples_csv((dir / "samples.csv").string(), samples);

    ExperimentConfig pc = pattern_experiment(Variant::hgan, 1);
    pc.pattern_k = 4;
    pc.pattern_quadrants = 1;
    const Dataset pdata = pc.dataset();
    LabeledBatch pbatch = pdata.sample(600, 5);
    TrainedClassifier pclf = classifier_train(pbatch, pdata.mode_count(), 4, 6, 16);
    GeneratorNet tiny_g = make_generator(4, pdata.dim(), {16}, true, 8);
    DefenseConfig dcfg;
    dcfg.dz = 4;
    AttackConfig acfg;
    LabeledBatch dtest = pdata.sample(8, 9);
    write_defense_csv((dir / "defense.csv").string(),
                      defense_sweep(pclf.net, tiny_g, dtest.samples, dtest.labels, {2}, {1}, acfg,
                                    dcfg, {1}));

    auto parses = [&](const char* name, const char* header,
                      const std::vector<std::size_t>& text_cols) {
        CsvFile csv = read_csv((dir / name).string());
        std::ostringstream joined;
        for (std::size_t i = 0; i < csv.header.size(); ++i)
            joined << (i ? "," : "") << csv.header[i];
        if (joined.str() != header || csv.rows.empty()) return false;
        for (const auto& row : csv.rows)
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (std::find(text_cols.begin(), text_cols.end(), i) != text_cols.end()) {
                    if (row[i].empty()) return false;
                    continue;
                }
                std::size_t pos = 0;
                try {
                    std::stod(row[i], &pos);
                } catch (const std::exception&) {
                    return false;
                }
                if (pos != row[i].size()) return false;
            }
        return true;
    };
    const bool schema_ok = parses("metrics_a.csv", kMetricsCsvHeader, {}) &&
                           parses("eval.csv", kEvalCsvHeader, {0}) &&
                           parses("samples.csv", "x0,x1", {}) &&
                           parses("defense.csv", kDefenseCsvHeader, {6});

    report(8, "determinism and persistence", metrics_same && ck_same && schema_ok,
           std::string("metrics ") + (metrics_same ? "bitwise-equal" : "DIFFER") + ", checkpoint " +
               (ck_same ? "byte-identical" : "DIFFERS") + ", schemas " +
               (schema_ok ? "parse" : "FAIL"),
           t0);
}

}  // namespace

int main(int argc, char** argv) {
    // Optional filter: `hgan_acceptance --only 4,6` runs a subset.
    std::vector<bool> wanted(9, true);
    if (argc == 3 && std::string(argv[1]) == "--only") {
        wanted.assign(9, false);
        std::istringstream ss(argv[2]);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const int id = std::stoi(tok);
            if (id < 1 || id > 8) {
                std::cerr << "unknown criterion: " << tok << std::endl;
                return 2;
            }
            wanted[static_cast<std::size_t>(id)] = true;
        }
    } else if (argc != 1) {
        std::cerr << "usage: hgan_acceptance [--only 1,2,...]" << std::endl;
        return 2;
    }

    int selected = 0;
    for (int id = 1; id <= 8; ++id) selected += wanted[static_cast<std::size_t>(id)];
    std::cout << "acceptance gate: " << selected << " criteria" << std::endl;
    const auto t_all = Clock::now();

    if (wanted[1]) criterion_gradients();
    if (wanted[2]) criterion_autoregressive();
    if (wanted[3]) criterion_metric_oracles();
    if (wanted[8]) criterion_determinism();

    if (wanted[4] || wanted[6]) {
        RingStudy ring = run_ring_study();
        if (wanted[4]) criterion_ring_headline(ring);
        if (wanted[6]) criterion_ablation(ring);
    }
    if (wanted[5]) criterion_pattern_coverage(run_pattern_study());
    if (wanted[7]) criterion_defense();

    std::sort(g_results.begin(), g_results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int passed = 0;
    for (const auto& r : g_results) passed += r.pass;
    std::cout << "acceptance: " << passed << "/" << g_results.size() << " criteria passed  ["
              << fmt(seconds_since(t_all), 0) << " s total]" << std::endl;
    return passed == static_cast<int>(g_results.size()) ? 0 : 1;
}

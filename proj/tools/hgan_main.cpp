// hgan: experiment runner tying the library together.
//
//   hgan train    --config PATH [--seed N] [--out DIR]
//   hgan eval     --ckpt PATH [--config PATH] [--seed N] [--out DIR]
//   hgan sample   --ckpt PATH [--n N] [--seed N] [--out DIR]
//   hgan compare  --config PATH [--variants a,b] [--seeds 1,2] [--out DIR]
//   hgan defend   --config PATH [--ckpt PATH] [--seed N] [--out DIR]
//   hgan gradcheck [--seed N]
//
// Exit codes: 0 success, 2 config error, 3 runtime abort, 4 bad checkpoint.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hgan/checkpoint.hpp"
#include "hgan/defense.hpp"
#include "hgan/gradcheck.hpp"
#include "hgan/io.hpp"
#include "hgan/metrics.hpp"

namespace {

using namespace hgan;

struct Args {
    std::string cmd;
    std::map<std::string, std::string> flags;

    bool has(const std::string& k) const { return flags.count(k) != 0; }

    const std::string& get(const std::string& k) const {
        auto it = flags.find(k);
        if (it == flags.end()) throw ConfigError("missing required flag: --" + k);
        return it->second;
    }
};

const char* kUsage =
    "usage: hgan <train|eval|sample|compare|defend|gradcheck> [flags]\n"
    "  --config PATH   experiment config file\n"
    "  --ckpt PATH     checkpoint file (eval/sample; optional for defend)\n"
    "  --seed N        override the config seed\n"
    "  --out DIR       output directory (default .)\n"
    "  --n N           sample count (sample; default 64)\n"
    "  --variants A,B  compare variants (default hgan,gan,autogan)\n"
    "  --seeds A,B     compare seeds (default config seed)\n";

Args parse_args(int argc, char** argv) {
    if (argc < 2) throw ConfigError(kUsage);
    Args args;
    args.cmd = argv[1];
    const std::vector<std::string> known = {"config", "ckpt", "seed", "out",
                                            "n",      "variants", "seeds"};
    for (int i = 2; i < argc; ++i) {
        std::string flag = argv[i];
        if (flag.rfind("--", 0) != 0) throw ConfigError("unexpected argument: " + flag);
        flag = flag.substr(2);
        if (std::find(known.begin(), known.end(), flag) == known.end())
            throw ConfigError("unknown flag: --" + flag);
        if (i + 1 >= argc) throw ConfigError("flag --" + flag + " needs a value");
        args.flags[flag] = argv[++i];
    }
    return args;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(what + ": not a non-negative integer: " + text);
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text) {
        if (c == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            item += c;
        }
    }
    if (!item.empty()) out.push_back(item);
    if (out.empty()) throw ConfigError("empty list: " + text);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

ExperimentConfig load_experiment(const Args& args) {
    ExperimentConfig cfg = parse_config(slurp(args.get("config")));
    if (args.has("seed")) cfg.seed = parse_u64(args.get("seed"), "--seed");
    cfg.validate();
    return cfg;
}

std::filesystem::path out_dir(const Args& args) {
    std::filesystem::path dir = args.has("out") ? args.get("out") : ".";
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path make_run_dir(const Args& args, const ExperimentConfig& cfg) {
    std::time_t now = std::time(nullptr);
    std::tm tm = *std::localtime(&now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    std::filesystem::path dir =
        out_dir(args) / (cfg.variant + "-" + std::to_string(cfg.seed) + "-" + stamp);
    // Concurrent launches in the same second get distinct suffixed names.
    std::filesystem::path unique = dir;
    for (int i = 1; std::filesystem::exists(unique); ++i)
        unique = dir.string() + "-" + std::to_string(i);
    std::filesystem::create_directories(unique);
    return unique;
}

TrainedClassifier eval_classifier(const ExperimentConfig& cfg, const Dataset& data,
                                  std::uint64_t seed) {
    LabeledBatch batch = data.sample(cfg.classifier_samples, mix64(seed, fnv1a64("eval.clfdata")));
    return classifier_train(batch, data.mode_count(), cfg.classifier_epochs,
                            mix64(seed, fnv1a64("eval.classifier")), cfg.classifier_width);
}

EvalReport eval_generator(const ExperimentConfig& cfg, const Dataset& data,
                          const GeneratorNet& g, const ClassifierNet& clf, std::uint64_t seed) {
    EvalOptions opts = cfg.eval_options();
    opts.seed = seed;
    opts.classifier = &clf;
    return evaluate(generator_sampler(g, cfg.dz), data, opts);
}

void print_eval_row(const EvalCsvRow& row) {
    std::printf("%s seed=%llu kl=%.6g chi2=%.6g modes=%zu mode_score=%.6g frechet=%.6g "
                "clf_acc=%.4f\n",
                row.variant.c_str(), static_cast<unsigned long long>(row.seed), row.report.kl,
                row.report.chi_square, row.report.modes_covered, row.report.mode_score,
                row.report.frechet, row.report.classifier_accuracy);
}

int cmd_train(const Args& args) {
    ExperimentConfig cfg = load_experiment(args);
    Trainer trainer(cfg.train_config());
    std::vector<StepMetrics> log = trainer.run();
    std::filesystem::path dir = make_run_dir(args, cfg);
    {
        std::ofstream out = detail::open_out((dir / "config.ini").string());
        out << serialize_config(cfg);
    }
    write_metrics_csv((dir / "metrics.csv").string(), log);
    save_checkpoint((dir / "checkpoint.hgck").string(), checkpoint_of(trainer, cfg));
    const StepMetrics& last = log.back();
    std::printf("wrote %s\n", dir.string().c_str());
    std::printf("step=%zu loss_d=%.6g loss_g=%.6g loss_ar=%.6g\n", last.step, last.loss_d,
                last.loss_g, last.loss_ar);
    return 0;
}

int cmd_eval(const Args& args) {
    RestoredRun run = restore_trainer(load_checkpoint(args.get("ckpt")));
    ExperimentConfig cfg = run.config;
    if (args.has("config")) {
        ExperimentConfig given = parse_config(slurp(args.get("config")));
        given.validate();
        if (given.dataset().dim() != run.config.dataset().dim())
            throw CheckpointError("eval: config dataset dimension disagrees with checkpoint");
        cfg = given;
        cfg.variant = run.config.variant;
    }
    if (args.has("seed")) cfg.seed = parse_u64(args.get("seed"), "--seed");

    Dataset data = cfg.dataset();
    TrainedClassifier clf = eval_classifier(cfg, data, cfg.seed);
    EvalCsvRow row{cfg.variant, cfg.seed,
                   eval_generator(cfg, data, run.trainer.nets().g, clf.net, cfg.seed)};
    write_eval_csv((out_dir(args) / "eval.csv").string(), {row});
    print_eval_row(row);
    return 0;
}

int cmd_sample(const Args& args) {
    RestoredRun run = restore_trainer(load_checkpoint(args.get("ckpt")));
    const ExperimentConfig& cfg = run.config;
    const std::size_t n = args.has("n") ? parse_u64(args.get("n"), "--n") : 64;
    const std::uint64_t seed = args.has("seed") ? parse_u64(args.get("seed"), "--seed") : cfg.seed;
    const std::size_t dim = cfg.dataset().dim();
    std::filesystem::path dir = out_dir(args);

    Tensor samples = Tensor::zeros({1, 1});
    if (n > 0)
        samples = generator_sampler(run.trainer.nets().g, cfg.dz)(n, mix64(seed, fnv1a64("cli.sample")));
    write_samples_csv((dir / "samples.csv").string(), dim, n > 0 ? &samples : nullptr);
    std::printf("wrote %s (n=%zu)\n", (dir / "samples.csv").string().c_str(), n);

    if (cfg.family == "patterns") {
        const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(dim))));
        std::string pgm = (dir / "samples.pgm").string();
        if (n > 0)
            write_pgm_grid(pgm, samples, side);
        else
            write_empty_pgm(pgm);
        std::printf("wrote %s\n", pgm.c_str());
    }
    return 0;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_compare(const Args& args) {
    ExperimentConfig base = load_experiment(args);
    std::vector<std::string> variants = args.has("variants")
                                            ? split_list(args.get("variants"))
                                            : std::vector<std::string>{"hgan", "gan", "autogan"};
    for (const std::string& v : variants) variant_from_string(v);  // validate early
    std::vector<std::uint64_t> seeds;
    if (args.has("seeds"))
        for (const std::string& s : split_list(args.get("seeds")))
            seeds.push_back(parse_u64(s, "--seeds"));
    else
        seeds.push_back(base.seed);

    Dataset data = base.dataset();
    std::map<std::uint64_t, TrainedClassifier> classifiers;  // shared across variants
    for (std::uint64_t s : seeds) classifiers.emplace(s, eval_classifier(base, data, s));

    std::vector<EvalCsvRow> rows;
    for (const std::string& variant : variants) {
        for (std::uint64_t seed : seeds) {
            ExperimentConfig cfg = base;
            cfg.variant = variant;
            cfg.seed = seed;
            Trainer trainer(cfg.train_config());
            trainer.run();
            rows.push_back({variant, seed,
                            eval_generator(cfg, data, trainer.nets().g,
                                           classifiers.at(seed).net, seed)});
            print_eval_row(rows.back());
        }
    }

    std::filesystem::path dir = out_dir(args);
    write_eval_csv((dir / "eval.csv").string(), rows);

    std::ofstream agg = detail::open_out((dir / "compare.csv").string());
    agg << "variant,metric,median,min,max\n";
    const std::vector<std::string> names = {"kl",         "chi2",    "modes_covered",
                                            "mode_score", "frechet", "clf_acc"};
    for (const std::string& variant : variants) {
        std::map<std::string, std::vector<double>> cols;
        for (const EvalCsvRow& row : rows) {
            if (row.variant != variant) continue;
            cols["kl"].push_back(row.report.kl);
            cols["chi2"].push_back(row.report.chi_square);
            cols["modes_covered"].push_back(static_cast<double>(row.report.modes_covered));
            cols["mode_score"].push_back(row.report.mode_score);
            cols["frechet"].push_back(row.report.frechet);
            cols["clf_acc"].push_back(row.report.classifier_accuracy);
        }
        for (const std::string& name : names) {
            const std::vector<double>& v = cols[name];
            const double med = median_of(v);
            const double lo = *std::min_element(v.begin(), v.end());
            const double hi = *std::max_element(v.begin(), v.end());
            agg << variant << ',' << name << ',' << detail::csv_num(med) << ','
                << detail::csv_num(lo) << ',' << detail::csv_num(hi) << '\n';
            std::printf("%s %s median=%.6g min=%.6g max=%.6g\n", variant.c_str(), name.c_str(),
                        med, lo, hi);
        }
    }
    if (!agg) throw std::runtime_error("compare: write failed");
    return 0;
}

int cmd_defend(const Args& args) {
    ExperimentConfig cfg = load_experiment(args);
    Dataset data = cfg.dataset();

    GeneratorNet g;
    if (args.has("ckpt")) {
        RestoredRun run = restore_trainer(load_checkpoint(args.get("ckpt")));
        if (run.config.dataset().dim() != data.dim())
            throw CheckpointError("defend: checkpoint dataset dimension disagrees with config");
        g = run.trainer.nets().g;
    } else {
        Trainer trainer(cfg.train_config());
        trainer.run();
        g = trainer.nets().g;
    }

    LabeledBatch clf_data =
        data.sample(cfg.classifier_samples, mix64(cfg.seed, fnv1a64("defense.clfdata")));
    TrainedClassifier clf =
        classifier_train(clf_data, data.mode_count(), cfg.classifier_epochs,
                         mix64(cfg.seed, fnv1a64("defense.classifier")), cfg.classifier_width);
    LabeledBatch test =
        data.sample(cfg.defense_samples, mix64(cfg.seed, fnv1a64("defense.testset")));

    std::vector<DefenseSweepRow> rows =
        defense_sweep(clf.net, g, test.samples, test.labels, cfg.l_grid, cfg.r_grid,
                      cfg.attack_config(), cfg.defense_config(), cfg.defense_seeds);
    write_defense_csv((out_dir(args) / "defense.csv").string(), rows);
    for (const DefenseSweepRow& row : rows)
        std::printf("L=%d R=%d seed=%llu clean=%.4f attacked=%.4f defended=%.4f\n",
                    row.projection_steps, row.restarts,
                    static_cast<unsigned long long>(row.seed), row.clean_accuracy,
                    row.attacked_accuracy, row.defended_accuracy);
    return 0;
}

int cmd_gradcheck(const Args& args) {
    const std::uint64_t seed = args.has("seed") ? parse_u64(args.get("seed"), "--seed") : 0;
    std::vector<GradCheckResult> results = run_gradcheck_battery(seed);
    std::size_t ok = 0;
    for (const GradCheckResult& r : results) {
        std::printf("%-28s %12.3e  %s\n", r.name.c_str(), r.max_err, r.ok() ? "PASS" : "FAIL");
        ok += r.ok() ? 1 : 0;
    }
    std::printf("gradcheck: %zu/%zu ok\n", ok, results.size());
    return ok == results.size() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        Args args = parse_args(argc, argv);
        if (args.cmd == "train") return cmd_train(args);
        if (args.cmd == "eval") return cmd_eval(args);
        if (args.cmd == "sample") return cmd_sample(args);
        if (args.cmd == "compare") return cmd_compare(args);
        if (args.cmd == "defend") return cmd_defend(args);
        if (args.cmd == "gradcheck") return cmd_gradcheck(args);
        throw ConfigError("unknown subcommand: " + args.cmd + "\n" + kUsage);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const CheckpointError& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return 4;
    } catch (const TrainAbortError& e) {
        std::fprintf(stderr, "training aborted: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

// Experiment configuration: a five-section `key = value` text format with
// documented defaults, strict unknown-key rejection, and line-precise error
// messages. parse(serialize(c)) == c exactly (doubles print with %.17g).

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hgan/data.hpp"
#include "hgan/defense.hpp"
#include "hgan/metrics.hpp"
#include "hgan/train.hpp"

namespace hgan {

// Config-file problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // [dataset]
    std::string family = "ring";  // ring | grid | patterns
    int ring_modes = 8;
    double ring_radius = 2.0;
    double ring_std = 0.02;
    int grid_side = 5;
    double grid_spacing = 2.0;
    double grid_std = 0.05;
    int pattern_k = 8;
    int pattern_quadrants = 3;
    double pattern_noise = 0.0;

    // [model]
    std::size_t dz = 16;
    std::vector<std::size_t> g_hidden = {128, 128, 128};
    std::vector<std::size_t> d_hidden = {128, 128, 128};
    std::vector<std::size_t> ar_hidden = {128, 128};
    double ar_sigma = 0.05;

    // [train]
    std::string variant;  // required: hgan | gan | autogan
    std::size_t steps = 20000;
    std::size_t batch = 64;
    double lr = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    std::string ar_loss = "l1";
    bool shared_z = true;
    std::size_t metrics_cadence = 100;

    // [eval]
    std::size_t eval_samples = 10000;
    std::int64_t min_count = 1;
    double kl_eps = 1e-6;
    std::size_t classifier_samples = 20000;
    std::size_t classifier_width = 64;
    int classifier_epochs = 30;

    // [defense]
    std::string attack = "fgsm";
    double epsilon = 0.3;
    int pgd_steps = 10;
    double pgd_step_size = 0.075;
    bool pgd_random_start = true;
    int projection_steps = 200;
    int restarts = 10;
    double projection_lr = 0.05;
    std::vector<int> l_grid = {10, 200};
    std::vector<int> r_grid = {10};
    std::vector<std::uint64_t> defense_seeds = {1, 2, 3};
    std::size_t defense_samples = 200;

    bool operator==(const ExperimentConfig&) const = default;

    Dataset dataset() const {
        if (family == "ring") return Dataset::ring(ring_modes, ring_radius, ring_std);
        if (family == "grid") return Dataset::grid(grid_side, grid_spacing, grid_std);
        if (family == "patterns")
            return Dataset::patterns(pattern_k, pattern_quadrants, pattern_noise);
        throw ConfigError("unknown dataset family: " + family);
    }

    TrainConfig train_config() const {
        TrainConfig cfg;
        cfg.variant = variant_from_string(variant);
        cfg.steps = steps;
        cfg.batch = batch;
        cfg.learning_rate = lr;
        cfg.adam_beta1 = beta1;
        cfg.adam_beta2 = beta2;
        cfg.adam_eps = adam_eps;
        cfg.seed = seed;
        cfg.dataset = dataset();
        cfg.plan = {dz, g_hidden, d_hidden, ar_hidden, ar_sigma};
        cfg.ar_loss = ar_loss_from_string(ar_loss);
        cfg.shared_z = shared_z;
        cfg.metrics_cadence = metrics_cadence;
        return cfg;
    }

    EvalOptions eval_options() const {
        EvalOptions opts;
        opts.n_samples = eval_samples;
        opts.seed = seed;
        opts.min_count = min_count;
        opts.kl_eps = kl_eps;
        return opts;
    }

    AttackConfig attack_config() const {
        AttackConfig cfg;
        cfg.kind = attack_kind_from_string(attack);
        cfg.epsilon = epsilon;
        cfg.pgd_steps = pgd_steps;
        cfg.pgd_step_size = pgd_step_size;
        cfg.pgd_random_start = pgd_random_start;
        return cfg;
    }

    DefenseConfig defense_config() const {
        DefenseConfig cfg;
        cfg.projection_steps = projection_steps;
        cfg.restarts = restarts;
        cfg.lr = projection_lr;
        cfg.dz = dz;
        return cfg;
    }

    void validate() const {
        try {
            train_config().validate();  // constructs the dataset, which validates its spec
            attack_config().validate();
            defense_config().validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (l_grid.empty() || r_grid.empty() || defense_seeds.empty())
            throw ConfigError("defense grids must be nonempty");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] inline void config_fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

inline double parse_double(int line, std::string_view key, std::string_view v) {
    double out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        config_fail(line, "bad number for " + std::string(key) + ": '" + std::string(v) + "'");
    return out;
}

template <class Int>
Int parse_int(int line, std::string_view key, std::string_view v) {
    Int out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        config_fail(line, "bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
    return out;
}

inline bool parse_bool(int line, std::string_view key, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    config_fail(line, std::string(key) + " must be true or false");
}

template <class Int>
std::vector<Int> parse_int_list(int line, std::string_view key, std::string_view v) {
    std::vector<Int> out;
    while (!v.empty()) {
        const std::size_t comma = v.find(',');
        out.push_back(parse_int<Int>(line, key, trim(v.substr(0, comma))));
        v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
    }
    if (out.empty()) config_fail(line, std::string(key) + " must be a nonempty list");
    return out;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class Int>
std::string fmt_list(const std::vector<Int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_int_list;

    ExperimentConfig c;
    bool saw_variant = false;
    std::string section;
    int line_no = 0;

    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') detail::config_fail(line_no, "unterminated section header");
            section = std::string(line.substr(1, line.size() - 2));
            if (section != "dataset" && section != "model" && section != "train" &&
                section != "eval" && section != "defense")
                detail::config_fail(line_no, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) detail::config_fail(line_no, "expected key = value");
        if (section.empty()) detail::config_fail(line_no, "key before any [section]");
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string_view v = detail::trim(line.substr(eq + 1));

        bool known = true;
        if (section == "dataset") {
            if (key == "family") c.family = std::string(v);
            else if (key == "ring_modes") c.ring_modes = parse_int<int>(line_no, key, v);
            else if (key == "ring_radius") c.ring_radius = parse_double(line_no, key, v);
            else if (key == "ring_std") c.ring_std = parse_double(line_no, key, v);
            else if (key == "grid_side") c.grid_side = parse_int<int>(line_no, key, v);
            else if (key == "grid_spacing") c.grid_spacing = parse_double(line_no, key, v);
            else if (key == "grid_std") c.grid_std = parse_double(line_no, key, v);
            else if (key == "pattern_k") c.pattern_k = parse_int<int>(line_no, key, v);
            else if (key == "pattern_quadrants")
                c.pattern_quadrants = parse_int<int>(line_no, key, v);
            else if (key == "pattern_noise") c.pattern_noise = parse_double(line_no, key, v);
            else known = false;
        } else if (section == "model") {
            if (key == "dz") c.dz = parse_int<std::size_t>(line_no, key, v);
            else if (key == "g_hidden") c.g_hidden = parse_int_list<std::size_t>(line_no, key, v);
            else if (key == "d_hidden") c.d_hidden = parse_int_list<std::size_t>(line_no, key, v);
            else if (key == "ar_hidden") c.ar_hidden = parse_int_list<std::size_t>(line_no, key, v);
            else if (key == "ar_sigma") c.ar_sigma = parse_double(line_no, key, v);
            else known = false;
        } else if (section == "train") {
            if (key == "variant") { c.variant = std::string(v); saw_variant = true; }
            else if (key == "steps") c.steps = parse_int<std::size_t>(line_no, key, v);
            else if (key == "batch") c.batch = parse_int<std::size_t>(line_no, key, v);
            else if (key == "lr") c.lr = parse_double(line_no, key, v);
            else if (key == "beta1") c.beta1 = parse_double(line_no, key, v);
            else if (key == "beta2") c.beta2 = parse_double(line_no, key, v);
            else if (key == "adam_eps") c.adam_eps = parse_double(line_no, key, v);
            else if (key == "seed") c.seed = parse_int<std::uint64_t>(line_no, key, v);
            else if (key == "ar_loss") c.ar_loss = std::string(v);
            else if (key == "shared_z") c.shared_z = parse_bool(line_no, key, v);
            else if (key == "metrics_cadence")
                c.metrics_cadence = parse_int<std::size_t>(line_no, key, v);
            else known = false;
        } else if (section == "eval") {
            if (key == "n_samples") c.eval_samples = parse_int<std::size_t>(line_no, key, v);
            else if (key == "min_count") c.min_count = parse_int<std::int64_t>(line_no, key, v);
            else if (key == "kl_eps") c.kl_eps = parse_double(line_no, key, v);
            else if (key == "classifier_samples")
                c.classifier_samples = parse_int<std::size_t>(line_no, key, v);
            else if (key == "classifier_width")
                c.classifier_width = parse_int<std::size_t>(line_no, key, v);
            else if (key == "classifier_epochs")
                c.classifier_epochs = parse_int<int>(line_no, key, v);
            else known = false;
        } else {  // defense
            if (key == "attack") c.attack = std::string(v);
            else if (key == "epsilon") c.epsilon = parse_double(line_no, key, v);
            else if (key == "pgd_steps") c.pgd_steps = parse_int<int>(line_no, key, v);
            else if (key == "pgd_step_size") c.pgd_step_size = parse_double(line_no, key, v);
            else if (key == "pgd_random_start")
                c.pgd_random_start = parse_bool(line_no, key, v);
            else if (key == "projection_steps")
                c.projection_steps = parse_int<int>(line_no, key, v);
            else if (key == "restarts") c.restarts = parse_int<int>(line_no, key, v);
            else if (key == "projection_lr") c.projection_lr = parse_double(line_no, key, v);
            else if (key == "l_grid") c.l_grid = parse_int_list<int>(line_no, key, v);
            else if (key == "r_grid") c.r_grid = parse_int_list<int>(line_no, key, v);
            else if (key == "seeds")
                c.defense_seeds = parse_int_list<std::uint64_t>(line_no, key, v);
            else if (key == "samples") c.defense_samples = parse_int<std::size_t>(line_no, key, v);
            else known = false;
        }
        if (!known)
            detail::config_fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    if (!saw_variant) throw ConfigError("missing required key: train.variant");
    return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::fmt_double;
    using detail::fmt_list;
    std::string out;
    auto kv = [&out](std::string_view key, const std::string& v) {
        out += key;
        out += " = ";
        out += v;
        out += '\n';
    };
    out += "[dataset]\n";
    kv("family", c.family);
    kv("ring_modes", std::to_string(c.ring_modes));
    kv("ring_radius", fmt_double(c.ring_radius));
    kv("ring_std", fmt_double(c.ring_std));
    kv("grid_side", std::to_string(c.grid_side));
    kv("grid_spacing", fmt_double(c.grid_spacing));
    kv("grid_std", fmt_double(c.grid_std));
    kv("pattern_k", std::to_string(c.pattern_k));
    kv("pattern_quadrants", std::to_string(c.pattern_quadrants));
    kv("pattern_noise", fmt_double(c.pattern_noise));
    out += "\n[model]\n";
    kv("dz", std::to_string(c.dz));
    kv("g_hidden", fmt_list(c.g_hidden));
    kv("d_hidden", fmt_list(c.d_hidden));
    kv("ar_hidden", fmt_list(c.ar_hidden));
    kv("ar_sigma", fmt_double(c.ar_sigma));
    out += "\n[train]\n";
    kv("variant", c.variant);
    kv("steps", std::to_string(c.steps));
    kv("batch", std::to_string(c.batch));
    kv("lr", fmt_double(c.lr));
    kv("beta1", fmt_double(c.beta1));
    kv("beta2", fmt_double(c.beta2));
    kv("adam_eps", fmt_double(c.adam_eps));
    kv("seed", std::to_string(c.seed));
    kv("ar_loss", c.ar_loss);
    kv("shared_z", c.shared_z ? "true" : "false");
    kv("metrics_cadence", std::to_string(c.metrics_cadence));
    out += "\n[eval]\n";
    kv("n_samples", std::to_string(c.eval_samples));
    kv("min_count", std::to_string(c.min_count));
    kv("kl_eps", fmt_double(c.kl_eps));
    kv("classifier_samples", std::to_string(c.classifier_samples));
    kv("classifier_width", std::to_string(c.classifier_width));
    kv("classifier_epochs", std::to_string(c.classifier_epochs));
    out += "\n[defense]\n";
    kv("attack", c.attack);
    kv("epsilon", fmt_double(c.epsilon));
    kv("pgd_steps", std::to_string(c.pgd_steps));
    kv("pgd_step_size", fmt_double(c.pgd_step_size));
    kv("pgd_random_start", c.pgd_random_start ? "true" : "false");
    kv("projection_steps", std::to_string(c.projection_steps));
    kv("restarts", std::to_string(c.restarts));
    kv("projection_lr", fmt_double(c.projection_lr));
    kv("l_grid", fmt_list(c.l_grid));
    kv("r_grid", fmt_list(c.r_grid));
    kv("seeds", fmt_list(c.defense_seeds));
    kv("samples", std::to_string(c.defense_samples));
    return out;
}

}  // namespace hgan

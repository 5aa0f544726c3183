// End-to-end tests driving the hgan binary (path injected via HGAN_CLI_PATH).
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hgan/config.hpp"
#include "hgan/io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hgan;

struct CliResult {
    int code = -1;
    std::string out;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hgan_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path write_file(const std::string& name, const std::string& text) const {
        fs::path p = dir_ / name;
        std::ofstream out(p);
        out << text;
        return p;
    }

    CliResult run(const std::string& args) {
        fs::path log = dir_ / ("out" + std::to_string(run_count_++) + ".txt");
        std::string cmd =
            std::string(HGAN_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
        int raw = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        std::ifstream in(log);
        r.out.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return r;
    }

    // "wrote <dir>" on the first line of cmd_train output
    static std::string run_dir_of(const std::string& out) {
        auto pos = out.find("wrote ");
        auto end = out.find('\n', pos);
        EXPECT_NE(pos, std::string::npos);
        return out.substr(pos + 6, end - pos - 6);
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        EXPECT_TRUE(in.good()) << p;
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    }

    static const char* ring_config() {
        return "[dataset]\n"
               "family = ring\n"
               "ring_modes = 4\n"
               "ring_radius = 1.0\n"
               "ring_std = 0.05\n"
               "[model]\n"
               "dz = 4\n"
               "g_hidden = 16,16\n"
               "d_hidden = 16\n"
               "ar_hidden = 16\n"
               "[train]\n"
               "variant = hgan\n"
               "steps = 150\n"
               "metrics_cadence = 50\n"
               "seed = 3\n"
               "[eval]\n"
               "n_samples = 300\n"
               "classifier_samples = 600\n"
               "classifier_epochs = 4\n"
               "classifier_width = 16\n";
    }

    static const char* patterns_config() {
        return "[dataset]\n"
               "family = patterns\n"
               "pattern_k = 4\n"
               "pattern_quadrants = 1\n"
               "[model]\n"
               "dz = 6\n"
               "g_hidden = 24,24\n"
               "d_hidden = 24\n"
               "ar_hidden = 24\n"
               "[train]\n"
               "variant = hgan\n"
               "steps = 200\n"
               "ar_loss = nll\n"
               "seed = 5\n"
               "[eval]\n"
               "n_samples = 200\n"
               "classifier_samples = 800\n"
               "classifier_epochs = 5\n"
               "classifier_width = 16\n"
               "[defense]\n"
               "epsilon = 0.3\n"
               "l_grid = 2\n"
               "r_grid = 1\n"
               "seeds = 7\n"
               "samples = 8\n"
               "projection_steps = 2\n"
               "restarts = 1\n";
    }

    fs::path dir_;
    int run_count_ = 0;
};

TEST_F(CliTest, MissingRequiredKeyExitsTwoAndNamesIt) {
    fs::path cfg = write_file("novariant.ini", "[train]\nsteps = 10\n");
    CliResult r = run("train --config " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("train.variant"), std::string::npos) << r.out;
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("nosuchcmd").code, 2);
    EXPECT_EQ(run("train --bogus 1").code, 2);
    EXPECT_EQ(run("eval").code, 2);  // missing --ckpt
    EXPECT_EQ(run("train --config /does/not/exist.ini").code, 2);
}

TEST_F(CliTest, BadCheckpointsExitFour) {
    fs::path junk = write_file("junk.hgck", "JUNKJUNKJUNKJUNK");
    EXPECT_EQ(run("eval --ckpt " + junk.string()).code, 4);
    EXPECT_EQ(run("sample --ckpt " + path("missing.hgck").string()).code, 4);
}

TEST_F(CliTest, TrainWritesEchoMetricsAndCheckpoint) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult r = run("train --config " + cfg.string() + " --out " + path("runs").string());
    ASSERT_EQ(r.code, 0) << r.out;
    fs::path rd = run_dir_of(r.out);
    EXPECT_NE(rd.filename().string().find("hgan-3-"), std::string::npos);
    ASSERT_TRUE(fs::exists(rd / "config.ini"));
    ASSERT_TRUE(fs::exists(rd / "metrics.csv"));
    ASSERT_TRUE(fs::exists(rd / "checkpoint.hgck"));

    // echo parses back to the effective config, defaults included
    ExperimentConfig echoed = parse_config(slurp(rd / "config.ini"));
    ExperimentConfig expect = parse_config(ring_config());
    EXPECT_TRUE(echoed == expect);
    EXPECT_EQ(echoed.lr, 0.0002);
    EXPECT_EQ(echoed.batch, 64u);
    EXPECT_EQ(echoed.beta1, 0.5);

    // steps 1, 50, 100, 150 logged
    CsvFile metrics = read_csv((rd / "metrics.csv").string());
    EXPECT_EQ(metrics.header, split_csv_line(kMetricsCsvHeader));
    EXPECT_EQ(metrics.rows.size(), 4u);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult r = run("train --config " + cfg.string() + " --seed 9 --out " +
                      path("runs").string());
    ASSERT_EQ(r.code, 0) << r.out;
    fs::path rd = run_dir_of(r.out);
    EXPECT_NE(rd.filename().string().find("hgan-9-"), std::string::npos);
    EXPECT_EQ(parse_config(slurp(rd / "config.ini")).seed, 9u);
}

TEST_F(CliTest, RerunReproducesMetricsBitwise) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult a = run("train --config " + cfg.string() + " --out " + path("a").string());
    CliResult b = run("train --config " + cfg.string() + " --out " + path("b").string());
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(slurp(fs::path(run_dir_of(a.out)) / "metrics.csv"),
              slurp(fs::path(run_dir_of(b.out)) / "metrics.csv"));
}

TEST_F(CliTest, EvalIsDeterministicAndCompareReducesToIt) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult tr = run("train --config " + cfg.string() + " --out " + path("runs").string());
    ASSERT_EQ(tr.code, 0);
    std::string ckpt = (fs::path(run_dir_of(tr.out)) / "checkpoint.hgck").string();

    ASSERT_EQ(run("eval --ckpt " + ckpt + " --out " + path("e1").string()).code, 0);
    ASSERT_EQ(run("eval --ckpt " + ckpt + " --out " + path("e2").string()).code, 0);
    std::string eval1 = slurp(path("e1") / "eval.csv");
    EXPECT_EQ(eval1, slurp(path("e2") / "eval.csv"));

    // one variant, one seed: compare's row is bitwise the eval row
    CliResult cm = run("compare --config " + cfg.string() +
                       " --variants hgan --seeds 3 --out " + path("cmp").string());
    ASSERT_EQ(cm.code, 0) << cm.out;
    EXPECT_EQ(eval1, slurp(path("cmp") / "eval.csv"));

    // aggregate of a single run: median == min == max
    CsvFile agg = read_csv((path("cmp") / "compare.csv").string());
    EXPECT_EQ(agg.header, split_csv_line("variant,metric,median,min,max"));
    for (const auto& row : agg.rows) {
        EXPECT_EQ(row[2], row[3]);
        EXPECT_EQ(row[2], row[4]);
    }
}

TEST_F(CliTest, SamplesAreTheFirstDrawsOfTheStream) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult tr = run("train --config " + cfg.string() + " --out " + path("runs").string());
    ASSERT_EQ(tr.code, 0);
    std::string ckpt = (fs::path(run_dir_of(tr.out)) / "checkpoint.hgck").string();

    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 7 --seed 5 --out " + path("s7").string()).code,
              0);
    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 4 --seed 5 --out " + path("s4").string()).code,
              0);
    CsvFile seven = read_csv((path("s7") / "samples.csv").string());
    CsvFile four = read_csv((path("s4") / "samples.csv").string());
    ASSERT_EQ(seven.rows.size(), 7u);
    ASSERT_EQ(four.rows.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(seven.rows[i], four.rows[i]);

    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 0 --out " + path("s0").string()).code, 0);
    EXPECT_EQ(slurp(path("s0") / "samples.csv"), "x0,x1\n");
}

TEST_F(CliTest, PatternSamplesEmitPgmGrid) {
    fs::path cfg = write_file("pat.ini", patterns_config());
    CliResult tr = run("train --config " + cfg.string() + " --out " + path("runs").string());
    ASSERT_EQ(tr.code, 0) << tr.out;
    std::string ckpt = (fs::path(run_dir_of(tr.out)) / "checkpoint.hgck").string();

    // 5 tiles of 3x3 pixels -> ceil(sqrt 5) = 3 tiles per side -> 9x9 canvas
    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 5 --out " + path("pg").string()).code, 0);
    std::string pgm = slurp(path("pg") / "samples.pgm");
    EXPECT_EQ(pgm.substr(0, 11), "P5\n9 9\n255\n");
    EXPECT_EQ(pgm.size(), 11u + 81u);

    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 0 --out " + path("pg0").string()).code, 0);
    EXPECT_EQ(slurp(path("pg0") / "samples.pgm"), "P5\n0 0\n255\n");
}

TEST_F(CliTest, DefendEmitsSweepCsv) {
    fs::path cfg = write_file("pat.ini", patterns_config());
    CliResult r = run("defend --config " + cfg.string() + " --out " + path("def").string());
    ASSERT_EQ(r.code, 0) << r.out;
    CsvFile sweep = read_csv((path("def") / "defense.csv").string());
    EXPECT_EQ(sweep.header, split_csv_line(kDefenseCsvHeader));
    ASSERT_EQ(sweep.rows.size(), 1u);  // one L, one R, one seed
    EXPECT_EQ(sweep.rows[0][0], "2");
    EXPECT_EQ(sweep.rows[0][1], "1");
    EXPECT_EQ(sweep.rows[0][6], "fgsm");
}

TEST_F(CliTest, EveryEmittedCsvParsesAgainstItsSchema) {
    fs::path cfg = write_file("ring.ini", ring_config());
    CliResult tr = run("train --config " + cfg.string() + " --out " + path("runs").string());
    ASSERT_EQ(tr.code, 0);
    fs::path rd = run_dir_of(tr.out);
    std::string ckpt = (rd / "checkpoint.hgck").string();
    ASSERT_EQ(run("eval --ckpt " + ckpt + " --out " + path("e").string()).code, 0);
    ASSERT_EQ(run("sample --ckpt " + ckpt + " --n 3 --out " + path("s").string()).code, 0);

    const std::vector<std::pair<fs::path, std::string>> files = {
        {rd / "metrics.csv", kMetricsCsvHeader},
        {path("e") / "eval.csv", kEvalCsvHeader},
        {path("s") / "samples.csv", "x0,x1"},
    };
    for (const auto& [file, header] : files) {
        CsvFile csv = read_csv(file.string());  // throws on ragged rows
        EXPECT_EQ(csv.header, split_csv_line(header)) << file;
        EXPECT_GT(csv.rows.size(), 0u) << file;
    }
}

TEST_F(CliTest, GradcheckExitsZeroWhenAllPass) {
    CliResult r = run("gradcheck --seed 17");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

}  // namespace

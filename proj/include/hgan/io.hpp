// Artifact export: metrics/eval/defense/sample CSVs (doubles as %.17g so
// files round-trip bit-exactly) and tiled binary PGM grids for image-shaped
// samples. A small CSV reader backs the schema tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/defense.hpp"
#include "hgan/metrics.hpp"
#include "hgan/train.hpp"

namespace hgan {

namespace detail {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace detail

inline void write_metrics_csv(const std::string& path, const std::vector<StepMetrics>& rows) {
    auto out = detail::open_out(path);
    out << kMetricsCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.step << ',' << detail::csv_num(r.loss_d) << ',' << detail::csv_num(r.loss_g)
            << ',' << detail::csv_num(r.loss_ar) << ',' << detail::csv_num(r.sr1) << ','
            << detail::csv_num(r.sr2) << ',' << detail::csv_num(r.sf1) << ','
            << detail::csv_num(r.sf2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct EvalCsvRow {
    std::string variant;
    std::uint64_t seed = 0;
    EvalReport report;
};

inline void write_eval_csv(const std::string& path, const std::vector<EvalCsvRow>& rows) {
    auto out = detail::open_out(path);
    out << kEvalCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.variant << ',' << r.seed << ',' << detail::csv_num(r.report.kl) << ','
            << detail::csv_num(r.report.chi_square) << ',' << r.report.modes_covered << ','
            << detail::csv_num(r.report.mode_score) << ',' << detail::csv_num(r.report.frechet)
            << ',' << r.report.sample_count << ','
            << detail::csv_num(r.report.classifier_accuracy) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_defense_csv(const std::string& path, const std::vector<DefenseSweepRow>& rows) {
    auto out = detail::open_out(path);
    out << kDefenseCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.projection_steps << ',' << r.restarts << ',' << r.seed << ','
            << detail::csv_num(r.clean_accuracy) << ',' << detail::csv_num(r.attacked_accuracy)
            << ',' << detail::csv_num(r.defended_accuracy) << ',' << to_string(r.attack) << ','
            << detail::csv_num(r.epsilon) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Sample dump for low-dimensional data: header x0,...,x{d-1}, one row per
// sample, in stream order (no selection). Null samples = header only (n=0).
inline void write_samples_csv(const std::string& path, std::size_t dim, const Tensor* samples) {
    auto out = detail::open_out(path);
    for (std::size_t j = 0; j < dim; ++j) out << (j ? "," : "") << 'x' << j;
    out << '\n';
    if (samples)
        for (std::size_t i = 0; i < samples->rows(); ++i) {
            for (std::size_t j = 0; j < samples->cols(); ++j)
                out << (j ? "," : "") << detail::csv_num((*samples)(i, j));
            out << '\n';
        }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_samples_csv(const std::string& path, const Tensor& samples) {
    write_samples_csv(path, samples.cols(), &samples);
}

// Tiled grid of square images, binary PGM (P5, maxval 255). n samples fill
// the first cells of a t x t grid with t = ceil(sqrt(n)); the rest is black.
inline void write_empty_pgm(const std::string& path) {
    auto out = detail::open_out(path);
    out << "P5\n0 0\n255\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_pgm_grid(const std::string& path, const Tensor& samples, std::size_t side) {
    if (side * side != samples.cols())
        throw std::invalid_argument("pgm: samples are not square images of the given side");
    std::size_t tiles = 1;
    while (tiles * tiles < samples.rows()) ++tiles;
    const std::size_t wh = tiles * side;
    std::vector<unsigned char> canvas(wh * wh, 0);
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const std::size_t r0 = (i / tiles) * side, c0 = (i % tiles) * side;
        for (std::size_t p = 0; p < side; ++p)
            for (std::size_t q = 0; q < side; ++q) {
                const double v = std::min(std::max(samples(i, p * side + q), 0.0), 1.0);
                canvas[(r0 + p) * wh + (c0 + q)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
    }
    auto out = detail::open_out(path);
    out << "P5\n" << wh << ' ' << wh << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.data()),
              static_cast<std::streamsize>(canvas.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Minimal CSV reader for the schema tests and compare aggregation.
struct CsvFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline CsvFile read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    CsvFile csv;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    csv.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        csv.rows.push_back(split_csv_line(line));
        if (csv.rows.back().size() != csv.header.size())
            throw std::runtime_error("csv: ragged row in " + path);
    }
    return csv;
}

}  // namespace hgan

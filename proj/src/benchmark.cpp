#include "mdreg/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mdreg/errors.hpp"
#include "mdreg/io.hpp"
#include "mdreg/pipeline.hpp"
#include "mdreg/synth.hpp"

namespace mdreg {

namespace {

std::string g9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

// splitmix64 finalizer over a slot index: decorrelates neighbouring slots so
// per-pair scenes never share RNG streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t slot) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (slot + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

std::string strip_comment(const std::string& line) {
    const std::size_t hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

std::string trim(const std::string& text) {
    std::size_t first = 0;
    std::size_t last = text.size();
    while (first < last && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(text[last - 1]))) --last;
    return text.substr(first, last - first);
}

double grid_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty() || !std::isfinite(parsed))
        throw ConfigError(key + ": expected a finite number, found '" + value + "'");
    return parsed;
}

std::uint64_t grid_u64(const std::string& key, const std::string& value) {
    const double parsed = grid_double(key, value);
    if (parsed < 0 || parsed != std::floor(parsed))
        throw ConfigError(key + ": expected a non-negative integer, found '" + value + "'");
    return static_cast<std::uint64_t>(parsed);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string current;
    std::stringstream stream(value);
    while (std::getline(stream, current, ',')) items.push_back(trim(current));
    return items;
}

void validate_grid(const BenchmarkGrid& grid) {
    if (grid.estimators.empty()) throw ConfigError("estimators: need at least one");
    if (grid.outlier_fractions.empty()) throw ConfigError("outlier_fractions: need at least one");
    if (grid.noise_sigmas.empty()) throw ConfigError("noise_sigmas: need at least one");
    for (const double f : grid.outlier_fractions)
        if (!(f >= 0.0 && f < 1.0))
            throw ConfigError("outlier_fractions: values must lie in [0, 1), found " + g9(f));
    for (const double s : grid.noise_sigmas)
        if (!(s >= 0.0))
            throw ConfigError("noise_sigmas: values must be non-negative, found " + g9(s));
    if (grid.n_points < 10) throw ConfigError("n_points: need at least 10");
    if (!(grid.overlap_fraction > 0.0 && grid.overlap_fraction <= 1.0))
        throw ConfigError("overlap_fraction: must lie in (0, 1]");
    if (!(grid.max_rotation_degrees >= 0.0 && grid.max_rotation_degrees <= 180.0))
        throw ConfigError("max_rotation_degrees: must lie in [0, 180]");
    if (!(grid.max_translation >= 0.0))
        throw ConfigError("max_translation: must be non-negative");
    if (grid.pairs_per_cell == 0) throw ConfigError("pairs_per_cell: need at least one pair");
    validate_config(grid.base);
}

// One benchmark pair: seeded scene, seeded corruption, one estimator run.
// An estimator failure degrades to the identity transform and a forced
// registration failure instead of aborting the cell.
PairEvaluation run_pair(const BenchmarkGrid& grid, const BenchmarkCell& cell,
                        std::uint64_t scene_seed) {
    SceneSpec spec;
    spec.n_points = grid.n_points;
    spec.noise_sigma = cell.noise_sigma;
    spec.outlier_fraction = cell.outlier_fraction;
    spec.overlap_fraction = grid.overlap_fraction;
    spec.max_rotation_degrees = grid.max_rotation_degrees;
    spec.max_translation = grid.max_translation;
    spec.rng_seed = scene_seed;
    const ScenePair scene = generate_pair(spec);
    const PointCorrespondences corrs = corrupt_correspondences(
        scene.correspondences, spec.outlier_fraction, scene.tgt, mix_seed(scene_seed, 1));

    RunConfig estimator_config = grid.base;
    estimator_config.estimator = cell.estimator;
    RigidTransform estimated;
    bool solver_failed = false;
    try {
        estimated = estimate_pose(corrs, scene.src, scene.tgt, estimator_config);
    } catch (const std::exception&) {
        solver_failed = true; // identity estimate, scored as a failure below
    }
    PairEvaluation eval =
        evaluate_pair(corrs, estimated, scene.ground_truth, scene.src, scene.tgt,
                      grid.base.inlier_tau, grid.base.rmse_tau, grid.base.success_criterion);
    if (solver_failed) eval.registration_success = false;
    return eval;
}

CellOutcome run_cell(const BenchmarkGrid& grid, const BenchmarkCell& cell,
                     std::uint64_t scene_slot_base) {
    CellOutcome outcome;
    outcome.cell = cell;
    const auto started = std::chrono::steady_clock::now();
    try {
        std::vector<PairEvaluation> evals;
        evals.reserve(grid.pairs_per_cell);
        for (std::size_t pair = 0; pair < grid.pairs_per_cell; ++pair)
            evals.push_back(
                run_pair(grid, cell, mix_seed(grid.base_seed, scene_slot_base + pair)));
        outcome.report = aggregate(evals, grid.base.fmr_tau);
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    if (grid.base.include_timing)
        outcome.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return outcome;
}

std::string build_csv(const std::vector<CellOutcome>& cells) {
    std::string csv = "estimator,outlier_fraction,noise,rr,mean_rre,mean_rte,wall_time_seconds\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const CellOutcome& outcome : cells) {
        const bool ok = outcome.error.empty();
        csv += estimator_name(outcome.cell.estimator);
        csv += ',' + g9(outcome.cell.outlier_fraction);
        csv += ',' + g9(outcome.cell.noise_sigma);
        csv += ',' + g9(ok ? outcome.report.registration_recall : nan);
        csv += ',' + g9(ok ? outcome.report.mean_rre : nan);
        csv += ',' + g9(ok ? outcome.report.mean_rte : nan);
        csv += ',' + g9(outcome.wall_time_seconds);
        csv += '\n';
    }
    return csv;
}

// Gnuplot-style blocks (two blank lines apart, so `index` selects a curve):
// one block per (estimator, noise), rows are "outlier_fraction recall".
std::string build_gnuplot(const BenchmarkGrid& grid, const std::vector<CellOutcome>& cells) {
    const std::size_t o_count = grid.outlier_fractions.size();
    const std::size_t s_count = grid.noise_sigmas.size();
    std::string out = "# registration recall vs outlier fraction\n";
    bool first_block = true;
    for (std::size_t e = 0; e < grid.estimators.size(); ++e) {
        for (std::size_t s = 0; s < s_count; ++s) {
            if (!first_block) out += "\n\n";
            first_block = false;
            out += "# estimator=";
            out += estimator_name(grid.estimators[e]);
            out += " noise=" + g9(grid.noise_sigmas[s]) + "\n";
            for (std::size_t o = 0; o < o_count; ++o) {
                const CellOutcome& outcome = cells[(e * o_count + o) * s_count + s];
                const double rr = outcome.error.empty()
                                      ? outcome.report.registration_recall
                                      : std::numeric_limits<double>::quiet_NaN();
                out += g9(outcome.cell.outlier_fraction) + " " + g9(rr) + "\n";
            }
        }
    }
    return out;
}

} // namespace

BenchmarkGrid parse_benchmark_grid(const std::string& text) {
    BenchmarkGrid grid;
    std::set<std::string> seen;
    std::string residual; // non-grid lines, blank-padded so line numbers survive
    std::istringstream lines(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) {
            residual += '\n';
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const bool grid_key =
            key == "estimators" || key == "outlier_fractions" || key == "noise_sigmas" ||
            key == "n_points" || key == "overlap_fraction" || key == "max_rotation_degrees" ||
            key == "max_translation" || key == "pairs_per_cell" || key == "base_seed";
        if (!grid_key) {
            residual += raw;
            residual += '\n';
            continue;
        }
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' (line " + std::to_string(line_no) +
                              ")");
        residual += '\n';
        if (key == "estimators") {
            grid.estimators.clear();
            for (const std::string& item : split_list(value))
                grid.estimators.push_back(parse_estimator(item));
        } else if (key == "outlier_fractions") {
            grid.outlier_fractions.clear();
            for (const std::string& item : split_list(value))
                grid.outlier_fractions.push_back(grid_double(key, item));
        } else if (key == "noise_sigmas") {
            grid.noise_sigmas.clear();
            for (const std::string& item : split_list(value))
                grid.noise_sigmas.push_back(grid_double(key, item));
        } else if (key == "n_points") {
            grid.n_points = static_cast<std::size_t>(grid_u64(key, value));
        } else if (key == "overlap_fraction") {
            grid.overlap_fraction = grid_double(key, value);
        } else if (key == "max_rotation_degrees") {
            grid.max_rotation_degrees = grid_double(key, value);
        } else if (key == "max_translation") {
            grid.max_translation = grid_double(key, value);
        } else if (key == "pairs_per_cell") {
            grid.pairs_per_cell = static_cast<std::size_t>(grid_u64(key, value));
        } else {
            grid.base_seed = grid_u64(key, value);
        }
    }
    grid.base = parse_config(residual);
    validate_grid(grid);
    return grid;
}

BenchmarkGrid load_benchmark_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open benchmark grid: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_benchmark_grid(buffer.str());
}

BenchmarkRun run_benchmark(const BenchmarkGrid& grid) {
    validate_grid(grid);
    const std::size_t o_count = grid.outlier_fractions.size();
    const std::size_t s_count = grid.noise_sigmas.size();

    BenchmarkRun run;
    run.fmr_tau = grid.base.fmr_tau;
    run.cells.resize(grid.estimators.size() * o_count * s_count);

    // Scene seeds key off (outlier, noise, pair) alone, never the estimator,
    // so every estimator faces identical data at each slot.
    const auto scene_slot = [&](std::size_t o, std::size_t s) {
        return (o * s_count + s) * grid.pairs_per_cell;
    };

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= run.cells.size()) return;
            const std::size_t s = index % s_count;
            const std::size_t o = (index / s_count) % o_count;
            const std::size_t e = index / (s_count * o_count);
            BenchmarkCell cell;
            cell.estimator = grid.estimators[e];
            cell.outlier_fraction = grid.outlier_fractions[o];
            cell.noise_sigma = grid.noise_sigmas[s];
            run.cells[index] = run_cell(grid, cell, scene_slot(o, s));
        }
    };
    const std::size_t thread_count =
        std::max<std::size_t>(1, std::min(grid.base.workers, run.cells.size()));
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& thread : pool) thread.join();

    run.csv = build_csv(run.cells);
    run.gnuplot = build_gnuplot(grid, run.cells);
    return run;
}

void write_benchmark(const BenchmarkRun& run, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    for (std::size_t i = 0; i < run.cells.size(); ++i) {
        const CellOutcome& outcome = run.cells[i];
        nlohmann::json doc = {
            {"estimator", estimator_name(outcome.cell.estimator)},
            {"outlier_fraction", outcome.cell.outlier_fraction},
            {"noise_sigma", outcome.cell.noise_sigma},
            {"wall_time_seconds", outcome.wall_time_seconds},
        };
        if (outcome.error.empty()) {
            // The stored aggregate must match one recomputed from the per-pair
            // records; a drift here is a bookkeeping bug, not bad input.
            const BenchmarkReport check = aggregate(outcome.report.pairs, run.fmr_tau);
            if (check.registration_recall != outcome.report.registration_recall ||
                check.feature_matching_recall != outcome.report.feature_matching_recall ||
                check.mean_rre != outcome.report.mean_rre ||
                check.median_rre != outcome.report.median_rre ||
                check.mean_rte != outcome.report.mean_rte ||
                check.median_rte != outcome.report.median_rte)
                throw InternalError("write_benchmark: stored aggregate disagrees with per-pair "
                                    "records in cell " +
                                    std::to_string(i));
            doc["report"] = nlohmann::json::parse(report_to_json(outcome.report));
        } else {
            doc["error"] = outcome.error;
        }
        char name[64];
        std::snprintf(name, sizeof(name), "cell_%03zu_%s.json", i,
                      estimator_name(outcome.cell.estimator));
        write_text_atomic((dir / name).string(), doc.dump(2) + "\n");
    }
    write_text_atomic((dir / "summary.csv").string(), run.csv);
    write_text_atomic((dir / "recall_vs_outlier.dat").string(), run.gnuplot);
}

} // namespace mdreg

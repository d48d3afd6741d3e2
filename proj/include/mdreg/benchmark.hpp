#ifndef MDREG_BENCHMARK_HPP
#define MDREG_BENCHMARK_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdreg/config.hpp"
#include "mdreg/metrics.hpp"

namespace mdreg {

// Grid for the pose-estimator benchmark: estimators crossed with outlier
// fractions and noise levels over seeded synthetic scenes. Every estimator
// sees the same scene and the same corrupted correspondence set at a given
// (outlier, noise, pair) slot, so row differences isolate the estimator.
struct BenchmarkGrid {
    std::vector<Estimator> estimators{Estimator::dism, Estimator::ransac, Estimator::lgr};
    std::vector<double> outlier_fractions{0.0, 0.2, 0.4};
    std::vector<double> noise_sigmas{0.005};
    std::size_t n_points = 200;
    double overlap_fraction = 1.0; // 1 keeps every point in the shared set
    double max_rotation_degrees = 60.0;
    double max_translation = 1.0;
    std::size_t pairs_per_cell = 50;
    std::uint64_t base_seed = 1;
    // Estimator parameters, evaluation taus, worker count, and the timing
    // switch. The estimator field itself is ignored; estimators above rule.
    RunConfig base;
};

struct BenchmarkCell {
    Estimator estimator = Estimator::dism;
    double outlier_fraction = 0.0;
    double noise_sigma = 0.0;
};

struct CellOutcome {
    BenchmarkCell cell;
    BenchmarkReport report;         // meaningful only while error is empty
    double wall_time_seconds = 0.0; // stays 0 unless base.include_timing
    std::string error;              // non-empty marks a failed cell; the run continues
};

struct BenchmarkRun {
    std::vector<CellOutcome> cells; // estimator-major, then outlier, then noise
    std::string csv;                // one summary row per cell, same order
    std::string gnuplot;            // recall-vs-outlier blocks per (estimator, noise)
    double fmr_tau = 0.05;          // carried so the writer can re-derive aggregates
};

// Same flat key=value format as RunConfig with five grid-only keys taking
// comma-separated lists (estimators, outlier_fractions, noise_sigmas) or
// scalars (n_points, overlap_fraction, max_rotation_degrees, max_translation,
// pairs_per_cell, base_seed); every other key falls through to the RunConfig
// parser. ConfigError on unknown keys, duplicates, or out-of-range values.
BenchmarkGrid parse_benchmark_grid(const std::string& text);

// parse_benchmark_grid over a file; IoError if unreadable.
BenchmarkGrid load_benchmark_grid(const std::string& path);

// Runs every cell, pairs_per_cell scenes each, across base.workers threads.
// A pair whose estimator raises keeps the identity transform and counts as a
// failed registration; a cell whose scene generation raises is recorded via
// its error string and the run continues. Deterministic in the grid apart
// from wall_time_seconds, and bitwise-deterministic when include_timing is
// off. The CSV and gnuplot summaries are built in grid order after all cells
// finish.
BenchmarkRun run_benchmark(const BenchmarkGrid& grid);

// Writes cell_<index>_<estimator>.json per cell plus summary.csv and
// recall_vs_outlier.dat under out_dir (created if missing), each file through
// a temp-and-rename so readers never see partial content. Re-checks that each
// cell's stored aggregate equals one recomputed from its per-pair records and
// raises InternalError on mismatch.
void write_benchmark(const BenchmarkRun& run, const std::string& out_dir);

} // namespace mdreg

#endif

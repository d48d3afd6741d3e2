// Command-line front end: register a pair of clouds, sweep the estimator
// benchmark grid, emit synthetic scenes, or run the built-in selftest.
// Errors exit with a stable category code and a machine-readable stderr line.

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mdreg/benchmark.hpp"
#include "mdreg/config.hpp"
#include "mdreg/context_fusion.hpp"
#include "mdreg/errors.hpp"
#include "mdreg/global_graph.hpp"
#include "mdreg/io.hpp"
#include "mdreg/matching.hpp"
#include "mdreg/metrics.hpp"
#include "mdreg/pipeline.hpp"
#include "mdreg/pose.hpp"
#include "mdreg/rng.hpp"
#include "mdreg/synth.hpp"

namespace {

using namespace mdreg;

// Exit codes, one per error category; 0 is success and CLI11 keeps its own
// usage-error codes. Scripts should match on these, not on message text.
constexpr int kExitIo = 2;
constexpr int kExitParse = 3;
constexpr int kExitUnsupportedFormat = 4;
constexpr int kExitConfig = 5;
constexpr int kExitShape = 6;
constexpr int kExitParameter = 7;
constexpr int kExitDegeneracy = 8;
constexpr int kExitInternal = 9;

// MDREG_LOG=info or MDREG_LOG=debug turns on stderr progress lines.
int log_level() {
    static const int level = [] {
        const char* env = std::getenv("MDREG_LOG");
        if (env == nullptr) return 0;
        const std::string value(env);
        if (value == "debug") return 2;
        if (value == "info" || value == "1") return 1;
        return 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[mdreg] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[mdreg] " << msg << "\n";
}

int fail(const char* category, int code, const std::exception& e) {
    std::cerr << "error: category=" << category << " " << e.what() << "\n";
    return code;
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const IoError& e) {
        return fail("io", kExitIo, e);
    } catch (const ParseError& e) {
        return fail("parse", kExitParse, e);
    } catch (const UnsupportedFormatError& e) {
        return fail("unsupported_format", kExitUnsupportedFormat, e);
    } catch (const ConfigError& e) {
        return fail("config", kExitConfig, e);
    } catch (const ShapeError& e) {
        return fail("shape", kExitShape, e);
    } catch (const ParameterError& e) {
        return fail("parameter", kExitParameter, e);
    } catch (const DegeneracyError& e) {
        return fail("degeneracy", kExitDegeneracy, e);
    } catch (const InternalError& e) {
        return fail("internal", kExitInternal, e);
    } catch (const std::exception& e) {
        return fail("internal", kExitInternal, e);
    }
}

bool ends_with(const std::string& text, const std::string& suffix) {
    return text.size() >= suffix.size() &&
           text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PointCloud load_cloud(const std::string& path) {
    if (ends_with(path, ".ply")) return load_ply(path);
    if (ends_with(path, ".bin")) return load_kitti_bin(path);
    throw UnsupportedFormatError("unrecognized point-cloud extension on " + path +
                                 " (expected .ply or .bin)");
}

// Per-key flag overrides collected by mirror_config_flags. Values stay as
// strings until applied so the config parser owns all value syntax.
struct ConfigFlags {
    std::map<std::string, std::string> values;

    void mirror_onto(CLI::App* sub) {
        for (const std::string& key : config_key_names())
            sub->add_option("--" + key, values[key], "config key " + key);
    }

    RunConfig resolve(const CLI::App* sub, const std::string& config_path) const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& [key, value] : values)
            if (sub->count("--" + key) > 0) set_config_key(cfg, key, value);
        validate_config(cfg);
        return cfg;
    }
};

nlohmann::json transform_to_json(const RigidTransform& transform) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back({transform.rotation(r, 0), transform.rotation(r, 1),
                        transform.rotation(r, 2),
                        transform.translation[static_cast<std::size_t>(r)]});
    rows.push_back({0.0, 0.0, 0.0, 1.0});
    return rows;
}

void cmd_register(const std::string& src_path, const std::string& tgt_path,
                  const std::string& config_path, const std::string& out_dir,
                  const ConfigFlags& flags, const CLI::App* sub) {
    const RunConfig cfg = flags.resolve(sub, config_path);
    log_info("registering " + src_path + " -> " + tgt_path);
    const PointCloud src = load_cloud(src_path);
    const PointCloud tgt = load_cloud(tgt_path);
    log_debug("loaded " + std::to_string(src.size()) + " source and " +
              std::to_string(tgt.size()) + " target points");

    const RegistrationResult result = register_clouds(src, tgt, cfg);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    save_transform(result.transform, (dir / "transform.txt").string());

    const StageTimings zero;
    const StageTimings& t = cfg.include_timing ? result.timings : zero;
    const nlohmann::json report = {
        {"source", src_path},
        {"target", tgt_path},
        {"estimator", estimator_name(cfg.estimator)},
        {"src_points", src.size()},
        {"tgt_points", tgt.size()},
        {"src_patches", result.src_patches},
        {"tgt_patches", result.tgt_patches},
        {"patch_pairs", result.patch_pairs.pairs.size()},
        {"point_pairs", result.point_pairs.pairs.size()},
        {"skipped_patch_pairs", result.point_pairs.skipped_patches},
        {"transform", transform_to_json(result.transform)},
        {"transform_file", "transform.txt"},
        {"timings_seconds",
         {{"descriptors", t.descriptors},
          {"hierarchy", t.hierarchy},
          {"graph", t.graph},
          {"fusion", t.fusion},
          {"matching", t.matching},
          {"estimation", t.estimation}}},
    };
    write_text_atomic((dir / "report.json").string(), report.dump(2) + "\n");
    log_info("wrote " + (dir / "report.json").string() + " and " +
             (dir / "transform.txt").string());
}

void cmd_benchmark(const std::string& grid_path, const std::string& out_dir,
                   const ConfigFlags& flags, const CLI::App* sub) {
    BenchmarkGrid grid = load_benchmark_grid(grid_path);
    for (const auto& [key, value] : flags.values)
        if (sub->count("--" + key) > 0) set_config_key(grid.base, key, value);
    validate_config(grid.base);
    log_info("benchmark grid: " + std::to_string(grid.estimators.size()) + " estimators x " +
             std::to_string(grid.outlier_fractions.size()) + " outlier fractions x " +
             std::to_string(grid.noise_sigmas.size()) + " noise levels, " +
             std::to_string(grid.pairs_per_cell) + " pairs per cell");
    const BenchmarkRun run = run_benchmark(grid);
    write_benchmark(run, out_dir);
    std::size_t failed = 0;
    for (const CellOutcome& outcome : run.cells)
        if (!outcome.error.empty()) ++failed;
    log_info("wrote " + std::to_string(run.cells.size()) + " cells to " + out_dir +
             (failed > 0 ? " (" + std::to_string(failed) + " failed)" : ""));
}

void cmd_synth(std::size_t n_points, double noise_sigma, double overlap_fraction,
               double max_rotation_degrees, double max_translation, std::uint64_t seed,
               const std::string& out_dir, const std::string& format) {
    if (format != "ply" && format != "kitti")
        throw UnsupportedFormatError("unknown synth format '" + format +
                                     "' (expected ply or kitti)");
    SceneSpec spec;
    spec.n_points = n_points;
    spec.noise_sigma = noise_sigma;
    spec.overlap_fraction = overlap_fraction;
    spec.max_rotation_degrees = max_rotation_degrees;
    spec.max_translation = max_translation;
    spec.rng_seed = seed;
    const ScenePair scene = generate_pair(spec);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    if (format == "ply") {
        save_ply(scene.src, (dir / "src.ply").string(), PlyFormat::binary_little_endian);
        save_ply(scene.tgt, (dir / "tgt.ply").string(), PlyFormat::binary_little_endian);
    } else {
        save_kitti_bin(scene.src, (dir / "src.bin").string());
        save_kitti_bin(scene.tgt, (dir / "tgt.bin").string());
    }
    save_transform(scene.ground_truth, (dir / "ground_truth.txt").string());
    std::string pairs = "src_index,tgt_index\n";
    for (const auto& [s, t] : scene.correspondences)
        pairs += std::to_string(s) + "," + std::to_string(t) + "\n";
    write_text_atomic((dir / "pairs.csv").string(), pairs);
    log_info("wrote scene (" + std::to_string(scene.src.size()) + " src / " +
             std::to_string(scene.tgt.size()) + " tgt points, " +
             std::to_string(scene.correspondences.size()) + " shared) to " + out_dir);
}

// Fast internal oracle checks; any miss is an internal error. Each check
// prints one line so failures are attributable from the output alone.
void cmd_selftest() {
    std::vector<std::pair<std::string, bool>> results;
    const auto check = [&](const std::string& name, bool ok) {
        results.emplace_back(name, ok);
        std::cout << (ok ? "ok " : "FAILED ") << name << "\n";
    };

    {
        SceneSpec spec;
        spec.n_points = 120;
        spec.max_rotation_degrees = 170.0;
        spec.max_translation = 3.0;
        spec.rng_seed = 4242;
        const ScenePair scene = generate_pair(spec);
        const PointCorrespondences corrs =
            corrupt_correspondences(scene.correspondences, 0.0, scene.tgt, 1);
        const PoseEstimate estimate = dism_solve(corrs, scene.src, scene.tgt, 0.5);
        const RigidTransform& gt = scene.ground_truth;
        const double angle = rotation_angle(estimate.transform.rotation, gt.rotation);
        const double dt = std::hypot(estimate.transform.translation[0] - gt.translation[0],
                                     estimate.transform.translation[1] - gt.translation[1],
                                     estimate.transform.translation[2] - gt.translation[2]);
        check("pose recovery on clean correspondences", angle < 1e-7 && dt < 1e-7);
    }
    {
        Rng rng(555);
        Matrix scores(16, 16);
        for (std::size_t r = 0; r < 16; ++r)
            for (std::size_t c = 0; c < 16; ++c) scores(r, c) = rng.uniform(-1, 1);
        const Matrix z = sinkhorn_normalize(scores, 200);
        double worst = 0.0;
        for (std::size_t r = 0; r < 16; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 16; ++c) sum += z(r, c);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        for (std::size_t c = 0; c < 16; ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < 16; ++r) sum += z(r, c);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        check("doubly stochastic matching marginals", worst < 1e-6);
    }
    {
        Rng rng(77);
        Matrix feats(24, 8);
        for (std::size_t r = 0; r < 24; ++r)
            for (std::size_t c = 0; c < 8; ++c) feats(r, c) = rng.uniform(-1, 1);
        Rng layer_rng(78);
        const DecoupleResult d = decouple(feats, make_linear(layer_rng, 16, 8));
        double worst = 0.0;
        for (std::size_t r = 0; r < 24; ++r)
            for (std::size_t c = 0; c < 8; ++c)
                worst = std::max(worst, std::abs(d.projection(r, c) + d.residual(r, c) -
                                                 feats(r, c)));
        check("feature decoupling reconstructs its input", worst < 1e-12);
    }
    {
        Rng rng(91);
        std::vector<double> scores(32);
        for (double& s : scores) s = rng.uniform(0, 1);
        Matrix feats(32, 8);
        for (std::size_t r = 0; r < 32; ++r)
            for (std::size_t c = 0; c < 8; ++c) feats(r, c) = rng.uniform(-1, 1);
        const SpectralConvResult conv = spectral_conv(feats, build_adjacency(scores));
        check("graph propagation operator is contractive",
              spectral_radius_bound(conv.laplacian) <= 1.0 + 1e-9);
    }
    {
        const auto path = std::filesystem::temp_directory_path() / "mdreg_selftest.ply";
        Rng rng(13);
        PointCloud cloud;
        for (std::size_t i = 0; i < 64; ++i)
            cloud.points.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
        save_ply(cloud, path.string(), PlyFormat::binary_little_endian);
        const PointCloud back = load_ply(path.string());
        std::filesystem::remove(path);
        check("binary cloud round trip is bitwise stable",
              back.size() == cloud.size() && back.points == cloud.points);
    }
    {
        SceneSpec spec;
        spec.n_points = 400;
        spec.noise_sigma = 0.003;
        spec.overlap_fraction = 0.8;
        spec.max_rotation_degrees = 50.0;
        spec.rng_seed = 31337;
        const ScenePair scene = generate_pair(spec);
        const RegistrationResult result = register_clouds(scene.src, scene.tgt, RunConfig{});
        const double angle =
            rotation_angle(result.transform.rotation, scene.ground_truth.rotation);
        check("end-to-end registration on a synthetic pair",
              angle < 2.0 * 3.14159265358979 / 180.0);
    }

    for (const auto& [name, ok] : results)
        if (!ok) throw InternalError("selftest failed: " + name);
    std::cout << "all " << results.size() << " checks passed\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coarse-to-fine point-cloud registration toolkit"};
    app.require_subcommand(1);

    // register
    auto* reg = app.add_subcommand("register", "Register a source cloud onto a target cloud");
    std::string reg_src, reg_tgt, reg_config, reg_out = ".";
    reg->add_option("src", reg_src, "source cloud (.ply or .bin)")->required();
    reg->add_option("tgt", reg_tgt, "target cloud (.ply or .bin)")->required();
    reg->add_option("--config", reg_config, "run configuration file");
    reg->add_option("--out-dir", reg_out, "output directory (report.json, transform.txt)");
    ConfigFlags reg_flags;
    reg_flags.mirror_onto(reg);

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run the estimator benchmark grid");
    std::string bench_grid, bench_out;
    bench->add_option("grid", bench_grid, "benchmark grid file")->required();
    bench->add_option("out_dir", bench_out, "output directory")->required();
    ConfigFlags bench_flags;
    bench_flags.mirror_onto(bench);

    // synth
    auto* synth = app.add_subcommand("synth", "Emit a synthetic registration scene");
    std::size_t synth_n = 1000;
    double synth_noise = 0.0, synth_overlap = 1.0, synth_rot = 45.0, synth_trans = 1.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out = ".", synth_format = "ply";
    synth->add_option("--n_points", synth_n, "points in the source cloud");
    synth->add_option("--noise_sigma", synth_noise, "per-coordinate Gaussian noise");
    synth->add_option("--overlap_fraction", synth_overlap, "shared fraction after cropping");
    synth->add_option("--max_rotation_degrees", synth_rot, "rotation magnitude bound");
    synth->add_option("--max_translation", synth_trans, "translation length bound");
    synth->add_option("--seed", synth_seed, "scene RNG seed");
    synth->add_option("--out-dir", synth_out, "output directory");
    synth->add_option("--format", synth_format, "cloud format: ply or kitti");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "Run built-in oracle checks");

    CLI11_PARSE(app, argc, argv);

    if (reg->parsed())
        return run_guarded([&] { cmd_register(reg_src, reg_tgt, reg_config, reg_out,
                                              reg_flags, reg); });
    if (bench->parsed())
        return run_guarded([&] { cmd_benchmark(bench_grid, bench_out, bench_flags, bench); });
    if (synth->parsed())
        return run_guarded([&] {
            cmd_synth(synth_n, synth_noise, synth_overlap, synth_rot, synth_trans, synth_seed,
                      synth_out, synth_format);
        });
    if (selftest->parsed()) return run_guarded([&] { cmd_selftest(); });
    return 0;
}

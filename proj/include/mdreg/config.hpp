#ifndef MDREG_CONFIG_HPP
#define MDREG_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mdreg/global_graph.hpp"
#include "mdreg/matching.hpp"
#include "mdreg/metrics.hpp"

namespace mdreg {

enum class Estimator { dism, ransac, lgr };
enum class DecayMode { per_pair, uniform };

// Every tunable of the registration pipeline and the benchmark harness, one
// flat key per field. Zeros marked "auto" derive a data-dependent default at
// run time. validate_config enforces each consumer's preconditions up front,
// so a bad value fails at load time with the key named instead of mid-run.
struct RunConfig {
    // Point descriptors.
    std::size_t descriptor_k = 16;      // neighborhood size, >= 4
    std::uint64_t descriptor_seed = 17;

    // Patch hierarchy. 0 = auto: 0.1 * the larger bbox diagonal of the pair.
    double voxel_size = 0.0;

    // Graph aggregation over patch descriptors.
    std::size_t graph_k = 8;            // clamped to n_patches - 1 at run time
    std::uint64_t graph_seed = 29;
    NeighborSource graph_neighbor_source = NeighborSource::graph_features;

    // Context fusion. Gates default to 0 = identity branches, matching their
    // zero init under training.
    std::uint64_t fusion_seed = 43;
    double lambda_coord = 0.0;
    double lambda_feat = 0.0;
    double lambda_graph = 0.0;
    bool scaled_attention = false;

    // Coarse (patch) matching. patch_sigma 0 = auto: median pairwise feature
    // distance; patch_topk 0 = auto: min(64, pairs available). The pipeline
    // normalizes by the total sum so top-k keeps the k nearest feature pairs,
    // and patch_mutual drops pairs that are not each other's best selection.
    double patch_sigma = 0.0;
    std::size_t patch_topk = 0;
    PatchNormalization patch_normalization = PatchNormalization::global;
    bool patch_mutual = true;

    // Fine (point) matching. Pairs whose assignment confidence falls below
    // confidence_floor are dropped unless fewer than 16 would remain.
    std::size_t point_k = 3;
    std::size_t sinkhorn_iterations = 100;
    double sinkhorn_temperature = 0.1;
    double confidence_floor = 0.5;

    // Correspondence consistency vote: pairs must preserve pairwise distances
    // (within consistency_delta, 0 = auto: 0.01 * the larger bbox diagonal)
    // against at least consistency_keep of the best-supported pair's votes.
    // consistency_rounds 0 disables the filter.
    double consistency_delta = 0.0;
    double consistency_keep = 0.75;
    std::size_t consistency_rounds = 2;

    // Pose estimators. epsilon 0 = auto: 0.1 * the larger bbox diagonal.
    Estimator estimator = Estimator::dism;
    double epsilon = 0.0;
    std::size_t dism_iterations = 5;
    DecayMode decay_mode = DecayMode::per_pair;
    std::size_t ransac_max_iterations = 1000;
    double ransac_inlier_threshold = 0.1;
    double ransac_confidence = 0.999;
    std::uint64_t ransac_seed = 0;
    double lgr_threshold = 0.1;
    std::size_t lgr_rounds = 3;

    // Evaluation.
    double inlier_tau = 0.1;
    double rmse_tau = 0.2;
    double fmr_tau = 0.05;
    SuccessCriterion success_criterion = SuccessCriterion::rmse;

    // Benchmark harness.
    std::size_t workers = 4;
    bool include_timing = false; // false writes 0 wall time, keeping CSV bytes reproducible
};

// Throws ConfigError naming the offending key when any field violates its
// consumer's precondition.
void validate_config(const RunConfig& config);

// Flat key=value text: one pair per line, '#' starts a comment, blank lines
// ignored. Unknown keys, unparsable values, duplicate keys, and out-of-range
// values all throw ConfigError. Keys are exactly the RunConfig field names.
RunConfig parse_config(const std::string& text);

// parse_config over a file; IoError if unreadable.
RunConfig load_config(const std::string& path);

// Every key with its current value, parseable by parse_config. The output of
// the default-constructed config documents the defaults.
std::string serialize_config(const RunConfig& config);

// Lowercase token for an estimator, as used in config files and summaries.
const char* estimator_name(Estimator estimator);

// Inverse of estimator_name; unknown tokens throw ConfigError.
Estimator parse_estimator(const std::string& token);

// Every config key name, in serialization order. The CLI builds one flag per
// key from this list.
const std::vector<std::string>& config_key_names();

// Applies a single key=value assignment (the CLI flag path). ConfigError on
// unknown keys or unparsable values; range checking stays with
// validate_config so partial assignments can pass through intermediate
// states.
void set_config_key(RunConfig& config, const std::string& key, const std::string& value);

} // namespace mdreg

#endif

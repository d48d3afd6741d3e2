#ifndef MDREG_BASELINES_HPP
#define MDREG_BASELINES_HPP

#include <cstddef>
#include <cstdint>

#include "mdreg/matching.hpp"
#include "mdreg/point_cloud.hpp"
#include "mdreg/pose.hpp"

namespace mdreg {

struct RansacConfig {
    std::size_t max_iterations = 1000;
    double inlier_threshold = 0.1;
    std::uint64_t rng_seed = 0;
    double confidence = 0.999; // early exit once this success probability is reached
    static constexpr std::size_t kSampleSize = 3; // minimal rigid solve
};

struct RansacResult {
    RigidTransform transform;
    std::size_t best_inlier_count = 0;
    std::size_t iterations_run = 0;
    std::size_t degenerate_samples = 0; // collinear triples rejected before scoring
};

// Classic hypothesize-and-verify: sample 3 distinct pairs, solve the exact
// Kabsch problem, count residuals under the threshold, keep the best model
// (ties keep the earlier iteration), and refit on the winning inlier set.
// The iteration budget shrinks adaptively from the best inlier ratio at the
// configured confidence. Deterministic for a fixed config. Fewer than 3
// correspondences, or no model with at least 3 inliers, is a DegeneracyError;
// nonsensical config values are a ParameterError.
RansacResult ransac_solve(const PointCorrespondences& corrs, const PointCloud& src,
                          const PointCloud& tgt, const RansacConfig& cfg);

struct LgrResult {
    RigidTransform transform;
    std::size_t rounds_run = 0;
    // Set when a refinement round found fewer than 3 inliers (or a degenerate
    // inlier configuration); transform then holds the last valid fit.
    bool inlier_collapse = false;
};

// Local-to-global refinement: an initial confidence-weighted solve, then
// `rounds` of hard reselection (residual < threshold) and unweighted refit.
// threshold <= 0 is a ParameterError; fewer than 3 correspondences or a
// degenerate initial solve is a DegeneracyError.
LgrResult lgr_solve(const PointCorrespondences& corrs, const PointCloud& src,
                    const PointCloud& tgt, double threshold, std::size_t rounds);

} // namespace mdreg

#endif

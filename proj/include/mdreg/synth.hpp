#ifndef MDREG_SYNTH_HPP
#define MDREG_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "mdreg/matching.hpp"
#include "mdreg/point_cloud.hpp"
#include "mdreg/pose.hpp"

namespace mdreg {

// Scene recipe for the synthetic benchmark. Everything downstream is a pure
// function of this struct, so a run is reproducible from the spec alone.
struct SceneSpec {
    std::size_t n_points = 1000;
    double noise_sigma = 0.0;          // Gaussian, applied per target coordinate
    double outlier_fraction = 0.0;     // in [0, 1); consumed by corrupt_correspondences
    double overlap_fraction = 1.0;     // in (0, 1]; shared fraction after cropping
    double max_rotation_degrees = 45.0;
    double max_translation = 1.0;      // bound on the translation length
    std::uint64_t rng_seed = 0;
};

struct ScenePair {
    PointCloud src;
    PointCloud tgt;
    RigidTransform ground_truth;
    // (source index, target index) in the cropped clouds, ascending in both.
    std::vector<std::pair<std::size_t, std::size_t>> correspondences;
};

// Builds one registration instance: source points sampled from a mixture of
// planar, spherical, and uniform structure (so local geometry carries
// signal), a ground-truth motion bounded by the spec magnitudes, per-target
// Gaussian noise after the motion, and complementary half-space crops that
// keep an overlap_fraction band shared between the clouds. The surviving
// shared indices come back as ground-truth correspondences. Fully
// deterministic in rng_seed. A crop that leaves fewer than 10 shared points
// is retried with a fresh cut direction, at most 100 times, then raises
// DegeneracyError. Out-of-range spec fields raise ParameterError.
ScenePair generate_pair(const SceneSpec& spec);

// Re-aims floor(outlier_fraction * n) of the pairs, chosen by seeded shuffle,
// at a uniformly random other target index; every confidence is set to 1 so
// downstream weighting starts uncorrupted. Pair order is preserved, which
// keeps a bijection input sorted. fraction outside [0, 1), or a target cloud
// with fewer than 2 points when corruption is requested, raises
// ParameterError.
PointCorrespondences corrupt_correspondences(
    const std::vector<std::pair<std::size_t, std::size_t>>& gt_pairs, double outlier_fraction,
    const PointCloud& tgt, std::uint64_t seed);

} // namespace mdreg

#endif

#ifndef MDREG_PIPELINE_HPP
#define MDREG_PIPELINE_HPP

#include <cstddef>

#include "mdreg/config.hpp"
#include "mdreg/matching.hpp"
#include "mdreg/point_cloud.hpp"
#include "mdreg/pose.hpp"

namespace mdreg {

struct StageTimings {
    double descriptors = 0.0; // seconds
    double hierarchy = 0.0;
    double graph = 0.0;
    double fusion = 0.0;
    double matching = 0.0;
    double estimation = 0.0;
};

struct RegistrationResult {
    RigidTransform transform;
    PatchCorrespondences patch_pairs;
    PointCorrespondences point_pairs;
    std::size_t src_patches = 0;
    std::size_t tgt_patches = 0;
    StageTimings timings;
};

// Full coarse-to-fine registration: per-point descriptors (one shared seed,
// so both clouds use the same projection), voxel patch hierarchies, graph
// aggregation and three-domain context fusion over the patch features,
// Gaussian-correlation patch matching, Sinkhorn point matching inside the
// surviving patch pairs (on per-cloud mean-centered descriptors), then the
// configured pose estimator. Deterministic in (clouds, config). Module errors
// propagate with their type, prefixed by the failing stage's name.
RegistrationResult register_clouds(const PointCloud& src, const PointCloud& tgt,
                                   const RunConfig& config);

// Runs just the pose stage on an existing correspondence set with the
// config-selected estimator. epsilon 0 resolves to a tenth of the larger
// bounding-box diagonal, the same rule register_clouds applies. Solver errors
// propagate unprefixed.
RigidTransform estimate_pose(const PointCorrespondences& corrs, const PointCloud& src,
                             const PointCloud& tgt, const RunConfig& config);

} // namespace mdreg

#endif

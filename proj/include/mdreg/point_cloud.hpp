#ifndef MDREG_POINT_CLOUD_HPP
#define MDREG_POINT_CLOUD_HPP

#include <cstdint>
#include <vector>

#include "mdreg/linalg.hpp"

namespace mdreg {

// Per-row feature storage; row i belongs to point (or patch) i.
using FeatureMatrix = Matrix;

struct PointCloud {
    std::vector<Vec3> points;
    // Optional per-point features; empty or rows() == points.size().
    FeatureMatrix features;

    std::size_t size() const { return points.size(); }
};

// Length of the bounding-box diagonal; several defaults scale with it.
double bbox_diagonal(const PointCloud& cloud);

enum class Metric { euclidean, feature };

// Exact k-nearest-neighbor query by exhaustive scan: the query point itself
// is excluded, results are ascending by distance with ties broken toward the
// lower index. k must be in [1, N-1]; Metric::feature requires features
// attached to the cloud.
std::vector<std::size_t> knn(const PointCloud& cloud, std::size_t query_index, std::size_t k,
                             Metric metric = Metric::euclidean);

// Same contract over the rows of an arbitrary feature matrix (used to build
// neighborhood graphs in feature space).
std::vector<std::size_t> knn_rows(const FeatureMatrix& rows, std::size_t query_index,
                                  std::size_t k);

struct Patch {
    Vec3 center{0.0, 0.0, 0.0};       // centroid of the member points
    std::vector<std::size_t> members; // indices into the dense cloud
};

// Voxel-grid partition of a dense cloud. Every point belongs to exactly one
// patch; patch order is the first-occurrence order of the voxel cells, so the
// result is deterministic for a given input order.
struct PatchHierarchy {
    std::vector<Patch> patches;
    std::vector<std::size_t> point_to_patch;
    double voxel_size = 0.0;
};

PatchHierarchy voxel_downsample(const PointCloud& cloud, double voxel_size);

// Local geometry fingerprint, all entries invariant to rigid motion:
// eigenvalue shape ratios of the k-neighborhood covariance, the angle between
// the normal and the centroid offset, and the sorted neighbor-distance
// profile normalized by the k-th distance. Neighborhoods with fewer than
// three distinct points produce a zero row.
inline constexpr std::size_t kGeometricFeatureDim = 20;
FeatureMatrix geometric_features(const PointCloud& cloud, std::size_t k);

// 32-dim per-point descriptor: geometric_features lifted through a seeded
// random orthonormal projection and tanh. Deterministic in (cloud, k, seed);
// k >= 4 required.
inline constexpr std::size_t kDescriptorDim = 32;
FeatureMatrix compute_descriptors(const PointCloud& cloud, std::size_t k, std::uint64_t seed);

// Patch descriptor = mean of the member point descriptors.
FeatureMatrix patch_features(const PatchHierarchy& hierarchy, const FeatureMatrix& point_features);

// Patch centers as a cloud (keeps knn/feature plumbing uniform).
PointCloud patch_centers(const PatchHierarchy& hierarchy);

} // namespace mdreg

#endif

#ifndef MDREG_POSE_HPP
#define MDREG_POSE_HPP

#include <cstddef>
#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/matching.hpp"
#include "mdreg/point_cloud.hpp"

namespace mdreg {

struct RigidTransform {
    Rotation3 rotation;
    Vec3 translation{0.0, 0.0, 0.0};

    Vec3 apply(const Vec3& p) const {
        const Vec3 r = rotation.apply(p);
        return {r[0] + translation[0], r[1] + translation[1], r[2] + translation[2]};
    }
};

// Correspondences annotated with the evolving solver weights. weights[i] is
// the current w for pairs[i]; initial_weights keeps w0 = beta * gamma so the
// decay history stays auditable.
struct WeightedCorrespondences {
    PointCorrespondences correspondences;
    std::vector<double> weights;
    std::vector<double> initial_weights;
};

// Pairwise-distance compatibility per correspondence: d_i is the lower
// median over the other correspondences k of
// | |p_i - p_k| - |q_i - q_k| |, and beta_i = max(0, 1 - d_i^2 / epsilon^2),
// always in [0, 1]. A lone correspondence has nothing to compare against and
// gets beta = 1. epsilon <= 0 or an empty set is a ParameterError;
// out-of-range point indices are a ShapeError.
std::vector<double> geometric_compatibility(const PointCorrespondences& corrs,
                                            const PointCloud& src, const PointCloud& tgt,
                                            double epsilon);

// w0 = beta * gamma elementwise; current weights start at w0. Mismatched
// lengths are a ShapeError.
WeightedCorrespondences init_weights(const PointCorrespondences& corrs,
                                     const std::vector<double>& betas);

// Closed-form minimizer of the weighted point-to-point objective
// sum_i w_i |R p_i + t - q_i|^2 over rotations and translations: weighted
// centroids, cross-covariance H = sum w (p - p_mean)(q - q_mean)^T, SVD
// H = U S V^T, R = V diag(1, 1, det(V U^T)) U^T, t = q_mean - R p_mean. The
// determinant correction keeps R a proper rotation even for mirrored planar
// configurations. Fewer than 3 pairs with w > 0, or a (near-)collinear
// weighted source configuration, is a DegeneracyError; negative or non-finite
// weights are a ParameterError.
RigidTransform weighted_kabsch(const WeightedCorrespondences& corrs, const PointCloud& src,
                               const PointCloud& tgt);

// Geodesic distance on SO(3): arccos((trace(r1^T r2) - 1) / 2), clamped into
// [-1, 1] before arccos, so the result is in [0, pi]. Bitwise-identical
// inputs return exactly 0, which keeps fixed-point iterations exact instead
// of accumulating arccos noise near 1.
double rotation_angle(const Rotation3& r1, const Rotation3& r2);

struct PoseIteration {
    RigidTransform transform;    // estimate produced by this iteration's solve
    double theta = 0.0;          // rotation residual vs the previous estimate
    double history_weight = 0.0; // E(n) = 2n / (m (m + 1))
    std::vector<double> weights; // per-pair weights after this iteration's decay
};

struct PoseEstimate {
    RigidTransform transform;          // the last iteration's solve
    RigidTransform initial_transform;  // confidence-only bootstrap solve
    std::vector<double> initial_weights; // w0 = beta * gamma
    std::vector<PoseIteration> iterations; // entries n = 1..m
};

// History-aware iterative pose estimation. Iteration 0 solves with the raw
// matching confidences; the compatibility-gated weights w0 take over from
// iteration 1, and after each solve every active pair decays by
// exp(-E(n) * theta_n * rho_i) where theta_n is the rotation residual between
// consecutive estimates and rho_i is the pair's point-to-point error under
// the current estimate divided by the mean over active pairs
// (uniform_decay forces rho = 1, the scalar-residual variant). Weights below
// 1e-8 clamp to 0 and leave the consensus set. With iterations = 0 the
// bootstrap solve is returned with an empty trace. Clean input is a fixed
// point: every solve repeats bitwise, theta stays exactly 0, and the weights
// never move. Degeneracy errors from the solver propagate.
PoseEstimate dism_solve(const PointCorrespondences& corrs, const PointCloud& src,
                        const PointCloud& tgt, double epsilon, std::size_t iterations = 5,
                        bool uniform_decay = false);

} // namespace mdreg

#endif

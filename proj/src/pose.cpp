#include "mdreg/pose.hpp"

#include <algorithm>
#include <cmath>

#include "mdreg/errors.hpp"

namespace mdreg {

namespace {

double point_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void check_pair_indices(const PointCorrespondences& corrs, const PointCloud& src,
                        const PointCloud& tgt) {
    for (const PointPair& p : corrs.pairs)
        if (p.src >= src.size() || p.tgt >= tgt.size())
            throw ShapeError("correspondence indexes a point outside its cloud");
}

// Solve with an explicit weight vector; shared by the public overload and the
// iteration loop, which swaps weight vectors without rebuilding pair lists.
RigidTransform kabsch_with_weights(const PointCorrespondences& corrs,
                                   const std::vector<double>& weights, const PointCloud& src,
                                   const PointCloud& tgt) {
    if (weights.size() != corrs.pairs.size())
        throw ShapeError("weighted_kabsch: one weight per correspondence required");
    check_pair_indices(corrs, src, tgt);

    double weight_sum = 0.0;
    std::size_t active = 0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ParameterError("weighted_kabsch: weights must be finite and non-negative");
        if (w > 0.0) {
            ++active;
            weight_sum += w;
        }
    }
    if (active < 3)
        throw DegeneracyError("weighted_kabsch: need at least 3 positively weighted pairs");

    Vec3 src_mean{0.0, 0.0, 0.0};
    Vec3 tgt_mean{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const Vec3& p = src.points[corrs.pairs[i].src];
        const Vec3& q = tgt.points[corrs.pairs[i].tgt];
        for (int c = 0; c < 3; ++c) {
            src_mean[c] += weights[i] * p[c];
            tgt_mean[c] += weights[i] * q[c];
        }
    }
    for (int c = 0; c < 3; ++c) {
        src_mean[c] /= weight_sum;
        tgt_mean[c] /= weight_sum;
    }

    Matrix h(3, 3);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const Vec3& p = src.points[corrs.pairs[i].src];
        const Vec3& q = tgt.points[corrs.pairs[i].tgt];
        const Vec3 dp{p[0] - src_mean[0], p[1] - src_mean[1], p[2] - src_mean[2]};
        const Vec3 dq{q[0] - tgt_mean[0], q[1] - tgt_mean[1], q[2] - tgt_mean[2]};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) h(r, c) += weights[i] * dp[r] * dq[c];
    }

    const Svd3 svd = svd3(h);
    // Rank < 2 means the weighted consensus set is collinear (or coincident)
    // and the in-plane rotation component is unconstrained.
    if (!(svd.s[1] > 1e-12 * svd.s[0]) || svd.s[0] == 0.0)
        throw DegeneracyError("weighted_kabsch: collinear weighted configuration");

    const Matrix vut = matmul(svd.v, transpose(svd.u));
    const double det = vut(0, 0) * (vut(1, 1) * vut(2, 2) - vut(1, 2) * vut(2, 1)) -
                       vut(0, 1) * (vut(1, 0) * vut(2, 2) - vut(1, 2) * vut(2, 0)) +
                       vut(0, 2) * (vut(1, 0) * vut(2, 1) - vut(1, 1) * vut(2, 0));
    Matrix v_corrected = svd.v;
    if (det < 0.0)
        for (int r = 0; r < 3; ++r) v_corrected(r, 2) = -v_corrected(r, 2);
    const Matrix r = matmul(v_corrected, transpose(svd.u));

    RigidTransform out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.rotation(i, j) = r(i, j);
    out.rotation.validate();
    const Vec3 rotated = out.rotation.apply(src_mean);
    for (int c = 0; c < 3; ++c) out.translation[c] = tgt_mean[c] - rotated[c];
    return out;
}

} // namespace

std::vector<double> geometric_compatibility(const PointCorrespondences& corrs,
                                            const PointCloud& src, const PointCloud& tgt,
                                            double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("geometric_compatibility: epsilon must be positive");
    const std::size_t n = corrs.pairs.size();
    if (n == 0) throw ParameterError("geometric_compatibility: no correspondences");
    check_pair_indices(corrs, src, tgt);

    std::vector<double> betas(n, 1.0);
    if (n == 1) return betas;

    std::vector<double> diffs(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& pi = src.points[corrs.pairs[i].src];
        const Vec3& qi = tgt.points[corrs.pairs[i].tgt];
        std::size_t m = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            const double ds = point_distance(pi, src.points[corrs.pairs[k].src]);
            const double dt = point_distance(qi, tgt.points[corrs.pairs[k].tgt]);
            diffs[m++] = std::abs(ds - dt);
        }
        auto mid = diffs.begin() + static_cast<std::ptrdiff_t>((m - 1) / 2);
        std::nth_element(diffs.begin(), mid, diffs.end());
        const double d = *mid;
        betas[i] = std::max(0.0, 1.0 - (d * d) / (epsilon * epsilon));
    }
    return betas;
}

WeightedCorrespondences init_weights(const PointCorrespondences& corrs,
                                     const std::vector<double>& betas) {
    if (betas.size() != corrs.pairs.size())
        throw ShapeError("init_weights: one beta per correspondence required");
    WeightedCorrespondences out;
    out.correspondences = corrs;
    out.initial_weights.resize(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i)
        out.initial_weights[i] = betas[i] * corrs.pairs[i].confidence;
    out.weights = out.initial_weights;
    return out;
}

RigidTransform weighted_kabsch(const WeightedCorrespondences& corrs, const PointCloud& src,
                               const PointCloud& tgt) {
    return kabsch_with_weights(corrs.correspondences, corrs.weights, src, tgt);
}

double rotation_angle(const Rotation3& r1, const Rotation3& r2) {
    r1.validate();
    r2.validate();
    // Equal matrices must give exactly 0: the trace formula would feed arccos
    // a value a few ulps under 1, turning a fixed point into ~1e-8 noise.
    if (r1.m == r2.m) return 0.0;
    double trace = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) trace += r1(k, i) * r2(k, i);
    return std::acos(std::clamp((trace - 1.0) / 2.0, -1.0, 1.0));
}

PoseEstimate dism_solve(const PointCorrespondences& corrs, const PointCloud& src,
                        const PointCloud& tgt, double epsilon, std::size_t iterations,
                        bool uniform_decay) {
    if (corrs.pairs.size() < 3)
        throw DegeneracyError("dism_solve: need at least 3 correspondences");

    const std::vector<double> betas = geometric_compatibility(corrs, src, tgt, epsilon);
    WeightedCorrespondences weighted = init_weights(corrs, betas);

    PoseEstimate out;
    out.initial_weights = weighted.initial_weights;

    // Bootstrap on raw confidences: the compatibility gate enters at
    // iteration 1, so the first history residual compares a gated solve
    // against an ungated one. On clean data the gate is exactly neutral
    // (beta = 1 bitwise) and every solve repeats the bootstrap.
    std::vector<double> confidence(corrs.pairs.size());
    for (std::size_t i = 0; i < corrs.pairs.size(); ++i) confidence[i] = corrs.pairs[i].confidence;
    out.initial_transform = kabsch_with_weights(corrs, confidence, src, tgt);
    out.transform = out.initial_transform;
    if (iterations == 0) return out;

    const double m = static_cast<double>(iterations);
    Rotation3 previous = out.initial_transform.rotation;
    std::vector<double> residuals(corrs.pairs.size());
    for (std::size_t n = 1; n <= iterations; ++n) {
        const RigidTransform estimate = kabsch_with_weights(corrs, weighted.weights, src, tgt);
        const double theta = rotation_angle(previous, estimate.rotation);
        const double history = 2.0 * static_cast<double>(n) / (m * (m + 1.0));

        double mean_residual = 0.0;
        std::size_t active = 0;
        for (std::size_t i = 0; i < corrs.pairs.size(); ++i) {
            if (weighted.weights[i] == 0.0) continue;
            const Vec3 moved = estimate.apply(src.points[corrs.pairs[i].src]);
            residuals[i] = point_distance(moved, tgt.points[corrs.pairs[i].tgt]);
            mean_residual += residuals[i];
            ++active;
        }
        mean_residual /= static_cast<double>(active);

        if (uniform_decay) {
            const double factor = std::exp(-history * theta);
            for (std::size_t i = 0; i < corrs.pairs.size(); ++i) {
                if (weighted.weights[i] == 0.0) continue;
                weighted.weights[i] *= factor;
                if (weighted.weights[i] < 1e-8) weighted.weights[i] = 0.0;
            }
        } else {
            for (std::size_t i = 0; i < corrs.pairs.size(); ++i) {
                if (weighted.weights[i] == 0.0) continue;
                const double rho = mean_residual > 0.0 ? residuals[i] / mean_residual : 1.0;
                weighted.weights[i] *= std::exp(-history * theta * rho);
                if (weighted.weights[i] < 1e-8) weighted.weights[i] = 0.0;
            }
        }

        PoseIteration entry;
        entry.transform = estimate;
        entry.theta = theta;
        entry.history_weight = history;
        entry.weights = weighted.weights;
        out.iterations.push_back(std::move(entry));

        out.transform = estimate;
        previous = estimate.rotation;
    }
    return out;
}

} // namespace mdreg

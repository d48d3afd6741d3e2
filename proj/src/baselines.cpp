#include "mdreg/baselines.hpp"

#include <cmath>
#include <vector>

#include "mdreg/errors.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

namespace {

double residual(const RigidTransform& t, const Vec3& p, const Vec3& q) {
    const Vec3 moved = t.apply(p);
    const double dx = moved[0] - q[0], dy = moved[1] - q[1], dz = moved[2] - q[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Unweighted Kabsch on a subset of the correspondences, reusing the weighted
// solver with a 0/1 mask.
RigidTransform fit_subset(const PointCorrespondences& corrs, const std::vector<char>& selected,
                          const PointCloud& src, const PointCloud& tgt) {
    WeightedCorrespondences wc;
    wc.correspondences = corrs;
    wc.weights.assign(corrs.pairs.size(), 0.0);
    for (std::size_t i = 0; i < corrs.pairs.size(); ++i)
        if (selected[i]) wc.weights[i] = 1.0;
    wc.initial_weights = wc.weights;
    return weighted_kabsch(wc, src, tgt);
}

} // namespace

RansacResult ransac_solve(const PointCorrespondences& corrs, const PointCloud& src,
                          const PointCloud& tgt, const RansacConfig& cfg) {
    if (!(cfg.inlier_threshold > 0.0))
        throw ParameterError("ransac_solve: inlier threshold must be positive");
    if (cfg.max_iterations == 0) throw ParameterError("ransac_solve: need at least one iteration");
    if (!(cfg.confidence > 0.0) || !(cfg.confidence < 1.0))
        throw ParameterError("ransac_solve: confidence must be in (0, 1)");
    const std::size_t n = corrs.pairs.size();
    if (n < RansacConfig::kSampleSize)
        throw DegeneracyError("ransac_solve: need at least 3 correspondences");

    Rng rng(cfg.rng_seed);
    RansacResult result;
    bool have_model = false;
    std::vector<char> best_inliers(n, 0);
    double required = static_cast<double>(cfg.max_iterations);

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        if (static_cast<double>(iter) >= required) break;
        ++result.iterations_run;

        std::size_t a = rng.uniform_index(0, n - 1);
        std::size_t b = a;
        while (b == a) b = rng.uniform_index(0, n - 1);
        std::size_t c = a;
        while (c == a || c == b) c = rng.uniform_index(0, n - 1);

        PointCorrespondences sample;
        sample.pairs = {corrs.pairs[a], corrs.pairs[b], corrs.pairs[c]};
        RigidTransform hypothesis;
        try {
            hypothesis = fit_subset(sample, std::vector<char>(3, 1), src, tgt);
        } catch (const DegeneracyError&) {
            ++result.degenerate_samples;
            continue;
        }

        std::size_t count = 0;
        for (const PointPair& pair : corrs.pairs)
            if (residual(hypothesis, src.points[pair.src], tgt.points[pair.tgt]) <
                cfg.inlier_threshold)
                ++count;
        if (count > result.best_inlier_count) {
            result.best_inlier_count = count;
            result.transform = hypothesis;
            have_model = true;
            // Standard adaptive bound: enough samples that an all-inlier draw
            // happened with probability `confidence`.
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double p_good = w * w * w;
            if (p_good >= 1.0)
                required = 0.0;
            else if (p_good > 0.0)
                required = std::log(1.0 - cfg.confidence) / std::log(1.0 - p_good);
        }
    }

    if (!have_model || result.best_inlier_count < RansacConfig::kSampleSize)
        throw DegeneracyError("ransac_solve: no model with at least 3 inliers");

    std::vector<char> inliers(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        inliers[i] = residual(result.transform, src.points[corrs.pairs[i].src],
                              tgt.points[corrs.pairs[i].tgt]) < cfg.inlier_threshold;
    result.transform = fit_subset(corrs, inliers, src, tgt);
    return result;
}

LgrResult lgr_solve(const PointCorrespondences& corrs, const PointCloud& src,
                    const PointCloud& tgt, double threshold, std::size_t rounds) {
    if (!(threshold > 0.0)) throw ParameterError("lgr_solve: threshold must be positive");
    if (corrs.pairs.size() < 3) throw DegeneracyError("lgr_solve: need at least 3 correspondences");

    WeightedCorrespondences initial;
    initial.correspondences = corrs;
    initial.weights.resize(corrs.pairs.size());
    for (std::size_t i = 0; i < corrs.pairs.size(); ++i)
        initial.weights[i] = corrs.pairs[i].confidence;
    initial.initial_weights = initial.weights;

    LgrResult result;
    result.transform = weighted_kabsch(initial, src, tgt);

    for (std::size_t round = 0; round < rounds; ++round) {
        std::vector<char> inliers(corrs.pairs.size(), 0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < corrs.pairs.size(); ++i) {
            inliers[i] = residual(result.transform, src.points[corrs.pairs[i].src],
                                  tgt.points[corrs.pairs[i].tgt]) < threshold;
            count += inliers[i] ? 1 : 0;
        }
        if (count < 3) {
            result.inlier_collapse = true;
            break;
        }
        try {
            result.transform = fit_subset(corrs, inliers, src, tgt);
        } catch (const DegeneracyError&) {
            result.inlier_collapse = true;
            break;
        }
        ++result.rounds_run;
    }
    return result;
}

} // namespace mdreg

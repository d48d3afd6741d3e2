#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "mdreg/baselines.hpp"
#include "mdreg/errors.hpp"
#include "mdreg/pose.hpp"
#include "mdreg/rng.hpp"
#include "support.hpp"

using namespace mdreg;
using namespace testsupport;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double half_extent = 2.0) {
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-half_extent, half_extent),
                                rng.uniform(-half_extent, half_extent),
                                rng.uniform(-half_extent, half_extent)});
    return cloud;
}

PointCloud transformed(const PointCloud& cloud, const Rotation3& r, const Vec3& t) {
    PointCloud out;
    for (const Vec3& p : cloud.points) {
        const Vec3 q = r.apply(p);
        out.points.push_back({q[0] + t[0], q[1] + t[1], q[2] + t[2]});
    }
    return out;
}

PointCorrespondences identity_pairs(std::size_t n, double confidence = 1.0) {
    PointCorrespondences corrs;
    for (std::size_t i = 0; i < n; ++i) corrs.pairs.push_back({i, i, confidence});
    return corrs;
}

// Re-aim a subset of targets at random scene positions; returns the instance.
struct ContaminatedInstance {
    PointCloud src;
    PointCloud tgt;
    Rotation3 rotation;
    Vec3 shift;
};

ContaminatedInstance contaminated(Rng& rng, std::size_t n, std::size_t outliers) {
    ContaminatedInstance inst;
    inst.src = random_cloud(rng, n);
    inst.rotation = random_rotation(rng);
    inst.shift = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    inst.tgt = transformed(inst.src, inst.rotation, inst.shift);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(0, i)]);
    for (std::size_t o = 0; o < outliers; ++o) {
        const Vec3 p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        const Vec3 q = inst.rotation.apply(p);
        inst.tgt.points[order[o]] = {q[0] + inst.shift[0], q[1] + inst.shift[1],
                                     q[2] + inst.shift[2]};
    }
    return inst;
}

double translation_error(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

TEST_SUITE_BEGIN("baselines");

TEST_CASE("ransac recovers the exact transform from clean pairs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(700 + seed);
        const PointCloud src = random_cloud(rng, 50);
        const Rotation3 rot = random_rotation(rng);
        const Vec3 shift{0.4, -1.0, 0.7};
        const PointCloud tgt = transformed(src, rot, shift);
        RansacConfig cfg;
        cfg.rng_seed = seed;
        const RansacResult r = ransac_solve(identity_pairs(50), src, tgt, cfg);
        CHECK(rotation_angle_oracle(r.transform.rotation, rot) < 1e-6);
        CHECK(translation_error(r.transform.translation, shift) < 1e-6);
        CHECK(r.best_inlier_count == 50);
        CHECK(r.iterations_run <= cfg.max_iterations);
    }
}

TEST_CASE("ransac is robust to half the pairs being outliers") {
    std::size_t successes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(7100 + seed);
        const ContaminatedInstance inst = contaminated(rng, 200, 100);
        RansacConfig cfg;
        cfg.rng_seed = seed;
        cfg.max_iterations = 1000;
        cfg.inlier_threshold = 0.1;
        const RansacResult r = ransac_solve(identity_pairs(200), inst.src, inst.tgt, cfg);
        if (rotation_angle_oracle(r.transform.rotation, inst.rotation) < 0.017453292519943295)
            ++successes;
    }
    CHECK(successes >= 95);
}

TEST_CASE("ransac rejects collinear samples and still solves") {
    Rng rng(702);
    PointCloud src;
    for (int i = 0; i < 16; ++i) // dominant line makes collinear triples common
        src.points.push_back({0.3 * i, -0.2 * i, 0.5 * i});
    src.points.push_back({2.0, 3.0, 0.0});
    src.points.push_back({-1.0, 2.0, 1.0});
    src.points.push_back({1.5, -2.5, 2.0});
    src.points.push_back({-2.0, -1.0, -3.0});
    const Rotation3 rot = random_rotation(rng);
    const Vec3 shift{0.3, 0.9, -0.4};
    const PointCloud tgt = transformed(src, rot, shift);

    RansacConfig cfg;
    cfg.rng_seed = 11;
    cfg.max_iterations = 200;
    const RansacResult r = ransac_solve(identity_pairs(src.size()), src, tgt, cfg);
    CHECK(r.degenerate_samples > 0);
    CHECK(rotation_angle_oracle(r.transform.rotation, rot) < 1e-6);
}

TEST_CASE("ransac is deterministic for a fixed seed and validates config") {
    Rng rng(703);
    const ContaminatedInstance inst = contaminated(rng, 60, 20);
    RansacConfig cfg;
    cfg.rng_seed = 42;
    const RansacResult a = ransac_solve(identity_pairs(60), inst.src, inst.tgt, cfg);
    const RansacResult b = ransac_solve(identity_pairs(60), inst.src, inst.tgt, cfg);
    CHECK(a.best_inlier_count == b.best_inlier_count);
    CHECK(a.iterations_run == b.iterations_run);
    for (int c = 0; c < 9; ++c) CHECK(a.transform.rotation.m[c] == b.transform.rotation.m[c]);
    for (int c = 0; c < 3; ++c) CHECK(a.transform.translation[c] == b.transform.translation[c]);

    RansacConfig bad = cfg;
    bad.inlier_threshold = 0.0;
    CHECK_THROWS_AS(ransac_solve(identity_pairs(60), inst.src, inst.tgt, bad), ParameterError);
    bad = cfg;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(ransac_solve(identity_pairs(60), inst.src, inst.tgt, bad), ParameterError);
    bad = cfg;
    bad.confidence = 1.0;
    CHECK_THROWS_AS(ransac_solve(identity_pairs(60), inst.src, inst.tgt, bad), ParameterError);
    CHECK_THROWS_AS(ransac_solve(identity_pairs(2), inst.src, inst.tgt, cfg), DegeneracyError);
}

TEST_CASE("ransac reports degeneracy when no rigid model fits") {
    PointCloud src, tgt;
    Rng rng(704);
    for (int i = 0; i < 5; ++i) {
        const Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        src.points.push_back(p);
        tgt.points.push_back({2.0 * p[0], 2.0 * p[1], 2.0 * p[2]}); // scaling is not rigid
    }
    RansacConfig cfg;
    cfg.inlier_threshold = 1e-6;
    cfg.max_iterations = 50;
    CHECK_THROWS_AS(ransac_solve(identity_pairs(5), src, tgt, cfg), DegeneracyError);
}

TEST_CASE("lgr recovers a clean transform in one round") {
    Rng rng(705);
    const PointCloud src = random_cloud(rng, 30);
    const Rotation3 rot = random_rotation(rng);
    const Vec3 shift{-0.6, 0.2, 1.4};
    const PointCloud tgt = transformed(src, rot, shift);
    const LgrResult r = lgr_solve(identity_pairs(30), src, tgt, 0.1, 1);
    CHECK(!r.inlier_collapse);
    CHECK(r.rounds_run == 1);
    CHECK(rotation_angle_oracle(r.transform.rotation, rot) < 1e-9);
    CHECK(translation_error(r.transform.translation, shift) < 1e-9);
}

TEST_CASE("lgr refinement does not lose to its own initial fit") {
    std::size_t wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(7200 + seed);
        const ContaminatedInstance inst = contaminated(rng, 100, 30);
        const PointCorrespondences corrs = identity_pairs(100);

        WeightedCorrespondences flat;
        flat.correspondences = corrs;
        flat.weights.assign(100, 1.0);
        flat.initial_weights = flat.weights;
        const RigidTransform initial = weighted_kabsch(flat, inst.src, inst.tgt);

        const LgrResult refined = lgr_solve(corrs, inst.src, inst.tgt, 0.3, 3);
        const double err_initial = rotation_angle_oracle(initial.rotation, inst.rotation);
        const double err_refined = rotation_angle_oracle(refined.transform.rotation, inst.rotation);
        if (err_refined <= err_initial) ++wins;
    }
    CHECK(wins >= 90);
}

TEST_CASE("lgr flags inlier collapse when noise exceeds the threshold") {
    Rng rng(706);
    const PointCloud src = random_cloud(rng, 25);
    const Rotation3 rot = random_rotation(rng);
    PointCloud tgt = transformed(src, rot, {0.5, -0.3, 0.1});
    for (Vec3& p : tgt.points)
        for (int c = 0; c < 3; ++c) p[c] += rng.uniform(0.05, 0.15) * (rng.uniform() < 0.5 ? -1 : 1);

    const LgrResult r = lgr_solve(identity_pairs(25), src, tgt, 1e-6, 3);
    CHECK(r.inlier_collapse);
    CHECK(r.rounds_run == 0);
    // The last valid fit is the initial confidence-weighted solve.
    WeightedCorrespondences flat;
    flat.correspondences = identity_pairs(25);
    flat.weights.assign(25, 1.0);
    flat.initial_weights = flat.weights;
    const RigidTransform initial = weighted_kabsch(flat, src, tgt);
    for (int c = 0; c < 9; ++c) CHECK(r.transform.rotation.m[c] == initial.rotation.m[c]);

    CHECK_THROWS_AS(lgr_solve(identity_pairs(25), src, tgt, 0.0, 3), ParameterError);
    CHECK_THROWS_AS(lgr_solve(identity_pairs(2), src, tgt, 0.1, 3), DegeneracyError);
}

TEST_CASE("all three estimators agree on clean input") {
    Rng rng(707);
    const PointCloud src = random_cloud(rng, 80);
    const Rotation3 rot = random_rotation(rng);
    const Vec3 shift{1.1, -0.9, 0.3};
    const PointCloud tgt = transformed(src, rot, shift);
    const PointCorrespondences corrs = identity_pairs(80);
    const double epsilon = 0.1 * bbox_diagonal(src);

    const PoseEstimate dism = dism_solve(corrs, src, tgt, epsilon, 5);
    RansacConfig cfg;
    cfg.rng_seed = 9;
    const RansacResult ransac = ransac_solve(corrs, src, tgt, cfg);
    const LgrResult lgr = lgr_solve(corrs, src, tgt, 0.1, 3);

    CHECK(rotation_angle_oracle(dism.transform.rotation, ransac.transform.rotation) < 1e-6);
    CHECK(rotation_angle_oracle(dism.transform.rotation, lgr.transform.rotation) < 1e-6);
    CHECK(translation_error(dism.transform.translation, ransac.transform.translation) < 1e-6);
    CHECK(translation_error(dism.transform.translation, lgr.transform.translation) < 1e-6);
}

TEST_SUITE_END();

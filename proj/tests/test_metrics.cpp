#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "mdreg/errors.hpp"
#include "mdreg/metrics.hpp"
#include "mdreg/rng.hpp"
#include "support.hpp"

using namespace mdreg;
using namespace testsupport;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double half_extent = 2.0) {
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-half_extent, half_extent),
                                rng.uniform(-half_extent, half_extent),
                                rng.uniform(-half_extent, half_extent)});
    return cloud;
}

PointCloud transformed(const PointCloud& cloud, const RigidTransform& t) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
    return out;
}

PointCorrespondences identity_pairs(std::size_t n, double confidence = 1.0) {
    PointCorrespondences corrs;
    for (std::size_t i = 0; i < n; ++i) corrs.pairs.push_back({i, i, confidence});
    return corrs;
}

RigidTransform random_transform(Rng& rng, double max_angle = 3.0, double shift = 1.5) {
    RigidTransform t;
    t.rotation = random_rotation(rng, max_angle);
    t.translation = {rng.uniform(-shift, shift), rng.uniform(-shift, shift),
                     rng.uniform(-shift, shift)};
    return t;
}

double point_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("matching transforms score zero error and full inliers") {
    Rng rng(8100);
    const PointCloud src = random_cloud(rng, 30);
    const RigidTransform gt = random_transform(rng);
    const PointCloud tgt = transformed(src, gt);
    const PointCorrespondences corrs = identity_pairs(src.size());

    const PairEvaluation eval = evaluate_pair(corrs, gt, gt, src, tgt, 0.1, 0.2);
    CHECK(eval.rre == 0.0);
    CHECK(eval.rte == 0.0);
    CHECK(eval.inlier_ratio == 1.0);
    REQUIRE(eval.inlier_flags.size() == src.size());
    for (std::size_t i = 0; i < eval.inlier_flags.size(); ++i) CHECK(eval.inlier_flags[i]);
    CHECK(eval.registration_success);
}

TEST_CASE("hand built four correspondence set flags two inliers") {
    Rng rng(8101);
    const RigidTransform gt = random_transform(rng);
    PointCloud src;
    src.points = {{0.0, 0.0, 0.0}, {3.0, 0.0, 0.0}, {0.0, 3.0, 0.0}, {0.0, 0.0, 3.0}};
    // Offsets of known norm applied after the ground-truth motion, so the
    // per-pair ground-truth distance is the offset length up to rounding.
    const std::vector<Vec3> offsets = {
        {0.05, 0.0, 0.0}, {0.0, 0.2, 0.0}, {0.0, 0.0, 0.099}, {0.3, 0.0, 0.0}};
    PointCloud tgt;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 moved = gt.apply(src.points[i]);
        tgt.points.push_back(
            {moved[0] + offsets[i][0], moved[1] + offsets[i][1], moved[2] + offsets[i][2]});
    }
    const PointCorrespondences corrs = identity_pairs(4);
    const double tau = 0.1;

    const PairEvaluation eval = evaluate_pair(corrs, gt, gt, src, tgt, tau, 0.2);
    REQUIRE(eval.inlier_flags.size() == 4);
    std::vector<double> gt_distance;
    for (std::size_t i = 0; i < 4; ++i) {
        gt_distance.push_back(point_distance(gt.apply(src.points[i]), tgt.points[i]));
        CHECK(eval.inlier_flags[i] == (gt_distance[i] < tau));
    }
    CHECK(eval.inlier_flags[0]);
    CHECK_FALSE(eval.inlier_flags[1]);
    CHECK(eval.inlier_flags[2]);
    CHECK_FALSE(eval.inlier_flags[3]);
    CHECK(eval.inlier_ratio == 0.5);

    // The two inliers are also the only ground-truth overlap pairs, so the
    // success RMSE is computable by hand from their distances.
    const double rmse =
        std::sqrt((gt_distance[0] * gt_distance[0] + gt_distance[2] * gt_distance[2]) / 2.0);
    CHECK(eval.registration_success == (rmse < 0.2));
    CHECK(eval.registration_success);

    CHECK_THROWS_AS(evaluate_pair(corrs, gt, gt, src, tgt, 0.0, 0.2), ParameterError);
    CHECK_THROWS_AS(evaluate_pair(corrs, gt, gt, src, tgt, 0.1, -1.0), ParameterError);
    PointCorrespondences bad = corrs;
    bad.pairs.push_back({0, 99, 1.0});
    CHECK_THROWS_AS(evaluate_pair(bad, gt, gt, src, tgt, 0.1, 0.2), ShapeError);
}

TEST_CASE("registration success thresholds the overlap alignment error") {
    Rng rng(8102);
    const PointCloud src = random_cloud(rng, 40);
    const RigidTransform gt = random_transform(rng);
    const PointCloud tgt = transformed(src, gt);

    // Shift the estimated translation by a vector of length 0.15: every
    // overlap residual equals that length, hence so does the RMSE.
    RigidTransform estimated = gt;
    estimated.translation[0] += 0.09;
    estimated.translation[1] += 0.12;

    const PointCorrespondences corrs = identity_pairs(src.size());
    const PairEvaluation loose = evaluate_pair(corrs, estimated, gt, src, tgt, 0.1, 0.2);
    CHECK(loose.registration_success);
    CHECK(std::abs(loose.rte - 0.15) < 1e-12);
    const PairEvaluation tight = evaluate_pair(corrs, estimated, gt, src, tgt, 0.1, 0.1);
    CHECK_FALSE(tight.registration_success);

    // Success comes from the clouds and the ground truth, not from the
    // correspondence list: an empty list only zeroes the inlier metrics.
    const PairEvaluation empty =
        evaluate_pair(PointCorrespondences{}, estimated, gt, src, tgt, 0.1, 0.2);
    CHECK(empty.inlier_ratio == 0.0);
    CHECK(empty.inlier_flags.empty());
    CHECK(empty.registration_success);
}

TEST_CASE("no ground truth overlap means failure") {
    Rng rng(8103);
    const PointCloud src = random_cloud(rng, 25);
    PointCloud tgt = src;
    for (Vec3& p : tgt.points) {
        p[0] += 100.0;
        p[1] += 100.0;
        p[2] += 100.0;
    }
    const RigidTransform identity;
    const PointCorrespondences corrs = identity_pairs(src.size());

    const PairEvaluation eval = evaluate_pair(corrs, identity, identity, src, tgt, 0.1, 0.2);
    CHECK(eval.rre == 0.0);
    CHECK(eval.rte == 0.0);
    CHECK(eval.inlier_ratio == 0.0);
    for (std::size_t i = 0; i < eval.inlier_flags.size(); ++i) CHECK_FALSE(eval.inlier_flags[i]);
    CHECK_FALSE(eval.registration_success);
}

TEST_CASE("threshold criterion gates on angle and translation") {
    Rng rng(8104);
    const PointCloud src = random_cloud(rng, 10);
    const PointCloud tgt = src;
    const PointCorrespondences corrs = identity_pairs(src.size());
    const RigidTransform gt;
    const double deg = 3.14159265358979324 / 180.0;

    RigidTransform est;
    est.rotation = axis_angle_rotation({0.0, 0.0, 1.0}, 4.0 * deg);
    est.translation = {1.9, 0.0, 0.0};
    const PairEvaluation ok =
        evaluate_pair(corrs, est, gt, src, tgt, 0.1, 0.2, SuccessCriterion::thresholds);
    CHECK(std::abs(ok.rre - 4.0) < 1e-9);
    CHECK(std::abs(ok.rte - 1.9) < 1e-12);
    CHECK(ok.registration_success);

    est.rotation = axis_angle_rotation({0.0, 0.0, 1.0}, 6.0 * deg);
    const PairEvaluation wide_angle =
        evaluate_pair(corrs, est, gt, src, tgt, 0.1, 0.2, SuccessCriterion::thresholds);
    CHECK(std::abs(wide_angle.rre - 6.0) < 1e-9);
    CHECK_FALSE(wide_angle.registration_success);

    est.rotation = axis_angle_rotation({0.0, 0.0, 1.0}, 4.0 * deg);
    est.translation = {2.1, 0.0, 0.0};
    const PairEvaluation long_shift =
        evaluate_pair(corrs, est, gt, src, tgt, 0.1, 0.2, SuccessCriterion::thresholds);
    CHECK_FALSE(long_shift.registration_success);
}

TEST_CASE("correspondence order does not change the metrics") {
    Rng rng(8105);
    const PointCloud src = random_cloud(rng, 60);
    const RigidTransform gt = random_transform(rng);
    PointCloud tgt = transformed(src, gt);
    // Break a third of the pairs so both flag values appear.
    for (std::size_t i = 0; i < 20; ++i) {
        tgt.points[i][0] += 5.0 + rng.uniform(0.0, 1.0);
        tgt.points[i][2] -= 3.0;
    }
    const PointCorrespondences corrs = identity_pairs(src.size());

    std::vector<std::size_t> perm(corrs.pairs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_index(0, i - 1)]);
    PointCorrespondences shuffled;
    for (std::size_t i : perm) shuffled.pairs.push_back(corrs.pairs[i]);

    RigidTransform estimated = gt;
    estimated.translation[1] += 0.05;
    const PairEvaluation a = evaluate_pair(corrs, estimated, gt, src, tgt, 0.1, 0.2);
    const PairEvaluation b = evaluate_pair(shuffled, estimated, gt, src, tgt, 0.1, 0.2);
    CHECK(a.inlier_ratio == b.inlier_ratio);
    CHECK(a.rre == b.rre);
    CHECK(a.rte == b.rte);
    CHECK(a.registration_success == b.registration_success);
    REQUIRE(b.inlier_flags.size() == perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(b.inlier_flags[i] == a.inlier_flags[perm[i]]);
}

TEST_CASE("rotation and translation errors are symmetric in their arguments") {
    Rng rng(8106);
    const PointCloud src = random_cloud(rng, 15);
    const PointCloud tgt = src;
    const PointCorrespondences corrs = identity_pairs(src.size());
    for (int rep = 0; rep < 20; ++rep) {
        const RigidTransform a = random_transform(rng);
        const RigidTransform b = random_transform(rng);
        const PairEvaluation ab = evaluate_pair(corrs, a, b, src, tgt, 0.1, 0.2);
        const PairEvaluation ba = evaluate_pair(corrs, b, a, src, tgt, 0.1, 0.2);
        CHECK(ab.rre == ba.rre);
        CHECK(ab.rte == ba.rte);
    }
}

TEST_CASE("recall and matching recall on trivial batches") {
    std::vector<PairEvaluation> all_good(4);
    for (PairEvaluation& eval : all_good) {
        eval.registration_success = true;
        eval.rre = 1.0;
        eval.rte = 0.5;
    }
    CHECK(aggregate(all_good).registration_recall == 1.0);

    std::vector<PairEvaluation> straddle(2);
    straddle[0].inlier_ratio = 0.04;
    straddle[1].inlier_ratio = 0.06;
    const BenchmarkReport report = aggregate(straddle, 0.05);
    CHECK(report.feature_matching_recall == 0.5);
    CHECK(report.registration_recall == 0.0);
    CHECK(report.mean_rre == 0.0);
    CHECK(report.median_rre == 0.0);
    CHECK(report.mean_rte == 0.0);
    CHECK(report.median_rte == 0.0);
}

TEST_CASE("aggregate matches an independent recomputation") {
    Rng rng(8107);
    std::vector<PairEvaluation> evals(100);
    for (PairEvaluation& eval : evals) {
        eval.rre = rng.uniform(0.0, 180.0);
        eval.rte = rng.uniform(0.0, 3.0);
        eval.inlier_ratio = rng.uniform(0.0, 1.0);
        eval.registration_success = (rng.bits() & 1) != 0;
    }
    const double fmr_tau = 0.4;
    const BenchmarkReport report = aggregate(evals, fmr_tau);

    std::size_t successes = 0, matched = 0;
    std::vector<double> rre, rte;
    for (const PairEvaluation& eval : evals) {
        if (eval.inlier_ratio > fmr_tau) ++matched;
        if (eval.registration_success) {
            ++successes;
            rre.push_back(eval.rre);
            rte.push_back(eval.rte);
        }
    }
    REQUIRE(successes > 10);
    CHECK(report.registration_recall == static_cast<double>(successes) / 100.0);
    CHECK(report.feature_matching_recall == static_cast<double>(matched) / 100.0);

    // Independent mean and median: descending sort, middles picked from the
    // top end, so the arithmetic path differs from the implementation.
    const auto mean_of = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        return sum / static_cast<double>(v.size());
    };
    const auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end(), std::greater<double>());
        const std::size_t n = v.size();
        if (n % 2 == 1) return v[n / 2];
        return (v[n / 2 - 1] + v[n / 2]) / 2.0;
    };
    CHECK(std::abs(report.mean_rre - mean_of(rre)) < 1e-12);
    CHECK(std::abs(report.median_rre - median_of(rre)) < 1e-12);
    CHECK(std::abs(report.mean_rte - mean_of(rte)) < 1e-12);
    CHECK(std::abs(report.median_rte - median_of(rte)) < 1e-12);

    // Odd and even success counts pin the two median branches.
    std::vector<PairEvaluation> odd(3);
    for (std::size_t i = 0; i < odd.size(); ++i) {
        odd[i].registration_success = true;
        odd[i].rre = static_cast<double>(10 * (i + 1)); // 10, 20, 30
        odd[i].rte = static_cast<double>(i + 1);
    }
    CHECK(aggregate(odd).median_rre == 20.0);
    PairEvaluation fourth;
    fourth.registration_success = true;
    fourth.rre = 40.0;
    fourth.rte = 4.0;
    std::vector<PairEvaluation> even = odd;
    even.push_back(fourth);
    CHECK(aggregate(even).median_rre == 25.0);
    CHECK(aggregate(even).median_rte == 2.5);
}

TEST_CASE("aggregate validates its inputs") {
    CHECK_THROWS_AS(aggregate({}), ParameterError);
    std::vector<PairEvaluation> one(1);
    CHECK_THROWS_AS(aggregate(one, 1.5), ParameterError);
    CHECK_THROWS_AS(aggregate(one, -0.1), ParameterError);
}

TEST_CASE("report serializes to json and parses back") {
    std::vector<PairEvaluation> evals(2);
    evals[0].rre = 1.25;
    evals[0].rte = 0.375;
    evals[0].inlier_ratio = 0.75;
    evals[0].inlier_flags = {true, true, true, false};
    evals[0].registration_success = true;
    evals[1].rre = 90.0;
    evals[1].rte = 2.5;
    evals[1].inlier_ratio = 0.0;
    evals[1].inlier_flags = {false, false};
    evals[1].registration_success = false;

    const BenchmarkReport report = aggregate(evals, 0.05);
    const nlohmann::json doc = nlohmann::json::parse(report_to_json(report));

    REQUIRE(doc.contains("pairs"));
    REQUIRE(doc.contains("aggregate"));
    REQUIRE(doc["pairs"].size() == 2);
    CHECK(doc["pairs"][0]["rre"].get<double>() == 1.25);
    CHECK(doc["pairs"][0]["rte"].get<double>() == 0.375);
    CHECK(doc["pairs"][0]["inlier_ratio"].get<double>() == 0.75);
    CHECK(doc["pairs"][0]["inlier_count"].get<std::size_t>() == 3);
    CHECK(doc["pairs"][0]["registration_success"].get<bool>());
    CHECK_FALSE(doc["pairs"][1]["registration_success"].get<bool>());

    const nlohmann::json& agg = doc["aggregate"];
    CHECK(agg["pair_count"].get<std::size_t>() == 2);
    CHECK(agg["registration_recall"].get<double>() == report.registration_recall);
    CHECK(agg["feature_matching_recall"].get<double>() == report.feature_matching_recall);
    CHECK(agg["mean_rre"].get<double>() == report.mean_rre);
    CHECK(agg["median_rre"].get<double>() == report.median_rre);
    CHECK(agg["mean_rte"].get<double>() == report.mean_rte);
    CHECK(agg["median_rte"].get<double>() == report.median_rte);
}

} // TEST_SUITE

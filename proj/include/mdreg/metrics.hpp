#ifndef MDREG_METRICS_HPP
#define MDREG_METRICS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mdreg/matching.hpp"
#include "mdreg/point_cloud.hpp"
#include "mdreg/pose.hpp"

namespace mdreg {

// Two registration-success conventions: an alignment RMSE gate over the
// ground-truth overlap (indoor protocols), or joint angle/translation
// thresholds (outdoor protocols).
enum class SuccessCriterion { rmse, thresholds };

// Gates for SuccessCriterion::thresholds.
inline constexpr double kSuccessRreDegrees = 5.0;
inline constexpr double kSuccessRteUnits = 2.0;

struct PairEvaluation {
    double rre = 0.0;               // rotation error vs ground truth, degrees, in [0, 180]
    double rte = 0.0;               // translation error vs ground truth, length units
    double inlier_ratio = 0.0;      // fraction of correspondences within inlier_tau, in [0, 1]
    std::vector<bool> inlier_flags; // per correspondence, same order as the input pairs
    bool registration_success = false;
};

// Scores an estimated transform against ground truth on one cloud pair.
// rre is the geodesic rotation distance in degrees and rte the Euclidean
// distance between the translations. A correspondence is an inlier when the
// ground truth carries its source point to within inlier_tau of its target
// point; an empty correspondence set gives inlier_ratio 0 with empty flags.
// Under the rmse criterion, registration succeeds when the RMSE of the
// estimated transform over the ground-truth overlap is below rmse_tau, where
// the overlap pairs each source point with its nearest target point whenever
// the ground truth brings them within inlier_tau (no such pairs means
// failure). Under the thresholds criterion it succeeds when rre < 5 degrees
// and rte < 2 units. Non-positive taus are a ParameterError; correspondence
// indices out of range are a ShapeError.
PairEvaluation evaluate_pair(const PointCorrespondences& corrs, const RigidTransform& estimated,
                             const RigidTransform& ground_truth, const PointCloud& src,
                             const PointCloud& tgt, double inlier_tau, double rmse_tau,
                             SuccessCriterion criterion = SuccessCriterion::rmse);

struct BenchmarkReport {
    std::vector<PairEvaluation> pairs;
    double registration_recall = 0.0;     // fraction of pairs whose registration succeeded
    double feature_matching_recall = 0.0; // fraction of pairs with inlier_ratio > fmr_tau
    double mean_rre = 0.0;                // over successful pairs; 0 when none succeeded
    double median_rre = 0.0;
    double mean_rte = 0.0;
    double median_rte = 0.0;
};

// Aggregates per-pair evaluations. Error means and medians cover only the
// successful pairs (failed registrations have unbounded errors) and are 0
// when nothing succeeded; the median of an even count averages the two middle
// values. An empty list or an fmr_tau outside [0, 1] is a ParameterError.
BenchmarkReport aggregate(const std::vector<PairEvaluation>& evals, double fmr_tau = 0.05);

// JSON document with a "pairs" array (objects with rre, rte, inlier_ratio,
// inlier_count, registration_success) and an "aggregate" object (pair_count,
// registration_recall, feature_matching_recall, mean_rre, median_rre,
// mean_rte, median_rte). Per-correspondence flags stay in memory only.
std::string report_to_json(const BenchmarkReport& report);

} // namespace mdreg

#endif

#include "mdreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "json.hpp"

#include "mdreg/errors.hpp"

namespace mdreg {

namespace {

double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

// RMSE of the estimated transform over the ground-truth overlap: every source
// point whose ground-truth image lands within inlier_tau of some target point,
// paired with the nearest such target. Returns false when the overlap is
// empty (nothing to certify the alignment with).
bool overlap_rmse(const RigidTransform& estimated, const RigidTransform& ground_truth,
                  const PointCloud& src, const PointCloud& tgt, double inlier_tau,
                  double* rmse_out) {
    const double tau_sq = inlier_tau * inlier_tau;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < src.points.size(); ++i) {
        const Vec3 image = ground_truth.apply(src.points[i]);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < tgt.points.size(); ++j) {
            const double d = squared_distance(image, tgt.points[j]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (best < tau_sq) {
            sum_sq += squared_distance(estimated.apply(src.points[i]), tgt.points[best_j]);
            ++count;
        }
    }
    if (count == 0) return false;
    *rmse_out = std::sqrt(sum_sq / static_cast<double>(count));
    return true;
}

double checked_mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

double checked_median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return (values[mid - 1] + values[mid]) / 2.0;
}

} // namespace

PairEvaluation evaluate_pair(const PointCorrespondences& corrs, const RigidTransform& estimated,
                             const RigidTransform& ground_truth, const PointCloud& src,
                             const PointCloud& tgt, double inlier_tau, double rmse_tau,
                             SuccessCriterion criterion) {
    if (!(inlier_tau > 0.0) || !std::isfinite(inlier_tau))
        throw ParameterError("evaluate_pair: inlier_tau must be positive and finite");
    if (!(rmse_tau > 0.0) || !std::isfinite(rmse_tau))
        throw ParameterError("evaluate_pair: rmse_tau must be positive and finite");

    PairEvaluation out;
    out.rre = rotation_angle(estimated.rotation, ground_truth.rotation) * (180.0 / std::numbers::pi);
    out.rte = std::sqrt(squared_distance(estimated.translation, ground_truth.translation));

    out.inlier_flags.reserve(corrs.pairs.size());
    std::size_t inliers = 0;
    for (const PointPair& pair : corrs.pairs) {
        if (pair.src >= src.points.size() || pair.tgt >= tgt.points.size())
            throw ShapeError("evaluate_pair: correspondence index out of range");
        const Vec3 image = ground_truth.apply(src.points[pair.src]);
        const bool inlier = squared_distance(image, tgt.points[pair.tgt]) < inlier_tau * inlier_tau;
        out.inlier_flags.push_back(inlier);
        if (inlier) ++inliers;
    }
    out.inlier_ratio = corrs.pairs.empty()
                           ? 0.0
                           : static_cast<double>(inliers) / static_cast<double>(corrs.pairs.size());

    if (criterion == SuccessCriterion::thresholds) {
        out.registration_success = out.rre < kSuccessRreDegrees && out.rte < kSuccessRteUnits;
    } else {
        double rmse = 0.0;
        out.registration_success =
            overlap_rmse(estimated, ground_truth, src, tgt, inlier_tau, &rmse) && rmse < rmse_tau;
    }
    return out;
}

BenchmarkReport aggregate(const std::vector<PairEvaluation>& evals, double fmr_tau) {
    if (evals.empty()) throw ParameterError("aggregate: need at least one evaluation");
    if (!(fmr_tau >= 0.0 && fmr_tau <= 1.0))
        throw ParameterError("aggregate: fmr_tau must lie in [0, 1]");

    BenchmarkReport report;
    report.pairs = evals;
    std::size_t successes = 0;
    std::size_t matched = 0;
    std::vector<double> rre;
    std::vector<double> rte;
    for (const PairEvaluation& eval : evals) {
        if (eval.inlier_ratio > fmr_tau) ++matched;
        if (eval.registration_success) {
            ++successes;
            rre.push_back(eval.rre);
            rte.push_back(eval.rte);
        }
    }
    const double n = static_cast<double>(evals.size());
    report.registration_recall = static_cast<double>(successes) / n;
    report.feature_matching_recall = static_cast<double>(matched) / n;
    report.mean_rre = checked_mean(rre);
    report.median_rre = checked_median(rre);
    report.mean_rte = checked_mean(rte);
    report.median_rte = checked_median(rte);
    return report;
}

std::string report_to_json(const BenchmarkReport& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const PairEvaluation& eval : report.pairs) {
        const std::size_t inlier_count = static_cast<std::size_t>(
            std::count(eval.inlier_flags.begin(), eval.inlier_flags.end(), true));
        pairs.push_back({{"rre", eval.rre},
                         {"rte", eval.rte},
                         {"inlier_ratio", eval.inlier_ratio},
                         {"inlier_count", inlier_count},
                         {"registration_success", eval.registration_success}});
    }
    const nlohmann::json doc = {
        {"pairs", std::move(pairs)},
        {"aggregate",
         {{"pair_count", report.pairs.size()},
          {"registration_recall", report.registration_recall},
          {"feature_matching_recall", report.feature_matching_recall},
          {"mean_rre", report.mean_rre},
          {"median_rre", report.median_rre},
          {"mean_rte", report.mean_rte},
          {"median_rte", report.median_rte}}}};
    return doc.dump(2);
}

} // namespace mdreg

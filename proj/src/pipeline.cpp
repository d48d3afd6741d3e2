#include "mdreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <cmath>
#include <string>
#include <vector>

#include "mdreg/baselines.hpp"
#include "mdreg/context_fusion.hpp"
#include "mdreg/errors.hpp"
#include "mdreg/global_graph.hpp"
#include "mdreg/nn.hpp"

namespace mdreg {

namespace {

// Re-throw a module error with the failing stage's name in front, keeping the
// original type so callers can still map it to an error category.
template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    const auto prefix = [name](const char* what) { return std::string(name) + ": " + what; };
    try {
        return fn();
    } catch (const ShapeError& e) {
        throw ShapeError(prefix(e.what()));
    } catch (const ParameterError& e) {
        throw ParameterError(prefix(e.what()));
    } catch (const DegeneracyError& e) {
        throw DegeneracyError(prefix(e.what()));
    } catch (const ParseError& e) {
        throw ParseError(prefix(e.what()));
    } catch (const IoError& e) {
        throw IoError(prefix(e.what()));
    }
}

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

double point_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Subtract the per-column mean. Raw descriptors live in a narrow cone (tanh
// outputs share signs), which flattens cosine contrast; centering restores it
// before the point-level similarity.
FeatureMatrix center_columns(const FeatureMatrix& m) {
    FeatureMatrix out = m;
    if (m.rows() == 0) return out;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
        mean /= static_cast<double>(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) -= mean;
    }
    return out;
}

constexpr std::size_t kCoordSignatureDim = 8;

// Per-patch geometry summary built only from distances and counts, so it is
// unchanged by a rigid motion of the whole cloud (up to crop asymmetry in the
// centroid). Scales are fixed by the shared voxel size, keeping the two
// clouds of a pair comparable.
FeatureMatrix coord_signature(const PointCloud& cloud, const PatchHierarchy& hierarchy,
                              double voxel) {
    const std::size_t m = hierarchy.patches.size();
    Vec3 centroid{0.0, 0.0, 0.0};
    for (const Vec3& p : cloud.points) {
        centroid[0] += p[0];
        centroid[1] += p[1];
        centroid[2] += p[2];
    }
    const double n = static_cast<double>(cloud.size());
    centroid = {centroid[0] / n, centroid[1] / n, centroid[2] / n};

    FeatureMatrix out(m, kCoordSignatureDim);
    std::vector<double> center_dists;
    for (std::size_t i = 0; i < m; ++i) {
        const Patch& patch = hierarchy.patches[i];
        out(i, 0) = point_distance(patch.center, centroid) / (10.0 * voxel);
        double radius = 0.0;
        for (std::size_t member : patch.members)
            radius += point_distance(cloud.points[member], patch.center);
        out(i, 1) = radius / (static_cast<double>(patch.members.size()) * voxel);
        out(i, 2) = std::log1p(static_cast<double>(patch.members.size())) / 4.0;
        center_dists.clear();
        for (std::size_t j = 0; j < m; ++j)
            if (j != i)
                center_dists.push_back(
                    point_distance(hierarchy.patches[j].center, patch.center));
        const std::size_t take = std::min<std::size_t>(5, center_dists.size());
        std::partial_sort(center_dists.begin(), center_dists.begin() + take, center_dists.end());
        for (std::size_t s = 0; s < 5; ++s)
            out(i, 3 + s) = s < take ? center_dists[s] / (4.0 * voxel) : 0.0;
    }
    return out;
}

struct ProcessedCloud {
    FeatureMatrix descriptors; // n x kDescriptorDim
    FeatureMatrix centered;    // descriptors minus their column means
    PatchHierarchy hierarchy;
    FeatureMatrix fused;       // m x 3 * kDescriptorDim
};

// Keep only patch pairs that are each other's best selection. Top-k picks up
// runner-up cells in confident rows; reciprocity prunes them.
PatchCorrespondences mutual_patch_pairs(const PatchCorrespondences& pairs) {
    std::map<std::size_t, std::pair<double, std::size_t>> row_best, col_best;
    for (const PatchPair& p : pairs.pairs) {
        const auto r = row_best.find(p.src);
        if (r == row_best.end() || p.score > r->second.first) row_best[p.src] = {p.score, p.tgt};
        const auto c = col_best.find(p.tgt);
        if (c == col_best.end() || p.score > c->second.first) col_best[p.tgt] = {p.score, p.src};
    }
    PatchCorrespondences out;
    out.pairs.reserve(row_best.size());
    for (const PatchPair& p : pairs.pairs)
        if (row_best[p.src].second == p.tgt && col_best[p.tgt].second == p.src)
            out.pairs.push_back(p);
    return out;
}

// Iterative pairwise-distance consistency vote. Correspondences from a rigid
// motion agree on every pairwise distance; mismatched ones rarely agree with
// the consensus set, so support relative to the best-supported pair separates
// them. Small sets are left alone, they lack the statistics to vote.
void consistency_filter(PointCorrespondences& pairs, const PointCloud& src,
                        const PointCloud& tgt, double delta, double keep, std::size_t rounds) {
    for (std::size_t round = 0; round < rounds; ++round) {
        const std::size_t n = pairs.pairs.size();
        if (n < 16) return;
        std::vector<std::size_t> votes(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& si = src.points[pairs.pairs[i].src];
            const Vec3& ti = tgt.points[pairs.pairs[i].tgt];
            for (std::size_t k = i + 1; k < n; ++k) {
                const double ds = point_distance(si, src.points[pairs.pairs[k].src]);
                const double dt = point_distance(ti, tgt.points[pairs.pairs[k].tgt]);
                if (std::abs(ds - dt) < delta) {
                    ++votes[i];
                    ++votes[k];
                }
            }
        }
        const std::size_t vmax = *std::max_element(votes.begin(), votes.end());
        PointCorrespondences filtered;
        filtered.skipped_patches = pairs.skipped_patches;
        for (std::size_t i = 0; i < n; ++i)
            if (static_cast<double>(votes[i]) >= keep * static_cast<double>(vmax))
                filtered.pairs.push_back(pairs.pairs[i]);
        if (filtered.pairs.size() < 3 || filtered.pairs.size() == n) return;
        pairs = std::move(filtered);
    }
}

} // namespace

RegistrationResult register_clouds(const PointCloud& src, const PointCloud& tgt,
                                   const RunConfig& config) {
    validate_config(config);
    RegistrationResult result;

    const double max_diag = std::max(bbox_diagonal(src), bbox_diagonal(tgt));
    const double voxel = config.voxel_size > 0.0 ? config.voxel_size : 0.1 * max_diag;

    // Shared parameter sets: both clouds must pass through identical maps or
    // their features live in different spaces.
    const GraphAggregationParams graph_params =
        make_graph_params(kDescriptorDim, config.graph_seed);
    ContextFusionParams fusion_params = make_fusion_params(kDescriptorDim, config.fusion_seed);
    fusion_params.branch[0].lambda = config.lambda_coord;
    fusion_params.branch[1].lambda = config.lambda_feat;
    fusion_params.branch[2].lambda = config.lambda_graph;
    fusion_params.scaled_attention = config.scaled_attention;
    Rng coord_rng(config.fusion_seed ^ 0x9e3779b97f4a7c15ULL);
    const LinearLayer coord_embed = make_linear(coord_rng, kCoordSignatureDim, kDescriptorDim);

    const auto process = [&](const PointCloud& cloud) {
        ProcessedCloud out;
        Stopwatch watch;
        out.descriptors = stage("descriptors", [&] {
            return compute_descriptors(cloud, config.descriptor_k, config.descriptor_seed);
        });
        out.centered = center_columns(out.descriptors);
        result.timings.descriptors += watch.lap();

        FeatureMatrix patch_feats;
        out.hierarchy = stage("hierarchy", [&] { return voxel_downsample(cloud, voxel); });
        patch_feats = stage("hierarchy", [&] {
            return patch_features(out.hierarchy, out.descriptors);
        });
        result.timings.hierarchy += watch.lap();

        const std::size_t m = out.hierarchy.patches.size();
        const FeatureMatrix aggregated = stage("graph", [&] {
            if (m < 2) throw DegeneracyError("need at least 2 patches, have " + std::to_string(m));
            const std::size_t k = std::min(config.graph_k, m - 1);
            return aggregate_global_graph(patch_feats, graph_params, k,
                                          config.graph_neighbor_source)
                .aggregated;
        });
        result.timings.graph += watch.lap();

        out.fused = stage("fusion", [&] {
            DomainTriple domains;
            domains.coord = tanh_map(coord_embed.apply(
                coord_signature(cloud, out.hierarchy, voxel)));
            domains.feat = patch_feats;
            domains.graph = aggregated;
            return fuse_domains(domains, fusion_params);
        });
        result.timings.fusion += watch.lap();
        return out;
    };

    const ProcessedCloud src_data = process(src);
    const ProcessedCloud tgt_data = process(tgt);
    result.src_patches = src_data.hierarchy.patches.size();
    result.tgt_patches = tgt_data.hierarchy.patches.size();

    Stopwatch watch;
    stage("matching", [&] {
        double sigma = config.patch_sigma;
        if (sigma <= 0.0) {
            // Median pairwise feature distance adapts the kernel width to the
            // fused feature scale.
            std::vector<double> dists;
            dists.reserve(src_data.fused.rows() * tgt_data.fused.rows());
            for (std::size_t i = 0; i < src_data.fused.rows(); ++i)
                for (std::size_t j = 0; j < tgt_data.fused.rows(); ++j) {
                    double sq = 0.0;
                    for (std::size_t c = 0; c < src_data.fused.cols(); ++c) {
                        const double d = src_data.fused(i, c) - tgt_data.fused(j, c);
                        sq += d * d;
                    }
                    dists.push_back(std::sqrt(sq));
                }
            std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
            sigma = dists[dists.size() / 2];
            if (!(sigma > 0.0)) sigma = 1.0;
        }
        const std::size_t cells = src_data.fused.rows() * tgt_data.fused.rows();
        const std::size_t k =
            std::min(config.patch_topk > 0 ? config.patch_topk : std::size_t{64}, cells);
        result.patch_pairs = patch_match(src_data.fused, tgt_data.fused, sigma, k,
                                         config.patch_normalization);
        if (config.patch_mutual) result.patch_pairs = mutual_patch_pairs(result.patch_pairs);
        result.point_pairs =
            point_match(src_data.hierarchy, tgt_data.hierarchy, result.patch_pairs,
                        src_data.centered, tgt_data.centered, config.point_k,
                        config.sinkhorn_iterations);

        // Confidence floor: flat assignment blocks spread their Sinkhorn mass,
        // confident matches concentrate it. Keep everything when too few pass,
        // a small set is better served by the consistency vote below.
        if (config.confidence_floor > 0.0) {
            PointCorrespondences confident;
            confident.skipped_patches = result.point_pairs.skipped_patches;
            for (const PointPair& p : result.point_pairs.pairs)
                if (p.confidence >= config.confidence_floor) confident.pairs.push_back(p);
            if (confident.pairs.size() >= 16) result.point_pairs = std::move(confident);
        }
        const double delta = config.consistency_delta > 0.0 ? config.consistency_delta
                                                            : 0.01 * max_diag;
        consistency_filter(result.point_pairs, src, tgt, delta, config.consistency_keep,
                           config.consistency_rounds);
        return 0;
    });
    result.timings.matching += watch.lap();

    stage("estimation", [&] {
        result.transform = estimate_pose(result.point_pairs, src, tgt, config);
        return 0;
    });
    result.timings.estimation += watch.lap();
    return result;
}

RigidTransform estimate_pose(const PointCorrespondences& corrs, const PointCloud& src,
                             const PointCloud& tgt, const RunConfig& config) {
    switch (config.estimator) {
        case Estimator::dism: {
            const double max_diag = std::max(bbox_diagonal(src), bbox_diagonal(tgt));
            const double eps = config.epsilon > 0.0 ? config.epsilon : 0.1 * max_diag;
            return dism_solve(corrs, src, tgt, eps, config.dism_iterations,
                              config.decay_mode == DecayMode::uniform)
                .transform;
        }
        case Estimator::ransac: {
            RansacConfig rc;
            rc.max_iterations = config.ransac_max_iterations;
            rc.inlier_threshold = config.ransac_inlier_threshold;
            rc.confidence = config.ransac_confidence;
            rc.rng_seed = config.ransac_seed;
            return ransac_solve(corrs, src, tgt, rc).transform;
        }
        case Estimator::lgr:
            return lgr_solve(corrs, src, tgt, config.lgr_threshold, config.lgr_rounds).transform;
    }
    throw InternalError("estimate_pose: unhandled estimator");
}

} // namespace mdreg

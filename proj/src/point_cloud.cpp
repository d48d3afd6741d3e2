#include "mdreg/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "mdreg/errors.hpp"
#include "mdreg/nn.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

double bbox_diagonal(const PointCloud& cloud) {
    if (cloud.points.empty()) return 0.0;
    Vec3 lo = cloud.points[0], hi = cloud.points[0];
    for (const Vec3& p : cloud.points)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

// Shared selection kernel: smallest k of (distance^2, index), excluding the
// query, ascending with index tie-break.
template <typename Dist2Fn>
std::vector<std::size_t> select_knn(std::size_t n, std::size_t query, std::size_t k,
                                    Dist2Fn dist2) {
    if (query >= n) throw ParameterError("knn: query index out of range");
    if (k < 1 || k >= n)
        throw ParameterError("knn: k must be in [1, " + std::to_string(n - 1) + "], got " +
                             std::to_string(k));
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        if (i != query) cand.emplace_back(dist2(i), i);
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
    std::sort(cand.begin(), cand.begin() + k);
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
    return out;
}

double dist2_vec3(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

} // namespace

std::vector<std::size_t> knn(const PointCloud& cloud, std::size_t query_index, std::size_t k,
                             Metric metric) {
    if (metric == Metric::feature) {
        if (cloud.features.rows() != cloud.points.size())
            throw ShapeError("knn: feature metric requires one feature row per point");
        return knn_rows(cloud.features, query_index, k);
    }
    return select_knn(cloud.points.size(), query_index, k, [&](std::size_t i) {
        return dist2_vec3(cloud.points[i], cloud.points[query_index]);
    });
}

std::vector<std::size_t> knn_rows(const FeatureMatrix& rows, std::size_t query_index,
                                  std::size_t k) {
    const std::size_t d = rows.cols();
    return select_knn(rows.rows(), query_index, k, [&](std::size_t i) {
        const double* a = rows.row(i);
        const double* b = rows.row(query_index);
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
        return acc;
    });
}

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::size_t h = std::hash<std::int64_t>{}(c.x);
        h = h * 1000003u ^ std::hash<std::int64_t>{}(c.y);
        h = h * 1000003u ^ std::hash<std::int64_t>{}(c.z);
        return h;
    }
};

} // namespace

PatchHierarchy voxel_downsample(const PointCloud& cloud, double voxel_size) {
    if (!(voxel_size > 0.0)) throw ParameterError("voxel_downsample: voxel_size must be > 0");
    if (cloud.points.empty()) throw ParameterError("voxel_downsample: empty cloud");

    PatchHierarchy h;
    h.voxel_size = voxel_size;
    h.point_to_patch.resize(cloud.points.size());
    std::unordered_map<CellKey, std::size_t, CellHash> cells;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const CellKey key{static_cast<std::int64_t>(std::floor(p[0] / voxel_size)),
                          static_cast<std::int64_t>(std::floor(p[1] / voxel_size)),
                          static_cast<std::int64_t>(std::floor(p[2] / voxel_size))};
        auto [it, inserted] = cells.try_emplace(key, h.patches.size());
        if (inserted) h.patches.push_back({});
        h.patches[it->second].members.push_back(i);
        h.point_to_patch[i] = it->second;
    }
    for (Patch& patch : h.patches) {
        Vec3 c{0, 0, 0};
        for (std::size_t idx : patch.members)
            for (int a = 0; a < 3; ++a) c[a] += cloud.points[idx][a];
        const double inv = 1.0 / static_cast<double>(patch.members.size());
        for (int a = 0; a < 3; ++a) patch.center[a] = c[a] * inv;
    }
    return h;
}

FeatureMatrix geometric_features(const PointCloud& cloud, std::size_t k) {
    const std::size_t n = cloud.points.size();
    FeatureMatrix out(n, kGeometricFeatureDim);
    std::vector<double> dist(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<std::size_t> nbrs = knn(cloud, i, k, Metric::euclidean);
        for (std::size_t j = 0; j < k; ++j)
            dist[j] = std::sqrt(dist2_vec3(cloud.points[i], cloud.points[nbrs[j]]));
        const double rk = dist[k - 1];

        // Distinct-point count over the neighborhood (self + neighbors).
        std::size_t distinct = 1;
        for (std::size_t a = 0; a < k; ++a) {
            bool dup = cloud.points[nbrs[a]] == cloud.points[i];
            for (std::size_t b = 0; !dup && b < a; ++b)
                dup = cloud.points[nbrs[a]] == cloud.points[nbrs[b]];
            if (!dup) ++distinct;
        }
        if (distinct < 3 || rk < 1e-300) continue; // zero row for degenerate neighborhoods

        Vec3 c{0, 0, 0};
        for (int a = 0; a < 3; ++a) c[a] += cloud.points[i][a];
        for (std::size_t j = 0; j < k; ++j)
            for (int a = 0; a < 3; ++a) c[a] += cloud.points[nbrs[j]][a];
        const double inv_cnt = 1.0 / static_cast<double>(k + 1);
        for (int a = 0; a < 3; ++a) c[a] *= inv_cnt;

        Matrix cov(3, 3);
        auto accumulate = [&](const Vec3& p) {
            const double d[3] = {p[0] - c[0], p[1] - c[1], p[2] - c[2]};
            for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s) cov(r, s) += d[r] * d[s];
        };
        accumulate(cloud.points[i]);
        for (std::size_t j = 0; j < k; ++j) accumulate(cloud.points[nbrs[j]]);
        for (double& x : cov.data()) x *= inv_cnt;

        const Svd3 eig = svd3(cov); // symmetric PSD: singular values = eigenvalues
        const double l1 = eig.s[0], l2 = eig.s[1], l3 = eig.s[2];
        const double lsum = l1 + l2 + l3;
        if (lsum < 1e-300 || l1 < 1e-300) continue;
        const double e1 = l1 / lsum, e2 = l2 / lsum, e3 = l3 / lsum;

        double* f = out.row(i);
        f[0] = (e1 - e2) / e1;              // linearity
        f[1] = (e2 - e3) / e1;              // planarity
        f[2] = e3 / e1;                     // sphericity
        f[3] = std::cbrt(e1 * e2 * e3);     // omnivariance
        f[4] = (e1 - e3) / e1;              // anisotropy
        double entropy = 0.0;
        for (double e : {e1, e2, e3})
            if (e > 0.0) entropy -= e * std::log(e);
        f[5] = entropy;                     // eigenentropy
        f[6] = e3;                          // surface variation
        f[7] = e2 / e1;

        // Normal (smallest eigenvector) against the centroid offset.
        const Vec3 normal{eig.u(0, 2), eig.u(1, 2), eig.u(2, 2)};
        const Vec3 off{cloud.points[i][0] - c[0], cloud.points[i][1] - c[1],
                       cloud.points[i][2] - c[2]};
        const double off_norm = std::sqrt(off[0] * off[0] + off[1] * off[1] + off[2] * off[2]);
        f[8] = off_norm > 1e-300
                   ? std::abs(normal[0] * off[0] + normal[1] * off[1] + normal[2] * off[2]) /
                         off_norm
                   : 0.0;
        f[9] = off_norm / rk;

        double mean_d = 0.0;
        for (double d : dist) mean_d += d;
        mean_d /= static_cast<double>(k);
        double var_d = 0.0;
        for (double d : dist) var_d += (d - mean_d) * (d - mean_d);
        f[10] = mean_d / rk;
        f[11] = std::sqrt(var_d / static_cast<double>(k)) / rk;

        // Sorted neighbor-distance profile, padded with the last ratio.
        for (std::size_t j = 0; j < 8; ++j) f[12 + j] = dist[std::min(j, k - 1)] / rk;
    }
    return out;
}

FeatureMatrix compute_descriptors(const PointCloud& cloud, std::size_t k, std::uint64_t seed) {
    if (k < 4) throw ParameterError("compute_descriptors: k must be >= 4");
    const FeatureMatrix geo = geometric_features(cloud, k);
    Rng rng(seed);
    const Matrix lift = make_orthonormal(rng, kDescriptorDim, kGeometricFeatureDim);
    return tanh_map(matmul(geo, transpose(lift)));
}

FeatureMatrix patch_features(const PatchHierarchy& hierarchy,
                             const FeatureMatrix& point_features) {
    FeatureMatrix out(hierarchy.patches.size(), point_features.cols());
    for (std::size_t p = 0; p < hierarchy.patches.size(); ++p) {
        const Patch& patch = hierarchy.patches[p];
        double* o = out.row(p);
        for (std::size_t idx : patch.members) {
            const double* f = point_features.row(idx);
            for (std::size_t c = 0; c < point_features.cols(); ++c) o[c] += f[c];
        }
        const double inv = 1.0 / static_cast<double>(patch.members.size());
        for (std::size_t c = 0; c < point_features.cols(); ++c) o[c] *= inv;
    }
    return out;
}

PointCloud patch_centers(const PatchHierarchy& hierarchy) {
    PointCloud out;
    out.points.reserve(hierarchy.patches.size());
    for (const Patch& p : hierarchy.patches) out.points.push_back(p.center);
    return out;
}

} // namespace mdreg

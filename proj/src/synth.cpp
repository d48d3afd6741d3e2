#include "mdreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mdreg/errors.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(dot(v, v));
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 unit_direction(Rng& rng) {
    while (true) {
        const Vec3 v = {rng.normal(), rng.normal(), rng.normal()};
        if (std::sqrt(dot(v, v)) > 1e-6) return normalized(v);
    }
}

Rotation3 axis_angle(const Vec3& axis_in, double angle) {
    const Vec3 a = normalized(axis_in);
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Rotation3 r;
    r.m = {t * a[0] * a[0] + c,        t * a[0] * a[1] - s * a[2], t * a[0] * a[2] + s * a[1],
           t * a[0] * a[1] + s * a[2], t * a[1] * a[1] + c,        t * a[1] * a[2] - s * a[0],
           t * a[0] * a[2] - s * a[1], t * a[1] * a[2] + s * a[0], t * a[2] * a[2] + c};
    return r;
}

// One planar slab: offset plane with slight thickness so patch covariances
// stay full rank while the dominant spread is two-dimensional.
void sample_plane(Rng& rng, std::size_t count, double extent, std::vector<Vec3>* out) {
    const Vec3 normal = unit_direction(rng);
    const double offset = rng.uniform(-0.5, 0.5);
    const Vec3 helper = std::abs(normal[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    const Vec3 u = normalized(cross(normal, helper));
    const Vec3 v = cross(normal, u);
    for (std::size_t i = 0; i < count; ++i) {
        const double a = rng.uniform(-extent, extent);
        const double b = rng.uniform(-extent, extent);
        const double lift = offset + rng.normal(0.0, 0.02);
        out->push_back({normal[0] * lift + u[0] * a + v[0] * b,
                        normal[1] * lift + u[1] * a + v[1] * b,
                        normal[2] * lift + u[2] * a + v[2] * b});
    }
}

void sample_sphere(Rng& rng, std::size_t count, std::vector<Vec3>* out) {
    const Vec3 center = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double radius = rng.uniform(0.5, 1.5);
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3 dir = unit_direction(rng);
        out->push_back({center[0] + radius * dir[0], center[1] + radius * dir[1],
                        center[2] + radius * dir[2]});
    }
}

void validate(const SceneSpec& spec) {
    if (spec.n_points == 0) throw ParameterError("generate_pair: n_points must be positive");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
        throw ParameterError("generate_pair: noise_sigma must be finite and non-negative");
    if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0))
        throw ParameterError("generate_pair: outlier_fraction must lie in [0, 1)");
    if (!(spec.overlap_fraction > 0.0 && spec.overlap_fraction <= 1.0))
        throw ParameterError("generate_pair: overlap_fraction must lie in (0, 1]");
    if (!(spec.max_rotation_degrees >= 0.0) || !std::isfinite(spec.max_rotation_degrees))
        throw ParameterError("generate_pair: max_rotation_degrees must be finite and non-negative");
    if (!(spec.max_translation >= 0.0) || !std::isfinite(spec.max_translation))
        throw ParameterError("generate_pair: max_translation must be finite and non-negative");
}

} // namespace

ScenePair generate_pair(const SceneSpec& spec) {
    validate(spec);
    Rng rng(spec.rng_seed);
    const std::size_t n = spec.n_points;
    const double extent = 2.0;

    // Two slabs, one shell, uniform fill: enough distinct local geometry for
    // covariance descriptors to separate regions.
    std::vector<Vec3> full;
    full.reserve(n);
    const std::size_t n_plane = n * 2 / 5;
    const std::size_t n_sphere = n * 7 / 20;
    sample_plane(rng, n_plane / 2, extent, &full);
    sample_plane(rng, n_plane - n_plane / 2, extent, &full);
    sample_sphere(rng, n_sphere, &full);
    while (full.size() < n)
        full.push_back({rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                        rng.uniform(-extent, extent)});

    ScenePair out;
    const double angle =
        rng.uniform(0.0, spec.max_rotation_degrees * std::numbers::pi / 180.0);
    out.ground_truth.rotation = axis_angle(unit_direction(rng), angle);
    const Vec3 shift_dir = unit_direction(rng);
    const double shift = rng.uniform(0.0, spec.max_translation);
    out.ground_truth.translation = {shift_dir[0] * shift, shift_dir[1] * shift,
                                    shift_dir[2] * shift};

    std::vector<Vec3> moved;
    moved.reserve(n);
    for (const Vec3& p : full) {
        Vec3 q = out.ground_truth.apply(p);
        if (spec.noise_sigma > 0.0) {
            q[0] += rng.normal(0.0, spec.noise_sigma);
            q[1] += rng.normal(0.0, spec.noise_sigma);
            q[2] += rng.normal(0.0, spec.noise_sigma);
        }
        moved.push_back(q);
    }

    // Complementary half-space crops along a shared direction: the source
    // keeps the lower (1+o)/2 quantile band, the target the upper one, so the
    // middle o-fraction survives in both.
    std::vector<double> proj(n);
    std::vector<double> sorted_proj(n);
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Vec3 dir = unit_direction(rng);
        for (std::size_t i = 0; i < n; ++i) proj[i] = dot(full[i], dir);
        sorted_proj = proj;
        std::sort(sorted_proj.begin(), sorted_proj.end());
        const double nm1 = static_cast<double>(n - 1);
        const auto rank = [&](double q) {
            return static_cast<std::size_t>(std::llround(q * nm1));
        };
        const double hi = sorted_proj[rank((1.0 + spec.overlap_fraction) / 2.0)];
        const double lo = sorted_proj[rank((1.0 - spec.overlap_fraction) / 2.0)];

        std::size_t shared = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (proj[i] >= lo && proj[i] <= hi) ++shared;
        if (shared < 10) continue;

        std::vector<std::size_t> src_index(n, SIZE_MAX), tgt_index(n, SIZE_MAX);
        for (std::size_t i = 0; i < n; ++i) {
            if (proj[i] <= hi) {
                src_index[i] = out.src.points.size();
                out.src.points.push_back(full[i]);
            }
            if (proj[i] >= lo) {
                tgt_index[i] = out.tgt.points.size();
                out.tgt.points.push_back(moved[i]);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (src_index[i] != SIZE_MAX && tgt_index[i] != SIZE_MAX)
                out.correspondences.push_back({src_index[i], tgt_index[i]});
        return out;
    }
    throw DegeneracyError("generate_pair: could not crop to >= 10 shared points in 100 attempts");
}

PointCorrespondences corrupt_correspondences(
    const std::vector<std::pair<std::size_t, std::size_t>>& gt_pairs, double outlier_fraction,
    const PointCloud& tgt, std::uint64_t seed) {
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0))
        throw ParameterError("corrupt_correspondences: fraction must lie in [0, 1)");
    const std::size_t n = gt_pairs.size();
    const std::size_t corrupt =
        static_cast<std::size_t>(std::floor(outlier_fraction * static_cast<double>(n)));

    PointCorrespondences out;
    out.pairs.reserve(n);
    for (const auto& [src, dst] : gt_pairs) out.pairs.push_back({src, dst, 1.0});
    if (corrupt == 0) return out;
    if (tgt.points.size() < 2)
        throw ParameterError("corrupt_correspondences: need >= 2 target points to re-aim");

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(0, i - 1)]);
    for (std::size_t c = 0; c < corrupt; ++c) {
        PointPair& pair = out.pairs[order[c]];
        std::size_t fresh;
        do {
            fresh = rng.uniform_index(0, tgt.points.size() - 1);
        } while (fresh == pair.tgt);
        pair.tgt = fresh;
    }
    return out;
}

} // namespace mdreg

#include "mdreg/context_fusion.hpp"

#include <cmath>
#include <string>

#include "mdreg/errors.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

DecoupleResult decouple(const FeatureMatrix& features, const LinearLayer& reduce) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n == 0 || d == 0) throw ShapeError("decouple: empty feature matrix");
    if (reduce.w.cols() != 2 * d || reduce.w.rows() != d)
        throw ShapeError("decouple: reduce layer must map 2d -> d");

    DecoupleResult res;
    res.global_feature.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) res.global_feature[c] += features(i, c);
    for (double& g : res.global_feature) g /= static_cast<double>(n);

    double g_norm2 = 0.0;
    for (double g : res.global_feature) g_norm2 += g * g;

    res.projection = Matrix(n, d);
    res.residual = Matrix(n, d);
    if (std::sqrt(g_norm2) < 1e-12) {
        res.residual = features; // null global direction: nothing to project out
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += features(i, c) * res.global_feature[c];
            const double coef = dot / g_norm2;
            for (std::size_t c = 0; c < d; ++c) {
                const double x = features(i, c);
                const double p = coef * res.global_feature[c];
                // The residual absorbs the rounding of the subtraction, so
                // projection + residual recovers the input to within one ulp
                // of the larger component (a bitwise identity is not
                // representable when the projection dwarfs the input entry).
                res.projection(i, c) = p;
                res.residual(i, c) = x - p;
            }
        }
    }

    Matrix cat(n, 2 * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            cat(i, c) = res.residual(i, c);
            cat(i, d + c) = res.global_feature[c];
        }
    res.output = reduce.apply(cat);
    return res;
}

namespace {

Matrix apply_phi(const Matrix& x, const LinearLayer& layer) {
    return relu(row_standardize(layer.apply(x)));
}

} // namespace

Matrix cross_branch(const Matrix& core, const Matrix& other_a, const Matrix& other_b,
                    const AttentionBranchParams& params, bool scaled_attention) {
    const std::size_t n = core.rows();
    const std::size_t d = core.cols();
    if (other_a.rows() != n || other_b.rows() != n || other_a.cols() != d || other_b.cols() != d)
        throw ShapeError("cross_branch: all three domains must share one N x d shape");
    if (params.q.w.cols() != d || params.k.w.cols() != d || params.v.w.cols() != d ||
        params.mlp.w.cols() != params.v.w.rows())
        throw ShapeError("cross_branch: parameter widths do not match the feature dim");

    if (params.lambda == 0.0) return core; // exact identity at the gate's zero init

    Matrix logits = matmul(apply_phi(other_a, params.q), transpose(apply_phi(other_b, params.k)));
    if (scaled_attention) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(params.q.w.rows()));
        for (double& x : logits.data()) x *= inv;
    }
    const Matrix psi = softmax_rows(logits);
    const Matrix mixed = params.mlp.apply(matmul(psi, apply_phi(core, params.v)));

    Matrix out = core;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) out(i, c) += params.lambda * mixed(i, c);
    return out;
}

ContextFusionParams make_fusion_params(std::size_t feature_dim, std::uint64_t seed) {
    Rng rng(seed);
    ContextFusionParams p;
    for (int dom = 0; dom < 3; ++dom)
        p.reduce[dom] = make_linear(rng, 2 * feature_dim, feature_dim);
    for (int br = 0; br < 3; ++br) {
        p.branch[br].q = make_linear(rng, feature_dim, feature_dim);
        p.branch[br].k = make_linear(rng, feature_dim, feature_dim);
        p.branch[br].v = make_linear(rng, feature_dim, feature_dim);
        p.branch[br].mlp = make_linear(rng, feature_dim, feature_dim);
        p.branch[br].lambda = 0.0;
    }
    return p;
}

Matrix fuse_domains(const DomainTriple& domains, const ContextFusionParams& params) {
    const std::size_t n = domains.coord.rows();
    const std::size_t d = domains.coord.cols();
    if (domains.feat.rows() != n || domains.graph.rows() != n || domains.feat.cols() != d ||
        domains.graph.cols() != d)
        throw ShapeError("fuse_domains: the three domains must share one N x d shape");

    const DecoupleResult dc = decouple(domains.coord, params.reduce[0]);
    const DecoupleResult df = decouple(domains.feat, params.reduce[1]);
    const DecoupleResult dg = decouple(domains.graph, params.reduce[2]);

    const Matrix yc =
        cross_branch(dc.output, df.output, dg.output, params.branch[0], params.scaled_attention);
    const Matrix yf =
        cross_branch(df.output, dg.output, dc.output, params.branch[1], params.scaled_attention);
    const Matrix yg =
        cross_branch(dg.output, dc.output, df.output, params.branch[2], params.scaled_attention);

    Matrix out(n, 3 * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            out(i, c) = yc(i, c);
            out(i, d + c) = yf(i, c);
            out(i, 2 * d + c) = yg(i, c);
        }
    return out;
}

} // namespace mdreg

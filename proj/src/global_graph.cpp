#include "mdreg/global_graph.hpp"

#include <cmath>
#include <string>

#include "mdreg/errors.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

GraphAggregationParams make_graph_params(std::size_t feature_dim, std::uint64_t seed) {
    Rng rng(seed);
    GraphAggregationParams p;
    p.score_layer = make_linear(rng, feature_dim, 1);
    p.edge_layer = make_linear(rng, 2 * feature_dim, 1);
    return p;
}

std::vector<double> node_scores(const FeatureMatrix& features,
                                const GraphAggregationParams& params) {
    const Matrix raw = params.score_layer.apply(features);
    std::vector<double> scores(features.rows());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = std::max(0.0, std::tanh(raw(i, 0)));
    return scores;
}

Matrix build_adjacency(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = scores[i] * scores[j];
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    return a;
}

SpectralConvResult spectral_conv(const FeatureMatrix& features, const Matrix& adjacency) {
    const std::size_t n = features.rows();
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw ShapeError("spectral_conv: adjacency must be NxN for N feature rows");
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += adjacency(i, j);
        if (!(deg > 0.0)) throw DegeneracyError("spectral_conv: zero row sum in adjacency");
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    SpectralConvResult res;
    res.laplacian = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            res.laplacian(i, j) = inv_sqrt_deg[i] * adjacency(i, j) * inv_sqrt_deg[j];
    res.output = relu(matmul(res.laplacian, features));
    return res;
}

FeatureMatrix adaptive_aggregate(const FeatureMatrix& graph_features,
                                 const std::vector<std::vector<std::size_t>>& neighbor_lists,
                                 const GraphAggregationParams& params) {
    const std::size_t n = graph_features.rows();
    const std::size_t d = graph_features.cols();
    if (neighbor_lists.size() != n)
        throw ShapeError("adaptive_aggregate: one neighbor list per node required");
    if (params.edge_layer.w.cols() != 2 * d)
        throw ShapeError("adaptive_aggregate: edge layer width must be 2 * feature dim");

    FeatureMatrix out(n, d);
    std::vector<double> logits;
    Matrix edge_input(1, 2 * d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<std::size_t>& nbrs = neighbor_lists[i];
        if (nbrs.empty()) throw ParameterError("adaptive_aggregate: empty neighbor list");
        logits.resize(nbrs.size());
        const double* fi = graph_features.row(i);
        for (std::size_t a = 0; a < nbrs.size(); ++a) {
            if (nbrs[a] >= n) throw ParameterError("adaptive_aggregate: neighbor index out of range");
            const double* fj = graph_features.row(nbrs[a]);
            for (std::size_t c = 0; c < d; ++c) {
                edge_input(0, c) = fi[c];
                edge_input(0, d + c) = fi[c] - fj[c];
            }
            logits[a] = params.edge_layer.apply(edge_input)(0, 0);
        }
        double mx = logits[0];
        for (double l : logits) mx = std::max(mx, l);
        double sum = 0.0;
        for (double& l : logits) {
            l = std::exp(l - mx);
            sum += l;
        }
        double* o = out.row(i);
        for (std::size_t a = 0; a < nbrs.size(); ++a) {
            const double alpha = logits[a] / sum;
            const double* fj = graph_features.row(nbrs[a]);
            for (std::size_t c = 0; c < d; ++c) o[c] += alpha * fj[c];
        }
    }
    return out;
}

GraphAggregationResult aggregate_global_graph(const FeatureMatrix& features,
                                              const GraphAggregationParams& params,
                                              std::size_t k, NeighborSource source) {
    if (features.rows() < k + 1)
        throw ParameterError("aggregate_global_graph: need at least k + 1 = " +
                             std::to_string(k + 1) + " nodes, got " +
                             std::to_string(features.rows()));
    GraphAggregationResult res;
    res.scores = node_scores(features, params);
    res.adjacency = build_adjacency(res.scores);
    SpectralConvResult conv = spectral_conv(features, res.adjacency);
    res.laplacian = std::move(conv.laplacian);
    res.graph_features = std::move(conv.output);

    const FeatureMatrix& basis =
        source == NeighborSource::graph_features ? res.graph_features : features;
    res.neighbors.resize(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) res.neighbors[i] = knn_rows(basis, i, k);
    res.aggregated = adaptive_aggregate(res.graph_features, res.neighbors, params);
    return res;
}

} // namespace mdreg

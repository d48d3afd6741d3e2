#ifndef MDREG_GLOBAL_GRAPH_HPP
#define MDREG_GLOBAL_GRAPH_HPP

#include <cstdint>
#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/nn.hpp"
#include "mdreg/point_cloud.hpp"

namespace mdreg {

// Global graph feature aggregation over a patch set. A learned-free stand-in
// for the trained scoring networks: both tiny MLPs are seeded orthogonal
// projections with zero bias, so the whole pass is deterministic in
// (features, seed).
struct GraphAggregationParams {
    LinearLayer score_layer; // d -> 1
    LinearLayer edge_layer;  // 2d -> 1
};

GraphAggregationParams make_graph_params(std::size_t feature_dim, std::uint64_t seed);

// Per-node attention score: relu(tanh(linear(f))). Zero bias means a zero
// feature row scores exactly 0; range is [0, 1).
std::vector<double> node_scores(const FeatureMatrix& features,
                                const GraphAggregationParams& params);

// Soft adjacency with self-loops: scores * scores^T + I.
Matrix build_adjacency(const std::vector<double>& scores);

// Degree-normalized graph convolution: relu(D^-1/2 A D^-1/2 * F). The
// normalized operator is symmetric with spectral radius <= 1 for any score
// vector, because D - A is diagonally dominant.
struct SpectralConvResult {
    Matrix laplacian;      // the normalized operator actually applied
    FeatureMatrix output;
};
SpectralConvResult spectral_conv(const FeatureMatrix& features, const Matrix& adjacency);

// Attention-weighted neighbor pooling. For node i with neighbors j:
// logit_j = edge_mlp(concat[f_i, f_i - f_j]), alpha = softmax(logits),
// out_i = sum alpha_j f_j. Output rows are convex combinations of neighbor
// rows, so they stay inside the neighbors' componentwise hull.
FeatureMatrix adaptive_aggregate(const FeatureMatrix& graph_features,
                                 const std::vector<std::vector<std::size_t>>& neighbor_lists,
                                 const GraphAggregationParams& params);

// Where the aggregation neighborhoods are built: over the graph-convolved
// features (default) or over the raw input features.
enum class NeighborSource { graph_features, input_features };

struct GraphAggregationResult {
    std::vector<double> scores;
    Matrix adjacency;
    Matrix laplacian;
    FeatureMatrix graph_features;                    // after spectral_conv
    std::vector<std::vector<std::size_t>> neighbors; // kNN lists used
    FeatureMatrix aggregated;                        // final output, N x d
};

// Full pass: scores -> adjacency -> spectral_conv -> kNN -> aggregate.
// Requires N >= k + 1 nodes.
GraphAggregationResult aggregate_global_graph(const FeatureMatrix& features,
                                              const GraphAggregationParams& params,
                                              std::size_t k = 8,
                                              NeighborSource source = NeighborSource::graph_features);

} // namespace mdreg

#endif

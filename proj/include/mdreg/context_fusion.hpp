#ifndef MDREG_CONTEXT_FUSION_HPP
#define MDREG_CONTEXT_FUSION_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/nn.hpp"
#include "mdreg/point_cloud.hpp"

namespace mdreg {

// Multi-domain context fusion over three parallel feature domains per patch
// set: coordinate embeddings, raw descriptors, and graph-aggregated features.
// Each domain is decoupled against its global mean, then three gated
// cross-attention branches exchange context in a cyclic role rotation.

struct DecoupleResult {
    Matrix projection;                 // component along the global feature
    Matrix residual;                   // input - projection, rounded once
    std::vector<double> global_feature; // column mean of the input rows
    Matrix output;                     // reduce(concat[residual, global]) per row
};

// Split every row into its projection onto the global (mean) feature and the
// residual. Each residual entry is the correctly rounded input - projection,
// so the pair reconstructs the input to within one ulp of the larger of the
// two parts (well under 1e-12 for unit-scale features). A global feature with
// norm < 1e-12 yields zero projection and residual = input. The reduce layer
// maps concat[residual, global] (2d) back to d.
DecoupleResult decouple(const FeatureMatrix& features, const LinearLayer& reduce);

// One gated cross-attention branch. Queries and keys come from the two other
// domains, values from the core domain:
//   psi = softmax(phi_q(other_a) * phi_k(other_b)^T [/ sqrt(d)])
//   out = core + lambda * mlp(psi * phi_v(core))
// Each phi is a seeded linear map, row standardization, then relu. With
// lambda == 0 the branch is an exact identity on the core.
struct AttentionBranchParams {
    LinearLayer q, k, v; // d -> d
    LinearLayer mlp;     // d -> d
    double lambda = 0.0; // gate, matching its zero init in training
};

Matrix cross_branch(const Matrix& core, const Matrix& other_a, const Matrix& other_b,
                    const AttentionBranchParams& params, bool scaled_attention = false);

struct DomainTriple {
    FeatureMatrix coord;  // embedded patch-center geometry
    FeatureMatrix feat;   // patch descriptors
    FeatureMatrix graph;  // graph-aggregated features
};

struct ContextFusionParams {
    std::array<LinearLayer, 3> reduce;          // per-domain decouple reduction, 2d -> d
    std::array<AttentionBranchParams, 3> branch;
    bool scaled_attention = false;              // divide attention logits by sqrt(d)
};

ContextFusionParams make_fusion_params(std::size_t feature_dim, std::uint64_t seed);

// Full pass: decouple each domain, run the three branches with cyclic roles
// (core coord: q from feat, k from graph; core feat: q from graph, k from
// coord; core graph: q from coord, k from feat), concat to N x 3d.
Matrix fuse_domains(const DomainTriple& domains, const ContextFusionParams& params);

} // namespace mdreg

#endif

#ifndef MDREG_MATCHING_HPP
#define MDREG_MATCHING_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/point_cloud.hpp"

namespace mdreg {

struct PatchPair {
    std::size_t src = 0;
    std::size_t tgt = 0;
    double score = 0.0; // normalized Gaussian correlation
};

struct PatchCorrespondences {
    std::vector<PatchPair> pairs; // sorted by (score desc, src, tgt), distinct cells
};

struct PointPair {
    std::size_t src = 0;
    std::size_t tgt = 0;
    double confidence = 0.0; // Sinkhorn assignment value, in [0, 1]
};

struct PointCorrespondences {
    std::vector<PointPair> pairs;       // sorted by (src, tgt), no duplicates
    std::size_t skipped_patches = 0;    // patch pairs dropped for lacking members
};

enum class PatchNormalization { rows, global };

// Gaussian correlation S[i][j] = exp(-|f_i - g_j|^2 / (2 sigma^2)) between the
// two patch feature sets, normalized (per row by default, or by the total sum)
// and reduced to the k largest entries overall. Ties prefer the lower row,
// then the lower column. Rows (or a total) that underflow to zero are left as
// zeros rather than divided. sigma <= 0, k = 0, or k > rows*cols is a
// ParameterError; mismatched feature widths are a ShapeError.
PatchCorrespondences patch_match(const FeatureMatrix& src_feats, const FeatureMatrix& tgt_feats,
                                 double sigma, std::size_t k,
                                 PatchNormalization normalization = PatchNormalization::rows);

// M[i][j] = <src_i, tgt_j> / (|src_i| |tgt_j|). A row with zero norm on either
// side contributes 0 entries. Widths must match.
Matrix cosine_similarity_matrix(const FeatureMatrix& src, const FeatureMatrix& tgt);

// Alternating row/column normalization of exp(m / temperature). One iteration
// is a row pass then a column pass; stops early once every row and column sum
// is within 1e-6 of 1 (attainable only for square inputs). The global maximum
// is subtracted before exponentiation and exponents are floored at -700, so
// every output entry is strictly positive. Non-finite input or
// temperature <= 0 is a ParameterError.
Matrix sinkhorn_normalize(const Matrix& m, std::size_t iterations = 100,
                          double temperature = 0.1);

// Pairs (i, j) whose value ranks among the k largest of row i and among the k
// largest of column j, with rank ties preferring the lower index. Output is
// sorted by (row, col). k = 0 is a ParameterError; k beyond a dimension keeps
// that direction unfiltered.
std::vector<std::pair<std::size_t, std::size_t>> mutual_topk(const Matrix& z, std::size_t k);

// Per patch pair: cosine similarity between the member point features,
// Sinkhorn normalization, then mutual top-k; each surviving local pair maps
// back to dense indices with confidence = its Sinkhorn value. The union over
// patch pairs keeps the largest confidence for a repeated (src, tgt) pair.
// Patch pairs where either side has no members are counted in
// skipped_patches. Patch indices out of range are a ParameterError; member
// indices outside the feature matrices are a ShapeError.
PointCorrespondences point_match(const PatchHierarchy& src_patches,
                                 const PatchHierarchy& tgt_patches,
                                 const PatchCorrespondences& patch_pairs,
                                 const FeatureMatrix& point_feats_src,
                                 const FeatureMatrix& point_feats_tgt, std::size_t k,
                                 std::size_t sinkhorn_iters = 100);

} // namespace mdreg

#endif

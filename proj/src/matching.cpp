#include "mdreg/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mdreg/errors.hpp"

namespace mdreg {

namespace {

// Value-descending order with (row, col) as the deterministic tie break.
struct ScoredCell {
    double value;
    std::size_t row;
    std::size_t col;

    bool operator<(const ScoredCell& o) const {
        if (value != o.value) return value > o.value;
        if (row != o.row) return row < o.row;
        return col < o.col;
    }
};

// Indices of the k largest entries, ties toward the lower index. `stride`
// walks rows (stride 1) or columns (stride = row width) of a dense buffer.
std::vector<std::size_t> topk_indices(const double* base, std::size_t count, std::size_t stride,
                                      std::size_t k) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto better = [&](std::size_t a, std::size_t b) {
        const double va = base[a * stride];
        const double vb = base[b * stride];
        if (va != vb) return va > vb;
        return a < b;
    };
    const std::size_t keep = std::min(k, count);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end(), better);
    order.resize(keep);
    return order;
}

} // namespace

PatchCorrespondences patch_match(const FeatureMatrix& src_feats, const FeatureMatrix& tgt_feats,
                                 double sigma, std::size_t k, PatchNormalization normalization) {
    if (src_feats.rows() == 0 || tgt_feats.rows() == 0)
        throw ParameterError("patch_match: empty feature set");
    if (src_feats.cols() != tgt_feats.cols())
        throw ShapeError("patch_match: feature widths differ");
    if (!(sigma > 0.0)) throw ParameterError("patch_match: sigma must be positive");
    const std::size_t m = src_feats.rows();
    const std::size_t n = tgt_feats.rows();
    if (k == 0 || k > m * n) throw ParameterError("patch_match: k must be in [1, rows*cols]");

    const double inv = 1.0 / (2.0 * sigma * sigma);
    Matrix s(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* fi = src_feats.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double* gj = tgt_feats.row(j);
            double d2 = 0.0;
            for (std::size_t c = 0; c < src_feats.cols(); ++c) {
                const double d = fi[c] - gj[c];
                d2 += d * d;
            }
            s(i, j) = std::exp(-d2 * inv);
        }
    }

    if (normalization == PatchNormalization::rows) {
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += s(i, j);
            if (sum == 0.0) continue; // fully underflowed row carries no signal
            for (std::size_t j = 0; j < n; ++j) s(i, j) /= sum;
        }
    } else {
        double total = 0.0;
        for (double v : s.data()) total += v;
        if (total != 0.0)
            for (double& v : s.data()) v /= total;
    }

    std::vector<ScoredCell> cells;
    cells.reserve(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) cells.push_back({s(i, j), i, j});
    std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(k), cells.end());

    PatchCorrespondences out;
    out.pairs.reserve(k);
    for (std::size_t c = 0; c < k; ++c) out.pairs.push_back({cells[c].row, cells[c].col, cells[c].value});
    return out;
}

Matrix cosine_similarity_matrix(const FeatureMatrix& src, const FeatureMatrix& tgt) {
    if (src.cols() != tgt.cols()) throw ShapeError("cosine_similarity_matrix: widths differ");
    const std::size_t m = src.rows();
    const std::size_t n = tgt.rows();
    const std::size_t d = src.cols();

    const auto norms = [d](const FeatureMatrix& f) {
        std::vector<double> out(f.rows());
        for (std::size_t i = 0; i < f.rows(); ++i) {
            double s = 0.0;
            const double* row = f.row(i);
            for (std::size_t c = 0; c < d; ++c) s += row[c] * row[c];
            out[i] = std::sqrt(s);
        }
        return out;
    };
    const std::vector<double> sn = norms(src);
    const std::vector<double> tn = norms(tgt);

    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        if (sn[i] == 0.0) continue; // zero-norm rows contribute zero similarity
        const double* fi = src.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (tn[j] == 0.0) continue;
            const double* gj = tgt.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += fi[c] * gj[c];
            out(i, j) = dot / (sn[i] * tn[j]);
        }
    }
    return out;
}

Matrix sinkhorn_normalize(const Matrix& m, std::size_t iterations, double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("sinkhorn_normalize: temperature must be positive");
    if (!m.all_finite()) throw ParameterError("sinkhorn_normalize: non-finite entries");
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    if (rows == 0 || cols == 0) return m;

    // Subtracting the maximum cancels in the first row pass; the -700 floor
    // keeps exp() away from zero so every entry stays strictly positive.
    double max_entry = m.data()[0];
    for (double v : m.data()) max_entry = std::max(max_entry, v);
    Matrix z(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i)
        z.data()[i] = std::exp(std::max((m.data()[i] - max_entry) / temperature, -700.0));

    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) sum += z(i, j);
            for (std::size_t j = 0; j < cols; ++j) z(i, j) /= sum;
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < rows; ++i) sum += z(i, j);
            for (std::size_t i = 0; i < rows; ++i) z(i, j) /= sum;
        }
        double deviation = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) sum += z(i, j);
            deviation = std::max(deviation, std::abs(sum - 1.0));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < rows; ++i) sum += z(i, j);
            deviation = std::max(deviation, std::abs(sum - 1.0));
        }
        if (deviation < 1e-6) break;
    }
    return z;
}

std::vector<std::pair<std::size_t, std::size_t>> mutual_topk(const Matrix& z, std::size_t k) {
    if (k == 0) throw ParameterError("mutual_topk: k must be at least 1");
    const std::size_t rows = z.rows();
    const std::size_t cols = z.cols();
    if (rows == 0 || cols == 0) return {};

    // in_row_top[i*cols + j] marks membership of column j in the top-k of row i.
    std::vector<char> in_row_top(rows * cols, 0);
    std::vector<char> in_col_top(rows * cols, 0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j : topk_indices(z.row(i), cols, 1, k)) in_row_top[i * cols + j] = 1;
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i : topk_indices(&z.data()[j], rows, cols, k)) in_col_top[i * cols + j] = 1;

    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (in_row_top[i * cols + j] && in_col_top[i * cols + j]) out.emplace_back(i, j);
    return out;
}

PointCorrespondences point_match(const PatchHierarchy& src_patches,
                                 const PatchHierarchy& tgt_patches,
                                 const PatchCorrespondences& patch_pairs,
                                 const FeatureMatrix& point_feats_src,
                                 const FeatureMatrix& point_feats_tgt, std::size_t k,
                                 std::size_t sinkhorn_iters) {
    if (k == 0) throw ParameterError("point_match: k must be at least 1");

    const auto gather = [](const std::vector<std::size_t>& members, const FeatureMatrix& feats) {
        Matrix out(members.size(), feats.cols());
        for (std::size_t r = 0; r < members.size(); ++r) {
            if (members[r] >= feats.rows())
                throw ShapeError("point_match: patch member outside the feature matrix");
            const double* row = feats.row(members[r]);
            std::copy(row, row + feats.cols(), out.row(r));
        }
        return out;
    };

    PointCorrespondences result;
    std::map<std::pair<std::size_t, std::size_t>, double> best;
    for (const PatchPair& pp : patch_pairs.pairs) {
        if (pp.src >= src_patches.patches.size() || pp.tgt >= tgt_patches.patches.size())
            throw ParameterError("point_match: patch index out of range");
        const std::vector<std::size_t>& ms = src_patches.patches[pp.src].members;
        const std::vector<std::size_t>& mt = tgt_patches.patches[pp.tgt].members;
        if (ms.empty() || mt.empty()) {
            ++result.skipped_patches;
            continue;
        }
        const Matrix sim = cosine_similarity_matrix(gather(ms, point_feats_src),
                                                    gather(mt, point_feats_tgt));
        const Matrix z = sinkhorn_normalize(sim, sinkhorn_iters);
        for (const auto& [li, lj] : mutual_topk(z, k)) {
            const auto key = std::make_pair(ms[li], mt[lj]);
            const double gamma = z(li, lj);
            const auto [it, inserted] = best.try_emplace(key, gamma);
            if (!inserted && gamma > it->second) it->second = gamma;
        }
    }

    result.pairs.reserve(best.size());
    for (const auto& [key, gamma] : best) result.pairs.push_back({key.first, key.second, gamma});
    return result;
}

} // namespace mdreg

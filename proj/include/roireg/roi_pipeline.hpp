#ifndef ROIREG_ROI_PIPELINE_HPP
#define ROIREG_ROI_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "types.hpp"

namespace roireg {

// ---------------------------------------------------------------------------------------------
// Candidate filtering
// ---------------------------------------------------------------------------------------------

struct FilterConfig {
    std::size_t min_area = 200;
    std::size_t max_area = 7000;
    double max_overlap = 0.8;
    double min_pred_iou = 0.90;
    double min_stability = 0.90;

    void validate() const
    {
        if (min_area > max_area) {
            fail(ErrorCode::InvalidArgument, "min_area exceeds max_area");
        }
        if (!(max_overlap >= 0.0 && max_overlap <= 1.0)) {
            fail(ErrorCode::InvalidArgument, "max_overlap must lie in [0,1]");
        }
    }
};

namespace detail {

// Ordering used to decide which of two redundant masks survives: higher predicted IoU
// (absent ranks below any value), then larger area, then lower index.
inline bool higher_quality(const MaskSet& masks, std::size_t a, std::size_t b)
{
    const double qa = masks.meta(a).predicted_iou.value_or(-1.0);
    const double qb = masks.meta(b).predicted_iou.value_or(-1.0);
    if (qa != qb) {
        return qa > qb;
    }
    if (masks[a].area() != masks[b].area()) {
        return masks[a].area() > masks[b].area();
    }
    return a < b;
}

} // namespace detail

/// Removes candidates outside the area window, below the quality thresholds, or redundant with a
/// higher-quality survivor. Survivors keep their original relative order. When `kept_indices`
/// is given it receives the original index of every survivor.
inline MaskSet filter_rois(const MaskSet& masks, const FilterConfig& cfg,
                           std::vector<std::size_t>* kept_indices = nullptr)
{
    cfg.validate();
    for (std::size_t i = 1; i < masks.size(); ++i) {
        require_same_dims(masks[0].dims(), masks[i].dims(), "filter_rois");
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto area = masks[i].area();
        const auto& meta = masks.meta(i);
        if (area < cfg.min_area || area > cfg.max_area) {
            continue;
        }
        if (meta.predicted_iou && *meta.predicted_iou < cfg.min_pred_iou) {
            continue;
        }
        if (meta.stability_score && *meta.stability_score < cfg.min_stability) {
            continue;
        }
        candidates.push_back(i);
    }

    std::vector<std::size_t> by_quality = candidates;
    std::sort(by_quality.begin(), by_quality.end(),
              [&](std::size_t a, std::size_t b) { return detail::higher_quality(masks, a, b); });

    std::vector<std::size_t> accepted;
    for (std::size_t i : by_quality) {
        const bool redundant = std::any_of(accepted.begin(), accepted.end(), [&](std::size_t j) {
            return overlap_ratio(masks[i], masks[j]) > cfg.max_overlap;
        });
        if (!redundant) {
            accepted.push_back(i);
        }
    }
    std::sort(accepted.begin(), accepted.end());

    MaskSet out;
    for (std::size_t i : accepted) {
        out.push_back(masks[i], masks.meta(i));
    }
    if (kept_indices) {
        *kept_indices = std::move(accepted);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Prototype embedding
// ---------------------------------------------------------------------------------------------

/// Area-average resize of a binary mask onto a coarser grid. Each output cell holds the fraction
/// of its preimage voxels that are set.
inline RealGrid downsample_mask(const BinaryMask& mask, const Dims& grid_dims)
{
    const Dims& in = mask.dims();
    if (grid_dims.size() != in.size()) {
        fail(ErrorCode::DimMismatch, "downsample rank mismatch: " + dims_to_string(in) + " -> " +
                                         dims_to_string(grid_dims));
    }
    for (std::size_t a = 0; a < in.size(); ++a) {
        if (grid_dims[a] == 0 || grid_dims[a] > in[a]) {
            fail(ErrorCode::DimMismatch, "cannot downsample " + dims_to_string(in) + " to " +
                                             dims_to_string(grid_dims));
        }
    }

    // Per-axis lookup: input coordinate -> output cell.
    std::vector<std::vector<std::size_t>> cell_of(in.size());
    for (std::size_t a = 0; a < in.size(); ++a) {
        cell_of[a].resize(in[a]);
        for (std::size_t c = 0; c < grid_dims[a]; ++c) {
            const auto [lo, hi] = cell_preimage(c, in[a], grid_dims[a]);
            for (std::size_t i = lo; i < hi; ++i) {
                cell_of[a][i] = c;
            }
        }
    }

    RealGrid out(grid_dims);
    std::vector<std::size_t> covered(out.size(), 0);
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const Index idx = unravel(i, in);
        Index cell{0, 0, 0};
        for (std::size_t a = 0; a < in.size(); ++a) {
            cell[a] = cell_of[a][idx[a]];
        }
        const std::size_t c = ravel(cell, grid_dims);
        ++covered[c];
        out.data[c] += bits[i];
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
        out.data[c] /= static_cast<double>(covered[c]);
    }
    return out;
}

/// Mask-weighted average of the feature vectors, with weights from the area-average resize of
/// the mask onto the feature grid.
inline Prototype compute_prototype(const BinaryMask& mask, const FeatureMap& features)
{
    const RealGrid weights = downsample_mask(mask, features.grid_dims());
    double total = 0.0;
    for (double w : weights.data) {
        total += w;
    }
    if (total < 1e-12) {
        fail(ErrorCode::DegenerateMask, "mask vanishes at feature resolution");
    }
    Prototype p{std::vector<double>(features.channels(), 0.0)};
    const std::size_t cells = features.cells();
    for (std::size_t ch = 0; ch < features.channels(); ++ch) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            if (weights.data[c] != 0.0) {
                acc += weights.data[c] * static_cast<double>(features.at(ch, c));
            }
        }
        p.vec[ch] = acc / total;
    }
    return p;
}

// ---------------------------------------------------------------------------------------------
// Similarity and matching
// ---------------------------------------------------------------------------------------------

struct SimilarityMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    SimilarityMatrix(std::size_t r, std::size_t c, std::vector<double> v)
        : rows(r), cols(c), values(std::move(v))
    {
        if (values.size() != rows * cols) {
            fail(ErrorCode::SizeMismatch, "similarity matrix data does not match its shape");
        }
        for (double s : values) {
            if (!(s >= 0.0 && s <= 1.0)) {
                fail(ErrorCode::InvalidArgument, "similarity entries must lie in [0,1]");
            }
        }
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

/// S(i,j) = |cos(p_i, q_j)|; zero when either vector has norm below 1e-12.
inline SimilarityMatrix similarity_matrix(const std::vector<Prototype>& moving,
                                          const std::vector<Prototype>& fixed)
{
    std::optional<std::size_t> channels;
    for (const auto* list : {&moving, &fixed}) {
        for (const auto& p : *list) {
            if (channels && *channels != p.channels()) {
                fail(ErrorCode::ChannelMismatch, "prototype channel counts differ");
            }
            channels = p.channels();
        }
    }
    auto norm = [](const Prototype& p) {
        double s = 0.0;
        for (double v : p.vec) {
            s += v * v;
        }
        return std::sqrt(s);
    };
    std::vector<double> nf(fixed.size());
    for (std::size_t j = 0; j < fixed.size(); ++j) {
        nf[j] = norm(fixed[j]);
    }

    SimilarityMatrix s(moving.size(), fixed.size());
    for (std::size_t i = 0; i < moving.size(); ++i) {
        const double ni = norm(moving[i]);
        for (std::size_t j = 0; j < fixed.size(); ++j) {
            if (ni < 1e-12 || nf[j] < 1e-12) {
                continue;
            }
            double dot = 0.0;
            for (std::size_t c = 0; c < moving[i].vec.size(); ++c) {
                dot += moving[i].vec[c] * fixed[j].vec[c];
            }
            s(i, j) = std::min(1.0, std::abs(dot) / (ni * nf[j]));
        }
    }
    return s;
}

enum class Assignment {
    Greedy,  ///< descending similarity, each index used at most once
    Optimal, ///< maximum total similarity over admissible entries (Hungarian)
};

namespace detail {

using IndexPair = std::pair<std::size_t, std::size_t>;

inline std::vector<IndexPair> greedy_assignment(const SimilarityMatrix& s, double epsilon)
{
    std::vector<std::tuple<double, std::size_t, std::size_t>> entries;
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.cols; ++j) {
            if (s(i, j) > epsilon) {
                entries.emplace_back(s(i, j), i, j);
            }
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) {
            return std::get<0>(a) > std::get<0>(b);
        }
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });
    std::vector<bool> row_used(s.rows, false);
    std::vector<bool> col_used(s.cols, false);
    std::vector<IndexPair> out;
    for (const auto& [value, i, j] : entries) {
        if (!row_used[i] && !col_used[j]) {
            row_used[i] = col_used[j] = true;
            out.emplace_back(i, j);
        }
    }
    return out;
}

// Shortest-augmenting-path Hungarian algorithm, minimising cost for an n x m matrix, n <= m.
// Returns assigned column per row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost)
{
    const std::size_t n = cost.size();
    const std::size_t m = n ? cost[0].size() : 0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (!used[j]) {
                    const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> col_of_row(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    return col_of_row;
}

inline std::vector<IndexPair> optimal_assignment(const SimilarityMatrix& s, double epsilon)
{
    if (s.rows == 0 || s.cols == 0) {
        return {};
    }
    const bool transpose = s.rows > s.cols;
    const std::size_t n = transpose ? s.cols : s.rows;
    const std::size_t m = transpose ? s.rows : s.cols;
    std::vector<std::vector<double>> cost(n, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            const double v = transpose ? s(c, r) : s(r, c);
            cost[r][c] = v > epsilon ? -v : 0.0;
        }
    }
    const auto assigned = hungarian(cost);
    std::vector<IndexPair> out;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = transpose ? assigned[r] : r;
        const std::size_t j = transpose ? r : assigned[r];
        if (s(i, j) > epsilon) {
            out.emplace_back(i, j);
        }
    }
    return out;
}

} // namespace detail

/// Selects index pairs with S(i,j) > epsilon, each row and column used at most once, and builds
/// the paired masks. Pairs come out in descending similarity, ties by ascending (i,j).
inline RoiPairing match_rois(const MaskSet& moving, const MaskSet& fixed, const SimilarityMatrix& s,
                             double epsilon, Assignment assignment = Assignment::Greedy)
{
    if (s.rows != moving.size() || s.cols != fixed.size()) {
        fail(ErrorCode::DimMismatch, "similarity matrix is " + std::to_string(s.rows) + "x" +
                                         std::to_string(s.cols) + " but mask sets have " +
                                         std::to_string(moving.size()) + " and " +
                                         std::to_string(fixed.size()) + " masks");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "epsilon must lie in [0,1]");
    }
    auto selected = assignment == Assignment::Greedy ? detail::greedy_assignment(s, epsilon)
                                                     : detail::optimal_assignment(s, epsilon);
    std::sort(selected.begin(), selected.end(), [&](const auto& a, const auto& b) {
        const double sa = s(a.first, a.second);
        const double sb = s(b.first, b.second);
        if (sa != sb) {
            return sa > sb;
        }
        return a < b;
    });

    RoiPairing pairing;
    pairing.epsilon_used = epsilon;
    for (const auto& [i, j] : selected) {
        pairing.pairs.push_back(RoiPair{moving[i], fixed[j], s(i, j), i, j});
    }
    return pairing;
}

/// Keeps the k most similar pairs.
inline RoiPairing truncate_pairing(RoiPairing pairing, std::size_t k)
{
    if (pairing.pairs.size() > k) {
        pairing.pairs.resize(k);
    }
    return pairing;
}

// ---------------------------------------------------------------------------------------------
// 2D -> 3D candidate stacking
// ---------------------------------------------------------------------------------------------

inline double mask_iou(const BinaryMask& a, const BinaryMask& b)
{
    const std::size_t inter = intersection_count(a, b);
    const std::size_t uni = a.area() + b.area() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Links per-slice 2D masks into 3D candidates. A mask on slice z joins the chain of its
/// best-IoU partner on slice z+1 when that IoU reaches `min_link_iou` and the partner is not yet
/// claimed; stronger links are resolved first. Every maximal chain becomes one 3D mask, and the
/// chain's metadata is the mean of its members' present values.
inline MaskSet stack_slices_to_3d(const std::vector<std::pair<std::size_t, MaskSet>>& per_slice_masks,
                                  const Dims& volume_dims, double min_link_iou = 0.5)
{
    if (volume_dims.size() != 3) {
        fail(ErrorCode::DimMismatch, "volume dims must be 3D, got " + dims_to_string(volume_dims));
    }
    const Dims plane{volume_dims[1], volume_dims[2]};

    // Flatten into (slice, mask, meta) nodes grouped by slice.
    struct Node {
        std::size_t slice;
        const BinaryMask* mask;
        MaskMeta meta;
    };
    std::map<std::size_t, std::vector<std::size_t>> by_slice;
    std::vector<Node> nodes;
    for (const auto& [z, set] : per_slice_masks) {
        if (z >= volume_dims[0]) {
            fail(ErrorCode::SliceOutOfRange, "slice " + std::to_string(z) + " outside z-extent " +
                                                 std::to_string(volume_dims[0]));
        }
        for (std::size_t k = 0; k < set.size(); ++k) {
            require_same_dims(plane, set[k].dims(), "stacked slice mask");
            by_slice[z].push_back(nodes.size());
            nodes.push_back(Node{z, &set[k], set.meta(k)});
        }
    }

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> next(nodes.size(), none);
    std::vector<bool> claimed(nodes.size(), false);
    for (const auto& [z, sources] : by_slice) {
        const auto it = by_slice.find(z + 1);
        if (it == by_slice.end()) {
            continue;
        }
        const auto& targets = it->second;
        std::vector<std::tuple<double, std::size_t, std::size_t>> links;
        for (std::size_t s : sources) {
            double best = -1.0;
            std::size_t best_t = none;
            for (std::size_t t : targets) {
                const double iou = mask_iou(*nodes[s].mask, *nodes[t].mask);
                if (iou > best) {
                    best = iou;
                    best_t = t;
                }
            }
            if (best_t != none && best >= min_link_iou && best > 0.0) {
                links.emplace_back(best, s, best_t);
            }
        }
        std::sort(links.begin(), links.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) {
                return std::get<0>(a) > std::get<0>(b);
            }
            return std::get<1>(a) < std::get<1>(b);
        });
        for (const auto& [iou, s, t] : links) {
            if (!claimed[t]) {
                claimed[t] = true;
                next[s] = t;
            }
        }
    }

    const std::size_t plane_voxels = voxel_count(plane);
    MaskSet out;
    for (const auto& [z, members] : by_slice) {
        for (std::size_t head : members) {
            if (claimed[head]) {
                continue;
            }
            BinaryMask volume(volume_dims);
            double iou_sum = 0.0, stab_sum = 0.0;
            std::size_t iou_n = 0, stab_n = 0;
            for (std::size_t n = head; n != none; n = next[n]) {
                const auto bits = nodes[n].mask->bits();
                const std::size_t offset = nodes[n].slice * plane_voxels;
                for (std::size_t i = 0; i < plane_voxels; ++i) {
                    if (bits[i]) {
                        volume.set(offset + i, true);
                    }
                }
                if (nodes[n].meta.predicted_iou) {
                    iou_sum += *nodes[n].meta.predicted_iou;
                    ++iou_n;
                }
                if (nodes[n].meta.stability_score) {
                    stab_sum += *nodes[n].meta.stability_score;
                    ++stab_n;
                }
            }
            MaskMeta meta;
            if (iou_n) {
                meta.predicted_iou = iou_sum / static_cast<double>(iou_n);
            }
            if (stab_n) {
                meta.stability_score = stab_sum / static_cast<double>(stab_n);
            }
            out.push_back(std::move(volume), meta);
        }
    }
    return out;
}

/// Groups a mask set whose masks carry `source_slice` metadata into per-slice sets and stacks
/// them. Masks without a source slice are rejected.
inline MaskSet stack_slice_tagged(const MaskSet& masks, const Dims& volume_dims, double min_link_iou = 0.5)
{
    std::map<std::size_t, MaskSet> groups;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& slice = masks.meta(i).source_slice;
        if (!slice) {
            fail(ErrorCode::InvalidArgument, "mask " + std::to_string(i) + " has no source_slice");
        }
        groups[*slice].push_back(masks[i], masks.meta(i));
    }
    std::vector<std::pair<std::size_t, MaskSet>> list(groups.begin(), groups.end());
    return stack_slices_to_3d(list, volume_dims, min_link_iou);
}

// ---------------------------------------------------------------------------------------------
// End-to-end candidate matching
// ---------------------------------------------------------------------------------------------

struct MatchConfig {
    FilterConfig filter;
    bool apply_filter = true;
    double epsilon = 0.8;
    Assignment assignment = Assignment::Greedy;
};

struct MatchResult {
    RoiPairing pairing; ///< indices refer to the input mask sets
    SimilarityMatrix similarity; ///< over the non-degenerate filtered candidates
    std::vector<std::size_t> moving_candidates; ///< input index of each similarity row
    std::vector<std::size_t> fixed_candidates;  ///< input index of each similarity column
    std::size_t degenerate_moving = 0;
    std::size_t degenerate_fixed = 0;
};

namespace detail {

inline std::vector<std::optional<Prototype>> prototypes_or_degenerate(const MaskSet& masks,
                                                                      const FeatureMap& features)
{
    std::vector<std::optional<Prototype>> out(masks.size());
    parallel_for(masks.size(), [&](std::size_t i) {
        try {
            out[i] = compute_prototype(masks[i], features);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateMask) {
                throw;
            }
        }
    });
    return out;
}

} // namespace detail

/// Filter, embed, score and match two candidate sets. Candidates whose prototype is degenerate
/// are dropped from matching rather than failing the whole run.
inline MatchResult match_candidates(const MaskSet& moving, const FeatureMap& moving_features,
                                    const MaskSet& fixed, const FeatureMap& fixed_features,
                                    const MatchConfig& cfg)
{
    if (moving_features.channels() != fixed_features.channels()) {
        fail(ErrorCode::ChannelMismatch, "moving and fixed feature maps differ in channel count");
    }
    std::vector<std::size_t> moving_kept(moving.size()), fixed_kept(fixed.size());
    std::iota(moving_kept.begin(), moving_kept.end(), 0);
    std::iota(fixed_kept.begin(), fixed_kept.end(), 0);
    MaskSet mf = moving, ff = fixed;
    if (cfg.apply_filter) {
        mf = filter_rois(moving, cfg.filter, &moving_kept);
        ff = filter_rois(fixed, cfg.filter, &fixed_kept);
    }

    MatchResult result;
    auto embed = [](const MaskSet& set, const FeatureMap& features, const std::vector<std::size_t>& kept,
                    MaskSet& usable, std::vector<Prototype>& protos, std::vector<std::size_t>& index,
                    std::size_t& degenerate) {
        auto maybe = detail::prototypes_or_degenerate(set, features);
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (!maybe[i]) {
                ++degenerate;
                continue;
            }
            usable.push_back(set[i], set.meta(i));
            protos.push_back(std::move(*maybe[i]));
            index.push_back(kept[i]);
        }
    };
    MaskSet mu, fu;
    std::vector<Prototype> mp, fp;
    embed(mf, moving_features, moving_kept, mu, mp, result.moving_candidates, result.degenerate_moving);
    embed(ff, fixed_features, fixed_kept, fu, fp, result.fixed_candidates, result.degenerate_fixed);

    result.similarity = similarity_matrix(mp, fp);
    result.pairing = match_rois(mu, fu, result.similarity, cfg.epsilon, cfg.assignment);
    for (auto& pair : result.pairing.pairs) {
        pair.moving_index = result.moving_candidates[pair.moving_index];
        pair.fixed_index = result.fixed_candidates[pair.fixed_index];
    }
    return result;
}

} // namespace roireg

#endif // ROIREG_ROI_PIPELINE_HPP

#ifndef ROIREG_DDF_FIT_HPP
#define ROIREG_DDF_FIT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "types.hpp"

namespace roireg {

struct FitConfig {
    double lambda = 1.0;
    std::size_t iterations = 300;
    double step_size = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double dice_smooth = 1e-5;
    double convergence_tol = 1e-7;

    void validate() const
    {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
        }
        if (!(step_size > 0.0) || !(adam_eps > 0.0) || !(dice_smooth > 0.0) || !(convergence_tol >= 0.0)) {
            fail(ErrorCode::InvalidArgument, "step_size, adam_eps and dice_smooth must be positive");
        }
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
            fail(ErrorCode::InvalidArgument, "Adam betas must lie in [0,1)");
        }
    }
};

/// One evaluation of the objective. `roi_mse` and `roi_dice` are the weighted sums
/// (0.5 per pair) so that total == roi_mse + roi_dice + lambda * smoothness.
struct LossBreakdown {
    double total = 0.0;
    double roi_mse = 0.0;
    double roi_dice = 0.0;
    double smoothness = 0.0;
    std::vector<std::pair<double, double>> per_pair; ///< raw (mse, dice_loss) per pair
};

// ---------------------------------------------------------------------------------------------
// Multilinear sampling
// ---------------------------------------------------------------------------------------------

struct LinearSample {
    double value = 0.0;
    std::array<double, kMaxRank> gradient{0.0, 0.0, 0.0}; ///< d value / d position, per axis
};

/// Multilinear interpolation of `grid` at a continuous voxel position; corners outside the grid
/// read as zero. The gradient is the derivative of the interpolant inside the enclosing cell.
inline LinearSample sample_linear(const RealGrid& grid, const Index& strides, const double* pos,
                                  bool with_gradient)
{
    const std::size_t d = grid.dims.size();
    std::array<std::ptrdiff_t, kMaxRank> base{0, 0, 0};
    std::array<double, kMaxRank> frac{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < d; ++a) {
        // Every corner of such a cell is padding (and the integer cast below would overflow).
        if (!(pos[a] > -1.0 && pos[a] < static_cast<double>(grid.dims[a]))) {
            return {};
        }
        const double fl = std::floor(pos[a]);
        base[a] = static_cast<std::ptrdiff_t>(fl);
        frac[a] = pos[a] - fl;
    }
    LinearSample out;
    const unsigned corners = 1u << d;
    for (unsigned corner = 0; corner < corners; ++corner) {
        std::size_t offset = 0;
        bool inside = true;
        double weight = 1.0;
        std::array<double, kMaxRank> factor{1.0, 1.0, 1.0};
        for (std::size_t a = 0; a < d; ++a) {
            const unsigned bit = (corner >> (d - 1 - a)) & 1u;
            const std::ptrdiff_t coord = base[a] + static_cast<std::ptrdiff_t>(bit);
            if (coord < 0 || coord >= static_cast<std::ptrdiff_t>(grid.dims[a])) {
                inside = false;
                break;
            }
            offset += static_cast<std::size_t>(coord) * strides[a];
            factor[a] = bit ? frac[a] : 1.0 - frac[a];
            weight *= factor[a];
        }
        if (!inside) {
            continue;
        }
        const double v = grid.data[offset];
        if (v == 0.0) {
            continue;
        }
        out.value += weight * v;
        if (with_gradient) {
            for (std::size_t c = 0; c < d; ++c) {
                const unsigned bit = (corner >> (d - 1 - c)) & 1u;
                double g = bit ? 1.0 : -1.0;
                for (std::size_t a = 0; a < d; ++a) {
                    if (a != c) {
                        g *= factor[a];
                    }
                }
                out.gradient[c] += g * v;
            }
        }
    }
    return out;
}

/// Resamples `mask` through the field: output(v) = mask(v + u(v)), zero outside the domain.
inline RealGrid warp_mask(const RealGrid& mask, const DisplacementField& ddf)
{
    require_same_dims(mask.dims, ddf.dims(), "warp_mask");
    const std::size_t d = ddf.rank();
    const Index strides = row_major_strides(mask.dims);
    RealGrid out(mask.dims);
    std::array<double, kMaxRank> pos{0.0, 0.0, 0.0};
    for (std::size_t v = 0; v < out.size(); ++v) {
        const Index idx = unravel(v, mask.dims);
        for (std::size_t a = 0; a < d; ++a) {
            pos[a] = static_cast<double>(idx[a]) + ddf.at(v, a);
        }
        out.data[v] = sample_linear(mask, strides, pos.data(), false).value;
    }
    return out;
}

inline RealGrid warp_mask(const BinaryMask& mask, const DisplacementField& ddf)
{
    return warp_mask(to_real_grid(mask), ddf);
}

// ---------------------------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------------------------

struct RoiLoss {
    double mse = 0.0;
    double dice_loss = 0.0;
};

/// Voxelwise MSE and soft Dice loss 1 - (2 sum ab + s) / (sum a^2 + sum b^2 + s).
inline RoiLoss roi_loss(const RealGrid& fixed_warped, const RealGrid& moving, double dice_smooth)
{
    require_same_dims(fixed_warped.dims, moving.dims, "roi_loss");
    double sq = 0.0, ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < moving.size(); ++i) {
        const double a = moving.data[i];
        const double b = fixed_warped.data[i];
        sq += (a - b) * (a - b);
        ab += a * b;
        aa += a * a;
        bb += b * b;
    }
    RoiLoss out;
    out.mse = moving.size() ? sq / static_cast<double>(moving.size()) : 0.0;
    out.dice_loss = 1.0 - (2.0 * ab + dice_smooth) / (aa + bb + dice_smooth);
    return out;
}

namespace detail {

inline void require_smoothable(const Dims& dims)
{
    for (auto n : dims) {
        if (n < 2) {
            fail(ErrorCode::GridTooSmall, "every axis needs at least 2 voxels, got " + dims_to_string(dims));
        }
    }
}

// Adds d(smoothness)/du into `gradient` (scaled by `weight`) when non-null; returns the loss.
inline double smoothness_impl(const DisplacementField& ddf, std::span<double> gradient, double weight)
{
    const Dims& dims = ddf.dims();
    require_smoothable(dims);
    const std::size_t d = ddf.rank();
    const std::size_t n = ddf.voxels();
    const Index strides = row_major_strides(dims);
    const auto u = ddf.vectors();
    const double norm = 1.0 / static_cast<double>(d * d);
    double loss = 0.0;
    for (std::size_t axis = 0; axis < d; ++axis) {
        const std::size_t count = n / dims[axis] * (dims[axis] - 1);
        const double scale = norm / static_cast<double>(count);
        double acc = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if ((v / strides[axis]) % dims[axis] == dims[axis] - 1) {
                continue;
            }
            const std::size_t w = v + strides[axis];
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = u[w * d + c] - u[v * d + c];
                acc += diff * diff;
                if (!gradient.empty()) {
                    const double g = weight * 2.0 * scale * diff;
                    gradient[w * d + c] += g;
                    gradient[v * d + c] -= g;
                }
            }
        }
        loss += scale * acc;
    }
    return loss;
}

} // namespace detail

/// Mean squared forward difference of the displacement, averaged over axes and components.
/// Forward differences that would leave the grid are excluded.
inline double smoothness_loss(const DisplacementField& ddf)
{
    return detail::smoothness_impl(ddf, {}, 0.0);
}

// ---------------------------------------------------------------------------------------------
// Objective with analytic gradient
// ---------------------------------------------------------------------------------------------

/// Real-valued (moving, fixed) mask grids for the pairs being fitted.
struct PairGrids {
    Dims dims;
    std::vector<RealGrid> moving;
    std::vector<RealGrid> fixed;

    [[nodiscard]] std::size_t size() const noexcept { return moving.size(); }
};

inline PairGrids pair_grids(const RoiPairing& pairing)
{
    if (pairing.empty()) {
        fail(ErrorCode::EmptyPairing, "cannot fit a displacement field without ROI pairs");
    }
    PairGrids grids;
    grids.dims = pairing.pairs.front().moving_mask.dims();
    require_image_rank(grids.dims);
    for (const auto& pair : pairing.pairs) {
        require_same_dims(grids.dims, pair.moving_mask.dims(), "pairing moving mask");
        require_same_dims(grids.dims, pair.fixed_mask.dims(), "pairing fixed mask");
        grids.moving.push_back(to_real_grid(pair.moving_mask));
        grids.fixed.push_back(to_real_grid(pair.fixed_mask));
    }
    return grids;
}

/// Sum over pairs of 0.5*mse + 0.5*dice_loss between moving and warped fixed masks, plus
/// lambda * smoothness. When `gradient` is non-empty it receives d(total)/du (overwritten).
inline LossBreakdown objective(const PairGrids& grids, const DisplacementField& ddf, const FitConfig& cfg,
                               std::span<double> gradient = {})
{
    require_same_dims(grids.dims, ddf.dims(), "objective");
    const std::size_t d = ddf.rank();
    const std::size_t n = ddf.voxels();
    const bool want_grad = !gradient.empty();
    if (want_grad && gradient.size() != n * d) {
        fail(ErrorCode::SizeMismatch, "gradient buffer has wrong length");
    }
    const Index strides = row_major_strides(grids.dims);

    const std::size_t k = grids.size();
    std::vector<RoiLoss> losses(k);
    std::vector<std::vector<double>> pair_grad(want_grad ? k : 0);

    parallel_for(k, [&](std::size_t p) {
        const RealGrid& fixed = grids.fixed[p];
        const RealGrid& moving = grids.moving[p];
        std::vector<double> warped(n);
        std::vector<double> dwarp(want_grad ? n * d : 0);
        std::array<double, kMaxRank> pos{0.0, 0.0, 0.0};
        for (std::size_t v = 0; v < n; ++v) {
            const Index idx = unravel(v, grids.dims);
            for (std::size_t a = 0; a < d; ++a) {
                pos[a] = static_cast<double>(idx[a]) + ddf.at(v, a);
            }
            const LinearSample s = sample_linear(fixed, strides, pos.data(), want_grad);
            warped[v] = s.value;
            for (std::size_t a = 0; a < d && want_grad; ++a) {
                dwarp[v * d + a] = s.gradient[a];
            }
        }
        double sq = 0.0, ab = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            const double a = moving.data[v];
            const double b = warped[v];
            sq += (a - b) * (a - b);
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
        const double numer = 2.0 * ab + cfg.dice_smooth;
        const double denom = aa + bb + cfg.dice_smooth;
        losses[p] = RoiLoss{sq / static_cast<double>(n), 1.0 - numer / denom};

        if (want_grad) {
            auto& g = pair_grad[p];
            g.assign(n * d, 0.0);
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t v = 0; v < n; ++v) {
                const double a = moving.data[v];
                const double b = warped[v];
                const double dmse = -2.0 * (a - b) * inv_n;
                const double ddice = -(2.0 * a * denom - 2.0 * b * numer) / (denom * denom);
                const double dl_db = 0.5 * dmse + 0.5 * ddice;
                if (dl_db == 0.0) {
                    continue;
                }
                for (std::size_t c = 0; c < d; ++c) {
                    g[v * d + c] = dl_db * dwarp[v * d + c];
                }
            }
        }
    });

    LossBreakdown out;
    out.per_pair.reserve(k);
    for (const auto& l : losses) {
        out.roi_mse += 0.5 * l.mse;
        out.roi_dice += 0.5 * l.dice_loss;
        out.per_pair.emplace_back(l.mse, l.dice_loss);
    }
    if (want_grad) {
        std::fill(gradient.begin(), gradient.end(), 0.0);
        for (const auto& g : pair_grad) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                gradient[i] += g[i];
            }
        }
    }
    out.smoothness = detail::smoothness_impl(ddf, gradient, cfg.lambda);
    out.total = out.roi_mse + out.roi_dice + cfg.lambda * out.smoothness;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Iterative fitting
// ---------------------------------------------------------------------------------------------

struct FitResult {
    DisplacementField ddf;
    /// history[0] is the zero field; one entry per update after that. When the last iterate is
    /// not the lowest-loss one, the lowest-loss field is returned and its breakdown is appended,
    /// so history.back() always describes `ddf`.
    std::vector<LossBreakdown> history;
    std::size_t updates = 0;
    bool converged = false;
};

/// Fits a displacement field on the moving grid so that each warped fixed mask matches its
/// moving mask, using Adam on the analytic gradient.
inline FitResult fit_ddf(const RoiPairing& pairing, const FitConfig& cfg, const Spacing& spacing = {})
{
    cfg.validate();
    const PairGrids grids = pair_grids(pairing);
    detail::require_smoothable(grids.dims);

    FitResult result;
    result.ddf = DisplacementField(grids.dims, spacing);
    const std::size_t count = result.ddf.vectors().size();
    std::vector<double> grad(count, 0.0), m1(count, 0.0), m2(count, 0.0);

    auto evaluate = [&](const DisplacementField& field) {
        LossBreakdown loss = objective(grids, field, cfg, grad);
        if (!std::isfinite(loss.total)) {
            fail(ErrorCode::NonFiniteLoss, "objective diverged; reduce the step size");
        }
        for (double g : grad) {
            if (!std::isfinite(g)) {
                fail(ErrorCode::NonFiniteLoss, "gradient diverged; reduce the step size");
            }
        }
        return loss;
    };

    result.history.push_back(evaluate(result.ddf));
    DisplacementField best = result.ddf;
    std::size_t best_iter = 0;
    double beta1_t = 1.0, beta2_t = 1.0;

    auto u = result.ddf.vectors();
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        beta1_t *= cfg.adam_beta1;
        beta2_t *= cfg.adam_beta2;
        for (std::size_t i = 0; i < count; ++i) {
            m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * grad[i];
            m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
            const double mhat = m1[i] / (1.0 - beta1_t);
            const double vhat = m2[i] / (1.0 - beta2_t);
            u[i] -= cfg.step_size * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            if (!std::isfinite(u[i])) {
                fail(ErrorCode::NonFiniteLoss, "displacement diverged; reduce the step size");
            }
        }
        const double previous = result.history.back().total;
        result.history.push_back(evaluate(result.ddf));
        result.updates = t;
        const double current = result.history.back().total;
        if (current < result.history[best_iter].total) {
            best_iter = result.history.size() - 1;
            best = result.ddf;
        }
        const double scale = std::max(std::abs(previous), 1e-300);
        if (std::abs(previous - current) / scale < cfg.convergence_tol) {
            result.converged = true;
            break;
        }
    }

    if (best_iter != result.history.size() - 1) {
        result.ddf = std::move(best);
        result.history.push_back(result.history[best_iter]);
    }
    return result;
}

// ---------------------------------------------------------------------------------------------
// DDF <-> single-voxel ROI pairs
// ---------------------------------------------------------------------------------------------

inline std::ptrdiff_t round_half_up(double x)
{
    return static_cast<std::ptrdiff_t>(std::floor(x + 0.5));
}

/// Displacement at a continuous position, multilinearly interpolated (clamped to the grid).
inline Point displacement_at(const DisplacementField& ddf, const Point& x)
{
    const std::size_t d = ddf.rank();
    const Dims& dims = ddf.dims();
    const Index strides = row_major_strides(dims);
    std::array<std::size_t, kMaxRank> lo{0, 0, 0};
    std::array<double, kMaxRank> frac{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < d; ++a) {
        const double clamped = std::clamp(x[a], 0.0, static_cast<double>(dims[a] - 1));
        const double fl = std::floor(clamped);
        lo[a] = static_cast<std::size_t>(fl);
        frac[a] = clamped - fl;
        if (lo[a] + 1 >= dims[a]) {
            lo[a] = dims[a] - 1;
            frac[a] = 0.0;
        }
    }
    Point out(d, 0.0);
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
        double w = 1.0;
        std::size_t offset = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const unsigned bit = (corner >> (d - 1 - a)) & 1u;
            w *= bit ? frac[a] : 1.0 - frac[a];
            offset += (lo[a] + (bit && frac[a] > 0.0 ? 1 : 0)) * strides[a];
        }
        if (w == 0.0) {
            continue;
        }
        for (std::size_t c = 0; c < d; ++c) {
            out[c] += w * ddf.at(offset, c);
        }
    }
    return out;
}

struct SampledPairs {
    RoiPairing pairing;
    std::vector<std::size_t> skipped; ///< sample indices whose displaced point left the grid
};

/// Samples the field at the given points: each point x yields the pair
/// (voxel round(x), voxel round(x + u(x))) as single-voxel masks.
inline SampledPairs ddf_to_roi_pairs(const DisplacementField& ddf, const std::vector<Point>& sample_points)
{
    const Dims& dims = ddf.dims();
    const std::size_t d = ddf.rank();
    SampledPairs out;
    out.pairing.epsilon_used = 0.0;
    for (std::size_t s = 0; s < sample_points.size(); ++s) {
        const Point& x = sample_points[s];
        if (x.size() != d) {
            fail(ErrorCode::DimMismatch, "sample point rank does not match the field");
        }
        for (std::size_t a = 0; a < d; ++a) {
            if (!(x[a] >= 0.0 && x[a] <= static_cast<double>(dims[a] - 1))) {
                fail(ErrorCode::PointOutOfRange, "sample point " + std::to_string(s) + " lies outside the grid");
            }
        }
        const Point u = displacement_at(ddf, x);
        Index from{0, 0, 0}, to{0, 0, 0};
        bool inside = true;
        for (std::size_t a = 0; a < d; ++a) {
            from[a] = static_cast<std::size_t>(round_half_up(x[a]));
            const double t = std::floor(x[a] + u[a] + 0.5);
            if (!(t >= 0.0 && t < static_cast<double>(dims[a]))) {
                inside = false;
                break;
            }
            to[a] = static_cast<std::size_t>(t);
        }
        if (!inside) {
            out.skipped.push_back(s);
            continue;
        }
        BinaryMask moving(dims), fixed(dims);
        moving.set(ravel(from, dims), true);
        fixed.set(ravel(to, dims), true);
        out.pairing.pairs.push_back(RoiPair{std::move(moving), std::move(fixed), 1.0, s, s});
    }
    return out;
}

/// Every voxel centre of the grid, in row-major order.
inline std::vector<Point> all_voxel_points(const Dims& dims)
{
    std::vector<Point> points(voxel_count(dims), Point(dims.size(), 0.0));
    for (std::size_t v = 0; v < points.size(); ++v) {
        const Index idx = unravel(v, dims);
        for (std::size_t a = 0; a < dims.size(); ++a) {
            points[v][a] = static_cast<double>(idx[a]);
        }
    }
    return points;
}

/// Rebuilds a field from ROI pairs by centroid differencing: the displacement at the (rounded)
/// moving centroid is centroid(fixed) - centroid(moving). Voxels no pair lands on stay zero.
inline DisplacementField reconstruct_ddf(const RoiPairing& pairing, const Dims& dims)
{
    DisplacementField ddf(dims);
    const std::size_t d = dims.size();
    for (const auto& pair : pairing.pairs) {
        require_same_dims(dims, pair.moving_mask.dims(), "reconstruct_ddf");
        const Point cm = mask_centroid(pair.moving_mask);
        const Point cf = mask_centroid(pair.fixed_mask);
        Index at{0, 0, 0};
        for (std::size_t a = 0; a < d; ++a) {
            at[a] = static_cast<std::size_t>(round_half_up(cm[a]));
        }
        const std::size_t v = ravel(at, dims);
        for (std::size_t a = 0; a < d; ++a) {
            ddf.at(v, a) = cf[a] - cm[a];
        }
    }
    return ddf;
}

} // namespace roireg

#endif // ROIREG_DDF_FIT_HPP

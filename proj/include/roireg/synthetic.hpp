#ifndef ROIREG_SYNTHETIC_HPP
#define ROIREG_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "interchange.hpp"
#include "roi_pipeline.hpp"
#include "types.hpp"

namespace roireg {

/// Disc/sphere, axis-aligned box, axis-aligned ellipse/ellipsoid.
enum class ShapeKind { Disc, Box, Ellipse };

inline std::string to_string(ShapeKind kind)
{
    switch (kind) {
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Box: return "box";
    case ShapeKind::Ellipse: return "ellipse";
    }
    return "unknown";
}

inline ShapeKind shape_kind_from_string(const std::string& s)
{
    if (s == "disc" || s == "sphere") {
        return ShapeKind::Disc;
    }
    if (s == "box") {
        return ShapeKind::Box;
    }
    if (s == "ellipse" || s == "ellipsoid") {
        return ShapeKind::Ellipse;
    }
    fail(ErrorCode::InvalidArgument, "unknown shape kind '" + s + "'");
}

/// `extent` holds per-axis radii (disc, ellipse) or half-widths (box), in voxels.
struct ShapeParams {
    ShapeKind kind = ShapeKind::Disc;
    Point center;
    std::vector<double> extent;

    [[nodiscard]] bool contains(const Point& p) const
    {
        if (kind == ShapeKind::Box) {
            for (std::size_t a = 0; a < center.size(); ++a) {
                if (std::abs(p[a] - center[a]) > extent[a]) {
                    return false;
                }
            }
            return true;
        }
        double s = 0.0;
        for (std::size_t a = 0; a < center.size(); ++a) {
            const double q = (p[a] - center[a]) / extent[a];
            s += q * q;
        }
        return s <= 1.0;
    }

    [[nodiscard]] double bounding_radius() const
    {
        if (kind == ShapeKind::Box) {
            double s = 0.0;
            for (double h : extent) {
                s += h * h;
            }
            return std::sqrt(s);
        }
        return *std::max_element(extent.begin(), extent.end());
    }
};

namespace detail {

inline void check_shape(const ShapeParams& shape, const Dims& dims)
{
    require_image_rank(dims);
    if (shape.center.size() != dims.size() || shape.extent.size() != dims.size()) {
        fail(ErrorCode::DimMismatch, "shape rank does not match grid rank");
    }
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (!(shape.center[a] >= 0.0 && shape.center[a] <= static_cast<double>(dims[a] - 1))) {
            fail(ErrorCode::OutOfBounds, "shape centre lies outside " + dims_to_string(dims));
        }
        if (!(shape.extent[a] > 0.0)) {
            fail(ErrorCode::OutOfBounds, "shape extents must be positive");
        }
    }
}

// Rasterises the image of `shape` under x -> centre + A (x - centre) + t by inverse-mapping
// every voxel centre.
inline BinaryMask rasterize_mapped(const ShapeParams& shape, const Dims& dims,
                                   const std::optional<AffineTransform>& inverse_about_centre)
{
    BinaryMask mask(dims);
    const std::size_t d = dims.size();
    Point p(d), q(d);
    for (std::size_t v = 0; v < mask.size(); ++v) {
        const Index idx = unravel(v, dims);
        for (std::size_t a = 0; a < d; ++a) {
            p[a] = static_cast<double>(idx[a]);
        }
        if (inverse_about_centre) {
            q = inverse_about_centre->apply(p);
        } else {
            q = p;
        }
        if (shape.contains(q)) {
            mask.set(v, true);
        }
    }
    return mask;
}

// Voxel count of rasterize_mapped, visiting only the box that can hold the mapped shape.
inline std::size_t mapped_area(const ShapeParams& shape, const Dims& dims, const AffineTransform& forward,
                               const AffineTransform& inverse)
{
    const std::size_t d = dims.size();
    const Point c = forward.apply(shape.center);
    const double r = shape.bounding_radius();
    std::vector<std::size_t> lo(d), hi(d);
    for (std::size_t a = 0; a < d; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < d; ++b) {
            row += forward.matrix()[a][b] * forward.matrix()[a][b];
        }
        const double half = r * std::sqrt(row) + 1.0;
        lo[a] = static_cast<std::size_t>(std::clamp(std::floor(c[a] - half), 0.0, static_cast<double>(dims[a] - 1)));
        hi[a] = static_cast<std::size_t>(std::clamp(std::ceil(c[a] + half), 0.0, static_cast<double>(dims[a] - 1)));
    }
    std::size_t area = 0;
    std::vector<std::size_t> idx = lo;
    Point p(d);
    while (true) {
        for (std::size_t a = 0; a < d; ++a) {
            p[a] = static_cast<double>(idx[a]);
        }
        area += shape.contains(inverse.apply(p)) ? 1 : 0;
        std::size_t a = d;
        while (a > 0 && idx[a - 1] == hi[a - 1]) {
            idx[a - 1] = lo[a - 1];
            --a;
        }
        if (a == 0) {
            break;
        }
        ++idx[a - 1];
    }
    return area;
}

} // namespace detail

/// Inside-test rasterisation at voxel centres.
inline BinaryMask rasterize_shape(const ShapeParams& shape, const Dims& dims)
{
    detail::check_shape(shape, dims);
    return detail::rasterize_mapped(shape, dims, std::nullopt);
}

inline AffineTransform rotation_2d(double degrees, std::vector<double> translation = {0.0, 0.0})
{
    const double r = degrees * std::numbers::pi / 180.0;
    return {{{std::cos(r), -std::sin(r)}, {std::sin(r), std::cos(r)}}, std::move(translation)};
}

/// Rotation in the (y,x) plane of a (z,y,x) volume.
inline AffineTransform rotation_3d_axial(double degrees, std::vector<double> translation = {0.0, 0.0, 0.0})
{
    const double r = degrees * std::numbers::pi / 180.0;
    return {{{1.0, 0.0, 0.0}, {0.0, std::cos(r), -std::sin(r)}, {0.0, std::sin(r), std::cos(r)}},
            std::move(translation)};
}

struct SyntheticSpec {
    Dims dims{64, 64};
    Spacing spacing; ///< empty means unit spacing
    std::size_t num_shapes = 3;
    std::vector<ShapeKind> shape_kinds{ShapeKind::Disc};
    /// Applied about the grid centre: y = c + A (x - c) + t. Defaults to identity.
    std::optional<AffineTransform> transform;
    std::size_t feature_channels = 8;
    double feature_noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::size_t feature_stride = 0; ///< 0 picks 4 in 2D and 2 in 3D
    double min_radius = 0.0;        ///< 0 picks a size that clears the default area filter
    double max_radius = 0.0;
};

struct GroundTruth {
    std::vector<std::size_t> pair_permutation; ///< fixed index matching each moving index
    AffineTransform transform;                 ///< about the grid centre
    Point transform_centre;
    std::vector<Point> moving_centroids; ///< per moving mask, physical units
    std::vector<Point> fixed_centroids;  ///< per fixed mask, physical units
    std::vector<ShapeParams> shapes;     ///< moving-space shapes, in shape order
    std::vector<std::size_t> moving_shape; ///< shape id of each moving mask
    std::vector<std::size_t> fixed_shape;  ///< shape id of each fixed mask
};

struct SyntheticCase {
    CaseData moving;
    CaseData fixed;
    GroundTruth truth;
};

namespace detail {

inline std::vector<std::vector<double>> random_rotation(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (;;) {
            for (auto& v : q[i]) {
                v = gauss(rng);
            }
            for (std::size_t k = 0; k < i; ++k) {
                double dot = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    dot += q[i][c] * q[k][c];
                }
                for (std::size_t c = 0; c < n; ++c) {
                    q[i][c] -= dot * q[k][c];
                }
            }
            double norm = 0.0;
            for (double v : q[i]) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm > 1e-6) {
                for (auto& v : q[i]) {
                    v /= norm;
                }
                break;
            }
        }
    }
    return q;
}

inline double frobenius(const AffineTransform& t)
{
    double s = 0.0;
    for (const auto& row : t.matrix()) {
        for (double v : row) {
            s += v * v;
        }
    }
    return std::sqrt(s);
}

// Feature grid where every cell touching shape s carries basis[s] and other cells carry the
// background vector basis.back(), plus Gaussian noise.
inline FeatureMap mock_features(const Dims& dims, const Dims& grid, const std::vector<BinaryMask>& shape_masks,
                                const std::vector<std::vector<double>>& basis, double sigma, std::mt19937_64& rng)
{
    const std::size_t cells = voxel_count(grid);
    const std::size_t channels = basis.front().size();
    std::vector<std::size_t> label(cells, shape_masks.size());
    std::vector<std::vector<std::size_t>> cell_of(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) {
        cell_of[a].resize(dims[a]);
        for (std::size_t c = 0; c < grid[a]; ++c) {
            const auto [lo, hi] = cell_preimage(c, dims[a], grid[a]);
            for (std::size_t i = lo; i < hi; ++i) {
                cell_of[a][i] = c;
            }
        }
    }
    for (std::size_t s = 0; s < shape_masks.size(); ++s) {
        const auto bits = shape_masks[s].bits();
        for (std::size_t v = 0; v < bits.size(); ++v) {
            if (!bits[v]) {
                continue;
            }
            const Index idx = unravel(v, dims);
            Index cell{0, 0, 0};
            for (std::size_t a = 0; a < dims.size(); ++a) {
                cell[a] = cell_of[a][idx[a]];
            }
            label[ravel(cell, grid)] = s;
        }
    }
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    std::vector<float> data(channels * cells);
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double v = basis[label[c]][ch];
            if (sigma > 0.0) {
                v += noise(rng);
            }
            data[ch * cells + c] = static_cast<float>(v);
        }
    }
    return {channels, grid, std::move(data)};
}

inline Image render_image(const Dims& dims, const Spacing& spacing, const std::vector<BinaryMask>& shape_masks)
{
    std::vector<float> data(voxel_count(dims), 0.1f);
    for (std::size_t s = 0; s < shape_masks.size(); ++s) {
        const float value = 0.3f + 0.6f * static_cast<float>(s + 1) / static_cast<float>(shape_masks.size());
        const auto bits = shape_masks[s].bits();
        for (std::size_t v = 0; v < bits.size(); ++v) {
            if (bits[v]) {
                data[v] = value;
            }
        }
    }
    return {dims, std::move(data), spacing};
}

} // namespace detail

/// Builds a moving/fixed case pair with known correspondence. Shapes are placed at random,
/// mapped through the transform into the fixed image, listed in a different random order on
/// each side, and embedded with mock features (one orthonormal vector per shape).
inline SyntheticCase generate_case(const SyntheticSpec& spec)
{
    require_image_rank(spec.dims);
    const std::size_t d = spec.dims.size();
    const Spacing spacing = spec.spacing.empty() ? unit_spacing(d) : spec.spacing;
    validate_spacing(spacing, d);
    if (spec.num_shapes == 0) {
        fail(ErrorCode::InvalidArgument, "num_shapes must be at least 1");
    }
    if (spec.shape_kinds.empty()) {
        fail(ErrorCode::InvalidArgument, "shape_kinds must not be empty");
    }
    if (spec.feature_channels < spec.num_shapes + 1) {
        fail(ErrorCode::InvalidArgument, "feature_channels must exceed num_shapes");
    }
    if (spec.feature_noise_sigma < 0.0) {
        fail(ErrorCode::InvalidArgument, "feature_noise_sigma must be >= 0");
    }
    const AffineTransform transform =
        spec.transform ? *spec.transform : AffineTransform::translation(std::vector<double>(d, 0.0));
    if (transform.rank() != d) {
        fail(ErrorCode::DimMismatch, "transform rank does not match dims");
    }
    const std::size_t stride = spec.feature_stride ? spec.feature_stride : (d == 2 ? 4 : 2);
    Dims grid(d);
    for (std::size_t a = 0; a < d; ++a) {
        grid[a] = std::max<std::size_t>(1, spec.dims[a] / stride);
    }
    const bool auto_radius = spec.min_radius <= 0.0 && spec.max_radius <= 0.0;
    double rmin = spec.min_radius > 0.0 ? spec.min_radius : (d == 2 ? 9.0 : 4.0);
    double rmax = spec.max_radius > 0.0 ? spec.max_radius : (d == 2 ? 12.0 : 5.5);
    if (rmax < rmin) {
        fail(ErrorCode::InvalidArgument, "max_radius below min_radius");
    }

    Point centre(d);
    for (std::size_t a = 0; a < d; ++a) {
        centre[a] = (static_cast<double>(spec.dims[a]) - 1.0) / 2.0;
    }
    // y = c + A (x - c) + t  ==  A x + (c - A c + t)
    std::vector<double> shift(d);
    const Point ac = AffineTransform(transform.matrix(), std::vector<double>(d, 0.0)).apply(centre);
    for (std::size_t a = 0; a < d; ++a) {
        shift[a] = centre[a] - ac[a] + transform.translation()[a];
    }
    const AffineTransform forward(transform.matrix(), shift);
    const AffineTransform inverse = forward.inverse();
    const double stretch = std::max(1.0, detail::frobenius(transform) / std::sqrt(static_cast<double>(d)));
    const double gap = static_cast<double>(stride) * std::sqrt(static_cast<double>(d)) + 1.0;

    std::mt19937_64 rng(spec.seed);
    std::vector<ShapeParams> shapes;
    bool placed = false;
    for (int rescale = 0; rescale < 10 && !placed; ++rescale) {
        const double scale = std::pow(0.9, rescale);
        for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
            shapes.clear();
            bool ok = true;
            for (std::size_t s = 0; s < spec.num_shapes && ok; ++s) {
                ShapeParams shape;
                shape.kind = spec.shape_kinds[s % spec.shape_kinds.size()];
                std::uniform_real_distribution<double> radius(rmin * scale, rmax * scale);
                const double r = radius(rng);
                std::uniform_real_distribution<double> aspect(shape.kind == ShapeKind::Disc ? 1.0 : 0.6, 1.0);
                for (std::size_t a = 0; a < d; ++a) {
                    shape.extent.push_back(shape.kind == ShapeKind::Disc ? r : r * aspect(rng));
                }
                const double bound = shape.bounding_radius();
                shape.center.resize(d);
                for (std::size_t a = 0; a < d; ++a) {
                    const double lo = bound + 1.0;
                    const double hi = static_cast<double>(spec.dims[a]) - 2.0 - bound;
                    if (hi < lo) {
                        ok = false;
                        break;
                    }
                    shape.center[a] = std::uniform_real_distribution<double>(lo, hi)(rng);
                }
                if (!ok) {
                    break;
                }
                const Point mapped = forward.apply(shape.center);
                for (std::size_t a = 0; a < d; ++a) {
                    const double b = stretch * bound + 1.0;
                    if (mapped[a] < b || mapped[a] > static_cast<double>(spec.dims[a]) - 1.0 - b) {
                        ok = false;
                    }
                }
                for (const auto& other : shapes) {
                    if (!ok) {
                        break;
                    }
                    double dm = 0.0, df = 0.0;
                    const Point om = forward.apply(other.center);
                    for (std::size_t a = 0; a < d; ++a) {
                        dm += (shape.center[a] - other.center[a]) * (shape.center[a] - other.center[a]);
                        df += (mapped[a] - om[a]) * (mapped[a] - om[a]);
                    }
                    const double need = bound + other.bounding_radius();
                    if (std::sqrt(dm) < need + gap || std::sqrt(df) < stretch * need + gap) {
                        ok = false;
                    }
                }
                if (ok && auto_radius) {
                    // Automatic sizes must survive the default area window on both sides.
                    const FilterConfig window;
                    const AffineTransform identity = AffineTransform::translation(std::vector<double>(d, 0.0));
                    for (const std::size_t area : {detail::mapped_area(shape, spec.dims, identity, identity),
                                                   detail::mapped_area(shape, spec.dims, forward, inverse)}) {
                        if (area < window.min_area || area > window.max_area) {
                            ok = false;
                        }
                    }
                }
                if (ok) {
                    shapes.push_back(std::move(shape));
                }
            }
            placed = ok && shapes.size() == spec.num_shapes;
        }
    }
    if (!placed) {
        fail(ErrorCode::ShapePlacementFailure, "could not place " + std::to_string(spec.num_shapes) +
                                                   " separated shapes in " + dims_to_string(spec.dims));
    }

    std::vector<BinaryMask> moving_shapes, fixed_shapes;
    for (const auto& shape : shapes) {
        moving_shapes.push_back(detail::rasterize_mapped(shape, spec.dims, std::nullopt));
        fixed_shapes.push_back(detail::rasterize_mapped(shape, spec.dims, inverse));
        if (moving_shapes.back().empty() || fixed_shapes.back().empty()) {
            fail(ErrorCode::ShapePlacementFailure, "a shape rasterised to an empty mask");
        }
    }

    const auto rotation = detail::random_rotation(spec.feature_channels, rng);
    std::vector<std::vector<double>> basis(spec.num_shapes + 1, std::vector<double>(spec.feature_channels));
    for (std::size_t s = 0; s <= spec.num_shapes; ++s) {
        for (std::size_t ch = 0; ch < spec.feature_channels; ++ch) {
            basis[s][ch] = rotation[ch][s];
        }
    }

    SyntheticCase out;
    GroundTruth& truth = out.truth;
    truth.transform = transform;
    truth.transform_centre = centre;
    truth.shapes = shapes;
    truth.moving_shape.resize(spec.num_shapes);
    truth.fixed_shape.resize(spec.num_shapes);
    for (std::size_t s = 0; s < spec.num_shapes; ++s) {
        truth.moving_shape[s] = truth.fixed_shape[s] = s;
    }
    std::shuffle(truth.moving_shape.begin(), truth.moving_shape.end(), rng);
    std::shuffle(truth.fixed_shape.begin(), truth.fixed_shape.end(), rng);
    truth.pair_permutation.resize(spec.num_shapes);
    for (std::size_t i = 0; i < spec.num_shapes; ++i) {
        const auto j = std::find(truth.fixed_shape.begin(), truth.fixed_shape.end(), truth.moving_shape[i]);
        truth.pair_permutation[i] = static_cast<std::size_t>(j - truth.fixed_shape.begin());
    }

    auto build = [&](const std::vector<BinaryMask>& shape_masks, const std::vector<std::size_t>& order,
                     std::vector<Point>& centroids) {
        CaseData data;
        data.image = detail::render_image(spec.dims, spacing, shape_masks);
        data.features = detail::mock_features(spec.dims, grid, shape_masks, basis, spec.feature_noise_sigma, rng);
        for (std::size_t s : order) {
            data.masks.push_back(shape_masks[s]);
            centroids.push_back(mask_centroid(shape_masks[s], spacing));
        }
        return data;
    };
    out.moving = build(moving_shapes, truth.moving_shape, truth.moving_centroids);
    out.fixed = build(fixed_shapes, truth.fixed_shape, truth.fixed_centroids);
    return out;
}

/// The true pairing of a synthetic case, ordered by moving index, with similarity 1.
inline RoiPairing ground_truth_pairing(const SyntheticCase& c)
{
    RoiPairing pairing;
    for (std::size_t i = 0; i < c.truth.pair_permutation.size(); ++i) {
        const std::size_t j = c.truth.pair_permutation[i];
        pairing.pairs.push_back(RoiPair{c.moving.masks[i], c.fixed.masks[j], 1.0, i, j});
    }
    return pairing;
}

inline json ground_truth_to_json(const GroundTruth& truth)
{
    json shapes = json::array();
    for (const auto& s : truth.shapes) {
        shapes.push_back({{"kind", to_string(s.kind)}, {"center", s.center}, {"extent", s.extent}});
    }
    return {{"pair_permutation", truth.pair_permutation},
            {"transform", {{"matrix", truth.transform.matrix()},
                           {"translation", truth.transform.translation()},
                           {"centre", truth.transform_centre}}},
            {"moving_centroids", truth.moving_centroids},
            {"fixed_centroids", truth.fixed_centroids},
            {"moving_shape", truth.moving_shape},
            {"fixed_shape", truth.fixed_shape},
            {"shapes", std::move(shapes)}};
}

} // namespace roireg

#endif // ROIREG_SYNTHETIC_HPP

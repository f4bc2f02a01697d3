#ifndef ROIREG_TYPES_HPP
#define ROIREG_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace roireg {

inline Spacing unit_spacing(std::size_t rank)
{
    return Spacing(rank, 1.0);
}

inline void validate_spacing(const Spacing& spacing, std::size_t rank)
{
    if (spacing.size() != rank) {
        fail(ErrorCode::DimMismatch, "spacing has " + std::to_string(spacing.size()) +
                                         " components for a rank-" + std::to_string(rank) + " grid");
    }
    for (double s : spacing) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            fail(ErrorCode::InvalidArgument, "spacing components must be finite and positive");
        }
    }
}

/// Scalar intensity grid with axis-aligned voxel spacing.
class Image {
public:
    Image() = default;

    Image(Dims dims, std::vector<float> data, Spacing spacing = {})
        : dims_(std::move(dims)), spacing_(std::move(spacing)), data_(std::move(data))
    {
        require_image_rank(dims_);
        if (spacing_.empty()) {
            spacing_ = unit_spacing(dims_.size());
        }
        validate_spacing(spacing_, dims_.size());
        if (data_.size() != voxel_count(dims_)) {
            fail(ErrorCode::SizeMismatch, "image data length " + std::to_string(data_.size()) +
                                              " does not match " + dims_to_string(dims_));
        }
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
    [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<float> data_;
};

/// Binary ROI mask. The cached area always equals the number of set voxels.
class BinaryMask {
public:
    BinaryMask() = default;

    explicit BinaryMask(Dims dims) : dims_(std::move(dims)), bits_(voxel_count(dims_), 0) {}

    BinaryMask(Dims dims, std::vector<std::uint8_t> bits) : dims_(std::move(dims)), bits_(std::move(bits))
    {
        if (bits_.size() != voxel_count(dims_)) {
            fail(ErrorCode::SizeMismatch, "mask length " + std::to_string(bits_.size()) +
                                              " does not match " + dims_to_string(dims_));
        }
        for (auto b : bits_) {
            if (b > 1) {
                fail(ErrorCode::CorruptMask, "mask bytes must be 0 or 1, found " + std::to_string(b));
            }
            area_ += b;
        }
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
    [[nodiscard]] std::size_t area() const noexcept { return area_; }
    [[nodiscard]] bool empty() const noexcept { return area_ == 0; }
    [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    [[nodiscard]] bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }

    void set(std::size_t i, bool value)
    {
        const std::uint8_t v = value ? 1 : 0;
        area_ = area_ - bits_[i] + v;
        bits_[i] = v;
    }

    friend bool operator==(const BinaryMask& a, const BinaryMask& b)
    {
        return a.dims_ == b.dims_ && a.bits_ == b.bits_;
    }

private:
    Dims dims_;
    std::vector<std::uint8_t> bits_;
    std::size_t area_ = 0;
};

struct MaskMeta {
    std::optional<double> predicted_iou;
    std::optional<double> stability_score;
    std::optional<std::size_t> source_slice;

    friend bool operator==(const MaskMeta&, const MaskMeta&) = default;
};

/// Candidate masks for one image plus per-mask quality metadata.
class MaskSet {
public:
    MaskSet() = default;

    void push_back(BinaryMask mask, MaskMeta meta = {})
    {
        if (!masks_.empty()) {
            require_same_dims(masks_.front().dims(), mask.dims(), "mask set");
        }
        masks_.push_back(std::move(mask));
        meta_.push_back(meta);
    }

    [[nodiscard]] std::size_t size() const noexcept { return masks_.size(); }
    [[nodiscard]] bool empty() const noexcept { return masks_.empty(); }
    [[nodiscard]] const BinaryMask& operator[](std::size_t i) const { return masks_.at(i); }
    [[nodiscard]] const MaskMeta& meta(std::size_t i) const { return meta_.at(i); }
    [[nodiscard]] const std::vector<BinaryMask>& masks() const noexcept { return masks_; }
    [[nodiscard]] const std::vector<MaskMeta>& metas() const noexcept { return meta_; }

    friend bool operator==(const MaskSet&, const MaskSet&) = default;

private:
    std::vector<BinaryMask> masks_;
    std::vector<MaskMeta> meta_;
};

/// C-channel embedding grid. Layout is channel-major, then row-major spatial.
class FeatureMap {
public:
    FeatureMap() = default;

    FeatureMap(std::size_t channels, Dims grid_dims, std::vector<float> data)
        : channels_(channels), grid_dims_(std::move(grid_dims)), data_(std::move(data))
    {
        require_image_rank(grid_dims_);
        if (channels_ == 0) {
            fail(ErrorCode::InvalidArgument, "feature map needs at least one channel");
        }
        if (data_.size() != channels_ * voxel_count(grid_dims_)) {
            fail(ErrorCode::SizeMismatch, "feature data length " + std::to_string(data_.size()) +
                                              " does not match " + std::to_string(channels_) + "x" +
                                              dims_to_string(grid_dims_));
        }
    }

    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] const Dims& grid_dims() const noexcept { return grid_dims_; }
    [[nodiscard]] std::size_t cells() const noexcept { return voxel_count(grid_dims_); }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }

    [[nodiscard]] float at(std::size_t channel, std::size_t cell) const noexcept
    {
        return data_[channel * cells() + cell];
    }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    std::size_t channels_ = 0;
    Dims grid_dims_;
    std::vector<float> data_;
};

struct Prototype {
    std::vector<double> vec;

    [[nodiscard]] std::size_t channels() const noexcept { return vec.size(); }
};

struct RoiPair {
    BinaryMask moving_mask;
    BinaryMask fixed_mask;
    double similarity = 0.0;
    std::size_t moving_index = 0;
    std::size_t fixed_index = 0;
};

/// Registration output: matched (moving, fixed) ROI pairs, most similar first.
struct RoiPairing {
    std::vector<RoiPair> pairs;
    double epsilon_used = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return pairs.size(); }
    [[nodiscard]] bool empty() const noexcept { return pairs.empty(); }
};

/// Per-voxel displacement in voxel units, stored interleaved (d components per voxel).
class DisplacementField {
public:
    DisplacementField() = default;

    explicit DisplacementField(Dims dims, Spacing spacing = {})
        : dims_(std::move(dims)), spacing_(std::move(spacing))
    {
        require_image_rank(dims_);
        if (spacing_.empty()) {
            spacing_ = unit_spacing(dims_.size());
        }
        validate_spacing(spacing_, dims_.size());
        vectors_.assign(voxel_count(dims_) * dims_.size(), 0.0);
    }

    DisplacementField(Dims dims, Spacing spacing, std::vector<double> vectors)
        : DisplacementField(std::move(dims), std::move(spacing))
    {
        if (vectors.size() != vectors_.size()) {
            fail(ErrorCode::SizeMismatch, "displacement length " + std::to_string(vectors.size()) +
                                              " does not match " + dims_to_string(dims_));
        }
        for (double v : vectors) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::InvalidArgument, "displacement components must be finite");
            }
        }
        vectors_ = std::move(vectors);
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t voxels() const noexcept { return vectors_.size() / std::max<std::size_t>(rank(), 1); }
    [[nodiscard]] std::span<const double> vectors() const noexcept { return vectors_; }
    [[nodiscard]] std::span<double> vectors() noexcept { return vectors_; }

    [[nodiscard]] double at(std::size_t voxel, std::size_t component) const noexcept
    {
        return vectors_[voxel * rank() + component];
    }
    double& at(std::size_t voxel, std::size_t component) noexcept
    {
        return vectors_[voxel * rank() + component];
    }

    friend bool operator==(const DisplacementField&, const DisplacementField&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<double> vectors_;
};

/// x -> A x + t, in axis order.
class AffineTransform {
public:
    AffineTransform() = default;

    AffineTransform(std::vector<std::vector<double>> matrix, std::vector<double> translation)
        : matrix_(std::move(matrix)), translation_(std::move(translation))
    {
        const std::size_t d = translation_.size();
        if ((d != 2 && d != 3) || matrix_.size() != d ||
            std::any_of(matrix_.begin(), matrix_.end(), [d](const auto& row) { return row.size() != d; })) {
            fail(ErrorCode::DimMismatch, "affine matrix must be d x d with d in {2,3}");
        }
        if (std::abs(determinant()) <= 1e-12) {
            fail(ErrorCode::SingularTransform, "affine matrix is singular");
        }
    }

    static AffineTransform translation(std::vector<double> t)
    {
        std::vector<std::vector<double>> m(t.size(), std::vector<double>(t.size(), 0.0));
        for (std::size_t i = 0; i < t.size(); ++i) {
            m[i][i] = 1.0;
        }
        return {std::move(m), std::move(t)};
    }

    [[nodiscard]] std::size_t rank() const noexcept { return translation_.size(); }
    [[nodiscard]] const std::vector<std::vector<double>>& matrix() const noexcept { return matrix_; }
    [[nodiscard]] const std::vector<double>& translation() const noexcept { return translation_; }

    [[nodiscard]] double determinant() const
    {
        const auto& m = matrix_;
        if (rank() == 2) {
            return m[0][0] * m[1][1] - m[0][1] * m[1][0];
        }
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    [[nodiscard]] Point apply(const Point& x) const
    {
        Point y(rank(), 0.0);
        for (std::size_t i = 0; i < rank(); ++i) {
            y[i] = translation_[i];
            for (std::size_t j = 0; j < rank(); ++j) {
                y[i] += matrix_[i][j] * x[j];
            }
        }
        return y;
    }

    [[nodiscard]] AffineTransform inverse() const
    {
        const std::size_t d = rank();
        // Gauss-Jordan on [A | I].
        std::vector<std::vector<double>> a = matrix_;
        std::vector<std::vector<double>> inv(d, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < d; ++i) {
            inv[i][i] = 1.0;
        }
        for (std::size_t col = 0; col < d; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < d; ++r) {
                if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                    pivot = r;
                }
            }
            std::swap(a[col], a[pivot]);
            std::swap(inv[col], inv[pivot]);
            const double p = a[col][col];
            for (std::size_t j = 0; j < d; ++j) {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for (std::size_t r = 0; r < d; ++r) {
                if (r == col) {
                    continue;
                }
                const double f = a[r][col];
                for (std::size_t j = 0; j < d; ++j) {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
        std::vector<double> t(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                t[i] -= inv[i][j] * translation_[j];
            }
        }
        return {std::move(inv), std::move(t)};
    }

private:
    std::vector<std::vector<double>> matrix_;
    std::vector<double> translation_;
};

/// Mean physical coordinate of the set voxels (voxel index times spacing).
inline Point mask_centroid(const BinaryMask& mask, const Spacing& spacing)
{
    validate_spacing(spacing, mask.rank());
    if (mask.empty()) {
        fail(ErrorCode::EmptyMask, "centroid of an empty mask is undefined");
    }
    const std::size_t d = mask.rank();
    std::vector<double> sum(d, 0.0);
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            const Index idx = unravel(i, mask.dims());
            for (std::size_t a = 0; a < d; ++a) {
                sum[a] += static_cast<double>(idx[a]);
            }
        }
    }
    Point c(d);
    for (std::size_t a = 0; a < d; ++a) {
        c[a] = sum[a] / static_cast<double>(mask.area()) * spacing[a];
    }
    return c;
}

inline Point mask_centroid(const BinaryMask& mask)
{
    return mask_centroid(mask, unit_spacing(mask.rank()));
}

inline std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b)
{
    require_same_dims(a.dims(), b.dims(), "mask intersection");
    const auto x = a.bits();
    const auto y = b.bits();
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        n += static_cast<std::size_t>(x[i] & y[i]);
    }
    return n;
}

/// |a ∩ b| / min(|a|, |b|); 0 when either mask is empty.
inline double overlap_ratio(const BinaryMask& a, const BinaryMask& b)
{
    const std::size_t inter = intersection_count(a, b);
    const std::size_t denom = std::min(a.area(), b.area());
    if (denom == 0) {
        return 0.0;
    }
    return static_cast<double>(inter) / static_cast<double>(denom);
}

inline RealGrid to_real_grid(const BinaryMask& mask)
{
    RealGrid g(mask.dims());
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        g.data[i] = bits[i] ? 1.0 : 0.0;
    }
    return g;
}

/// Voxels with value >= threshold become true.
inline BinaryMask binarize(const RealGrid& grid, double threshold = 0.5)
{
    std::vector<std::uint8_t> bits(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bits[i] = grid.data[i] >= threshold ? 1 : 0;
    }
    return {grid.dims, std::move(bits)};
}

} // namespace roireg

#endif // ROIREG_TYPES_HPP

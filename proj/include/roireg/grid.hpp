#ifndef ROIREG_GRID_HPP
#define ROIREG_GRID_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace roireg {

// Axis order is slowest-varying first: (y,x) in 2D, (z,y,x) in 3D. Storage is row-major.
using Dims = std::vector<std::size_t>;
using Spacing = std::vector<double>;
using Point = std::vector<double>;

inline constexpr std::size_t kMaxRank = 3;

using Index = std::array<std::size_t, kMaxRank>;

inline std::size_t voxel_count(const Dims& dims)
{
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_to_string(const Dims& dims)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t a = 0; a < dims.size(); ++a) {
        os << (a ? "," : "") << dims[a];
    }
    os << ']';
    return os.str();
}

inline void require_same_dims(const Dims& a, const Dims& b, const char* what)
{
    if (a != b) {
        fail(ErrorCode::DimMismatch,
             std::string(what) + ": " + dims_to_string(a) + " vs " + dims_to_string(b));
    }
}

inline void require_image_rank(const Dims& dims)
{
    if (dims.size() != 2 && dims.size() != 3) {
        fail(ErrorCode::InvalidArgument, "only 2D and 3D grids are supported, got rank " +
                                             std::to_string(dims.size()));
    }
    for (auto n : dims) {
        if (n == 0) {
            fail(ErrorCode::InvalidArgument, "zero-length axis in " + dims_to_string(dims));
        }
    }
}

inline Index row_major_strides(const Dims& dims)
{
    Index strides{0, 0, 0};
    std::size_t s = 1;
    for (std::size_t a = dims.size(); a-- > 0;) {
        strides[a] = s;
        s *= dims[a];
    }
    return strides;
}

inline Index unravel(std::size_t linear, const Dims& dims)
{
    Index idx{0, 0, 0};
    for (std::size_t a = dims.size(); a-- > 0;) {
        idx[a] = linear % dims[a];
        linear /= dims[a];
    }
    return idx;
}

inline std::size_t ravel(const Index& idx, const Dims& dims)
{
    std::size_t linear = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        linear = linear * dims[a] + idx[a];
    }
    return linear;
}

/// Half-open preimage [begin, end) of output cell `cell` when `in` samples are split into
/// `out` cells as evenly as possible.
inline std::pair<std::size_t, std::size_t> cell_preimage(std::size_t cell, std::size_t in,
                                                         std::size_t out)
{
    return {cell * in / out, (cell + 1) * in / out};
}

/// Real-valued scalar grid; used for soft masks and warped masks.
struct RealGrid {
    Dims dims;
    std::vector<double> data;

    RealGrid() = default;
    explicit RealGrid(Dims d) : dims(std::move(d)), data(voxel_count(dims), 0.0) {}
    RealGrid(Dims d, std::vector<double> values) : dims(std::move(d)), data(std::move(values))
    {
        if (data.size() != voxel_count(dims)) {
            fail(ErrorCode::SizeMismatch, "grid data length " + std::to_string(data.size()) +
                                              " does not match " + dims_to_string(dims));
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }

    friend bool operator==(const RealGrid&, const RealGrid&) = default;
};

} // namespace roireg

#endif // ROIREG_GRID_HPP

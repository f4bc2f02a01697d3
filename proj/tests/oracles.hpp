// Independent reference computations used to freeze expected values in the tests. Nothing in
// here calls the engine's algorithmic code paths; only the plain data types are shared.
#ifndef ROIREG_TESTS_ORACLES_HPP
#define ROIREG_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <roireg/types.hpp>

namespace oracle {

using namespace roireg;

inline std::vector<std::size_t> coords_of(std::size_t linear, const Dims& dims)
{
    std::vector<std::size_t> c(dims.size());
    for (std::size_t a = dims.size(); a-- > 0;) {
        c[a] = linear % dims[a];
        linear /= dims[a];
    }
    return c;
}

inline std::size_t linear_of(const std::vector<std::size_t>& c, const Dims& dims)
{
    std::size_t l = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        l = l * dims[a] + c[a];
    }
    return l;
}

inline std::vector<double> centroid(const BinaryMask& m, const Spacing& spacing)
{
    std::vector<double> sum(m.rank(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i]) {
            const auto c = coords_of(i, m.dims());
            for (std::size_t a = 0; a < c.size(); ++a) {
                sum[a] += static_cast<double>(c[a]) * spacing[a];
            }
            ++n;
        }
    }
    for (auto& s : sum) {
        s /= static_cast<double>(n);
    }
    return sum;
}

// Per-cell mean over each cell's preimage box.
inline std::vector<double> downsample(const BinaryMask& m, const Dims& grid)
{
    const Dims& in = m.dims();
    std::vector<double> out(voxel_count(grid), 0.0);
    for (std::size_t cell = 0; cell < out.size(); ++cell) {
        const auto c = coords_of(cell, grid);
        std::vector<std::size_t> lo(in.size()), hi(in.size());
        for (std::size_t a = 0; a < in.size(); ++a) {
            lo[a] = c[a] * in[a] / grid[a];
            hi[a] = (c[a] + 1) * in[a] / grid[a];
        }
        double total = 0.0, count = 0.0;
        std::vector<std::size_t> p = lo;
        for (;;) {
            total += m[linear_of(p, in)] ? 1.0 : 0.0;
            count += 1.0;
            std::size_t a = in.size();
            while (a-- > 0) {
                if (++p[a] < hi[a]) {
                    break;
                }
                p[a] = lo[a];
            }
            if (a == static_cast<std::size_t>(-1)) {
                break;
            }
        }
        out[cell] = total / count;
    }
    return out;
}

inline std::vector<double> prototype(const BinaryMask& m, const FeatureMap& f)
{
    const auto w = downsample(m, f.grid_dims());
    std::vector<double> num(f.channels(), 0.0);
    double den = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        den += w[n];
        for (std::size_t ch = 0; ch < f.channels(); ++ch) {
            num[ch] += w[n] * static_cast<double>(f.data()[ch * w.size() + n]);
        }
    }
    for (auto& v : num) {
        v /= den;
    }
    return num;
}

inline double abs_cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::abs(dot / (std::sqrt(na) * std::sqrt(nb)));
}

// Repeatedly takes the largest remaining admissible entry (first in row-major order on ties).
inline std::vector<std::pair<std::size_t, std::size_t>> greedy_replay(const std::vector<std::vector<double>>& s,
                                                                      double eps)
{
    const std::size_t rows = s.size();
    const std::size_t cols = rows ? s[0].size() : 0;
    std::vector<bool> ru(rows, false), cu(cols, false);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (;;) {
        double best = -1.0;
        std::optional<std::pair<std::size_t, std::size_t>> pick;
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                if (!ru[i] && !cu[j] && s[i][j] > eps && s[i][j] > best) {
                    best = s[i][j];
                    pick = {i, j};
                }
            }
        }
        if (!pick) {
            return out;
        }
        ru[pick->first] = cu[pick->second] = true;
        out.push_back(*pick);
    }
}

// Rule-by-rule filter: a mask survives when it passes the area and quality rules and no
// surviving, strictly better mask overlaps it beyond the ratio.
inline std::vector<std::size_t> filter(const MaskSet& set, std::size_t min_area, std::size_t max_area,
                                       double max_overlap, double min_iou, double min_stab)
{
    const std::size_t n = set.size();
    auto passes = [&](std::size_t i) {
        const auto a = set[i].area();
        const auto& m = set.meta(i);
        return a >= min_area && a <= max_area && (!m.predicted_iou || *m.predicted_iou >= min_iou) &&
               (!m.stability_score || *m.stability_score >= min_stab);
    };
    auto better = [&](std::size_t j, std::size_t i) {
        const double qj = set.meta(j).predicted_iou ? *set.meta(j).predicted_iou : -1.0;
        const double qi = set.meta(i).predicted_iou ? *set.meta(i).predicted_iou : -1.0;
        if (qj > qi) return true;
        if (qj < qi) return false;
        if (set[j].area() > set[i].area()) return true;
        if (set[j].area() < set[i].area()) return false;
        return j < i;
    };
    auto overlap = [&](std::size_t i, std::size_t j) {
        std::size_t inter = 0;
        for (std::size_t v = 0; v < set[i].size(); ++v) {
            inter += (set[i][v] && set[j][v]) ? 1 : 0;
        }
        const double denom = static_cast<double>(std::min(set[i].area(), set[j].area()));
        return denom == 0.0 ? 0.0 : static_cast<double>(inter) / denom;
    };
    std::map<std::size_t, bool> memo;
    std::function<bool(std::size_t)> survives = [&](std::size_t i) -> bool {
        if (auto it = memo.find(i); it != memo.end()) {
            return it->second;
        }
        bool ok = passes(i);
        for (std::size_t j = 0; j < n && ok; ++j) {
            if (j != i && passes(j) && better(j, i) && overlap(i, j) > max_overlap && survives(j)) {
                ok = false;
            }
        }
        memo[i] = ok;
        return ok;
    };
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (survives(i)) {
            out.push_back(i);
        }
    }
    return out;
}

// Zero-padded multilinear interpolation written out per rank.
inline double interpolate(const std::vector<double>& g, const Dims& dims, const std::vector<double>& p)
{
    auto at = [&](const std::vector<long>& c) {
        for (std::size_t a = 0; a < dims.size(); ++a) {
            if (c[a] < 0 || c[a] >= static_cast<long>(dims[a])) {
                return 0.0;
            }
        }
        std::size_t l = 0;
        for (std::size_t a = 0; a < dims.size(); ++a) {
            l = l * dims[a] + static_cast<std::size_t>(c[a]);
        }
        return g[l];
    };
    if (dims.size() == 2) {
        const long y0 = static_cast<long>(std::floor(p[0])), x0 = static_cast<long>(std::floor(p[1]));
        const double fy = p[0] - static_cast<double>(y0), fx = p[1] - static_cast<double>(x0);
        return (1 - fy) * (1 - fx) * at({y0, x0}) + (1 - fy) * fx * at({y0, x0 + 1}) +
               fy * (1 - fx) * at({y0 + 1, x0}) + fy * fx * at({y0 + 1, x0 + 1});
    }
    const long z0 = static_cast<long>(std::floor(p[0])), y0 = static_cast<long>(std::floor(p[1])),
               x0 = static_cast<long>(std::floor(p[2]));
    const double fz = p[0] - static_cast<double>(z0), fy = p[1] - static_cast<double>(y0),
                 fx = p[2] - static_cast<double>(x0);
    double v = 0.0;
    for (int dz = 0; dz <= 1; ++dz) {
        for (int dy = 0; dy <= 1; ++dy) {
            for (int dx = 0; dx <= 1; ++dx) {
                const double w = (dz ? fz : 1 - fz) * (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
                v += w * at({z0 + dz, y0 + dy, x0 + dx});
            }
        }
    }
    return v;
}

inline std::pair<double, double> mse_dice(const std::vector<double>& a, const std::vector<double>& b, double s)
{
    double se = 0.0, inter = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        se += (a[i] - b[i]) * (a[i] - b[i]);
        inter += a[i] * b[i];
        sa += a[i] * a[i];
        sb += b[i] * b[i];
    }
    return {se / static_cast<double>(a.size()), 1.0 - (2.0 * inter + s) / (sa + sb + s)};
}

// Squared forward differences averaged per (axis, component) term, then over the d*d terms.
inline double smoothness(const DisplacementField& f)
{
    const Dims& dims = f.dims();
    const std::size_t d = dims.size();
    double total = 0.0;
    for (std::size_t axis = 0; axis < d; ++axis) {
        for (std::size_t comp = 0; comp < d; ++comp) {
            double acc = 0.0;
            std::size_t count = 0;
            for (std::size_t v = 0; v < f.voxels(); ++v) {
                auto c = coords_of(v, dims);
                if (c[axis] + 1 >= dims[axis]) {
                    continue;
                }
                c[axis] += 1;
                const double diff = f.at(linear_of(c, dims), comp) - f.at(v, comp);
                acc += diff * diff;
                ++count;
            }
            total += acc / static_cast<double>(count);
        }
    }
    return total / static_cast<double>(d * d);
}

// Central finite difference of `fn` with respect to every component of `x`.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& fn,
                                             std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = fn(x);
        x[i] = keep - h;
        const double down = fn(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------------------------
// Random instance generators
// ---------------------------------------------------------------------------------------------

inline BinaryMask random_mask(const Dims& dims, double density, std::mt19937_64& rng)
{
    std::bernoulli_distribution on(density);
    std::vector<std::uint8_t> bits(voxel_count(dims));
    for (auto& b : bits) {
        b = on(rng) ? 1 : 0;
    }
    return {dims, std::move(bits)};
}

// Axis-aligned random box, guaranteed nonempty.
inline BinaryMask random_box(const Dims& dims, std::mt19937_64& rng)
{
    BinaryMask m(dims);
    std::vector<std::size_t> lo(dims.size()), hi(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) {
        std::uniform_int_distribution<std::size_t> u(0, dims[a] - 1);
        lo[a] = u(rng);
        hi[a] = u(rng);
        if (lo[a] > hi[a]) {
            std::swap(lo[a], hi[a]);
        }
    }
    for (std::size_t v = 0; v < m.size(); ++v) {
        const auto c = coords_of(v, dims);
        bool in = true;
        for (std::size_t a = 0; a < dims.size(); ++a) {
            in = in && c[a] >= lo[a] && c[a] <= hi[a];
        }
        if (in) {
            m.set(v, true);
        }
    }
    return m;
}

inline FeatureMap random_features(std::size_t channels, const Dims& grid, std::mt19937_64& rng)
{
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> data(channels * voxel_count(grid));
    for (auto& v : data) {
        v = g(rng);
    }
    return {channels, grid, std::move(data)};
}

inline RealGrid random_soft(const Dims& dims, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RealGrid g(dims);
    for (auto& v : g.data) {
        v = u(rng);
    }
    return g;
}

inline BinaryMask box_mask(const Dims& dims, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1)
{
    BinaryMask m(dims);
    for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
            m.set(y * dims[1] + x, true);
        }
    }
    return m;
}

// Boxes of 200..2500 voxels on 64x64, some duplicated or nested, random metadata.
inline MaskSet random_candidates(std::mt19937_64& rng, std::size_t count)
{
    const Dims dims{64, 64};
    MaskSet set;
    std::uniform_int_distribution<std::size_t> side(8, 50), pos(0, 63);
    std::uniform_real_distribution<double> quality(0.85, 1.0);
    std::bernoulli_distribution coin(0.5), rare(0.15);
    while (set.size() < count) {
        BinaryMask m;
        if (!set.empty() && rare(rng)) {
            m = set[std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng)];
            if (coin(rng)) {
                // nudge one voxel so it is a near-duplicate rather than identical
                m.set(pos(rng) * 64 + pos(rng), true);
            }
        } else {
            const std::size_t h = side(rng), w = side(rng);
            const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, 64 - h)(rng);
            const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, 64 - w)(rng);
            m = box_mask(dims, y0, y0 + h, x0, x0 + w);
        }
        MaskMeta meta;
        if (coin(rng)) {
            meta.predicted_iou = quality(rng);
        }
        if (coin(rng)) {
            meta.stability_score = quality(rng);
        }
        set.push_back(std::move(m), meta);
    }
    return set;
}

} // namespace oracle

#endif // ROIREG_TESTS_ORACLES_HPP

#ifndef ROIREG_METRICS_HPP
#define ROIREG_METRICS_HPP

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "ddf_fit.hpp"
#include "error.hpp"
#include "types.hpp"

namespace roireg {

struct EvalReport {
    double mean_dice = 0.0;
    std::vector<double> per_roi_dice;
    std::optional<double> tre; ///< absent when every ROI was dropped from the TRE
    std::vector<double> per_roi_centroid_dist;
    std::size_t num_rois = 0;
    std::size_t dropped_rois = 0; ///< ROIs whose warped mask was empty

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// 2|a∩b| / (|a|+|b|); 1 when both are empty.
inline double dice_binary(const BinaryMask& a, const BinaryMask& b)
{
    const std::size_t inter = intersection_count(a, b);
    const std::size_t total = a.area() + b.area();
    if (total == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

inline double centroid_distance(const BinaryMask& a, const BinaryMask& b, const Spacing& spacing)
{
    const Point ca = mask_centroid(a, spacing);
    const Point cb = mask_centroid(b, spacing);
    double s = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        s += (ca[i] - cb[i]) * (ca[i] - cb[i]);
    }
    return std::sqrt(s);
}

inline double rms(const std::vector<double>& values)
{
    if (values.empty()) {
        fail(ErrorCode::EmptyList, "RMS of an empty list");
    }
    double s = 0.0;
    for (double v : values) {
        s += v * v;
    }
    return std::sqrt(s / static_cast<double>(values.size()));
}

/// Root-mean-square centroid distance over the pairs, in physical units.
inline double tre_rms(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs, const Spacing& spacing)
{
    if (pairs.empty()) {
        fail(ErrorCode::EmptyList, "TRE needs at least one pair");
    }
    std::vector<double> dist;
    dist.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        dist.push_back(centroid_distance(a, b, spacing));
    }
    return rms(dist);
}

/// Scores each pair (moving mask vs fixed mask, the latter warped through `ddf` and re-binarised
/// at 0.5 when a field is given). ROIs whose warped mask is empty score Dice 0 and are left out
/// of the TRE.
inline EvalReport evaluate(const RoiPairing& pairing, const DisplacementField* ddf, const Spacing& spacing)
{
    if (pairing.empty()) {
        fail(ErrorCode::EmptyPairing, "nothing to evaluate");
    }
    EvalReport report;
    report.num_rois = pairing.size();
    std::vector<double> distances;
    for (const auto& pair : pairing.pairs) {
        BinaryMask fixed = ddf ? binarize(warp_mask(pair.fixed_mask, *ddf), 0.5) : pair.fixed_mask;
        report.per_roi_dice.push_back(dice_binary(pair.moving_mask, fixed));
        if (fixed.empty() || pair.moving_mask.empty()) {
            ++report.dropped_rois;
            continue;
        }
        const double dist = centroid_distance(pair.moving_mask, fixed, spacing);
        report.per_roi_centroid_dist.push_back(dist);
        distances.push_back(dist);
    }
    double sum = 0.0;
    for (double v : report.per_roi_dice) {
        sum += v;
    }
    report.mean_dice = sum / static_cast<double>(report.per_roi_dice.size());
    if (!distances.empty()) {
        report.tre = rms(distances);
    }
    return report;
}

inline EvalReport evaluate(const RoiPairing& pairing, const Spacing& spacing)
{
    return evaluate(pairing, nullptr, spacing);
}

inline EvalReport evaluate(const RoiPairing& pairing, const DisplacementField& ddf, const Spacing& spacing)
{
    return evaluate(pairing, &ddf, spacing);
}

} // namespace roireg

#endif // ROIREG_METRICS_HPP

#ifndef ROIREG_ABLATION_HPP
#define ROIREG_ABLATION_HPP

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddf_fit.hpp"
#include "interchange.hpp"
#include "metrics.hpp"
#include "roi_pipeline.hpp"

namespace roireg {

/// Candidate masks of a case at volume resolution: per-slice masks (tagged with source_slice)
/// are stacked into 3D candidates first.
inline MaskSet candidate_masks(const CaseData& data, double min_link_iou)
{
    const bool sliced = !data.masks.empty() && data.masks.meta(0).source_slice.has_value();
    if (!sliced) {
        return data.masks;
    }
    return stack_slice_tagged(data.masks, data.image.dims(), min_link_iou);
}

struct AblationRow {
    std::string setting;
    std::size_t num_pairs = 0;
    double mean_dice = 0.0;
    std::optional<double> tre;
};

namespace detail {

inline AblationRow score_setting(std::string setting, const RoiPairing& fit_pairs, const RoiPairing& reference,
                                 const FitConfig& fit, const Dims& dims)
{
    AblationRow row;
    row.setting = std::move(setting);
    row.num_pairs = fit_pairs.size();
    DisplacementField ddf(dims);
    if (!fit_pairs.empty()) {
        ddf = fit_ddf(fit_pairs, fit).ddf;
    }
    const EvalReport report = evaluate(reference, ddf, unit_spacing(dims.size()));
    row.mean_dice = report.mean_dice;
    row.tre = report.tre;
    return row;
}

} // namespace detail

/// Pair-count sweep: match once, fit on the k most similar pairs, and score every matched pair
/// under the fitted field. `std::nullopt` in `ks` means all pairs.
inline std::vector<AblationRow> sweep_pair_count(const MaskSet& moving, const FeatureMap& moving_features,
                                                 const MaskSet& fixed, const FeatureMap& fixed_features,
                                                 const MatchConfig& match, const FitConfig& fit,
                                                 const std::vector<std::optional<std::size_t>>& ks)
{
    if (ks.empty()) {
        fail(ErrorCode::InvalidArgument, "empty sweep");
    }
    const MatchResult matched = match_candidates(moving, moving_features, fixed, fixed_features, match);
    if (matched.pairing.empty()) {
        fail(ErrorCode::EmptyPairing, "no ROI pairs above epsilon; nothing to evaluate");
    }
    const Dims dims = matched.pairing.pairs.front().moving_mask.dims();
    std::vector<AblationRow> rows;
    for (const auto& k : ks) {
        const RoiPairing subset = k ? truncate_pairing(matched.pairing, *k) : matched.pairing;
        rows.push_back(detail::score_setting(k ? std::to_string(*k) : "all", subset, matched.pairing, fit, dims));
    }
    return rows;
}

/// Threshold sweep: rematch at every epsilon, fit on all resulting pairs, and score the pairs
/// matched at the reference threshold `match.epsilon`. A threshold with no pairs is scored with
/// the zero field.
inline std::vector<AblationRow> sweep_epsilon(const MaskSet& moving, const FeatureMap& moving_features,
                                              const MaskSet& fixed, const FeatureMap& fixed_features,
                                              const MatchConfig& match, const FitConfig& fit,
                                              const std::vector<double>& epsilons)
{
    if (epsilons.empty()) {
        fail(ErrorCode::InvalidArgument, "empty sweep");
    }
    const MatchResult reference = match_candidates(moving, moving_features, fixed, fixed_features, match);
    if (reference.pairing.empty()) {
        fail(ErrorCode::EmptyPairing, "no ROI pairs above the reference epsilon; nothing to evaluate");
    }
    const Dims dims = reference.pairing.pairs.front().moving_mask.dims();
    std::vector<AblationRow> rows;
    for (double eps : epsilons) {
        MatchConfig cfg = match;
        cfg.epsilon = eps;
        const MatchResult m = match_candidates(moving, moving_features, fixed, fixed_features, cfg);
        std::ostringstream label;
        label << eps;
        rows.push_back(detail::score_setting(label.str(), m.pairing, reference.pairing, fit, dims));
    }
    return rows;
}

} // namespace roireg

#endif // ROIREG_ABLATION_HPP

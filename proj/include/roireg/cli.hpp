#ifndef ROIREG_CLI_HPP
#define ROIREG_CLI_HPP

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ablation.hpp"
#include "ddf_fit.hpp"
#include "error.hpp"
#include "interchange.hpp"
#include "metrics.hpp"
#include "roi_pipeline.hpp"
#include "synthetic.hpp"

namespace roireg {

inline constexpr const char* kEngineVersion = "0.1.0";

namespace cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Provenance written next to every command's outputs.
struct RunRecord {
    std::string command;
    json config_snapshot = json::object();
    std::map<std::string, double> timings_ms;
    std::vector<std::string> outputs;

    [[nodiscard]] json to_json() const
    {
        return {{"command", command},
                {"config_snapshot", config_snapshot},
                {"timings_ms", timings_ms},
                {"outputs", outputs},
                {"engine_version", kEngineVersion}};
    }
};

class StageTimer {
public:
    explicit StageTimer(RunRecord& record) : record_(record) {}

    template <typename Fn>
    decltype(auto) operator()(const std::string& stage, Fn&& fn)
    {
        const auto start = std::chrono::steady_clock::now();
        struct Stop {
            RunRecord& record;
            std::string stage;
            std::chrono::steady_clock::time_point start;
            ~Stop()
            {
                const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
                record.timings_ms[stage] += ms.count();
            }
        } stop{record_, stage, start};
        return fn();
    }

private:
    RunRecord& record_;
};

inline void write_run_record(RunRecord& record, const fs::path& dir)
{
    const fs::path path = dir / "run_record.json";
    record.outputs.push_back(path.string());
    write_text(path, record.to_json().dump(2) + "\n");
}

inline std::string format_real(double v)
{
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

inline json report_to_json(const EvalReport& r)
{
    json j;
    j["mean_dice"] = r.mean_dice;
    j["per_roi_dice"] = r.per_roi_dice;
    j["tre"] = r.tre ? json(*r.tre) : json(nullptr);
    j["per_roi_centroid_dist"] = r.per_roi_centroid_dist;
    j["num_rois"] = r.num_rois;
    j["dropped_rois"] = r.dropped_rois;
    return j;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out)
{
    if (out_path.empty()) {
        out << text;
        return;
    }
    const fs::path p(out_path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    write_text(p, text);
}

// ---------------------------------------------------------------------------------------------
// Options shared by match and ablate
// ---------------------------------------------------------------------------------------------

struct MatchFlags {
    double epsilon = 0.8;
    std::size_t min_area = 200;
    std::size_t max_area = 7000;
    double max_overlap = 0.8;
    double min_pred_iou = 0.90;
    double min_stability = 0.90;
    std::string assignment = "greedy";
    double link_iou = 0.5;
    bool no_filter = false;

    void add_to(CLI::App& app)
    {
        app.add_option("--epsilon", epsilon, "similarity threshold")->capture_default_str();
        app.add_option("--min-area", min_area, "minimum ROI area (voxels)")->capture_default_str();
        app.add_option("--max-area", max_area, "maximum ROI area (voxels)")->capture_default_str();
        app.add_option("--max-overlap", max_overlap, "maximum overlap ratio between kept ROIs")->capture_default_str();
        app.add_option("--min-pred-iou", min_pred_iou, "minimum predicted IoU when present")->capture_default_str();
        app.add_option("--min-stability", min_stability, "minimum stability score when present")->capture_default_str();
        app.add_option("--assignment", assignment, "greedy | optimal")
            ->check(CLI::IsMember({"greedy", "optimal"}))
            ->capture_default_str();
        app.add_option("--link-iou", link_iou, "slice-stacking IoU threshold")->capture_default_str();
        app.add_flag("--no-filter", no_filter, "skip area/quality/overlap filtering");
    }

    [[nodiscard]] MatchConfig config() const
    {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
            throw UsageError("--epsilon must lie in [0,1]");
        }
        if (min_area > max_area) {
            throw UsageError("--min-area exceeds --max-area");
        }
        if (!(max_overlap >= 0.0 && max_overlap <= 1.0)) {
            throw UsageError("--max-overlap must lie in [0,1]");
        }
        MatchConfig cfg;
        cfg.epsilon = epsilon;
        cfg.filter = FilterConfig{min_area, max_area, max_overlap, min_pred_iou, min_stability};
        cfg.apply_filter = !no_filter;
        cfg.assignment = assignment == "optimal" ? Assignment::Optimal : Assignment::Greedy;
        return cfg;
    }

    [[nodiscard]] json snapshot() const
    {
        return {{"epsilon", epsilon},       {"min_area", min_area},
                {"max_area", max_area},     {"max_overlap", max_overlap},
                {"min_pred_iou", min_pred_iou}, {"min_stability", min_stability},
                {"assignment", assignment}, {"link_iou", link_iou},
                {"filter", !no_filter}};
    }
};

struct FitFlags {
    FitConfig cfg;

    void add_to(CLI::App& app)
    {
        app.add_option("--lambda", cfg.lambda, "smoothness weight")->capture_default_str();
        app.add_option("--iters", cfg.iterations, "maximum optimiser updates")->capture_default_str();
        app.add_option("--step", cfg.step_size, "Adam step size (voxels)")->capture_default_str();
        app.add_option("--tol", cfg.convergence_tol, "relative loss-change stopping tolerance")->capture_default_str();
        app.add_option("--dice-smooth", cfg.dice_smooth, "soft Dice smoothing constant")->capture_default_str();
    }

    [[nodiscard]] FitConfig config() const
    {
        try {
            cfg.validate();
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }

    [[nodiscard]] json snapshot() const
    {
        return {{"lambda", cfg.lambda},
                {"iterations", cfg.iterations},
                {"step_size", cfg.step_size},
                {"adam_beta1", cfg.adam_beta1},
                {"adam_beta2", cfg.adam_beta2},
                {"adam_eps", cfg.adam_eps},
                {"dice_smooth", cfg.dice_smooth},
                {"convergence_tol", cfg.convergence_tol}};
    }
};

// ---------------------------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------------------------

struct SynthFlags {
    std::vector<long long> dims;
    std::size_t shapes = 3;
    double tx = 0.0, ty = 0.0, tz = 0.0;
    double rotate = 0.0;
    std::vector<std::string> kinds{"disc"};
    double noise = 0.0;
    std::size_t channels = 8;
    std::uint64_t seed = 0;
    std::size_t stride = 0;
    std::vector<double> spacing;
    std::string out;
};

inline int cmd_synth(const SynthFlags& f, std::ostream& out)
{
    if (f.dims.size() != 2 && f.dims.size() != 3) {
        throw UsageError("--dims needs 2 or 3 comma-separated extents");
    }
    Dims dims;
    for (long long n : f.dims) {
        if (n <= 0) {
            throw UsageError("--dims extents must be positive");
        }
        dims.push_back(static_cast<std::size_t>(n));
    }
    if (f.shapes == 0) {
        throw UsageError("--shapes must be at least 1");
    }
    RunRecord record;
    record.command = "synth";
    SyntheticSpec spec;
    spec.dims = dims;
    spec.spacing = f.spacing;
    spec.num_shapes = f.shapes;
    spec.shape_kinds.clear();
    try {
        for (const auto& k : f.kinds) {
            spec.shape_kinds.push_back(shape_kind_from_string(k));
        }
        if (!f.spacing.empty()) {
            validate_spacing(f.spacing, dims.size());
        }
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    spec.feature_channels = std::max(f.channels, f.shapes + 1);
    spec.feature_noise_sigma = f.noise;
    spec.seed = f.seed;
    spec.feature_stride = f.stride;
    // Translation flags are (x, y, z); axis order is (y, x) or (z, y, x).
    spec.transform = dims.size() == 2 ? rotation_2d(f.rotate, {f.ty, f.tx})
                                      : rotation_3d_axial(f.rotate, {f.tz, f.ty, f.tx});
    record.config_snapshot = {{"dims", dims},       {"shapes", f.shapes}, {"tx", f.tx},
                              {"ty", f.ty},         {"tz", f.tz},         {"rotate", f.rotate},
                              {"kinds", f.kinds},   {"noise", f.noise},   {"channels", spec.feature_channels},
                              {"seed", f.seed},     {"stride", f.stride}, {"spacing", f.spacing},
                              {"out", f.out}};

    StageTimer time(record);
    const SyntheticCase c = time("generate", [&] { return generate_case(spec); });
    const fs::path root(f.out);
    time("write", [&] {
        write_case(c.moving, CaseRole::Moving, root / "moving");
        write_case(c.fixed, CaseRole::Fixed, root / "fixed");
        write_text(root / "ground_truth.json", ground_truth_to_json(c.truth).dump(2) + "\n");
    });
    record.outputs = {(root / "moving").string(), (root / "fixed").string(), (root / "ground_truth.json").string()};
    write_run_record(record, root);
    out << "wrote " << c.moving.masks.size() << " shape pairs to " << root.string() << "\n";
    return kOk;
}

struct LoadedCase {
    CaseData data;
    MaskSet candidates;
};

inline LoadedCase load_case(const std::string& dir, double link_iou)
{
    LoadedCase c;
    c.data = read_case(dir);
    c.candidates = candidate_masks(c.data, link_iou);
    return c;
}

inline int cmd_match(const std::string& moving_dir, const std::string& fixed_dir, const MatchFlags& flags,
                     const std::string& out_dir, std::ostream& out, std::ostream& err)
{
    const MatchConfig cfg = flags.config();
    RunRecord record;
    record.command = "match";
    record.config_snapshot = flags.snapshot();
    record.config_snapshot["moving"] = moving_dir;
    record.config_snapshot["fixed"] = fixed_dir;
    record.config_snapshot["out"] = out_dir;

    StageTimer time(record);
    const LoadedCase moving = time("read", [&] { return load_case(moving_dir, flags.link_iou); });
    const LoadedCase fixed = time("read", [&] { return load_case(fixed_dir, flags.link_iou); });
    if (moving.data.image.dims() != fixed.data.image.dims()) {
        fail(ErrorCode::DimMismatch, "moving and fixed images differ in dims");
    }
    const MatchResult result = time("match", [&] {
        return match_candidates(moving.candidates, moving.data.features, fixed.candidates, fixed.data.features, cfg);
    });
    if (result.pairing.empty()) {
        err << "error: no ROI pairs with similarity above epsilon=" << cfg.epsilon << " (K=0)\n";
        return kFailure;
    }
    PairingFile file{result.pairing, moving.data.image.dims(), moving.data.image.spacing(), moving_dir, fixed_dir};
    time("write", [&] { write_pairing(file, out_dir, &record.outputs); });
    write_run_record(record, out_dir);
    out << "matched K=" << result.pairing.size() << " ROI pairs (" << moving.candidates.size() << " moving, "
        << fixed.candidates.size() << " fixed candidates)\n";
    return kOk;
}

inline int cmd_fit_ddf(const std::string& pairing_dir, const FitFlags& flags, const std::string& out_dir,
                       std::ostream& out)
{
    const FitConfig cfg = flags.config();
    RunRecord record;
    record.command = "fit-ddf";
    record.config_snapshot = flags.snapshot();
    record.config_snapshot["pairing"] = pairing_dir;
    record.config_snapshot["out"] = out_dir;

    StageTimer time(record);
    const PairingFile file = time("read", [&] { return read_pairing(pairing_dir); });
    const FitResult fit = time("fit", [&] { return fit_ddf(file.pairing, cfg, file.spacing); });
    time("write", [&] {
        write_ddf(fit.ddf, out_dir);
        std::ostringstream csv;
        csv << "iter,total,roi_mse,roi_dice,smoothness\n";
        for (std::size_t i = 0; i < fit.history.size(); ++i) {
            const auto& h = fit.history[i];
            csv << i << ',' << format_real(h.total) << ',' << format_real(h.roi_mse) << ','
                << format_real(h.roi_dice) << ',' << format_real(h.smoothness) << '\n';
        }
        write_text(fs::path(out_dir) / "loss_history.csv", csv.str());
    });
    const fs::path root(out_dir);
    record.outputs = {(root / "ddf.raw").string(), (root / "ddf.json").string(),
                      (root / "loss_history.csv").string()};
    write_run_record(record, out_dir);
    out << "fitted DDF in " << fit.updates << " updates, loss " << format_real(fit.history.front().total)
        << " -> " << format_real(fit.history.back().total) << "\n";
    return kOk;
}

inline int cmd_warp(const std::string& ddf_dir, const std::string& input, bool is_mask, const std::string& out_path,
                    std::ostream& out)
{
    const DisplacementField ddf = read_ddf(ddf_dir);
    RealGrid grid(ddf.dims());
    if (is_mask) {
        grid = to_real_grid(read_mask(input, ddf.dims()));
    } else {
        const auto values = read_f32(input, voxel_count(ddf.dims()));
        grid.data.assign(values.begin(), values.end());
    }
    const RealGrid warped = warp_mask(grid, ddf);
    std::vector<float> values(warped.data.begin(), warped.data.end());
    const fs::path p(out_path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    write_f32(p, values);
    out << "warped " << dims_to_string(ddf.dims()) << " grid to " << out_path << "\n";
    return kOk;
}

inline int cmd_eval(const std::string& pairing_dir, const std::string& ddf_dir, const std::vector<double>& spacing_flag,
                    const std::string& out_path, std::ostream& out)
{
    const PairingFile file = read_pairing(pairing_dir);
    const Spacing spacing = spacing_flag.empty() ? unit_spacing(file.dims.size()) : spacing_flag;
    try {
        validate_spacing(spacing, file.dims.size());
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    EvalReport report;
    if (ddf_dir.empty()) {
        report = evaluate(file.pairing, spacing);
    } else {
        const DisplacementField ddf = read_ddf(ddf_dir);
        report = evaluate(file.pairing, ddf, spacing);
    }
    emit(report_to_json(report).dump(2) + "\n", out_path, out);
    return kOk;
}

inline int cmd_roundtrip(const std::string& ddf_dir, const std::string& out_path, std::ostream& out)
{
    const DisplacementField ddf = read_ddf(ddf_dir);
    const auto points = all_voxel_points(ddf.dims());
    const SampledPairs sampled = ddf_to_roi_pairs(ddf, points);
    const DisplacementField rebuilt = reconstruct_ddf(sampled.pairing, ddf.dims());

    std::vector<bool> skipped(points.size(), false);
    for (std::size_t s : sampled.skipped) {
        skipped[s] = true;
    }
    const std::size_t d = ddf.rank();
    double max_err = 0.0;
    bool integer_field = true;
    for (std::size_t v = 0; v < points.size(); ++v) {
        for (std::size_t c = 0; c < d; ++c) {
            integer_field = integer_field && ddf.at(v, c) == std::round(ddf.at(v, c));
            if (!skipped[v]) {
                max_err = std::max(max_err, std::abs(rebuilt.at(v, c) - ddf.at(v, c)));
            }
        }
    }
    json report = {{"num_points", points.size()},
                   {"num_pairs", sampled.pairing.size()},
                   {"skipped_points", sampled.skipped.size()},
                   {"integer_field", integer_field},
                   {"max_abs_error", max_err},
                   {"within_half_voxel", max_err <= 0.5}};
    emit(report.dump(2) + "\n", out_path, out);
    return kOk;
}

inline int cmd_ablate(const std::string& moving_dir, const std::string& fixed_dir, const std::string& sweep,
                      const std::vector<std::string>& values, const MatchFlags& match_flags, const FitFlags& fit_flags,
                      const std::string& out_path, std::ostream& out)
{
    if (values.empty()) {
        throw UsageError("--values must list at least one setting");
    }
    const MatchConfig match = match_flags.config();
    const FitConfig fit = fit_flags.config();
    const LoadedCase moving = load_case(moving_dir, match_flags.link_iou);
    const LoadedCase fixed = load_case(fixed_dir, match_flags.link_iou);

    std::vector<AblationRow> rows;
    if (sweep == "k") {
        std::vector<std::optional<std::size_t>> ks;
        for (const auto& v : values) {
            if (v == "all") {
                ks.emplace_back(std::nullopt);
                continue;
            }
            try {
                const long long k = std::stoll(v);
                if (k < 1) {
                    throw UsageError("k values must be >= 1");
                }
                ks.emplace_back(static_cast<std::size_t>(k));
            } catch (const std::logic_error&) {
                throw UsageError("invalid k value '" + v + "'");
            }
        }
        rows = sweep_pair_count(moving.candidates, moving.data.features, fixed.candidates, fixed.data.features,
                                match, fit, ks);
    } else {
        std::vector<double> eps;
        for (const auto& v : values) {
            try {
                const double e = std::stod(v);
                if (!(e >= 0.0 && e <= 1.0)) {
                    throw UsageError("epsilon values must lie in [0,1]");
                }
                eps.push_back(e);
            } catch (const std::logic_error&) {
                throw UsageError("invalid epsilon value '" + v + "'");
            }
        }
        rows = sweep_epsilon(moving.candidates, moving.data.features, fixed.candidates, fixed.data.features, match,
                             fit, eps);
    }
    std::ostringstream csv;
    csv << "setting,mean_dice,tre,num_pairs\n";
    for (const auto& r : rows) {
        csv << r.setting << ',' << format_real(r.mean_dice) << ',' << (r.tre ? format_real(*r.tre) : "nan") << ','
            << r.num_pairs << '\n';
    }
    emit(csv.str(), out_path, out);
    return kOk;
}

} // namespace cli

/// Entry point shared by the roireg executable and the tests. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using namespace cli;
    CLI::App app{"ROI-pair correspondence registration engine", "roireg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kEngineVersion);

    SynthFlags synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic moving/fixed case pair");
    synth_cmd->add_option("--dims", synth.dims, "grid extents, e.g. 64,64 or 32,32,32")->required()->delimiter(',');
    synth_cmd->add_option("--shapes", synth.shapes, "number of shapes")->capture_default_str();
    synth_cmd->add_option("--tx", synth.tx, "translation along x (voxels)");
    synth_cmd->add_option("--ty", synth.ty, "translation along y (voxels)");
    synth_cmd->add_option("--tz", synth.tz, "translation along z (voxels)");
    synth_cmd->add_option("--rotate", synth.rotate, "in-plane rotation about the grid centre (degrees)");
    synth_cmd->add_option("--kinds", synth.kinds, "shape kinds: disc, box, ellipse")->delimiter(',');
    synth_cmd->add_option("--noise", synth.noise, "feature noise sigma")->capture_default_str();
    synth_cmd->add_option("--channels", synth.channels, "feature channels")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--stride", synth.stride, "feature grid stride (0 = default)");
    synth_cmd->add_option("--spacing", synth.spacing, "voxel spacing per axis")->delimiter(',');
    synth_cmd->add_option("--out", synth.out, "output directory")->required();

    std::string moving_dir, fixed_dir, out_dir;
    MatchFlags match_flags;
    auto* match_cmd = app.add_subcommand("match", "match ROI candidates between two cases");
    match_cmd->add_option("moving", moving_dir, "moving case directory")->required();
    match_cmd->add_option("fixed", fixed_dir, "fixed case directory")->required();
    match_flags.add_to(*match_cmd);
    match_cmd->add_option("--out", out_dir, "output pairing directory")->required();

    std::string pairing_dir;
    FitFlags fit_flags;
    auto* fit_cmd = app.add_subcommand("fit-ddf", "fit a dense displacement field to a pairing");
    fit_cmd->add_option("pairing", pairing_dir, "pairing directory")->required();
    fit_flags.add_to(*fit_cmd);
    fit_cmd->add_option("--out", out_dir, "output directory")->required();

    std::string ddf_dir, input_path, out_path;
    bool warp_is_mask = false;
    auto* warp_cmd = app.add_subcommand("warp", "resample a raw grid through a displacement field");
    warp_cmd->add_option("ddf", ddf_dir, "DDF directory")->required();
    warp_cmd->add_option("input", input_path, "raw float32 grid (or uint8 mask with --mask)")->required();
    warp_cmd->add_flag("--mask", warp_is_mask, "input is a one-byte-per-voxel mask");
    warp_cmd->add_option("--out", out_path, "output raw float32 file")->required();

    std::vector<double> eval_spacing;
    auto* eval_cmd = app.add_subcommand("eval", "Dice/TRE report for a pairing, optionally after warping");
    eval_cmd->add_option("pairing", pairing_dir, "pairing directory")->required();
    eval_cmd->add_option("--ddf", ddf_dir, "DDF directory");
    eval_cmd->add_option("--spacing", eval_spacing, "voxel spacing (default: voxel units)")->delimiter(',');
    eval_cmd->add_option("--out", out_path, "report file (default: stdout)");

    auto* roundtrip_cmd = app.add_subcommand("roundtrip", "DDF -> single-voxel ROI pairs -> DDF reconstruction");
    roundtrip_cmd->add_option("ddf", ddf_dir, "DDF directory")->required();
    roundtrip_cmd->add_option("--out", out_path, "report file (default: stdout)");

    std::string sweep = "k";
    std::vector<std::string> sweep_values;
    MatchFlags ablate_match;
    FitFlags ablate_fit;
    auto* ablate_cmd = app.add_subcommand("ablate", "pair-count or threshold ablation sweep");
    ablate_cmd->add_option("moving", moving_dir, "moving case directory")->required();
    ablate_cmd->add_option("fixed", fixed_dir, "fixed case directory")->required();
    ablate_cmd->add_option("--sweep", sweep, "k | epsilon")->check(CLI::IsMember({"k", "epsilon"}))->capture_default_str();
    ablate_cmd->add_option("--values", sweep_values, "sweep settings, e.g. 1,2,3,all or 0.2,0.4,0.6,0.8")
        ->delimiter(',');
    ablate_match.add_to(*ablate_cmd);
    ablate_fit.add_to(*ablate_cmd);
    ablate_cmd->add_option("--out", out_path, "CSV file (default: stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth_cmd) {
            synth.out = synth.out.empty() ? "." : synth.out;
            return cmd_synth(synth, out);
        }
        if (*match_cmd) {
            return cmd_match(moving_dir, fixed_dir, match_flags, out_dir, out, err);
        }
        if (*fit_cmd) {
            return cmd_fit_ddf(pairing_dir, fit_flags, out_dir, out);
        }
        if (*warp_cmd) {
            return cmd_warp(ddf_dir, input_path, warp_is_mask, out_path, out);
        }
        if (*eval_cmd) {
            return cmd_eval(pairing_dir, ddf_dir, eval_spacing, out_path, out);
        }
        if (*roundtrip_cmd) {
            return cmd_roundtrip(ddf_dir, out_path, out);
        }
        if (*ablate_cmd) {
            return cmd_ablate(moving_dir, fixed_dir, sweep, sweep_values, ablate_match, ablate_fit, out_path, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

} // namespace roireg

#endif // ROIREG_CLI_HPP

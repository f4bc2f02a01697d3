#ifndef ROIREG_INTERCHANGE_HPP
#define ROIREG_INTERCHANGE_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "grid.hpp"
#include "types.hpp"

namespace roireg {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::uint64_t kInterchangeVersion = 1;

enum class CaseRole { Moving, Fixed };

inline std::string to_string(CaseRole role)
{
    return role == CaseRole::Moving ? "moving" : "fixed";
}

/// Contents of manifest.json. Mask files hold either full-volume masks or, when a mask carries
/// `source_slice`, a single in-plane slice of a 3D case.
struct CaseManifest {
    std::uint64_t version = kInterchangeVersion;
    CaseRole role = CaseRole::Moving;
    std::string image_ref = "image.raw";
    std::string feature_ref = "features.raw";
    std::vector<std::string> mask_refs;
    std::vector<MaskMeta> mask_meta;
    Dims dims;
    Spacing spacing;
    Dims feature_dims;
    std::size_t feature_channels = 0;

    friend bool operator==(const CaseManifest&, const CaseManifest&) = default;
};

struct CaseData {
    Image image;
    FeatureMap features;
    MaskSet masks;

    friend bool operator==(const CaseData&, const CaseData&) = default;
};

inline std::string mask_filename(std::size_t i)
{
    std::ostringstream os;
    os << "mask_" << std::setw(3) << std::setfill('0') << i << ".raw";
    return os.str();
}

/// Manifest describing the given arrays with the default file names.
inline CaseManifest make_manifest(CaseRole role, const Image& image, const FeatureMap& features,
                                  const MaskSet& masks)
{
    CaseManifest m;
    m.role = role;
    m.dims = image.dims();
    m.spacing = image.spacing();
    m.feature_dims = features.grid_dims();
    m.feature_channels = features.channels();
    for (std::size_t i = 0; i < masks.size(); ++i) {
        m.mask_refs.push_back(mask_filename(i));
        m.mask_meta.push_back(masks.meta(i));
    }
    return m;
}

// ---------------------------------------------------------------------------------------------
// Raw little-endian arrays
// ---------------------------------------------------------------------------------------------

inline std::vector<char> encode_f32(std::span<const float> values)
{
    std::vector<char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (std::size_t b = 0; b < 4; ++b) {
            bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
        }
    }
    return bytes;
}

inline std::vector<float> decode_f32(const std::vector<char>& bytes)
{
    std::vector<float> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        }
        values[i] = std::bit_cast<float>(bits);
    }
    return values;
}

inline void write_bytes(const fs::path& path, const char* data, std::size_t size)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) {
        fail(ErrorCode::IoError, "failed writing " + path.string());
    }
}

inline void write_text(const fs::path& path, const std::string& text)
{
    write_bytes(path, text.data(), text.size());
}

inline std::vector<char> read_bytes(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::IoError, "missing file " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::IoError, "failed reading " + path.string());
    }
    return bytes;
}

inline std::vector<char> read_sized(const fs::path& path, std::size_t expected)
{
    auto bytes = read_bytes(path);
    if (bytes.size() != expected) {
        fail(ErrorCode::SizeMismatch, path.filename().string() + " has " + std::to_string(bytes.size()) +
                                          " bytes, expected " + std::to_string(expected));
    }
    return bytes;
}

inline void write_f32(const fs::path& path, std::span<const float> values)
{
    const auto bytes = encode_f32(values);
    write_bytes(path, bytes.data(), bytes.size());
}

inline std::vector<float> read_f32(const fs::path& path, std::size_t count)
{
    return decode_f32(read_sized(path, count * 4));
}

inline void write_mask(const fs::path& path, const BinaryMask& mask)
{
    const auto bits = mask.bits();
    write_bytes(path, reinterpret_cast<const char*>(bits.data()), bits.size());
}

inline BinaryMask read_mask(const fs::path& path, const Dims& dims)
{
    const auto bytes = read_sized(path, voxel_count(dims));
    std::vector<std::uint8_t> bits(bytes.begin(), bytes.end());
    try {
        return BinaryMask(dims, std::move(bits));
    } catch (const Error& e) {
        fail(e.code(), path.filename().string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------------------------
// JSON helpers (strict typing; every violation is a ManifestParseError)
// ---------------------------------------------------------------------------------------------

namespace detail {

inline const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        fail(ErrorCode::ManifestParseError, std::string("missing key '") + key + "'");
    }
    return j.at(key);
}

inline std::uint64_t as_uint(const json& j, const char* what)
{
    if (!j.is_number_unsigned()) {
        fail(ErrorCode::ManifestParseError, std::string(what) + " must be a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline double as_real(const json& j, const char* what)
{
    if (!j.is_number()) {
        fail(ErrorCode::ManifestParseError, std::string(what) + " must be a number");
    }
    return j.get<double>();
}

inline std::string as_string(const json& j, const char* what)
{
    if (!j.is_string()) {
        fail(ErrorCode::ManifestParseError, std::string(what) + " must be a string");
    }
    return j.get<std::string>();
}

inline const json& as_array(const json& j, const char* what)
{
    if (!j.is_array()) {
        fail(ErrorCode::ManifestParseError, std::string(what) + " must be an array");
    }
    return j;
}

inline Dims as_dims(const json& j, const char* what)
{
    Dims dims;
    for (const auto& e : as_array(j, what)) {
        dims.push_back(static_cast<std::size_t>(as_uint(e, what)));
    }
    return dims;
}

inline Spacing as_spacing(const json& j, const char* what)
{
    Spacing s;
    for (const auto& e : as_array(j, what)) {
        s.push_back(as_real(e, what));
    }
    return s;
}

inline std::string safe_ref(const json& j, const char* what)
{
    std::string ref = as_string(j, what);
    const fs::path p(ref);
    if (ref.empty() || p.is_absolute() || p.has_parent_path()) {
        fail(ErrorCode::ManifestParseError, std::string(what) + " must be a plain file name: '" + ref + "'");
    }
    return ref;
}

inline json parse_json_file(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::ManifestParseError, path.filename().string() + ": " + e.what());
    }
}

inline json meta_to_json(const MaskMeta& meta)
{
    json j = json::object();
    if (meta.predicted_iou) {
        j["predicted_iou"] = *meta.predicted_iou;
    }
    if (meta.stability_score) {
        j["stability_score"] = *meta.stability_score;
    }
    if (meta.source_slice) {
        j["source_slice"] = *meta.source_slice;
    }
    return j;
}

inline MaskMeta meta_from_json(const json& j)
{
    if (!j.is_object()) {
        fail(ErrorCode::ManifestParseError, "mask_meta entries must be objects");
    }
    MaskMeta meta;
    auto unit = [](const json& v, const char* what) {
        const double x = as_real(v, what);
        if (!(x >= 0.0 && x <= 1.0)) {
            fail(ErrorCode::ManifestParseError, std::string(what) + " must lie in [0,1]");
        }
        return x;
    };
    if (j.contains("predicted_iou") && !j.at("predicted_iou").is_null()) {
        meta.predicted_iou = unit(j.at("predicted_iou"), "predicted_iou");
    }
    if (j.contains("stability_score") && !j.at("stability_score").is_null()) {
        meta.stability_score = unit(j.at("stability_score"), "stability_score");
    }
    if (j.contains("source_slice") && !j.at("source_slice").is_null()) {
        meta.source_slice = static_cast<std::size_t>(as_uint(j.at("source_slice"), "source_slice"));
    }
    return meta;
}

} // namespace detail

inline json manifest_to_json(const CaseManifest& m)
{
    json j;
    j["version"] = m.version;
    j["role"] = to_string(m.role);
    j["image_ref"] = m.image_ref;
    j["feature_ref"] = m.feature_ref;
    j["mask_refs"] = m.mask_refs;
    json meta = json::array();
    for (const auto& mm : m.mask_meta) {
        meta.push_back(detail::meta_to_json(mm));
    }
    j["mask_meta"] = std::move(meta);
    j["dims"] = m.dims;
    j["spacing"] = m.spacing;
    j["feature_dims"] = m.feature_dims;
    j["feature_channels"] = m.feature_channels;
    return j;
}

inline CaseManifest manifest_from_json(const json& j)
{
    using namespace detail;
    if (!j.is_object()) {
        fail(ErrorCode::ManifestParseError, "manifest must be a JSON object");
    }
    CaseManifest m;
    m.version = as_uint(field(j, "version"), "version");
    if (m.version != kInterchangeVersion) {
        fail(ErrorCode::UnsupportedVersion, "manifest version " + std::to_string(m.version) +
                                                " (supported: " + std::to_string(kInterchangeVersion) + ")");
    }
    const std::string role = as_string(field(j, "role"), "role");
    if (role == "moving") {
        m.role = CaseRole::Moving;
    } else if (role == "fixed") {
        m.role = CaseRole::Fixed;
    } else {
        fail(ErrorCode::ManifestParseError, "role must be 'moving' or 'fixed', got '" + role + "'");
    }
    m.image_ref = safe_ref(field(j, "image_ref"), "image_ref");
    m.feature_ref = safe_ref(field(j, "feature_ref"), "feature_ref");
    for (const auto& r : as_array(field(j, "mask_refs"), "mask_refs")) {
        m.mask_refs.push_back(safe_ref(r, "mask_refs"));
    }
    for (const auto& e : as_array(field(j, "mask_meta"), "mask_meta")) {
        m.mask_meta.push_back(meta_from_json(e));
    }
    if (m.mask_refs.size() != m.mask_meta.size()) {
        fail(ErrorCode::ManifestParseError, "mask_refs and mask_meta differ in length");
    }
    m.dims = as_dims(field(j, "dims"), "dims");
    m.spacing = as_spacing(field(j, "spacing"), "spacing");
    m.feature_dims = as_dims(field(j, "feature_dims"), "feature_dims");
    m.feature_channels = static_cast<std::size_t>(as_uint(field(j, "feature_channels"), "feature_channels"));
    return m;
}

namespace detail {

// Shape of the mask file for entry i: a slice plane when tagged with source_slice.
inline Dims mask_dims_for(const CaseManifest& m, const MaskMeta& meta)
{
    if (meta.source_slice) {
        if (m.dims.size() != 3) {
            fail(ErrorCode::InconsistentDims, "source_slice is only valid for 3D cases");
        }
        if (*meta.source_slice >= m.dims[0]) {
            fail(ErrorCode::InconsistentDims, "source_slice " + std::to_string(*meta.source_slice) +
                                                  " outside z-extent " + std::to_string(m.dims[0]));
        }
        return {m.dims[1], m.dims[2]};
    }
    return m.dims;
}

inline void check_manifest_dims(const CaseManifest& m)
{
    auto checked = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            fail(ErrorCode::InconsistentDims, e.what());
        }
    };
    checked([&] { require_image_rank(m.dims); });
    checked([&] { require_image_rank(m.feature_dims); });
    checked([&] { validate_spacing(m.spacing, m.dims.size()); });
    if (m.feature_dims.size() != m.dims.size()) {
        fail(ErrorCode::InconsistentDims, "feature_dims rank differs from dims rank");
    }
    if (m.feature_channels == 0) {
        fail(ErrorCode::InconsistentDims, "feature_channels must be positive");
    }
    // Guard against absurd sizes before any allocation.
    constexpr std::size_t limit = std::size_t{1} << 32;
    std::size_t total = 1;
    for (auto n : m.dims) {
        if (n > limit || (total *= n) > limit) {
            fail(ErrorCode::InconsistentDims, "image dims too large");
        }
    }
    if (m.feature_channels > limit) {
        fail(ErrorCode::InconsistentDims, "feature_channels too large");
    }
    total = m.feature_channels;
    for (auto n : m.feature_dims) {
        if (n > limit || (total *= n) > limit) {
            fail(ErrorCode::InconsistentDims, "feature dims too large");
        }
    }
}

} // namespace detail

/// Writes manifest.json plus one raw file per array into `dir` (created if missing).
inline void write_case(const CaseManifest& manifest, const Image& image, const FeatureMap& features,
                       const MaskSet& masks, const fs::path& dir)
{
    detail::check_manifest_dims(manifest);
    if (image.dims() != manifest.dims || image.spacing() != manifest.spacing) {
        fail(ErrorCode::InconsistentDims, "image geometry disagrees with the manifest");
    }
    if (features.grid_dims() != manifest.feature_dims || features.channels() != manifest.feature_channels) {
        fail(ErrorCode::InconsistentDims, "feature map geometry disagrees with the manifest");
    }
    if (masks.size() != manifest.mask_refs.size() || manifest.mask_meta.size() != manifest.mask_refs.size()) {
        fail(ErrorCode::InconsistentDims, "mask count disagrees with the manifest");
    }
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks.meta(i) != manifest.mask_meta[i]) {
            fail(ErrorCode::InconsistentDims, "mask metadata disagrees with the manifest");
        }
        if (masks[i].dims() != detail::mask_dims_for(manifest, manifest.mask_meta[i])) {
            fail(ErrorCode::InconsistentDims, "mask " + std::to_string(i) + " has dims " +
                                                  dims_to_string(masks[i].dims()));
        }
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    write_text(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    write_f32(dir / manifest.image_ref, image.data());
    write_f32(dir / manifest.feature_ref, features.data());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        write_mask(dir / manifest.mask_refs[i], masks[i]);
    }
}

inline void write_case(const CaseData& data, CaseRole role, const fs::path& dir)
{
    write_case(make_manifest(role, data.image, data.features, data.masks), data.image, data.features,
               data.masks, dir);
}

inline CaseManifest read_manifest(const fs::path& dir)
{
    return manifest_from_json(detail::parse_json_file(dir / "manifest.json"));
}

/// Reads and validates a case directory written by write_case (or any conforming exporter).
inline CaseData read_case(const fs::path& dir, CaseManifest* manifest_out = nullptr)
{
    const CaseManifest m = read_manifest(dir);
    detail::check_manifest_dims(m);

    CaseData data;
    data.image = Image(m.dims, read_f32(dir / m.image_ref, voxel_count(m.dims)), m.spacing);
    data.features = FeatureMap(m.feature_channels, m.feature_dims,
                               read_f32(dir / m.feature_ref, m.feature_channels * voxel_count(m.feature_dims)));
    for (std::size_t i = 0; i < m.mask_refs.size(); ++i) {
        const Dims dims = detail::mask_dims_for(m, m.mask_meta[i]);
        BinaryMask mask = read_mask(dir / m.mask_refs[i], dims);
        if (!data.masks.empty() && data.masks[0].dims() != dims) {
            fail(ErrorCode::InconsistentDims, "a case cannot mix slice masks and volume masks");
        }
        data.masks.push_back(std::move(mask), m.mask_meta[i]);
    }
    if (manifest_out) {
        *manifest_out = m;
    }
    return data;
}

// ---------------------------------------------------------------------------------------------
// Displacement fields: ddf.raw (float32, component-major) + ddf.json {dims, spacing}
// ---------------------------------------------------------------------------------------------

inline void write_ddf(const DisplacementField& ddf, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    const std::size_t d = ddf.rank();
    const std::size_t n = ddf.voxels();
    std::vector<float> planar(n * d);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t v = 0; v < n; ++v) {
            planar[c * n + v] = static_cast<float>(ddf.at(v, c));
        }
    }
    write_f32(dir / "ddf.raw", planar);
    json j;
    j["dims"] = ddf.dims();
    j["spacing"] = ddf.spacing();
    write_text(dir / "ddf.json", j.dump(2) + "\n");
}

inline DisplacementField read_ddf(const fs::path& dir)
{
    const json j = detail::parse_json_file(dir / "ddf.json");
    const Dims dims = detail::as_dims(detail::field(j, "dims"), "dims");
    const Spacing spacing = detail::as_spacing(detail::field(j, "spacing"), "spacing");
    try {
        require_image_rank(dims);
        validate_spacing(spacing, dims.size());
    } catch (const Error& e) {
        fail(ErrorCode::InconsistentDims, e.what());
    }
    const std::size_t d = dims.size();
    const std::size_t n = voxel_count(dims);
    const auto planar = read_f32(dir / "ddf.raw", n * d);
    std::vector<double> interleaved(n * d);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t v = 0; v < n; ++v) {
            interleaved[v * d + c] = planar[c * n + v];
        }
    }
    return DisplacementField(dims, spacing, std::move(interleaved));
}

// ---------------------------------------------------------------------------------------------
// Pairings: pairing.json + one raw file per paired mask
// ---------------------------------------------------------------------------------------------

struct PairingFile {
    RoiPairing pairing;
    Dims dims;
    Spacing spacing;
    std::string moving_case;
    std::string fixed_case;
};

inline void write_pairing(const PairingFile& file, const fs::path& dir, std::vector<std::string>* written = nullptr)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    json pairs = json::array();
    for (std::size_t k = 0; k < file.pairing.size(); ++k) {
        const auto& p = file.pairing.pairs[k];
        if (p.moving_mask.dims() != file.dims || p.fixed_mask.dims() != file.dims) {
            fail(ErrorCode::InconsistentDims, "paired mask dims disagree with the pairing dims");
        }
        std::ostringstream mv, fx;
        mv << "pair_" << std::setw(3) << std::setfill('0') << k << "_moving.raw";
        fx << "pair_" << std::setw(3) << std::setfill('0') << k << "_fixed.raw";
        write_mask(dir / mv.str(), p.moving_mask);
        write_mask(dir / fx.str(), p.fixed_mask);
        if (written) {
            written->push_back((dir / mv.str()).string());
            written->push_back((dir / fx.str()).string());
        }
        pairs.push_back({{"moving_index", p.moving_index},
                         {"fixed_index", p.fixed_index},
                         {"similarity", p.similarity},
                         {"moving_mask", mv.str()},
                         {"fixed_mask", fx.str()}});
    }
    json j;
    j["version"] = kInterchangeVersion;
    j["epsilon_used"] = file.pairing.epsilon_used;
    j["dims"] = file.dims;
    j["spacing"] = file.spacing;
    j["moving_case"] = file.moving_case;
    j["fixed_case"] = file.fixed_case;
    j["pairs"] = std::move(pairs);
    write_text(dir / "pairing.json", j.dump(2) + "\n");
    if (written) {
        written->push_back((dir / "pairing.json").string());
    }
}

inline PairingFile read_pairing(const fs::path& dir)
{
    using namespace detail;
    const json j = parse_json_file(dir / "pairing.json");
    if (as_uint(field(j, "version"), "version") != kInterchangeVersion) {
        fail(ErrorCode::UnsupportedVersion, "unsupported pairing version");
    }
    PairingFile file;
    file.dims = as_dims(field(j, "dims"), "dims");
    file.spacing = as_spacing(field(j, "spacing"), "spacing");
    try {
        require_image_rank(file.dims);
        validate_spacing(file.spacing, file.dims.size());
    } catch (const Error& e) {
        fail(ErrorCode::InconsistentDims, e.what());
    }
    file.moving_case = as_string(field(j, "moving_case"), "moving_case");
    file.fixed_case = as_string(field(j, "fixed_case"), "fixed_case");
    file.pairing.epsilon_used = as_real(field(j, "epsilon_used"), "epsilon_used");
    for (const auto& p : as_array(field(j, "pairs"), "pairs")) {
        RoiPair pair;
        pair.moving_index = static_cast<std::size_t>(as_uint(field(p, "moving_index"), "moving_index"));
        pair.fixed_index = static_cast<std::size_t>(as_uint(field(p, "fixed_index"), "fixed_index"));
        pair.similarity = as_real(field(p, "similarity"), "similarity");
        pair.moving_mask = read_mask(dir / safe_ref(field(p, "moving_mask"), "moving_mask"), file.dims);
        pair.fixed_mask = read_mask(dir / safe_ref(field(p, "fixed_mask"), "fixed_mask"), file.dims);
        file.pairing.pairs.push_back(std::move(pair));
    }
    return file;
}

} // namespace roireg

#endif // ROIREG_INTERCHANGE_HPP

// Randomised write/read/corrupt loop over the case format, shared by the unit tests and the
// acceptance suite.
#ifndef ROIREG_TESTS_INTERCHANGE_FUZZ_HPP
#define ROIREG_TESTS_INTERCHANGE_FUZZ_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <roireg/interchange.hpp>

#include "test_support.hpp"

namespace fuzz {

using namespace roireg;
namespace fs = std::filesystem;

struct Outcome {
    std::size_t iterations = 0;
    std::size_t round_trips = 0;
    std::size_t corruptions = 0;
    std::vector<std::string> failures;
};

inline std::vector<char> slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::vector<char>& bytes)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline json load_manifest(const fs::path& dir)
{
    const auto bytes = slurp(dir / "manifest.json");
    return json::parse(bytes.begin(), bytes.end());
}

inline void save_manifest(const fs::path& dir, const json& j)
{
    const std::string s = j.dump(2);
    spit(dir / "manifest.json", std::vector<char>(s.begin(), s.end()));
}

// Float values including signed zeros, subnormals, infinities and NaN payloads.
inline float random_float(std::mt19937_64& rng)
{
    switch (rng() % 8) {
    case 0:
        return std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
    case 1:
        return -0.0f;
    case 2:
        return std::numeric_limits<float>::denorm_min();
    default:
        return std::normal_distribution<float>(0.0f, 10.0f)(rng);
    }
}

inline CaseData random_case(std::mt19937_64& rng)
{
    const std::size_t d = 2 + rng() % 2;
    const std::size_t max_extent = d == 2 ? 12 : 6;
    Dims dims(d), grid(d);
    Spacing spacing(d);
    for (std::size_t a = 0; a < d; ++a) {
        dims[a] = 1 + rng() % max_extent;
        grid[a] = 1 + rng() % dims[a];
        spacing[a] = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    }
    const std::size_t channels = 1 + rng() % 5;

    std::vector<float> image(voxel_count(dims)), features(channels * voxel_count(grid));
    for (auto& v : image) {
        v = random_float(rng);
    }
    for (auto& v : features) {
        v = random_float(rng);
    }

    CaseData c{Image(dims, std::move(image), spacing), FeatureMap(channels, grid, std::move(features)), {}};
    const bool sliced = d == 3 && rng() % 3 == 0;
    const Dims mask_dims = sliced ? Dims{dims[1], dims[2]} : dims;
    const std::size_t count = rng() % 5;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<std::uint8_t> bits(voxel_count(mask_dims));
        for (auto& b : bits) {
            b = rng() % 2;
        }
        MaskMeta meta;
        if (rng() % 2) {
            meta.predicted_iou = unit(rng);
        }
        if (rng() % 2) {
            meta.stability_score = unit(rng);
        }
        if (sliced) {
            meta.source_slice = rng() % dims[0];
        }
        c.masks.push_back(BinaryMask(mask_dims, std::move(bits)), meta);
    }
    return c;
}

struct Corruption {
    std::string name;
    ErrorCode expected;
    // Returns false when the corruption does not apply to this case.
    std::function<bool(const fs::path&, const CaseManifest&, std::mt19937_64&)> apply;
};

inline std::vector<Corruption> corruptions()
{
    auto truncate = [](const fs::path& p, std::mt19937_64& rng) {
        auto b = slurp(p);
        if (b.empty()) {
            return false;
        }
        b.resize(rng() % b.size());
        spit(p, b);
        return true;
    };
    auto edit = [](std::function<void(json&, const CaseManifest&, std::mt19937_64&)> fn) {
        return [fn](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
            json j = load_manifest(dir);
            fn(j, m, rng);
            save_manifest(dir, j);
            return true;
        };
    };
    return {
        {"truncated image", ErrorCode::SizeMismatch,
         [=](const fs::path& dir, const CaseManifest&, std::mt19937_64& rng) { return truncate(dir / "image.raw", rng); }},
        {"truncated features", ErrorCode::SizeMismatch,
         [=](const fs::path& dir, const CaseManifest&, std::mt19937_64& rng) {
             return truncate(dir / "features.raw", rng);
         }},
        {"mask short by one byte", ErrorCode::SizeMismatch,
         [](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
             if (m.mask_refs.empty()) {
                 return false;
             }
             const fs::path p = dir / m.mask_refs[rng() % m.mask_refs.size()];
             auto b = slurp(p);
             b.pop_back();
             spit(p, b);
             return true;
         }},
        {"trailing bytes", ErrorCode::SizeMismatch,
         [](const fs::path& dir, const CaseManifest&, std::mt19937_64& rng) {
             const fs::path p = dir / (rng() % 2 ? "image.raw" : "features.raw");
             auto b = slurp(p);
             b.resize(b.size() + 1 + rng() % 7, '\x7f');
             spit(p, b);
             return true;
         }},
        {"non-binary mask byte", ErrorCode::CorruptMask,
         [](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
             if (m.mask_refs.empty()) {
                 return false;
             }
             const fs::path p = dir / m.mask_refs[rng() % m.mask_refs.size()];
             auto b = slurp(p);
             b[rng() % b.size()] = static_cast<char>(2 + rng() % 254);
             spit(p, b);
             return true;
         }},
        {"missing referenced file", ErrorCode::IoError,
         [](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
             std::vector<std::string> refs{m.image_ref, m.feature_ref};
             refs.insert(refs.end(), m.mask_refs.begin(), m.mask_refs.end());
             fs::remove(dir / refs[rng() % refs.size()]);
             return true;
         }},
        {"missing manifest", ErrorCode::IoError,
         [](const fs::path& dir, const CaseManifest&, std::mt19937_64&) {
             fs::remove(dir / "manifest.json");
             return true;
         }},
        {"truncated manifest", ErrorCode::ManifestParseError,
         [](const fs::path& dir, const CaseManifest&, std::mt19937_64& rng) {
             auto b = slurp(dir / "manifest.json");
             b.resize(rng() % (b.size() - 1)); // never just the closing brace's trailing newline
             spit(dir / "manifest.json", b);
             return true;
         }},
        {"garbage manifest", ErrorCode::ManifestParseError,
         [](const fs::path& dir, const CaseManifest&, std::mt19937_64& rng) {
             std::vector<char> b(1 + rng() % 64);
             for (auto& c : b) {
                 c = static_cast<char>(rng());
             }
             b[0] = '{'; // an object that never closes
             spit(dir / "manifest.json", b);
             return true;
         }},
        {"manifest not an object", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64&) { j = json::array({1, 2, 3}); })},
        {"unsupported version", ErrorCode::UnsupportedVersion,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) { j["version"] = 2 + rng() % 100; })},
        {"missing key", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             static const char* keys[] = {"version", "role", "image_ref", "feature_ref", "mask_refs",
                                          "mask_meta", "dims", "spacing", "feature_dims", "feature_channels"};
             j.erase(keys[rng() % 10]);
         })},
        {"mistyped field", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             switch (rng() % 6) {
             case 0: j["dims"] = "64x64"; break;
             case 1: j["feature_channels"] = 2.5; break;
             case 2: j["version"] = "1"; break;
             case 3: j["spacing"] = json::array({"a", "b"}); break;
             case 4: j["mask_refs"] = 7; break;
             default: j["image_ref"] = nullptr; break;
             }
         })},
        {"negative dim", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) { j["dims"][rng() % j["dims"].size()] = -4; })},
        {"bad role", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64&) { j["role"] = "reference"; })},
        {"path escape", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             j[rng() % 2 ? "image_ref" : "feature_ref"] = rng() % 2 ? "../image.raw" : "/etc/passwd";
         })},
        {"meta length mismatch", ErrorCode::ManifestParseError,
         edit([](json& j, const CaseManifest&, std::mt19937_64&) { j["mask_meta"].push_back(json::object()); })},
        {"score out of range", ErrorCode::ManifestParseError,
         [](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
             if (m.mask_refs.empty()) {
                 return false;
             }
             json j = load_manifest(dir);
             j["mask_meta"][rng() % m.mask_refs.size()][rng() % 2 ? "predicted_iou" : "stability_score"] = 1.5;
             save_manifest(dir, j);
             return true;
         }},
        {"zero-length axis", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) { j["dims"][rng() % j["dims"].size()] = 0; })},
        {"unsupported rank", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest&, std::mt19937_64&) {
             j["dims"].push_back(2);
             j["spacing"].push_back(1.0);
             j["feature_dims"].push_back(1);
             j["dims"].push_back(2);
             j["spacing"].push_back(1.0);
             j["feature_dims"].push_back(1);
         })},
        {"feature rank mismatch", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest& m, std::mt19937_64&) {
             if (m.dims.size() == 2) {
                 j["feature_dims"].push_back(1);
             } else {
                 j["feature_dims"].erase(0);
             }
         })},
        {"zero channels", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest&, std::mt19937_64&) { j["feature_channels"] = 0; })},
        {"bad spacing", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             if (rng() % 2) {
                 j["spacing"].push_back(1.0);
             } else {
                 j["spacing"][0] = -1.0;
             }
         })},
        {"absurd dims", ErrorCode::InconsistentDims,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             j["dims"][rng() % j["dims"].size()] = rng() % 2 ? (std::uint64_t{1} << 40) : ~std::uint64_t{0};
         })},
        {"dims disagree with files", ErrorCode::SizeMismatch,
         edit([](json& j, const CaseManifest&, std::mt19937_64& rng) {
             const std::size_t a = rng() % j["dims"].size();
             j["dims"][a] = j["dims"][a].get<std::uint64_t>() + 1;
         })},
        {"slice outside volume", ErrorCode::InconsistentDims,
         [](const fs::path& dir, const CaseManifest& m, std::mt19937_64& rng) {
             if (m.mask_refs.empty()) {
                 return false;
             }
             json j = load_manifest(dir);
             const std::uint64_t z = m.dims.size() == 3 ? m.dims[0] + rng() % 3 : rng() % 4;
             j["mask_meta"][rng() % m.mask_refs.size()]["source_slice"] = z;
             save_manifest(dir, j);
             return true;
         }},
    };
}

// Byte-exact comparison of every file two case directories share by name.
inline bool same_files(const fs::path& a, const fs::path& b)
{
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (!fs::exists(b / e.path().filename()) || slurp(e.path()) != slurp(b / e.path().filename())) {
            return false;
        }
        ++n;
    }
    return n == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{}));
}

inline bool same_case(const CaseData& x, const CaseData& y)
{
    return x.image.dims() == y.image.dims() && x.image.spacing() == y.image.spacing() &&
           encode_f32(x.image.data()) == encode_f32(y.image.data()) &&
           x.features.grid_dims() == y.features.grid_dims() && x.features.channels() == y.features.channels() &&
           encode_f32(x.features.data()) == encode_f32(y.features.data()) && x.masks == y.masks;
}

inline Outcome run(std::size_t iterations, std::uint64_t seed, const fs::path& root)
{
    Outcome out;
    std::mt19937_64 rng(seed);
    const auto kinds = corruptions();
    for (std::size_t it = 0; it < iterations; ++it) {
        ++out.iterations;
        const fs::path dir = root / ("case_" + std::to_string(it));
        const fs::path copy = root / ("copy_" + std::to_string(it));
        std::string stage = "write";
        try {
            const CaseData original = random_case(rng);
            const CaseRole role = rng() % 2 ? CaseRole::Moving : CaseRole::Fixed;
            write_case(original, role, dir);
            stage = "read";
            CaseManifest manifest;
            const CaseData back = read_case(dir, &manifest);
            stage = "rewrite";
            write_case(back, role, copy);
            if (!same_case(original, back) || manifest.role != role || !same_files(dir, copy)) {
                out.failures.push_back("iteration " + std::to_string(it) + ": round trip not byte-exact");
            } else {
                ++out.round_trips;
            }

            // Corrupt the copy with a kind that applies to this case.
            stage = "corrupt";
            for (int attempt = 0; attempt < 16; ++attempt) {
                const Corruption& c = kinds[rng() % kinds.size()];
                if (!c.apply(copy, manifest, rng)) {
                    continue;
                }
                ++out.corruptions;
                try {
                    (void)read_case(copy);
                    out.failures.push_back("iteration " + std::to_string(it) + ": '" + c.name + "' was accepted");
                } catch (const Error& e) {
                    if (e.code() != c.expected) {
                        out.failures.push_back("iteration " + std::to_string(it) + ": '" + c.name + "' raised " +
                                               std::string(to_string(e.code())) + ", expected " +
                                               std::string(to_string(c.expected)) + " (" + e.what() + ")");
                    }
                }
                break;
            }
        } catch (const std::exception& e) {
            out.failures.push_back("iteration " + std::to_string(it) + " (" + stage + "): untyped exception " + e.what());
        }
        std::error_code ec;
        fs::remove_all(dir, ec);
        fs::remove_all(copy, ec);
    }
    return out;
}

} // namespace fuzz

#endif // ROIREG_TESTS_INTERCHANGE_FUZZ_HPP

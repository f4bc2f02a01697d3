#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <roireg/metrics.hpp>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace roireg;

namespace {

BinaryMask voxels(const Dims& dims, std::initializer_list<std::vector<std::size_t>> list)
{
    BinaryMask m(dims);
    for (const auto& v : list) {
        m.set(oracle::linear_of(v, dims), true);
    }
    return m;
}

BinaryMask first_n(const Dims& dims, std::size_t from, std::size_t count)
{
    BinaryMask m(dims);
    for (std::size_t i = from; i < from + count; ++i) {
        m.set(i, true);
    }
    return m;
}

} // namespace

TEST(Dice, EdgeCases)
{
    const Dims dims{10, 20};
    const BinaryMask empty(dims);
    const BinaryMask a = first_n(dims, 0, 100);
    EXPECT_EQ(dice_binary(empty, empty), 1.0);
    EXPECT_EQ(dice_binary(a, empty), 0.0);
    EXPECT_EQ(dice_binary(empty, a), 0.0);
    EXPECT_EQ(dice_binary(a, a), 1.0);
    EXPECT_EQ(dice_binary(a, first_n(dims, 100, 100)), 0.0);
}

TEST(Dice, HalfOverlap)
{
    const Dims dims{10, 20};
    EXPECT_DOUBLE_EQ(dice_binary(first_n(dims, 0, 100), first_n(dims, 50, 100)), 0.5);
}

TEST(Dice, SymmetricAndOneOnlyWhenIdentical)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = oracle::random_mask({5, 5}, 0.3, rng);
        auto b = trial % 4 == 0 ? a : oracle::random_mask({5, 5}, 0.3, rng);
        if (a.empty() || b.empty()) {
            continue;
        }
        EXPECT_EQ(dice_binary(a, b), dice_binary(b, a));
        EXPECT_EQ(dice_binary(a, b) == 1.0, a == b);
    }
}

TEST(Tre, AlignedIsZero)
{
    const auto m = voxels({8, 8}, {{2, 2}, {3, 5}});
    EXPECT_EQ(tre_rms({{m, m}, {m, m}}, {1.0, 1.0}), 0.0);
}

TEST(Tre, SinglePairDistance)
{
    EXPECT_DOUBLE_EQ(tre_rms({{voxels({8, 8}, {{0, 0}}), voxels({8, 8}, {{3, 0}})}}, {1.0, 1.0}), 3.0);
}

TEST(Tre, HandComputedRms)
{
    const Dims dims{8, 8};
    // distances 3 (along y) and 4 (along x)
    const std::vector<std::pair<BinaryMask, BinaryMask>> pairs{
        {voxels(dims, {{1, 1}}), voxels(dims, {{4, 1}})},
        {voxels(dims, {{2, 2}}), voxels(dims, {{2, 6}})},
    };
    EXPECT_NEAR(tre_rms(pairs, {1.0, 1.0}), std::sqrt(12.5), 1e-9);
}

TEST(Tre, UsesPhysicalSpacing)
{
    const Dims dims{8, 8};
    EXPECT_DOUBLE_EQ(tre_rms({{voxels(dims, {{0, 0}}), voxels(dims, {{0, 2}})}}, {1.0, 2.5}), 5.0);
}

TEST(Tre, InvariantUnderSharedRigidShift)
{
    std::mt19937_64 rng(2);
    const Dims dims{20, 20};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<BinaryMask, BinaryMask>> pairs, moved;
        std::uniform_int_distribution<std::size_t> u(0, 11), s(0, 7);
        const std::size_t dy = s(rng), dx = s(rng);
        for (int k = 0; k < 3; ++k) {
            const std::size_t ay = u(rng), ax = u(rng), by = u(rng), bx = u(rng);
            pairs.emplace_back(voxels(dims, {{ay, ax}, {ay + 1, ax}}), voxels(dims, {{by, bx}}));
            moved.emplace_back(voxels(dims, {{ay + dy, ax + dx}, {ay + 1 + dy, ax + dx}}),
                               voxels(dims, {{by + dy, bx + dx}}));
        }
        EXPECT_NEAR(tre_rms(pairs, {1.0, 1.0}), tre_rms(moved, {1.0, 1.0}), 1e-12);
    }
}

TEST(Tre, EmptyInputs)
{
    EXPECT_ROIREG_ERROR(tre_rms({}, {1.0, 1.0}), ErrorCode::EmptyList);
    EXPECT_ROIREG_ERROR(tre_rms({{BinaryMask({4, 4}), voxels({4, 4}, {{1, 1}})}}, {1.0, 1.0}), ErrorCode::EmptyMask);
}

TEST(Evaluate, IdentityFieldMatchesNoField)
{
    const Dims dims{16, 16};
    RoiPairing pairing;
    pairing.pairs.push_back(RoiPair{first_n(dims, 0, 40), first_n(dims, 10, 40), 0.9, 0, 0});
    pairing.pairs.push_back(RoiPair{first_n(dims, 100, 30), first_n(dims, 120, 30), 0.9, 1, 1});
    const EvalReport plain = evaluate(pairing, unit_spacing(2));
    const EvalReport warped = evaluate(pairing, DisplacementField(dims), unit_spacing(2));
    EXPECT_EQ(plain, warped);
    EXPECT_EQ(plain.num_rois, 2u);
    EXPECT_EQ(plain.dropped_rois, 0u);
    EXPECT_NEAR(plain.mean_dice, 0.5 * (60.0 / 80.0 + 20.0 / 60.0), 1e-12);
}

TEST(Evaluate, EmptyWarpedMaskIsDroppedFromTre)
{
    const Dims dims{8, 8};
    RoiPairing pairing;
    pairing.pairs.push_back(RoiPair{voxels(dims, {{1, 1}}), voxels(dims, {{1, 1}}), 1.0, 0, 0});
    pairing.pairs.push_back(RoiPair{voxels(dims, {{6, 6}}), voxels(dims, {{6, 4}}), 1.0, 1, 1});
    DisplacementField f(dims);
    for (std::size_t v = 0; v < f.voxels(); ++v) {
        f.at(v, 0) = f.at(v, 1) = 0.5; // a lone voxel spreads to four corners of 0.25: all masks vanish
    }
    const EvalReport r = evaluate(pairing, f, unit_spacing(2));
    EXPECT_EQ(r.dropped_rois, 2u);
    EXPECT_EQ(r.per_roi_dice, (std::vector<double>{0.0, 0.0}));
    EXPECT_FALSE(r.tre.has_value());

    DisplacementField partial(dims);
    for (std::size_t v = 0; v < 4 * 8; ++v) {
        partial.at(v, 0) = partial.at(v, 1) = 0.5; // only the top half of the grid is displaced
    }
    const EvalReport q = evaluate(pairing, partial, unit_spacing(2));
    EXPECT_EQ(q.dropped_rois, 1u);
    EXPECT_EQ(q.per_roi_dice[0], 0.0);
    ASSERT_TRUE(q.tre.has_value());
    EXPECT_DOUBLE_EQ(*q.tre, 2.0);
    EXPECT_EQ(q.per_roi_centroid_dist, (std::vector<double>{2.0}));
}

TEST(Evaluate, EmptyPairingRejected)
{
    EXPECT_ROIREG_ERROR(evaluate(RoiPairing{}, unit_spacing(2)), ErrorCode::EmptyPairing);
}

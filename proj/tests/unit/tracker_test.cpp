#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "birdpose/tracker.hpp"

namespace birdpose {
namespace {

// Area counted on a grid of cell size h.
double raster_iou(const BBox& a, const BBox& b, double h) {
    auto inside = [](const BBox& r, double x, double y) { return x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1; };
    const double x0 = std::min(a.x0, b.x0), x1 = std::max(a.x1, b.x1);
    const double y0 = std::min(a.y0, b.y0), y1 = std::max(a.y1, b.y1);
    long inter = 0, uni = 0;
    for (double y = y0 + h / 2; y < y1; y += h) {
        for (double x = x0 + h / 2; x < x1; x += h) {
            const bool ia = inside(a, x, y), ib = inside(b, x, y);
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    return uni ? static_cast<double>(inter) / uni : 0.0;
}

TEST(Iou, IdenticalBoxes) { EXPECT_EQ(iou({1, 2, 5, 7}, {1, 2, 5, 7}), 1.0); }

TEST(Iou, HalfShiftedUnitSquares) { EXPECT_NEAR(iou({0, 0, 1, 1}, {0.5, 0, 1.5, 1}), 1.0 / 3.0, 1e-15); }

TEST(Iou, DisjointAndDegenerate) {
    EXPECT_EQ(iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
    EXPECT_EQ(iou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);  // touching edge
    EXPECT_EQ(iou({0, 0, 0, 1}, {0, 0, 1, 1}), 0.0);
}

TEST(Iou, MatchesPixelGridOracleOnIntegerBoxes) {
    // Integer boxes make the unit-grid count exact.
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> u(0, 30);
    for (int i = 0; i < 200; ++i) {
        BBox a{double(u(rng)), double(u(rng)), 0, 0}, b{double(u(rng)), double(u(rng)), 0, 0};
        a.x1 = a.x0 + 1 + u(rng);
        a.y1 = a.y0 + 1 + u(rng);
        b.x1 = b.x0 + 1 + u(rng);
        b.y1 = b.y0 + 1 + u(rng);
        EXPECT_NEAR(iou(a, b), raster_iou(a, b, 1.0), 1e-12);
        EXPECT_EQ(iou(a, b), iou(b, a));
    }
}

TEST(Tracker, SameBoxKeepsIdentity) {
    Tracker tr;
    const std::vector<BBox> d{{10, 10, 20, 20}};
    tr.associate(0, d);
    const auto s = tr.associate(1, d);
    EXPECT_EQ(s.updated, std::vector<int>{0});
    EXPECT_TRUE(s.created.empty());
    ASSERT_EQ(tr.tracks().size(), 1u);
    EXPECT_EQ(tr.tracks()[0].entries.size(), 2u);
}

TEST(Tracker, DisjointBoxStartsNewTrack) {
    Tracker tr;
    tr.associate(0, std::vector<BBox>{{10, 10, 20, 20}});
    const auto s = tr.associate(1, std::vector<BBox>{{50, 50, 60, 60}});
    EXPECT_EQ(s.created, std::vector<int>{1});
    EXPECT_TRUE(s.updated.empty());
}

TEST(Tracker, TerminatesAfterExactlyFiveMisses) {
    Tracker tr;
    const std::vector<BBox> d{{10, 10, 20, 20}};
    tr.associate(0, d);
    for (int f = 1; f <= 4; ++f) {
        const auto s = tr.associate(f, {});
        EXPECT_TRUE(s.terminated.empty()) << f;
    }
    const auto s5 = tr.associate(5, {});
    EXPECT_EQ(s5.terminated, std::vector<int>{0});
    const auto s6 = tr.associate(6, d);
    EXPECT_EQ(s6.created, std::vector<int>{1});
}

TEST(Tracker, RecoversWithinMemory) {
    Tracker tr;
    const std::vector<BBox> d{{10, 10, 20, 20}};
    tr.associate(0, d);
    for (int f = 1; f <= 4; ++f) tr.associate(f, {});
    const auto s = tr.associate(5, d);
    EXPECT_EQ(s.updated, std::vector<int>{0});
    EXPECT_EQ(tr.tracks()[0].misses, 0);
}

TEST(Tracker, SkippedFramesCountAsMisses) {
    Tracker tr;
    const std::vector<BBox> d{{10, 10, 20, 20}};
    tr.associate(0, d);
    const auto s = tr.associate(6, d);  // frames 1..5 never arrived
    EXPECT_EQ(s.terminated, std::vector<int>{0});
    EXPECT_EQ(s.created, std::vector<int>{1});
}

TEST(Tracker, ThresholdRejectsWeakOverlap) {
    Tracker tr(TrackerOptions{0.5, 5});
    tr.associate(0, std::vector<BBox>{{0, 0, 10, 10}});
    const auto s = tr.associate(1, std::vector<BBox>{{6, 0, 16, 10}});  // IoU 4/16
    EXPECT_EQ(s.created.size(), 1u);
}

TEST(Tracker, GreedyPrefersHighestIou) {
    Tracker tr;
    tr.associate(0, std::vector<BBox>{{0, 0, 10, 10}, {8, 0, 18, 10}});
    // Detection 0 overlaps track 1 best, detection 1 overlaps track 0 best.
    const auto s = tr.associate(1, std::vector<BBox>{{8, 0, 18, 10}, {0, 0, 10, 10}});
    EXPECT_EQ(tr.tracks()[0].entries.back().detection, 1);
    EXPECT_EQ(tr.tracks()[1].entries.back().detection, 0);
    EXPECT_EQ(s.updated, (std::vector<int>{0, 1}));
}

TEST(Tracker, MatchingIgnoresDetectionOrder) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BBox> prev, cur;
        for (int i = 0; i < 5; ++i) {
            const double x = u(rng), y = u(rng);
            prev.push_back({x, y, x + 20, y + 20});
            cur.push_back({x + u(rng) / 10, y + u(rng) / 10, x + 20 + u(rng) / 10, y + 20});
        }
        std::vector<BBox> shuffled = cur;
        std::vector<int> perm{0, 1, 2, 3, 4};
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < 5; ++i) shuffled[i] = cur[perm[i]];
        Tracker a, b;
        a.associate(0, prev);
        b.associate(0, prev);
        a.associate(1, cur);
        b.associate(1, shuffled);
        for (size_t t = 0; t < 5; ++t) {
            const auto& ea = a.tracks()[t].entries;
            const auto& eb = b.tracks()[t].entries;
            ASSERT_EQ(ea.size(), eb.size());
            EXPECT_EQ(ea.back().bbox, eb.back().bbox);
        }
    }
}

TEST(Tracker, CrossingBirdsKeepIdentities) {
    // Two boxes pass each other vertically offset; per frame each overlaps its own past more than the other's.
    std::vector<std::vector<BBox>> frames;
    for (int t = 0; t < 50; ++t) {
        const double xa = 10 + 2.0 * t, xb = 110 - 2.0 * t;
        std::vector<BBox> d{{xb, 30, xb + 30, 60}, {xa, 0, xa + 30, 40}};
        if (t % 2) std::swap(d[0], d[1]);
        frames.push_back(d);
    }
    const auto tracks = track_frames(frames);
    ASSERT_EQ(tracks.size(), 2u);
    for (const auto& tr : tracks) {
        EXPECT_EQ(tr.entries.size(), 50u);
        const bool top = tr.entries.front().bbox.y0 == 0.0;
        for (const auto& e : tr.entries) EXPECT_EQ(e.bbox.y0 == 0.0, top);
    }
}

TEST(Tracker, NeverTwoEntriesPerFrame) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    Tracker tr;
    for (int f = 0; f < 100; ++f) {
        std::vector<BBox> d;
        const int n = static_cast<int>(u(rng)) % 4;
        for (int i = 0; i < n; ++i) {
            const double x = u(rng), y = u(rng);
            d.push_back({x, y, x + 25, y + 25});
        }
        tr.associate(f, d);
    }
    for (const auto& t : tr.tracks()) {
        for (size_t i = 1; i < t.entries.size(); ++i) EXPECT_LT(t.entries[i - 1].frame_index, t.entries[i].frame_index);
    }
}

TEST(Tracker, RejectsNonIncreasingFrames) {
    Tracker tr;
    tr.associate(3, {});
    EXPECT_THROW(tr.associate(3, {}), Error);
}

}  // namespace
}  // namespace birdpose

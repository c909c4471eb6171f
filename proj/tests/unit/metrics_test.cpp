#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "birdpose/metrics.hpp"

namespace birdpose {
namespace {

struct Instance {
    std::vector<Points2> projected, truth;
    std::vector<BBox> boxes;
    std::vector<Visibility> visible;
};

Instance random_instance(std::mt19937_64& rng, int frames, int k) {
    std::uniform_real_distribution<double> u(0.0, 200.0);
    std::bernoulli_distribution vis(0.8);
    Instance in;
    for (int t = 0; t < frames; ++t) {
        Points2 p(k, 2), g(k, 2);
        Visibility v(k);
        for (int i = 0; i < k; ++i) {
            p.row(i) << u(rng), u(rng);
            g.row(i) << u(rng), u(rng);
            v[i] = vis(rng);
        }
        in.projected.push_back(p);
        in.truth.push_back(g);
        in.visible.push_back(v);
        const double x = u(rng), y = u(rng);
        in.boxes.push_back({x, y, x + 20 + u(rng), y + 20 + u(rng)});
    }
    return in;
}

TEST(MeP, ExactMatchIsZero) {
    std::mt19937_64 rng(1);
    auto in = random_instance(rng, 4, 5);
    EXPECT_EQ(me_p(in.truth, in.truth, in.boxes), 0.0);
    EXPECT_EQ(me_v(in.truth, in.truth, in.boxes), 0.0);
}

TEST(MeP, SingleKeypointOffByTen) {
    Points2 p(1, 2), g(1, 2);
    p << 10, 0;
    g << 0, 0;
    const std::vector<Points2> pp{p}, gg{g};
    const std::vector<BBox> b{{0, 0, 100, 40}};
    EXPECT_NEAR(me_p(pp, gg, b), 0.1, 1e-15);
}

TEST(MeP, MatchesLoopOracle) {
    std::mt19937_64 rng(2);
    const auto in = random_instance(rng, 6, 7);
    double acc = 0.0;
    long n = 0;
    for (int t = 0; t < 6; ++t) {
        const double l = std::max(in.boxes[t].x1 - in.boxes[t].x0, in.boxes[t].y1 - in.boxes[t].y0);
        for (int i = 0; i < 7; ++i) {
            if (!in.visible[t][i]) continue;
            const double dx = in.projected[t](i, 0) - in.truth[t](i, 0);
            const double dy = in.projected[t](i, 1) - in.truth[t](i, 1);
            acc += (dx * dx + dy * dy) / (l * l);
            ++n;
        }
    }
    EXPECT_NEAR(me_p(in.projected, in.truth, in.boxes, in.visible), std::sqrt(acc / n), 1e-14);
}

TEST(MeV, MatchesLoopOracle) {
    std::mt19937_64 rng(3);
    const auto in = random_instance(rng, 6, 7);
    double acc = 0.0;
    long n = 0;
    for (int t = 0; t + 1 < 6; ++t) {
        const double l = std::max(in.boxes[t].x1 - in.boxes[t].x0, in.boxes[t].y1 - in.boxes[t].y0);
        for (int i = 0; i < 7; ++i) {
            if (!in.visible[t][i] || !in.visible[t + 1][i]) continue;
            double d2 = 0.0;
            for (int a = 0; a < 2; ++a) {
                const double vp = in.projected[t + 1](i, a) - in.projected[t](i, a);
                const double vg = in.truth[t + 1](i, a) - in.truth[t](i, a);
                d2 += (vp - vg) * (vp - vg);
            }
            acc += d2 / (l * l);
            ++n;
        }
    }
    EXPECT_NEAR(me_v(in.projected, in.truth, in.boxes, in.visible), std::sqrt(acc / n), 1e-14);
}

TEST(MeV, ConstantOffsetIsZero) {
    std::mt19937_64 rng(4);
    auto in = random_instance(rng, 5, 6);
    Points2 offset(6, 2);
    for (int i = 0; i < 6; ++i) offset.row(i) << i * 3.0 - 7.0, 2.5 * i;
    std::vector<Points2> shifted;
    for (const auto& g : in.truth) shifted.push_back(g + offset);
    EXPECT_NEAR(me_v(shifted, in.truth, in.boxes), 0.0, 1e-15);
    EXPECT_GT(me_p(shifted, in.truth, in.boxes), 0.0);
}

TEST(Metrics, ScaleInvariance) {
    std::mt19937_64 rng(5);
    const auto in = random_instance(rng, 5, 8);
    for (double s : {0.01, 0.5, 3.0, 1000.0}) {
        std::vector<Points2> p, g;
        std::vector<BBox> b;
        for (int t = 0; t < 5; ++t) {
            p.push_back(in.projected[t] * s);
            g.push_back(in.truth[t] * s);
            const BBox& o = in.boxes[t];
            b.push_back({o.x0 * s, o.y0 * s, o.x1 * s, o.y1 * s});
        }
        const double mp = me_p(in.projected, in.truth, in.boxes, in.visible);
        const double mv = me_v(in.projected, in.truth, in.boxes, in.visible);
        EXPECT_NEAR(me_p(p, g, b, in.visible), mp, 1e-9 * mp);
        EXPECT_NEAR(me_v(p, g, b, in.visible), mv, 1e-9 * mv);
    }
}

TEST(Metrics, VelocityUsesEarlierBox) {
    Points2 z(1, 2);
    z << 0, 0;
    Points2 moved(1, 2);
    moved << 6, 8;
    const std::vector<Points2> p{z, moved}, g{z, z};
    const std::vector<BBox> b{{0, 0, 50, 10}, {0, 0, 1000, 10}};
    EXPECT_NEAR(me_v(p, g, b), 10.0 / 50.0, 1e-15);
}

TEST(Metrics, Errors) {
    Points2 p(1, 2);
    p << 0, 0;
    const std::vector<Points2> one{p};
    const std::vector<BBox> b{{0, 0, 1, 1}};
    EXPECT_THROW(me_v(one, one, b), Error);
    const std::vector<Visibility> hidden{Visibility{false}};
    EXPECT_THROW(me_p(one, one, b, hidden), Error);
    const std::vector<Points2> two{p, p};
    EXPECT_THROW(me_p(two, one, b), Error);
}

TEST(Metrics, PooledAggregation) {
    std::mt19937_64 rng(6);
    const auto a = random_instance(rng, 4, 3);
    const auto b = random_instance(rng, 7, 3);
    const std::vector<TrackSeries> tracks{{0, a.projected, a.truth, a.boxes, a.visible},
                                          {1, b.projected, b.truth, b.boxes, b.visible}};
    const auto rep = evaluate(tracks);
    ASSERT_EQ(rep.tracks.size(), 2u);
    const auto& ta = rep.tracks[0];
    const auto& tb = rep.tracks[1];
    const double pooled = std::sqrt((ta.me_p * ta.me_p * ta.position_count + tb.me_p * tb.me_p * tb.position_count) /
                                    (ta.position_count + tb.position_count));
    EXPECT_NEAR(rep.me_p, pooled, 1e-14);
    EXPECT_NEAR(ta.me_p, me_p(a.projected, a.truth, a.boxes, a.visible), 1e-15);
}

}  // namespace
}  // namespace birdpose

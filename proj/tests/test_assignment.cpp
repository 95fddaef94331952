#include "mvtrack/assignment/hungarian.hpp"
#include "mvtrack/assignment/murty.hpp"
#include "mvtrack/assignment/set_loss.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mvtrack;
using namespace mvtrack::assignment;

namespace {

CostMatrix random_costs(std::mt19937_64& rng, int n, int m, double p_inf = 0.0, bool integer = false) {
    std::uniform_real_distribution<double> u(0, 10), coin(0, 1);
    std::uniform_int_distribution<int> ui(0, 4);
    CostMatrix c(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) c(i, j) = coin(rng) < p_inf ? kInfeasible : (integer ? ui(rng) : u(rng));
    return c;
}

} // namespace

TEST(Hungarian, SmallHandCase) {
    CostMatrix c(2, 2);
    c << 1, 2, 2, 1;
    const auto a = hungarian(c);
    EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
    EXPECT_DOUBLE_EQ(a.total_cost, 2.0);
}

TEST(Hungarian, SingleCell) {
    const auto a = hungarian(CostMatrix::Zero(1, 1));
    EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}}));
    EXPECT_EQ(a.total_cost, 0.0);
}

TEST(Hungarian, RectangularAndEmpty) {
    CostMatrix tall(3, 1);
    tall << 5, 1, 3;
    const auto a = hungarian(tall);
    EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{1, 0}}));
    EXPECT_TRUE(hungarian(CostMatrix(0, 3)).pairs.empty());
    EXPECT_TRUE(hungarian(CostMatrix(2, 0)).pairs.empty());
}

TEST(Hungarian, MatchesBruteForce) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 300; ++t) {
        std::uniform_int_distribution<int> size(1, 5);
        const auto c = random_costs(rng, size(rng), size(rng), t % 3 == 0 ? 0.3 : 0.0);
        const auto all = oracle::enumerate_matchings(c);
        if (all.empty()) {
            EXPECT_THROW((void)hungarian(c), InfeasibleAssignment);
            continue;
        }
        const auto a = hungarian(c);
        EXPECT_NEAR(a.total_cost, all.front().cost, 1e-9);
        EXPECT_EQ(a.pairs.size(), static_cast<std::size_t>(std::min(c.rows(), c.cols())));
    }
}

TEST(Hungarian, RowConstantInvariance) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        auto c = random_costs(rng, 4, 4);
        const auto base = hungarian(c);
        c.row(2).array() += 7.5;
        c.col(1).array() -= 3.0;
        const auto shifted = hungarian(c);
        EXPECT_NEAR(shifted.total_cost, base.total_cost + 4.5, 1e-9);
    }
}

TEST(Hungarian, InfeasibleAndInvalid) {
    CostMatrix c(2, 2);
    c << 1, kInfeasible, 2, kInfeasible;
    EXPECT_THROW((void)hungarian(c), InfeasibleAssignment);
    c(0, 0) = std::nan("");
    EXPECT_THROW((void)hungarian(c), InvalidInput);
    c(0, 0) = -kInfeasible;
    EXPECT_THROW((void)hungarian(c), InvalidInput);
}

TEST(Hungarian, GatedLeavesExpensivePairsOut) {
    CostMatrix c(2, 2);
    c << 1, 100, 100, 50;
    const auto a = hungarian_gated(c, 10);
    EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}}));
    EXPECT_DOUBLE_EQ(a.total_cost, 1.0);
    EXPECT_TRUE(hungarian_gated(c, 0.5).pairs.empty());
    // a cheaper total through a gated cell is not preferred over a larger matching
    CostMatrix d(2, 2);
    d << 1, 2, 2, 9;
    EXPECT_EQ(hungarian_gated(d, 5).pairs.size(), 2u);
}

TEST(Murty, SmallHandCase) {
    CostMatrix c(2, 2);
    c << 1, 2, 2, 1;
    const auto k = murty_kbest(c, 5);
    ASSERT_EQ(k.size(), 2u);
    EXPECT_DOUBLE_EQ(k[0].total_cost, 2.0);
    EXPECT_DOUBLE_EQ(k[1].total_cost, 4.0);
    EXPECT_EQ(k[1].pairs, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
    EXPECT_TRUE(murty_kbest(c, 0).empty());
}

TEST(Murty, MatchesBruteForceRanking) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<int> size(1, 4);
        const bool integer = t % 2 == 0;
        const auto c = random_costs(rng, size(rng), size(rng), t % 4 == 0 ? 0.25 : 0.0, integer);
        const auto all = oracle::enumerate_matchings(c);
        if (all.empty()) {
            EXPECT_THROW((void)murty_kbest(c, 3), InfeasibleAssignment);
            continue;
        }
        const std::size_t k = 1 + t % 30;
        const auto got = murty_kbest(c, k);
        ASSERT_EQ(got.size(), std::min(k, all.size()));
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got[i].total_cost, all[i].cost, 1e-9);
            // tie groups cut by k may hold any of their members; full groups match exactly
            const bool whole_group = got.size() == all.size() || all[i].cost < got.back().total_cost;
            if (integer && whole_group) EXPECT_EQ(got[i].row_to_col(static_cast<int>(c.rows())), all[i].col_of);
        }
    }
}

TEST(Murty, DistinctSolutions) {
    std::mt19937_64 rng(4);
    const auto c = random_costs(rng, 4, 5);
    const auto got = murty_kbest(c, 50);
    for (std::size_t a = 0; a < got.size(); ++a)
        for (std::size_t b = a + 1; b < got.size(); ++b) EXPECT_NE(got[a].pairs, got[b].pairs);
}

TEST(SetLoss, FocalExamples) {
    EXPECT_NEAR(focal_loss(0.9, true), 0.25 * 0.01 * -std::log(0.9), 1e-15);
    EXPECT_NEAR(focal_loss(0.9, true), 2.634e-4, 1e-7);
    EXPECT_NEAR(focal_loss(0.5, true, 0.5, 0.0), 0.5 * std::log(2.0), 1e-15);
    EXPECT_NEAR(focal_loss(0.1, false), 0.75 * 0.01 * -std::log(0.9), 1e-15);
    EXPECT_TRUE(std::isfinite(focal_loss(0.0, true)));
    EXPECT_TRUE(std::isfinite(focal_loss(1.0, false)));
}

TEST(SetLoss, DefaultWeights) {
    const LossWeights w;
    EXPECT_EQ(w.w_cls, 2.0);
    EXPECT_EQ(w.w_reg, 0.25);
    LossWeights bad;
    bad.w_reg = -1;
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(SetLoss, L1Examples) {
    const BoxState a{0, 0, -1, 1, 1, 1, 1, 0, 0, 0};
    EXPECT_DOUBLE_EQ(l1_box_cost(a, a), 0.0);
    auto b = a;
    b.w = 2;
    b.vx = -1;
    EXPECT_DOUBLE_EQ(l1_box_cost(a, b), 2.0);
    auto c = a;
    c.cx = 122.4 / 4;
    EXPECT_DOUBLE_EQ(l1_box_cost(a, c), 0.25);
}

TEST(SetLoss, L1TriangleInequality) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pos(-60, 60), dim(0.5, 5), yaw(-3, 3);
    auto box = [&] { return BoxState::from_yaw(pos(rng), pos(rng), 0, dim(rng), dim(rng), dim(rng), yaw(rng)); };
    for (int t = 0; t < 200; ++t) {
        const auto a = box(), b = box(), c = box();
        EXPECT_LE(l1_box_cost(a, c), l1_box_cost(a, b) + l1_box_cost(b, c) + 1e-12);
    }
}

TEST(SetLoss, ExactPredictionCostsAlmostNothing) {
    const BoxState b = BoxState::from_yaw(3, 4, 0, 2, 4, 1.5, 0.2);
    const std::vector<Prediction> preds{{b, {1.0 - 1e-7}}};
    const std::vector<GroundTruth> gts{{b, 0}};
    EXPECT_LT(build_cost_matrix(preds, gts)(0, 0), 1e-12);
    EXPECT_LT(set_prediction_loss(preds, gts).total, 1e-12);
}

TEST(SetLoss, WeightScalingIsLinear) {
    const std::vector<Prediction> preds{{BoxState::from_yaw(1, 2, 0, 2, 4, 1.5, 0), {0.7, 0.1}},
                                        {BoxState::from_yaw(9, -3, 0, 2, 4, 1.5, 1), {0.2, 0.6}}};
    const std::vector<GroundTruth> gts{{BoxState::from_yaw(1.5, 2, 0, 2, 4, 1.5, 0), 0},
                                       {BoxState::from_yaw(8, -3, 0, 2, 4, 1.5, 1), 1}};
    LossWeights w;
    const auto base = build_cost_matrix(preds, gts, w);
    w.w_cls *= 3.0;
    w.w_reg *= 3.0;
    EXPECT_TRUE(build_cost_matrix(preds, gts, w).isApprox(3.0 * base, 1e-12));
}

TEST(SetLoss, CostMatrixCells) {
    const std::vector<Prediction> preds{{BoxState{0, 0, -1, 1, 1, 1, 1, 0, 0, 0}, {0.9, 0.2}},
                                        {BoxState{10, 0, -1, 1, 1, 1, 1, 0, 0, 0}, {0.3, 0.6}}};
    const std::vector<GroundTruth> gts{{BoxState{10, 0, -1, 1, 1, 1, 1, 0, 0, 0}, 1}};
    const auto c = build_cost_matrix(preds, gts);
    ASSERT_EQ(c.rows(), 2);
    ASSERT_EQ(c.cols(), 1);
    EXPECT_NEAR(c(0, 0), 2.0 * focal_loss(0.2, true) + 0.25 * (10.0 / 122.4), 1e-12);
    EXPECT_NEAR(c(1, 0), 2.0 * focal_loss(0.6, true), 1e-12);
    const auto loss = set_prediction_loss(preds, gts);
    EXPECT_EQ(loss.matching.pairs, (std::vector<std::pair<int, int>>{{1, 0}}));
    const double cls = focal_loss(0.9, false) + focal_loss(0.2, false) + focal_loss(0.3, false) +
                       focal_loss(0.6, true);
    EXPECT_NEAR(loss.classification, cls, 1e-12);
    EXPECT_NEAR(loss.regression, 0.0, 1e-12);
    EXPECT_NEAR(loss.total, 2.0 * cls, 1e-12);
    const std::vector<GroundTruth> bad{{gts[0].box, 5}};
    EXPECT_THROW((void)build_cost_matrix(preds, bad), InvalidInput);
}

TEST(SetLoss, PermutationInvariant) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-50, 50), p(0.01, 0.99);
    for (int t = 0; t < 20; ++t) {
        std::vector<Prediction> preds;
        std::vector<GroundTruth> gts;
        for (int i = 0; i < 5; ++i)
            preds.push_back({BoxState::from_yaw(pos(rng), pos(rng), 0, 2, 4, 1.5, 0), {p(rng), p(rng), p(rng)}});
        for (int j = 0; j < 3; ++j) gts.push_back({BoxState::from_yaw(pos(rng), pos(rng), 0, 2, 4, 1.5, 0), j});
        const double base = set_prediction_loss(preds, gts).total;
        std::shuffle(preds.begin(), preds.end(), rng);
        std::shuffle(gts.begin(), gts.end(), rng);
        EXPECT_NEAR(set_prediction_loss(preds, gts).total, base, 1e-9);
    }
}

#include "test_support.hpp"

#include <crowdslam/error.hpp>
#include <crowdslam/g2o_io.hpp>
#include <crowdslam/optimizer.hpp>
#include <crowdslam/pose2.hpp>
#include <crowdslam/pose_graph.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace crowdslam;
using crowdslam::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_pose_near(const Pose2& a, const Pose2& b, double tol = 1e-12) {
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(normalize_angle(a.theta - b.theta), 0.0, tol);
}

}  // namespace

TEST(Pose2, NormalizeAngleRange) {
    EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
    EXPECT_NEAR(normalize_angle(3 * kPi), kPi, 1e-12);
    EXPECT_NEAR(normalize_angle(-0.5 * kPi + 4 * kPi), -0.5 * kPi, 1e-12);
    Rng rng(3);
    for (int k = 0; k < 1000; ++k) {
        const double t = normalize_angle(crowdslam::testing::uniform(rng, -50.0, 50.0));
        EXPECT_GT(t, -kPi);
        EXPECT_LE(t, kPi);
    }
}

TEST(Pose2, ComposeExamples) {
    expect_pose_near(compose({0, 0, 0}, {1, 2, 0.3}), {1, 2, 0.3});
    expect_pose_near(compose({1, 0, kPi / 2}, {1, 0, 0}), {1, 1, kPi / 2});
}

TEST(Pose2, InvertExamples) {
    EXPECT_EQ(invert({0, 0, 0}), (Pose2{0, 0, 0}));
    expect_pose_near(invert({1, 0, kPi / 2}), {0, 1, -kPi / 2});
}

TEST(Pose2, RelativeExamples) {
    const Pose2 a{3, -2, 1.1};
    expect_pose_near(relative(a, a), {0, 0, 0});
    expect_pose_near(relative({0, 0, kPi / 2}, {0, 1, kPi / 2}), {1, 0, 0});
}

TEST(Pose2, GroupLaws) {
    Rng rng(11);
    for (int k = 0; k < 500; ++k) {
        const Pose2 a = crowdslam::testing::random_pose(rng);
        const Pose2 b = crowdslam::testing::random_pose(rng);
        const Pose2 c = crowdslam::testing::random_pose(rng);
        expect_pose_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-11);
        expect_pose_near(compose(a, invert(a)), {0, 0, 0});
        expect_pose_near(compose(invert(a), a), {0, 0, 0});
        expect_pose_near(compose(a, {0, 0, 0}), a);
        expect_pose_near(compose(a, relative(a, b)), b, 1e-11);
        for (const Pose2& p : {compose(a, b), invert(a), relative(a, b)}) {
            EXPECT_GT(p.theta, -kPi);
            EXPECT_LE(p.theta, kPi);
        }
    }
}

TEST(EdgeError, SatisfiedConstraintIsZero) {
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        const Pose2 a = crowdslam::testing::random_pose(rng);
        const Pose2 b = crowdslam::testing::random_pose(rng);
        Edge e{0, 1, EdgeKind::Loop, relative(a, b), Eigen::Vector3d::Ones()};
        EXPECT_LT(edge_error(e, a, b).norm(), 1e-12);
    }
}

TEST(EdgeError, AnchorBetweenCoLocatedNodes) {
    const Pose2 a{4, 5, 0.2};
    const Pose2 b{4, 5, 1.4};
    Edge e{0, 1, EdgeKind::Anchor, {0, 0, normalize_angle(b.theta - a.theta)}, {1, 1, 1000}};
    EXPECT_LT(edge_error(e, a, b).norm(), 1e-12);
}

TEST(EdgeError, MatchesSymbolicEvaluation) {
    Rng rng(8);
    for (int k = 0; k < 200; ++k) {
        const Pose2 a = crowdslam::testing::random_pose(rng);
        const Pose2 b = crowdslam::testing::random_pose(rng);
        const Edge e = crowdslam::testing::random_edge(rng);
        // Rz^T (Ra^T (tb - ta) - tz), wrap(thb - tha - thz)
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double rx = std::cos(a.theta) * dx + std::sin(a.theta) * dy;
        const double ry = -std::sin(a.theta) * dx + std::cos(a.theta) * dy;
        const double ex = rx - e.measurement.x, ey = ry - e.measurement.y;
        const double ct = std::cos(e.measurement.theta), st = std::sin(e.measurement.theta);
        const Eigen::Vector3d expected(ct * ex + st * ey, -st * ex + ct * ey,
                                       normalize_angle(b.theta - a.theta - e.measurement.theta));
        const Eigen::Vector3d got = edge_error(e, a, b);
        EXPECT_NEAR(got(0), expected(0), 1e-9);
        EXPECT_NEAR(got(1), expected(1), 1e-9);
        EXPECT_NEAR(normalize_angle(got(2) - expected(2)), 0.0, 1e-9);
    }
}

TEST(Linearize, JacobiansMatchFiniteDifferences) {
    Rng rng(21);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Pose2 a = crowdslam::testing::random_pose(rng);
        const Pose2 b = crowdslam::testing::random_pose(rng);
        const Edge e = crowdslam::testing::random_edge(rng);
        const Linearization lin = linearize(e, a, b);
        EXPECT_EQ(lin.error, edge_error(e, a, b));
        worst = std::max(worst, crowdslam::testing::jacobian_relative_error(
                                    lin.jacobian_from, crowdslam::testing::numeric_jacobian(e, a, b, true)));
        worst = std::max(worst, crowdslam::testing::jacobian_relative_error(
                                    lin.jacobian_to, crowdslam::testing::numeric_jacobian(e, a, b, false)));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(Chi2, Examples) {
    PoseGraph g;
    g.nodes = {{0, 0, 0}, {1, 0, 0}};
    g.fixed = {0};
    g.edges.push_back({0, 1, EdgeKind::Odometry, {1, 0, 0}, {4, 4, 1000}});
    EXPECT_EQ(chi2(g), 0.0);
    g.edges[0].measurement = {0, 0, 0};
    EXPECT_NEAR(chi2(g), 0.25, 1e-15);
}

TEST(PoseGraph, ValidateRejectsBadGraphs) {
    PoseGraph g;
    g.nodes = {{0, 0, 0}, {1, 0, 0}};
    g.fixed = {0};
    g.edges.push_back({0, 1, EdgeKind::Odometry, {1, 0, 0}, {1, 1, 1}});
    EXPECT_NO_THROW(g.validate());
    EXPECT_TRUE(g.anchored());

    PoseGraph dangling = g;
    dangling.edges[0].to = 5;
    EXPECT_THROW(dangling.validate(), ValidationError);
    PoseGraph self = g;
    self.edges[0].to = 0;
    EXPECT_THROW(self.validate(), ValidationError);
    PoseGraph cov = g;
    cov.edges[0].covariance(1) = 0.0;
    EXPECT_THROW(cov.validate(), ValidationError);
    PoseGraph fixed = g;
    fixed.fixed = {7};
    EXPECT_THROW(fixed.validate(), ValidationError);

    PoseGraph island = g;
    island.nodes.push_back({5, 5, 0});
    EXPECT_FALSE(island.anchored());
}

TEST(Optimizer, RequiresGauge) {
    PoseGraph g;
    g.nodes = {{0, 0, 0}, {1, 0, 0}};
    g.edges.push_back({0, 1, EdgeKind::Odometry, {1, 0, 0}, {1, 1, 1}});
    EXPECT_THROW(optimize(g), ValidationError);
    g.fixed = {0};
    g.nodes.push_back({3, 3, 0});
    EXPECT_THROW(optimize(g), ValidationError);
}

TEST(Optimizer, OdometryChainIsAlreadyOptimal) {
    Rng rng(4);
    PoseGraph g;
    g.nodes.push_back({0, 0, 0});
    g.fixed = {0};
    for (std::size_t k = 1; k < 30; ++k) {
        const Pose2 z{crowdslam::testing::uniform(rng, 0.5, 2), crowdslam::testing::uniform(rng, -0.2, 0.2),
                      crowdslam::testing::uniform(rng, -0.5, 0.5)};
        g.edges.push_back({k - 1, k, EdgeKind::Odometry, z, {0.01, 0.01, 0.001}});
        g.nodes.push_back(compose(g.nodes.back(), z));
    }
    const auto before = g.nodes;
    const OptimizeReport r = optimize(g);
    EXPECT_TRUE(r.converged);
    for (std::size_t k = 0; k < before.size(); ++k) {
        expect_pose_near(g.nodes[k], before[k], 1e-9);
    }
}

TEST(Optimizer, RecoversExactGraphFromPerturbedStart) {
    Rng rng(9);
    std::vector<Pose2> truth{{0, 0, 0}};
    for (std::size_t k = 1; k < 40; ++k) truth.push_back(compose(truth.back(), {1.0, 0.0, 0.3}));
    PoseGraph g;
    g.fixed = {0};
    for (std::size_t k = 1; k < truth.size(); ++k) {
        g.edges.push_back({k - 1, k, EdgeKind::Odometry, relative(truth[k - 1], truth[k]), {0.01, 0.01, 0.001}});
    }
    for (std::size_t k = 0; k + 21 < truth.size(); k += 3) {
        g.edges.push_back({k, k + 21, EdgeKind::Loop, relative(truth[k], truth[k + 21]), {0.1, 0.1, 0.01}});
    }
    for (const Pose2& p : truth) {
        g.nodes.push_back({p.x + crowdslam::testing::uniform(rng, -0.3, 0.3),
                           p.y + crowdslam::testing::uniform(rng, -0.3, 0.3),
                           normalize_angle(p.theta + crowdslam::testing::uniform(rng, -0.05, 0.05))});
    }
    g.nodes[0] = truth[0];
    const OptimizeReport r = optimize(g, {.max_iterations = 50});
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 50u);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        EXPECT_LT(planar_distance(g.nodes[k], truth[k]), 1e-6);
        EXPECT_LT(std::abs(normalize_angle(g.nodes[k].theta - truth[k].theta)), 1e-8);
    }
}

TEST(Optimizer, MonotoneChi2AndGaugeRespect) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        PoseGraph g = crowdslam::testing::random_noisy_graph(rng);
        const Pose2 anchor = g.nodes[0];
        const double initial = chi2(g);
        const OptimizeReport r = optimize(g);
        EXPECT_DOUBLE_EQ(r.initial_chi2(), initial);
        for (std::size_t k = 1; k < r.chi2_history.size(); ++k) {
            EXPECT_LE(r.chi2_history[k], r.chi2_history[k - 1]);
        }
        EXPECT_LE(r.final_chi2(), r.initial_chi2());
        EXPECT_NEAR(chi2(g), r.final_chi2(), 1e-9 * std::max(1.0, r.final_chi2()));
        EXPECT_EQ(g.nodes[0], anchor);
        for (const Pose2& p : g.nodes) {
            EXPECT_GT(p.theta, -kPi);
            EXPECT_LE(p.theta, kPi);
        }
    }
}

TEST(Optimizer, RejectedStepsLeaveEstimatesAlone) {
    Rng rng(13);
    PoseGraph g = crowdslam::testing::random_noisy_graph(rng);
    // one iteration with a huge initial lambda still only accepts improving steps
    const auto before = g.nodes;
    const double c0 = chi2(g);
    const OptimizeReport r = optimize(g, {.max_iterations = 1, .lambda_init = 1e12});
    ASSERT_EQ(r.trace.size(), 1u);
    if (!r.trace[0].accepted) {
        EXPECT_EQ(g.nodes, before);
    } else {
        EXPECT_LE(chi2(g), c0);
    }
}

TEST(Optimizer, Deterministic) {
    Rng r1(17), r2(17);
    PoseGraph a = crowdslam::testing::random_noisy_graph(r1);
    PoseGraph b = crowdslam::testing::random_noisy_graph(r2);
    const auto ra = optimize(a);
    const auto rb = optimize(b);
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(ra.chi2_history, rb.chi2_history);
}

TEST(G2o, RoundTrip) {
    Rng rng(2);
    const PoseGraph g = crowdslam::testing::random_noisy_graph(rng, 25);
    const PoseGraph back = read_g2o(write_g2o(g));
    ASSERT_EQ(back.nodes.size(), g.nodes.size());
    ASSERT_EQ(back.edges.size(), g.edges.size());
    EXPECT_EQ(back.fixed, g.fixed);
    EXPECT_EQ(back.nodes, g.nodes);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        EXPECT_EQ(back.edges[k].from, g.edges[k].from);
        EXPECT_EQ(back.edges[k].to, g.edges[k].to);
        EXPECT_EQ(back.edges[k].measurement, g.edges[k].measurement);
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(back.edges[k].covariance(c), g.edges[k].covariance(c), 1e-12 * g.edges[k].covariance(c));
        }
    }
    EXPECT_EQ(back.edges.front().kind, EdgeKind::Odometry);
    EXPECT_EQ(back.edges.back().kind, EdgeKind::Loop);
}

TEST(G2o, RejectsMalformedInput) {
    EXPECT_THROW(read_g2o("VERTEX_SE2 0 1 2\n"), ValidationError);
    EXPECT_THROW(read_g2o("VERTEX_SE2 0 0 0 0\nVERTEX_SE2 2 0 0 0\n"), ValidationError);
    EXPECT_THROW(read_g2o("VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 0 0 0\nEDGE_SE2 0 1 1 0 0 1 0.5 0 1 0 1\n"),
                 ValidationError);
    EXPECT_THROW(read_g2o("BOGUS 1 2 3\n"), ValidationError);
    EXPECT_NO_THROW(read_g2o("# comment\n\nVERTEX_SE2 0 0 0 0\nFIX 0\n"));
}

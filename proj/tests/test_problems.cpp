#include <gtest/gtest.h>

#include "gsplit/problems.hpp"

using namespace gsplit;

TEST(TraceRay, SinglePixelHorizontalChord) {
    PixelGrid grid{1, 1, 3.0, 2.0};
    Ray ray = trace_ray(grid, Point{0.0, 1.0}, Point{3.0, 1.0});
    ASSERT_EQ(ray.hits.size(), 1u);
    EXPECT_EQ(ray.hits[0].first, 0u);
    EXPECT_NEAR(ray.hits[0].second, 3.0, 1e-12);
}

// Horizontal center ray on a 2x2 grid lies on the interior gridline; the
// midpoint rule assigns each half-chord to a single pixel of length width/2.
// Cross-checked against a fine-step ray marcher.
TEST(TraceRay, CenterRayOn2x2Grid) {
    PixelGrid grid{2, 2, 4.0, 2.0};
    Ray ray = trace_ray(grid, Point{0.0, 1.0}, Point{4.0, 1.0});
    ASSERT_EQ(ray.hits.size(), 2u);
    for (const auto& [pix, len] : ray.hits) EXPECT_NEAR(len, 2.0, 1e-12);
    EXPECT_NEAR(ray.hit_sum(), ray.chord_length(), 1e-12);

    // marching oracle: total length per column of pixels
    const double step = 1e-4;
    double col_len[2] = {0.0, 0.0};
    for (double x = 0.5 * step; x < 4.0; x += step) col_len[x < 2.0 ? 0 : 1] += step;
    double got[2] = {0.0, 0.0};
    for (const auto& [pix, len] : ray.hits) got[pix % 2] += len;
    EXPECT_NEAR(got[0], col_len[0], 1e-3);
    EXPECT_NEAR(got[1], col_len[1], 1e-3);
}

TEST(TraceRay, ObliqueRowSumInvariant) {
    PixelGrid grid{7, 5, 3.5, 2.0};
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        Point a{0.0, rng.uniform() * grid.height};
        Point b{grid.width, rng.uniform() * grid.height};
        Ray ray = trace_ray(grid, a, b);
        EXPECT_NEAR(ray.hit_sum(), ray.chord_length(), 1e-9 * ray.chord_length());
        for (const auto& [pix, len] : ray.hits) {
            EXPECT_GE(len, 0.0);
            EXPECT_LT(pix, grid.n());
        }
    }
}

TEST(CrossBorehole, OperatorShapeAndNonNegativity) {
    PixelGrid grid{4, 6, 4.0, 6.0};
    auto [op, rays] = build_crossborehole(grid, 3, 5);
    EXPECT_EQ(op->rows(), 15u);
    EXPECT_EQ(op->cols(), 24u);
    EXPECT_EQ(rays.rays.size(), 15u);
    DenseMatrix d = to_dense(*op);
    for (double v : d.data) EXPECT_GE(v, 0.0);
    for (const Ray& r : rays.rays) EXPECT_NEAR(r.hit_sum(), r.chord_length(), 1e-9);
}

TEST(CrossBorehole, PaperScalePresetDimensions) {
    PixelGrid grid{100, 200, 100.0, 200.0};
    auto [op, rays] = build_crossborehole(grid, 20, 20);
    EXPECT_EQ(op->rows(), 400u);
    EXPECT_EQ(op->cols(), 20000u);
    EXPECT_NEAR(double(op->rows()) / double(op->cols()), 0.02, 1e-12);
}

TEST(WhittleMatern, LimitReducesToPureSecondDifference) {
    PixelGrid grid{3, 3, 3.0, 3.0};
    WhittleMaternPrior p = whittle_matern(grid, 1e12, 1e12, 1.0);
    DenseMatrix want_block = second_difference(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(p.l_hor(i, j), want_block(i, j), 1e-12);
            EXPECT_NEAR(p.l_vert(i, j), want_block(i, j), 1e-12);
        }
    // Kronecker entries against the explicit product
    DenseMatrix full = to_dense(*p.op());
    for (std::size_t bi = 0; bi < 3; ++bi)
        for (std::size_t bj = 0; bj < 3; ++bj)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    EXPECT_NEAR(full(bi * 3 + i, bj * 3 + j),
                                want_block(bi, bj) * want_block(i, j), 1e-12);
}

TEST(WhittleMatern, BlocksAreSpd) {
    PixelGrid grid{20, 10, 20.0, 10.0};
    WhittleMaternPrior p = whittle_matern(grid, 20.0, 10.0, 70.0);
    EXPECT_NO_THROW(cholesky_factor(p.l_hor));
    EXPECT_NO_THROW(cholesky_factor(p.l_vert));
}

// Prior draws x = gamma * L^{-1} w must be longer-correlated horizontally
// when lambda_y > lambda_z.
TEST(WhittleMatern, AnisotropicCorrelationOrdering) {
    PixelGrid grid{30, 30, 30.0, 30.0};
    WhittleMaternPrior p = whittle_matern(grid, 20.0, 5.0, 70.0);
    auto linv = std::make_shared<detail::KroneckerInverseOperator>(p.l_vert, p.l_hor);

    Rng rng(107);
    const std::size_t draws = 200, lag = 5;
    double mean_acc = 0.0, hor = 0.0, ver = 0.0, var = 0.0;
    std::size_t var_cnt = 0, hv_cnt = 0;
    for (std::size_t d = 0; d < draws; ++d) {
        Vector w = rng.normal_vector(grid.n());
        Vector x = linv->apply(w);
        scale(x, p.gamma);
        for (double v : x) mean_acc += v;
        for (std::size_t iz = 0; iz < 30; ++iz)
            for (std::size_t iy = 0; iy < 30; ++iy) {
                double v = x[iz * 30 + iy];
                var += v * v;
                ++var_cnt;
                if (iy + lag < 30 && iz + lag < 30) {
                    hor += v * x[iz * 30 + iy + lag];
                    ver += v * x[(iz + lag) * 30 + iy];
                    ++hv_cnt;
                }
            }
    }
    double mean = mean_acc / double(var_cnt);
    EXPECT_LE(std::abs(mean), 0.1 * std::sqrt(var / var_cnt));
    EXPECT_GT(hor / hv_cnt, ver / hv_cnt);
}

TEST(GraphFirstDifference, PathWithBoundaryEndpoints) {
    // interior node 0 (the middle of a 3-node path), boundary neighbors
    std::vector<GraphEdge> edges{{0, 0, true}, {0, 0, true}};
    LinOpPtr l = graph_first_difference(edges, 1, 1.0);
    DenseMatrix d = to_dense(*l);
    EXPECT_DOUBLE_EQ(d(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(d(1, 0), 1.0);
    DenseMatrix ltl = dense_normal_gram(*l);
    EXPECT_DOUBLE_EQ(ltl(0, 0), 2.0);
}

TEST(GraphFirstDifference, FourCycleNullSpaceIsConstants) {
    std::vector<GraphEdge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    LinOpPtr l = graph_first_difference(edges, 4, 1.0);
    Vector ones(4, 1.0);
    EXPECT_NEAR(norm2(l->apply(ones)), 0.0, 1e-14);
    // L^T L is the cycle Laplacian: 2 on diagonal, -1 on cycle neighbors
    DenseMatrix ltl = dense_normal_gram(*l);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(ltl(i, i), 2.0);
        EXPECT_DOUBLE_EQ(ltl(i, (i + 1) % 4), -1.0);
    }
}

TEST(GraphFirstDifference, AlphaScalingAndIsolatedWarning) {
    std::vector<GraphEdge> edges{{0, 1}};
    bool warn = false;
    LinOpPtr l = graph_first_difference(edges, 3, 0.05, &warn);
    EXPECT_TRUE(warn);  // node 2 untouched
    DenseMatrix d = to_dense(*l);
    EXPECT_DOUBLE_EQ(d(0, 0), 0.05);
    EXPECT_DOUBLE_EQ(d(0, 1), -0.05);
    EXPECT_DOUBLE_EQ(d(0, 2), 0.0);
}

TEST(SyntheticBlocks, GroundTruthSupport) {
    SyntheticBlocks sb = synthetic_blocks(6, 4, 12, 2, 3, 0.0);
    for (std::size_t l = 0; l < 6; ++l)
        for (std::size_t i = 0; i < 4; ++i) {
            double v = sb.x_true[l * 4 + i];
            if (l == 2)
                EXPECT_NE(v, 0.0);
            else
                EXPECT_EQ(v, 0.0);
        }
    // noiseless data equals the block forward product
    detail::ScaledBlockOperator full(sb.model.blocks, Vector(6, 1.0));
    Vector want = full.apply(sb.x_true);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(sb.model.b[i], want[i]);
}

TEST(GenerateData, ZeroNoiseIsExactAndDeterministic) {
    Rng rng(1);
    DenseMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -2.0;
    auto op = make_dense_op(a);
    Vector x{3.0, 4.0};
    auto [b0, s0] = generate_data(*op, x, 0.0, rng);
    EXPECT_EQ(s0, 0.0);
    EXPECT_DOUBLE_EQ(b0[0], 3.0);
    EXPECT_DOUBLE_EQ(b0[1], -8.0);

    Rng r1(9), r2(9);
    auto [b1, s1] = generate_data(*op, x, 0.01, r1);
    auto [b2, s2] = generate_data(*op, x, 0.01, r2);
    EXPECT_EQ(b1, b2);
    EXPECT_DOUBLE_EQ(s1, 0.01 * 8.0);
}

TEST(GenerateData, NoiseMomentOracle) {
    DenseMatrix a(1, 1);
    a(0, 0) = 1.0;
    auto op = make_dense_op(a);
    Vector x{10.0};
    Rng rng(111);
    const std::size_t reps = 100000;
    double acc = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        auto [b, s] = generate_data(*op, x, 0.005, rng);
        double e = b[0] - 10.0;
        acc += e * e;
    }
    double emp_std = std::sqrt(acc / reps);
    EXPECT_NEAR(emp_std, 0.05, 0.01 * 0.05);
}

TEST(Presets, RegistryBuildsEveryEntry) {
    for (const std::string& name : preset_names()) {
        if (name == "crossborehole-paper") continue;  // exercised at reduced scale above
        AssembledProblem p = build_preset(name);
        EXPECT_EQ(p.name, name);
        if (p.hier_model) {
            EXPECT_GE(p.hier_model->num_blocks(), 1u);
        } else {
            EXPECT_GE(p.model.m(), 1u);
            EXPECT_EQ(p.x_true.size(), p.model.n());
        }
    }
    EXPECT_THROW(build_preset("no-such-preset"), std::invalid_argument);
}

TEST(Presets, DeskProblemIsUnderdeterminedAndSamplable) {
    AssembledProblem p = build_preset("crossborehole-desk");
    EXPECT_EQ(p.model.m(), 64u);
    EXPECT_EQ(p.model.n(), 800u);
    SampleBatch batch = sample(p.model, 2, 5);
    for (double v : batch.draws.data) EXPECT_TRUE(std::isfinite(v));
}

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "gsplit/hier.hpp"
#include "gsplit/linop.hpp"
#include "gsplit/rng.hpp"
#include "gsplit/sampler.hpp"
#include "gsplit/whitening.hpp"

namespace gsplit {

/// Rectangular pixelization of the domain [0, width] x [0, height];
/// ny pixels across, nz pixels down. Pixel (iy, iz) has flat index
/// iz * ny + iy (horizontal index fastest, matching the Kronecker layout).
struct PixelGrid {
    std::size_t ny = 2, nz = 2;
    double width = 1.0, height = 1.0;

    void validate() const {
        if (ny < 1 || nz < 1) throw std::invalid_argument("grid: pixel counts must be >= 1");
        if (width <= 0.0 || height <= 0.0)
            throw std::invalid_argument("grid: extent must be positive");
    }
    std::size_t n() const { return ny * nz; }
    double dx() const { return width / double(ny); }
    double dz() const { return height / double(nz); }
};

struct Point {
    double x = 0.0, y = 0.0;
};

struct Ray {
    Point src, rcv;
    std::vector<std::pair<std::size_t, double>> hits;  // (pixel index, length)

    double chord_length() const { return std::hypot(rcv.x - src.x, rcv.y - src.y); }
    double hit_sum() const {
        double s = 0.0;
        for (const auto& [p, l] : hits) s += l;
        return s;
    }
};

struct RaySet {
    std::vector<Ray> rays;
};

/// Exact ray-pixel intersection lengths by parametric slab traversal: the
/// chord is cut at every gridline crossing and each segment is assigned to
/// the pixel containing its midpoint.
inline Ray trace_ray(const PixelGrid& grid, Point src, Point rcv) {
    grid.validate();
    Ray ray{src, rcv, {}};
    const double chord = ray.chord_length();
    if (chord == 0.0) return ray;

    std::vector<double> ts{0.0, 1.0};
    auto add_crossings = [&](double a0, double a1, double step, std::size_t count) {
        if (a1 == a0) return;
        for (std::size_t i = 1; i < count; ++i) {
            double t = (double(i) * step - a0) / (a1 - a0);
            if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
    };
    add_crossings(src.x, rcv.x, grid.dx(), grid.ny);
    add_crossings(src.y, rcv.y, grid.dz(), grid.nz);
    std::sort(ts.begin(), ts.end());

    std::map<std::size_t, double> acc;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        double ta = ts[k], tb = ts[k + 1];
        if (tb - ta <= 1e-14) continue;
        double tm = 0.5 * (ta + tb);
        double mx = src.x + tm * (rcv.x - src.x);
        double my = src.y + tm * (rcv.y - src.y);
        auto clamp_idx = [](double v, std::size_t n) {
            auto i = static_cast<long long>(std::floor(v));
            return std::size_t(std::clamp<long long>(i, 0, static_cast<long long>(n) - 1));
        };
        std::size_t iy = clamp_idx(mx / grid.dx(), grid.ny);
        std::size_t iz = clamp_idx(my / grid.dz(), grid.nz);
        acc[iz * grid.ny + iy] += (tb - ta) * chord;
    }
    ray.hits.assign(acc.begin(), acc.end());
    return ray;
}

/// Cross-borehole tomography operator: n_src equally spaced sources on the
/// left edge, n_rcv receivers on the right edge, one row per (source,
/// receiver) pair holding the ray-pixel intersection lengths.
inline std::pair<LinOpPtr, RaySet> build_crossborehole(const PixelGrid& grid, std::size_t n_src,
                                                       std::size_t n_rcv) {
    grid.validate();
    if (n_src < 1 || n_rcv < 1)
        throw std::invalid_argument("crossborehole: need at least one source and receiver");
    RaySet rays;
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    for (std::size_t s = 0; s < n_src; ++s) {
        double ys = grid.height * (double(s) + 0.5) / double(n_src);
        for (std::size_t r = 0; r < n_rcv; ++r) {
            double yr = grid.height * (double(r) + 0.5) / double(n_rcv);
            Ray ray = trace_ray(grid, Point{0.0, ys}, Point{grid.width, yr});
            std::size_t row = rays.rays.size();
            for (const auto& [pix, len] : ray.hits) trips.emplace_back(row, pix, len);
            rays.rays.push_back(std::move(ray));
        }
    }
    auto sp = SparseMatrix::from_triplets(n_src * n_rcv, grid.n(), trips);
    return {make_sparse_op(std::move(sp)), std::move(rays)};
}

/// SPD second-difference matrix with Dirichlet-type closure: 2 on the whole
/// diagonal, -1 on the off-diagonals.
inline DenseMatrix second_difference(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 2.0;
        if (i + 1 < n) {
            m(i, i + 1) = -1.0;
            m(i + 1, i) = -1.0;
        }
    }
    return m;
}

/// Anisotropic Whittle-Matern-style prior on the grid: L = L_vert (x) L_hor
/// with L_hor = L_ny + lambda_y^{-2} I, L_vert = L_nz + lambda_z^{-2} I, and
/// the prior model L x = w, w ~ N(0, gamma^2 I). precision_factor() returns
/// L / gamma, the factor of the prior precision L^T L / gamma^2.
struct WhittleMaternPrior {
    double lambda_y = 1.0, lambda_z = 1.0, gamma = 1.0;
    DenseMatrix l_hor, l_vert;

    LinOpPtr op() const { return std::make_shared<KroneckerOperator>(l_vert, l_hor); }
    LinOpPtr precision_factor() const {
        DenseMatrix scaled = l_hor;
        scale(scaled.data, 1.0 / gamma);
        return std::make_shared<KroneckerOperator>(l_vert, scaled);
    }
};

inline WhittleMaternPrior whittle_matern(const PixelGrid& grid, double lambda_y, double lambda_z,
                                         double gamma) {
    grid.validate();
    if (lambda_y <= 0.0 || lambda_z <= 0.0 || gamma <= 0.0)
        throw std::invalid_argument("whittle_matern: parameters must be positive");
    WhittleMaternPrior p;
    p.lambda_y = lambda_y;
    p.lambda_z = lambda_z;
    p.gamma = gamma;
    p.l_hor = second_difference(grid.ny);
    for (std::size_t i = 0; i < grid.ny; ++i) p.l_hor(i, i) += 1.0 / (lambda_y * lambda_y);
    p.l_vert = second_difference(grid.nz);
    for (std::size_t i = 0; i < grid.nz; ++i) p.l_vert(i, i) += 1.0 / (lambda_z * lambda_z);
    return p;
}

/// Graph edge for first-difference priors. Endpoints index interior nodes;
/// a boundary edge keeps only its interior endpoint's entry.
struct GraphEdge {
    std::size_t a = 0, b = 0;
    bool b_is_boundary = false;
};

/// Scaled first-difference operator on a graph: one row per edge with
/// entries +alpha at a and -alpha at b (interior edges), or the single
/// entry +alpha at a (boundary edges). L^T L is alpha^2 times the graph
/// Laplacian restricted to interior nodes.
inline LinOpPtr graph_first_difference(const std::vector<GraphEdge>& edges,
                                       std::size_t n_interior, double alpha = 1.0,
                                       bool* isolated_node_warning = nullptr) {
    if (n_interior < 1) throw std::invalid_argument("graph_first_difference: empty graph");
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    std::vector<bool> touched(n_interior, false);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const GraphEdge& ed = edges[e];
        if (ed.a >= n_interior || (!ed.b_is_boundary && ed.b >= n_interior))
            throw std::invalid_argument("graph_first_difference: edge endpoint out of range");
        trips.emplace_back(e, ed.a, alpha);
        touched[ed.a] = true;
        if (!ed.b_is_boundary) {
            trips.emplace_back(e, ed.b, -alpha);
            touched[ed.b] = true;
        }
    }
    bool isolated = std::find(touched.begin(), touched.end(), false) != touched.end();
    if (isolated_node_warning) *isolated_node_warning = isolated;
    return make_sparse_op(SparseMatrix::from_triplets(edges.size(), n_interior, trips));
}

/// Edges of the pixel-grid adjacency graph (4-neighborhood, all interior).
inline std::vector<GraphEdge> grid_adjacency_edges(const PixelGrid& grid) {
    std::vector<GraphEdge> edges;
    for (std::size_t iz = 0; iz < grid.nz; ++iz)
        for (std::size_t iy = 0; iy < grid.ny; ++iy) {
            std::size_t p = iz * grid.ny + iy;
            if (iy + 1 < grid.ny) edges.push_back(GraphEdge{p, p + 1});
            if (iz + 1 < grid.nz) edges.push_back(GraphEdge{p, p + grid.ny});
        }
    return edges;
}

/// Additive scaled white noise: sigma = noise_pct * max |noiseless entry|.
inline std::pair<Vector, double> generate_data(const LinearOperator& op, const Vector& x_true,
                                               double noise_pct, Rng& rng) {
    if (noise_pct < 0.0) throw std::invalid_argument("generate_data: negative noise level");
    Vector b = op.apply(x_true);
    double peak = 0.0;
    for (double v : b) peak = std::max(peak, std::abs(v));
    double sigma = noise_pct * peak;
    if (sigma > 0.0)
        for (double& v : b) v += sigma * rng.normal();
    return {std::move(b), sigma};
}

struct SyntheticBlocks {
    BlockModel model;
    Vector x_true;
    std::size_t active = 0;
};

/// Group-sparse test problem: random dense lead-field blocks, ground truth
/// supported on a single block with uniform-random amplitudes, data with
/// 0.5% scaled white noise.
inline SyntheticBlocks synthetic_blocks(std::size_t n_blocks, std::size_t block_size,
                                        std::size_t m, std::size_t active, std::uint64_t seed,
                                        double noise_pct = 0.005) {
    if (active >= n_blocks) throw std::invalid_argument("synthetic_blocks: active out of range");
    Rng rng(seed);
    SyntheticBlocks out;
    out.active = active;
    std::vector<LinOpPtr> blocks;
    for (std::size_t l = 0; l < n_blocks; ++l) {
        DenseMatrix blk(m, block_size);
        for (double& v : blk.data) v = rng.normal();
        blocks.push_back(make_dense_op(std::move(blk)));
    }
    out.x_true.assign(n_blocks * block_size, 0.0);
    for (std::size_t i = 0; i < block_size; ++i) {
        double amp = 0.5 + rng.uniform();                    // in [0.5, 1.5)
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        out.x_true[active * block_size + i] = sign * amp;
    }

    out.model.blocks = std::move(blocks);
    detail::ScaledBlockOperator full(out.model.blocks, Vector(n_blocks, 1.0));
    auto [b, sigma] = generate_data(full, out.x_true, noise_pct, rng);
    out.model.b = std::move(b);
    out.model.sigma = std::max(sigma, 1e-12);
    out.model.beta = 1.5;
    out.model.vartheta.assign(n_blocks, 1e-3);
    return out;
}

/// A fully assembled problem as the CLI consumes it: a whitened Gaussian
/// model, or a hierarchical block model, plus the generative ground truth.
struct AssembledProblem {
    std::string name;
    StandardFormModel model;       // valid when !hier_model
    std::optional<BlockModel> hier_model;
    Vector x_true;
    double sigma = 0.0;
};

namespace detail {

inline AssembledProblem build_crossborehole_problem(const std::string& name, std::size_t ny,
                                                    std::size_t nz, std::size_t n_src,
                                                    std::size_t n_rcv, double lambda_y,
                                                    double lambda_z, double gamma,
                                                    double noise_pct) {
    PixelGrid grid{ny, nz, double(ny), double(nz)};
    auto [op, rays] = build_crossborehole(grid, n_src, n_rcv);
    WhittleMaternPrior prior = whittle_matern(grid, lambda_y, lambda_z, gamma);

    // smooth anisotropic bump phantom
    Vector x_true(grid.n());
    double cy = 0.5 * double(ny), cz = 0.45 * double(nz);
    for (std::size_t iz = 0; iz < nz; ++iz)
        for (std::size_t iy = 0; iy < ny; ++iy) {
            double uy = (double(iy) + 0.5 - cy) / (0.25 * double(ny));
            double uz = (double(iz) + 0.5 - cz) / (0.2 * double(nz));
            x_true[iz * ny + iy] = std::exp(-0.5 * (uy * uy + uz * uz));
        }

    Rng rng(20260825);
    auto [b, sigma] = generate_data(*op, x_true, noise_pct, rng);

    GeneralGaussianModel general;
    general.op = op;
    general.b = std::move(b);
    general.prior_precision_factor = prior.precision_factor();
    general.noise_precision_factor = make_scaled_op(1.0 / sigma, make_identity_op(op->rows()));

    AssembledProblem out;
    out.name = name;
    out.model = whiten(general);
    out.x_true = std::move(x_true);
    out.sigma = sigma;
    return out;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
    return {"scalar", "crossborehole-desk", "crossborehole-paper", "blocks-meg-toy"};
}

inline AssembledProblem build_preset(const std::string& name) {
    if (name == "scalar") {
        AssembledProblem out;
        out.name = name;
        DenseMatrix a(1, 1);
        a(0, 0) = 1.0;
        out.model.op = make_dense_op(a);
        out.model.b = {2.0};
        out.x_true = {1.0};
        out.sigma = 1.0;
        return out;
    }
    // desk variant: correlation lengths scaled to the 10x-smaller grid, with the
    // prior scale and noise level chosen so the whitened system stays
    // well-conditioned enough for short Krylov runs
    if (name == "crossborehole-desk")
        return detail::build_crossborehole_problem(name, 20, 40, 8, 8, 2.0, 1.0, 0.3, 0.05);
    if (name == "crossborehole-paper")
        return detail::build_crossborehole_problem(name, 100, 200, 20, 20, 20.0, 10.0, 70.0, 0.005);
    if (name == "blocks-meg-toy") {
        SyntheticBlocks blocks = synthetic_blocks(10, 5, 20, 3, 20260825);
        AssembledProblem out;
        out.name = name;
        out.hier_model = std::move(blocks.model);
        out.x_true = std::move(blocks.x_true);
        out.sigma = out.hier_model->sigma;
        return out;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace gsplit

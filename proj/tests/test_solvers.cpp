#include "tla/solvers.hpp"
#include "tla/testprob.hpp"

#include <doctest.h>

#include <cstdlib>
#include <cstring>

using namespace tla;

namespace {

double rel_diff(const Tensor3& a, const Tensor3& b) {
    return fro_norm(a - b) / std::max(fro_norm(b), 1e-300);
}

Tensor3 rank_r(Index l, Index m, Index n, Index r, std::mt19937_64& rng) {
    Tensor3 out(l, m, n);
    for (Index i = 0; i < r; ++i)
        out += tprod(Tensor3::random(l, 1, n, rng), Tensor3::random(1, m, n, rng));
    return out;
}

Tensor3 sym_tensor(Index m, Index n, std::mt19937_64& rng) {
    Tensor3 c = Tensor3::random(m, m, n, rng);
    return tprod(ttranspose(c), c);
}

// Small ill-posed single-slice instance built from the blur generator.
ProblemInstance blur_instance(Index n, double level, uint64_t seed, bool symmetric = false) {
    BlurSpec spec{n, 1.5, std::min<Index>(5, n)};
    Tensor3 a = symmetric ? blur_tensor_symmetric(spec) : blur_tensor(spec);
    std::mt19937_64 rng(seed + 1);
    Tensor3 x(n, 1, n);
    for (Index k = 0; k < n; ++k) x.slice(k).setOnes();
    x += 0.05 * Tensor3::random(n, 1, n, rng);
    return make_instance(a, x, NoiseSpec{level, seed});
}

}  // namespace

TEST_CASE("relative_error") {
    std::mt19937_64 rng(301);
    Tensor3 x = Tensor3::random(4, 1, 3, rng);
    CHECK(relative_error(x, x) == 0.0);
    CHECK(relative_error(2.0 * x, x) == doctest::Approx(1.0).epsilon(1e-12));
    Tensor3 e = Tensor3::random(4, 1, 3, rng);
    e *= 0.1 * fro_norm(x) / fro_norm(e);
    CHECK(relative_error(x + e, x) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(relative_error(x, Tensor3(4, 1, 3)), std::invalid_argument);
    CHECK_THROWS_AS(relative_error(x, Tensor3(3, 1, 3)), std::invalid_argument);
}

TEST_CASE("solve_ttsvd: smallest-k, residual monotonicity, projection identity") {
    std::mt19937_64 rng(303);

    // Consistent rank-1 problem: one term suffices.
    Tensor3 a1 = rank_r(6, 5, 3, 1, rng);
    Tensor3 x1 = Tensor3::random(5, 1, 3, rng);
    Tensor3 b1 = tprod(a1, x1);
    SolveReport r1 = solve_ttsvd(a1, b1, {1e-10 * fro_norm(b1), 1.1});
    CHECK(r1.success);
    CHECK(r1.k_scalar() == 1);

    ProblemInstance inst = blur_instance(16, 1e-2, 5);
    SolveReport r = solve_ttsvd(inst.a, inst.b, {inst.delta, 1.1});
    REQUIRE(r.success);
    CHECK(r.residual_norm <= 1.1 * inst.delta);
    CHECK(relative_error(r.x, inst.x_true) < relative_error(inst.b, inst.x_true));

    // Smallest-k: capping at k-1 must fail.
    if (r.k_scalar() > 1) {
        SolveReport rm = solve_ttsvd(inst.a, inst.b, {inst.delta, 1.1, r.k_scalar() - 1});
        CHECK(!rm.success);
    }

    // Residual monotonicity in s, plus the Parseval projection identity
    // ||b - A*X_s||^2 = ||b||^2 - sum_{i<=s} ||U_i^T*b||^2.
    TSvdFactors f = tsvd(inst.a, 8);
    SpectralTensor as = dft_mode3(inst.a);
    double prev = fro_norm(inst.b);
    double energy = prev * prev;
    Tensor3 x(inst.a.cols(), 1, inst.a.tubes());
    for (Index s = 0; s < 8; ++s) {
        x += tprod(f.V.lateral(s),
                   tprod(tube_inverse(f.singular_tube(s)), tprod(ttranspose(f.U.lateral(s)), inst.b)));
        const double resid = fro_norm(inst.b - tprod(as, x));
        CHECK(resid <= prev + 1e-10);
        prev = resid;
        energy -= std::pow(fro_norm(tprod(ttranspose(f.U.lateral(s)), inst.b)), 2);
        CHECK(resid * resid == doctest::Approx(energy).epsilon(1e-8));
    }
}

TEST_CASE("solve_ttevd: identity operator and SPD coincidence with tSVD") {
    std::mt19937_64 rng(307);
    Tensor3 eye = Tensor3::identity(5, 3);
    Tensor3 b = Tensor3::random(5, 1, 3, rng);
    SolveReport r = solve_ttevd(eye, b, {1e-10 * fro_norm(b), 1.1});
    CHECK(r.success);
    // The truncated solution W_k*W_k^T*b is a projection of b; for a generic
    // b the residual only vanishes once the eigenbasis is complete.
    CHECK(r.k_scalar() == 5);
    CHECK(rel_diff(r.x, b) <= 1e-10);

    Tensor3 g = sym_tensor(6, 3, rng);
    Tensor3 xt = Tensor3::random(6, 1, 3, rng);
    Tensor3 bg = tprod(g, xt);
    DiscrepancyConfig disc{1e-8 * fro_norm(bg), 1.1};
    SolveReport re = solve_ttevd(g, bg, disc);
    SolveReport rs = solve_ttsvd(g, bg, disc);
    REQUIRE(re.success);
    REQUIRE(rs.success);
    CHECK(re.k_scalar() == rs.k_scalar());
    CHECK(rel_diff(re.x, rs.x) <= 1e-6);

    CHECK_THROWS_AS(solve_ttevd(Tensor3::random(5, 5, 3, rng), b, disc), std::invalid_argument);
}

TEST_CASE("solve_rtsvd: trivial failure and exact low-rank recovery") {
    std::mt19937_64 rng(311);
    Tensor3 a = rank_r(8, 6, 4, 3, rng);
    Tensor3 x = Tensor3::random(6, 1, 4, rng);
    Tensor3 b = tprod(a, x);

    RtsvdConfig big;
    big.epsilon = 2.0 * fro_norm(a);
    SolveReport r0 = solve_rtsvd(a, b, {1e-8, 1.1}, big);
    CHECK(!r0.success);
    CHECK(r0.k_scalar() == 0);

    RtsvdConfig small;
    small.epsilon = 1e-6 * fro_norm(a);
    small.oversample = 2;
    SolveReport r = solve_rtsvd(a, b, {1e-6 * fro_norm(b), 1.1}, small);
    CHECK(r.success);
    CHECK(r.residual_norm <= 1.1e-6 * fro_norm(b) + 1e-12);
}

TEST_CASE("solve_tgkb: identity, full-dimension exactness, triplet equality") {
    std::mt19937_64 rng(313);
    Tensor3 b5 = Tensor3::random(5, 1, 3, rng);
    SolveReport ri = solve_tgkb(Tensor3::identity(5, 3), b5, {1e-10 * fro_norm(b5), 1.1});
    CHECK(ri.success);
    CHECK(ri.k_scalar() == 1);
    CHECK(rel_diff(ri.x, b5) <= 1e-8);

    // Well-posed square problem: by full dimension the projected residual is
    // negligible.
    Tensor3 a = Tensor3::random(8, 8, 3, rng);
    a += 4.0 * Tensor3::identity(8, 3);
    Tensor3 b = Tensor3::random(8, 1, 3, rng);
    SolveReport r = solve_tgkb(a, b, {1e-8 * fro_norm(b), 1.1, 8});
    CHECK(r.projected_residual <= 1e-6 * fro_norm(b));
    CHECK(std::abs(r.projected_residual - r.residual_norm) <= 1e-6 * fro_norm(b));

    ProblemInstance inst = blur_instance(16, 1e-2, 7);
    DiscrepancyConfig disc{inst.delta, 1.1};
    SolveReport rg = solve_tgkb(inst.a, inst.b, disc);
    SolveReport rt = solve_tgkb_triplet_form(inst.a, inst.b, disc);
    REQUIRE(rg.success);
    REQUIRE(rt.success);
    CHECK(rg.k_scalar() == rt.k_scalar());
    CHECK(rel_diff(rt.x, rg.x) <= 1e-8);
    CHECK(std::abs(rg.projected_residual - rg.residual_norm) <= 1e-6 * fro_norm(inst.b));

    // Smallest-k semantics.
    if (rg.k_scalar() > 1) {
        SolveReport rm = solve_tgkb(inst.a, inst.b, {inst.delta, 1.1, rg.k_scalar() - 1});
        CHECK(!rm.success);
    }

    // early_stop reports one step fewer.
    SolveReport res = solve_tgkb(inst.a, inst.b, {inst.delta, 1.1, 0, true});
    if (rg.k_scalar() > 1) CHECK(res.k_scalar() == rg.k_scalar() - 1);
}

TEST_CASE("tgkb triplet residuals behave like Ritz triplets") {
    ProblemInstance inst = blur_instance(16, 1e-3, 11);
    GkbDecomposition d = tgkb(inst.a, inst.b, 4, true, 0);
    TSvdFactors f = tsvd(d.P_bar, 4);
    Tensor3 left = tprod(d.Q, f.U);
    Tensor3 right = tprod(d.W, f.V);
    for (Index i = 0; i < 4; ++i) {
        Tensor3 lhs = tprod(inst.a, right.lateral(i));
        Tensor3 rhs = tprod(left.lateral(i), f.singular_tube(i));
        CHECK(fro_norm(lhs - rhs) <= 1e-4 * fro_norm(inst.a));
    }
}

TEST_CASE("solve_tlanczos: direct and eigenpair forms agree") {
    std::mt19937_64 rng(317);
    Tensor3 b5 = Tensor3::random(5, 1, 3, rng);
    SolveReport ri = solve_tlanczos(Tensor3::identity(5, 3), b5, {1e-10 * fro_norm(b5), 1.1});
    CHECK(ri.success);
    CHECK(ri.k_scalar() == 1);
    CHECK(rel_diff(ri.x, b5) <= 1e-8);

    // Each form satisfies its own discrepancy test on a symmetric instance;
    // away from Krylov termination the least-squares solve over T_bar and the
    // Galerkin solve through T_k are different iterates, so their reports are
    // checked independently.
    ProblemInstance inst = blur_instance(16, 1e-2, 13, /*symmetric=*/true);
    DiscrepancyConfig disc{inst.delta, 1.1};
    SolveReport rd = solve_tlanczos(inst.a, inst.b, disc);
    SolveReport re = solve_tlanczos_eig_form(inst.a, inst.b, disc);
    REQUIRE(rd.success);
    REQUIRE(re.success);
    CHECK(rd.projected_residual <= 1.1 * inst.delta + 1e-10);
    CHECK(re.projected_residual <= 1.1 * inst.delta + 1e-10);
    CHECK(rd.residual_norm == doctest::Approx(rd.projected_residual).epsilon(1e-6));
    CHECK(re.residual_norm == doctest::Approx(re.projected_residual).epsilon(1e-6));

    // SPD fixture with exactly three distinct constant eigentubes: the
    // Lanczos space terminates at k = 3 with a vanishing coupling tube, so
    // both forms reproduce the exact solution and coincide.
    Tensor3 base = Tensor3::random(8, 8, 3, rng);
    TSvdFactors qf = tsvd(base, 8);
    Tensor3 d3(8, 8, 3);
    const double vals[3] = {5.0, 2.0, 1.0};
    for (Index i = 0; i < 8; ++i) d3(i, i, 0) = vals[i % 3];
    Tensor3 g = tprod(tprod(qf.U, d3), ttranspose(qf.U));
    Tensor3 bg = Tensor3::random(8, 1, 3, rng);
    SolveReport gd = solve_tlanczos(g, bg, {1e-10 * fro_norm(bg), 1.1, 3});
    SolveReport ge = solve_tlanczos_eig_form(g, bg, {1e-10 * fro_norm(bg), 1.1, 3});
    REQUIRE(gd.success);
    REQUIRE(ge.success);
    CHECK(gd.k_scalar() == 3);
    CHECK(ge.k_scalar() == 3);
    CHECK(rel_diff(ge.x, gd.x) <= 1e-8);

    CHECK_THROWS_AS(solve_tlanczos(Tensor3::random(5, 5, 3, rng), b5, disc),
                    std::invalid_argument);
}

TEST_CASE("solve_tikhonov_projected: shrinkage, vanishing penalty, selection") {
    ProblemInstance inst = blur_instance(16, 1e-2, 17);
    DiscrepancyConfig disc{inst.delta, 1.1};

    SolveReport r = solve_tikhonov_projected(inst.a, inst.b, disc, {}, KrylovKind::tgkb);
    REQUIRE(r.success);
    REQUIRE(r.mu.size() == 1);
    CHECK(r.mu[0] >= 1e1);
    CHECK(r.mu[0] <= 1e7);
    CHECK(r.projected_residual <= 1.1 * inst.delta + 1e-10);

    // Monotone shrinkage: pinning mu via a degenerate interval, smaller mu
    // (heavier penalty) gives a smaller solution norm.
    const Index k = r.k_scalar();
    double prev_norm = -1.0;
    for (double mu : {1e2, 1e4, 1e6}) {
        TikhonovConfig pin{mu, mu * (1.0 + 1e-9), 1e-12, 80};
        SolveReport rp =
            solve_tikhonov_projected(inst.a, inst.b, {inst.delta, 1.1, k}, pin, KrylovKind::tgkb);
        const double norm = fro_norm(rp.x);
        if (prev_norm >= 0.0 && rp.success) CHECK(norm >= prev_norm - 1e-12);
        prev_norm = norm;
    }

    // Vanishing-penalty limit: mu pinned at 1e7 approaches the unregularized
    // projected solution of solve_tgkb at the same k.
    SolveReport rg = solve_tgkb(inst.a, inst.b, disc);
    TikhonovConfig hi{1e7, 1e7 * (1.0 + 1e-9), 1e-12, 80};
    SolveReport rhi = solve_tikhonov_projected(inst.a, inst.b, {inst.delta, 1.1, rg.k_scalar()},
                                               hi, KrylovKind::tgkb);
    if (rhi.success && rhi.k_scalar() == rg.k_scalar())
        CHECK(rel_diff(rhi.x, rg.x) <= 1e-4);

    // t-Lanczos variant on the symmetric fixture.
    ProblemInstance sym = blur_instance(16, 1e-2, 19, /*symmetric=*/true);
    SolveReport rl =
        solve_tikhonov_projected(sym.a, sym.b, {sym.delta, 1.1}, {}, KrylovKind::tlanczos);
    CHECK(rl.success);

    CHECK_THROWS_AS(
        solve_tikhonov_projected(inst.a, inst.b, disc, {5.0, 2.0}, KrylovKind::tgkb),
        std::invalid_argument);
}

TEST_CASE("solve_p: p = 1 bitwise equality and per-slice independence") {
    ProblemInstance inst = blur_instance(16, 1e-2, 23);
    SolveReport single = solve_tgkb(inst.a, inst.b, {inst.deltas[0], 1.2}, 42);
    SolveReport multi = solve_p(inst.a, inst.b, inst.deltas, SliceMethod::tgkb, 1.2, 0, 42);
    REQUIRE(single.x.same_shape(multi.x));
    CHECK(std::memcmp(single.x.data(), multi.x.data(), sizeof(double) * single.x.size()) == 0);
    CHECK(multi.k == std::vector<Index>{single.k_scalar()});

    // Two identical slices with equal deltas get identical solutions.
    Tensor3 b2(inst.b.rows(), 2, inst.b.tubes());
    b2.set_lateral(0, inst.b);
    b2.set_lateral(1, inst.b);
    std::vector<double> deltas{inst.deltas[0], inst.deltas[0]};
    SolveReport r2 = solve_p(inst.a, b2, deltas, SliceMethod::tgkb, 1.2, 0, 42);
    REQUIRE(r2.k.size() == 2);
    CHECK(r2.k[0] == r2.k[1]);
    CHECK(fro_norm(r2.x.lateral(0) - r2.x.lateral(1)) <= 1e-12);

    CHECK_THROWS_AS(solve_p(inst.a, b2, {1.0}, SliceMethod::tgkb), std::invalid_argument);
}

TEST_CASE("solve_nested_tgkb_p: p = 1 coincidence and nondecreasing k") {
    ProblemInstance inst = blur_instance(16, 1e-2, 29);
    SolveReport single = solve_tgkb(inst.a, inst.b, {inst.deltas[0], 1.2}, 0);
    SolveReport nested = solve_nested_tgkb_p(inst.a, inst.b, inst.deltas, 1.2, 0, 2, 0);
    REQUIRE(single.success);
    REQUIRE(nested.success);
    CHECK(rel_diff(nested.x, single.x) <= 1e-10);

    // p = 3 with increasing difficulty: k must be nondecreasing in j.
    std::mt19937_64 rng(31);
    Tensor3 x3(inst.a.cols(), 3, inst.a.tubes());
    for (Index j = 0; j < 3; ++j) {
        Tensor3 xj(inst.a.cols(), 1, inst.a.tubes());
        for (Index k = 0; k < inst.a.tubes(); ++k) xj.slice(k).setOnes();
        xj += (0.05 * (j + 1)) * Tensor3::random(inst.a.cols(), 1, inst.a.tubes(), rng);
        x3.set_lateral(j, xj);
    }
    ProblemInstance p3 = make_instance(inst.a, x3, NoiseSpec{1e-2, 37});
    SolveReport rn = solve_nested_tgkb_p(p3.a, p3.b, p3.deltas, 1.2);
    REQUIRE(rn.success);
    REQUIRE(rn.k.size() == 3);
    CHECK(rn.k[0] <= rn.k[1]);
    CHECK(rn.k[1] <= rn.k[2]);

    // All slices equal: k stops growing after the first slice.
    Tensor3 beq(p3.b.rows(), 3, p3.b.tubes());
    for (Index j = 0; j < 3; ++j) beq.set_lateral(j, p3.b.lateral(0));
    std::vector<double> deq(3, p3.deltas[0]);
    SolveReport req = solve_nested_tgkb_p(p3.a, beq, deq, 1.2);
    REQUIRE(req.success);
    CHECK(req.k[0] == req.k[2]);
}

TEST_CASE("seeded determinism of randomized solver paths") {
    ProblemInstance i1 = blur_instance(12, 1e-2, 43);
    ProblemInstance i2 = blur_instance(12, 1e-2, 43);
    CHECK(std::memcmp(i1.b.data(), i2.b.data(), sizeof(double) * i1.b.size()) == 0);

    RtsvdConfig rc;
    rc.epsilon = 0.3 * fro_norm(i1.a);
    rc.seed = 9;
    SolveReport a = solve_rtsvd(i1.a, i1.b, {i1.delta, 1.1}, rc);
    SolveReport b = solve_rtsvd(i2.a, i2.b, {i2.delta, 1.1}, rc);
    REQUIRE(a.x.same_shape(b.x));
    CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * a.x.size()) == 0);
}

TEST_CASE("CSV serialization") {
    CHECK(report_csv_header() == "method,noise_level,k,relative_error,cpu_seconds");
    SolveReport r;
    r.method_tag = "tGKB";
    r.k = {2};
    r.relative_error = 0.5;
    r.wall_seconds = 0.0;
    CHECK(report_csv_row(r, 0.01) == "tGKB,0.01,2,0.5,0");
    r.k = {2, 3};
    CHECK(report_csv_row(r, 0.01, "failed") == "tGKB,0.01,\"(2,3)\",0.5,0,failed");
}

#include "tla/krylov.hpp"

#include <doctest.h>

using namespace tla;

namespace {

double rel_diff(const Tensor3& a, const Tensor3& b) {
    return fro_norm(a - b) / std::max(fro_norm(b), 1e-300);
}

double gram_residual(const Tensor3& q) {
    return fro_norm(tprod(ttranspose(q), q) - Tensor3::identity(q.cols(), q.tubes()));
}

Tensor3 e1_times(const Tube& z, Index h) {
    Tensor3 rhs(h, 1, z.tubes());
    for (Index k = 0; k < z.tubes(); ++k) rhs(0, 0, k) = z(0, 0, k);
    return rhs;
}

Tensor3 sym_tensor(Index m, Index n, std::mt19937_64& rng) {
    Tensor3 c = Tensor3::random(m, m, n, rng);
    return tprod(ttranspose(c), c);
}

}  // namespace

TEST_CASE("tgkb: first slice, decomposition identities, projection of b") {
    std::mt19937_64 rng(201);
    Tensor3 a = Tensor3::random(8, 6, 3, rng);
    Tensor3 b = Tensor3::random(8, 1, 3, rng);

    GkbDecomposition d1 = tgkb(a, b, 1, true, 0);
    NormalizeResult nb = normalize(b);
    CHECK(fro_norm(d1.Q.lateral(0) - nb.direction) == 0.0);

    GkbDecomposition d = tgkb(a, b, 3, true, 0);
    REQUIRE(d.k == 3);
    CHECK(!d.breakdown);
    CHECK(fro_norm(tprod(a, d.W) - tprod(d.Q, d.P_bar)) <= 1e-8 * fro_norm(a));
    CHECK(gram_residual(d.Q) <= 1e-10);
    CHECK(gram_residual(d.W) <= 1e-10);
    CHECK(fro_norm(tprod(ttranspose(d.Q), b) - e1_times(d.z1, 4)) <= 1e-8 * fro_norm(b));

    // P_bar is lower bidiagonal by construction.
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 3; ++j)
            if (i != j && i != j + 1)
                for (Index k = 0; k < 3; ++k) CHECK(d.P_bar(i, j, k) == 0.0);

    // Normal-equations structure: P_bar^T * P_bar is symmetric tridiagonal.
    Tensor3 ptp = tprod(ttranspose(d.P_bar), d.P_bar);
    CHECK(fro_norm(ptp - ttranspose(ptp)) <= 1e-8 * fro_norm(ptp));
    for (Index k = 0; k < 3; ++k) CHECK(std::abs(ptp(0, 2, k)) <= 1e-10 * fro_norm(ptp));
}

TEST_CASE("tgkb: W spans the Krylov subspace of A^T*A") {
    std::mt19937_64 rng(203);
    Tensor3 a = Tensor3::random(8, 6, 3, rng);
    Tensor3 b = Tensor3::random(8, 1, 3, rng);
    const Index k = 3;
    GkbDecomposition d = tgkb(a, b, k, true, 0);
    Tensor3 at = ttranspose(a);
    Tensor3 gen = tprod(at, b);  // A^T*b, then (A^T*A)^j applications
    for (Index j = 0; j < k; ++j) {
        Tensor3 proj = tprod(d.W, tprod(ttranspose(d.W), gen));
        CHECK(rel_diff(proj, gen) <= 1e-6);
        gen = tprod(at, tprod(a, gen));
    }
}

TEST_CASE("tgkb: errors and breakdown") {
    std::mt19937_64 rng(207);
    Tensor3 a = Tensor3::random(6, 5, 3, rng);
    CHECK_THROWS_AS(tgkb(a, Tensor3(6, 1, 3), 2, true, 0), std::invalid_argument);

    // Starting slice whose tubes sum to zero has a non-invertible z1.
    Tensor3 z(6, 1, 2);
    for (Index i = 0; i < 6; ++i) {
        z(i, 0, 0) = 1.0 + i;
        z(i, 0, 1) = -(1.0 + i);
    }
    CHECK_THROWS_AS(tgkb(Tensor3::random(6, 5, 2, rng), z, 2, true, 0), std::invalid_argument);

    CHECK_THROWS_AS(tgkb(a, Tensor3::random(6, 1, 3, rng), 0, true, 0), std::invalid_argument);
}

TEST_CASE("tlanczos: first step, identities, identity-operator breakdown") {
    std::mt19937_64 rng(211);
    Tensor3 a = sym_tensor(8, 3, rng);
    Tensor3 b = Tensor3::random(8, 1, 3, rng);

    LanczosDecomposition d1 = tlanczos(a, b, 1, true, 0);
    NormalizeResult nb = normalize(b);
    CHECK(fro_norm(d1.Q.lateral(0) - nb.direction) == 0.0);
    Tube c1 = tprod(ttranspose(nb.direction), tprod(a, nb.direction));
    CHECK(fro_norm(d1.T_bar.tube_at(0, 0) - c1) <= 1e-10);

    LanczosDecomposition d = tlanczos(a, b, 3, true, 0);
    REQUIRE(d.k == 3);
    Tensor3 qk = d.Q.lateral_block(0, 3);
    CHECK(fro_norm(tprod(a, qk) - tprod(d.Q, d.T_bar)) <= 1e-8 * fro_norm(a));
    CHECK(gram_residual(d.Q) <= 1e-10);

    // Q_k^T*A*Q_k is symmetric (equals T_k).
    Tensor3 tk = tprod(ttranspose(qk), tprod(a, qk));
    CHECK(fro_norm(tk - ttranspose(tk)) <= 1e-8 * fro_norm(tk));

    // Identity operator: A*Q_1 - Q_1*c_1 = 0, breakdown after one step.
    Tensor3 b5 = Tensor3::random(5, 1, 3, rng);
    LanczosDecomposition di = tlanczos(Tensor3::identity(5, 3), b5, 3, true, 0);
    CHECK(di.breakdown);
    CHECK(di.k == 1);

    CHECK_THROWS_AS(tlanczos(Tensor3::random(8, 8, 3, rng), b, 2, true, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(tlanczos(a, Tensor3(8, 1, 3), 2, true, 0), std::invalid_argument);
}

TEST_CASE("reorthogonalization monotonicity") {
    std::mt19937_64 rng(213);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor3 a = Tensor3::random(10, 8, 3, rng);
        Tensor3 b = Tensor3::random(10, 1, 3, rng);
        GkbDecomposition on = tgkb(a, b, 5, true, 0);
        GkbDecomposition off = tgkb(a, b, 5, false, 0);
        CHECK(gram_residual(on.W) <= gram_residual(off.W) + 1e-14);
        CHECK(gram_residual(on.Q) <= gram_residual(off.Q) + 1e-14);
    }
}

TEST_CASE("scaling b by an invertible tube preserves the first direction's span") {
    std::mt19937_64 rng(217);
    Tensor3 a = Tensor3::random(7, 5, 4, rng);
    Tensor3 b = Tensor3::random(7, 1, 4, rng);
    Tube t = Tensor3::random(1, 1, 4, rng);
    REQUIRE(tube_invertible(t));

    GkbDecomposition d1 = tgkb(a, b, 1, true, 0);
    GkbDecomposition d2 = tgkb(a, tprod(b, t), 1, true, 0);
    Tensor3 q1 = d1.Q.lateral(0), q2 = d2.Q.lateral(0);
    // Directions agree up to a unit tube (per-slice phase); projection onto
    // q1's span must reproduce q2.
    CHECK(rel_diff(tprod(q1, tprod(ttranspose(q1), q2)), q2) <= 1e-8);
}

TEST_CASE("stepwise process extension matches the one-shot runs") {
    std::mt19937_64 rng(219);
    Tensor3 a = Tensor3::random(8, 6, 3, rng);
    Tensor3 b = Tensor3::random(8, 1, 3, rng);
    GkbProcess proc(a, b, true, 0);
    REQUIRE(proc.step());
    REQUIRE(proc.step());
    GkbDecomposition two = tgkb(a, b, 2, true, 0);
    CHECK(fro_norm(proc.P_bar() - two.P_bar) == 0.0);
    REQUIRE(proc.step());
    GkbDecomposition three = tgkb(a, b, 3, true, 0);
    CHECK(fro_norm(proc.W() - three.W) == 0.0);
}

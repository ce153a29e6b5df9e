#include <doctest.h>

#include <cmath>

#include "hopgag/fixed_point.hpp"
#include "oracles.hpp"

using namespace hopgag;
namespace ht = hopgag::testing;

namespace {

Operator scaling(double factor) {
    return Operator{1, "scaling", [factor](const Eigen::VectorXd& x) {
                        return Eigen::VectorXd(factor * x);
                    }};
}

Operator affine1d(double a, double b) {
    return Operator{1, "affine", [a, b](const Eigen::VectorXd& x) {
                        Eigen::VectorXd y(1);
                        y[0] = a * x[0] + b;
                        return y;
                    }};
}

Operator rotation90() {
    Eigen::Matrix2d R;
    R << 0, -1, 1, 0;
    return Operator{2, "rot90", [R](const Eigen::VectorXd& x) {
                        return Eigen::VectorXd(R * x);
                    }};
}

Eigen::VectorXd scalar(double v) {
    Eigen::VectorXd x(1);
    x[0] = v;
    return x;
}

} // namespace

TEST_CASE("picard on a halving map") {
    const IterationTrace t = picard_iterate(scaling(0.5), scalar(1.0), 1e-8, 1000);
    CHECK(t.converged);
    // residual at x_k = 2^-k is 2^-(k+1); the step achieving 2^-27 <= 1e-8 is
    // applied and counted, landing on x_27.
    CHECK(t.iterations_used == 27);
    CHECK(t.states.size() == 28);
    CHECK(t.residual_norms.back() == doctest::Approx(std::pow(2.0, -27)).epsilon(1e-14));
    CHECK(t.states.back()[0] == doctest::Approx(std::pow(2.0, -27)).epsilon(1e-14));
}

TEST_CASE("picard on the identity converges immediately") {
    const Operator id{3, "id", [](const Eigen::VectorXd& x) { return x; }};
    SplitMix64 rng(31);
    const IterationTrace t = picard_iterate(id, ht::gaussian_vector(rng, 3), 1e-8, 10);
    CHECK(t.converged);
    CHECK(t.iterations_used == 0);
    CHECK(t.states.size() == 1);
    CHECK(t.residual_norms.size() == 1);
    CHECK(t.residual_norms[0] == 0.0);
}

TEST_CASE("picard limit cycles hit max_iter") {
    Eigen::VectorXd x0(2);
    x0 << 1, 0;
    const IterationTrace t = picard_iterate(rotation90(), x0, 1e-8, 50);
    CHECK_FALSE(t.converged);
    CHECK(t.iterations_used == 50);
    CHECK(t.states.size() == 51);
    for (double r : t.residual_norms) CHECK(r == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("picard throws on divergence and carries the trace prefix") {
    const Operator blow{1, "blow", [](const Eigen::VectorXd& x) {
                            return Eigen::VectorXd(x * 1e200);
                        }};
    try {
        picard_iterate(blow, scalar(1.0), 1e-8, 100);
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        CHECK(e.trace().states.size() >= 1);
        CHECK(e.trace().states[0][0] == 1.0);
    }
}

TEST_CASE("km with relax 1 reproduces picard") {
    const IterationTrace p = picard_iterate(scaling(0.5), scalar(1.0), 1e-8, 1000);
    const IterationTrace k = km_iterate(scaling(0.5), scalar(1.0), 1.0, 1e-8, 1000);
    CHECK(k.iterations_used == p.iterations_used);
    REQUIRE(k.states.size() == p.states.size());
    for (std::size_t i = 0; i < k.states.size(); ++i) {
        CHECK(k.states[i][0] == p.states[i][0]);
    }
}

TEST_CASE("km per-step factor on a halving map") {
    const IterationTrace t = km_iterate(scaling(0.5), scalar(1.0), 0.5, 1e-8, 1000);
    CHECK(t.states[1][0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(t.states[2][0] == doctest::Approx(0.75 * 0.75).epsilon(1e-15));
    CHECK(t.converged);
}

TEST_CASE("km averages a rotation into convergence") {
    Eigen::VectorXd x0(2);
    x0 << 1, 0;
    const IterationTrace t = km_iterate(rotation90(), x0, 0.5, 1e-8, 1000);
    CHECK(t.converged);
    CHECK(t.states.back().norm() <= 1e-7);
    CHECK(t.iterations_used < 100);
}

TEST_CASE("km validates relax") {
    CHECK_THROWS_AS(km_iterate(scaling(0.5), scalar(1.0), 0.0, 1e-8, 10), invalid_input);
    CHECK_THROWS_AS(km_iterate(scaling(0.5), scalar(1.0), 1.5, 1e-8, 10), invalid_input);
}

TEST_CASE("anderson fixed omega reproduces the two-point extrapolation") {
    const IterationTrace t =
        anderson_iterate(scaling(0.5), scalar(1.0), 1, 1.0, 1e-8, 100);
    REQUIRE(t.states.size() >= 3);
    CHECK(t.states[1][0] == 0.5);                 // Picard seed
    CHECK(t.states[2][0] == 0.0);                 // 0.25 + (0.25 - 0.5)
    CHECK(t.converged);
    CHECK(t.iterations_used == 2);
}

TEST_CASE("anderson LS solves scalar affine maps within two accelerated steps") {
    SplitMix64 rng(32);
    for (int rep = 0; rep < 20; ++rep) {
        const double a = rng.next_uniform(-0.9, 0.95);
        const double b = rng.next_uniform(-2.0, 2.0);
        const double fp = b / (1.0 - a);
        const IterationTrace t =
            anderson_iterate(affine1d(a, b), scalar(0.0), 1, std::nullopt, 1e-8, 100);
        CHECK(t.converged);
        CHECK(t.iterations_used <= 4);
        CHECK(std::abs(t.states.back()[0] - fp) <= 1e-7 * (1.0 + std::abs(fp)));
    }
}

TEST_CASE("anderson weights always sum to one") {
    SplitMix64 rng(33);
    const Eigen::MatrixXd G = ht::gaussian_matrix(rng, 6, 6);
    const Eigen::MatrixXd A = 0.9 * G / G.norm();
    const Eigen::VectorXd b = ht::gaussian_vector(rng, 6);
    const Operator F{6, "linear", [A, b](const Eigen::VectorXd& x) {
                         return Eigen::VectorXd(A * x + b);
                     }};
    for (int m : {1, 3}) {
        const IterationTrace t =
            anderson_iterate(F, ht::gaussian_vector(rng, 6), m, std::nullopt, 1e-10, 500);
        CHECK(t.converged);
        CHECK(!t.anderson_weights.empty());
        for (const auto& w : t.anderson_weights) {
            CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("anderson validates arguments") {
    CHECK_THROWS_AS(anderson_iterate(scaling(0.5), scalar(1.0), 0, std::nullopt, 1e-8, 10),
                    invalid_input);
    CHECK_THROWS_AS(anderson_iterate(scaling(0.5), scalar(1.0), 2, 1.0, 1e-8, 10),
                    invalid_input);
}

TEST_CASE("residual decomposition") {
    Eigen::VectorXd r(2), d(2);
    r << 1, 1;
    d << 1, 0;
    auto [par, perp] = decompose_residual(r, d);
    CHECK(par[0] == 1.0);
    CHECK(par[1] == 0.0);
    CHECK(perp[0] == 0.0);
    CHECK(perp[1] == 1.0);

    auto [par2, perp2] = decompose_residual(2.0 * d, d);
    CHECK((par2 - 2.0 * d).norm() == 0.0);
    CHECK(perp2.norm() == 0.0);

    auto [par3, perp3] = decompose_residual(r, Eigen::VectorXd::Zero(2));
    CHECK(par3.norm() == 0.0);
    CHECK((perp3 - r).norm() == 0.0);

    CHECK_THROWS_AS(decompose_residual(r, Eigen::VectorXd::Zero(3)), invalid_input);

    SplitMix64 rng(34);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd rr = ht::gaussian_vector(rng, 8);
        const Eigen::VectorXd dd = ht::gaussian_vector(rng, 8);
        auto [p, q] = decompose_residual(rr, dd);
        CHECK((p + q - rr).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(p.dot(q)) <= 1e-10 * rr.squaredNorm());
    }
}

namespace {

// Operator pair with the exact shared fixed point xstar: affine deviation
// maps plus a cubic term that also vanishes at xstar.
std::pair<Operator, Operator> common_fp_pair(SplitMix64& rng, const Eigen::VectorXd& xstar) {
    const Eigen::Index d = xstar.size();
    const Eigen::MatrixXd As = 0.8 * ht::gaussian_matrix(rng, d, d) / std::sqrt(double(d));
    const Eigen::MatrixXd Ad = 0.8 * ht::gaussian_matrix(rng, d, d) / std::sqrt(double(d));
    Operator Ts{d, "ts", [As, xstar](const Eigen::VectorXd& x) {
                    const Eigen::VectorXd dev = x - xstar;
                    return Eigen::VectorXd(xstar + As * dev);
                }};
    Operator Td{d, "td", [Ad, xstar](const Eigen::VectorXd& x) {
                    const Eigen::VectorXd dev = x - xstar;
                    return Eigen::VectorXd(xstar + Ad * dev + dev * dev.squaredNorm());
                }};
    return {std::move(Ts), std::move(Td)};
}

} // namespace

TEST_CASE("gag preserves a common fixed point exactly") {
    SplitMix64 rng(35);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::VectorXd xstar = ht::gaussian_vector(rng, 6);
        auto [Ts, Td] = common_fp_pair(rng, xstar);
        GuidanceParams params;
        params.lambda = rng.next_uniform(0.0, 12.0);
        params.zeta = 0.5 * rng.next_index(3);
        params.eta = (rep % 3 == 0) ? GuidanceParams::unbounded_eta()
                                    : rng.next_uniform(1.0, 15.0);
        const Eigen::VectorXd out = gag_step(Ts, Td, xstar, params);
        CHECK((out - xstar).norm() < 1e-12);
    }
}

TEST_CASE("gag reduces to the sparse operator at lambda 0") {
    SplitMix64 rng(36);
    const Eigen::VectorXd xstar = ht::gaussian_vector(rng, 4);
    auto [Ts, Td] = common_fp_pair(rng, xstar);
    const Eigen::VectorXd x = ht::gaussian_vector(rng, 4);
    GuidanceParams params;
    params.lambda = 0.0;
    const Eigen::VectorXd out = gag_step(Ts, Td, x, params);
    CHECK((out - Ts(x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gag rescaling caps the guidance term exactly") {
    // Sparse output [10, 0]; residual 30 along it; eta 15 halves the term.
    Operator Ts{2, "const-s", [](const Eigen::VectorXd&) {
                    Eigen::VectorXd v(2);
                    v << 10, 0;
                    return v;
                }};
    Operator Td{2, "const-d", [](const Eigen::VectorXd&) {
                    Eigen::VectorXd v(2);
                    v << -20, 0;
                    return v;
                }};
    GuidanceParams params;
    params.lambda = 1.0;
    params.zeta = 0.0;
    params.eta = 15.0;
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd out = gag_step(Ts, Td, x, params);
    CHECK((out - Ts(x)).norm() == doctest::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("gag reduction to plain extrapolation at zeta 1, unbounded eta") {
    SplitMix64 rng(37);
    const Eigen::VectorXd xstar = ht::gaussian_vector(rng, 5);
    auto [Ts, Td] = common_fp_pair(rng, xstar);
    const Eigen::VectorXd x = ht::gaussian_vector(rng, 5);
    GuidanceParams params;
    params.lambda = 3.25;
    params.zeta = 1.0;
    params.eta = GuidanceParams::unbounded_eta();
    const Eigen::VectorXd out = gag_step(Ts, Td, x, params);
    const Eigen::VectorXd s = Ts(x);
    const Eigen::VectorXd expected = s + params.lambda * (s - Td(x));
    CHECK((out - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonal error") {
    Eigen::VectorXd x(2), xs(2), d(2);
    x << 1, 1;
    xs << 0, 0;
    d << 1, 0;
    CHECK(orthogonal_error(x, xs, d) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(orthogonal_error(xs, xs, d) == 0.0);
    CHECK(orthogonal_error(3.0 * d, xs, d) <= 1e-15);
    CHECK(orthogonal_error(x, xs, Eigen::VectorXd::Zero(2)) ==
          doctest::Approx(x.norm()).epsilon(1e-14));
}

TEST_CASE("gag iteration from the fixed point stays put") {
    SplitMix64 rng(38);
    Eigen::VectorXd g = ht::gaussian_vector(rng, 6);
    g.normalize();
    const SyntheticWeakContraction bed{0.9, 0.05, g, g, 1.0};
    GuidanceParams params;
    params.lambda = 5.0;
    const IterationTrace t = gag_iterate(bed.sparse_operator(), bed.dense_operator(),
                                         bed.fixed_point, params, bed.fixed_point,
                                         1e-10, 100);
    CHECK(t.converged);
    CHECK(t.iterations_used == 0);
    for (double u : t.ortho_errors) CHECK(u == 0.0);
}

TEST_CASE("synthetic weak contraction: orthogonal error decreases to zero") {
    SplitMix64 rng(39);
    Eigen::VectorXd g = ht::gaussian_vector(rng, 8);
    g.normalize();
    Eigen::VectorXd w = ht::gaussian_vector(rng, 8);
    w -= w.dot(g) * g;
    w *= 0.1 / w.norm();
    const SyntheticWeakContraction bed{0.9, 0.05, g, g, 1.0};
    for (double lambda : {0.0, 1.0, 5.0, 10.0}) {
        GuidanceParams params;
        params.lambda = lambda;
        params.zeta = 0.0;
        const IterationTrace t =
            gag_iterate(bed.sparse_operator(), bed.dense_operator(),
                        bed.fixed_point + w, params, bed.fixed_point, 1e-8, 400);
        CHECK(t.converged);
        REQUIRE(t.ortho_errors.size() >= 2);
        for (std::size_t i = 0; i + 1 < t.ortho_errors.size(); ++i) {
            CHECK(t.ortho_errors[i + 1] < t.ortho_errors[i]);
        }
        CHECK(t.ortho_errors.back() < 1e-6);
    }
}

TEST_CASE("orthogonal kick with zeta 1 breaks monotonicity") {
    SplitMix64 rng(40);
    Eigen::VectorXd g = ht::gaussian_vector(rng, 8);
    g.normalize();
    Eigen::VectorXd w = ht::gaussian_vector(rng, 8);
    w -= w.dot(g) * g;
    w *= 0.1 / w.norm();
    const SyntheticWeakContraction kicked{0.9, 0.05, g, g, 1.2};
    GuidanceParams params;
    params.lambda = 10.0;
    params.zeta = 1.0;
    params.eta = GuidanceParams::unbounded_eta();
    const IterationTrace t =
        gag_iterate(kicked.sparse_operator(), kicked.dense_operator(),
                    kicked.fixed_point + w, params, kicked.fixed_point, 1e-8, 20);
    bool grew = false;
    for (std::size_t i = 0; i + 1 < t.ortho_errors.size(); ++i) {
        if (t.ortho_errors[i + 1] > t.ortho_errors[i]) grew = true;
    }
    CHECK(grew);

    // zeta = 0 tames the same kicked pair
    params.zeta = 0.0;
    params.eta = 15.0;
    const IterationTrace t0 =
        gag_iterate(kicked.sparse_operator(), kicked.dense_operator(),
                    kicked.fixed_point + w, params, kicked.fixed_point, 1e-8, 400);
    CHECK(t0.converged);
    CHECK(t0.ortho_errors.back() < 1e-6);
}

TEST_CASE("distinct attractors never reach a stationary state") {
    // Contrast case: extrapolating between operators that do NOT share a
    // fixed point. Each map alone converges; the extrapolated iteration
    // keeps being pushed by the never-vanishing residual.
    SplitMix64 rng(60);
    const Eigen::VectorXd a = ht::gaussian_vector(rng, 4);
    const Eigen::VectorXd b = a + ht::gaussian_vector(rng, 4);
    const Operator Ta{4, "to-a", [a](const Eigen::VectorXd& x) {
                          return Eigen::VectorXd(a + 0.5 * (x - a));
                      }};
    const Operator Tb{4, "to-b", [b](const Eigen::VectorXd& x) {
                          return Eigen::VectorXd(b + 0.5 * (x - b));
                      }};
    CHECK(picard_iterate(Ta, b, 1e-10, 200).converged);
    CHECK(picard_iterate(Tb, a, 1e-10, 200).converged);

    GuidanceParams params;
    params.lambda = 10.0;
    params.zeta = 1.0;
    params.eta = GuidanceParams::unbounded_eta();
    const IterationTrace t =
        gag_iterate(Ta, Tb, ht::gaussian_vector(rng, 4), params, std::nullopt, 1e-10, 500);
    CHECK_FALSE(t.converged);
    CHECK(t.residual_norms.back() > 1e-3);
}

TEST_CASE("synthetic weak contraction validates its construction") {
    Eigen::VectorXd g(2);
    g << 1, 0;
    CHECK_THROWS_AS((SyntheticWeakContraction{1.0, 0.05, g, g, 1.0}), invalid_input);
    CHECK_THROWS_AS((SyntheticWeakContraction{0.9, 0.2, g, g, 1.0}), invalid_input);
    CHECK_THROWS_AS((SyntheticWeakContraction{0.9, 0.05, g, Eigen::VectorXd::Zero(2), 1.0}),
                    invalid_input);
}

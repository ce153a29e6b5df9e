#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hopgag/probability.hpp"
#include "oracles.hpp"

using namespace hopgag;
namespace ht = hopgag::testing;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

} // namespace

TEST_CASE("alpha domain") {
    CHECK_NOTHROW(Alpha{1.0});
    CHECK_NOTHROW(Alpha{2.0});
    CHECK_THROWS_AS(Alpha{0.99}, std::domain_error);
    CHECK_THROWS_AS(Alpha{2.01}, std::domain_error);
}

TEST_CASE("softmax closed forms") {
    const Eigen::VectorXd u = softmax(vec({0, 0, 0}), 1.0);
    for (int i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    const Eigen::VectorXd half = softmax(vec({5, 5}), 2.0);
    CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-14));

    const Eigen::VectorXd thirds = softmax(vec({std::log(2.0), 0.0}), 1.0);
    CHECK(thirds[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
    CHECK(thirds[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("softmax rejects bad input") {
    Eigen::VectorXd z = vec({1.0, 2.0});
    CHECK_THROWS_AS(softmax(z, 0.0), invalid_input);
    CHECK_THROWS_AS(softmax(z, -1.0), invalid_input);
    z[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(softmax(z, 1.0), invalid_input);
    z[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax(z, 1.0), invalid_input);
}

TEST_CASE("sparsemax matches frozen oracle values") {
    // brute-force projection of [2,0] is [1,0]; of [0.5,0] is [0.75,0.25]
    const Eigen::VectorXd a = alpha_entmax(vec({2, 0}), Alpha{2.0}, 1.0);
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(a[1] == 0.0);

    const Eigen::VectorXd b = alpha_entmax(vec({0.5, 0}), Alpha{2.0}, 1.0);
    CHECK(b[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("sparsemax equals brute-force projection on random inputs") {
    SplitMix64 rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_index(8));
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.next_uniform(-4.0, 4.0);
        const double beta = rng.next_uniform(0.2, 4.0);
        const Eigen::VectorXd p = alpha_entmax(z, Alpha{2.0}, beta);
        const Eigen::VectorXd q = ht::brute_force_simplex_projection(beta * z);
        CHECK((p - q).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("constant logits map to uniform for any alpha") {
    for (double a : {1.0, 1.2, 1.5, 1.8, 2.0}) {
        const Eigen::VectorXd p = alpha_entmax(vec({0.7, 0.7, 0.7, 0.7}), Alpha{a}, 2.0);
        for (int i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-10));
    }
}

TEST_CASE("alpha = 1 entmax is softmax") {
    SplitMix64 rng(12);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::VectorXd z = ht::gaussian_vector(rng, 6);
        const double beta = rng.next_uniform(0.1, 5.0);
        const Eigen::VectorXd p = alpha_entmax(z, Alpha{1.0}, beta);
        const Eigen::VectorXd q = softmax(z, beta);
        CHECK((p - q).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("1.5-entmax closed form agrees with bisection") {
    SplitMix64 rng(13);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_index(9));
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.next_uniform(-5.0, 5.0);
        const double beta = rng.next_uniform(0.2, 4.0);
        const Eigen::VectorXd exact = alpha_entmax(z, Alpha{1.5}, beta);
        const Eigen::VectorXd iter = alpha_entmax_bisection(z, Alpha{1.5}, beta, 1e-10);
        CHECK((exact - iter).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("softmax limit of entmax near alpha = 1") {
    SplitMix64 rng(14);
    for (int rep = 0; rep < 30; ++rep) {
        Eigen::VectorXd z(5);
        for (int i = 0; i < 5; ++i) z[i] = rng.next_uniform(-5.0, 5.0);
        const double beta = rng.next_uniform(0.2, 2.0);
        const Eigen::VectorXd near = alpha_entmax(z, Alpha{1.0 + 1e-4}, beta);
        const Eigen::VectorXd soft = softmax(z, beta);
        CHECK((near - soft).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("threshold and support closed forms") {
    const ThresholdReport a = threshold_and_support(vec({2, 0}), Alpha{2.0}, 1.0);
    CHECK(a.tau == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(a.kappa == 1);

    const ThresholdReport b = threshold_and_support(vec({0, 0, 0}), Alpha{2.0}, 1.0);
    CHECK(b.tau == doctest::Approx(-1.0 / 3).epsilon(1e-14));
    CHECK(b.kappa == 3);

    // sparser at alpha = 2 than at alpha = 1.5
    const ThresholdReport s2 = threshold_and_support(vec({3, 1, 0}), Alpha{2.0}, 1.0);
    const ThresholdReport s15 = threshold_and_support(vec({3, 1, 0}), Alpha{1.5}, 1.0);
    CHECK(s2.kappa <= s15.kappa);
}

TEST_CASE("threshold report is consistent with the probabilities") {
    SplitMix64 rng(15);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_index(7));
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.next_uniform(-3.0, 3.0);
        const double beta = rng.next_uniform(0.2, 4.0);
        const double alpha = rng.next_uniform(1.05, 2.0);
        const Eigen::VectorXd p = alpha_entmax(z, Alpha{alpha}, beta);
        const ThresholdReport rep_ts = threshold_and_support(z, Alpha{alpha}, beta);
        CHECK(rep_ts.kappa == static_cast<int>((p.array() > 0.0).count()));
        // reconstruct from tau and compare
        const double inv = 1.0 / (alpha - 1.0);
        for (int i = 0; i < n; ++i) {
            const double d = (alpha - 1.0) * beta * z[i] - rep_ts.tau;
            const double q = d > 0.0 ? std::pow(d, inv) : 0.0;
            CHECK(std::abs(q - p[i]) <= 1e-7);
        }
    }
}

TEST_CASE("monotone sparsity of the support in alpha") {
    SplitMix64 rng(16);
    const std::vector<double> grid = {1.1, 1.3, 1.5, 1.7, 2.0};
    for (int rep = 0; rep < 60; ++rep) {
        Eigen::VectorXd z = ht::gaussian_vector(rng, 8);
        int prev = 9;
        for (double a : grid) {
            const int kappa = threshold_and_support(z, Alpha{a}, 1.0).kappa;
            CHECK(kappa <= prev);
            prev = kappa;
        }
    }
}

TEST_CASE("tsallis entropy closed forms") {
    CHECK(tsallis_entropy(vec({1, 0}), Alpha{2.0}) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(tsallis_entropy(vec({0.5, 0.5}), Alpha{2.0}) == doctest::Approx(0.25).epsilon(1e-14));
    // (1/(1.5*0.5)) * 2 * (0.5 - 0.5^1.5)
    const double expected = (1.0 / (1.5 * 0.5)) * 2.0 * (0.5 - std::pow(0.5, 1.5));
    CHECK(tsallis_entropy(vec({0.5, 0.5}), Alpha{1.5}) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(tsallis_entropy(vec({0.5, 0.5}), Alpha{1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(tsallis_entropy(vec({0.5, 0.4}), Alpha{2.0}), invalid_input);
}

TEST_CASE("tsallis conjugate closed forms") {
    CHECK(tsallis_conjugate(vec({5}), Alpha{1.3}, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(tsallis_conjugate(vec({2, 0}), Alpha{2.0}, 1.0) == doctest::Approx(2.0).epsilon(1e-12));

    // Value at z = [0,0]: the maximizer is uniform, giving 0 + H_2(uniform).
    const Eigen::VectorXd pstar = ht::brute_force_simplex_projection(vec({0, 0}));
    const double expected = ht::tsallis_entropy_direct(pstar, 2.0);
    CHECK(expected == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(tsallis_conjugate(vec({0, 0}), Alpha{2.0}, 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));

    // alpha = 1 reduces to lse
    SplitMix64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd z = ht::gaussian_vector(rng, 5);
        const double beta = rng.next_uniform(0.3, 3.0);
        CHECK(tsallis_conjugate(z, Alpha{1.0}, beta) ==
              doctest::Approx(log_sum_exp(beta, z)).epsilon(1e-12));
    }
}

TEST_CASE("Fenchel-Young inequality with equality at the maximizer") {
    SplitMix64 rng(18);
    for (double alpha : {1.0, 1.5, 2.0, 1.3}) {
        const Eigen::VectorXd z = ht::gaussian_vector(rng, 6);
        const double beta = rng.next_uniform(0.3, 3.0);
        const double conj = tsallis_conjugate(z, Alpha{alpha}, beta);
        for (int rep = 0; rep < 100; ++rep) {
            const Eigen::VectorXd p = ht::random_simplex_point(rng, 6);
            const double value = p.dot(z) + tsallis_entropy(p, Alpha{alpha}) / beta;
            CHECK(conj >= value - 1e-10);
        }
        const Eigen::VectorXd pstar = alpha_entmax(z, Alpha{alpha}, beta);
        const double at_star = pstar.dot(z) + tsallis_entropy(pstar, Alpha{alpha}) / beta;
        CHECK(conj == doctest::Approx(at_star).epsilon(1e-12));
    }
}

TEST_CASE("simplex, translation and permutation invariants") {
    SplitMix64 rng(19);
    for (int rep = 0; rep < 150; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_index(7));
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.next_uniform(-5.0, 5.0);
        const double beta = rng.next_uniform(0.1, 8.0);
        const double alpha = 1.0 + rng.next_double();
        const Eigen::VectorXd p = alpha_entmax(z, Alpha{alpha}, beta);

        CHECK(p.minCoeff() >= 0.0);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);

        const double c = rng.next_uniform(-10.0, 10.0);
        const Eigen::VectorXd shifted =
            alpha_entmax(z.array() + c, Alpha{alpha}, beta);
        CHECK((shifted - p).cwiseAbs().maxCoeff() <= 1e-8);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.next_index(static_cast<std::uint64_t>(i + 1))]);
        }
        Eigen::VectorXd zp(n);
        for (int i = 0; i < n; ++i) zp[i] = z[perm[i]];
        const Eigen::VectorXd pp = alpha_entmax(zp, Alpha{alpha}, beta);
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(pp[i] - p[perm[i]]) <= 1e-10);
        }
    }
}

TEST_CASE("bisection reports non-convergence with the bracket width") {
    // The bracket floors at the ULP spacing around tau, so a sub-denormal
    // tolerance is unreachable.
    try {
        alpha_entmax(vec({1, 0, -2}), Alpha{1.7}, 1.0, 1e-300);
        FAIL("expected numerical_error");
    } catch (const numerical_error& e) {
        CHECK(e.last_width() > 0.0);
        CHECK(e.last_width() < 1e-12);
    }
    CHECK_THROWS_AS(alpha_entmax_bisection(vec({1, 0}), Alpha{1.0}, 1.0),
                    std::domain_error);
}

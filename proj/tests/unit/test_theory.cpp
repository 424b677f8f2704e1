#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tte/error.hpp"
#include "tte/theory.hpp"

using namespace tte::theory;

TEST_CASE("decomposition gain: k = 1 has no gap") {
    DecompositionSimConfig c;
    c.k = 1;
    c.op_marginals = {0.3};
    c.num_queries = 20000;
    const auto g = simulate_decomposition_gain(c);
    CHECK(g.atomic_sum == g.k_times_mono);
    CHECK(g.gap == 0.0);
}

TEST_CASE("decomposition gain: all-or-subset with no partial queries") {
    DecompositionSimConfig c;
    c.joint_model = JointModel::AllOrSubset;
    c.p_partial = 0.0;
    c.num_queries = 20000;
    const auto g = simulate_decomposition_gain(c);
    CHECK(g.gap == 0.0);
    CHECK(g.atomic_sum == 3.0 * 20000.0);
}

TEST_CASE("decomposition gain: independent marginals") {
    DecompositionSimConfig c;
    c.seed = 7;
    const auto g = simulate_decomposition_gain(c);
    // E[sum X_i] = 1.5 M, k E[X_T] = 3 * 0.125 M
    CHECK(g.atomic_sum == doctest::Approx(1.5 * 1e5).epsilon(0.01));
    CHECK(g.k_times_mono == doctest::Approx(0.375 * 1e5).epsilon(0.03));
    CHECK(g.gap > 5.0 * g.gap_stderr);
    CHECK(g.gap_stderr > 0.0);
}

TEST_CASE("decomposition gain is never significantly negative and is deterministic") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
        DecompositionSimConfig c;
        c.k = 1 + static_cast<int>(rng() % 5);
        c.op_marginals.clear();
        for (int i = 0; i < c.k; ++i) c.op_marginals.push_back(u(rng));
        c.joint_model = rng() % 2 ? JointModel::Independent : JointModel::AllOrSubset;
        c.p_partial = u(rng);
        c.num_queries = 2000;
        c.seed = rng();
        const auto g = simulate_decomposition_gain(c);
        CHECK(g.gap >= -3.0 * g.gap_stderr);
        CHECK(g.gap >= 0.0);  // X_i >= X_T holds per query
        const auto again = simulate_decomposition_gain(c);
        CHECK(again.gap == g.gap);
        CHECK(again.atomic_sum == g.atomic_sum);
    }
}

TEST_CASE("decomposition config validation") {
    DecompositionSimConfig c;
    c.op_marginals = {0.5, 0.5};
    CHECK_THROWS_AS(c.validate(), tte::Error);
    c = {};
    c.op_marginals[1] = 1.5;
    CHECK_THROWS_AS(c.validate(), tte::Error);
    c = {};
    c.num_queries = 0;
    CHECK_THROWS_AS(c.validate(), tte::Error);
}

TEST_CASE("retrieval quadrature examples") {
    const Gaussian r{0.7, 0.1}, n{0.4, 0.1};
    CHECK(retrieval_success_quadrature(r, n, 1) == 1.0);
    CHECK(retrieval_success_quadrature(r, r, 2) == doctest::Approx(0.5).epsilon(1e-9));
    // identical distributions: 1/N by exchangeability
    for (std::uint64_t N : {3u, 8u, 50u}) {
        CHECK(retrieval_success_quadrature(n, n, N) == doctest::Approx(1.0 / static_cast<double>(N)).epsilon(1e-7));
    }
    // N = 2: P(X_r > X_n) = Phi((mu_r - mu_n) / sqrt(s_r^2 + s_n^2))
    const double z = 0.3 / std::sqrt(0.02);
    CHECK(retrieval_success_quadrature(r, n, 2) == doctest::Approx(0.5 * std::erfc(-z / std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("retrieval curve decreases and Monte Carlo agrees with quadrature") {
    RetrievalNoiseModel m;
    m.n_values = {1, 2, 4, 8, 16, 32};
    m.samples = 50000;
    m.seed = 3;
    const auto curve = retrieval_success_curve(m);
    REQUIRE(curve.size() == 6);
    CHECK(curve[0].p_quad == 1.0);
    CHECK(curve[0].p_mc == 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].p_quad < curve[i - 1].p_quad);
    for (const auto& pt : curve) {
        const double sigma = std::sqrt(pt.p_quad * (1 - pt.p_quad) / static_cast<double>(m.samples));
        CHECK(std::fabs(pt.p_mc - pt.p_quad) <= 4.0 * sigma + 1e-12);
    }
    const auto again = retrieval_success_curve(m);
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(again[i].p_mc == curve[i].p_mc);

    RetrievalNoiseModel bad;
    bad.noise.stddev = 0.0;
    CHECK_THROWS_AS(bad.validate(), tte::Error);
    bad = {};
    bad.n_values = {0};
    CHECK_THROWS_AS(bad.validate(), tte::Error);
}

TEST_CASE("growth: worked equilibrium") {
    GrowthParams p;
    CHECK(p.l_star() == doctest::Approx(5000.0 / 60.0).epsilon(1e-15));
    GrowthParams plateau;
    plateau.horizon = 200.0;
    plateau.dt = 1e-2;
    plateau.record_stride = 1000;
    const auto r = library_growth(plateau);
    CHECK(r.trajectory.back().t == 200.0);
    CHECK(std::fabs(r.trajectory.back().l_numeric - 5000.0 / 60.0) < 1e-6);
}

TEST_CASE("growth: equilibrium start stays put") {
    GrowthParams p;
    p.l0 = p.l_star();
    p.record_stride = 500;
    const auto r = library_growth(p);
    for (const auto& s : r.trajectory) {
        CHECK(std::fabs(s.l_numeric - p.l_star()) < 1e-9);
        CHECK(std::fabs(s.l_closed - p.l_star()) < 1e-9);
    }
}

TEST_CASE("growth: convergence and closed-form agreement") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> g(0.5, 50), pr(0.01, 1), k(10, 400);
    for (int trial = 0; trial < 10; ++trial) {
        GrowthParams p;
        p.lambda_g = g(rng);
        p.lambda_p = pr(rng);
        p.k_cap = k(rng);
        p.record_stride = 1000;
        for (double l0 : {0.0, 2.0 * p.l_star()}) {
            p.l0 = l0;
            const auto r = library_growth(p);
            CHECK(r.trajectory.front().t == 0.0);
            CHECK(r.trajectory.back().t == doctest::Approx(20.0 / p.b()).epsilon(1e-15));
            CHECK(std::fabs(r.trajectory.back().l_numeric - r.l_star) < 1e-6);
            CHECK(r.max_abs_error <= 1e-6);
            for (const auto& s : r.trajectory) {
                CHECK(s.l_closed == doctest::Approx(r.l_star + (l0 - r.l_star) * std::exp(-p.b() * s.t)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("growth validation and csv") {
    GrowthParams p;
    p.lambda_p = 0.0;
    CHECK_THROWS_AS(p.validate(), tte::Error);
    p = {};
    p.horizon = 1.0;
    p.dt = 2.0;
    CHECK_THROWS_AS(p.validate(), tte::Error);

    p = {};
    p.horizon = 1.0;
    p.dt = 0.5;
    std::ostringstream out;
    write_csv(out, library_growth(p));
    CHECK(out.str().starts_with("t,L_numeric,L_closed\n0,0,0\n"));
    std::ostringstream rc;
    write_csv(rc, std::vector<RetrievalPoint>{{1, 1.0, 1.0}});
    CHECK(rc.str() == "N,p_mc,p_quad\n1,1,1\n");
}

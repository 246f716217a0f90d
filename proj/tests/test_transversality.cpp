#include "ifsl/transversality.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ifsl;

namespace {

// affine family with a roomy ambient interval so the ball fits
TranslationFamily affine_family(const std::vector<std::pair<Q, Q>>& rt, const Q& radius = Q(1, 2)) {
    std::vector<IfsMap> maps;
    Q lo = 1, hi = 0;
    for (const auto& [r, t] : rt) {
        maps.emplace_back(r, t);
        lo = qmin(lo, qabs(r));
        hi = qmax(hi, qabs(r));
    }
    Q beta = lo == hi ? lo / 2 : lo;
    Q rho = hi;
    return TranslationFamily(Ifs(maps, {Q(-3), Q(4)}, beta, rho), std::vector<Q>(rt.size(), Q(0)), radius);
}

TranslationFamily cantor_family() { return affine_family({{Q(1, 3), 0}, {Q(1, 3), Q(2, 3)}}); }

// S_1(x) = x/3 + x^2/20 on [-2, 3]
TranslationFamily curved_family() {
    std::vector<IfsMap> maps{IfsMap(Q(1, 3), 0, {PolyPiece::poly({0, 0, Q(1, 20)})}), IfsMap(Q(1, 3), Q(2, 3))};
    return TranslationFamily(Ifs(maps, {Q(-2), Q(3)}, Q(1, 10), Q(7, 10)), {0, 0}, Q(1, 2));
}

InfiniteWordSpec random_word(std::mt19937& rng, int m) {
    std::uniform_int_distribution<int> len(0, 4), sym(1, m);
    Word pre(static_cast<std::size_t>(len(rng))), per(static_cast<std::size_t>(1 + len(rng)));
    for (auto& s : pre) s = sym(rng);
    for (auto& s : per) s = sym(rng);
    return InfiniteWordSpec(pre, per);
}

// truncated series sum_{l : w_l = z} prod_{k<l} r_{w_k}, straight from the definition
double series_oracle(const std::vector<double>& r, const InfiniteWordSpec& w, int z, int terms) {
    double s = 0, p = 1;
    for (int l = 0; l < terms; ++l) {
        if (w.at(static_cast<std::size_t>(l)) == z) s += p;
        p *= r[static_cast<std::size_t>(w.at(static_cast<std::size_t>(l)) - 1)];
    }
    return s;
}

}  // namespace

TEST(Family, BallMustFitInX) {
    Ifs tight = affine_ifs({{Q(1, 3), 0}, {Q(1, 3), Q(2, 3)}});
    EXPECT_THROW(TranslationFamily(tight, {0, 0}, Q(1, 10)), ConstructionError);
    auto f = cantor_family();
    EXPECT_THROW(f.set_lambda({Q(1), 0}), PreconditionError);
    f.set_lambda({Q(1, 4), Q(-1, 4)});
    EXPECT_EQ(f.current()[1].t, Q(1, 4));
}

TEST(GradientBound, Examples) {
    auto c = lemma1_check(cantor_family());
    ASSERT_TRUE(c);
    EXPECT_EQ(c->global, Q(1, 3));
    EXPECT_EQ(c->zeta_candidate, Q(1, 6));
    EXPECT_FALSE(lemma1_check(affine_family({{Q(3, 5), 0}, {Q(1, 2), Q(1, 5)}})));
    auto m = lemma1_check(affine_family({{Q(1, 2), 0}, {Q(1, 3), 0}, {Q(1, 3), Q(2, 3)}}));
    ASSERT_TRUE(m);
    EXPECT_EQ(m->pair_bounds.size(), 3u);
    EXPECT_EQ(m->global, Q(1, 6));
    EXPECT_EQ(m->pair_bounds[2].bound, Q(1, 3));
}

TEST(GradientBound, ConformalUsesCertifiedSup) {
    auto f = curved_family();
    auto c = lemma1_check(f);
    ASSERT_TRUE(c);
    // sup of 1/3 + x/10 on [-2, 3] is 19/30
    EXPECT_GE(f.rho_star()[0], Q(19, 30));
    EXPECT_LE(c->global, Q(1, 30));
}

TEST(Gradient, Examples) {
    auto f = cantor_family();
    auto g = projection_gradient(f, InfiniteWordSpec({}, {1}));
    ASSERT_TRUE(g.exact);
    EXPECT_EQ((*g.exact)[0], Q(3, 2));
    EXPECT_EQ((*g.exact)[1], 0);
    auto h = projection_gradient(f, InfiniteWordSpec({}, {1, 2}));
    EXPECT_EQ((*h.exact)[0], Q(9, 8));
    EXPECT_EQ((*h.exact)[1], Q(3, 8));
}

TEST(Gradient, ClosedFormMatchesSeries) {
    std::mt19937 rng(5);
    std::vector<std::pair<Q, Q>> rt{{Q(1, 2), 0}, {Q(-1, 3), Q(1, 3)}, {Q(1, 4), Q(2, 3)}};
    auto f = affine_family(rt, Q(1, 10));
    std::vector<double> r{0.5, -1.0 / 3, 0.25};
    for (int trial = 0; trial < 50; ++trial) {
        auto w = random_word(rng, 3);
        auto g = projection_gradient(f, w);
        for (int z = 1; z <= 3; ++z) EXPECT_NEAR(g.value[z - 1], series_oracle(r, w, z, 80), 1e-14);
    }
}

TEST(Ez, Examples) {
    auto f = cantor_family();
    auto e = ez_values(f, InfiniteWordSpec({}, {1}), InfiniteWordSpec({}, {2}));
    EXPECT_DOUBLE_EQ(e.e1, 0.5);
    EXPECT_DOUBLE_EQ(e.e2, -0.5);
    EXPECT_DOUBLE_EQ(e.abs_ep, 0.5);
    EXPECT_TRUE(e.chain_holds);
    EXPECT_LE(e.abs_ep, 2.0 / 3);

    auto x = ez_values(f, InfiniteWordSpec({1}, {2}), InfiniteWordSpec({2}, {1}), 30);
    EXPECT_TRUE(x.chain_holds);
    EXPECT_LE(x.abs_ep, 2.0 / 3);

    auto tiny = affine_family({{Q(1, 1000), 0}, {Q(1, 1000), Q(1, 2)}});
    auto t = ez_values(tiny, InfiniteWordSpec({}, {1, 2}), InfiniteWordSpec({2}, {2, 1}));
    EXPECT_LE(t.abs_ep, 2e-3);
    EXPECT_THROW(ez_values(f, InfiniteWordSpec({}, {1}), InfiniteWordSpec({1}, {2})), PreconditionError);
}

// E_z identities, telescoping bound and the gradient lower bound on random pairs.
TEST(Ez, RandomizedChain) {
    std::mt19937 rng(17);
    for (auto fam : {cantor_family(), affine_family({{Q(1, 2), 0}, {Q(1, 3), 0}, {Q(-1, 3), Q(1)}}), curved_family()}) {
        auto cert = lemma1_check(fam);
        ASSERT_TRUE(cert);
        int checked = 0;
        while (checked < 100) {
            auto i = random_word(rng, fam.m()), j = random_word(rng, fam.m());
            if (i.first() == j.first()) continue;
            ++checked;
            auto e = ez_values(fam, i, j);
            auto gi = projection_gradient(fam, i), gj = projection_gradient(fam, j);
            const int a = i.first() - 1, b = j.first() - 1;
            EXPECT_NEAR(gi.value[a] - gj.value[a], 1 + e.e1, 1e-12);
            EXPECT_NEAR(gi.value[b] - gj.value[b], -1 + e.e2, 1e-12);
            EXPECT_TRUE(e.chain_holds);
            EXPECT_LE(e.telescoped, e.rho_sum + 2 * e.tail + 1e-12);
            const int p = e.p - 1;
            double lower = 1 - fam.rho_star()[a].get_d() - fam.rho_star()[b].get_d();
            EXPECT_GE(std::abs(gi.value[p] - gj.value[p]), lower - 2 * e.tail - 1e-12);
        }
    }
}

TEST(FiniteDifference, CantorFamily) {
    auto f = cantor_family();
    double d = gradient_fd_check(f, InfiniteWordSpec({}, {1}), InfiniteWordSpec({}, {2}), 1e-4);
    EXPECT_LT(d, 1e-6);
    EXPECT_THROW(gradient_fd_check(f, InfiniteWordSpec({}, {1}), InfiniteWordSpec({}, {2}), 1.0), PreconditionError);
}

TEST(FiniteDifference, AffineFamiliesAreExact) {
    std::mt19937 rng(23);
    auto f = affine_family({{Q(1, 2), 0}, {Q(1, 3), 0}, {Q(-1, 3), Q(1)}});
    for (int trial = 0; trial < 30; ++trial) {
        auto i = random_word(rng, 3), j = random_word(rng, 3);
        EXPECT_LT(gradient_fd_check(f, i, j, 1e-3), 1e-9);
    }
}

TEST(FiniteDifference, SecondOrderForCurvedFamily) {
    auto f = curved_family();
    InfiniteWordSpec i({}, {1}), j({2}, {1, 2});
    double d1 = gradient_fd_check(f, i, j, 0.04), d2 = gradient_fd_check(f, i, j, 0.02),
           d3 = gradient_fd_check(f, i, j, 0.01);
    EXPECT_GT(d1, 1e-9);
    EXPECT_NEAR(d1 / d2, 4.0, 0.5);
    EXPECT_NEAR(d2 / d3, 4.0, 0.5);
}

TEST(Projection, AffineInLambda) {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    auto f = affine_family({{Q(1, 2), 0}, {Q(1, 3), 0}, {Q(-1, 3), Q(1)}});
    for (int trial = 0; trial < 100; ++trial) {
        auto w = random_word(rng, 3);
        std::vector<double> a{u(rng), u(rng), u(rng)}, d{u(rng) / 4, u(rng) / 4, u(rng) / 4};
        std::vector<double> p = a, q = a;
        for (int k = 0; k < 3; ++k) {
            p[k] += d[k];
            q[k] -= d[k];
        }
        double second = family_projection(f, p, w) - 2 * family_projection(f, a, w) + family_projection(f, q, w);
        EXPECT_LT(std::abs(second), 1e-12);
    }
}

#include "ifsl/symbolic.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ifsl;

TEST(Shift, FixedPointOfShift) {
    InfiniteWordSpec w({}, {1});
    EXPECT_EQ(shift(w, 5), w);
    EXPECT_TRUE(shift(w, 5).preperiod.empty());
}

TEST(Shift, DropsPreperiodSymbol) {
    InfiniteWordSpec s = shift(InfiniteWordSpec({1, 2}, {3, 1}), 1);
    EXPECT_EQ(s.preperiod, (Word{2}));
    EXPECT_EQ(s.period, (Word{3, 1}));
}

TEST(Shift, RotatesPeriod) {
    InfiniteWordSpec w({1}, {2, 3});
    InfiniteWordSpec s = shift(w, 3);
    EXPECT_TRUE(s.preperiod.empty());
    EXPECT_EQ(s.period, (Word{2, 3}));
    // explicit expansion to depth 6
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(s.at(k), w.at(k + 3));
}

TEST(Shift, CompositionProperty) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(0, 4), sym(1, 3);
    for (int trial = 0; trial < 200; ++trial) {
        Word pre(len(rng)), per(1 + len(rng));
        for (auto& s : pre) s = sym(rng);
        for (auto& s : per) s = sym(rng);
        InfiniteWordSpec w(pre, per);
        for (std::size_t a = 0; a <= 10; ++a)
            for (std::size_t b = 0; b <= 10; ++b) EXPECT_EQ(shift(shift(w, a), b), shift(w, a + b));
    }
}

TEST(Shift, EmptyPeriodRejected) { EXPECT_THROW(InfiniteWordSpec({1}, {}), InputError); }

TEST(Word, DropLast) {
    EXPECT_EQ(drop_last(Word{1, 2, 3}), (Word{1, 2}));
    EXPECT_EQ(drop_last(Word{1}), Word{});
    EXPECT_THROW(drop_last(Word{}), PreconditionError);
    EXPECT_THROW(check_word(Word{1, 4}, 3), InputError);
}

TEST(Moran, HomogeneousLevelTwo) {
    auto M = moran_class({Q(1, 3), Q(1, 3)}, Q(1, 3), 2);
    EXPECT_EQ(M.size(), 4u);
    for (const auto& w : M) EXPECT_EQ(w.size(), 2u);
}

TEST(Moran, UnequalRatios) {
    auto M = moran_class({Q(1, 2), Q(1, 4)}, Q(1, 2), 2);
    std::vector<Word> expect{{1, 1}, {1, 2}, {2}};
    EXPECT_EQ(M, expect);
}

TEST(Moran, MembersBelowRho) {
    std::vector<Q> r{Q(1, 2), Q(1, 3), Q(2, 5)};
    for (const auto& w : moran_class(r, Q(1, 2), 1)) {
        Q p = 1;
        for (int s : w) p *= r[s - 1];
        EXPECT_LE(p, Q(1, 2));
    }
}

// Definition checked against plain enumeration, then the prefix-free cut property.
TEST(Moran, MatchesEnumerationAndCutsEveryWord) {
    std::vector<Q> r{Q(1, 2), Q(1, 3), Q(1, 5)};
    Q rho(1, 2);
    for (int k = 1; k <= 3; ++k) {
        auto M = moran_class(r, rho, k);
        std::set<Word> got(M.begin(), M.end());
        std::set<Word> expect;
        Q cut = qpow(rho, k);
        for (const auto& w : oracle::words_up_to(3, 3 * k)) {
            Q p = 1;
            for (int s : w) p *= r[s - 1];
            Q pm = p / r[w.back() - 1];
            if (p <= cut && cut < pm) expect.insert(w);
        }
        EXPECT_EQ(got, expect) << "k=" << k;
        for (const auto& u : oracle::words_of_length(3, 2 * k)) {
            int hits = 0;
            for (std::size_t n = 1; n <= u.size(); ++n)
                hits += got.count(Word(u.begin(), u.begin() + static_cast<long>(n)));
            EXPECT_EQ(hits, 1);
        }
    }
}

TEST(Moran, NextLevelHasPrefixInPrevious) {
    std::vector<Q> r{Q(1, 2), Q(1, 4), Q(1, 3)};
    for (int k = 1; k <= 4; ++k) {
        auto A = moran_class(r, Q(1, 2), k);
        std::set<Word> prev(A.begin(), A.end());
        for (const auto& w : moran_class(r, Q(1, 2), k + 1)) {
            bool found = false;
            for (std::size_t n = 1; n <= w.size() && !found; ++n)
                found = prev.count(Word(w.begin(), w.begin() + static_cast<long>(n))) > 0;
            EXPECT_TRUE(found);
        }
    }
}

TEST(Moran, BudgetIsEnforced) {
    EXPECT_THROW(moran_class({Q(1, 2), Q(1, 2)}, Q(1, 2), 20, 1000), ResourceLimit);
}

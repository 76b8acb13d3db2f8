#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "rwdvv/trr.hpp"

using namespace rwdvv;

namespace {

FormalSymbol D(std::vector<int> i_side, std::vector<int> j_side) {
    return FormalSymbol::boundary_c(std::move(i_side), std::move(j_side));
}
FormalSymbol RD(std::vector<int> i_side, std::vector<int> j_side) {
    return FormalSymbol::boundary_r(std::move(i_side), std::move(j_side));
}

FormalClass cls(SpaceLabel sp, std::initializer_list<std::pair<FormalSymbol, long long>> terms) {
    FormalClass c(sp);
    for (const auto& [s, x] : terms) c.add_term(s, x);
    return c;
}

} // namespace

TEST_CASE("cotangent integrals via the string-equation formula") {
    CHECK(psi_integral(3, {0, 0, 0}) == 1); // the three-point space is a point
    CHECK(psi_integral(4, {1, 0, 0, 0}) == 1);
    CHECK(psi_integral(5, {1, 1, 0, 0, 0}) == 2);
    CHECK(psi_integral(5, {2, 0, 0, 0, 0}) == 1);
    CHECK(psi_integral(4, {0, 0, 0, 0}) == 0); // degree mismatch integrates to zero
    CHECK(psi_integral(6, {3, 0, 0, 0, 0, 0}) == 1);
    CHECK(psi_integral(6, {1, 1, 1, 0, 0, 0}) == 6);
    CHECK_THROWS_AS(psi_integral(2, {0, 0}), StructuralError);
    CHECK_THROWS_AS(psi_integral(4, {1, 0, 0}), StructuralError);
    CHECK_THROWS_AS(psi_integral(4, {-1, 1, 1, 0}), StructuralError);
}

TEST_CASE("pairing the recursion against cotangent monomials") {
    auto [lhs4, rhs4] = pair_thm1(4, 2, 3, {0, 0, 0, 0});
    CHECK(lhs4 == 1);
    CHECK(rhs4 == 1);

    auto [lhs5a, rhs5a] = pair_thm1(5, 2, 3, {0, 1, 0, 0, 0});
    CHECK(lhs5a == 2);
    CHECK(rhs5a == 2);

    auto [lhs5b, rhs5b] = pair_thm1(5, 2, 3, {1, 0, 0, 0, 0});
    CHECK(lhs5b == 1);
    CHECK(rhs5b == 1);

    CHECK_THROWS_AS(pair_thm1(5, 2, 3, {0, 0, 0, 0, 0}), StructuralError); // degree mismatch
    CHECK_THROWS_AS(pair_thm1(5, 1, 3, {0, 1, 0, 0, 0}), StructuralError);
    CHECK_THROWS_AS(pair_thm1(5, 3, 3, {0, 1, 0, 0, 0}), StructuralError);
}

TEST_CASE("complex pullback rules") {
    // boundary divisors split over the two placements of the new point
    FormalClass c = cls(SpaceLabel::complex_space(4), {{D({1, 2}, {3, 4}), 1}});
    FormalClass pulled = pullback_complex(c);
    FormalClass expected =
        cls(SpaceLabel::complex_space(5), {{D({1, 2, 5}, {3, 4}), 1}, {D({1, 2}, {3, 4, 5}), 1}});
    CHECK(pulled == expected);

    // psi_1 picks up the separating correction
    FormalClass psi = cls(SpaceLabel::complex_space(3), {{FormalSymbol::psi(1), 1}});
    FormalClass ppsi = pullback_complex(psi);
    FormalClass pexp =
        cls(SpaceLabel::complex_space(4), {{FormalSymbol::psi(1), 1}, {D({1, 4}, {2, 3}), -1}});
    CHECK(ppsi == pexp);

    // zero pulls back to zero
    CHECK(pullback_complex(FormalClass(SpaceLabel::complex_space(4))).is_zero());

    // real-space input is rejected
    FormalClass r(SpaceLabel::real_space(1, 2));
    CHECK_THROWS_AS(pullback_complex(r), StructuralError);
    FormalClass with_rd = cls(SpaceLabel::complex_space(4), {{RD({1, 2}, {3, 4}), 1}});
    CHECK_THROWS_AS(pullback_complex(with_rd), StructuralError);
}

TEST_CASE("real pullback rules") {
    // dropping a conjugate pair: same splitting plus the psi correction
    FormalClass psi = cls(SpaceLabel::real_space(1, 1), {{FormalSymbol::psi(1), 1}});
    FormalClass pulled = pullback_real(psi, ForgetMap::ConjugatePair);
    FormalClass expected =
        cls(SpaceLabel::real_space(1, 2), {{FormalSymbol::psi(1), 1}, {RD({1, 2}, {}), -1}});
    CHECK(pulled == expected);

    // dropping a real point: everything pulls back to itself
    FormalClass c = cls(SpaceLabel::real_space(1, 2), {{RD({1, 2}, {}), 3}, {FormalSymbol::psi(1), -2}});
    FormalClass up = pullback_real(c, ForgetMap::RealPoint);
    CHECK(up.space() == SpaceLabel::real_space(2, 2));
    CHECK(up.terms() == c.terms());

    CHECK_THROWS_AS(pullback_real(cls(SpaceLabel::complex_space(4), {}), ForgetMap::ConjugatePair),
                    StructuralError);
}

TEST_CASE("pullbacks are linear") {
    FormalClass x = cls(SpaceLabel::complex_space(4), {{D({1, 2}, {3, 4}), 1}});
    FormalClass y = cls(SpaceLabel::complex_space(4), {{D({1, 3}, {2, 4}), 1}, {FormalSymbol::psi(2), 1}});
    FormalClass lhs = pullback_complex(3 * x + (-2) * y);
    FormalClass rhs = 3 * pullback_complex(x) + (-2) * pullback_complex(y);
    CHECK(lhs == rhs);
}

TEST_CASE("complex recursion derivations match the stated sums") {
    // the four-point space: all three choices of (i, j)
    auto d34 = derive_thm1(4, 3, 4);
    CHECK(d34.match);
    CHECK(d34.derived == cls(SpaceLabel::complex_space(4), {{D({1, 2}, {3, 4}), 1}}));
    auto d24 = derive_thm1(4, 2, 4);
    CHECK(d24.match);
    CHECK(d24.derived == cls(SpaceLabel::complex_space(4), {{D({1, 3}, {2, 4}), 1}}));
    auto d23 = derive_thm1(4, 2, 3);
    CHECK(d23.match);
    CHECK(d23.derived == cls(SpaceLabel::complex_space(4), {{D({1, 4}, {2, 3}), 1}}));

    auto d5 = derive_thm1(5, 2, 3);
    CHECK(d5.match);
    CHECK(d5.derived == cls(SpaceLabel::complex_space(5), {{D({1, 4}, {2, 3, 5}), 1},
                                                           {D({1, 5}, {2, 3, 4}), 1},
                                                           {D({1, 4, 5}, {2, 3}), 1}}));

    auto d3 = derive_thm1(3, 2, 3);
    CHECK(d3.match);
    CHECK(d3.derived.is_zero());

    for (int l = 3; l <= 8; ++l)
        for (int i = 2; i <= l; ++i)
            for (int j = 2; j <= l; ++j) {
                if (i == j) continue;
                CHECK(derive_thm1(l, i, j).match);
            }
}

TEST_CASE("real recursion derivations match the stated sums") {
    auto d12 = derive_thm2(1, 2, Thm2Variant::NoConjugateIndex);
    CHECK(d12.match);
    CHECK(d12.derived == cls(SpaceLabel::real_space(1, 2), {{RD({1, 2}, {}), 1}}));

    auto d03 = derive_thm2(0, 3, Thm2Variant::WithIndex, 2);
    CHECK(d03.match);
    CHECK(d03.derived == cls(SpaceLabel::real_space(0, 3), {{RD({1, 3}, {2}), 1}}));

    auto d02 = derive_thm2(0, 2, Thm2Variant::WithIndex, 2);
    CHECK(d02.match);
    CHECK(d02.derived.is_zero());

    for (int k = 1; k + 2 <= 8; ++k)
        for (int l = 1; k + 2 * l <= 8; ++l) CHECK(derive_thm2(k, l, Thm2Variant::NoConjugateIndex).match);
    for (int k = 0; k + 4 <= 8; ++k)
        for (int l = 2; k + 2 * l <= 8; ++l)
            for (int i = 2; i <= l; ++i) CHECK(derive_thm2(k, l, Thm2Variant::WithIndex, i).match);

    CHECK_THROWS_AS(derive_thm2(0, 2, Thm2Variant::NoConjugateIndex), StructuralError);
    CHECK_THROWS_AS(derive_thm2(1, 1, Thm2Variant::WithIndex, 2), StructuralError);
}

TEST_CASE("eager and lazy empty-divisor normalization agree") {
    for (int l = 3; l <= 7; ++l)
        for (int i = 2; i <= l; ++i)
            for (int j = 2; j <= l; ++j) {
                if (i == j) continue;
                auto eager = derive_thm1(l, i, j, true);
                auto lazy = derive_thm1(l, i, j, false);
                CHECK(eager.derived == lazy.derived);
            }
    for (int k = 1; k + 2 <= 7; ++k)
        for (int l = 1; k + 2 * l <= 7; ++l) {
            auto eager = derive_thm2(k, l, Thm2Variant::NoConjugateIndex, 0, true);
            auto lazy = derive_thm2(k, l, Thm2Variant::NoConjugateIndex, 0, false);
            CHECK(eager.derived == lazy.derived);
        }
}

TEST_CASE("full pairing sweep against the oracle") {
    long long cases = 0;
    for (int l = 4; l <= 8; ++l) {
        std::vector<int> exps(static_cast<size_t>(l), 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == l) {
                if (left != 0) return;
                for (int i = 2; i <= l; ++i)
                    for (int j = 2; j <= l; ++j) {
                        if (i == j) continue;
                        auto [lhs, rhs] = pair_thm1(l, i, j, exps);
                        if (lhs != rhs) {
                            CAPTURE(l, i, j);
                            REQUIRE(lhs == rhs);
                        }
                        ++cases;
                    }
                return;
            }
            for (int e = 0; e <= left; ++e) {
                exps[static_cast<size_t>(pos)] = e;
                rec(pos + 1, left - e);
            }
            exps[static_cast<size_t>(pos)] = 0;
        };
        rec(0, l - 4);
    }
    CHECK(cases > 10000);
}

TEST_CASE("boundary symbols normalize deterministically") {
    // unordered two-component boundaries: the side holding 1 comes first
    CHECK(D({3, 4}, {1, 2}) == D({1, 2}, {3, 4}));
    CHECK(D({2, 1}, {4, 3}).to_string() == "D({1,2},{3,4})");
    // the real boundary is ordered, no side swap
    CHECK_FALSE(RD({2, 3}, {1}) == RD({1}, {2, 3}));
    // empty cycles normalize to zero
    FormalClass c(SpaceLabel::complex_space(4));
    c.add_term(D({1}, {2, 3, 4}), 5);
    CHECK(c.is_zero());
    FormalClass r(SpaceLabel::real_space(0, 2));
    r.add_term(RD({1, 2}, {}), 1); // J empty and k = 0
    CHECK(r.is_zero());
    FormalClass r2(SpaceLabel::real_space(1, 2));
    r2.add_term(RD({1, 2}, {}), 1); // k > 0 keeps it
    CHECK_FALSE(r2.is_zero());
}

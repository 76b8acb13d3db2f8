#include <catch2/catch_amalgamated.hpp>

#include "rwdvv/target.hpp"

using namespace rwdvv;

TEST_CASE("built-in plane model validates cleanly") {
    TargetModel m = p2_model();
    CHECK(m.validate().empty());
    CHECK(m.n_classes() == 3);
    CHECK(m.dmap_apply({3}) == std::vector<int>{6});
    CHECK(m.divisor_pair(1, {5}) == 5);
    // graded involution signs: +1 on even halves of the degree
    CHECK(m.involution_signs == std::vector<int>{1, -1, 1});
}

TEST_CASE("pairing inversion is exact") {
    TargetModel p2 = p2_model();
    RatMatrix inv = p2.inverse_pairing();
    CHECK(inv == p2.pairing); // anti-diagonal of ones is an involution
    CHECK(inv.multiply(p2.pairing) == RatMatrix::identity(3));

    RatMatrix id2 = RatMatrix::identity(2);
    CHECK(id2.inverse() == id2);

    TargetModel p3 = p3_model();
    CHECK(p3.validate().empty());
    RatMatrix inv3 = p3.inverse_pairing();
    CHECK(inv3.multiply(p3.pairing) == RatMatrix::identity(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(inv3(i, j) == (i + j == 3 ? Rational(1) : Rational(0)));

    RatMatrix singular(2, 2);
    singular(0, 0) = 1;
    singular(0, 1) = 2;
    singular(1, 0) = 2;
    singular(1, 1) = 4;
    CHECK_THROWS_AS(singular.inverse(), StructuralError);
}

TEST_CASE("diagonal splitting") {
    auto split = p2_model().diagonal_split();
    REQUIRE(split.terms.size() == 3);
    // 1 x h2 + h x h + h2 x 1
    CHECK(split.terms[0].i == 0);
    CHECK(split.terms[0].j == 2);
    CHECK(split.terms[1].i == 1);
    CHECK(split.terms[1].j == 1);
    CHECK(split.terms[2].i == 2);
    CHECK(split.terms[2].j == 0);
    for (const auto& t : split.terms) CHECK(t.coeff == Rational(1));

    auto split3 = p3_model().diagonal_split();
    CHECK(split3.terms.size() == 4);
    for (const auto& t : split3.terms) {
        CHECK(t.i + t.j == 3);
        CHECK(t.coeff == Rational(1));
    }

    // identity pairing: the diagonal splits along the basis itself
    TargetModel m = p2_model();
    m.name = "idpair";
    m.basis = {{"a", 0}, {"b", 4}};
    m.real_dimension = 4;
    m.pairing = RatMatrix::identity(2);
    m.involution_signs = {1, 1};
    m.divisor_pairing.clear();
    m.c1_pairing.clear();
    m.triple.clear();
    m.graded_involution_signs = false;
    auto si = m.diagonal_split();
    REQUIRE(si.terms.size() == 2);
    CHECK((si.terms[0].i == 0 && si.terms[0].j == 0));
    CHECK((si.terms[1].i == 1 && si.terms[1].j == 1));

    // round-trip: the splitting reassembles to the inverse of the pairing
    TargetModel p2 = p2_model();
    RatMatrix reassembled(3, 3);
    for (const auto& t : p2.diagonal_split().terms) reassembled(t.i, t.j) = t.coeff;
    CHECK(reassembled.multiply(p2.pairing) == RatMatrix::identity(3));
}

TEST_CASE("validation reports every violation") {
    TargetModel m = p2_model();
    m.pairing(0, 0) = 1; // nonzero outside the top degree, and asymmetric vs nothing
    auto v = m.validate();
    bool found = false;
    for (const auto& s : v) found = found || s.find("top degree") != std::string::npos;
    CHECK(found);

    TargetModel m2 = p2_model();
    m2.pairing(0, 2) = 2; // breaks symmetry
    auto v2 = m2.validate();
    found = false;
    for (const auto& s : v2) found = found || s.find("symmetric") != std::string::npos;
    CHECK(found);

    TargetModel m3 = p2_model();
    m3.pairing = RatMatrix(3, 3); // all zero: singular
    auto v3 = m3.validate();
    found = false;
    for (const auto& s : v3) found = found || s.find("singular") != std::string::npos;
    CHECK(found);

    TargetModel m4 = p2_model();
    m4.involution_signs = {1, 1, 1}; // violates the graded rule on h
    auto v4 = m4.validate();
    found = false;
    for (const auto& s : v4) found = found || s.find("graded sign") != std::string::npos;
    CHECK(found);

    TargetModel m5 = p2_model();
    m5.divisor_pairing.clear();
    auto v5 = m5.validate();
    found = false;
    for (const auto& s : v5) found = found || s.find("divisorPairing") != std::string::npos;
    CHECK(found);
}

TEST_CASE("model JSON round-trip") {
    TargetModel m = p2_model();
    Json j = model_to_json(m);
    TargetModel back = model_from_json(j);
    CHECK(back.validate().empty());
    CHECK(model_to_json(back).dump(2) == j.dump(2));
    CHECK(back.phi_phi_twist == m.phi_phi_twist);
    CHECK(back.triple == m.triple);

    Json bad = j;
    bad.erase("pairing");
    CHECK_THROWS_AS(model_from_json(bad), ConfigError);
}

TEST_CASE("dimension rules select the expected strata") {
    TargetModel m = p2_model();
    // complex: 3d - 1 point insertions
    CHECK(m.complex_key_admissible({2}, {0, 0, 5}));
    CHECK_FALSE(m.complex_key_admissible({2}, {0, 0, 4}));
    // real: k + 2l = 3d - 1
    CHECK(m.real_key_admissible({2}, 1, {0, 0, 2}));
    CHECK(m.real_key_admissible({2}, 5, {0, 0, 0}));
    CHECK_FALSE(m.real_key_admissible({2}, 2, {0, 0, 2}));
}

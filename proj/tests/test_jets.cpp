#include <catch2/catch_amalgamated.hpp>

#include "rwdvv/jets.hpp"
#include "rwdvv/wdvv.hpp"

using namespace rwdvv;

namespace {

// Plain quadruple-loop re-expansions of the three residuals, kept
// independent of the library versions on purpose.
Rational brute_r12(const JetInstance<Rational>& jet, int a, int b) {
    Rational acc(0);
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) acc += jet.p3(a, b, i) * jet.g(i, j) * jet.ou(j);
    return acc + jet.o2(a, b) * jet.omega_uu - jet.ou(a) * jet.ou(b);
}

Rational brute_rc(const JetInstance<Rational>& jet, int a, int b, int c, int i) {
    Rational acc(0);
    for (int l = 0; l < jet.n; ++l)
        for (int m = 0; m < jet.n; ++m)
            acc += jet.p3(a, b, l) * jet.g(l, m) * jet.p3(m, c, i) -
                   jet.p3(a, c, l) * jet.g(l, m) * jet.p3(m, b, i);
    return acc;
}

Rational brute_m03(const JetInstance<Rational>& jet, int a, int b, int c) {
    Rational acc(0);
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j)
            acc += jet.p3(a, b, i) * jet.g(i, j) * jet.o2(j, c) -
                   jet.p3(a, c, i) * jet.g(i, j) * jet.o2(j, b);
    return acc + jet.o2(a, b) * jet.ou(c) - jet.o2(a, c) * jet.ou(b);
}

} // namespace

TEST_CASE("jet residual building blocks") {
    auto zero = JetInstance<Rational>::zeroed(3);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) CHECK(r12(zero, a, b) == Rational(0));

    JetRng rng(42);
    auto jet = random_jet(rng, 2);
    // killing the real jet data kills the two-point residual regardless of Phi3
    auto stripped = jet;
    for (auto& v : stripped.omega_u) v = Rational(0);
    for (auto& v : stripped.omega2) v = Rational(0);
    stripped.omega_uu = Rational(0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) CHECK(r12(stripped, a, b) == Rational(0));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) CHECK(m03res(stripped, a, b, c) == Rational(0));

    // repeated indices collapse by antisymmetry
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 2; ++i) CHECK(rc(jet, a, b, b, i) == Rational(0));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) CHECK(m03res(jet, a, b, b) == Rational(0));

    auto p0 = jet;
    for (auto& v : p0.phi3) v = Rational(0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < 2; ++i) CHECK(rc(p0, a, b, c, i) == Rational(0));

    CHECK_THROWS_AS(r12(jet, 0, 5), StructuralError);
}

TEST_CASE("jet residuals agree with direct expansion") {
    JetRng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto jet = random_jet(rng, 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) CHECK(r12(jet, a, b) == brute_r12(jet, a, b));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < 2; ++i) CHECK(rc(jet, a, b, c, i) == brute_rc(jet, a, b, c, i));
    }
    for (int trial = 0; trial < 10; ++trial) {
        auto jet = random_jet(rng, 3);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) CHECK(m03res(jet, a, b, c) == brute_m03(jet, a, b, c));
    }
}

TEST_CASE("certificate structure") {
    // with vanishing real data both sides collapse to 0 = 0
    JetRng rng(3);
    auto jet = random_jet(rng, 3);
    for (auto& v : jet.omega_u) v = Rational(0);
    for (auto& v : jet.omega2) v = Rational(0);
    jet.omega_uu = Rational(0);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                auto chk = verify_certificate(jet, a, b, c);
                CHECK(chk.pass);
                CHECK(chk.lhs == Rational(0));
                CHECK(chk.rhs == Rational(0));
            }

    // an instance with r12 = 0 and rc = 0 forces OUU * m03res = 0
    auto special = JetInstance<Rational>::zeroed(2);
    special.omega_uu = Rational(5); // the only nonzero datum
    special.set_g(0, 1, Rational(1));
    special.set_g(0, 0, Rational(2));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) REQUIRE(r12(special, a, b) == Rational(0));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                auto chk = verify_certificate(special, a, b, c);
                CHECK(chk.pass);
                CHECK(special.omega_uu * m03res(special, a, b, c) == chk.rhs);
            }
}

TEST_CASE("certificate holds on random exact instances") {
    for (int n = 1; n <= 4; ++n) {
        auto run = run_certificate_trials(/*seed=*/7, /*trials=*/30, n);
        CHECK(run.instances == 30);
        CHECK(run.failures == 0);
    }
}

TEST_CASE("series-valued jets from solved potentials vanish") {
    auto model = std::make_shared<const TargetModel>(p2_model());
    auto [ctable, crep] = solve_complex_p2(model, 2);
    auto seeds = standard_p2_real_seeds(model);
    SolveOptions opt;
    opt.dmax = 2;
    auto [rtable, rrep] = solve_real_p2(model, ctable, seeds, opt);

    Truncation tr{8, 2};
    Series phiphi = assemble_phi_phi(ctable, tr);
    Series omega = assemble_omega(rtable, tr);
    auto jet = jet_from_potentials(phiphi, omega, model->inverse_pairing());

    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            CHECK(r12(jet, a, b).is_zero());
            for (int c = 0; c < 3; ++c) {
                CHECK(m03res(jet, a, b, c).is_zero());
                for (int i = 0; i < 3; ++i) CHECK(rc(jet, a, b, c, i).is_zero());
                CHECK(verify_certificate(jet, a, b, c).pass);
            }
        }
}

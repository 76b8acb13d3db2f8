#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/linalg.hpp"
#include "rwdvv/rational.hpp"
#include "rwdvv/series.hpp"

namespace rwdvv {

// Free jet of the two potentials at a point: the pairing inverse, the
// symmetric third t-partials of the complex-sector series, and the
// second partials of the real series. Templated over the coefficient
// ring so the same identities run on exact rationals and on truncated
// series alike.
template <class R>
struct JetInstance {
    int n = 0;
    R zero{};
    std::vector<R> g_inv;   // n*n symmetric
    std::vector<R> phi3;    // n*n*n fully symmetric
    std::vector<R> omega2;  // n*n symmetric
    std::vector<R> omega_u; // n
    R omega_uu{};

    static JetInstance zeroed(int n, R zero = R{}) {
        JetInstance j;
        j.n = n;
        j.zero = zero;
        j.g_inv.assign(static_cast<size_t>(n) * n, zero);
        j.phi3.assign(static_cast<size_t>(n) * n * n, zero);
        j.omega2.assign(static_cast<size_t>(n) * n, zero);
        j.omega_u.assign(static_cast<size_t>(n), zero);
        j.omega_uu = zero;
        return j;
    }

    const R& g(int i, int j) const { return g_inv[idx2(i, j)]; }
    const R& p3(int a, int b, int i) const { return phi3[idx3(a, b, i)]; }
    const R& o2(int a, int b) const { return omega2[idx2(a, b)]; }
    const R& ou(int a) const { return omega_u[static_cast<size_t>(check(a))]; }

    void set_g(int i, int j, const R& v) { g_inv[idx2(i, j)] = v; g_inv[idx2(j, i)] = v; }
    void set_o2(int a, int b, const R& v) { omega2[idx2(a, b)] = v; omega2[idx2(b, a)] = v; }
    void set_ou(int a, const R& v) { omega_u[static_cast<size_t>(check(a))] = v; }
    void set_p3(int a, int b, int i, const R& v) {
        int s[3] = {check(a), check(b), check(i)};
        std::sort(s, s + 3);
        do {
            phi3[idx3(s[0], s[1], s[2])] = v;
        } while (std::next_permutation(s, s + 3));
    }

private:
    int check(int i) const {
        if (i < 0 || i >= n) throw StructuralError("JetInstance: index out of range");
        return i;
    }
    size_t idx2(int i, int j) const { return static_cast<size_t>(check(i)) * n + check(j); }
    size_t idx3(int a, int b, int i) const {
        return (static_cast<size_t>(check(a)) * n + check(b)) * n + check(i);
    }
};

// Residual of the two-real-point relation on a jet:
// sum_ij P[a][b][i] g^{ij} OU[j] + O2[a][b] OUU - OU[a] OU[b].
template <class R>
R r12(const JetInstance<R>& jet, int a, int b) {
    R acc = jet.zero;
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) acc = acc + jet.p3(a, b, i) * jet.g(i, j) * jet.ou(j);
    acc = acc + jet.o2(a, b) * jet.omega_uu;
    acc = acc - jet.ou(a) * jet.ou(b);
    return acc;
}

// Residual of the associativity relation on the complex-sector jet:
// sum_lm P[a][b][l] g^{lm} P[m][c][i] - (b <-> c).
template <class R>
R rc(const JetInstance<R>& jet, int a, int b, int c, int i) {
    R acc = jet.zero;
    for (int l = 0; l < jet.n; ++l)
        for (int m = 0; m < jet.n; ++m) {
            acc = acc + jet.p3(a, b, l) * jet.g(l, m) * jet.p3(m, c, i);
            acc = acc - jet.p3(a, c, l) * jet.g(l, m) * jet.p3(m, b, i);
        }
    return acc;
}

// Residual of the three-conjugate-pair relation on a jet.
template <class R>
R m03res(const JetInstance<R>& jet, int a, int b, int c) {
    R acc = jet.zero;
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) {
            acc = acc + jet.p3(a, b, i) * jet.g(i, j) * jet.o2(j, c);
            acc = acc - jet.p3(a, c, i) * jet.g(i, j) * jet.o2(j, b);
        }
    acc = acc + jet.o2(a, b) * jet.ou(c);
    acc = acc - jet.o2(a, c) * jet.ou(b);
    return acc;
}

template <class R>
struct CertificateCheck {
    R lhs, rhs;
    bool pass = false;
};

// The algebraic certificate behind the implication "two-point relations
// and associativity force the three-pair relations": multiplying the
// three-pair residual by the pure-u second derivative expresses it as
//
//   OUU * m03res(a,b,c) =  OU[c] r12(a,b) - OU[b] r12(a,c)
//                        + sum_lm P[a][b][l] g^{lm} r12(c,m)
//                        - sum_lm P[a][c][l] g^{lm} r12(b,m)
//                        - sum_ij rc(a,b,c,i) g^{ij} OU[j].
//
// The coefficients are locked by the randomized suite; the identity
// holds over any commutative coefficient ring.
template <class R>
CertificateCheck<R> verify_certificate(const JetInstance<R>& jet, int a, int b, int c) {
    R lhs = jet.omega_uu * m03res(jet, a, b, c);
    R rhs = jet.ou(c) * r12(jet, a, b);
    rhs = rhs - jet.ou(b) * r12(jet, a, c);
    std::vector<R> r12_c, r12_b, rc_i;
    for (int m = 0; m < jet.n; ++m) {
        r12_c.push_back(r12(jet, c, m));
        r12_b.push_back(r12(jet, b, m));
    }
    for (int i = 0; i < jet.n; ++i) rc_i.push_back(rc(jet, a, b, c, i));
    for (int l = 0; l < jet.n; ++l)
        for (int m = 0; m < jet.n; ++m) {
            rhs = rhs + jet.p3(a, b, l) * jet.g(l, m) * r12_c[static_cast<size_t>(m)];
            rhs = rhs - jet.p3(a, c, l) * jet.g(l, m) * r12_b[static_cast<size_t>(m)];
        }
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) rhs = rhs - rc_i[static_cast<size_t>(i)] * jet.g(i, j) * jet.ou(j);
    return CertificateCheck<R>{lhs, rhs, lhs == rhs};
}

// ---- randomized instances ---------------------------------------------------

struct JetRng {
    uint64_t state = 0x9e3779b97f4a7c15ULL;

    explicit JetRng(uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    int next_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }
    Rational next_rational() { // numerators in [-9, 9], denominators in {1, 2, 3}
        return Rational(BigInt(next_int(-9, 9)), BigInt(next_int(1, 3)));
    }
};

// Random exact-rational jet; the pairing block is resampled until it is
// invertible (it stays symmetric by construction).
inline JetInstance<Rational> random_jet(JetRng& rng, int n) {
    auto jet = JetInstance<Rational>::zeroed(n);
    for (;;) {
        RatMatrix g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Rational v = rng.next_rational();
                g(i, j) = v;
                g(j, i) = v;
            }
        try {
            (void)g.inverse();
        } catch (const StructuralError&) {
            continue;
        }
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) jet.set_g(i, j, g(i, j));
        break;
    }
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int i = b; i < n; ++i) jet.set_p3(a, b, i, rng.next_rational());
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) jet.set_o2(a, b, rng.next_rational());
    for (int a = 0; a < n; ++a) jet.set_ou(a, rng.next_rational());
    jet.omega_uu = rng.next_rational();
    return jet;
}

struct CertificateTrialRun {
    int instances = 0;
    int checks = 0;
    int failures = 0;
    std::vector<std::string> failure_details;
};

// Runs `trials` random instances of size n, checking the certificate on
// every index triple of each.
inline CertificateTrialRun run_certificate_trials(uint64_t seed, int trials, int n) {
    JetRng rng(seed + static_cast<uint64_t>(n) * 0x51ed270b0a1ce7fbULL);
    CertificateTrialRun run;
    for (int t = 0; t < trials; ++t) {
        auto jet = random_jet(rng, n);
        ++run.instances;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    auto chk = verify_certificate(jet, a, b, c);
                    ++run.checks;
                    if (!chk.pass) {
                        ++run.failures;
                        run.failure_details.push_back("n=" + std::to_string(n) + " trial=" + std::to_string(t) +
                                                      " (a,b,c)=(" + std::to_string(a + 1) + "," +
                                                      std::to_string(b + 1) + "," + std::to_string(c + 1) +
                                                      "): lhs=" + chk.lhs.str() + " rhs=" + chk.rhs.str());
                    }
                }
    }
    return run;
}

// Series-valued jet extracted from assembled potentials; the relation
// residuals evaluated on it are exactly the series-level residuals, so
// it vanishes on solved tables within truncation.
inline JetInstance<Series> jet_from_potentials(const Series& phi_phi, const Series& omega,
                                               const RatMatrix& ginv) {
    if (!(phi_phi.ring() == omega.ring()))
        throw StructuralError("jet_from_potentials: potentials live in different rings");
    const int n = phi_phi.ring().num_t;
    Series zero(phi_phi.ring(), min_of(phi_phi.truncation(), omega.truncation()));
    auto jet = JetInstance<Series>::zeroed(n, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Series g(phi_phi.ring(), zero.truncation());
            g.add_term(make_monomial(phi_phi.ring()), ginv(i, j));
            jet.g_inv[static_cast<size_t>(i) * n + j] = g;
        }
    for (int a = 0; a < n; ++a) {
        Series da = phi_phi.partial(Variable::t(a));
        Series oa = omega.partial(Variable::t(a));
        jet.set_ou(a, oa.partial(Variable::u()));
        for (int b = a; b < n; ++b) {
            Series dab = da.partial(Variable::t(b));
            jet.set_o2(a, b, oa.partial(Variable::t(b)));
            for (int i = b; i < n; ++i) jet.set_p3(a, b, i, dab.partial(Variable::t(i)));
        }
    }
    jet.omega_uu = omega.partial(Variable::u()).partial(Variable::u());
    return jet;
}

} // namespace rwdvv

#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/rational.hpp"

namespace rwdvv {

// Label of a genus-0 moduli space: complex with l marked points, or real
// with k real marked points and l conjugate pairs.
struct SpaceLabel {
    bool is_real = false;
    int k = 0;
    int l = 0;

    static SpaceLabel complex_space(int l) { return SpaceLabel{false, 0, l}; }
    static SpaceLabel real_space(int k, int l) { return SpaceLabel{true, k, l}; }

    bool valid() const {
        if (!is_real) return l >= 3 && k == 0;
        if (k < 0 || l < 0) return false;
        return k + 2 * l >= 3 || (k == 1 && l == 1) || (k == 0 && l == 2);
    }

    std::string to_string() const {
        if (!is_real) return "M(0," + std::to_string(l) + ")";
        return "RM(0," + std::to_string(k) + "," + std::to_string(l) + ")";
    }

    friend bool operator==(const SpaceLabel& a, const SpaceLabel& b) {
        return a.is_real == b.is_real && a.k == b.k && a.l == b.l;
    }
};

// One generator of the codimension-2 calculus: a cotangent class psi_i,
// a two-component boundary divisor, or a real three-component boundary.
struct FormalSymbol {
    enum class Kind { Psi, BoundaryC, BoundaryR };
    Kind kind = Kind::Psi;
    int index = 0;          // Psi only
    std::vector<int> left;  // I
    std::vector<int> right; // J

    static FormalSymbol psi(int i) {
        FormalSymbol s;
        s.kind = Kind::Psi;
        s.index = i;
        return s;
    }
    // Unordered pair of sides, canonicalized so the side holding the
    // smallest label comes first.
    static FormalSymbol boundary_c(std::vector<int> i_side, std::vector<int> j_side) {
        FormalSymbol s;
        s.kind = Kind::BoundaryC;
        std::sort(i_side.begin(), i_side.end());
        std::sort(j_side.begin(), j_side.end());
        bool swap_sides;
        if (i_side.empty())
            swap_sides = !j_side.empty();
        else if (j_side.empty())
            swap_sides = false;
        else
            swap_sides = j_side.front() < i_side.front();
        s.left = swap_sides ? std::move(j_side) : std::move(i_side);
        s.right = swap_sides ? std::move(i_side) : std::move(j_side);
        return s;
    }
    // Ordered: `left` indexes the conjugate pairs on the interchanged
    // components, `right` those on the real component.
    static FormalSymbol boundary_r(std::vector<int> i_side, std::vector<int> j_side) {
        FormalSymbol s;
        s.kind = Kind::BoundaryR;
        std::sort(i_side.begin(), i_side.end());
        std::sort(j_side.begin(), j_side.end());
        s.left = std::move(i_side);
        s.right = std::move(j_side);
        return s;
    }

    // Empty-cycle test on the given space; empty symbols normalize to 0.
    bool is_empty_cycle(const SpaceLabel& space) const {
        switch (kind) {
            case Kind::Psi: return false;
            case Kind::BoundaryC: return left.size() < 2 || right.size() < 2;
            case Kind::BoundaryR: return left.size() < 2 || (right.empty() && space.k == 0);
        }
        return false;
    }

    friend bool operator==(const FormalSymbol& a, const FormalSymbol& b) {
        return a.kind == b.kind && a.index == b.index && a.left == b.left && a.right == b.right;
    }
    friend bool operator<(const FormalSymbol& a, const FormalSymbol& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.index != b.index) return a.index < b.index;
        if (a.left != b.left) return a.left < b.left;
        return a.right < b.right;
    }

    std::string to_string() const {
        auto set_str = [](const std::vector<int>& v) {
            std::string s = "{";
            for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
            return s + "}";
        };
        switch (kind) {
            case Kind::Psi: return "psi_" + std::to_string(index);
            case Kind::BoundaryC: return "D(" + set_str(left) + "," + set_str(right) + ")";
            default: return "RD(" + set_str(left) + "," + set_str(right) + ")";
        }
    }
};

// Integer combination of symbols on one labeled space. With eager
// normalization (the default) empty divisors are dropped on insertion;
// the lazy mode keeps them until normalized() for cross-checking.
class FormalClass {
public:
    explicit FormalClass(SpaceLabel space, bool eager_drop = true)
        : space_(space), eager_drop_(eager_drop) {}

    const SpaceLabel& space() const { return space_; }
    bool eager_drop() const { return eager_drop_; }
    const std::map<FormalSymbol, long long>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const FormalSymbol& s, long long c) {
        if (c == 0) return;
        if (eager_drop_ && s.is_empty_cycle(space_)) return;
        auto it = terms_.find(s);
        if (it == terms_.end()) {
            terms_.emplace(s, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    FormalClass normalized() const {
        FormalClass out(space_, true);
        for (const auto& [s, c] : terms_) out.add_term(s, c);
        return out;
    }

    friend FormalClass operator+(const FormalClass& a, const FormalClass& b) {
        if (!(a.space_ == b.space_)) throw StructuralError("FormalClass: space mismatch in sum");
        FormalClass out(a.space_, a.eager_drop_ && b.eager_drop_);
        for (const auto& [s, c] : a.terms_) out.add_term(s, c);
        for (const auto& [s, c] : b.terms_) out.add_term(s, c);
        return out;
    }

    friend FormalClass operator*(long long x, const FormalClass& a) {
        FormalClass out(a.space_, a.eager_drop_);
        if (x == 0) return out;
        for (const auto& [s, c] : a.terms_) out.add_term(s, x * c);
        return out;
    }

    friend bool operator==(const FormalClass& a, const FormalClass& b) {
        return a.space_ == b.space_ && a.terms_ == b.terms_;
    }

    std::string render() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [s, c] : terms_) {
            long long a = c < 0 ? -c : c;
            if (first) {
                if (c < 0) os << "-";
                first = false;
            } else {
                os << (c < 0 ? " - " : " + ");
            }
            if (a != 1) os << a << "*";
            os << s.to_string();
        }
        return os.str();
    }

private:
    SpaceLabel space_;
    bool eager_drop_;
    std::map<FormalSymbol, long long> terms_;
};

// Genus-0 cotangent-class integral on the complex moduli space:
// (l-3)! / prod a_i! when the exponents fill the dimension, else 0.
inline long long psi_integral(int l, const std::vector<int>& exps) {
    if (l < 3) throw StructuralError("psi_integral: need at least 3 marked points");
    if (static_cast<int>(exps.size()) != l)
        throw StructuralError("psi_integral: need one exponent per marked point");
    long long sum = 0;
    for (int a : exps) {
        if (a < 0) throw StructuralError("psi_integral: negative exponent");
        sum += a;
    }
    if (sum != l - 3) return 0;
    BigInt v = factorial(l - 3);
    for (int a : exps) v /= factorial(a);
    return v.convert_to<long long>();
}

// Pairs the cotangent recursion against an arbitrary psi-monomial: the
// left side integrates psi_1^{a_1+1} prod psi_m^{a_m} over the whole
// space, the right side restricts to each admissible boundary divisor
// and splits into the product of the factor integrals (psi classes
// restrict to the factor carrying the marked point, node points carry
// exponent zero).
inline std::pair<long long, long long> pair_thm1(int l, int i, int j, const std::vector<int>& exps) {
    if (l < 4) throw StructuralError("pair_thm1: need l >= 4");
    if (i == j || i < 2 || j < 2 || i > l || j > l)
        throw StructuralError("pair_thm1: i, j must be distinct labels in 2..l");
    if (static_cast<int>(exps.size()) != l)
        throw StructuralError("pair_thm1: need one exponent per marked point");
    long long total = 0;
    for (int a : exps) total += a;
    if (total != l - 4) throw StructuralError("pair_thm1: exponent degree mismatch");

    std::vector<int> lhs_exps(exps);
    ++lhs_exps[0];
    long long lhs = psi_integral(l, lhs_exps);

    std::vector<int> rest;
    for (int m = 2; m <= l; ++m)
        if (m != i && m != j) rest.push_back(m);
    long long rhs = 0;
    const size_t subsets = size_t{1} << rest.size();
    for (size_t mask = 0; mask < subsets; ++mask) {
        std::vector<int> in_i, in_j;
        for (size_t t = 0; t < rest.size(); ++t)
            ((mask >> t) & 1 ? in_i : in_j).push_back(rest[t]);
        if (in_i.empty()) continue; // the {1}-side would be an empty divisor
        std::vector<int> f1{exps[0]};
        for (int mpt : in_i) f1.push_back(exps[static_cast<size_t>(mpt - 1)]);
        f1.push_back(0); // node
        std::vector<int> f2{exps[static_cast<size_t>(i - 1)], exps[static_cast<size_t>(j - 1)]};
        for (int mpt : in_j) f2.push_back(exps[static_cast<size_t>(mpt - 1)]);
        f2.push_back(0); // node
        rhs += psi_integral(static_cast<int>(f1.size()), f1) * psi_integral(static_cast<int>(f2.size()), f2);
    }
    return {lhs, rhs};
}

// Pullback under the complex forgetful map dropping marked point l+1:
// boundary divisors split over the two placements of the new point, and
// psi_i picks up the correction divisor separating {i, l+1} off.
inline FormalClass pullback_complex(const FormalClass& c) {
    const SpaceLabel& sp = c.space();
    if (sp.is_real) throw StructuralError("pullback_complex: class lives on a real space");
    const int l = sp.l, np = l + 1;
    FormalClass out(SpaceLabel::complex_space(np), c.eager_drop());
    for (const auto& [s, coeff] : c.terms()) {
        switch (s.kind) {
            case FormalSymbol::Kind::Psi: {
                out.add_term(FormalSymbol::psi(s.index), coeff);
                std::vector<int> others;
                for (int m = 1; m <= l; ++m)
                    if (m != s.index) others.push_back(m);
                out.add_term(FormalSymbol::boundary_c({s.index, np}, others), -coeff);
                break;
            }
            case FormalSymbol::Kind::BoundaryC: {
                std::vector<int> i_side(s.left), j_side(s.right);
                i_side.push_back(np);
                out.add_term(FormalSymbol::boundary_c(i_side, s.right), coeff);
                j_side.push_back(np);
                out.add_term(FormalSymbol::boundary_c(s.left, j_side), coeff);
                break;
            }
            default:
                throw StructuralError("pullback_complex: real boundary symbol on a complex space");
        }
    }
    return out;
}

enum class ForgetMap { ConjugatePair, RealPoint };

// Pullback under the real forgetful maps. Dropping the last conjugate
// pair behaves like the complex case (with the real correction divisor);
// dropping the last real marked point is transparent: boundaries pull
// back to themselves and psi needs no correction.
inline FormalClass pullback_real(const FormalClass& c, ForgetMap map) {
    const SpaceLabel& sp = c.space();
    if (!sp.is_real) throw StructuralError("pullback_real: class lives on a complex space");
    if (map == ForgetMap::RealPoint) {
        FormalClass out(SpaceLabel::real_space(sp.k + 1, sp.l), c.eager_drop());
        for (const auto& [s, coeff] : c.terms()) {
            if (s.kind == FormalSymbol::Kind::BoundaryC)
                throw StructuralError("pullback_real: complex boundary symbol on a real space");
            out.add_term(s, coeff);
        }
        return out;
    }
    const int l = sp.l, np = l + 1;
    FormalClass out(SpaceLabel::real_space(sp.k, np), c.eager_drop());
    for (const auto& [s, coeff] : c.terms()) {
        switch (s.kind) {
            case FormalSymbol::Kind::Psi: {
                out.add_term(FormalSymbol::psi(s.index), coeff);
                std::vector<int> others;
                for (int m = 1; m <= l; ++m)
                    if (m != s.index) others.push_back(m);
                out.add_term(FormalSymbol::boundary_r({s.index, np}, others), -coeff);
                break;
            }
            case FormalSymbol::Kind::BoundaryR: {
                std::vector<int> i_side(s.left), j_side(s.right);
                i_side.push_back(np);
                out.add_term(FormalSymbol::boundary_r(i_side, s.right), coeff);
                j_side.push_back(np);
                out.add_term(FormalSymbol::boundary_r(s.left, j_side), coeff);
                break;
            }
            default:
                throw StructuralError("pullback_real: complex boundary symbol on a real space");
        }
    }
    return out;
}

struct Derivation {
    FormalClass derived;
    FormalClass stated;
    bool match = false;
};

namespace detail {

// Relabels marked points (resp. conjugate pairs) by the permutation
// sigma given as a 1-based lookup table.
inline FormalClass relabel(const FormalClass& c, const std::vector<int>& sigma) {
    FormalClass out(c.space(), c.eager_drop());
    auto map_set = [&](const std::vector<int>& v) {
        std::vector<int> out_set;
        out_set.reserve(v.size());
        for (int x : v) out_set.push_back(sigma[static_cast<size_t>(x)]);
        std::sort(out_set.begin(), out_set.end());
        return out_set;
    };
    for (const auto& [s, coeff] : c.terms()) {
        FormalSymbol t = s;
        if (s.kind == FormalSymbol::Kind::Psi) {
            t.index = sigma[static_cast<size_t>(s.index)];
        } else {
            std::vector<int> ls = map_set(s.left), rs = map_set(s.right);
            t = s.kind == FormalSymbol::Kind::BoundaryC ? FormalSymbol::boundary_c(ls, rs)
                                                        : FormalSymbol::boundary_r(ls, rs);
        }
        out.add_term(t, coeff);
    }
    return out;
}

// sigma fixing 1 with sigma(2)=i (and sigma(3)=j when j > 0), the other
// labels filled in increasing order.
inline std::vector<int> canonical_relabeling(int l, int i, int j) {
    std::vector<int> sigma(static_cast<size_t>(l) + 1, 0);
    sigma[1] = 1;
    sigma[2] = i;
    if (j > 0) sigma[3] = j;
    std::vector<int> targets;
    for (int m = 2; m <= l; ++m)
        if (m != i && m != j) targets.push_back(m);
    size_t t = 0;
    for (int m = (j > 0 ? 4 : 3); m <= l; ++m) sigma[static_cast<size_t>(m)] = targets[t++];
    return sigma;
}

} // namespace detail

// Re-derives the complex cotangent recursion for psi_1 on the l-pointed
// space by induction from the one-point base, then compares against the
// stated boundary sum for the chosen (i, j).
inline Derivation derive_thm1(int l, int i, int j, bool eager_drop = true) {
    if (l < 3) throw StructuralError("derive_thm1: need l >= 3");
    if (i == j || i < 2 || j < 2 || i > l || j > l)
        throw StructuralError("derive_thm1: i, j must be distinct labels in 2..l");
    FormalClass expr(SpaceLabel::complex_space(3), eager_drop); // psi_1 vanishes on the base
    for (int cur = 3; cur < l; ++cur) {
        expr = pullback_complex(expr);
        std::vector<int> others;
        for (int m = 2; m <= cur; ++m) others.push_back(m);
        expr.add_term(FormalSymbol::boundary_c({1, cur + 1}, others), 1);
    }
    FormalClass derived = detail::relabel(expr, detail::canonical_relabeling(l, i, j)).normalized();

    FormalClass stated(SpaceLabel::complex_space(l));
    std::vector<int> rest;
    for (int m = 2; m <= l; ++m)
        if (m != i && m != j) rest.push_back(m);
    const size_t subsets = size_t{1} << rest.size();
    for (size_t mask = 0; mask < subsets; ++mask) {
        std::vector<int> i_side{1}, j_side{i, j};
        for (size_t t = 0; t < rest.size(); ++t)
            ((mask >> t) & 1 ? i_side : j_side).push_back(rest[t]);
        stated.add_term(FormalSymbol::boundary_c(i_side, j_side), 1);
    }
    return Derivation{derived, stated, derived == stated};
}

enum class Thm2Variant { NoConjugateIndex, WithIndex };

// Re-derives the two real cotangent recursions by induction: conjugate
// pairs are added first from the matching base (one real point and one
// pair, or a circle's worth of two pairs), then real points.
inline Derivation derive_thm2(int k, int l, Thm2Variant variant, int i = 0, bool eager_drop = true) {
    if (variant == Thm2Variant::NoConjugateIndex) {
        if (k < 1 || l < 1) throw StructuralError("derive_thm2: first identity needs k >= 1, l >= 1");
        FormalClass expr(SpaceLabel::real_space(1, 1), eager_drop); // psi_1 vanishes on the point base
        for (int cur = 1; cur < l; ++cur) {
            expr = pullback_real(expr, ForgetMap::ConjugatePair);
            std::vector<int> others;
            for (int m = 2; m <= cur; ++m) others.push_back(m);
            expr.add_term(FormalSymbol::boundary_r({1, cur + 1}, others), 1);
        }
        for (int cur = 1; cur < k; ++cur) expr = pullback_real(expr, ForgetMap::RealPoint);
        expr = expr.normalized();

        FormalClass stated(SpaceLabel::real_space(k, l));
        std::vector<int> rest;
        for (int m = 2; m <= l; ++m) rest.push_back(m);
        const size_t subsets = size_t{1} << rest.size();
        for (size_t mask = 0; mask < subsets; ++mask) {
            std::vector<int> i_side{1}, j_side;
            for (size_t t = 0; t < rest.size(); ++t)
                ((mask >> t) & 1 ? i_side : j_side).push_back(rest[t]);
            stated.add_term(FormalSymbol::boundary_r(i_side, j_side), 1);
        }
        return Derivation{expr, stated, expr == stated};
    }

    if (l < 2 || i < 2 || i > l)
        throw StructuralError("derive_thm2: second identity needs l >= 2 and i in 2..l");
    if (k < 0) throw StructuralError("derive_thm2: negative k");
    FormalClass expr(SpaceLabel::real_space(0, 2), eager_drop); // psi_1 vanishes on the circle base
    for (int cur = 2; cur < l; ++cur) {
        expr = pullback_real(expr, ForgetMap::ConjugatePair);
        std::vector<int> others;
        for (int m = 2; m <= cur; ++m) others.push_back(m);
        expr.add_term(FormalSymbol::boundary_r({1, cur + 1}, others), 1);
    }
    for (int cur = 0; cur < k; ++cur) expr = pullback_real(expr, ForgetMap::RealPoint);
    FormalClass derived = detail::relabel(expr, detail::canonical_relabeling(l, i, 0)).normalized();

    FormalClass stated(SpaceLabel::real_space(k, l));
    std::vector<int> rest;
    for (int m = 2; m <= l; ++m)
        if (m != i) rest.push_back(m);
    const size_t subsets = size_t{1} << rest.size();
    for (size_t mask = 0; mask < subsets; ++mask) {
        std::vector<int> i_side{1}, j_side{i};
        for (size_t t = 0; t < rest.size(); ++t)
            ((mask >> t) & 1 ? i_side : j_side).push_back(rest[t]);
        stated.add_term(FormalSymbol::boundary_r(i_side, j_side), 1);
    }
    return Derivation{derived, stated, derived == stated};
}

} // namespace rwdvv

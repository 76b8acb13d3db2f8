#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/rational.hpp"

namespace rwdvv {

// Ambient ring descriptor: t_1..t_N and u over a Novikov lattice of the
// given rank. Each lattice coordinate carries a positive energy weight;
// the energy of q^B is the weighted sum of the exponents.
struct RingDesc {
    int num_t = 0;
    int lattice_rank = 0;
    std::vector<int> weights; // one positive weight per lattice coordinate

    friend bool operator==(const RingDesc& a, const RingDesc& b) {
        return a.num_t == b.num_t && a.lattice_rank == b.lattice_rank && a.weights == b.weights;
    }
};

inline RingDesc make_ring(int num_t, int lattice_rank) {
    return RingDesc{num_t, lattice_rank, std::vector<int>(static_cast<size_t>(lattice_rank), 1)};
}

// A formal variable: one of t_1..t_N, or u.
struct Variable {
    int t_index = -1; // 0-based; -1 encodes u
    static Variable t(int index0) { return Variable{index0}; }
    static Variable u() { return Variable{-1}; }
    bool is_u() const { return t_index < 0; }
};

struct Monomial {
    std::vector<int> t_exp;
    int u_exp = 0;
    std::vector<int> novikov;

    int tu_degree() const {
        return std::accumulate(t_exp.begin(), t_exp.end(), 0) + u_exp;
    }
    int energy(const RingDesc& ring) const {
        int e = 0;
        for (size_t i = 0; i < novikov.size(); ++i) e += ring.weights[i] * novikov[i];
        return e;
    }
    friend bool operator==(const Monomial& a, const Monomial& b) {
        return a.t_exp == b.t_exp && a.u_exp == b.u_exp && a.novikov == b.novikov;
    }
};

inline Monomial make_monomial(const RingDesc& ring) {
    Monomial m;
    m.t_exp.assign(static_cast<size_t>(ring.num_t), 0);
    m.novikov.assign(static_cast<size_t>(ring.lattice_rank), 0);
    return m;
}

// Graded lexicographic order: total t,u-degree, then Novikov energy, then
// plain lexicographic tie-breaks. Deterministic iteration is what the
// order-by-order solver and the text renderer rely on.
struct MonomialOrder {
    std::vector<int> weights;

    bool operator()(const Monomial& a, const Monomial& b) const {
        int da = a.tu_degree(), db = b.tu_degree();
        if (da != db) return da < db;
        int ea = weighted(a), eb = weighted(b);
        if (ea != eb) return ea < eb;
        if (a.t_exp != b.t_exp) return a.t_exp < b.t_exp;
        if (a.u_exp != b.u_exp) return a.u_exp < b.u_exp;
        return a.novikov < b.novikov;
    }

private:
    int weighted(const Monomial& m) const {
        int e = 0;
        for (size_t i = 0; i < m.novikov.size(); ++i) e += weights[i] * m.novikov[i];
        return e;
    }
};

// Truncation bounds. Coefficients beyond the bounds are unknown, never
// implicitly zero; coeff() outside the bounds is an error.
struct Truncation {
    int max_tu_degree = 0;
    int max_energy = 0;

    friend Truncation min_of(const Truncation& a, const Truncation& b) {
        return Truncation{std::min(a.max_tu_degree, b.max_tu_degree),
                          std::min(a.max_energy, b.max_energy)};
    }
    friend bool operator==(const Truncation& a, const Truncation& b) {
        return a.max_tu_degree == b.max_tu_degree && a.max_energy == b.max_energy;
    }
};

// Sparse truncated multivariate power series with exact rational
// coefficients. Values are immutable in spirit: all operations are pure
// and return new series.
class Series {
public:
    using Map = std::map<Monomial, Rational, MonomialOrder>;

    Series() : coeffs_(MonomialOrder{}) {}
    Series(RingDesc ring, Truncation trunc)
        : ring_(std::move(ring)), trunc_(trunc), coeffs_(MonomialOrder{ring_.weights}) {}

    const RingDesc& ring() const { return ring_; }
    const Truncation& truncation() const { return trunc_; }
    const Map& terms() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }
    size_t term_count() const { return coeffs_.size(); }

    bool in_bounds(const Monomial& m) const {
        return m.tu_degree() <= trunc_.max_tu_degree && m.energy(ring_) <= trunc_.max_energy;
    }

    // Accumulates c on m; terms outside the bounds are dropped (they are
    // unknown in this ring, so nothing can be asserted about them).
    void add_term(const Monomial& m, const Rational& c) {
        if (c.is_zero() || !in_bounds(m)) return;
        auto it = coeffs_.find(m);
        if (it == coeffs_.end()) {
            coeffs_.emplace(m, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) coeffs_.erase(it);
        }
    }

    // Stored coefficient, or zero if absent; monomials beyond the
    // truncation bounds are unknown and raise an error.
    Rational coeff(const Monomial& m) const {
        if (!in_bounds(m))
            throw OutOfRangeError("Series::coeff: monomial outside truncation bounds");
        auto it = coeffs_.find(m);
        return it == coeffs_.end() ? Rational(0) : it->second;
    }

    Series retruncated(const Truncation& t) const {
        Series r(ring_, min_of(trunc_, t));
        for (const auto& [m, c] : coeffs_) r.add_term(m, c);
        return r;
    }

    friend Series operator+(const Series& a, const Series& b) {
        require_same_ring(a, b, "add");
        Series r(a.ring_, min_of(a.trunc_, b.trunc_));
        for (const auto& [m, c] : a.coeffs_) r.add_term(m, c);
        for (const auto& [m, c] : b.coeffs_) r.add_term(m, c);
        return r;
    }

    friend Series operator-(const Series& a, const Series& b) {
        require_same_ring(a, b, "subtract");
        Series r(a.ring_, min_of(a.trunc_, b.trunc_));
        for (const auto& [m, c] : a.coeffs_) r.add_term(m, c);
        for (const auto& [m, c] : b.coeffs_) r.add_term(m, -c);
        return r;
    }

    // Truncated convolution product. The map is graded by t,u-degree
    // first, so the inner loop can stop as soon as the degree bound is
    // exceeded; the energy bound is checked per pair.
    friend Series operator*(const Series& a, const Series& b) {
        require_same_ring(a, b, "multiply");
        Series r(a.ring_, min_of(a.trunc_, b.trunc_));
        const int maxd = r.trunc_.max_tu_degree;
        const int maxe = r.trunc_.max_energy;
        for (const auto& [ma, ca] : a.coeffs_) {
            const int da = ma.tu_degree();
            if (da > maxd) break;
            const int ea = ma.energy(a.ring_);
            for (const auto& [mb, cb] : b.coeffs_) {
                if (da + mb.tu_degree() > maxd) break;
                if (ea + mb.energy(a.ring_) > maxe) continue;
                Monomial m = ma;
                for (int i = 0; i < a.ring_.num_t; ++i) m.t_exp[i] += mb.t_exp[i];
                m.u_exp += mb.u_exp;
                for (int i = 0; i < a.ring_.lattice_rank; ++i) m.novikov[i] += mb.novikov[i];
                r.add_term(m, ca * cb);
            }
        }
        return r;
    }

    friend Series operator*(const Rational& c, const Series& a) {
        Series r(a.ring_, a.trunc_);
        if (c.is_zero()) return r;
        for (const auto& [m, v] : a.coeffs_) r.coeffs_.emplace(m, c * v);
        return r;
    }

    // Formal partial derivative; the t,u-degree bound drops by one since
    // degree-(T+1) terms would have contributed to degree T.
    Series partial(Variable v) const {
        if (!v.is_u() && (v.t_index < 0 || v.t_index >= ring_.num_t))
            throw StructuralError("Series::partial: unknown variable");
        Series r(ring_, Truncation{trunc_.max_tu_degree - 1, trunc_.max_energy});
        for (const auto& [m, c] : coeffs_) {
            int e = v.is_u() ? m.u_exp : m.t_exp[v.t_index];
            if (e == 0) continue;
            Monomial mm = m;
            if (v.is_u())
                --mm.u_exp;
            else
                --mm.t_exp[v.t_index];
            r.add_term(mm, c * Rational(e));
        }
        return r;
    }

    // Equality is coefficient-map equality within one ring.
    friend bool operator==(const Series& a, const Series& b) {
        if (!(a.ring_ == b.ring_)) return false;
        if (a.coeffs_.size() != b.coeffs_.size()) return false;
        auto ia = a.coeffs_.begin();
        auto ib = b.coeffs_.begin();
        for (; ia != a.coeffs_.end(); ++ia, ++ib)
            if (!(ia->first == ib->first) || ia->second != ib->second) return false;
        return true;
    }

    // Canonical text rendering, ascending in the monomial order,
    // coefficients as "p/q".
    std::string render() const {
        if (coeffs_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [m, c] : coeffs_) {
            Rational a = c.abs();
            if (first) {
                if (c.sign() < 0) os << "-";
                first = false;
            } else {
                os << (c.sign() < 0 ? " - " : " + ");
            }
            std::string vars = render_vars(m);
            if (vars.empty())
                os << a.str();
            else if (a == Rational(1))
                os << vars;
            else
                os << a.str() << "*" << vars;
        }
        return os.str();
    }

private:
    static void require_same_ring(const Series& a, const Series& b, const char* op) {
        if (!(a.ring_ == b.ring_))
            throw StructuralError(std::string("Series: ring descriptor mismatch in ") + op);
    }

    std::string render_vars(const Monomial& m) const {
        std::ostringstream os;
        bool any = false;
        auto emit = [&](const std::string& name, int e) {
            if (e == 0) return;
            if (any) os << "*";
            os << name;
            if (e > 1) os << "^" << e;
            any = true;
        };
        for (int i = 0; i < ring_.num_t; ++i) emit("t" + std::to_string(i + 1), m.t_exp[i]);
        emit("u", m.u_exp);
        if (ring_.lattice_rank == 1) {
            emit("q", m.novikov[0]);
        } else {
            for (int i = 0; i < ring_.lattice_rank; ++i)
                emit("q" + std::to_string(i + 1), m.novikov[i]);
        }
        return os.str();
    }

    RingDesc ring_;
    Truncation trunc_{};
    Map coeffs_;
};

} // namespace rwdvv

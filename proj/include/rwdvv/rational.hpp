#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <ostream>
#include <string>

#include "rwdvv/errors.hpp"

namespace rwdvv {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational scalar. Always in lowest terms with positive denominator;
// every operation is exact, there is no rounding anywhere.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(int n) : v_(n) {}                // NOLINT: implicit by design
    Rational(long long n) : v_(n) {}          // NOLINT
    Rational(const BigInt& n) : v_(n) {}      // NOLINT
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw StructuralError("Rational: zero denominator");
        if (den < 0)
            v_ = boost::multiprecision::cpp_rational(-num, -den);
        else
            v_ = boost::multiprecision::cpp_rational(num, den);
    }

    BigInt num() const { return boost::multiprecision::numerator(v_); }
    BigInt den() const { return boost::multiprecision::denominator(v_); }

    bool is_zero() const { return v_ == 0; }
    bool is_integer() const { return den() == 1; }
    int sign() const { return v_ == 0 ? 0 : (v_ < 0 ? -1 : 1); }

    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw StructuralError("Rational: division by zero");
        v_ /= o.v_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { a += b; return a; }
    friend Rational operator-(Rational a, const Rational& b) { a -= b; return a; }
    friend Rational operator*(Rational a, const Rational& b) { a *= b; return a; }
    friend Rational operator/(Rational a, const Rational& b) { a /= b; return a; }
    Rational operator-() const { Rational r; r.v_ = -v_; return r; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    Rational abs() const { return *this < 0 ? -*this : *this; }

    // Integer power; negative exponents invert (zero base rejected).
    Rational pow(long long e) const {
        if (e < 0) {
            if (is_zero()) throw StructuralError("Rational: 0^negative");
            return (Rational(1) / *this).pow(-e);
        }
        Rational r(1), base(*this);
        while (e > 0) {
            if (e & 1) r *= base;
            base *= base;
            e >>= 1;
        }
        return r;
    }

    // Canonical text form: "p" when integral, "p/q" otherwise.
    std::string str() const {
        if (is_integer()) return num().str();
        return num().str() + "/" + den().str();
    }

    // Parses "p" or "p/q" (q > 0 after normalization).
    static Rational parse(const std::string& s) {
        auto bad = [&] { return StructuralError("Rational: cannot parse '" + s + "'"); };
        std::string t;
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) t += c;
        if (t.empty()) throw bad();
        auto slash = t.find('/');
        try {
            if (slash == std::string::npos) return Rational(BigInt(t));
            BigInt n(t.substr(0, slash));
            BigInt d(t.substr(slash + 1));
            return Rational(n, d);
        } catch (const std::exception&) {
            throw bad();
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    boost::multiprecision::cpp_rational v_;
};

inline BigInt factorial(int n) {
    BigInt r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

inline BigInt binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt r = 1;
    for (int i = 0; i < k; ++i) {
        r *= (n - i);
        r /= (i + 1);
    }
    return r;
}

// 2^e as an exact rational, e of either sign.
inline Rational pow2(long long e) { return Rational(2).pow(e); }

} // namespace rwdvv

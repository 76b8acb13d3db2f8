#pragma once

#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/rational.hpp"

namespace rwdvv {

// Dense matrix of exact rationals; only the handful of operations the
// engine needs (products, exact inversion).
class RatMatrix {
public:
    RatMatrix() = default;
    RatMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

    static RatMatrix identity(int n) {
        RatMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    Rational& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    const Rational& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    friend bool operator==(const RatMatrix& x, const RatMatrix& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    RatMatrix multiply(const RatMatrix& o) const {
        if (cols_ != o.rows_) throw StructuralError("RatMatrix: shape mismatch in product");
        RatMatrix r(rows_, o.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                const Rational& x = (*this)(i, k);
                if (x.is_zero()) continue;
                for (int j = 0; j < o.cols_; ++j) r(i, j) += x * o(k, j);
            }
        return r;
    }

    // Exact inverse by Gauss-Jordan elimination; throws on singular input.
    RatMatrix inverse() const {
        if (rows_ != cols_) throw StructuralError("RatMatrix: inverse of non-square matrix");
        int n = rows_;
        RatMatrix a(*this), inv = identity(n);
        for (int col = 0; col < n; ++col) {
            int piv = -1;
            for (int r = col; r < n; ++r)
                if (!a(r, col).is_zero()) { piv = r; break; }
            if (piv < 0) throw StructuralError("RatMatrix: singular matrix");
            if (piv != col)
                for (int j = 0; j < n; ++j) {
                    std::swap(a(piv, j), a(col, j));
                    std::swap(inv(piv, j), inv(col, j));
                }
            Rational d = a(col, col);
            for (int j = 0; j < n; ++j) {
                a(col, j) /= d;
                inv(col, j) /= d;
            }
            for (int r = 0; r < n; ++r) {
                if (r == col) continue;
                Rational f = a(r, col);
                if (f.is_zero()) continue;
                for (int j = 0; j < n; ++j) {
                    a(r, j) -= f * a(col, j);
                    inv(r, j) -= f * inv(col, j);
                }
            }
        }
        return inv;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<Rational> a_;
};

} // namespace rwdvv

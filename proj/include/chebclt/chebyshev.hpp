#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chebclt/common.hpp"

namespace chebclt {

// Polynomial in the monomial basis; coefficients[k] multiplies x^k.
struct MonomialPolynomial {
    std::vector<double> coefficients;

    static MonomialPolynomial monomial(int power, double scale = 1.0) {
        MonomialPolynomial f;
        f.coefficients.assign(static_cast<std::size_t>(power) + 1, 0.0);
        f.coefficients.back() = scale;
        return f;
    }

    // Degree with trailing zeros ignored; -1 for the zero polynomial.
    int degree() const {
        for (int k = static_cast<int>(coefficients.size()) - 1; k >= 0; --k)
            if (coefficients[static_cast<std::size_t>(k)] != 0.0) return k;
        return -1;
    }

    double evaluate(double x) const {
        double acc = 0.0;
        for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * x + coefficients[k];
        return acc;
    }
};

// Exact integer coefficient tables for the monic Chebyshev polynomials of the
// first kind, normalized so that T_m(2 cos t) = 2 cos(m t) for m >= 1 and
// T_0 = 1. (T_0 = 1, not 2: the value is forced by the three-term recurrence
// x T_1 = T_2 + 2 T_0 together with monicity, and by t_{0,0} = 1 below.)
//
//   T[m][k] : coefficient of x^k in T_m(x); lower triangular, unit diagonal.
//   t[k][m] : expansion of x^k over {T_m}; t is the exact inverse of T, and
//             t[k][m] counts the non-crossing half pair partitions of k
//             points with m open connectors (marked partitions for m = 0).
struct ChebyshevTable {
    int max_degree = 0;
    std::vector<std::vector<std::int64_t>> T;
    std::vector<std::vector<std::int64_t>> t;
};

// Rows of T via the coefficient recurrence
//   T_{m+1,k} = T_{m,k-1} - (1 + [m==1]) T_{m-1,k}.
inline std::vector<std::vector<std::int64_t>> chebyshev_coeff_rows(int max_degree) {
    if (max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
    std::vector<std::vector<std::int64_t>> rows;
    rows.reserve(static_cast<std::size_t>(max_degree) + 1);
    rows.push_back({1});
    if (max_degree == 0) return rows;
    rows.push_back({0, 1});
    for (int m = 1; m < max_degree; ++m) {
        const auto& prev = rows[static_cast<std::size_t>(m)];
        const auto& prev2 = rows[static_cast<std::size_t>(m) - 1];
        std::int64_t c = (m == 1) ? 2 : 1;
        std::vector<std::int64_t> row(static_cast<std::size_t>(m) + 2, 0);
        for (int k = 0; k <= m + 1; ++k) {
            std::int64_t v = (k >= 1) ? prev[static_cast<std::size_t>(k) - 1] : 0;
            if (k <= m - 1) v = checked_add(v, checked_mul(-c, prev2[static_cast<std::size_t>(k)]));
            row[static_cast<std::size_t>(k)] = v;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Rows of the inverse via t_{k+1,m} = t_{k,m-1} + (1 + [m==0]) t_{k,m+1},
// with t_{0,m} = [m==0] and t_{k,-1} = 0.
inline std::vector<std::vector<std::int64_t>> chebyshev_inverse_rows(int max_degree) {
    if (max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
    std::vector<std::vector<std::int64_t>> rows;
    rows.reserve(static_cast<std::size_t>(max_degree) + 1);
    rows.push_back({1});
    for (int k = 0; k < max_degree; ++k) {
        const auto& prev = rows[static_cast<std::size_t>(k)];
        std::vector<std::int64_t> row(static_cast<std::size_t>(k) + 2, 0);
        for (int m = 0; m <= k + 1; ++m) {
            std::int64_t v = (m >= 1 && m - 1 <= k) ? prev[static_cast<std::size_t>(m) - 1] : 0;
            if (m + 1 <= k) {
                std::int64_t c = (m == 0) ? 2 : 1;
                v = checked_add(v, checked_mul(c, prev[static_cast<std::size_t>(m) + 1]));
            }
            row[static_cast<std::size_t>(m)] = v;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ChebyshevTable chebyshev_table(int max_degree) {
    ChebyshevTable tab;
    tab.max_degree = max_degree;
    tab.T = chebyshev_coeff_rows(max_degree);
    tab.t = chebyshev_inverse_rows(max_degree);
    return tab;
}

// Exact check that T.t is the identity in integer arithmetic.
inline bool chebyshev_inverse_identity_holds(const ChebyshevTable& tab) {
    int dim = tab.max_degree + 1;
    for (int m = 0; m < dim; ++m) {
        for (int mp = 0; mp < dim; ++mp) {
            std::int64_t acc = 0;
            for (int k = mp; k <= m; ++k)
                acc = checked_add(acc, checked_mul(tab.T[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)],
                                                   tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(mp)]));
            if (acc != (m == mp ? 1 : 0)) return false;
        }
    }
    return true;
}

// s^m T_m(x/s) by the forward three-term recurrence; valid for all real x,
// also outside the bulk [-2s, 2s].
inline double eval_rescaled(int m, double x, double s) {
    if (m < 0) throw std::invalid_argument("eval_rescaled: m must be >= 0");
    if (!(s > 0.0)) throw std::invalid_argument("eval_rescaled: s must be positive");
    if (m == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int j = 1; j < m; ++j) {
        double factor = (j == 1) ? 2.0 : 1.0;
        double next = x * cur - factor * s * s * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Fills values[m] = s^m T_m(x/s) for m = 0..m_max in one recurrence sweep.
inline void eval_rescaled_all(int m_max, double x, double s, std::vector<double>& values) {
    values.assign(static_cast<std::size_t>(m_max) + 1, 0.0);
    values[0] = 1.0;
    if (m_max == 0) return;
    values[1] = x;
    for (int j = 1; j < m_max; ++j) {
        double factor = (j == 1) ? 2.0 : 1.0;
        values[static_cast<std::size_t>(j) + 1] =
            x * values[static_cast<std::size_t>(j)] - factor * s * s * values[static_cast<std::size_t>(j) - 1];
    }
}

// Coefficients c_m with f(x) = sum_m c_m s^m T_m(x/s), from the exact inverse
// table: x^k = sum_m t_{k,m} s^{k-m} (s^m T_m(x/s)).
inline std::vector<double> expand_in_chebyshev(const MonomialPolynomial& f, double s,
                                               const ChebyshevTable& tab) {
    if (!(s > 0.0)) throw std::invalid_argument("expand_in_chebyshev: s must be positive");
    int deg = f.degree();
    if (deg > tab.max_degree)
        throw std::length_error("expand_in_chebyshev: polynomial degree exceeds table max_degree");
    std::vector<double> c(static_cast<std::size_t>(deg < 0 ? 0 : deg) + 1, 0.0);
    for (int k = 0; k <= deg; ++k) {
        double ak = f.coefficients[static_cast<std::size_t>(k)];
        if (ak == 0.0) continue;
        for (int m = k % 2; m <= k; m += 2)
            c[static_cast<std::size_t>(m)] +=
                ak * static_cast<double>(tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)]) *
                std::pow(s, k - m);
    }
    return c;
}

// Evaluates sum_m c_m s^m T_m(x/s); inverse of expand_in_chebyshev.
inline double eval_chebyshev_series(const std::vector<double>& c, double x, double s) {
    std::vector<double> basis;
    if (c.empty()) return 0.0;
    eval_rescaled_all(static_cast<int>(c.size()) - 1, x, s, basis);
    double acc = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) acc += c[m] * basis[m];
    return acc;
}

}  // namespace chebclt

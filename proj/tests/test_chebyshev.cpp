#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "chebclt/chebyshev.hpp"

using namespace chebclt;

namespace {

// Independent closed form for the monomial-to-Chebyshev expansion counts:
// expanding (2 cos t)^k over {2 cos(mt), 1} gives binomial coefficients.
std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t acc = 1;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
}

std::int64_t t_closed_form(int k, int m) {
    if ((k - m) % 2 != 0 || m > k) return 0;
    if (m >= 1) return binomial(k, (k - m) / 2);
    return k % 2 == 0 ? binomial(k, k / 2) : 0;
}

}  // namespace

TEST_CASE("coefficient rows match the frozen low-degree values", "[chebyshev]") {
    auto tab = chebyshev_table(6);
    CHECK(tab.T[0] == std::vector<std::int64_t>{1});
    CHECK(tab.T[1] == std::vector<std::int64_t>{0, 1});
    CHECK(tab.T[2] == std::vector<std::int64_t>{-2, 0, 1});
    CHECK(tab.T[3] == std::vector<std::int64_t>{0, -3, 0, 1});
    CHECK(tab.T[4] == std::vector<std::int64_t>{2, 0, -4, 0, 1});
}

TEST_CASE("coefficient rows satisfy the defining trigonometric identity", "[chebyshev]") {
    auto tab = chebyshev_table(20);
    for (int m = 1; m <= 20; ++m) {
        for (int g = 0; g <= 64; ++g) {
            double theta = M_PI * g / 64.0;
            double x = 2.0 * std::cos(theta);
            double poly = 0.0;
            for (int k = m; k >= 0; --k)
                poly = poly * x + static_cast<double>(tab.T[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]);
            CHECK(std::abs(poly - 2.0 * std::cos(m * theta)) < 1e-9);
            CHECK(std::abs(eval_rescaled(m, x, 1.0) - 2.0 * std::cos(m * theta)) < 1e-9);
        }
    }
}

TEST_CASE("inverse rows match frozen values and the closed form", "[chebyshev]") {
    auto tab = chebyshev_table(12);
    CHECK(tab.t[2][0] == 2);
    CHECK(tab.t[3][1] == 3);
    CHECK(tab.t[4][0] == 6);
    CHECK(tab.t[4][2] == 4);
    for (int k = 0; k <= 12; ++k) {
        CHECK(tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] == 1);
        for (int m = 0; m <= k; ++m)
            CHECK(tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] == t_closed_form(k, m));
    }
}

TEST_CASE("parity zeros in both tables", "[chebyshev]") {
    auto tab = chebyshev_table(15);
    for (int m = 0; m <= 15; ++m)
        for (int k = 0; k <= m; ++k)
            if ((m - k) % 2 == 1) {
                CHECK(tab.T[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] == 0);
                CHECK(tab.t[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] == 0);
            }
}

TEST_CASE("T and t are exact integer inverses up to degree 40", "[chebyshev]") {
    auto tab = chebyshev_table(40);
    CHECK(chebyshev_inverse_identity_holds(tab));
}

TEST_CASE("rescaled evaluation", "[chebyshev]") {
    CHECK(eval_rescaled(3, std::sqrt(3.0), 1.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(eval_rescaled(0, 123.4, 0.5) == 1.0);
    CHECK(eval_rescaled(2, 3.0, 1.0) == 7.0);
    // s-homogeneity: s^m T_m(x/s) against the unit-scale evaluation
    for (int m = 0; m <= 9; ++m)
        for (double x : {-3.0, -0.7, 0.1, 2.9}) {
            double s = 1.7;
            CHECK(eval_rescaled(m, x, s) ==
                  Catch::Approx(std::pow(s, m) * eval_rescaled(m, x / s, 1.0)).epsilon(1e-12));
        }
}

TEST_CASE("expansion in rescaled polynomials", "[chebyshev]") {
    auto tab = chebyshev_table(10);
    MonomialPolynomial x2{{0.0, 0.0, 1.0}};
    auto c = expand_in_chebyshev(x2, 1.0, tab);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 2.0);
    CHECK(c[1] == 0.0);
    CHECK(c[2] == 1.0);

    MonomialPolynomial x1{{0.0, 1.0}};
    auto c1 = expand_in_chebyshev(x1, 0.3, tab);
    REQUIRE(c1.size() == 2);
    CHECK(c1[0] == 0.0);
    CHECK(c1[1] == 1.0);

    MonomialPolynomial x3{{0.0, 0.0, 0.0, 1.0}};
    auto c3 = expand_in_chebyshev(x3, 1.0, tab);
    REQUIRE(c3.size() == 4);
    CHECK(c3[1] == 3.0);
    CHECK(c3[3] == 1.0);
}

TEST_CASE("expansion reconstructs the polynomial at random points", "[chebyshev]") {
    auto tab = chebyshev_table(10);
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    std::uniform_real_distribution<double> arg(-4.0, 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        MonomialPolynomial f;
        int deg = 1 + static_cast<int>(gen() % 9);
        f.coefficients.resize(static_cast<std::size_t>(deg) + 1);
        for (auto& a : f.coefficients) a = coeff(gen);
        double s = 0.5 + 1.5 * std::generate_canonical<double, 53>(gen);
        auto c = expand_in_chebyshev(f, s, tab);
        for (int pt = 0; pt < 10; ++pt) {
            double x = arg(gen);
            double direct = f.evaluate(x);
            double viaseries = eval_chebyshev_series(c, x, s);
            CHECK(viaseries == Catch::Approx(direct).epsilon(1e-10).margin(1e-10));
        }
    }
}

TEST_CASE("degree beyond the table is rejected", "[chebyshev]") {
    auto tab = chebyshev_table(3);
    MonomialPolynomial f = MonomialPolynomial::monomial(5);
    CHECK_THROWS_AS(expand_in_chebyshev(f, 1.0, tab), std::length_error);
}

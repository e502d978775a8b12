#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "chebclt/theory.hpp"

using namespace chebclt;

namespace {

// Independent quadrature for the arcsine-weight projections, used as the
// oracle for the exact coefficient route.
double bracket_by_quadrature(const MonomialPolynomial& f, double s, int m, int nodes) {
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double theta = (2.0 * i + 1.0) * M_PI / (2.0 * nodes);
        double x = 2.0 * std::cos(theta);
        acc += f.evaluate(s * x) * 2.0 * std::cos(m * theta);
    }
    return acc / (2.0 * nodes);
}

}  // namespace

TEST_CASE("limit variances for real ensembles", "[theory]") {
    CHECK(wigner_variance(1, 1, 2.0, 1.0, 3.0) == 2.0);
    CHECK(wigner_variance(1, 2, 2.0, 1.0, 3.0) == 4.0);
    CHECK(wigner_variance(3, 1, 2.0, 1.0, 3.0) == 6.0);
    CHECK(wigner_variance(5, 2, 2.0, 0.5, 1.0) == Catch::Approx(2 * 5 * 2 * std::pow(0.5, 5)));
    // degenerate fourth moment
    CHECK(wigner_variance(2, 1, 2.0, 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(wigner_variance(0, 1, 1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("the two m=2 forms agree identically", "[theory]") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(0.1, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        double ea2 = U(gen);
        double ea4 = ea2 * ea2 * (1.0 + 3.0 * std::generate_canonical<double, 53>(gen));
        int T = 1 + static_cast<int>(gen() % 3);
        double moment_form = wigner_variance(2, T, 1.0, ea2, ea4);
        double cumulant_form = wigner_variance_m2_cumulant_form(T, ea2, ea4 - 3 * ea2 * ea2);
        CHECK(moment_form == Catch::Approx(cumulant_form).epsilon(1e-13));
    }
}

TEST_CASE("orthogonal-normalized variances are proportional to the degree", "[theory]") {
    // E(d^2) = 2E(a^2) and vanishing fourth cumulant make V(m) = 2 m T E(a^2)^m
    for (double ea2 : {1.0, 0.49}) {
        for (int T : {1, 2}) {
            for (int m = 1; m <= 6; ++m) {
                double v = wigner_variance(m, T, 2.0 * ea2, ea2, 3.0 * ea2 * ea2);
                CHECK(v == Catch::Approx(2.0 * m * T * std::pow(ea2, m)));
            }
        }
    }
}

TEST_CASE("complex variance formula", "[theory]") {
    auto cg = EntryLaw::complex_gaussian(1.0);
    CHECK(complex_wigner_variance(2, cg) == Catch::Approx(2.0));  // 2(E|a|^4 - 1) with E|a|^4 = 2
    CHECK(complex_wigner_variance(3, cg) == Catch::Approx(3.0));  // correction vanishes
    CHECK(complex_wigner_variance(4, cg) == Catch::Approx(4.0));

    // four-point law: E(a^2) = 0 but E(a^4) = v^4, so the k = m/2 term bites
    double v = 0.9;
    auto cd = EntryLaw::complex_discrete(v);
    double abs2 = v * v;
    double expected = 4.0 * std::pow(abs2, 4) +
                      4.0 * (static_cast<double>(eulerian(3, 2)) / 6.0) * std::pow(v, 8);
    CHECK(complex_wigner_variance(4, cd) == Catch::Approx(expected));
    CHECK_THROWS_AS(complex_wigner_variance(1, cg), std::domain_error);
}

TEST_CASE("finite-n variance from exact counts", "[theory]") {
    auto diag = EntryLaw::gaussian(2.0);
    auto offdiag = EntryLaw::gaussian(1.0);
    for (int n : {4, 6, 8}) {
        CHECK(finite_n_variance(EquivalenceRelation::trivial(n), 1, diag, offdiag) == Catch::Approx(2.0));
        CHECK(finite_n_variance(EquivalenceRelation::flip(8), 1, diag, offdiag) == Catch::Approx(4.0));
        double v2 = finite_n_variance(EquivalenceRelation::trivial(n), 2, diag, offdiag);
        CHECK(v2 == Catch::Approx((3.0 - 1.0) * 2.0 * n * (n - 1) / (static_cast<double>(n) * n)));
    }
    // the finite-n value approaches the limit
    for (int m : {1, 2}) {
        for (bool use_flip : {false, true}) {
            double prev_gap = 1e9;
            for (int n : {4, 6, 8}) {
                auto rel = use_flip ? EquivalenceRelation::flip(n) : EquivalenceRelation::trivial(n);
                double vn = finite_n_variance(rel, m, diag, offdiag);
                double vlim = wigner_variance(m, rel.period(), 2.0, 1.0, 3.0);
                double gap = std::abs(vn - vlim) / vlim;
                CHECK(gap <= prev_gap + 1e-12);
                prev_gap = gap;
            }
        }
    }
}

TEST_CASE("the two printed prefactor transcriptions differ off unit variance", "[theory]") {
    auto diag = EntryLaw::gaussian(1.0);
    auto offdiag = EntryLaw::gaussian(0.25);
    auto rel = EquivalenceRelation::trivial(6);
    double a = finite_n_variance(rel, 3, diag, offdiag, VarianceTranscription::pairing_sum_exponent_m);
    double b = finite_n_variance(rel, 3, diag, offdiag, VarianceTranscription::printed_exponent_2m);
    CHECK(a == Catch::Approx(b * std::pow(0.25, -3)));
    auto offdiag_unit = EntryLaw::gaussian(1.0);
    CHECK(finite_n_variance(rel, 3, diag, offdiag_unit, VarianceTranscription::pairing_sum_exponent_m) ==
          finite_n_variance(rel, 3, diag, offdiag_unit, VarianceTranscription::printed_exponent_2m));
}

TEST_CASE("covariance prediction assembles the conjugated diagonal", "[theory]") {
    auto tab = chebyshev_table(5);
    std::vector<double> V{2.0, 4.0, 6.0, 8.0, 10.0};
    auto M = covariance_prediction(4, V, 1.0, tab);
    CHECK(M(0, 0) == Catch::Approx(V[0]));
    CHECK(M(1, 2) == 0.0);  // parity
    CHECK(M(2, 2) == Catch::Approx(9.0 * V[0] + V[2]));
    CHECK(M(0, 2) == Catch::Approx(3.0 * V[0]));
    CHECK((M - M.transpose()).norm() == 0.0);

    // non-unit scale: entries pick up s^{k1+k2-2m}
    double s = 0.5;
    auto Ms = covariance_prediction(4, V, s, tab);
    CHECK(Ms(2, 2) == Catch::Approx(9.0 * std::pow(s, 4) * V[0] + V[2]));
}

TEST_CASE("weight projections: exact route equals quadrature", "[theory]") {
    auto tab = chebyshev_table(10);
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 10; ++trial) {
        MonomialPolynomial f;
        f.coefficients.resize(1 + gen() % 7 + 1);
        for (auto& a : f.coefficients) a = -1.0 + 2.0 * std::generate_canonical<double, 53>(gen);
        double s = 0.6 + std::generate_canonical<double, 53>(gen);
        for (int m = 1; m <= 8; ++m) {
            double exact = chebyshev_weight_bracket(f, s, m, tab);
            double quad = bracket_by_quadrature(f, s, m, 64);
            CHECK(exact == Catch::Approx(quad).margin(1e-10));
        }
    }
}

TEST_CASE("log-mgf: hand-checked values under orthogonal normalization", "[theory]") {
    auto tab = chebyshev_table(10);
    std::vector<double> V(8);
    for (int m = 1; m <= 8; ++m) V[static_cast<std::size_t>(m) - 1] = wigner_variance(m, 1, 2.0, 1.0, 3.0);

    // f = x: (1/2) V(1) c_1^2 = 1; f = x^2: (1/2) V(2) c_2^2 = 2; f = x^3: 12
    auto check_both = [&](const MonomialPolynomial& f, double expected) {
        double lhs = log_mgf_chebyshev_sum(f, 1.0, V, tab);
        auto rhs = log_mgf_double_integral(f, 1.0, 1, 1.0, 0.0, 2.0, tab);
        CHECK(lhs == Catch::Approx(expected).epsilon(1e-9));
        CHECK(rhs.value == Catch::Approx(expected).epsilon(1e-9));
        CHECK(rhs.converged);
    };
    check_both(MonomialPolynomial::monomial(1), 1.0);
    check_both(MonomialPolynomial::monomial(2), 2.0);
    check_both(MonomialPolynomial::monomial(3), 12.0);
}

TEST_CASE("log-mgf: the two evaluators agree for general parameters", "[theory]") {
    auto tab = chebyshev_table(10);
    // parameters (T, E(a^2), C4, E(d^2)) beyond the orthogonal normalization,
    // with the matching bulk scale s^2 = E(a^2)
    struct Params {
        int T;
        double ea2, c4, ed2;
    };
    for (const auto& p : {Params{1, 1.0, 0.0, 5.0}, Params{2, 1.0, 1.5, 2.0}, Params{1, 0.49, -0.2, 1.2}}) {
        double s = std::sqrt(p.ea2);
        std::vector<double> V(10);
        double ea4 = p.c4 + 3.0 * p.ea2 * p.ea2;
        for (int m = 1; m <= 10; ++m)
            V[static_cast<std::size_t>(m) - 1] = wigner_variance(m, p.T, p.ed2, p.ea2, ea4);
        for (int deg = 1; deg <= 5; ++deg) {
            auto f = MonomialPolynomial::monomial(deg);
            double lhs = log_mgf_chebyshev_sum(f, s, V, tab);
            auto rhs = log_mgf_double_integral(f, s, p.T, p.ea2, p.c4, p.ed2, tab);
            INFO("T=" << p.T << " ea2=" << p.ea2 << " deg=" << deg);
            CHECK(rhs.converged);
            CHECK(lhs == Catch::Approx(rhs.value).margin(1e-6));
        }
        // f = x with E(d^2) = 5, E(a^2) = 1: (1/2) * 5 = 2.5
        if (p.ed2 == 5.0) {
            CHECK(log_mgf_chebyshev_sum(MonomialPolynomial::monomial(1), s, V, tab) ==
                  Catch::Approx(2.5));
        }
    }
    // constant test functions contribute nothing
    MonomialPolynomial constant{{3.0}};
    std::vector<double> V{2.0, 4.0, 6.0};
    CHECK(log_mgf_chebyshev_sum(constant, 1.0, V, tab) == 0.0);
    CHECK(log_mgf_double_integral(constant, 1.0, 1, 1.0, 0.0, 2.0, tab).value == 0.0);
}

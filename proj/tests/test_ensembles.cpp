#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "chebclt/ensembles.hpp"

using namespace chebclt;

TEST_CASE("relation orbits and canonical labels", "[ensembles]") {
    auto trivial = EquivalenceRelation::trivial(5);
    CHECK(trivial.class_members(1, 3) == std::vector<std::pair<int, int>>{{1, 3}, {3, 1}});
    CHECK(trivial.canonical(3, 1) == std::pair{1, 3});
    CHECK(trivial.class_label(1, 3) == trivial.class_label(3, 1));

    auto flip = EquivalenceRelation::flip(4);
    // (0,1) ~ (3,2) under p -> n-1-p
    CHECK(flip.class_label(0, 1) == flip.class_label(3, 2));
    CHECK(flip.class_label(0, 1) == flip.class_label(1, 0));
    CHECK(flip.class_members(0, 1).size() == 4);

    auto orbit = EquivalenceRelation::period_orbit(7, 3);
    // two 3-cycles plus one fixed point
    int fixed = 0;
    for (int p = 0; p < 7; ++p) {
        int q = p;
        for (int t = 0; t < 3; ++t) q = orbit.phi(q);
        CHECK(q == p);
        if (orbit.phi(p) == p) ++fixed;
    }
    CHECK(fixed == 1);

    CHECK_THROWS_AS(EquivalenceRelation::custom({0, 2, 1}, 3), std::invalid_argument);
    CHECK_NOTHROW(EquivalenceRelation::custom({0, 2, 1}, 2));
}

TEST_CASE("entry law closed-form moments", "[ensembles]") {
    auto g = EntryLaw::gaussian(0.49);
    CHECK(g.moment(1) == 0.0);
    CHECK(g.moment(2) == Catch::Approx(0.49));
    CHECK(g.moment(4) == Catch::Approx(3.0 * 0.49 * 0.49));
    CHECK(g.moment(6) == Catch::Approx(15.0 * std::pow(0.49, 3)));
    CHECK(g.fourth_cumulant() == Catch::Approx(0.0).margin(1e-15));

    auto r = EntryLaw::rademacher(2.0);
    CHECK(r.moment(2) == 4.0);
    CHECK(r.moment(4) == 16.0);
    CHECK(r.moment(3) == 0.0);
    CHECK(r.fourth_cumulant() == Catch::Approx(16.0 - 3 * 16.0));

    auto u = EntryLaw::uniform_centered(3.0);
    CHECK(u.moment(2) == Catch::Approx(3.0));  // h^2/3
    CHECK(u.moment(4) == Catch::Approx(81.0 / 5.0));

    auto tp = EntryLaw::three_point(2.0, 1.0, 0.1);  // p_minus = 0.2
    CHECK(tp.moment(1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(tp.moment(2) == Catch::Approx(0.1 * 4.0 + 0.2 * 1.0));
    CHECK(tp.moment(3) == Catch::Approx(0.1 * 8.0 - 0.2 * 1.0));
    CHECK(tp.support().size() == 3);

    auto cg = EntryLaw::complex_gaussian(1.0);
    CHECK(cg.abs2() == Catch::Approx(1.0));
    CHECK(cg.abs4() == Catch::Approx(2.0));
    CHECK(std::abs(cg.mixed_moment(2, 0)) == Catch::Approx(0.0));
    CHECK(std::abs(cg.mixed_moment(3, 3) - std::complex<double>(6.0, 0.0)) < 1e-12);

    auto cd = EntryLaw::complex_discrete(1.5);
    CHECK(cd.abs2() == Catch::Approx(2.25));
    CHECK(std::abs(cd.mixed_moment(2, 0)) == Catch::Approx(0.0));
    CHECK(cd.mixed_moment(4, 0).real() == Catch::Approx(std::pow(1.5, 4)));
}

TEST_CASE("empirical law moments agree with the declared values", "[ensembles]") {
    const int draws = 100000;
    for (auto law : {EntryLaw::gaussian(1.0), EntryLaw::rademacher(1.0),
                     EntryLaw::uniform_centered(2.0), EntryLaw::three_point(2.0, 1.0, 0.1)}) {
        Rng rng = Rng::keyed(99, 7);
        double sum2 = 0.0, sum4 = 0.0;
        for (int i = 0; i < draws; ++i) {
            double a = law.draw(rng);
            sum2 += a * a;
            sum4 += a * a * a * a;
        }
        double mean2 = sum2 / draws;
        double var_of_a2 = sum4 / draws - mean2 * mean2;
        double se = std::sqrt(std::max(var_of_a2, 1e-30) / draws);
        CHECK(std::abs(mean2 - law.moment(2)) <= 3.0 * se + 1e-12);
    }
    {
        Rng rng = Rng::keyed(99, 8);
        auto law = EntryLaw::complex_gaussian(1.0);
        double sum2 = 0.0;
        for (int i = 0; i < draws; ++i) sum2 += std::norm(law.draw_complex(rng));
        CHECK(std::abs(sum2 / draws - 1.0) < 3.0 * std::sqrt(1.0 / draws));
    }
}

TEST_CASE("sampled matrices are exactly Hermitian with class-equal entries", "[ensembles]") {
    EnsembleSpec spec;
    spec.relation = EquivalenceRelation::trivial(6);
    spec.diag_law = EntryLaw::rademacher(std::sqrt(2.0));
    spec.offdiag_law = EntryLaw::rademacher(1.0);
    auto X = sample_matrix_real(spec, 31);
    CHECK(X == X.transpose().eval());
    CHECK(X(0, 1) == X(1, 0));

    EnsembleSpec flip_spec;
    flip_spec.relation = EquivalenceRelation::flip(4);
    auto Y = sample_matrix_real(flip_spec, 5);
    // 1-based (1,2) and (4,3)
    CHECK(Y(0, 1) == Y(3, 2));
    CHECK(Y(0, 0) == Y(3, 3));

    EnsembleSpec orbit_spec;
    orbit_spec.relation = EquivalenceRelation::period_orbit(9, 3);
    auto Z = sample_matrix_real(orbit_spec, 17);
    for (int p = 0; p < 9; ++p)
        for (int q = 0; q < 9; ++q)
            CHECK(Z(p, q) == Z(orbit_spec.relation.phi(p), orbit_spec.relation.phi(q)));
}

TEST_CASE("sampling is deterministic in the seed", "[ensembles]") {
    EnsembleSpec spec;
    spec.relation = EquivalenceRelation::flip(8);
    auto a = sample_matrix_real(spec, 2024);
    auto b = sample_matrix_real(spec, 2024);
    CHECK(a == b);
    auto c = sample_matrix_real(spec, 2025);
    CHECK(a != c);
}

TEST_CASE("complex sampling: Hermitian, real diagonal, trivial relation only", "[ensembles]") {
    EnsembleSpec spec;
    spec.relation = EquivalenceRelation::trivial(5);
    spec.offdiag_law = EntryLaw::complex_gaussian(1.0);
    auto X = sample_matrix_complex(spec, 7);
    for (int p = 0; p < 5; ++p) {
        CHECK(X(p, p).imag() == 0.0);
        for (int q = 0; q < 5; ++q) CHECK(X(p, q) == std::conj(X(q, p)));
    }
    EnsembleSpec bad = spec;
    bad.relation = EquivalenceRelation::flip(5);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sparse sampling: gamma = 0 reproduces the dense draw", "[ensembles]") {
    EnsembleSpec dense;
    dense.relation = EquivalenceRelation::trivial(12);
    EnsembleSpec sparse0 = dense;
    sparse0.gamma = 0.0;
    CHECK(sample_matrix_real(dense, 77) == sample_matrix_real(sparse0, 77));

    EnsembleSpec sparse = dense;
    sparse.gamma = 0.8;
    auto X = sample_matrix_real(sparse, 77);
    CHECK(X == X.transpose().eval());
    int zeros = 0;
    for (int p = 0; p < 12; ++p)
        for (int q = 0; q < 12; ++q)
            if (X(p, q) == 0.0) ++zeros;
    CHECK(zeros > 0);  // at gamma = 0.8 most classes are masked
}

TEST_CASE("alpha statistics by exhaustion", "[ensembles]") {
    for (int n : {5, 10, 20}) {
        auto st = alpha_stats(EquivalenceRelation::trivial(n));
        CHECK(st.alpha0_hat == 0);
        CHECK(st.alpha2 == 2);
        CHECK(st.alpha1 <= 2 * n);
        CHECK(st.alpha3 <= 2);
    }
    auto flip10 = alpha_stats(EquivalenceRelation::flip(10));
    CHECK(flip10.alpha2 == 4);
}

TEST_CASE("growth conditions hold along n for the orbit relations", "[ensembles]") {
    for (auto make : {+[](int n) { return EquivalenceRelation::flip(n); },
                      +[](int n) { return EquivalenceRelation::period_orbit(n, 3); }}) {
        std::int64_t first_alpha2 = -1;
        double first_ratio = -1.0, prev_ratio = 1e9;
        for (int n : {10, 20, 40, 80}) {
            auto st = alpha_stats(make(n));
            if (first_alpha2 < 0) first_alpha2 = st.alpha2;
            CHECK(st.alpha2 == first_alpha2);  // bounded, n-independent
            double ratio = static_cast<double>(st.alpha0_hat) / (static_cast<double>(n) * n);
            if (first_ratio < 0.0) first_ratio = std::max(ratio, 1e-9);
            CHECK(ratio <= prev_ratio + 1e-12);
            prev_ratio = ratio;
        }
        // the O(1/n) decay leaves at most half of the n=10 value by n=80
        CHECK(prev_ratio <= 0.5 * first_ratio + 1e-12);
        CHECK(prev_ratio < 0.10);
    }
}

TEST_CASE("diagonal pair and off-diagonal quadruple counts", "[ensembles]") {
    for (int n : {4, 8, 12}) {
        CHECK(count_diag_pairs(EquivalenceRelation::trivial(n)) == n);
        CHECK(count_offdiag_quadruples(EquivalenceRelation::trivial(n)) == 2 * n * (n - 1));
    }
    CHECK(count_diag_pairs(EquivalenceRelation::flip(8)) == 16);
    CHECK(count_diag_pairs(EquivalenceRelation::flip(7)) == 13);  // central fixed point
}

TEST_CASE("off-diagonal multi-index counts", "[ensembles]") {
    auto g = DihedralElement::group(3).front();
    double prev = 0.0;
    for (int n : {4, 5, 6}) {
        auto count = count_S_OD(g, EquivalenceRelation::trivial(n));
        double ratio = static_cast<double>(count) / std::pow(n, 3);
        if (n == 6) CHECK(ratio >= 0.4);
        CHECK(ratio <= 1.0);
        CHECK(ratio > prev);
        prev = ratio;
    }
    // the flip count runs at about twice the classical one
    auto flip6 = count_S_OD(g, EquivalenceRelation::flip(6));
    auto triv6 = count_S_OD(g, EquivalenceRelation::trivial(6));
    CHECK(static_cast<double>(flip6) / static_cast<double>(triv6) == Catch::Approx(2.0).epsilon(0.35));

    // the count does not depend on the group element
    for (const char* which : {"trivial", "flip"}) {
        auto rel = std::string(which) == "flip" ? EquivalenceRelation::flip(5)
                                                : EquivalenceRelation::trivial(5);
        std::set<std::int64_t> counts;
        for (const auto& h : DihedralElement::group(3)) counts.insert(count_S_OD(h, rel));
        CHECK(counts.size() == 1);
    }
}

TEST_CASE("group action preserves compatibility classes", "[ensembles]") {
    // if P is compatible with the partition of g1, then g2.P is compatible
    // with the partition of g2*g1
    auto rel = EquivalenceRelation::trivial(5);
    const int m = 3, n = 5;
    auto group = DihedralElement::group(m);
    auto compatible_with = [&](const MultiIndex& P, const DihedralElement& g) {
        auto reduced = canonical_reduced(g);
        for (int i = 0; i < 2 * m; ++i) {
            for (int l = i + 1; l < 2 * m; ++l) {
                Point a{i / m, i % m + 1}, b{l / m, l % m + 1};
                auto pa = P.entries[static_cast<std::size_t>(a.circle)][static_cast<std::size_t>(a.pos - 1)];
                auto pb = P.entries[static_cast<std::size_t>(b.circle)][static_cast<std::size_t>(b.pos - 1)];
                bool same_class = rel.class_label(pa.first, pa.second) == rel.class_label(pb.first, pb.second);
                if (same_class != reduced.same_block(a, b)) return false;
            }
        }
        return true;
    };
    // assemble a compatible index for the identity: both circles identical
    MultiIndex P;
    P.n = n;
    P.entries[0] = {{0, 1}, {1, 2}, {2, 0}};
    P.entries[1] = P.entries[0];
    DihedralElement identity{m, false, 0};
    REQUIRE(compatible_with(P, identity));
    for (const auto& g2 : group) {
        auto moved = group_action(g2, P);
        CHECK(moved.consistent());
        CHECK(compatible_with(moved, g2.compose(identity)));
    }
}

TEST_CASE("property filter is vacuous on all-connector partitions", "[ensembles]") {
    auto rel = EquivalenceRelation::trivial(4);
    for (int m : {2, 3}) {
        auto g = DihedralElement::group(m).front();
        MultiIndexCountOptions plain, with_p;
        with_p.require_property_P = true;
        CHECK(count_compatible_multi_indices(canonical_reduced(g), rel, plain) ==
              count_compatible_multi_indices(canonical_reduced(g), rel, with_p));
    }
    // with a same-circle pair block present the filter can bite
    AnnularPartition pi(3, 1, {{Point{0, 1}, Point{0, 2}}, {Point{0, 3}, Point{1, 1}}});
    MultiIndexCountOptions plain, with_p;
    with_p.require_property_P = true;
    auto s = count_compatible_multi_indices(pi, rel, plain);
    auto ps = count_compatible_multi_indices(pi, rel, with_p);
    CHECK(ps <= s);
}

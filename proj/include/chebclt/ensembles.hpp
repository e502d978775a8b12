#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chebclt/common.hpp"
#include "chebclt/partitions.hpp"
#include "chebclt/rng.hpp"

namespace chebclt {

// ---------------------------------------------------------------------------
// Equivalence relations on index pairs: which matrix entries carry the same
// random variable. Every relation contains the transposition symmetry
// (p,q) ~ (q,p); the orbit relations additionally identify (p,q) with
// (phi^t p, phi^t q).
// ---------------------------------------------------------------------------

class EquivalenceRelation {
public:
    enum class Kind { trivial_wigner, flip, period_orbit, custom };

    static EquivalenceRelation trivial(int n) {
        EquivalenceRelation r;
        r.kind_ = Kind::trivial_wigner;
        r.n_ = check_n(n);
        r.period_ = 1;
        return r;
    }

    // phi(p) = n-1-p (0-based), an involution: the flip matrix model.
    static EquivalenceRelation flip(int n) {
        EquivalenceRelation r;
        r.kind_ = Kind::flip;
        r.n_ = check_n(n);
        r.period_ = 2;
        r.phi_.resize(static_cast<std::size_t>(n));
        for (int p = 0; p < n; ++p) r.phi_[static_cast<std::size_t>(p)] = n - 1 - p;
        return r;
    }

    // phi = floor(n/T) disjoint T-cycles on consecutive blocks, fixed points on
    // the remainder.
    static EquivalenceRelation period_orbit(int n, int T) {
        if (T < 1) throw std::invalid_argument("period_orbit: T must be >= 1");
        EquivalenceRelation r;
        r.kind_ = Kind::period_orbit;
        r.n_ = check_n(n);
        r.period_ = T;
        r.phi_.resize(static_cast<std::size_t>(n));
        int full = (n / T) * T;
        for (int p = 0; p < n; ++p) {
            if (p < full) {
                int block = p / T;
                r.phi_[static_cast<std::size_t>(p)] = block * T + (p - block * T + 1) % T;
            } else {
                r.phi_[static_cast<std::size_t>(p)] = p;
            }
        }
        return r;
    }

    static EquivalenceRelation custom(std::vector<int> phi, int period) {
        EquivalenceRelation r;
        r.kind_ = Kind::custom;
        r.n_ = check_n(static_cast<int>(phi.size()));
        r.period_ = period;
        r.phi_ = std::move(phi);
        std::vector<int> probe(static_cast<std::size_t>(r.n_));
        std::iota(probe.begin(), probe.end(), 0);
        std::vector<bool> seen(static_cast<std::size_t>(r.n_), false);
        for (int v : r.phi_) {
            if (v < 0 || v >= r.n_ || seen[static_cast<std::size_t>(v)])
                throw std::invalid_argument("custom relation: phi is not a permutation");
            seen[static_cast<std::size_t>(v)] = true;
        }
        for (int t = 0; t < period; ++t)
            for (int& p : probe) p = r.phi_[static_cast<std::size_t>(p)];
        for (int p = 0; p < r.n_; ++p)
            if (probe[static_cast<std::size_t>(p)] != p)
                throw std::invalid_argument("custom relation: phi^period != id");
        return r;
    }

    Kind kind() const { return kind_; }
    int n() const { return n_; }
    int period() const { return period_; }

    int phi(int p) const {
        return kind_ == Kind::trivial_wigner ? p : phi_[static_cast<std::size_t>(p)];
    }

    // All pairs equivalent to (p,q), deduplicated and sorted.
    std::vector<std::pair<int, int>> class_members(int p, int q) const {
        std::vector<std::pair<int, int>> out;
        int a = p, b = q;
        for (int t = 0; t < period_; ++t) {
            out.emplace_back(a, b);
            out.emplace_back(b, a);
            a = phi(a);
            b = phi(b);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::pair<int, int> canonical(int p, int q) const {
        if (kind_ == Kind::trivial_wigner) return {std::min(p, q), std::max(p, q)};
        auto members = class_members(p, q);
        return members.front();
    }

    std::uint64_t class_label(int p, int q) const {
        auto c = canonical(p, q);
        return static_cast<std::uint64_t>(c.first) * static_cast<std::uint64_t>(n_) +
               static_cast<std::uint64_t>(c.second);
    }

private:
    static int check_n(int n) {
        if (n < 1) throw std::invalid_argument("EquivalenceRelation: n must be >= 1");
        return n;
    }

    Kind kind_ = Kind::trivial_wigner;
    int n_ = 1;
    int period_ = 1;
    std::vector<int> phi_;
};

// ---------------------------------------------------------------------------
// Entry distributions with closed-form moments. All laws are centered; the
// moment tables are what the exact oracles and the limit formulas consume.
// ---------------------------------------------------------------------------

class EntryLaw {
public:
    enum class Kind { gaussian, rademacher, uniform_centered, three_point, complex_gaussian, complex_discrete };

    static EntryLaw gaussian(double variance) {
        EntryLaw l(Kind::gaussian);
        l.require_positive(variance, "variance");
        l.a_ = std::sqrt(variance);
        return l;
    }

    // +/- alpha with probability 1/2 each.
    static EntryLaw rademacher(double alpha) {
        EntryLaw l(Kind::rademacher);
        l.require_positive(alpha, "alpha");
        l.a_ = alpha;
        return l;
    }

    static EntryLaw uniform_centered(double half_width) {
        EntryLaw l(Kind::uniform_centered);
        l.require_positive(half_width, "half_width");
        l.a_ = half_width;
        return l;
    }

    // Atoms {+v_plus, -v_minus, 0}; p_minus is forced by centering, so
    // asymmetric laws with nonzero odd moments are available.
    static EntryLaw three_point(double v_plus, double v_minus, double p_plus) {
        EntryLaw l(Kind::three_point);
        l.require_positive(v_plus, "v_plus");
        l.require_positive(v_minus, "v_minus");
        if (!(p_plus > 0.0)) throw std::invalid_argument("EntryLaw: p_plus must be positive");
        l.a_ = v_plus;
        l.b_ = v_minus;
        l.p_ = p_plus;
        if (l.p_ + l.p_minus() > 1.0 + 1e-12)
            throw std::invalid_argument("EntryLaw: three_point probabilities exceed 1");
        return l;
    }

    static EntryLaw three_point_symmetric(double v, double p) { return three_point(v, v, p); }

    static EntryLaw complex_gaussian(double mean_abs_squared) {
        EntryLaw l(Kind::complex_gaussian);
        l.require_positive(mean_abs_squared, "E|a|^2");
        l.a_ = std::sqrt(mean_abs_squared);
        return l;
    }

    // Uniform on {v, iv, -v, -iv}: E(a^2) = 0 but E(a^4) = v^4 != 0.
    static EntryLaw complex_discrete(double v) {
        EntryLaw l(Kind::complex_discrete);
        l.require_positive(v, "v");
        l.a_ = v;
        return l;
    }

    Kind kind() const { return kind_; }
    bool is_complex() const { return kind_ == Kind::complex_gaussian || kind_ == Kind::complex_discrete; }
    bool finite_support() const {
        return kind_ == Kind::rademacher || kind_ == Kind::three_point || kind_ == Kind::complex_discrete;
    }

    // E(a^r) for real laws.
    double moment(int r) const {
        if (r < 0) throw std::invalid_argument("EntryLaw::moment: negative order");
        if (r == 0) return 1.0;
        switch (kind_) {
            case Kind::gaussian: {
                if (r % 2 == 1) return 0.0;
                double acc = 1.0;
                for (int i = 1; i < r; i += 2) acc *= static_cast<double>(i);  // (r-1)!!
                return acc * std::pow(a_ * a_, r / 2);
            }
            case Kind::rademacher:
                return r % 2 == 1 ? 0.0 : std::pow(a_, r);
            case Kind::uniform_centered:
                return r % 2 == 1 ? 0.0 : std::pow(a_, r) / static_cast<double>(r + 1);
            case Kind::three_point:
                return p_ * std::pow(a_, r) + p_minus() * std::pow(-b_, r);
            default:
                throw std::domain_error("EntryLaw::moment: law is complex; use mixed_moment");
        }
    }

    // E(a^j conj(a)^l); defined for all laws (real laws fall back to moments).
    std::complex<double> mixed_moment(int j, int l) const {
        if (j < 0 || l < 0) throw std::invalid_argument("EntryLaw::mixed_moment: negative order");
        switch (kind_) {
            case Kind::complex_gaussian: {
                if (j != l) return 0.0;
                double acc = 1.0;
                for (int i = 2; i <= j; ++i) acc *= static_cast<double>(i);  // j!
                return acc * std::pow(a_ * a_, j);
            }
            case Kind::complex_discrete:
                // average of omega^{j-l} over the 4th roots of unity
                return mod_pos(j - l, 4) == 0 ? std::pow(a_, j + l) : 0.0;
            default:
                return moment(j + l);
        }
    }

    double abs2() const { return std::real(mixed_moment(1, 1)); }
    double abs4() const { return std::real(mixed_moment(2, 2)); }
    double fourth_cumulant() const {
        double m2 = moment(2);
        return moment(4) - 3.0 * m2 * m2;
    }

    // (value, probability) atoms for the finite-support real laws.
    std::vector<std::pair<double, double>> support() const {
        switch (kind_) {
            case Kind::rademacher:
                return {{a_, 0.5}, {-a_, 0.5}};
            case Kind::three_point: {
                std::vector<std::pair<double, double>> s{{a_, p_}, {-b_, p_minus()}};
                double p0 = 1.0 - p_ - p_minus();
                if (p0 > 1e-12) s.emplace_back(0.0, p0);
                return s;
            }
            default:
                throw std::domain_error("EntryLaw::support: law does not have finite real support");
        }
    }

    double draw(Rng& rng) const {
        switch (kind_) {
            case Kind::gaussian:
                return a_ * rng.next_normal();
            case Kind::rademacher:
                return rng.next_bool() ? a_ : -a_;
            case Kind::uniform_centered:
                return a_ * (2.0 * rng.next_double() - 1.0);
            case Kind::three_point: {
                double u = rng.next_double();
                if (u < p_) return a_;
                if (u < p_ + p_minus()) return -b_;
                return 0.0;
            }
            default:
                throw std::domain_error("EntryLaw::draw: law is complex; use draw_complex");
        }
    }

    std::complex<double> draw_complex(Rng& rng) const {
        switch (kind_) {
            case Kind::complex_gaussian: {
                double scale = a_ / std::sqrt(2.0);
                double re = rng.next_normal();
                double im = rng.next_normal();
                return {scale * re, scale * im};
            }
            case Kind::complex_discrete: {
                switch (rng.next_u64() & 3u) {
                    case 0: return {a_, 0.0};
                    case 1: return {0.0, a_};
                    case 2: return {-a_, 0.0};
                    default: return {0.0, -a_};
                }
            }
            default:
                return {draw(rng), 0.0};
        }
    }

    std::string name() const {
        switch (kind_) {
            case Kind::gaussian: return "gaussian";
            case Kind::rademacher: return "rademacher";
            case Kind::uniform_centered: return "uniform";
            case Kind::three_point: return "three-point";
            case Kind::complex_gaussian: return "complex-gaussian";
            case Kind::complex_discrete: return "complex-discrete";
        }
        return "?";
    }

    // Raw parameters, for serialization.
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    double param_p() const { return p_; }

private:
    explicit EntryLaw(Kind k) : kind_(k) {}

    void require_positive(double v, const char* what) const {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("EntryLaw: ") + what + " must be positive");
    }

    double p_minus() const { return p_ * a_ / b_; }

    Kind kind_;
    double a_ = 1.0;  // scale: sigma, alpha, half-width, v_plus, sqrt(E|a|^2)
    double b_ = 1.0;  // v_minus for three_point
    double p_ = 0.5;  // p_plus for three_point
};

// ---------------------------------------------------------------------------
// Ensemble description and sampling.
// ---------------------------------------------------------------------------

struct EnsembleSpec {
    EquivalenceRelation relation = EquivalenceRelation::trivial(1);
    EntryLaw diag_law = EntryLaw::gaussian(2.0);
    EntryLaw offdiag_law = EntryLaw::gaussian(1.0);
    double gamma = 0.0;  // sparsity; 0 reproduces the dense ensemble exactly

    int n() const { return relation.n(); }
    bool complex() const { return offdiag_law.is_complex(); }
    double s() const { return std::sqrt(offdiag_law.abs2()); }
    // Orbit count of the diagonal identification; the variance multiplier T.
    int period() const { return relation.period(); }

    void validate() const {
        if (diag_law.is_complex())
            throw std::invalid_argument("EnsembleSpec: diagonal entries must be real-valued");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("EnsembleSpec: gamma must be in [0,1]");
        if (complex() && relation.kind() != EquivalenceRelation::Kind::trivial_wigner)
            throw std::invalid_argument(
                "EnsembleSpec: complex entries are supported for the trivial relation only "
                "(conjugation cannot be oriented consistently on larger orbits)");
        if (offdiag_law.abs4() < offdiag_law.abs2() * offdiag_law.abs2() - 1e-12)
            throw std::invalid_argument("EnsembleSpec: E|a|^4 < E|a|^2)^2 is impossible");
    }
};

namespace detail {

inline constexpr std::uint64_t kEntryStreamSalt = 0x656E747279ULL;  // per-class value stream

}  // namespace detail

// One draw per equivalence class, replicated over the class; Hermitian by
// construction to exact bit equality. Deterministic in (spec, seed) and
// independent of traversal order: every class owns the stream keyed by
// (seed, class label).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sample_matrix(const EnsembleSpec& spec,
                                                                    std::uint64_t seed) {
    spec.validate();
    constexpr bool complex_scalar = !std::is_same_v<Scalar, double>;
    if (spec.complex() != complex_scalar)
        throw std::invalid_argument("sample_matrix: scalar type does not match the ensemble field");
    const int n = spec.n();
    const double dense_scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double sparse_scale = std::pow(static_cast<double>(n), (spec.gamma - 1.0) / 2.0);
    const double keep_prob = std::pow(static_cast<double>(n), -spec.gamma);

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> X(n, n);
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            auto canon = spec.relation.canonical(p, q);
            if (canon != std::pair{p, q}) continue;  // one draw per class
            std::uint64_t label = spec.relation.class_label(p, q);
            Rng rng = Rng::keyed(seed, label, detail::kEntryStreamSalt);
            Scalar value;
            if (p == q) {
                value = Scalar(spec.diag_law.draw(rng));
            } else if constexpr (complex_scalar) {
                value = spec.offdiag_law.draw_complex(rng);
            } else {
                value = Scalar(spec.offdiag_law.draw(rng));
            }
            double scale = dense_scale;
            if (spec.gamma > 0.0) {
                bool keep = rng.next_bernoulli(keep_prob);
                scale = keep ? sparse_scale : 0.0;
            }
            value *= Scalar(scale);
            for (auto [a, b] : spec.relation.class_members(p, q)) {
                if constexpr (complex_scalar) {
                    // trivial relation: the class is {(p,q),(q,p)} with p <= q
                    X(a, b) = (a <= b) ? value : std::conj(value);
                } else {
                    X(a, b) = value;
                }
            }
        }
    }
    return X;
}

inline Eigen::MatrixXd sample_matrix_real(const EnsembleSpec& spec, std::uint64_t seed) {
    return sample_matrix<double>(spec, seed);
}
inline Eigen::MatrixXcd sample_matrix_complex(const EnsembleSpec& spec, std::uint64_t seed) {
    return sample_matrix<std::complex<double>>(spec, seed);
}

// ---------------------------------------------------------------------------
// Exact combinatorial statistics of a relation, by exhaustion over classes.
// ---------------------------------------------------------------------------

struct AlphaStats {
    std::int64_t alpha1 = 0;  // max_p #{(q,p',q') : (p,q) ~ (p',q')}
    std::int64_t alpha2 = 0;  // max class size
    std::int64_t alpha3 = 0;  // max_{p,q,p'} #{q' : (p,q) ~ (p',q')}
    std::int64_t alpha0_hat = 0;  // #{(p,q,p') : (p,q) ~ (q,p'), p != p'}
};

namespace detail {

inline std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> classes_by_label(
    const EquivalenceRelation& rel) {
    std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> classes;
    int n = rel.n();
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) classes[rel.class_label(p, q)].emplace_back(p, q);
    return classes;
}

}  // namespace detail

inline AlphaStats alpha_stats(const EquivalenceRelation& rel) {
    const int n = rel.n();
    require_guard(n <= 200, "alpha_stats: exhaustive path requires n <= 200");
    auto classes = detail::classes_by_label(rel);
    AlphaStats st;
    // per-pair class sizes
    std::vector<std::int64_t> row_sum(static_cast<std::size_t>(n), 0);
    for (const auto& [label, members] : classes) {
        auto size = static_cast<std::int64_t>(members.size());
        st.alpha2 = std::max(st.alpha2, size);
        std::map<int, std::int64_t> per_first;
        for (auto [p, q] : members) per_first[p] += 1;
        for (const auto& [p, cnt] : per_first) st.alpha3 = std::max(st.alpha3, cnt);
        for (auto [p, q] : members) row_sum[static_cast<std::size_t>(p)] += size;
        // alpha0_hat: members (p,q) and (q,p') in the same class with p != p'
        for (auto [p, q] : members) {
            for (auto [x, y] : members)
                if (x == q && y != p) st.alpha0_hat += 1;
        }
    }
    st.alpha1 = *std::max_element(row_sum.begin(), row_sum.end());
    return st;
}

// #{(p,q) : (p,p) ~ (q,q)}
inline std::int64_t count_diag_pairs(const EquivalenceRelation& rel) {
    const int n = rel.n();
    require_guard(n <= 200, "count_diag_pairs: requires n <= 200");
    std::unordered_map<std::uint64_t, std::int64_t> diag_class_size;
    for (int p = 0; p < n; ++p) diag_class_size[rel.class_label(p, p)] += 1;
    std::int64_t total = 0;
    for (const auto& [label, cnt] : diag_class_size) total += cnt * cnt;
    return total;
}

// #{(p,q,p',q') : p != q, p' != q', (p,q) ~ (p',q')}
inline std::int64_t count_offdiag_quadruples(const EquivalenceRelation& rel) {
    const int n = rel.n();
    require_guard(n <= 60, "count_offdiag_quadruples: requires n <= 60");
    std::unordered_map<std::uint64_t, std::int64_t> offdiag_class_size;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if (p != q) offdiag_class_size[rel.class_label(p, q)] += 1;
    std::int64_t total = 0;
    for (const auto& [label, cnt] : offdiag_class_size) total += cnt * cnt;
    return total;
}

struct MultiIndexCountOptions {
    bool off_diagonal_only = false;  // exclude index pairs (p,p)
    // Same-circle pair blocks must carry indices (p,q),(q,p) with p != q.
    // This is the condition consumed by the pair-elimination step; it is
    // vacuous when every point is a connector.
    bool require_property_P = false;
};

// Exact count of consistent multi-indices compatible (in the biconditional
// sense) with the partition pi: entries linked by pi share a class, entries
// in different blocks do not.
inline std::int64_t count_compatible_multi_indices(const AnnularPartition& pi,
                                                   const EquivalenceRelation& rel,
                                                   MultiIndexCountOptions opt = {}) {
    const int n = rel.n();
    const int k1 = pi.circle_size(0);
    const int k2 = pi.circle_size(1);
    const int k = k1 + k2;
    double cost = std::pow(static_cast<double>(n), static_cast<double>(k));
    require_guard(cost <= 5e7, "count_compatible_multi_indices: n^(k1+k2) exceeds the enumeration guard");

    // flat point index: circle 0 first
    auto flat = [&](int circle, int pos) { return circle == 0 ? pos - 1 : k1 + pos - 1; };
    std::vector<int> block_of(static_cast<std::size_t>(k));
    for (int circle = 0; circle < 2; ++circle)
        for (int pos = 1; pos <= pi.circle_size(circle); ++pos)
            block_of[static_cast<std::size_t>(flat(circle, pos))] = pi.block_index({circle, pos});

    // same-circle pair blocks, for the property (P) filter
    std::vector<std::array<int, 3>> same_circle_pairs;  // (circle, pos, pos')
    if (opt.require_property_P) {
        for (const auto& b : pi.blocks())
            if (b.size() == 2 && b[0].circle == b[1].circle)
                same_circle_pairs.push_back({b[0].circle, b[0].pos, b[1].pos});
    }

    std::vector<std::uint64_t> label_table(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) label_table[static_cast<std::size_t>(p * n + q)] = rel.class_label(p, q);

    std::vector<std::uint64_t> labels(static_cast<std::size_t>(k));
    // h holds the first index of each pair around the circles
    std::vector<int> h(static_cast<std::size_t>(k), 0);
    auto pair_at = [&](int circle, int pos) {
        int kc = pi.circle_size(circle);
        int p = h[static_cast<std::size_t>(flat(circle, pos))];
        int q = h[static_cast<std::size_t>(flat(circle, pos % kc + 1))];
        return std::pair{p, q};
    };

    auto fill_labels = [&]() {
        for (int circle = 0; circle < 2; ++circle) {
            for (int pos = 1; pos <= pi.circle_size(circle); ++pos) {
                auto [p, q] = pair_at(circle, pos);
                if (opt.off_diagonal_only && p == q) return false;
                labels[static_cast<std::size_t>(flat(circle, pos))] = label_table[static_cast<std::size_t>(p * n + q)];
            }
        }
        return true;
    };
    auto compatible = [&]() {
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                bool same_class = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
                bool same_block = block_of[static_cast<std::size_t>(i)] == block_of[static_cast<std::size_t>(j)];
                if (same_class != same_block) return false;
            }
        if (opt.require_property_P) {
            for (const auto& [circle, a, b] : same_circle_pairs) {
                auto [p1, q1] = pair_at(circle, a);
                auto [p2, q2] = pair_at(circle, b);
                if (p1 == q1 || p1 != q2 || q1 != p2) return false;
            }
        }
        return true;
    };

    std::int64_t count = 0;
    std::size_t total = 1;
    for (int i = 0; i < k; ++i) total *= static_cast<std::size_t>(n);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (int i = 0; i < k; ++i) {
            h[static_cast<std::size_t>(i)] = static_cast<int>(c % static_cast<std::size_t>(n));
            c /= static_cast<std::size_t>(n);
        }
        if (!fill_labels()) continue;
        if (compatible()) ++count;
    }
    return count;
}

// Off-diagonal compatible multi-indices of the reduced partition realized by
// g. For m = 1 the compatible indices are diagonal by consistency and the
// off-diagonal restriction is waived by convention.
inline std::int64_t count_S_OD(const DihedralElement& g, const EquivalenceRelation& rel) {
    MultiIndexCountOptions opt;
    opt.off_diagonal_only = g.m > 1;
    return count_compatible_multi_indices(canonical_reduced(g), rel, opt);
}

// Same count without the off-diagonal restriction.
inline std::int64_t count_S(const DihedralElement& g, const EquivalenceRelation& rel) {
    return count_compatible_multi_indices(canonical_reduced(g), rel, MultiIndexCountOptions{});
}

}  // namespace chebclt

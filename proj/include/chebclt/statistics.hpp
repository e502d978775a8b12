#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "chebclt/chebyshev.hpp"
#include "chebclt/common.hpp"
#include "chebclt/ensembles.hpp"
#include "chebclt/rng.hpp"

namespace chebclt {

// ---------------------------------------------------------------------------
// Traces of rescaled Chebyshev polynomials in a Hermitian matrix.
// ---------------------------------------------------------------------------

enum class TraceBackend { eigen_decomposition, matrix_recurrence };

namespace detail {

inline double conj_of(double x) { return x; }
inline std::complex<double> conj_of(std::complex<double> x) { return std::conj(x); }

inline double real_part(double x) { return x; }
inline double real_part(std::complex<double> x) { return x.real(); }
inline double imag_part(double) { return 0.0; }
inline double imag_part(std::complex<double> x) { return x.imag(); }

template <class Scalar>
void require_hermitian(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X) {
    for (Eigen::Index p = 0; p < X.rows(); ++p)
        for (Eigen::Index q = p; q < X.cols(); ++q)
            if (X(p, q) != conj_of(X(q, p))) throw std::domain_error("traces: matrix is not Hermitian");
}

}  // namespace detail

// Tr s^m T_m(X/s) for m = 0..m_max. The eigenvalue backend sums the scalar
// recurrence over the spectrum; the matrix recurrence backend iterates
// A_{m+1} = X A_m - (1 + [m==1]) s^2 A_{m-1} and serves as an independent
// route for cross-checks.
template <class Scalar>
std::vector<double> chebyshev_traces(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                                     double s, int m_max,
                                     TraceBackend backend = TraceBackend::eigen_decomposition) {
    if (m_max < 0) throw std::invalid_argument("chebyshev_traces: m_max must be >= 0");
    if (!(s > 0.0)) throw std::invalid_argument("chebyshev_traces: s must be positive");
    if (X.rows() != X.cols()) throw std::domain_error("chebyshev_traces: matrix must be square");
    detail::require_hermitian(X);
    const int n = static_cast<int>(X.rows());
    std::vector<double> traces(static_cast<std::size_t>(m_max) + 1, 0.0);
    if (backend == TraceBackend::eigen_decomposition) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(
            X, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw std::runtime_error("chebyshev_traces: eigensolver failed");
        const auto& lambda = solver.eigenvalues();
        std::vector<double> basis;
        for (int j = 0; j < n; ++j) {
            eval_rescaled_all(m_max, lambda(j), s, basis);
            for (int m = 0; m <= m_max; ++m) traces[static_cast<std::size_t>(m)] += basis[static_cast<std::size_t>(m)];
        }
    } else {
        using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
        Mat prev = Mat::Identity(n, n);
        Mat cur = X;
        traces[0] = static_cast<double>(n);
        for (int m = 1; m <= m_max; ++m) {
            Scalar tr = cur.trace();
            double residue = std::abs(detail::imag_part(tr));
            if (residue > 1e-9 * std::max(1.0, std::abs(detail::real_part(tr))))
                throw std::runtime_error("chebyshev_traces: trace has a non-negligible imaginary part");
            traces[static_cast<std::size_t>(m)] = detail::real_part(tr);
            if (m == m_max) break;
            double factor = (m == 1) ? 2.0 : 1.0;
            Mat next = X * cur - Scalar(factor * s * s) * prev;
            prev = std::move(cur);
            cur = std::move(next);
        }
    }
    return traces;
}

// ---------------------------------------------------------------------------
// Monte Carlo replicates of the trace statistics.
// ---------------------------------------------------------------------------

struct TraceSamples {
    EnsembleSpec spec;
    double s = 1.0;
    int m_max = 0;
    int replicates = 0;
    TraceBackend backend = TraceBackend::eigen_decomposition;
    std::uint64_t master_seed = 0;
    Eigen::MatrixXd values;  // replicates x (m_max+1); values(r,m) = Tr T_m(X_r, s)
};

inline std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate) {
    return mix_keys(master_seed, 0x7265706CULL, static_cast<std::uint64_t>(replicate));
}

// R independent replicates; each replicate r is drawn from the stream keyed
// (master_seed, r), so the result is identical for every worker count.
inline TraceSamples monte_carlo_run(const EnsembleSpec& spec, double s, int m_max, int replicates,
                                    std::uint64_t master_seed,
                                    TraceBackend backend = TraceBackend::eigen_decomposition,
                                    int workers = 0) {
    spec.validate();
    if (replicates < 1) throw std::invalid_argument("monte_carlo_run: need at least one replicate");
    double cost = static_cast<double>(replicates) * std::pow(static_cast<double>(spec.n()), 3.0);
    require_guard(cost <= 2e13, "monte_carlo_run: replicates * n^3 exceeds the resource guard");
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, replicates);

    TraceSamples out;
    out.spec = spec;
    out.s = s;
    out.m_max = m_max;
    out.replicates = replicates;
    out.backend = backend;
    out.master_seed = master_seed;
    out.values.resize(replicates, m_max + 1);

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    auto work = [&]() {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= replicates || failed.load()) return;
            try {
                std::uint64_t seed_r = replicate_seed(master_seed, r);
                std::vector<double> row;
                if (spec.complex()) {
                    auto X = sample_matrix_complex(spec, seed_r);
                    row = chebyshev_traces(X, s, m_max, backend);
                } else {
                    auto X = sample_matrix_real(spec, seed_r);
                    row = chebyshev_traces(X, s, m_max, backend);
                }
                for (int m = 0; m <= m_max; ++m) out.values(r, m) = row[static_cast<std::size_t>(m)];
            } catch (...) {
                failed.store(true);
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("monte_carlo_run: a replicate failed");
    return out;
}

// Columns centered by the empirical replicate mean (the estimator proxy for
// the exact expectation).
inline Eigen::MatrixXd centered_statistics(const Eigen::MatrixXd& values) {
    if (values.rows() < 2) throw std::invalid_argument("centered_statistics: need at least 2 replicates");
    return values.rowwise() - values.colwise().mean();
}

// Tr X^k per replicate, assembled exactly from the Chebyshev traces through
// the inverse coefficient table: x^k = sum_m t_{k,m} s^{k-m} T_m(x,s).
inline Eigen::VectorXd power_traces(const TraceSamples& samples, int k, const ChebyshevTable& tab) {
    if (k < 0 || k > samples.m_max || k > tab.max_degree)
        throw std::length_error("power_traces: power exceeds the stored trace order");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(samples.replicates);
    for (int m = k % 2; m <= k; m += 2) {
        double coeff = static_cast<double>(tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)]) *
                       std::pow(samples.s, k - m);
        out += coeff * samples.values.col(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cumulant estimators (k-statistics) with delete-1 jackknife standard errors.
// ---------------------------------------------------------------------------

struct CumulantEstimate {
    int order = 0;
    double value = 0.0;
    double std_error = 0.0;
    int replicates = 0;
};

namespace detail {

struct PowerSums {
    double n = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;

    static PowerSums of(const Eigen::VectorXd& x) {
        PowerSums ps;
        ps.n = static_cast<double>(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double v = x(i), v2 = v * v;
            ps.s1 += v;
            ps.s2 += v2;
            ps.s3 += v2 * v;
            ps.s4 += v2 * v2;
        }
        return ps;
    }

    PowerSums without(double v) const {
        double v2 = v * v;
        return {n - 1, s1 - v, s2 - v2, s3 - v2 * v, s4 - v2 * v2};
    }

    // central moments m2, m3, m4
    void central(double& m2, double& m3, double& m4) const {
        double mu = s1 / n;
        double r2 = s2 / n, r3 = s3 / n, r4 = s4 / n;
        m2 = r2 - mu * mu;
        m3 = r3 - 3.0 * mu * r2 + 2.0 * mu * mu * mu;
        m4 = r4 - 4.0 * mu * r3 + 6.0 * mu * mu * r2 - 3.0 * mu * mu * mu * mu;
    }
};

inline double k_stat_from_sums(const PowerSums& ps, int order) {
    double n = ps.n;
    double m2, m3, m4;
    ps.central(m2, m3, m4);
    switch (order) {
        case 1:
            return ps.s1 / n;
        case 2:
            return n * m2 / (n - 1.0);
        case 3:
            return n * n * m3 / ((n - 1.0) * (n - 2.0));
        case 4:
            return n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) /
                   ((n - 1.0) * (n - 2.0) * (n - 3.0));
        default:
            throw std::invalid_argument("k_statistic: order must be 1..4");
    }
}

inline double skew_from_sums(const PowerSums& ps) {
    double m2, m3, m4;
    ps.central(m2, m3, m4);
    return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

inline double exkurt_from_sums(const PowerSums& ps) {
    double m2, m3, m4;
    ps.central(m2, m3, m4);
    return m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

inline double jackknife_se(const Eigen::VectorXd& x, const std::function<double(const PowerSums&)>& stat) {
    PowerSums full = PowerSums::of(x);
    const auto n = static_cast<double>(x.size());
    std::vector<double> leave_one(static_cast<std::size_t>(x.size()));
    double mean = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        leave_one[static_cast<std::size_t>(i)] = stat(full.without(x(i)));
        mean += leave_one[static_cast<std::size_t>(i)];
    }
    mean /= n;
    double ss = 0.0;
    for (double v : leave_one) ss += (v - mean) * (v - mean);
    return std::sqrt((n - 1.0) / n * ss);
}

}  // namespace detail

inline CumulantEstimate k_statistic(const Eigen::VectorXd& x, int order) {
    if (order < 1 || order > 4) throw std::invalid_argument("k_statistic: order must be 1..4");
    if (x.size() < order + 1) throw std::invalid_argument("k_statistic: sample size must exceed the order");
    auto stat = [order](const detail::PowerSums& ps) { return detail::k_stat_from_sums(ps, order); };
    detail::PowerSums ps = detail::PowerSums::of(x);
    CumulantEstimate est;
    est.order = order;
    est.value = stat(ps);
    est.std_error = detail::jackknife_se(x, stat);
    est.replicates = static_cast<int>(x.size());
    return est;
}

// Unbiased sample covariance, jackknifed.
inline CumulantEstimate cross_covariance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("cross_covariance: need matched samples of size >= 3");
    const auto n = static_cast<double>(x.size());
    double sx = x.sum(), sy = y.sum(), sxy = x.dot(y);
    auto cov_of = [](double n_, double sx_, double sy_, double sxy_) {
        return (sxy_ - sx_ * sy_ / n_) / (n_ - 1.0);
    };
    CumulantEstimate est;
    est.order = 2;
    est.value = cov_of(n, sx, sy, sxy);
    std::vector<double> leave_one(static_cast<std::size_t>(x.size()));
    double mean = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        leave_one[static_cast<std::size_t>(i)] = cov_of(n - 1.0, sx - x(i), sy - y(i), sxy - x(i) * y(i));
        mean += leave_one[static_cast<std::size_t>(i)];
    }
    mean /= n;
    double ss = 0.0;
    for (double v : leave_one) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt((n - 1.0) / n * ss);
    est.replicates = static_cast<int>(x.size());
    return est;
}

inline CumulantEstimate skewness_estimate(const Eigen::VectorXd& x) {
    if (x.size() < 4) throw std::invalid_argument("skewness_estimate: need at least 4 samples");
    CumulantEstimate est;
    est.order = 3;
    est.value = detail::skew_from_sums(detail::PowerSums::of(x));
    est.std_error = detail::jackknife_se(x, detail::skew_from_sums);
    est.replicates = static_cast<int>(x.size());
    return est;
}

inline CumulantEstimate excess_kurtosis_estimate(const Eigen::VectorXd& x) {
    if (x.size() < 5) throw std::invalid_argument("excess_kurtosis_estimate: need at least 5 samples");
    CumulantEstimate est;
    est.order = 4;
    est.value = detail::exkurt_from_sums(detail::PowerSums::of(x));
    est.std_error = detail::jackknife_se(x, detail::exkurt_from_sums);
    est.replicates = static_cast<int>(x.size());
    return est;
}

// ---------------------------------------------------------------------------
// Exact small-n oracle: joint cumulants of trace powers for finite-support
// entry laws, by exhaustive enumeration of all class-value assignments.
// ---------------------------------------------------------------------------

namespace detail {

// Set partitions of {0..j-1} as block-index vectors.
inline std::vector<std::vector<int>> set_partitions_of(int j) {
    std::vector<std::vector<int>> out;
    std::vector<int> rgs(static_cast<std::size_t>(j), 0);
    while (true) {
        out.push_back(rgs);
        int i = j - 1;
        for (; i > 0; --i) {
            int cap = 0;
            for (int l = 0; l < i; ++l) cap = std::max(cap, rgs[static_cast<std::size_t>(l)]);
            if (rgs[static_cast<std::size_t>(i)] <= cap) break;
        }
        if (i == 0) break;
        ++rgs[static_cast<std::size_t>(i)];
        for (int l = i + 1; l < j; ++l) rgs[static_cast<std::size_t>(l)] = 0;
    }
    return out;
}

// C_j from the mixed moments E(prod_{i in B} Y_i), supplied for every subset
// bitmask of {0..j-1}.
inline double cumulant_from_subset_moments(const std::vector<double>& subset_moment, int j) {
    double total = 0.0;
    for (const auto& rgs : set_partitions_of(j)) {
        int nblocks = 1 + *std::max_element(rgs.begin(), rgs.end());
        double prod = 1.0;
        for (int b = 0; b < nblocks; ++b) {
            unsigned mask = 0;
            for (int i = 0; i < j; ++i)
                if (rgs[static_cast<std::size_t>(i)] == b) mask |= 1u << i;
            prod *= subset_moment[mask];
        }
        double sign = (nblocks % 2 == 1) ? 1.0 : -1.0;
        double fact = 1.0;
        for (int i = 2; i < nblocks; ++i) fact *= static_cast<double>(i);  // (#blocks-1)!
        total += sign * fact * prod;
    }
    return total;
}

struct ClassInfo {
    std::uint64_t label;
    std::vector<std::pair<int, int>> members;
    bool diagonal;
};

inline std::vector<ClassInfo> sorted_classes(const EquivalenceRelation& rel) {
    auto by_label = classes_by_label(rel);
    std::vector<ClassInfo> classes;
    classes.reserve(by_label.size());
    for (auto& [label, members] : by_label) {
        ClassInfo info;
        info.label = label;
        info.members = members;
        info.diagonal = members.front().first == members.front().second;
        classes.push_back(std::move(info));
    }
    std::sort(classes.begin(), classes.end(),
              [](const ClassInfo& a, const ClassInfo& b) { return a.label < b.label; });
    return classes;
}

}  // namespace detail

// E(prod_{i in S} Tr X^{k_i}) for every subset S, computed exactly by summing
// over all assignments of support atoms to entry classes.
inline std::vector<double> exact_subset_trace_moments(const EnsembleSpec& spec,
                                                      const std::vector<int>& powers) {
    spec.validate();
    if (spec.complex()) throw std::domain_error("exact oracle: real ensembles only");
    if (!spec.diag_law.finite_support() || !spec.offdiag_law.finite_support())
        throw std::domain_error("exact oracle: entry laws must have finite support");
    if (spec.gamma != 0.0) throw std::domain_error("exact oracle: dense ensembles only");
    const int j = static_cast<int>(powers.size());
    if (j < 1 || j > 4) throw std::invalid_argument("exact oracle: 1 to 4 trace powers");
    const int n = spec.n();

    auto classes = detail::sorted_classes(spec.relation);
    double combos = 1.0;
    for (const auto& c : classes)
        combos *= static_cast<double>((c.diagonal ? spec.diag_law : spec.offdiag_law).support().size());
    require_guard(combos <= 2e7, "exact oracle: support^classes exceeds the enumeration guard");

    int max_power = *std::max_element(powers.begin(), powers.end());
    std::vector<double> subset_moment(static_cast<std::size_t>(1) << j, 0.0);
    subset_moment[0] = 1.0;

    std::vector<std::vector<std::pair<double, double>>> atoms;
    atoms.reserve(classes.size());
    for (const auto& c : classes)
        atoms.push_back((c.diagonal ? spec.diag_law : spec.offdiag_law).support());

    std::vector<std::size_t> idx(classes.size(), 0);
    Eigen::MatrixXd A(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> weighted(static_cast<std::size_t>(1) << j, 0.0);
    while (true) {
        double prob = 1.0;
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const auto& [value, p] = atoms[ci][idx[ci]];
            prob *= p;
            for (auto [a, b] : classes[ci].members) A(a, b) = value * scale;
        }
        // trace powers of this realization
        std::vector<double> tr(static_cast<std::size_t>(max_power) + 1, 0.0);
        Eigen::MatrixXd P = A;
        tr[0] = static_cast<double>(n);
        for (int k = 1; k <= max_power; ++k) {
            tr[static_cast<std::size_t>(k)] = P.trace();
            if (k < max_power) P = P * A;
        }
        for (unsigned mask = 1; mask < (1u << j); ++mask) {
            double prod = 1.0;
            for (int i = 0; i < j; ++i)
                if (mask & (1u << i)) prod *= tr[static_cast<std::size_t>(powers[static_cast<std::size_t>(i)])];
            weighted[mask] += prob * prod;
        }
        // odometer
        std::size_t ci = 0;
        for (; ci < classes.size(); ++ci) {
            if (++idx[ci] < atoms[ci].size()) break;
            idx[ci] = 0;
        }
        if (ci == classes.size()) break;
    }
    for (unsigned mask = 1; mask < (1u << j); ++mask) subset_moment[mask] = weighted[mask];
    return subset_moment;
}

// Exact joint cumulant C_j(Tr X^{k_1},...,Tr X^{k_j}) for finite-support laws.
inline double exact_cumulants_small_n(const EnsembleSpec& spec, const std::vector<int>& powers) {
    auto subset_moment = exact_subset_trace_moments(spec, powers);
    return detail::cumulant_from_subset_moments(subset_moment, static_cast<int>(powers.size()));
}

inline double exact_trace_moment(const EnsembleSpec& spec, int power) {
    auto subset_moment = exact_subset_trace_moments(spec, {power});
    return subset_moment[1];
}

// ---------------------------------------------------------------------------
// The same cumulant through the connected-partition decomposition: sum over
// consistent multi-indices grouped by the partition they induce, with the
// inner cumulant evaluated from entry-law moments. Agrees with the exhaustive
// oracle exactly (up to rounding) at every n.
// ---------------------------------------------------------------------------

inline double cumulant_by_partition_sum(const EnsembleSpec& spec, const std::vector<int>& powers) {
    spec.validate();
    if (spec.complex()) throw std::domain_error("cumulant_by_partition_sum: real ensembles only");
    if (spec.gamma != 0.0) throw std::domain_error("cumulant_by_partition_sum: dense ensembles only");
    const int j = static_cast<int>(powers.size());
    if (j < 1 || j > 4) throw std::invalid_argument("cumulant_by_partition_sum: 1 to 4 trace powers");
    int k_total = 0;
    for (int k : powers) {
        if (k < 1) throw std::invalid_argument("cumulant_by_partition_sum: powers must be >= 1");
        k_total += k;
    }
    const int n = spec.n();
    require_guard(k_total <= 8 && n <= 6, "cumulant_by_partition_sum: requires k_1+...+k_j <= 8 and n <= 6");

    auto mobius_partitions = detail::set_partitions_of(j);

    // class labels precomputed over all index pairs; a label is diagonal iff
    // its canonical representative is
    std::vector<std::uint64_t> label_table(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            label_table[static_cast<std::size_t>(p * n + q)] = spec.relation.class_label(p, q);
    auto label_is_diag = [&](std::uint64_t label) {
        return label / static_cast<std::uint64_t>(n) == label % static_cast<std::uint64_t>(n);
    };

    // Offsets of each circle into the flattened list of k_total points.
    std::vector<int> offset(static_cast<std::size_t>(j) + 1, 0);
    for (int i = 0; i < j; ++i) offset[static_cast<std::size_t>(i) + 1] = offset[static_cast<std::size_t>(i)] + powers[static_cast<std::size_t>(i)];

    // One head index per point; heads of circle i are positions offset[i]..offset[i+1).
    std::vector<int> heads(static_cast<std::size_t>(k_total), 0);
    std::vector<std::uint64_t> labels(static_cast<std::size_t>(k_total));

    double total = 0.0;
    std::size_t combos = 1;
    for (int i = 0; i < k_total; ++i) combos *= static_cast<std::size_t>(n);

    std::map<std::uint64_t, std::array<int, 4>> class_counts;  // label -> multiplicity per circle
    std::vector<int> circle_root(static_cast<std::size_t>(j));

    for (std::size_t code = 0; code < combos; ++code) {
        std::size_t c = code;
        for (int i = 0; i < k_total; ++i) {
            heads[static_cast<std::size_t>(i)] = static_cast<int>(c % static_cast<std::size_t>(n));
            c /= static_cast<std::size_t>(n);
        }
        // labels of the index pairs along each circle
        for (int i = 0; i < j; ++i) {
            int ki = powers[static_cast<std::size_t>(i)];
            for (int l = 0; l < ki; ++l) {
                int p = heads[static_cast<std::size_t>(offset[static_cast<std::size_t>(i)] + l)];
                int q = heads[static_cast<std::size_t>(offset[static_cast<std::size_t>(i)] + (l + 1) % ki)];
                labels[static_cast<std::size_t>(offset[static_cast<std::size_t>(i)] + l)] =
                    label_table[static_cast<std::size_t>(p * n + q)];
            }
        }
        // connectivity of the induced partition over circles (union-find)
        for (int i = 0; i < j; ++i) circle_root[static_cast<std::size_t>(i)] = i;
        std::function<int(int)> find = [&](int x) {
            while (circle_root[static_cast<std::size_t>(x)] != x) x = circle_root[static_cast<std::size_t>(x)];
            return x;
        };
        class_counts.clear();
        for (int i = 0; i < j; ++i) {
            int ki = powers[static_cast<std::size_t>(i)];
            for (int l = 0; l < ki; ++l)
                class_counts[labels[static_cast<std::size_t>(offset[static_cast<std::size_t>(i)] + l)]][static_cast<std::size_t>(i)] += 1;
        }
        for (const auto& [label, counts] : class_counts) {
            int first = -1;
            for (int i = 0; i < j; ++i) {
                if (counts[static_cast<std::size_t>(i)] == 0) continue;
                if (first < 0)
                    first = i;
                else
                    circle_root[static_cast<std::size_t>(find(i))] = find(first);
            }
        }
        bool connected = true;
        for (int i = 1; i < j && connected; ++i) connected = find(i) == find(0);
        if (!connected) continue;

        // inner joint cumulant of the j entry products via the moment formula
        double cum = 0.0;
        for (const auto& rgs : mobius_partitions) {
            int nblocks = 1 + *std::max_element(rgs.begin(), rgs.end());
            double prod = 1.0;
            for (int b = 0; b < nblocks && prod != 0.0; ++b) {
                // E of the product of all entries on circles of this block
                double e = 1.0;
                for (const auto& [label, counts] : class_counts) {
                    int mult = 0;
                    for (int i = 0; i < j; ++i)
                        if (rgs[static_cast<std::size_t>(i)] == b) mult += counts[static_cast<std::size_t>(i)];
                    if (mult == 0) continue;
                    e *= (label_is_diag(label) ? spec.diag_law : spec.offdiag_law).moment(mult);
                }
                prod *= e;
            }
            double sign = (nblocks % 2 == 1) ? 1.0 : -1.0;
            double fact = 1.0;
            for (int i = 2; i < nblocks; ++i) fact *= static_cast<double>(i);
            cum += sign * fact * prod;
        }
        total += cum;
    }
    return total * std::pow(static_cast<double>(n), -0.5 * k_total);
}

}  // namespace chebclt

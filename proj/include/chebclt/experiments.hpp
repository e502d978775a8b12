#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chebclt/config.hpp"
#include "chebclt/io.hpp"
#include "chebclt/statistics.hpp"
#include "chebclt/theory.hpp"

namespace chebclt {

struct ExperimentOutput {
    RunReport report;
    std::map<std::string, TraceSamples> samples;  // tag -> samples, persisted alongside the report
};

namespace experiments {

inline std::string mtag(int m) { return "m=" + std::to_string(m); }

// ---------------------------------------------------------------------------
// tables: the exact combinatorial identities.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_tables() {
    std::vector<CheckRecord> checks;

    auto tab = chebyshev_table(40);
    checks.push_back(check_exact("inverse-identity:max_degree=40", "inverse-coefficient-identity",
                                 chebyshev_inverse_identity_holds(tab)));

    bool trig_ok = true;
    for (int m = 1; m <= 20 && trig_ok; ++m)
        for (int g = 0; g <= 48 && trig_ok; ++g) {
            double theta = M_PI * g / 48.0;
            trig_ok = std::abs(eval_rescaled(m, 2.0 * std::cos(theta), 1.0) - 2.0 * std::cos(m * theta)) < 1e-9;
        }
    checks.push_back(check_exact("rescaled-evaluation-trig", "trig-identity", trig_ok));

    bool counts_ok = true;
    for (int k = 1; k <= 10; ++k) {
        auto by_m = enumerate_nchpp(k);
        for (int m = 0; m <= k; ++m) {
            std::int64_t enumerated = by_m.count(m) ? static_cast<std::int64_t>(by_m[m].size()) : 0;
            if (enumerated != tab.t[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)]) counts_ok = false;
        }
    }
    checks.push_back(check_exact("half-pair-counts:k<=10", "half-pair-count-identity", counts_ok));

    auto recur = verify_recurrences(10);
    bool recur_ok = true;
    for (const auto& c : recur.checks) recur_ok = recur_ok && c.ok;
    checks.push_back(check_exact("count-recurrences:k<=10", "count-recurrences", recur_ok));
    checks.push_back(check_exact("removal-map-bijection:k<=10", "removal-bijection", recur.bijection_ok));

    bool roundtrip_ok = true;
    for (int k = 2; k <= 10 && roundtrip_ok; ++k) {
        for (const auto& [m, list] : enumerate_nchpp(k)) {
            for (const auto& h : list) {
                auto image = z_map(h);
                HalfPairPartition back;
                if (m == 0)
                    back = z_inverse_marked(image, z_cover_sign(h));
                else if (z_map_branch(h) < 0)
                    back = z_inverse_open(image);
                else
                    back = z_inverse_close(image);
                if (!(back == h)) roundtrip_ok = false;
            }
        }
    }
    checks.push_back(check_exact("removal-map-roundtrip:k<=10", "removal-bijection", roundtrip_ok));

    for (int m = 1; m <= 5; ++m) {
        int count = 0;
        for (const auto& pi : enumerate_partitions(m, m)) {
            auto c = classify(pi);
            if (c.dihedral && c.connectors_per_circle[0] == m) ++count;
        }
        int expected = m <= 2 ? 1 : 2 * m;
        checks.push_back(check_close("dihedral-count:" + mtag(m), "dihedral-count",
                                     static_cast<double>(count), static_cast<double>(expected), 0.0, 0.0));
    }

    bool euler_ok = true;
    for (int m = 1; m <= 10; ++m) {
        std::int64_t row = 0;
        for (int k = 0; k <= m + 1; ++k) row += eulerian(m, k);
        if (row != factorial64(m) || eulerian(m, 0) != 0) euler_ok = false;
    }
    checks.push_back(check_exact("eulerian-row-sums:m<=10", "eulerian-row-sum", euler_ok));

    bool rho_ok = true;
    for (int m = 1; m <= 8 && rho_ok; ++m) {
        Rational total(0);
        for (int k = 0; k <= m; ++k) {
            if (!(rho(m, k) == rho_by_exhaustion(m, k))) rho_ok = false;
            total = total + rho(m, k);
        }
        if (!(total == Rational(1))) rho_ok = false;
    }
    checks.push_back(check_exact("cyclic-rise-distribution:m<=8", "cyclic-rise-distribution", rho_ok));

    return checks;
}

// ---------------------------------------------------------------------------
// semicircle: moment check of the empirical spectral distribution.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_semicircle(const ExperimentConfig& cfg,
                                                    const TraceSamples& samples) {
    std::vector<CheckRecord> checks;
    auto tab = chebyshev_table(samples.m_max);
    const double n = static_cast<double>(samples.spec.n());
    const double catalan[4] = {1.0, 1.0, 2.0, 5.0};
    for (int k = 1; k <= 3; ++k) {
        Eigen::VectorXd x = power_traces(samples, 2 * k, tab) / n;
        auto mean = k_statistic(x, 1);
        double predicted = catalan[k] * std::pow(samples.s, 2 * k);
        checks.push_back(check_close("spectral-moment:k=" + std::to_string(2 * k), "semicircle-moment",
                                     mean.value, predicted, mean.std_error, 0.05 * predicted));
        (void)cfg;
    }
    return checks;
}

// ---------------------------------------------------------------------------
// clt: variances, cross-covariances, and Gaussianity of the Chebyshev traces.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_clt(const ExperimentConfig& cfg, const TraceSamples& samples) {
    std::vector<CheckRecord> checks;
    const EnsembleSpec& spec = samples.spec;
    const int T = spec.period();
    for (int m = 1; m <= samples.m_max; ++m) {
        double predicted;
        std::string provenance;
        if (spec.complex()) {
            predicted = m == 1 ? spec.diag_law.moment(2) : complex_wigner_variance(m, spec.offdiag_law);
            provenance = "complex-variance-limit";
        } else {
            predicted = wigner_variance(m, T, spec.diag_law.moment(2), spec.offdiag_law.moment(2),
                                        spec.offdiag_law.moment(4));
            provenance = m == 1 ? "diagonal-variance-limit"
                                : (m == 2 ? "fourth-moment-variance-limit" : "chebyshev-variance-limit");
        }
        auto var = k_statistic(samples.values.col(m), 2);
        if (predicted > 0.0) {
            double tol = std::max(cfg.tol_rel * predicted, cfg.tol_nse * var.std_error);
            checks.push_back(check_close("variance:" + mtag(m), provenance, var.value, predicted,
                                         var.std_error, tol));
        } else {
            // degenerate fourth-moment case: the variance must sit well below
            // the value Gaussian entries would give, vanishing as n grows
            double ea2 = spec.offdiag_law.moment(2);
            double gaussian_reference = 4.0 * static_cast<double>(T) * ea2 * ea2;
            checks.push_back(check_at_most("variance-vanishes:" + mtag(m), provenance, var.value,
                                           0.25 * gaussian_reference));
        }
    }
    for (int m = 1; m <= samples.m_max; ++m) {
        for (int l = m + 1; l <= samples.m_max; ++l) {
            auto cov = cross_covariance(samples.values.col(m), samples.values.col(l));
            checks.push_back(check_close("cross-covariance:m=" + std::to_string(m) + ",l=" + std::to_string(l),
                                         "chebyshev-diagonal-covariance", cov.value, 0.0, cov.std_error,
                                         cfg.tol_nse * cov.std_error));
        }
    }
    for (int m = 1; m <= samples.m_max; ++m) {
        auto skew = skewness_estimate(samples.values.col(m));
        checks.push_back(check_close("skewness:" + mtag(m), "gaussian-limit", skew.value, 0.0,
                                     skew.std_error, cfg.tol_nse * skew.std_error));
        auto kurt = excess_kurtosis_estimate(samples.values.col(m));
        checks.push_back(check_close("excess-kurtosis:" + mtag(m), "gaussian-limit", kurt.value, 0.0,
                                     kurt.std_error, cfg.tol_nse * kurt.std_error));
    }
    return checks;
}

// ---------------------------------------------------------------------------
// covariance-matrix: measured covariances of power traces against the
// conjugated diagonal prediction.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_covariance_matrix(const ExperimentConfig& cfg,
                                                           const TraceSamples& samples) {
    std::vector<CheckRecord> checks;
    const EnsembleSpec& spec = samples.spec;
    if (spec.complex())
        throw config_error("covariance-matrix: real ensembles only");
    const int k_max = samples.m_max;
    auto tab = chebyshev_table(k_max);

    std::vector<double> V(static_cast<std::size_t>(k_max));
    std::vector<std::string> source(static_cast<std::size_t>(k_max));
    for (int m = 1; m <= k_max; ++m) {
        bool finite_ok = (m == 1 && spec.n() <= 200) || (m == 2 && spec.n() <= 60);
        if (finite_ok) {
            V[static_cast<std::size_t>(m) - 1] =
                finite_n_variance(spec.relation, m, spec.diag_law, spec.offdiag_law);
            source[static_cast<std::size_t>(m) - 1] = "finite-n-count";
        } else {
            V[static_cast<std::size_t>(m) - 1] =
                wigner_variance(m, spec.period(), spec.diag_law.moment(2), spec.offdiag_law.moment(2),
                                spec.offdiag_law.moment(4));
            source[static_cast<std::size_t>(m) - 1] = "variance-limit";
        }
    }
    Eigen::MatrixXd predicted = covariance_prediction(k_max, V, samples.s, tab);

    std::vector<Eigen::VectorXd> powers;
    for (int k = 1; k <= k_max; ++k) powers.push_back(power_traces(samples, k, tab));
    for (int k1 = 1; k1 <= k_max; ++k1) {
        for (int k2 = k1; k2 <= k_max; ++k2) {
            CumulantEstimate est = k1 == k2
                                       ? k_statistic(powers[static_cast<std::size_t>(k1) - 1], 2)
                                       : cross_covariance(powers[static_cast<std::size_t>(k1) - 1],
                                                          powers[static_cast<std::size_t>(k2) - 1]);
            double pred = predicted(k1 - 1, k2 - 1);
            double tol = std::max(cfg.tol_rel * std::abs(pred), cfg.tol_nse * est.std_error);
            std::string prov = "power-trace-covariance(" + source[static_cast<std::size_t>(std::min(k1, k2)) - 1] + ")";
            checks.push_back(check_close(
                "covariance:k1=" + std::to_string(k1) + ",k2=" + std::to_string(k2), prov, est.value,
                pred, est.std_error, tol));
        }
    }
    return checks;
}

// ---------------------------------------------------------------------------
// cumulant-decay: third and fourth cumulants of Tr X^3 across two sizes.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_cumulant_decay(const ExperimentConfig& cfg,
                                                        const TraceSamples& small_n,
                                                        const TraceSamples& large_n) {
    std::vector<CheckRecord> checks;
    auto tab = chebyshev_table(std::min(small_n.m_max, large_n.m_max));
    Eigen::VectorXd x_small = power_traces(small_n, 3, tab);
    Eigen::VectorXd x_large = power_traces(large_n, 3, tab);
    for (int order : {3, 4}) {
        auto k_small = k_statistic(x_small, order);
        auto k_large = k_statistic(x_large, order);
        std::string label = "k" + std::to_string(order);
        checks.push_back(check_close(label + "-vanishes:n=" + std::to_string(large_n.spec.n()),
                                     "joint-cumulant-decay", k_large.value, 0.0, k_large.std_error,
                                     cfg.tol_nse * k_large.std_error));
        checks.push_back(check_at_most(label + "-magnitude-non-increasing", "joint-cumulant-decay",
                                       std::abs(k_large.value), std::abs(k_small.value)));
    }
    return checks;
}

// ---------------------------------------------------------------------------
// oracle: tiny-n exact expectations vs the connected-partition expansion vs
// Monte Carlo, plus count invariances.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_oracle_exact() {
    std::vector<CheckRecord> checks;
    for (const char* relation : {"trivial-wigner", "flip"}) {
        for (int n : {2, 3}) {
            EnsembleSpec spec;
            spec.relation = std::string(relation) == "flip" ? EquivalenceRelation::flip(n)
                                                            : EquivalenceRelation::trivial(n);
            spec.diag_law = EntryLaw::rademacher(1.0);
            spec.offdiag_law = EntryLaw::rademacher(1.0);
            for (int k1 = 1; k1 <= 5; ++k1) {
                for (int k2 = k1; k1 + k2 <= 6; ++k2) {
                    double exact = exact_cumulants_small_n(spec, {k1, k2});
                    double expansion = cumulant_by_partition_sum(spec, {k1, k2});
                    checks.push_back(check_close(
                        "oracle:" + std::string(relation) + ",n=" + std::to_string(n) + ",k=(" +
                            std::to_string(k1) + "," + std::to_string(k2) + ")",
                        "connected-partition-expansion", expansion, exact, 0.0, 1e-10));
                }
            }
        }
    }
    // the off-diagonal count is the same for every group element
    for (const char* relation : {"trivial-wigner", "flip"}) {
        auto rel = std::string(relation) == "flip" ? EquivalenceRelation::flip(5)
                                                   : EquivalenceRelation::trivial(5);
        auto group = DihedralElement::group(3);
        std::int64_t first = count_S_OD(group.front(), rel);
        bool all_equal = true;
        for (const auto& g : group) all_equal = all_equal && count_S_OD(g, rel) == first;
        checks.push_back(check_exact("count-invariance:" + std::string(relation) + ",n=5,m=3",
                                     "count-invariance", all_equal));
    }
    return checks;
}

inline std::vector<CheckRecord> evaluate_oracle_mc(const ExperimentConfig& cfg,
                                                   const TraceSamples& samples) {
    std::vector<CheckRecord> checks;
    auto tab = chebyshev_table(samples.m_max);
    const double n = static_cast<double>(samples.spec.n());
    for (int k = 1; 2 * k <= samples.m_max; ++k) {
        Eigen::VectorXd x = power_traces(samples, 2 * k, tab) / n;
        auto mean = k_statistic(x, 1);
        double exact = exact_trace_moment(samples.spec, 2 * k) / n;
        // degenerate statistics (constant columns) leave a zero standard
        // error; keep a rounding-scale floor
        double tol = cfg.tol_nse * mean.std_error + 1e-12 * std::max(1.0, std::abs(exact));
        checks.push_back(check_close("mc-vs-exact:k=" + std::to_string(2 * k), "monte-carlo-consistency",
                                     mean.value, exact, mean.std_error, tol));
    }
    return checks;
}

// ---------------------------------------------------------------------------
// logmgf: the Chebyshev-sum and double-integral forms of the limiting log
// moment generating function agree for polynomial test functions.
// ---------------------------------------------------------------------------

inline std::vector<CheckRecord> evaluate_logmgf(const ExperimentConfig& cfg) {
    std::vector<CheckRecord> checks;
    auto tab = chebyshev_table(12);
    // orthogonal-ensemble normalization: E(a^2) = 1, E(d^2) = 2, C4 = 0, T = 1
    const double Ea2 = 1.0, Ed2 = 2.0, C4 = 0.0, s = 1.0;
    const int T = 1;
    std::vector<double> V(8);
    for (int m = 1; m <= 8; ++m)
        V[static_cast<std::size_t>(m) - 1] = wigner_variance(m, T, Ed2, Ea2, Ea2 * Ea2 * 3.0);
    std::vector<MonomialPolynomial> tests;
    for (int j = 1; j <= 5; ++j) tests.push_back(MonomialPolynomial::monomial(j));
    tests.push_back(MonomialPolynomial{{0.5, -1.0, 0.25, 1.0, 0.0, -0.5}});
    int idx = 0;
    for (const auto& f : tests) {
        double lhs = log_mgf_chebyshev_sum(f, s, V, tab);
        auto rhs = log_mgf_double_integral(f, s, T, Ea2, C4, Ed2, tab);
        std::string name = idx < 5 ? "logmgf:f=x^" + std::to_string(idx + 1) : "logmgf:f=mixed";
        checks.push_back(check_close(name, "log-mgf-identity", lhs, rhs.value, 0.0, cfg.tol_quad));
        checks.push_back(check_exact(name + ":quadrature-converged", "log-mgf-identity", rhs.converged));
        ++idx;
    }
    return checks;
}

}  // namespace experiments

// ---------------------------------------------------------------------------
// Dispatcher
// ---------------------------------------------------------------------------

struct ExperimentDefaults {
    int n;
    int replicates;
    int m_max;
};

inline ExperimentDefaults experiment_defaults(const std::string& experiment) {
    if (experiment == "semicircle") return {1024, 100, 6};
    if (experiment == "clt") return {256, 2000, 5};
    if (experiment == "covariance-matrix") return {48, 4000, 4};
    if (experiment == "cumulant-decay") return {256, 2000, 3};
    if (experiment == "oracle") return {3, 4000, 6};
    return {0, 0, 0};
}

inline TraceBackend backend_from_config(const ExperimentConfig& cfg) {
    return cfg.backend == "recurrence" ? TraceBackend::matrix_recurrence
                                       : TraceBackend::eigen_decomposition;
}

// Generates the Monte Carlo sample sets an experiment consumes.
inline std::map<std::string, TraceSamples> generate_samples(const ExperimentConfig& cfg) {
    std::map<std::string, TraceSamples> out;
    auto defaults = experiment_defaults(cfg.experiment);
    auto backend = backend_from_config(cfg);
    int m_max = cfg.m_max.value_or(defaults.m_max);
    int replicates = cfg.replicates.value_or(defaults.replicates);
    if (cfg.experiment == "semicircle" || cfg.experiment == "clt" ||
        cfg.experiment == "covariance-matrix") {
        if (cfg.experiment == "semicircle" && m_max < 6) m_max = 6;
        EnsembleSpec spec = build_ensemble_spec(cfg, defaults.n);
        out.emplace("main", monte_carlo_run(spec, spec.s(), m_max, replicates, cfg.seed, backend,
                                            cfg.workers));
    } else if (cfg.experiment == "cumulant-decay") {
        if (m_max < 3) m_max = 3;
        ExperimentConfig small_cfg = cfg;
        EnsembleSpec large_spec = build_ensemble_spec(cfg, defaults.n);
        small_cfg.n = std::max(16, large_spec.n() / 4);
        EnsembleSpec small_spec = build_ensemble_spec(small_cfg, defaults.n);
        // the small size serves as the decay reference point; oversampling it
        // keeps the trend comparison signal-dominated
        out.emplace("small", monte_carlo_run(small_spec, small_spec.s(), m_max, 8 * replicates,
                                             cfg.seed, backend, cfg.workers));
        out.emplace("large", monte_carlo_run(large_spec, large_spec.s(), m_max, replicates,
                                             cfg.seed + 1, backend, cfg.workers));
    } else if (cfg.experiment == "oracle") {
        ExperimentConfig mc_cfg = cfg;
        mc_cfg.ensemble = "rademacher";
        mc_cfg.diag_var = mc_cfg.diag_var.value_or(1.0);
        mc_cfg.n = cfg.n.value_or(defaults.n);
        EnsembleSpec spec = build_ensemble_spec(mc_cfg, defaults.n);
        require_guard(spec.n() <= 6, "oracle: exact comparison requires n <= 6");
        out.emplace("mc", monte_carlo_run(spec, spec.s(), m_max, replicates, cfg.seed, backend,
                                          cfg.workers));
    }
    return out;
}

inline std::vector<CheckRecord> evaluate_experiment(const ExperimentConfig& cfg,
                                                    const std::map<std::string, TraceSamples>& samples) {
    if (cfg.experiment == "tables") return experiments::evaluate_tables();
    if (cfg.experiment == "logmgf") return experiments::evaluate_logmgf(cfg);
    if (cfg.experiment == "semicircle") return experiments::evaluate_semicircle(cfg, samples.at("main"));
    if (cfg.experiment == "clt") return experiments::evaluate_clt(cfg, samples.at("main"));
    if (cfg.experiment == "covariance-matrix")
        return experiments::evaluate_covariance_matrix(cfg, samples.at("main"));
    if (cfg.experiment == "cumulant-decay")
        return experiments::evaluate_cumulant_decay(cfg, samples.at("small"), samples.at("large"));
    if (cfg.experiment == "oracle") {
        auto checks = experiments::evaluate_oracle_exact();
        auto mc = experiments::evaluate_oracle_mc(cfg, samples.at("mc"));
        checks.insert(checks.end(), mc.begin(), mc.end());
        return checks;
    }
    throw config_error("unknown experiment: " + cfg.experiment);
}

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "tables", "semicircle", "clt", "covariance-matrix", "cumulant-decay", "oracle", "logmgf"};
    return names;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    bool known = false;
    for (const auto& name : experiment_names()) known = known || name == cfg.experiment;
    if (!known) throw config_error("unknown experiment: " + cfg.experiment);

    auto start = std::chrono::steady_clock::now();
    ExperimentOutput out;
    out.samples = generate_samples(cfg);
    out.report.experiment = cfg.experiment;
    out.report.seed = cfg.seed;
    out.report.checks = evaluate_experiment(cfg, out.samples);
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!cfg.out.empty()) {
        std::filesystem::path dir(cfg.out);
        std::filesystem::create_directories(dir);
        write_text_file(dir / "run.json", config_to_json(cfg).dump(2) + "\n");
        for (const auto& [tag, samples] : out.samples) write_trace_samples(dir, tag, samples);
        if (cfg.format == "json")
            write_text_file(dir / "report.json", report_json(out.report).dump(2) + "\n");
        else
            write_text_file(dir / "report.csv", report_csv(out.report));
    }
    return out;
}

// Reloads persisted samples and re-derives the report; returns true when every
// number matches the stored report exactly.
inline bool recompute_from_dir(const std::filesystem::path& dir, RunReport* recomputed_out = nullptr) {
    ExperimentConfig cfg = config_from_json(nlohmann::json::parse(read_text_file(dir / "run.json")));
    std::map<std::string, TraceSamples> samples;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("samples_", 0) == 0 && name.size() > 12 &&
            name.substr(name.size() - 4) == ".csv") {
            std::string tag = name.substr(8, name.size() - 12);
            samples.emplace(tag, read_trace_samples(dir, tag));
        }
    }
    RunReport report;
    report.experiment = cfg.experiment;
    report.seed = cfg.seed;
    report.checks = evaluate_experiment(cfg, samples);
    if (recomputed_out) *recomputed_out = report;

    // byte comparison for csv; structural comparison of the check records for
    // json (the stored wall clock is not reproducible)
    if (std::filesystem::exists(dir / "report.csv"))
        return report_csv(report) == read_text_file(dir / "report.csv");
    if (std::filesystem::exists(dir / "report.json")) {
        auto stored = nlohmann::json::parse(read_text_file(dir / "report.json"));
        return stored.at("checks") == report_json(report).at("checks");
    }
    throw std::runtime_error("recompute: no stored report found in " + dir.string());
}

inline std::string report_lines(const RunReport& report) {
    std::string out;
    for (const auto& c : report.checks) {
        out += std::string(c.pass ? "[PASS] " : "[FAIL] ") + c.name + " (" + c.provenance +
               "): measured=" + format_double(c.measured) + " predicted=" + format_double(c.predicted);
        if (c.std_error > 0.0) out += " se=" + format_double(c.std_error);
        if (c.tolerance > 0.0) out += " tol=" + format_double(c.tolerance);
        out += "\n";
    }
    return out;
}

}  // namespace chebclt

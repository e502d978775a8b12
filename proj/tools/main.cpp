// Command-line driver: batch experiments, table dumps, variance predictions,
// and report reproduction from persisted samples.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "chebclt/experiments.hpp"
#include "chebclt/theory.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

struct CliOptions {
    chebclt::ExperimentConfig cfg;
    std::string config_path;
    // staging for optional numeric flags
    int n = -1, period = -1, m_max = -1, replicates = -1;
    double gamma = -1.0;
};

void add_run_flags(CLI::App* run, CliOptions& opt) {
    run->add_option("--experiment", opt.cfg.experiment, "experiment name")->required();
    run->add_option("--config", opt.config_path, "key=value configuration file");
    run->add_option("--ensemble", opt.cfg.ensemble,
                    "preset: goe | flip-goe | rademacher | complex-gaussian | skewed | custom");
    run->add_option("--relation", [&](const std::vector<std::string>& v) {
        opt.cfg.relation = v.back();
        return true;
    }, "trivial-wigner | flip | period-orbit");
    run->add_option("--n", opt.n, "matrix dimension");
    run->add_option("--period", opt.period, "orbit period for period-orbit relations");
    run->add_option("--gamma", opt.gamma, "sparsity exponent in [0,1]");
    run->add_option("--m-max", opt.m_max, "largest polynomial degree / trace power");
    run->add_option("--replicates", opt.replicates, "Monte Carlo replicates");
    run->add_option("--seed", opt.cfg.seed, "master seed");
    run->add_option("--out", opt.cfg.out, "output directory");
    run->add_option("--format", opt.cfg.format, "report format: csv | json");
    run->add_option("--backend", opt.cfg.backend, "trace backend: eigen | recurrence");
    run->add_option("--workers", opt.cfg.workers, "worker threads (0 = hardware)");
}

int run_command(CliOptions& opt) {
    using namespace chebclt;
    // precedence: defaults < config file < command line flags. The flags were
    // already parsed into opt, so stash them, apply the file, then re-apply.
    ExperimentConfig flag_layer = opt.cfg;
    if (!opt.config_path.empty()) {
        ExperimentConfig file_cfg;
        apply_config_text(file_cfg, read_text_file(opt.config_path));
        ExperimentConfig merged = file_cfg;
        if (!flag_layer.experiment.empty()) merged.experiment = flag_layer.experiment;
        if (flag_layer.ensemble != "goe") merged.ensemble = flag_layer.ensemble;
        if (flag_layer.relation) merged.relation = flag_layer.relation;
        if (flag_layer.seed != 1) merged.seed = flag_layer.seed;
        if (!flag_layer.out.empty()) merged.out = flag_layer.out;
        if (flag_layer.format != "csv") merged.format = flag_layer.format;
        if (flag_layer.backend != "eigen") merged.backend = flag_layer.backend;
        if (flag_layer.workers != 0) merged.workers = flag_layer.workers;
        opt.cfg = merged;
    }
    if (opt.n > 0) opt.cfg.n = opt.n;
    if (opt.period > 0) opt.cfg.period = opt.period;
    if (opt.gamma >= 0.0) opt.cfg.gamma = opt.gamma;
    if (opt.m_max > 0) opt.cfg.m_max = opt.m_max;
    if (opt.replicates > 0) opt.cfg.replicates = opt.replicates;

    ExperimentOutput out = run_experiment(opt.cfg);
    std::fputs(report_lines(out.report).c_str(), stdout);
    std::printf("%s: %zu checks, %s (%.1fs)\n", out.report.experiment.c_str(),
                out.report.checks.size(), out.report.all_pass() ? "all passed" : "FAILURES",
                out.report.wall_seconds);
    return out.report.all_pass() ? kExitPass : kExitCheckFailed;
}

int tables_command(int max_degree, int k_max, const std::string& out_dir) {
    using namespace chebclt;
    auto tab = chebyshev_table(max_degree);
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "chebyshev_coefficients.csv", triangular_csv(tab.T));
    write_text_file(dir / "monomial_expansion.csv", triangular_csv(tab.t));
    auto report = verify_recurrences(k_max);
    write_text_file(dir / "count_recurrences.csv", recurrence_report_csv(report));
    std::printf("wrote tables (max degree %d) and recurrence checks (k <= %d) to %s\n", max_degree,
                k_max, out_dir.c_str());
    std::printf("inverse identity: %s; recurrences: %s\n",
                chebyshev_inverse_identity_holds(tab) ? "ok" : "FAILED",
                report.all_ok() ? "ok" : "FAILED");
    return chebyshev_inverse_identity_holds(tab) && report.all_ok() ? kExitPass : kExitCheckFailed;
}

int predict_command(const std::string& relation, int n, int period, int m_max, double diag_var,
                    double offdiag_var, const std::string& out_dir, const std::string& format) {
    using namespace chebclt;
    EquivalenceRelation rel = relation == "flip"           ? EquivalenceRelation::flip(n)
                              : relation == "period-orbit" ? EquivalenceRelation::period_orbit(n, period)
                                                           : EquivalenceRelation::trivial(n);
    EntryLaw diag = EntryLaw::gaussian(diag_var);
    EntryLaw offdiag = EntryLaw::gaussian(offdiag_var);
    int T = rel.period();

    // columns: m, v_limit, v_finite_n, source, count, count_with_diagonal
    std::string csv = "m,v_limit,v_finite_n,source,count,count_with_diagonal\n";
    nlohmann::json rows = nlohmann::json::array();
    for (int m = 1; m <= m_max; ++m) {
        double v_limit = wigner_variance(m, T, diag.moment(2), offdiag.moment(2), offdiag.moment(4));
        double v_finite = finite_n_variance(rel, m, diag, offdiag);
        std::string source;
        std::int64_t count = 0, count_full = 0;
        if (m == 1) {
            source = "diagonal-pair-count";
            count = count_full = count_diag_pairs(rel);
        } else if (m == 2) {
            source = "offdiagonal-quadruple-count";
            count = count_full = count_offdiag_quadruples(rel);
        } else {
            source = "compatible-multi-index-count";
            auto g = DihedralElement::group(m).front();
            count = count_S_OD(g, rel);
            count_full = count_S(g, rel);
        }
        csv += std::to_string(m) + "," + format_double(v_limit) + "," + format_double(v_finite) + "," +
               source + "," + std::to_string(count) + "," + std::to_string(count_full) + "\n";
        rows.push_back({{"m", m},
                        {"v_limit", v_limit},
                        {"v_finite_n", v_finite},
                        {"source", source},
                        {"count", count},
                        {"count_with_diagonal", count_full}});
    }
    if (!out_dir.empty()) {
        std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        if (format == "json")
            write_text_file(dir / "predictions.json", rows.dump(2) + "\n");
        else
            write_text_file(dir / "predictions.csv", csv);
    }
    std::fputs(csv.c_str(), stdout);
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlated Wigner ensembles: Chebyshev trace fluctuations and their predictions"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* run = app.add_subcommand("run", "run a named experiment and report pass/fail checks");
    add_run_flags(run, opt);

    int max_degree = 12, k_max = 10;
    std::string tables_out = "tables_out";
    CLI::App* tables = app.add_subcommand("tables", "dump coefficient tables and count recurrences");
    tables->add_option("--max-degree", max_degree, "largest polynomial degree");
    tables->add_option("--k-max", k_max, "largest circle size for the recurrence checks");
    tables->add_option("--out", tables_out, "output directory");

    std::string pr_relation = "trivial-wigner", pr_out, pr_format = "csv";
    int pr_n = 8, pr_period = 3, pr_m_max = 3;
    double pr_diag_var = 2.0, pr_offdiag_var = 1.0;
    CLI::App* predict = app.add_subcommand("predict", "limiting and finite-n variance predictions");
    predict->add_option("--relation", pr_relation, "trivial-wigner | flip | period-orbit");
    predict->add_option("--n", pr_n, "matrix dimension (exhaustive counts)");
    predict->add_option("--period", pr_period, "orbit period for period-orbit");
    predict->add_option("--m-max", pr_m_max, "largest degree");
    predict->add_option("--diag-var", pr_diag_var, "diagonal entry variance");
    predict->add_option("--offdiag-var", pr_offdiag_var, "off-diagonal entry variance");
    predict->add_option("--out", pr_out, "output directory");
    predict->add_option("--format", pr_format, "csv | json");

    std::string recompute_dir;
    CLI::App* recompute = app.add_subcommand("recompute", "re-derive a report from persisted samples");
    recompute->add_option("--dir", recompute_dir, "directory holding run.json, samples and report")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfigError;
    }

    try {
        if (run->parsed()) return run_command(opt);
        if (tables->parsed()) return tables_command(max_degree, k_max, tables_out);
        if (predict->parsed())
            return predict_command(pr_relation, pr_n, pr_period, pr_m_max, pr_diag_var,
                                   pr_offdiag_var, pr_out, pr_format);
        if (recompute->parsed()) {
            bool reproduced = chebclt::recompute_from_dir(recompute_dir);
            std::printf("recompute: %s\n", reproduced ? "report reproduced exactly" : "MISMATCH");
            return reproduced ? kExitPass : kExitCheckFailed;
        }
    } catch (const chebclt::config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfigError;
    } catch (const chebclt::guard_error& e) {
        std::fprintf(stderr, "size guard: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
    return kExitConfigError;
}

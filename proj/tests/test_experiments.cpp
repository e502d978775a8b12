#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "chebclt/experiments.hpp"

using namespace chebclt;

TEST_CASE("config text parsing", "[experiments]") {
    ExperimentConfig cfg;
    apply_config_text(cfg,
                      "# comment\n"
                      "experiment = clt\n"
                      "n=64\n"
                      "replicates = 500   # inline comment\n"
                      "offdiag_law=rademacher\n"
                      "offdiag_var=1.0\n"
                      "seed=42\n");
    CHECK(cfg.experiment == "clt");
    CHECK(cfg.n == 64);
    CHECK(cfg.replicates == 500);
    CHECK(cfg.offdiag_law_kind == "rademacher");
    CHECK(cfg.seed == 42);

    CHECK_THROWS_AS(apply_config_text(cfg, "mystery=1\n"), config_error);
    CHECK_THROWS_AS(apply_config_text(cfg, "n=abc\n"), config_error);
    CHECK_THROWS_AS(apply_config_text(cfg, "just a line\n"), config_error);
}

TEST_CASE("ensemble presets", "[experiments]") {
    ExperimentConfig cfg;
    cfg.ensemble = "goe";
    auto goe = build_ensemble_spec(cfg, 32);
    CHECK(goe.n() == 32);
    CHECK(goe.offdiag_law.moment(2) == Catch::Approx(1.0));
    CHECK(goe.diag_law.moment(2) == Catch::Approx(2.0));
    CHECK(goe.period() == 1);

    cfg.ensemble = "flip-goe";
    CHECK(build_ensemble_spec(cfg, 32).period() == 2);

    cfg.ensemble = "rademacher";
    auto rad = build_ensemble_spec(cfg, 32);
    CHECK(rad.offdiag_law.moment(4) == Catch::Approx(1.0));
    CHECK(rad.diag_law.moment(2) == Catch::Approx(2.0));

    cfg.ensemble = "complex-gaussian";
    CHECK(build_ensemble_spec(cfg, 32).complex());

    cfg.ensemble = "skewed";
    auto skew = build_ensemble_spec(cfg, 32);
    CHECK(skew.offdiag_law.moment(2) == Catch::Approx(1.0));
    CHECK(skew.offdiag_law.moment(3) > 1.0);

    cfg.ensemble = "no-such-preset";
    CHECK_THROWS_AS(build_ensemble_spec(cfg, 32), config_error);
}

TEST_CASE("spec serialization round-trips", "[experiments]") {
    EnsembleSpec spec;
    spec.relation = EquivalenceRelation::period_orbit(12, 3);
    spec.diag_law = EntryLaw::three_point(2.0, 1.0, 0.1);
    spec.offdiag_law = EntryLaw::uniform_centered(1.5);
    spec.gamma = 0.25;
    auto j = spec_to_json(spec);
    EnsembleSpec back = spec_from_json(j);
    CHECK(sample_matrix_real(spec, 3) == sample_matrix_real(back, 3));
}

TEST_CASE("trace sample persistence round-trips bit-exactly", "[experiments]") {
    EnsembleSpec spec;
    spec.relation = EquivalenceRelation::trivial(10);
    auto samples = monte_carlo_run(spec, 1.0, 4, 25, 77, TraceBackend::eigen_decomposition, 2);
    auto dir = std::filesystem::temp_directory_path() / "chebclt_test_io";
    std::filesystem::remove_all(dir);
    write_trace_samples(dir, "main", samples);
    auto loaded = read_trace_samples(dir, "main");
    CHECK(loaded.values == samples.values);
    CHECK(loaded.master_seed == samples.master_seed);
    CHECK(loaded.s == samples.s);
    CHECK(trace_samples_csv(loaded) == trace_samples_csv(samples));
    std::filesystem::remove_all(dir);
}

TEST_CASE("tables experiment passes every exact identity", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "tables";
    auto out = run_experiment(cfg);
    for (const auto& c : out.report.checks) {
        INFO(c.name);
        CHECK(c.pass);
    }
}

TEST_CASE("logmgf experiment agreement", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "logmgf";
    auto out = run_experiment(cfg);
    CHECK(out.report.all_pass());
}

TEST_CASE("oracle experiment: exact, expansion and Monte Carlo agree", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "oracle";
    cfg.replicates = 2000;
    cfg.seed = 5;
    auto out = run_experiment(cfg);
    for (const auto& c : out.report.checks) {
        INFO(c.name << " measured=" << c.measured << " predicted=" << c.predicted);
        CHECK(c.pass);
    }
}

TEST_CASE("small clt run passes with self-scaling tolerances", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "clt";
    cfg.n = 64;
    cfg.replicates = 600;
    cfg.m_max = 3;
    cfg.seed = 31;
    auto out = run_experiment(cfg);
    for (const auto& c : out.report.checks) {
        INFO(c.name << " measured=" << c.measured << " predicted=" << c.predicted
                    << " tol=" << c.tolerance);
        CHECK(c.pass);
    }
}

TEST_CASE("complex clt run uses the complex variance predictions", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "clt";
    cfg.ensemble = "complex-gaussian";
    cfg.n = 64;
    cfg.replicates = 600;
    cfg.m_max = 3;
    cfg.seed = 8;
    auto out = run_experiment(cfg);
    for (const auto& c : out.report.checks) {
        INFO(c.name << " measured=" << c.measured << " predicted=" << c.predicted);
        CHECK(c.pass);
        if (c.name == "variance:m=3") CHECK(c.predicted == Catch::Approx(3.0));
    }
}

TEST_CASE("degenerate fourth moment routes to the vanishing check", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "clt";
    cfg.ensemble = "rademacher";
    cfg.n = 48;
    cfg.replicates = 400;
    cfg.m_max = 2;
    cfg.seed = 21;
    auto out = run_experiment(cfg);
    bool saw_vanishing = false;
    for (const auto& c : out.report.checks) {
        if (c.name == "variance-vanishes:m=2") {
            saw_vanishing = true;
            CHECK(c.pass);
        }
    }
    CHECK(saw_vanishing);
}

TEST_CASE("sparse ensembles keep the spectral moments", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "semicircle";
    cfg.n = 128;
    cfg.replicates = 200;
    cfg.gamma = 0.3;
    cfg.seed = 12;
    auto out = run_experiment(cfg);
    for (const auto& c : out.report.checks) {
        if (c.name == "spectral-moment:k=2" || c.name == "spectral-moment:k=4") {
            INFO(c.name << " measured=" << c.measured << " predicted=" << c.predicted);
            CHECK(std::abs(c.measured - c.predicted) <= 0.10 * c.predicted);
        }
    }
}

TEST_CASE("cumulant-decay experiment plumbing", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "cumulant-decay";
    cfg.n = 64;  // reference size becomes 16
    cfg.replicates = 500;
    cfg.seed = 14;
    auto out = run_experiment(cfg);
    REQUIRE(out.samples.count("small") == 1);
    REQUIRE(out.samples.count("large") == 1);
    CHECK(out.samples.at("small").spec.n() == 16);
    CHECK(out.samples.at("small").replicates == 4000);
    CHECK(out.report.checks.size() == 4);
    for (const auto& c : out.report.checks)
        if (c.name.rfind("-vanishes", std::string::npos) != std::string::npos) CHECK(c.std_error > 0.0);
}

TEST_CASE("field and T config keys", "[experiments]") {
    ExperimentConfig cfg;
    apply_config_text(cfg, "relation=period-orbit\nT=4\nfield=complex\n");
    CHECK(cfg.period == 4);
    REQUIRE(cfg.field.has_value());
    // complex entries pair with the trivial relation only
    CHECK_THROWS_AS(build_ensemble_spec(cfg, 12), std::exception);
    ExperimentConfig cfg2;
    apply_config_text(cfg2, "field=complex\n");
    CHECK(build_ensemble_spec(cfg2, 12).complex());
    ExperimentConfig cfg3;
    apply_config_text(cfg3, "field=real\noffdiag_law=complex-gaussian\n");
    CHECK_THROWS_AS(build_ensemble_spec(cfg3, 12), config_error);
}

TEST_CASE("run writes outputs that recompute identically", "[experiments]") {
    auto dir = std::filesystem::temp_directory_path() / "chebclt_test_run";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg;
    cfg.experiment = "semicircle";
    cfg.n = 48;
    cfg.replicates = 60;
    cfg.seed = 9;
    cfg.out = dir.string();
    auto out = run_experiment(cfg);
    CHECK(std::filesystem::exists(dir / "report.csv"));
    CHECK(std::filesystem::exists(dir / "samples_main.csv"));
    CHECK(std::filesystem::exists(dir / "samples_main.meta.json"));
    CHECK(recompute_from_dir(dir));

    // identical config: byte-identical sample files
    auto dir2 = std::filesystem::temp_directory_path() / "chebclt_test_run2";
    std::filesystem::remove_all(dir2);
    ExperimentConfig cfg2 = cfg;
    cfg2.out = dir2.string();
    cfg2.workers = 2;
    run_experiment(cfg2);
    CHECK(read_text_file(dir / "samples_main.csv") == read_text_file(dir2 / "samples_main.csv"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("json report recompute", "[experiments]") {
    auto dir = std::filesystem::temp_directory_path() / "chebclt_test_json";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg;
    cfg.experiment = "logmgf";
    cfg.format = "json";
    cfg.out = dir.string();
    run_experiment(cfg);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(recompute_from_dir(dir));
    std::filesystem::remove_all(dir);
}

TEST_CASE("unknown experiment is a configuration error", "[experiments]") {
    ExperimentConfig cfg;
    cfg.experiment = "frobnicate";
    CHECK_THROWS_AS(run_experiment(cfg), config_error);
}

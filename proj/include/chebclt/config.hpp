#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "chebclt/ensembles.hpp"
#include "chebclt/io.hpp"
#include "chebclt/statistics.hpp"

namespace chebclt {

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Flat experiment configuration. File keys and command-line flags carry the
// same names (flags spell underscores as dashes). Unset numeric fields take
// per-experiment defaults at run time.
struct ExperimentConfig {
    std::string experiment;
    std::string ensemble = "goe";  // preset: goe | flip-goe | rademacher | complex-gaussian | skewed
    std::optional<std::string> relation;  // trivial-wigner | flip | period-orbit
    std::optional<int> n;
    std::optional<int> period;  // orbit period; config key "T" (alias "period")
    std::optional<std::string> field;  // real | complex
    std::optional<double> gamma;
    std::optional<std::string> diag_law_kind, offdiag_law_kind;
    std::optional<double> diag_var, offdiag_var;
    std::optional<double> diag_vplus, diag_vminus, diag_pplus;
    std::optional<double> offdiag_vplus, offdiag_vminus, offdiag_pplus;
    std::optional<int> m_max;
    std::optional<int> replicates;
    std::uint64_t seed = 1;
    std::string out;                // output directory; empty disables file output
    std::string format = "csv";     // csv | json
    std::string backend = "eigen";  // eigen | recurrence
    int workers = 0;                // 0 = hardware concurrency
    double tol_rel = 0.10;
    double tol_nse = 4.0;
    double tol_quad = 1e-6;
};

namespace detail {

inline EntryLaw build_law(const std::string& kind, std::optional<double> var,
                          std::optional<double> vplus, std::optional<double> vminus,
                          std::optional<double> pplus, double default_var) {
    double v = var.value_or(default_var);
    if (kind == "gaussian") return EntryLaw::gaussian(v);
    if (kind == "rademacher") return EntryLaw::rademacher(std::sqrt(v));
    if (kind == "uniform") return EntryLaw::uniform_centered(std::sqrt(3.0 * v));
    if (kind == "complex-gaussian") return EntryLaw::complex_gaussian(v);
    if (kind == "complex-discrete") return EntryLaw::complex_discrete(std::sqrt(v));
    if (kind == "three-point") {
        if (!vplus || !vminus || !pplus)
            throw config_error("three-point law needs *_vplus, *_vminus and *_pplus");
        return EntryLaw::three_point(*vplus, *vminus, *pplus);
    }
    throw config_error("unknown entry law kind: " + kind);
}

}  // namespace detail

// Skewed atoms with E(a^2) = 1 and nonzero third moment, used where cumulant
// decay needs a visible signal.
inline EntryLaw skewed_three_point_unit_variance() {
    double scale = std::sqrt(1.2);  // E(a^2) of the raw atoms {+3, -1} at p = 0.1, 0.3
    return EntryLaw::three_point(3.0 / scale, 1.0 / scale, 0.1);
}

inline EnsembleSpec build_ensemble_spec(const ExperimentConfig& cfg, int default_n) {
    // preset layer
    std::string relation = "trivial-wigner";
    std::string diag_kind = "gaussian", offdiag_kind = "gaussian";
    if (cfg.ensemble == "goe") {
    } else if (cfg.ensemble == "flip-goe") {
        relation = "flip";
    } else if (cfg.ensemble == "rademacher") {
        diag_kind = "rademacher";
        offdiag_kind = "rademacher";
    } else if (cfg.ensemble == "complex-gaussian") {
        offdiag_kind = "complex-gaussian";
    } else if (cfg.ensemble == "skewed") {
        diag_kind = "three-point";
        offdiag_kind = "three-point";
    } else if (cfg.ensemble == "custom") {
        // everything comes from the explicit keys
    } else {
        throw config_error("unknown ensemble preset: " + cfg.ensemble);
    }
    relation = cfg.relation.value_or(relation);
    diag_kind = cfg.diag_law_kind.value_or(diag_kind);
    offdiag_kind = cfg.offdiag_law_kind.value_or(offdiag_kind);
    if (cfg.field) {
        bool complex_kind = offdiag_kind.rfind("complex", 0) == 0;
        if (*cfg.field == "complex") {
            if (!cfg.offdiag_law_kind) offdiag_kind = "complex-gaussian";
            else if (!complex_kind)
                throw config_error("field=complex conflicts with offdiag_law=" + offdiag_kind);
        } else if (*cfg.field == "real") {
            if (complex_kind) throw config_error("field=real conflicts with offdiag_law=" + offdiag_kind);
        } else {
            throw config_error("field must be real or complex, got '" + *cfg.field + "'");
        }
    }

    int n = cfg.n.value_or(default_n);
    EnsembleSpec spec;
    if (relation == "trivial-wigner")
        spec.relation = EquivalenceRelation::trivial(n);
    else if (relation == "flip")
        spec.relation = EquivalenceRelation::flip(n);
    else if (relation == "period-orbit")
        spec.relation = EquivalenceRelation::period_orbit(n, cfg.period.value_or(3));
    else
        throw config_error("unknown relation: " + relation);

    try {
        if (cfg.ensemble == "skewed" && offdiag_kind == "three-point" && !cfg.offdiag_vplus) {
            spec.offdiag_law = skewed_three_point_unit_variance();
        } else {
            spec.offdiag_law = detail::build_law(offdiag_kind, cfg.offdiag_var, cfg.offdiag_vplus,
                                                 cfg.offdiag_vminus, cfg.offdiag_pplus, 1.0);
        }
        double default_diag_var = 2.0 * spec.offdiag_law.abs2();
        if (cfg.ensemble == "skewed" && diag_kind == "three-point" && !cfg.diag_vplus) {
            EntryLaw unit = skewed_three_point_unit_variance();
            double scale = std::sqrt(cfg.diag_var.value_or(default_diag_var));
            spec.diag_law = EntryLaw::three_point(scale * unit.param_a(), scale * unit.param_b(),
                                                  unit.param_p());
        } else {
            spec.diag_law = detail::build_law(diag_kind, cfg.diag_var, cfg.diag_vplus, cfg.diag_vminus,
                                              cfg.diag_pplus, default_diag_var);
        }
        spec.gamma = cfg.gamma.value_or(0.0);
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// key=value configuration files: '#' comments, unknown keys rejected.
// ---------------------------------------------------------------------------

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&](const std::string& what) {
        try {
            std::size_t used = 0;
            int v = std::stoi(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (...) {
            throw config_error("config key '" + what + "' expects an integer, got '" + value + "'");
        }
    };
    auto as_u64 = [&](const std::string& what) {
        try {
            std::size_t used = 0;
            unsigned long long v = std::stoull(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return static_cast<std::uint64_t>(v);
        } catch (...) {
            throw config_error("config key '" + what + "' expects an unsigned integer, got '" + value + "'");
        }
    };
    auto as_double = [&](const std::string& what) {
        try {
            std::size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (...) {
            throw config_error("config key '" + what + "' expects a number, got '" + value + "'");
        }
    };

    if (key == "experiment") cfg.experiment = value;
    else if (key == "ensemble") cfg.ensemble = value;
    else if (key == "relation") cfg.relation = value;
    else if (key == "n") cfg.n = as_int(key);
    else if (key == "T" || key == "period") cfg.period = as_int(key);
    else if (key == "field") cfg.field = value;
    else if (key == "gamma") cfg.gamma = as_double(key);
    else if (key == "diag_law") cfg.diag_law_kind = value;
    else if (key == "offdiag_law") cfg.offdiag_law_kind = value;
    else if (key == "diag_var") cfg.diag_var = as_double(key);
    else if (key == "offdiag_var") cfg.offdiag_var = as_double(key);
    else if (key == "diag_vplus") cfg.diag_vplus = as_double(key);
    else if (key == "diag_vminus") cfg.diag_vminus = as_double(key);
    else if (key == "diag_pplus") cfg.diag_pplus = as_double(key);
    else if (key == "offdiag_vplus") cfg.offdiag_vplus = as_double(key);
    else if (key == "offdiag_vminus") cfg.offdiag_vminus = as_double(key);
    else if (key == "offdiag_pplus") cfg.offdiag_pplus = as_double(key);
    else if (key == "m_max") cfg.m_max = as_int(key);
    else if (key == "replicates") cfg.replicates = as_int(key);
    else if (key == "seed") cfg.seed = as_u64(key);
    else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = value;
    else if (key == "backend") cfg.backend = value;
    else if (key == "workers") cfg.workers = as_int(key);
    else if (key == "tol_rel") cfg.tol_rel = as_double(key);
    else if (key == "tol_nse") cfg.tol_nse = as_double(key);
    else if (key == "tol_quad") cfg.tol_quad = as_double(key);
    else throw config_error("unknown config key: " + key);
}

inline void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        std::size_t b = 0, e = line.size();
        while (b < e && is_space(line[b])) ++b;
        while (e > b && is_space(line[e - 1])) --e;
        line = line.substr(b, e - b);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && is_space(key.back())) key.pop_back();
        std::size_t vb = 0;
        while (vb < value.size() && is_space(value[vb])) ++vb;
        value = value.substr(vb);
        apply_config_entry(cfg, key, value);
    }
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.format != "csv" && cfg.format != "json")
        throw config_error("format must be csv or json, got '" + cfg.format + "'");
    if (cfg.backend != "eigen" && cfg.backend != "recurrence")
        throw config_error("backend must be eigen or recurrence, got '" + cfg.backend + "'");
    if (cfg.n && *cfg.n < 1) throw config_error("n must be >= 1");
    if (cfg.replicates && *cfg.replicates < 2) throw config_error("replicates must be >= 2");
    if (cfg.m_max && *cfg.m_max < 1) throw config_error("m_max must be >= 1");
    if (cfg.workers < 0) throw config_error("workers must be >= 0");
    if (!(cfg.tol_rel >= 0) || !(cfg.tol_nse >= 0) || !(cfg.tol_quad >= 0))
        throw config_error("tolerances must be non-negative");
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.experiment;
    j["ensemble"] = cfg.ensemble;
    if (cfg.relation) j["relation"] = *cfg.relation;
    if (cfg.n) j["n"] = *cfg.n;
    if (cfg.period) j["T"] = *cfg.period;
    if (cfg.field) j["field"] = *cfg.field;
    if (cfg.gamma) j["gamma"] = *cfg.gamma;
    if (cfg.diag_law_kind) j["diag_law"] = *cfg.diag_law_kind;
    if (cfg.offdiag_law_kind) j["offdiag_law"] = *cfg.offdiag_law_kind;
    if (cfg.diag_var) j["diag_var"] = *cfg.diag_var;
    if (cfg.offdiag_var) j["offdiag_var"] = *cfg.offdiag_var;
    if (cfg.diag_vplus) j["diag_vplus"] = *cfg.diag_vplus;
    if (cfg.diag_vminus) j["diag_vminus"] = *cfg.diag_vminus;
    if (cfg.diag_pplus) j["diag_pplus"] = *cfg.diag_pplus;
    if (cfg.offdiag_vplus) j["offdiag_vplus"] = *cfg.offdiag_vplus;
    if (cfg.offdiag_vminus) j["offdiag_vminus"] = *cfg.offdiag_vminus;
    if (cfg.offdiag_pplus) j["offdiag_pplus"] = *cfg.offdiag_pplus;
    if (cfg.m_max) j["m_max"] = *cfg.m_max;
    if (cfg.replicates) j["replicates"] = *cfg.replicates;
    j["seed"] = cfg.seed;
    j["format"] = cfg.format;
    j["backend"] = cfg.backend;
    j["workers"] = cfg.workers;
    j["tol_rel"] = cfg.tol_rel;
    j["tol_nse"] = cfg.tol_nse;
    j["tol_quad"] = cfg.tol_quad;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "seed")
            cfg.seed = value.get<std::uint64_t>();
        else if (key == "workers")
            cfg.workers = value.get<int>();
        else if (key == "tol_rel")
            cfg.tol_rel = value.get<double>();
        else if (key == "tol_nse")
            cfg.tol_nse = value.get<double>();
        else if (key == "tol_quad")
            cfg.tol_quad = value.get<double>();
        else if (value.is_string())
            apply_config_entry(cfg, key, value.get<std::string>());
        else
            apply_config_entry(cfg, key, value.dump());
    }
    return cfg;
}

}  // namespace chebclt

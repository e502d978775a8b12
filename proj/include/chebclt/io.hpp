#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chebclt/chebyshev.hpp"
#include "chebclt/statistics.hpp"

namespace chebclt {

// Shortest round-trippable decimal representation.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Ensemble (de)serialization
// ---------------------------------------------------------------------------

inline nlohmann::json law_to_json(const EntryLaw& law) {
    return {{"kind", law.name()}, {"a", law.param_a()}, {"b", law.param_b()}, {"p", law.param_p()}};
}

inline EntryLaw law_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    double a = j.at("a").get<double>();
    if (kind == "gaussian") return EntryLaw::gaussian(a * a);
    if (kind == "rademacher") return EntryLaw::rademacher(a);
    if (kind == "uniform") return EntryLaw::uniform_centered(a);
    if (kind == "three-point") return EntryLaw::three_point(a, j.at("b").get<double>(), j.at("p").get<double>());
    if (kind == "complex-gaussian") return EntryLaw::complex_gaussian(a * a);
    if (kind == "complex-discrete") return EntryLaw::complex_discrete(a);
    throw std::invalid_argument("unknown entry law kind: " + kind);
}

inline std::string relation_name(EquivalenceRelation::Kind kind) {
    switch (kind) {
        case EquivalenceRelation::Kind::trivial_wigner: return "trivial-wigner";
        case EquivalenceRelation::Kind::flip: return "flip";
        case EquivalenceRelation::Kind::period_orbit: return "period-orbit";
        case EquivalenceRelation::Kind::custom: return "custom";
    }
    return "?";
}

inline nlohmann::json spec_to_json(const EnsembleSpec& spec) {
    nlohmann::json j;
    j["n"] = spec.n();
    j["relation"] = relation_name(spec.relation.kind());
    j["T"] = spec.relation.period();
    if (spec.relation.kind() == EquivalenceRelation::Kind::custom) {
        std::vector<int> phi(static_cast<std::size_t>(spec.n()));
        for (int p = 0; p < spec.n(); ++p) phi[static_cast<std::size_t>(p)] = spec.relation.phi(p);
        j["phi"] = phi;
    }
    j["gamma"] = spec.gamma;
    j["field"] = spec.complex() ? "complex" : "real";
    j["diag_law"] = law_to_json(spec.diag_law);
    j["offdiag_law"] = law_to_json(spec.offdiag_law);
    return j;
}

inline EnsembleSpec spec_from_json(const nlohmann::json& j) {
    EnsembleSpec spec;
    int n = j.at("n").get<int>();
    std::string relation = j.at("relation").get<std::string>();
    if (relation == "trivial-wigner")
        spec.relation = EquivalenceRelation::trivial(n);
    else if (relation == "flip")
        spec.relation = EquivalenceRelation::flip(n);
    else if (relation == "period-orbit")
        spec.relation = EquivalenceRelation::period_orbit(n, j.at("T").get<int>());
    else if (relation == "custom")
        spec.relation = EquivalenceRelation::custom(j.at("phi").get<std::vector<int>>(), j.at("T").get<int>());
    else
        throw std::invalid_argument("unknown relation: " + relation);
    spec.gamma = j.at("gamma").get<double>();
    spec.diag_law = law_from_json(j.at("diag_law"));
    spec.offdiag_law = law_from_json(j.at("offdiag_law"));
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Trace sample persistence: CSV of (replicate, m, value) plus a JSON sidecar
// carrying everything needed for an exact rerun.
// ---------------------------------------------------------------------------

inline std::string trace_samples_csv(const TraceSamples& samples) {
    std::string out = "replicate,m,value\n";
    for (int r = 0; r < samples.replicates; ++r)
        for (int m = 0; m <= samples.m_max; ++m)
            out += std::to_string(r) + "," + std::to_string(m) + "," + format_double(samples.values(r, m)) + "\n";
    return out;
}

inline nlohmann::json trace_samples_meta(const TraceSamples& samples) {
    nlohmann::json j;
    j["spec"] = spec_to_json(samples.spec);
    j["s"] = samples.s;
    j["m_max"] = samples.m_max;
    j["replicates"] = samples.replicates;
    j["master_seed"] = samples.master_seed;
    j["backend"] = samples.backend == TraceBackend::eigen_decomposition ? "eigen" : "recurrence";
    return j;
}

inline void write_trace_samples(const std::filesystem::path& dir, const std::string& tag,
                                const TraceSamples& samples) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / ("samples_" + tag + ".csv"), trace_samples_csv(samples));
    write_text_file(dir / ("samples_" + tag + ".meta.json"), trace_samples_meta(samples).dump(2) + "\n");
}

inline TraceSamples read_trace_samples(const std::filesystem::path& dir, const std::string& tag) {
    auto meta = nlohmann::json::parse(read_text_file(dir / ("samples_" + tag + ".meta.json")));
    TraceSamples samples;
    samples.spec = spec_from_json(meta.at("spec"));
    samples.s = meta.at("s").get<double>();
    samples.m_max = meta.at("m_max").get<int>();
    samples.replicates = meta.at("replicates").get<int>();
    samples.master_seed = meta.at("master_seed").get<std::uint64_t>();
    samples.backend = meta.at("backend").get<std::string>() == "eigen" ? TraceBackend::eigen_decomposition
                                                                       : TraceBackend::matrix_recurrence;
    samples.values.resize(samples.replicates, samples.m_max + 1);
    samples.values.setZero();

    std::istringstream in(read_text_file(dir / ("samples_" + tag + ".csv")));
    std::string line;
    if (!std::getline(in, line) || line != "replicate,m,value")
        throw std::runtime_error("samples csv: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("samples csv: bad row");
        int r = std::stoi(line.substr(0, c1));
        int m = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        double v = std::stod(line.substr(c2 + 1));
        if (r < 0 || r >= samples.replicates || m < 0 || m > samples.m_max)
            throw std::runtime_error("samples csv: row out of range");
        samples.values(r, m) = v;
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Run reports
// ---------------------------------------------------------------------------

struct CheckRecord {
    std::string name;
    std::string provenance;  // the mathematical statement being exercised
    double measured = 0.0;
    double predicted = 0.0;
    double std_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct RunReport {
    std::string experiment;
    std::vector<CheckRecord> checks;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline CheckRecord check_close(std::string name, std::string provenance, double measured,
                               double predicted, double std_error, double tolerance) {
    CheckRecord c{std::move(name), std::move(provenance), measured, predicted, std_error, tolerance, false};
    c.pass = std::abs(measured - predicted) <= tolerance;
    return c;
}

inline CheckRecord check_at_most(std::string name, std::string provenance, double measured,
                                 double bound) {
    CheckRecord c{std::move(name), std::move(provenance), measured, bound, 0.0, 0.0, false};
    c.pass = measured <= bound;
    return c;
}

inline CheckRecord check_exact(std::string name, std::string provenance, bool holds) {
    CheckRecord c{std::move(name), std::move(provenance), holds ? 1.0 : 0.0, 1.0, 0.0, 0.0, false};
    c.pass = holds;
    return c;
}

// Fixed column order: name,provenance,measured,predicted,std_error,tolerance,pass
inline std::string report_csv(const RunReport& report) {
    std::string out = "name,provenance,measured,predicted,std_error,tolerance,pass\n";
    for (const auto& c : report.checks) {
        out += c.name + "," + c.provenance + "," + format_double(c.measured) + "," +
               format_double(c.predicted) + "," + format_double(c.std_error) + "," +
               format_double(c.tolerance) + "," + (c.pass ? "1" : "0") + "\n";
    }
    return out;
}

inline nlohmann::json report_json(const RunReport& report) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"provenance", c.provenance},
                          {"measured", c.measured},
                          {"predicted", c.predicted},
                          {"std_error", c.std_error},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    return {{"experiment", report.experiment},
            {"checks", checks},
            {"wall_seconds", report.wall_seconds},
            {"seed", report.seed},
            {"all_pass", report.all_pass()}};
}

// ---------------------------------------------------------------------------
// Table dumps
// ---------------------------------------------------------------------------

inline std::string triangular_csv(const std::vector<std::vector<std::int64_t>>& rows) {
    std::string out = "row,column,value\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(rows[r][c]) + "\n";
    return out;
}

inline std::string recurrence_report_csv(const RecurrenceReport& report) {
    std::string out = "k,m,lhs,rhs,ok\n";
    for (const auto& c : report.checks)
        out += std::to_string(c.k) + "," + std::to_string(c.m) + "," + std::to_string(c.lhs) + "," +
               std::to_string(c.rhs) + "," + (c.ok ? "1" : "0") + "\n";
    return out;
}

}  // namespace chebclt

#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eqc.hpp"
#include "iterate.hpp"

namespace polyquant::io {

using json = nlohmann::json;

inline constexpr const char* version = "0.1.0";

struct config_error : error {
    using error::error;
};

struct SpectrumBlock {
    std::string parity = "both";
    std::string scheme = "alternating-immediate";
    std::vector<int> sequence;
    bool enforce_conjugation = false;
    int k_max = 48;
    int bs_terms = 13;
    int fit_levels = 80;  // oracle levels for fitted tail terms; 0 keeps closed-form terms
    double tol = 1e-9;
    int max_sweeps = 200;
    int continuation_steps = -1;
    bool via_dw = false;  // even levels from the odd chains through the bilinear identity
};

struct StabilityBlock {
    std::vector<double> v2_grid{-5, -2, 0, 1, 2, 3};
    int coefficient = 2;  // index j of the coefficient v_j the grid replaces
    std::vector<std::string> schemes{"full-cycle-refresh", "alternating-immediate", "conjugate-symmetrized"};
    std::string parity = "both";
    int k_max = 16;
    int max_sweeps = 200;
    bool linearize = true;
};

struct WavefunctionBlock {
    std::optional<cplx> lambda;  // empty: minus the ground level of the potential
    std::vector<double> a_grid{0, 0.5, 1.0, 1.5};
    std::string scheme = "custom-sequence";
    std::vector<int> sequence{0, 2, 3, 1};
    int k_max = 16;
    int bs_terms = 13;
    int fit_levels = 70;
    bool with_derivative = true;
};

struct ValidateBlock {
    std::vector<std::string> checks{"wronskian", "identity", "k_independence", "bs_fit"};
    int levels = 80;
    int bs_terms = 13;
    std::vector<cplx> lambda_grid;  // empty: default grid
};

struct OutputBlock {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
    bool timestamp = true;
};

struct RunConfig {
    Potential potential{4, {}};
    bool allow_unverified = false;
    SpectrumBlock spectrum;
    StabilityBlock stability;
    WavefunctionBlock wavefunction;
    ValidateBlock validate;
    OutputBlock output;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw config_error(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw config_error("unknown key '" + k + "' in " + where);
}

inline cplx to_complex(const json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    throw config_error(where + " must be a number or a [re, im] pair");
}

inline json from_complex(cplx z) { return json::array({z.real(), z.imag()}); }

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(where + "." + key + " has the wrong type");
    }
}

inline void check_parity(const std::string& s, const std::string& where) {
    if (s != "even" && s != "odd" && s != "both") throw config_error(where + " must be even, odd or both");
}

inline void check_scheme(const std::string& s, const std::string& where) {
    try {
        parse_scheme(s);
    } catch (const std::invalid_argument&) {
        throw config_error(where + ": unknown scheme '" + s + "'");
    }
}

}  // namespace detail

inline Potential parse_potential(const json& j) {
    detail::check_keys(j, "potential", {"N", "v"});
    if (!j.contains("N") || !j["N"].is_number_integer()) throw config_error("potential.N must be an integer");
    std::vector<cplx> v;
    if (j.contains("v")) {
        if (!j["v"].is_array()) throw config_error("potential.v must be a list");
        for (std::size_t i = 0; i < j["v"].size(); ++i) v.push_back(detail::to_complex(j["v"][i], "potential.v[" + std::to_string(i) + "]"));
    }
    try {
        return Potential(j["N"].get<int>(), v);
    } catch (const contract_error& e) {
        throw config_error(std::string("potential: ") + e.what());
    }
}

inline RunConfig parse_config(const json& j) {
    using detail::read;
    detail::check_keys(j, "config", {"potential", "allow_unverified", "spectrum", "stability", "wavefunction", "validate", "output"});
    RunConfig c;
    if (j.contains("potential")) c.potential = parse_potential(j["potential"]);
    read(j, "allow_unverified", c.allow_unverified, "config");
    if (j.contains("spectrum")) {
        const auto& s = j["spectrum"];
        detail::check_keys(s, "spectrum", {"parity", "scheme", "sequence", "enforce_conjugation", "k_max", "bs_terms", "fit_levels",
                                           "tol", "max_sweeps", "continuation_steps", "via_dw"});
        auto& b = c.spectrum;
        read(s, "parity", b.parity, "spectrum");
        read(s, "scheme", b.scheme, "spectrum");
        read(s, "sequence", b.sequence, "spectrum");
        read(s, "enforce_conjugation", b.enforce_conjugation, "spectrum");
        read(s, "k_max", b.k_max, "spectrum");
        read(s, "bs_terms", b.bs_terms, "spectrum");
        read(s, "fit_levels", b.fit_levels, "spectrum");
        read(s, "tol", b.tol, "spectrum");
        read(s, "max_sweeps", b.max_sweeps, "spectrum");
        read(s, "continuation_steps", b.continuation_steps, "spectrum");
        read(s, "via_dw", b.via_dw, "spectrum");
    }
    if (j.contains("stability")) {
        const auto& s = j["stability"];
        detail::check_keys(s, "stability", {"v2_grid", "coefficient", "schemes", "parity", "k_max", "max_sweeps", "linearize"});
        auto& b = c.stability;
        read(s, "v2_grid", b.v2_grid, "stability");
        read(s, "coefficient", b.coefficient, "stability");
        read(s, "schemes", b.schemes, "stability");
        read(s, "parity", b.parity, "stability");
        read(s, "k_max", b.k_max, "stability");
        read(s, "max_sweeps", b.max_sweeps, "stability");
        read(s, "linearize", b.linearize, "stability");
    }
    if (j.contains("wavefunction")) {
        const auto& s = j["wavefunction"];
        detail::check_keys(s, "wavefunction",
                           {"lambda", "a_grid", "scheme", "sequence", "k_max", "bs_terms", "fit_levels", "with_derivative"});
        auto& b = c.wavefunction;
        if (s.contains("lambda") && !s["lambda"].is_null()) b.lambda = detail::to_complex(s["lambda"], "wavefunction.lambda");
        read(s, "a_grid", b.a_grid, "wavefunction");
        read(s, "scheme", b.scheme, "wavefunction");
        read(s, "sequence", b.sequence, "wavefunction");
        read(s, "k_max", b.k_max, "wavefunction");
        read(s, "bs_terms", b.bs_terms, "wavefunction");
        read(s, "fit_levels", b.fit_levels, "wavefunction");
        read(s, "with_derivative", b.with_derivative, "wavefunction");
    }
    if (j.contains("validate")) {
        const auto& s = j["validate"];
        detail::check_keys(s, "validate", {"checks", "levels", "bs_terms", "lambda_grid"});
        auto& b = c.validate;
        read(s, "checks", b.checks, "validate");
        read(s, "levels", b.levels, "validate");
        read(s, "bs_terms", b.bs_terms, "validate");
        if (s.contains("lambda_grid")) {
            if (!s["lambda_grid"].is_array()) throw config_error("validate.lambda_grid must be a list");
            for (const auto& x : s["lambda_grid"]) b.lambda_grid.push_back(detail::to_complex(x, "validate.lambda_grid"));
        }
    }
    if (j.contains("output")) {
        const auto& s = j["output"];
        detail::check_keys(s, "output", {"directory", "formats", "timestamp"});
        read(s, "directory", c.output.directory, "output");
        read(s, "formats", c.output.formats, "output");
        read(s, "timestamp", c.output.timestamp, "output");
    }
    return c;
}

// Consistency of values that the parser cannot check key by key.
inline void check_config(const RunConfig& c) {
    detail::check_parity(c.spectrum.parity, "spectrum.parity");
    detail::check_parity(c.stability.parity, "stability.parity");
    detail::check_scheme(c.spectrum.scheme, "spectrum.scheme");
    detail::check_scheme(c.wavefunction.scheme, "wavefunction.scheme");
    for (const auto& s : c.stability.schemes) detail::check_scheme(s, "stability.schemes");
    for (int k : {c.spectrum.k_max, c.stability.k_max, c.wavefunction.k_max})
        if (k < 4) throw config_error("k_max must be >= 4");
    if (c.spectrum.bs_terms < 1 || c.wavefunction.bs_terms < 1 || c.validate.bs_terms < 1) throw config_error("bs_terms must be >= 1");
    if (c.spectrum.tol <= 0) throw config_error("spectrum.tol must be positive");
    if (c.stability.coefficient < 1 || c.stability.coefficient >= c.potential.degree())
        throw config_error("stability.coefficient must lie in [1, N)");
    for (const auto& f : c.output.formats)
        if (f != "csv" && f != "json") throw config_error("output.formats entries must be csv or json");
    for (const auto& k : c.validate.checks)
        if (k != "wronskian" && k != "identity" && k != "k_independence" && k != "bs_fit")
            throw config_error("unknown validate check '" + k + "'");
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

// Effective configuration, echoed into every artifact.
inline json to_json(const RunConfig& c) {
    json v = json::array();
    for (const auto& x : c.potential.coefficients()) v.push_back(detail::from_complex(x));
    json grid = json::array();
    for (const auto& x : c.validate.lambda_grid) grid.push_back(detail::from_complex(x));
    const auto& s = c.spectrum;
    const auto& t = c.stability;
    const auto& w = c.wavefunction;
    return {
        {"potential", {{"N", c.potential.degree()}, {"v", v}}},
        {"allow_unverified", c.allow_unverified},
        {"spectrum",
         {{"parity", s.parity}, {"scheme", s.scheme}, {"sequence", s.sequence}, {"enforce_conjugation", s.enforce_conjugation},
          {"k_max", s.k_max}, {"bs_terms", s.bs_terms}, {"fit_levels", s.fit_levels}, {"tol", s.tol}, {"max_sweeps", s.max_sweeps},
          {"continuation_steps", s.continuation_steps}, {"via_dw", s.via_dw}}},
        {"stability",
         {{"v2_grid", t.v2_grid}, {"coefficient", t.coefficient}, {"schemes", t.schemes}, {"parity", t.parity}, {"k_max", t.k_max},
          {"max_sweeps", t.max_sweeps}, {"linearize", t.linearize}}},
        {"wavefunction",
         {{"lambda", w.lambda ? detail::from_complex(*w.lambda) : json(nullptr)}, {"a_grid", w.a_grid}, {"scheme", w.scheme},
          {"sequence", w.sequence}, {"k_max", w.k_max}, {"bs_terms", w.bs_terms}, {"fit_levels", w.fit_levels},
          {"with_derivative", w.with_derivative}}},
        {"validate", {{"checks", c.validate.checks}, {"levels", c.validate.levels}, {"bs_terms", c.validate.bs_terms}, {"lambda_grid", grid}}},
        {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}, {"timestamp", c.output.timestamp}}},
    };
}

// ---- artifacts ----

struct Metadata {
    std::string command;
    json config;
    bool timestamp = true;
};

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// 17 significant digits, enough to round-trip a double
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_csv_header(std::ostream& os, const Metadata& m) {
    os << "# polyquant " << version << "\n";
    os << "# command: " << m.command << "\n";
    if (m.timestamp) os << "# timestamp: " << utc_timestamp() << "\n";
    os << "# config: " << m.config.dump() << "\n";
}

inline json metadata_json(const Metadata& m) {
    json j = {{"version", version}, {"command", m.command}, {"config", m.config}};
    if (m.timestamp) j["timestamp"] = utc_timestamp();
    return j;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw error("cannot write '" + path.string() + "'");
    return out;
}

inline void write_json(const std::filesystem::path& path, json body, const Metadata& m) {
    body["meta"] = metadata_json(m);
    auto out = open_output(path);
    out << body.dump(2) << "\n";
}

struct ChainRow {
    int ell = 0;
    Parity parity = Parity::neumann;
    int k = 0;  // sector-local index
    cplx E;
};

inline void write_chain_rows(std::ostream& os, const ChainSystem& s) {
    for (int l = 0; l < s.L(); ++l)
        for (int m = 0; m <= s.k_max(); ++m) {
            const cplx E = s.chain(l).level(m);
            os << l << "," << parity_name(s.parity) << "," << m << "," << num(E.real()) << "," << num(E.imag()) << "\n";
        }
}

inline void write_chain_csv(const std::filesystem::path& path, const std::vector<const ChainSystem*>& systems, const Metadata& m) {
    auto out = open_output(path);
    write_csv_header(out, m);
    out << "ell,parity,k,re_E,im_E\n";
    for (const auto* s : systems) write_chain_rows(out, *s);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    return f;
}

inline std::vector<ChainRow> read_chain_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read chain file '" + path + "'");
    std::vector<ChainRow> rows;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "ell,parity,k,re_E,im_E") throw config_error(path + ": unexpected chain header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 5) throw config_error(path + ":" + std::to_string(lineno) + ": expected 5 fields");
        try {
            rows.push_back({std::stoi(f[0]), parse_parity(f[1]), std::stoi(f[2]), {std::stod(f[3]), std::stod(f[4])}});
        } catch (const std::exception&) {
            throw config_error(path + ":" + std::to_string(lineno) + ": malformed row");
        }
    }
    if (!header) throw config_error(path + ": no chain header");
    return rows;
}

// Run configuration echoed in a chain file header, if there is one.
inline std::optional<RunConfig> read_chain_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read chain file '" + path + "'");
    const std::string tag = "# config: ";
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#')
        if (line.rfind(tag, 0) == 0) {
            try {
                return parse_config(json::parse(line.substr(tag.size())));
            } catch (const json::exception& e) {
                throw config_error(path + ": malformed config line: " + e.what());
            }
        }
    return std::nullopt;
}

// Levels of one (ell, parity) chain from rows, ordered by k; empty if absent.
inline std::vector<cplx> chain_levels(const std::vector<ChainRow>& rows, int ell, Parity p) {
    std::vector<std::pair<int, cplx>> sel;
    for (const auto& r : rows)
        if (r.ell == ell && r.parity == p) sel.emplace_back(r.k, r.E);
    std::sort(sel.begin(), sel.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<cplx> out;
    for (std::size_t i = 0; i < sel.size(); ++i) {
        if (sel[i].first != static_cast<int>(i)) throw config_error("chain " + std::to_string(ell) + " has a gap at k = " + std::to_string(i));
        out.push_back(sel[i].second);
    }
    return out;
}

inline json report_json(const ConvergenceReport& r) {
    return {{"converged", r.converged},
            {"sweeps_used", r.sweeps_used},
            {"contraction_ratio", r.contraction_ratio},
            {"stop_reason", r.stop_reason},
            {"continuation_steps", r.continuation_steps},
            {"deltas", r.deltas},
            {"stuck_levels", r.stuck_levels}};
}

}  // namespace polyquant::io

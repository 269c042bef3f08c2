#pragma once

// File formats. Scan tables are CSV with a two-line header:
//
//   # fourphoton v1 <scenario>
//   x,probability[,counts]
//
// Floating point is written with 17 significant digits so files parse back
// bit-exactly. Configs are strict JSON: every key is either consumed or
// rejected by name, and angles must carry an explicit "deg" or "rad" suffix.
// Fit reports are JSON objects with the fixed keys
// params/stderr/rss/r2/iterations/converged.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fourphoton/fit.hpp"
#include "fourphoton/scan.hpp"

namespace fourphoton {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

// ---------------------------------------------------------------------------
// scan-table CSV

inline void write_scan_csv(const ScanTable& table, std::ostream& os) {
    os << "# fourphoton v1 " << table.scenario << '\n';
    os << (table.has_counts() ? "x,probability,counts" : "x,probability") << '\n';
    for (size_t i = 0; i < table.rows(); ++i) {
        os << format_g17(table.x[i]) << ',' << format_g17(table.probability[i]);
        if (table.has_counts()) os << ',' << table.counts[i];
        os << '\n';
    }
}

inline std::string to_csv(const ScanTable& table) {
    std::ostringstream os;
    write_scan_csv(table, os);
    return os.str();
}

namespace detail {

inline double parse_strict_double(const std::string& field, size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("scan CSV line " + std::to_string(line_no) + ": bad number '" + field +
                         "'");
    return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace detail

inline ScanTable parse_scan_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# fourphoton v1 ", 0) != 0)
        throw ParseError("scan CSV: missing '# fourphoton v1 <scenario>' header");
    ScanTable table;
    table.scenario = line.substr(16);
    if (table.scenario.empty()) throw ParseError("scan CSV: empty scenario name");

    if (!std::getline(is, line)) throw ParseError("scan CSV: missing column header");
    bool with_counts = false;
    if (line == "x,probability,counts") {
        with_counts = true;
    } else if (line != "x,probability") {
        throw ParseError("scan CSV: unexpected column header '" + line + "'");
    }

    size_t line_no = 2;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != (with_counts ? 3u : 2u))
            throw ParseError("scan CSV line " + std::to_string(line_no) +
                             ": wrong number of fields");
        const double x = detail::parse_strict_double(fields[0], line_no);
        const double p = detail::parse_strict_double(fields[1], line_no);
        if (!table.x.empty() && !(x > table.x.back()))
            throw ParseError("scan CSV line " + std::to_string(line_no) +
                             ": x values must increase strictly");
        if (p < 0.0 || p > 1.0)
            throw ParseError("scan CSV line " + std::to_string(line_no) +
                             ": probability outside [0, 1]");
        table.x.push_back(x);
        table.probability.push_back(p);
        if (with_counts) {
            const std::string& c = fields[2];
            if (c.empty() || c.find_first_not_of("0123456789") != std::string::npos)
                throw ParseError("scan CSV line " + std::to_string(line_no) +
                                 ": counts must be a non-negative integer");
            table.counts.push_back(std::stoull(c));
        }
    }
    return table;
}

inline void save_scan_csv(const ScanTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open '" + path + "' for writing");
    write_scan_csv(table, os);
}

inline ScanTable load_scan_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open '" + path + "'");
    return parse_scan_csv(is);
}

// ---------------------------------------------------------------------------
// strict JSON configs

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

namespace detail {

inline void require_object(const Json& node, const std::string& where) {
    if (!node.is_object()) throw ParseError("config: '" + where + "' must be an object");
}

inline void check_keys(const Json& obj, const std::string& where,
                       const std::vector<std::string>& required,
                       const std::vector<std::string>& optional = {}) {
    require_object(obj, where);
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        const bool known =
            std::find(required.begin(), required.end(), key) != required.end() ||
            std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known)
            throw ParseError("config: unknown key '" + (where.empty() ? key : where + "." + key) +
                             "'");
    }
    for (const auto& key : required)
        if (!obj.contains(key))
            throw ParseError("config: missing key '" +
                             (where.empty() ? key : where + "." + key) + "'");
}

// "13.7 deg" or "0.25 rad" -> radians
inline double parse_angle_rad(const Json& node, const std::string& where) {
    if (!node.is_string())
        throw ParseError("config: '" + where + "' must be a string with a deg/rad suffix");
    std::string text = node.get<std::string>();
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) throw ParseError("config: '" + where + "': no number in '" + text + "'");
    std::string unit(end);
    unit.erase(0, unit.find_first_not_of(" \t"));
    unit.erase(unit.find_last_not_of(" \t") + 1);
    if (unit == "deg") return value * kDegToRad;
    if (unit == "rad") return value;
    throw ParseError("config: '" + where + "': unit must be 'deg' or 'rad', got '" + unit + "'");
}

inline double parse_number(const Json& node, const std::string& where) {
    if (!node.is_number()) throw ParseError("config: '" + where + "' must be a number");
    return node.get<double>();
}

inline SourceSpec parse_source(const Json& node) {
    check_keys(node, "source", {"type"}, {"lambdas", "e_over_a"});
    const std::string type = node.at("type").is_string() ? node.at("type").get<std::string>()
                                                         : throw ParseError(
                                                               "config: 'source.type' must be a "
                                                               "string");
    SourceSpec spec;
    if (type == "ideal") {
        check_keys(node, "source", {"type"});
        spec.kind = SourceSpec::Kind::ideal;
    } else if (type == "schmidt") {
        check_keys(node, "source", {"type", "lambdas"});
        if (!node.at("lambdas").is_array() || node.at("lambdas").empty())
            throw ParseError("config: 'source.lambdas' must be a non-empty array");
        double sum2 = 0.0;
        for (const auto& v : node.at("lambdas")) {
            const double l = parse_number(v, "source.lambdas[]");
            if (l < 0.0) throw ParseError("config: 'source.lambdas' must be non-negative");
            spec.lambdas.push_back(l);
            sum2 += l * l;
        }
        if (sum2 <= 0.0) throw ParseError("config: 'source.lambdas' must not be all zero");
        // weights are normalized here so configs can carry round values
        for (double& l : spec.lambdas) l /= std::sqrt(sum2);
        spec.kind = SourceSpec::Kind::schmidt;
        SchmidtSpec{spec.lambdas}.validate();
    } else if (type == "effective") {
        check_keys(node, "source", {"type", "e_over_a"});
        spec.kind = SourceSpec::Kind::effective;
        spec.e_over_a = parse_number(node.at("e_over_a"), "source.e_over_a");
        schmidt_from_e_over_a(spec.e_over_a);  // range check
    } else {
        throw ParseError("config: 'source.type' must be ideal|schmidt|effective, got '" + type +
                         "'");
    }
    return spec;
}

inline SweepVariable parse_variable(const Json& node) {
    const std::string name =
        node.is_string() ? node.get<std::string>()
                         : throw ParseError("config: 'sweep.variable' must be a string");
    if (name == "delay") return SweepVariable::delay;
    if (name == "theta1") return SweepVariable::theta1;
    if (name == "theta2") return SweepVariable::theta2;
    if (name == "phi") return SweepVariable::phi;
    throw ParseError("config: 'sweep.variable' must be delay|theta1|theta2|phi, got '" + name +
                     "'");
}

}  // namespace detail

// Full scan config. Sweep bounds are angles (with unit suffix) for
// theta1/theta2/phi sweeps and plain numbers (µm) for delay sweeps; the x
// column of the resulting table uses degrees for wave-plate sweeps, radians
// for phase sweeps and µm for delay sweeps.
inline ScanConfig parse_scan_config(const Json& root) {
    detail::check_keys(root, "", {"source", "circuit", "sweep"}, {"delay"});
    ScanConfig cfg;
    cfg.source = detail::parse_source(root.at("source"));

    const Json& circuit = root.at("circuit");
    detail::check_keys(circuit, "circuit", {"theta1", "theta2", "phi"});
    cfg.theta1 = detail::parse_angle_rad(circuit.at("theta1"), "circuit.theta1");
    cfg.theta2 = detail::parse_angle_rad(circuit.at("theta2"), "circuit.theta2");
    cfg.phi = detail::parse_angle_rad(circuit.at("phi"), "circuit.phi");

    const Json& sweep = root.at("sweep");
    detail::check_keys(sweep, "sweep", {"variable", "from", "to", "steps"});
    cfg.variable = detail::parse_variable(sweep.at("variable"));
    switch (cfg.variable) {
        case SweepVariable::delay:
            cfg.sweep_from = detail::parse_number(sweep.at("from"), "sweep.from");
            cfg.sweep_to = detail::parse_number(sweep.at("to"), "sweep.to");
            break;
        case SweepVariable::theta1:
        case SweepVariable::theta2:
            cfg.sweep_from = detail::parse_angle_rad(sweep.at("from"), "sweep.from") / kDegToRad;
            cfg.sweep_to = detail::parse_angle_rad(sweep.at("to"), "sweep.to") / kDegToRad;
            break;
        case SweepVariable::phi:
            cfg.sweep_from = detail::parse_angle_rad(sweep.at("from"), "sweep.from");
            cfg.sweep_to = detail::parse_angle_rad(sweep.at("to"), "sweep.to");
            break;
    }
    if (!sweep.at("steps").is_number_integer())
        throw ParseError("config: 'sweep.steps' must be an integer");
    cfg.steps = sweep.at("steps").get<int>();

    if (root.contains("delay")) {
        const Json& delay = root.at("delay");
        detail::check_keys(delay, "delay", {}, {"delta_um", "coherence_length_um"});
        if (delay.contains("delta_um"))
            cfg.delay.delta_um = detail::parse_number(delay.at("delta_um"), "delay.delta_um");
        if (delay.contains("coherence_length_um"))
            cfg.delay.coherence_length_um =
                detail::parse_number(delay.at("coherence_length_um"), "delay.coherence_length_um");
    }
    cfg.validate();
    return cfg;
}

struct BalanceConfig {
    SourceSpec source;
    double tolerance = 0.02;
};

inline BalanceConfig parse_balance_config(const Json& root) {
    detail::check_keys(root, "", {"source"}, {"tolerance"});
    BalanceConfig cfg;
    cfg.source = detail::parse_source(root.at("source"));
    if (root.contains("tolerance")) {
        cfg.tolerance = detail::parse_number(root.at("tolerance"), "tolerance");
        if (cfg.tolerance < 0.0) throw ParseError("config: 'tolerance' must be >= 0");
    }
    return cfg;
}

inline Json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ParseError("config '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// reports

inline OrderedJson fit_report_to_json(const FitReport& report) {
    OrderedJson params = OrderedJson::object();
    OrderedJson stderrs = OrderedJson::object();
    for (size_t i = 0; i < report.param_names.size(); ++i) {
        params[report.param_names[i]] = report.params[i];
        stderrs[report.param_names[i]] = report.stderrs[i];
    }
    OrderedJson out;
    out["params"] = params;
    out["stderr"] = stderrs;
    out["rss"] = report.rss;
    out["r2"] = report.r2;
    out["iterations"] = report.iterations;
    out["converged"] = report.converged;
    return out;
}

inline OrderedJson balance_result_to_json(const BalanceResult& result) {
    OrderedJson out;
    out["theta1_rad"] = result.theta1;
    out["theta1_deg"] = result.theta1 / kDegToRad;
    out["v2"] = result.v2;
    out["v4"] = result.v4;
    out["balanced"] = result.balanced;
    out["fit"] = fit_report_to_json(result.fit);
    return out;
}

inline void save_text(const std::string& text, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open '" + path + "' for writing");
    os << text;
}

}  // namespace fourphoton

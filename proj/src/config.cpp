#include "qcurv/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace qcurv {

namespace {

using TomlValue = std::variant<double, bool, std::string, std::vector<double>>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

[[noreturn]] void parse_fail(int line, const std::string& what) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Drops a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

double parse_number(const std::string& tok, int line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || strip(std::string(end)) != "")
        parse_fail(line, "expected a number, got '" + tok + "'");
    return v;
}

TomlValue parse_value(const std::string& raw, int line) {
    const std::string tok = strip(raw);
    if (tok.empty()) parse_fail(line, "missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"') parse_fail(line, "unterminated string");
        return tok.substr(1, tok.size() - 2);
    }
    if (tok.front() == '[') {
        if (tok.back() != ']') parse_fail(line, "unterminated array");
        std::vector<double> arr;
        std::string inner = tok.substr(1, tok.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (item.empty()) parse_fail(line, "empty array element");
            arr.push_back(parse_number(item, line));
        }
        return arr;
    }
    return parse_number(tok, line);
}

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') parse_fail(lineno, "unterminated section header");
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty()) parse_fail(lineno, "empty section name");
            table[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) parse_fail(lineno, "expected key = value");
        const std::string key = strip(line.substr(0, eq));
        if (key.empty()) parse_fail(lineno, "empty key");
        if (table[section].count(key)) parse_fail(lineno, "duplicate key '" + key + "'");
        table[section][key] = parse_value(line.substr(eq + 1), lineno);
    }
    return table;
}

class Reader {
public:
    explicit Reader(const TomlTable& t) : t_(t) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = t_.find(sec);
        return s != t_.end() && s->second.count(key) > 0;
    }
    template <class T>
    T get(const std::string& sec, const std::string& key) const {
        auto s = t_.find(sec);
        if (s == t_.end() || !s->second.count(key))
            throw std::invalid_argument("config: missing required key [" + sec + "] " + key);
        const TomlValue& v = s->second.at(key);
        if (!std::holds_alternative<T>(v))
            throw std::invalid_argument("config: wrong type for [" + sec + "] " + key);
        return std::get<T>(v);
    }
    template <class T>
    void fetch(const std::string& sec, const std::string& key, T& out) const {
        if (has(sec, key)) out = get<T>(sec, key);
    }
    void fetch_int(const std::string& sec, const std::string& key, int& out) const {
        if (!has(sec, key)) return;
        const double v = get<double>(sec, key);
        if (v != std::floor(v)) throw std::invalid_argument("config: [" + sec + "] " + key +
                                                            " must be an integer");
        out = static_cast<int>(v);
    }

private:
    const TomlTable& t_;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out + "]";
}

} // namespace

RunConfig RunConfig::parse_string(const std::string& text) {
    const TomlTable table = parse_toml(text);
    const Reader rd(table);
    RunConfig c;

    rd.fetch_int("problem", "n", c.n);
    if (c.n == 0) throw std::invalid_argument("config: [problem] n is required");
    if (rd.has("problem", "kappa")) c.kappa = rd.get<double>("problem", "kappa");
    if (rd.has("problem", "kappa_factor"))
        c.kappa_factor = rd.get<double>("problem", "kappa_factor");
    if (c.kappa && c.kappa_factor)
        throw std::invalid_argument("config: give kappa or kappa_factor, not both");
    rd.fetch<std::string>("problem", "variant", c.variant);
    if (c.variant.empty()) throw std::invalid_argument("config: [problem] variant is required");
    if (c.variant != "thm1" && c.variant != "thm2")
        throw std::invalid_argument("config: variant must be \"thm1\" or \"thm2\"");
    rd.fetch<std::string>("problem", "mode", c.mode);
    if (c.mode != "solve" && c.mode != "probe")
        throw std::invalid_argument("config: mode must be \"solve\" or \"probe\"");
    rd.fetch<std::string>("problem", "q_type", c.q_type);
    if (c.q_type.empty()) throw std::invalid_argument("config: [problem] q_type is required");
    if (c.q_type != "constant" && c.q_type != "gaussian" && c.q_type != "quartic" &&
        c.q_type != "table")
        throw std::invalid_argument("config: unknown q_type '" + c.q_type + "'");
    rd.fetch<double>("problem", "q_value", c.q_value);
    rd.fetch<double>("problem", "q_delta", c.q_delta);
    rd.fetch<double>("problem", "q_lambda", c.q_lambda);
    rd.fetch<std::string>("problem", "q_table", c.q_table);
    rd.fetch<std::vector<double>>("problem", "p_coeffs", c.p_coeffs);

    if (c.mode == "solve" && !c.kappa && !c.kappa_factor)
        throw std::invalid_argument("config: [problem] kappa or kappa_factor is required");

    rd.fetch_int("grid", "cells", c.cells);
    rd.fetch<double>("grid", "r_max", c.r_max);
    rd.fetch<double>("grid", "grading", c.grading);

    rd.fetch<double>("solver", "theta", c.theta);
    rd.fetch<double>("solver", "tol", c.tol);
    rd.fetch_int("solver", "max_iter", c.max_iter);
    rd.fetch_int("solver", "continuation_steps", c.continuation_steps);
    rd.fetch<double>("solver", "blowup_sup", c.blowup_sup);
    rd.fetch<double>("solver", "t", c.t);

    rd.fetch<std::vector<double>>("probe", "kappa_list", c.kappa_list);
    rd.fetch<std::vector<double>>("probe", "kappa_factors", c.kappa_factors);
    return c;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

std::string RunConfig::to_toml() const {
    std::string s;
    s += "[problem]\n";
    s += "n = " + std::to_string(n) + "\n";
    if (kappa) s += "kappa = " + fmt(*kappa) + "\n";
    if (kappa_factor) s += "kappa_factor = " + fmt(*kappa_factor) + "\n";
    s += "variant = \"" + variant + "\"\n";
    s += "mode = \"" + mode + "\"\n";
    s += "q_type = \"" + q_type + "\"\n";
    s += "q_value = " + fmt(q_value) + "\n";
    s += "q_delta = " + fmt(q_delta) + "\n";
    s += "q_lambda = " + fmt(q_lambda) + "\n";
    if (!q_table.empty()) s += "q_table = \"" + q_table + "\"\n";
    s += "p_coeffs = " + fmt(p_coeffs) + "\n";
    s += "\n[grid]\n";
    s += "cells = " + std::to_string(cells) + "\n";
    s += "r_max = " + fmt(r_max) + "\n";
    s += "grading = " + fmt(grading) + "\n";
    s += "\n[solver]\n";
    s += "theta = " + fmt(theta) + "\n";
    s += "tol = " + fmt(tol) + "\n";
    s += "max_iter = " + std::to_string(max_iter) + "\n";
    s += "continuation_steps = " + std::to_string(continuation_steps) + "\n";
    s += "blowup_sup = " + fmt(blowup_sup) + "\n";
    s += "t = " + fmt(t) + "\n";
    s += "\n[probe]\n";
    s += "kappa_list = " + fmt(kappa_list) + "\n";
    s += "kappa_factors = " + fmt(kappa_factors) + "\n";
    return s;
}

double RunConfig::resolved_kappa() const {
    if (kappa) return *kappa;
    if (kappa_factor) return *kappa_factor * lambda1(n);
    throw std::invalid_argument("config: no kappa given");
}

std::vector<double> RunConfig::resolved_sweep() const {
    std::vector<double> out = kappa_list;
    for (double f : kappa_factors) out.push_back(f * lambda1(n));
    return out;
}

QProfile RunConfig::q_profile() const {
    if (q_type == "constant") return QProfile::constant(q_value);
    if (q_type == "gaussian") return QProfile::gaussian(q_delta, q_lambda);
    if (q_type == "quartic") return QProfile::quartic(q_delta, q_lambda);
    if (q_type == "table") {
        std::ifstream is(q_table);
        if (!is) throw std::invalid_argument("config: cannot open q_table " + q_table);
        std::vector<double> rs, qs;
        std::string line;
        while (std::getline(is, line)) {
            line = strip(line);
            if (line.empty() || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
            const std::size_t comma = line.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("config: q_table rows must be r,value");
            rs.push_back(std::stod(line.substr(0, comma)));
            qs.push_back(std::stod(line.substr(comma + 1)));
        }
        return QProfile::tabulated(std::move(rs), std::move(qs));
    }
    throw std::invalid_argument("config: unknown q_type");
}

ProblemSpec RunConfig::problem() const {
    ProblemSpec spec;
    spec.n = n;
    spec.kappa = resolved_kappa();
    spec.Q = q_profile();
    spec.P_coeffs = p_coeffs;
    spec.variant = (variant == "thm1") ? Variant::Thm1 : Variant::Thm2;
    return spec;
}

SolverConfig RunConfig::solver() const {
    SolverConfig cfg;
    cfg.theta = theta;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.continuation_steps = continuation_steps;
    cfg.blowup_sup = blowup_sup;
    cfg.t = t;
    return cfg;
}

} // namespace qcurv

#include "homog/config.hpp"

#include "homog/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace homog {

namespace {

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<Entry> parse_ini(const std::string& text, const std::string& origin) {
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto comment = line.find_first_of(";#");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside a section");
        entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    }
    return entries;
}

// Values may be plain numbers, "inf", or integer fractions like 1/8.
double parse_double(const Entry& e) {
    const std::string& v = e.value;
    try {
        if (v == "inf") return std::numeric_limits<double>::infinity();
        auto slash = v.find('/');
        if (slash != std::string::npos) {
            double num = std::stod(trim(v.substr(0, slash)));
            double den = std::stod(trim(v.substr(slash + 1)));
            if (den == 0) throw std::invalid_argument("zero denominator");
            return num / den;
        }
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (trim(v.substr(used)) != "")
            throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception& ex) {
        throw ConfigError("line " + std::to_string(e.line) + ": bad number for [" + e.section
                          + "] " + e.key + " = '" + v + "' (" + ex.what() + ")");
    }
}

int parse_int(const Entry& e) {
    double d = parse_double(e);
    auto i = static_cast<long long>(std::llround(d));
    if (std::abs(d - i) > 1e-9)
        throw ConfigError("line " + std::to_string(e.line) + ": expected integer for ["
                          + e.section + "] " + e.key);
    return static_cast<int>(i);
}

bool parse_bool(const Entry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError("line " + std::to_string(e.line) + ": expected bool for [" + e.section
                      + "] " + e.key);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream in(v);
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::vector<double> parse_double_list(const Entry& e) {
    std::vector<double> out;
    for (const auto& tok : split_list(e.value)) {
        Entry sub{e.section, e.key, tok, e.line};
        out.push_back(parse_double(sub));
    }
    return out;
}

std::vector<double> parse_args(const std::string& body, const std::string& what) {
    std::vector<double> args;
    for (const auto& tok : split_list(body)) {
        try {
            args.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(what + ": bad numeric argument '" + tok + "'");
        }
    }
    return args;
}

int infer_nodal_m(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open nodal field CSV: " + path);
    int count = 0;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) ++count;
    if (dim == 1) return count;
    auto m = static_cast<int>(std::llround(std::sqrt(double(count))));
    if (m * m != count)
        throw IoError("nodal field CSV " + path + " has " + std::to_string(count)
                      + " rows, not a square count for d = 2");
    return m;
}

} // namespace

PeriodicField parse_field(const std::string& text, int dim) {
    auto open = text.find('(');
    if (open != std::string::npos && text.back() == ')') {
        std::string name = trim(text.substr(0, open));
        std::string body = text.substr(open + 1, text.size() - open - 2);
        if (name == "const") {
            auto args = parse_args(body, "const");
            if (args.size() != 1) throw ConfigError("const(c) takes one argument");
            return PeriodicField::constant(dim, args[0]);
        }
        if (name == "trig") {
            auto args = parse_args(body, "trig");
            if (args.size() != 3) throw ConfigError("trig(A,B,k) takes three arguments");
            return PeriodicField::trig(dim, args[0], args[1], static_cast<int>(args[2]));
        }
        if (name == "prod_trig") {
            auto args = parse_args(body, "prod_trig");
            if (args.size() != 3) throw ConfigError("prod_trig(A,B,k) takes three arguments");
            return PeriodicField::prod_trig(dim, args[0], args[1], static_cast<int>(args[2]));
        }
        if (name == "piecewise") {
            auto args = parse_args(body, "piecewise");
            return PeriodicField::piecewise(dim, std::move(args));
        }
        // fall through: expressions may contain calls like sin(...)
    }
    if (text.rfind("csv:", 0) == 0) {
        std::string path = trim(text.substr(4));
        return PeriodicField::from_csv(dim, infer_nodal_m(path, dim), path);
    }
    return PeriodicField::expression(dim, text);
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path, overrides);
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin,
                           const std::vector<std::string>& overrides) {
    auto entries = parse_ini(text, origin);

    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("bad override '" + ov + "' (want section.key=value)");
        Entry e{trim(ov.substr(0, dot)), trim(ov.substr(dot + 1, eq - dot - 1)),
                trim(ov.substr(eq + 1)), 0};
        bool replaced = false;
        for (auto& existing : entries)
            if (existing.section == e.section && existing.key == e.key) {
                existing.value = e.value;
                replaced = true;
            }
        if (!replaced) entries.push_back(e);
    }

    RunConfig cfg;
    for (const auto& e : entries) {
        auto unknown = [&]() {
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key [" + e.section
                              + "] " + e.key);
        };
        if (e.section == "fields") {
            if (e.key == "a") cfg.a_text = e.value;
            else if (e.key == "V") cfg.v_text = e.value;
            else if (e.key == "mean_tol") cfg.mean_tol = parse_double(e);
            else if (e.key == "a_matrix_csv") cfg.a_matrix_csv = e.value;
            else if (e.key == "a_matrix_m") cfg.a_matrix_m = parse_int(e);
            else unknown();
        } else if (e.section == "problem") {
            if (e.key == "d") cfg.d = parse_int(e);
            else if (e.key == "p") cfg.p = parse_double(e);
            else if (e.key == "f") cfg.f_text = e.value;
            else if (e.key == "form") cfg.form = e.value;
            else unknown();
        } else if (e.section == "grids") {
            if (e.key == "n") cfg.n = parse_int(e);
            else if (e.key == "m") cfg.m = parse_int(e);
            else if (e.key == "eps") cfg.eps = parse_double(e);
            else if (e.key == "eps_list") cfg.eps_list = parse_double_list(e);
            else if (e.key == "cells_per_period") cfg.cells_per_period = parse_int(e);
            else if (e.key == "corrector_m") cfg.corrector_m = parse_int(e);
            else unknown();
        } else if (e.section == "solver") {
            if (e.key == "tol") cfg.solver.tol = parse_double(e);
            else if (e.key == "max_iterations") cfg.solver.max_iterations = parse_int(e);
            else if (e.key == "backtrack_factor") cfg.solver.backtrack_factor = parse_double(e);
            else if (e.key == "min_step") cfg.solver.min_step = parse_double(e);
            else if (e.key == "picard_after") cfg.solver.picard_after = parse_int(e);
            else if (e.key == "delta_start") cfg.solver.delta_start = parse_double(e);
            else if (e.key == "delta_floor") cfg.solver.delta_floor = parse_double(e);
            else if (e.key == "delta_factor") cfg.solver.delta_factor = parse_double(e);
            else if (e.key == "macro_tol") cfg.macro.tol = parse_double(e);
            else if (e.key == "macro_max_picard") cfg.macro.max_picard = parse_int(e);
            else if (e.key == "macro_relax") cfg.macro.relax = parse_double(e);
            else if (e.key == "macro_newton") cfg.macro.newton = parse_bool(e);
            else if (e.key == "macro_newton_switch") cfg.macro.newton_switch = parse_double(e);
            else if (e.key == "macro_gauss_points") cfg.macro.gauss_points = parse_int(e);
            else if (e.key == "quantize") cfg.quantize = parse_double(e);
            else unknown();
        } else if (e.section == "study") {
            if (e.key == "studies") cfg.studies = split_list(e.value);
            else if (e.key == "phi1") cfg.phi1 = e.value;
            else if (e.key == "phi2") cfg.phi2 = e.value;
            else if (e.key == "psi") cfg.psi = split_list(e.value);
            else if (e.key == "alpha") cfg.alpha = parse_double(e);
            else if (e.key == "require_monotone") cfg.require_monotone = parse_bool(e);
            else if (e.key == "final_gap") cfg.final_gap = parse_double(e);
            else if (e.key == "quad_stability_frac") cfg.quad_stability_frac = parse_double(e);
            else if (e.key == "ratio_bound") cfg.ratio_bound = parse_double(e);
            else if (e.key == "subcells_per_period") cfg.subcells_per_period = parse_int(e);
            else if (e.key == "ref_refinement") cfg.ref_refinement = parse_int(e);
            else if (e.key == "ref_cell_m") cfg.ref_cell_m = parse_int(e);
            else if (e.key == "limit_elements") cfg.limit_elements = parse_int(e);
            else if (e.key == "centring_tol") cfg.centring_tol = parse_double(e);
            else if (e.key == "ansatz") cfg.ansatz = e.value;
            else if (e.key == "thetas") cfg.thetas = parse_double_list(e);
            else if (e.key == "xis") cfg.xis = parse_double_list(e);
            else if (e.key == "growth_factor") cfg.growth_factor = parse_double(e);
            else unknown();
        } else if (e.section == "output") {
            if (e.key == "dir") cfg.out_dir = e.value;
            else if (e.key == "formats") cfg.formats = split_list(e.value);
            else unknown();
        } else {
            throw ConfigError("line " + std::to_string(e.line) + ": unknown section ["
                              + e.section + "]");
        }
    }

    // Cross-field validation.
    if (cfg.d != 1 && cfg.d != 2) throw ConfigError("[problem] d must be 1 or 2");
    if (!(cfg.p >= 2.0)) throw ConfigError("[problem] p must be >= 2");
    if (cfg.form != "standard" && cfg.form != "ibp")
        throw ConfigError("[problem] form must be standard or ibp");
    if (cfg.ansatz != "split" && cfg.ansatz != "paper")
        throw ConfigError("[study] ansatz must be split or paper");
    for (std::size_t k = 0; k + 1 < cfg.eps_list.size(); ++k)
        if (!(cfg.eps_list[k + 1] < cfg.eps_list[k]))
            throw ConfigError("[grids] eps_list must be strictly decreasing");
    for (const auto& s : cfg.studies)
        if (s != "theorem71" && s != "scaled_pairing" && s != "lemma61" && s != "apriori")
            throw ConfigError("[study] unknown study '" + s + "'");
    for (const auto& fmt : cfg.formats)
        if (fmt != "csv" && fmt != "json")
            throw ConfigError("[output] formats must be csv and/or json");
    return cfg;
}

nlohmann::ordered_json RunConfig::resolved() const {
    nlohmann::ordered_json j;
    j["fields"] = {{"a", a_text},
                   {"V", v_text},
                   {"mean_tol", mean_tol},
                   {"a_matrix_csv", a_matrix_csv},
                   {"a_matrix_m", a_matrix_m}};
    j["problem"] = {{"d", d}, {"p", p}, {"f", f_text}, {"form", form}};
    j["grids"] = {{"n", n},
                  {"m", m},
                  {"eps", eps},
                  {"eps_list", eps_list},
                  {"cells_per_period", cells_per_period},
                  {"corrector_m", corrector_m}};
    j["solver"] = {{"tol", solver.tol},
                   {"max_iterations", solver.max_iterations},
                   {"backtrack_factor", solver.backtrack_factor},
                   {"min_step", solver.min_step},
                   {"picard_after", solver.picard_after},
                   {"delta_start", solver.delta_start},
                   {"delta_floor", solver.delta_floor},
                   {"delta_factor", solver.delta_factor},
                   {"macro_tol", macro.tol},
                   {"macro_max_picard", macro.max_picard},
                   {"macro_relax", macro.relax},
                   {"macro_newton", macro.newton},
                   {"macro_newton_switch", macro.newton_switch},
                   {"macro_gauss_points", macro.gauss_points},
                   {"quantize", quantize}};
    j["study"] = {{"studies", studies},
                  {"phi1", phi1},
                  {"phi2", phi2},
                  {"psi", psi},
                  {"alpha", alpha},
                  {"require_monotone", require_monotone},
                  {"final_gap", final_gap == std::numeric_limits<double>::infinity()
                                    ? "inf"
                                    : nlohmann::ordered_json(final_gap)},
                  {"quad_stability_frac", quad_stability_frac},
                  {"ratio_bound", ratio_bound},
                  {"subcells_per_period", subcells_per_period},
                  {"ref_refinement", ref_refinement},
                  {"ref_cell_m", ref_cell_m},
                  {"limit_elements", limit_elements},
                  {"centring_tol", centring_tol},
                  {"ansatz", ansatz},
                  {"thetas", thetas},
                  {"xis", xis},
                  {"growth_factor", growth_factor}};
    j["output"] = {{"dir", out_dir}, {"formats", formats}};
    return j;
}

PeriodicField RunConfig::make_a() const { return parse_field(a_text, d); }

PotentialField RunConfig::make_v() const {
    return PotentialField(parse_field(v_text, d), mean_tol);
}

SpatialFn RunConfig::make_f() const {
    auto open = f_text.find('(');
    if (open != std::string::npos && f_text.rfind("const", 0) == 0 && f_text.back() == ')') {
        auto args = parse_args(f_text.substr(open + 1, f_text.size() - open - 2), "const");
        if (args.size() != 1) throw ConfigError("const(c) takes one argument");
        double c = args[0];
        return [c](std::array<double, 2>) { return c; };
    }
    Expression expr = Expression::parse(f_text, Expression::kMacro);
    return [expr](std::array<double, 2> x) { return expr.eval(x.data(), nullptr); };
}

StudySpec RunConfig::study_spec() const {
    if (d != 1) throw ConfigError("convergence studies require d = 1");
    StudySpec spec;
    spec.a = make_a();
    spec.V = make_v();
    spec.f = make_f();
    spec.f_description = f_text;
    spec.p = p;
    spec.eps_list = eps_list;
    spec.cells_per_period = cells_per_period;
    spec.cell_m = m;
    spec.ref_refinement = ref_refinement;
    spec.ref_cell_m = ref_cell_m;
    spec.limit_elements = limit_elements;
    spec.phi1 = phi1;
    spec.phi2 = phi2;
    spec.psi = psi;
    spec.centring_tol = centring_tol;
    spec.alpha = alpha;
    spec.require_monotone = require_monotone;
    spec.final_gap = final_gap;
    spec.quad_stability_frac = quad_stability_frac;
    spec.ratio_bound = ratio_bound;
    spec.subcells_per_period = subcells_per_period;
    spec.solver = solver;
    spec.macro = macro;
    spec.quantize = quantize;
    return spec;
}

} // namespace homog

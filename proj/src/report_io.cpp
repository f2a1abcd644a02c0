#include "homog/report_io.hpp"

#include "homog/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace homog {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": "
                              + ec.message());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

std::string series_csv(const ReportSeries& series) {
    std::string out = "eps,value,limit,gap,quad_stability,pass\n";
    for (const auto& row : series.rows) {
        out += format_double(row.eps);
        out += ',';
        out += format_double(row.value);
        out += ',';
        out += format_double(row.limit);
        out += ',';
        out += format_double(row.gap);
        out += ',';
        out += format_double(row.quad_stability);
        out += ',';
        out += row.pass ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string scan_csv(const AprioriScan& scan) {
    std::string out = "eps,Lp_norm,W1p_seminorm,iterations,residual\n";
    for (const auto& row : scan.rows) {
        out += format_double(row.eps);
        out += ',';
        out += row.ok ? format_double(row.lp_norm) : "nan";
        out += ',';
        out += row.ok ? format_double(row.w1p_seminorm) : "nan";
        out += ',';
        out += std::to_string(row.iterations);
        out += ',';
        out += row.ok ? format_double(row.residual) : "nan";
        out += '\n';
    }
    return out;
}

std::string flux_table_csv(const std::vector<CellSolution>& solutions, int dim) {
    std::string out = "theta";
    for (int k = 0; k < dim; ++k) out += ",xi" + std::to_string(k + 1);
    for (int k = 0; k < dim; ++k) out += ",q" + std::to_string(k + 1);
    out += ",v,residual\n";
    for (const auto& s : solutions) {
        out += format_double(s.theta);
        for (int k = 0; k < dim; ++k) out += "," + format_double(s.xi[static_cast<std::size_t>(k)]);
        for (int k = 0; k < dim; ++k) out += "," + format_double(s.q[static_cast<std::size_t>(k)]);
        out += "," + format_double(s.v);
        out += "," + format_double(s.residual);
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json to_json(const SolveStats& stats) {
    return nlohmann::ordered_json{{"iterations", stats.iterations},
                                  {"final_residual", stats.final_residual},
                                  {"damping_events", stats.damping_events},
                                  {"continuation_stages", stats.continuation_stages},
                                  {"picard_steps", stats.picard_steps},
                                  {"delta_bumps", stats.delta_bumps},
                                  {"converged", stats.converged}};
}

nlohmann::ordered_json to_json(const ConvergenceReport& report) {
    nlohmann::ordered_json j;
    j["study"] = report.study;
    j["pass"] = report.pass;
    j["metadata"] = report.metadata;
    nlohmann::ordered_json series = nlohmann::ordered_json::array();
    for (const auto& s : report.series) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& r : s.rows)
            rows.push_back({{"eps", r.eps},
                            {"value", r.value},
                            {"limit", r.limit},
                            {"gap", r.gap},
                            {"quad_stability", r.quad_stability},
                            {"pass", r.pass}});
        series.push_back({{"name", s.name},
                          {"decreasing", s.decreasing},
                          {"last_over_first", s.last_over_first},
                          {"pass", s.pass},
                          {"rows", rows}});
    }
    j["series"] = series;
    nlohmann::ordered_json solves = nlohmann::ordered_json::array();
    for (const auto& rec : report.solves) {
        nlohmann::ordered_json r{{"label", rec.label}, {"ok", rec.ok}};
        r["stats"] = to_json(rec.stats);
        if (!rec.error.empty()) r["error"] = rec.error;
        solves.push_back(r);
    }
    j["solves"] = solves;
    return j;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> write_report(const ConvergenceReport& report,
                                      const nlohmann::ordered_json& resolved_config,
                                      const std::string& dir,
                                      const std::vector<std::string>& formats) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    bool csv = false, json = false;
    for (const auto& f : formats) {
        csv = csv || f == "csv";
        json = json || f == "json";
    }
    if (csv)
        for (const auto& s : report.series) {
            std::string path = (fs::path(dir) / (report.study + "_" + s.name + ".csv")).string();
            write_file_atomic(path, series_csv(s));
            written.push_back(path);
        }
    if (json) {
        nlohmann::ordered_json manifest = to_json(report);
        std::string cfg = resolved_config.dump();
        manifest["config"] = resolved_config;
        manifest["config_hash"] = fnv1a_hex(cfg);
        std::string path = (fs::path(dir) / (report.study + "_manifest.json")).string();
        write_file_atomic(path, manifest.dump(2) + "\n");
        written.push_back(path);
    }
    return written;
}

} // namespace homog

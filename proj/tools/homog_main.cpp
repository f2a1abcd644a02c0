// homog: batch front end for the oscillating p-Laplacian homogenization
// toolkit. Subcommands dispatch to the library; every run writes a JSON
// manifest embedding the fully resolved config so artifacts are reproducible
// from the manifest alone.
//
// Exit codes: 0 success, 1 study-threshold failure, 2 config/parse error,
// 3 hypothesis-validation or centring failure, 4 solver failure.

#include "homog/config.hpp"
#include "homog/corrector.hpp"
#include "homog/report_io.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

using namespace homog;

constexpr int kExitOk = 0;
constexpr int kExitThreshold = 1;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSolver = 4;

std::string output_dir(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out_dir);
    if (const char* root = std::getenv("HOMOG_OUTPUT_ROOT"); root && dir.is_relative())
        dir = fs::path(root) / dir;
    return dir.string();
}

void write_manifest(const RunConfig& cfg, const std::string& dir, const std::string& command,
                    nlohmann::ordered_json extra, const std::vector<std::string>& artifacts) {
    nlohmann::ordered_json manifest;
    manifest["command"] = command;
    manifest["config"] = cfg.resolved();
    manifest["config_hash"] = fnv1a_hex(cfg.resolved().dump());
    manifest["artifacts"] = artifacts;
    for (auto& [key, value] : extra.items()) manifest[key] = value;
    write_file_atomic((std::filesystem::path(dir) / (command + "_manifest.json")).string(),
                      manifest.dump(2) + "\n");
}

std::shared_ptr<const MacroGrid> macro_grid_for_eps(const RunConfig& cfg) {
    int n = cfg.cells_per_period * eps_periods(cfg.eps);
    return std::make_shared<MacroGrid>(cfg.d, n);
}

int cmd_validate(const RunConfig& cfg) {
    auto a = cfg.make_a();
    auto V = cfg.make_v();
    auto report = validate_hypotheses(a, V);
    std::string dir = output_dir(cfg);
    nlohmann::ordered_json j{{"pass", report.pass},
                             {"min_a", report.min_a},
                             {"max_abs_a", report.max_abs_a},
                             {"mean_residual", report.mean_residual},
                             {"periodicity_ok", report.periodicity_ok},
                             {"h1_pass", report.h1_pass},
                             {"h3_pass", report.h3_pass},
                             {"detail", report.detail}};
    write_manifest(cfg, dir, "validate", {{"validation", j}}, {});
    std::cout << report.detail << "\n";
    return report.pass ? kExitOk : kExitValidation;
}

int cmd_solve_eps(const RunConfig& cfg) {
    EpsilonProblem prob(cfg.make_a(), cfg.make_v(), cfg.make_f(), cfg.f_text, cfg.p, cfg.eps,
                        macro_grid_for_eps(cfg));
    MacroFunction u = MacroFunction::zero(prob.grid);
    SolveStats stats;
    if (cfg.form == "ibp") {
        auto corrector = solve_corrector_potential(
            cfg.make_v(), std::make_shared<CellGrid>(cfg.d, cfg.corrector_m));
        std::tie(u, stats) = solve_epsilon_ibp(prob, corrector, cfg.solver);
    } else {
        std::tie(u, stats) = solve_epsilon(prob, cfg.solver);
    }
    std::string dir = output_dir(cfg);
    std::string upath = (std::filesystem::path(dir) / "u_eps.csv").string();
    std::filesystem::create_directories(dir);
    u.write_csv(upath);
    write_manifest(cfg, dir, "solve-eps",
                   {{"stats", to_json(stats)},
                    {"lp_norm", lp_norm(u, cfg.p)},
                    {"w1p_seminorm", w1p_seminorm(u, cfg.p)}},
                   {upath});
    std::cout << "solved eps = " << cfg.eps << " in " << stats.iterations
              << " iterations, residual " << stats.final_residual << "\n";
    return kExitOk;
}

int cmd_solve_cell(const RunConfig& cfg) {
    std::string dir = output_dir(cfg);
    auto grid = std::make_shared<CellGrid>(cfg.d, cfg.m);
    std::vector<std::string> artifacts;
    nlohmann::ordered_json extra;

    if (cfg.p == 2.0) {
        auto correctors = solve_linear_correctors(cfg.make_a(), cfg.make_v(), grid);
        std::filesystem::create_directories(dir);
        for (int j = 0; j < cfg.d; ++j) {
            std::string path =
                (std::filesystem::path(dir) / ("chi" + std::to_string(j + 1) + ".csv")).string();
            correctors.chi[static_cast<std::size_t>(j)].write_csv(path);
            artifacts.push_back(path);
        }
        std::string zpath = (std::filesystem::path(dir) / "zeta.csv").string();
        correctors.zeta.write_csv(zpath);
        artifacts.push_back(zpath);
        extra["residual"] = correctors.residual;
    } else {
        CellAssembler assembler(cfg.make_a(), cfg.make_v(), cfg.p, grid);
        std::vector<CellSolution> table;
        for (double theta : cfg.thetas)
            for (double xi : cfg.xis)
                table.push_back(solve_nonlinear_cell(assembler, theta, {xi, 0.0}, cfg.solver));
        std::string tpath = (std::filesystem::path(dir) / "flux_table.csv").string();
        write_file_atomic(tpath, flux_table_csv(table, cfg.d));
        artifacts.push_back(tpath);
        double worst = 0;
        for (const auto& s : table) worst = std::max(worst, s.residual);
        extra["max_residual"] = worst;
        extra["solutions"] = table.size();
    }
    write_manifest(cfg, dir, "solve-cell", extra, artifacts);
    return kExitOk;
}

nlohmann::ordered_json effective_json(const LinearEffectiveModel& model) {
    nlohmann::ordered_json j;
    j["dim"] = model.dim;
    if (model.dim == 1) {
        j["abar"] = model.abar[0];
        j["bbar"] = model.bbar[0];
        j["cbar"] = model.cbar[0];
    } else {
        j["abar"] = {{model.abar[0], model.abar[1]}, {model.abar[2], model.abar[3]}};
        j["bbar"] = {model.bbar[0], model.bbar[1]};
        j["cbar"] = {model.cbar[0], model.cbar[1]};
    }
    j["sbar"] = model.sbar;
    j["abar_min_eigenvalue"] = model.abar_min_eigenvalue();
    return j;
}

int cmd_effective(const RunConfig& cfg) {
    std::string dir = output_dir(cfg);
    auto grid = std::make_shared<CellGrid>(cfg.d, cfg.m);
    if (cfg.p == 2.0) {
        auto V = cfg.make_v();
        LinearEffectiveModel model;
        if (!cfg.a_matrix_csv.empty()) {
            if (cfg.a_matrix_m <= 0)
                throw ConfigError("[fields] a_matrix_m required with a_matrix_csv");
            auto A = MatrixPeriodicField::from_csv(cfg.a_matrix_m, cfg.a_matrix_csv);
            auto correctors = solve_linear_correctors(A, V, grid);
            model = build_linear_effective(correctors, A, V);
        } else {
            auto a = cfg.make_a();
            auto correctors = solve_linear_correctors(a, V, grid);
            model = build_linear_effective(correctors, a, V);
        }
        std::string path = (std::filesystem::path(dir) / "effective.json").string();
        write_file_atomic(path, effective_json(model).dump(2) + "\n");
        write_manifest(cfg, dir, "effective", {{"effective", effective_json(model)}}, {path});
        std::cout << "abar = " << format_double(model.abar[0]) << "\n";
        return kExitOk;
    }
    // p > 2: the effective model is the flux table.
    return cmd_solve_cell(cfg);
}

int cmd_solve_homog(const RunConfig& cfg) {
    std::string dir = output_dir(cfg);
    auto macro_grid = std::make_shared<MacroGrid>(cfg.d, cfg.n);
    auto cell_grid = std::make_shared<CellGrid>(cfg.d, cfg.m);
    std::filesystem::create_directories(dir);
    std::string upath = (std::filesystem::path(dir) / "u_homog.csv").string();

    if (cfg.p == 2.0) {
        auto a = cfg.make_a();
        auto V = cfg.make_v();
        auto correctors = solve_linear_correctors(a, V, cell_grid);
        auto model = build_linear_effective(correctors, a, V);
        auto [u, residual] = solve_macro_linear(
            model, cfg.make_f(), macro_grid,
            cfg.ansatz == "paper" ? Ansatz::paper : Ansatz::split);
        u.write_csv(upath);
        write_manifest(cfg, dir, "solve-homog",
                       {{"residual", residual}, {"effective", effective_json(model)}}, {upath});
        return kExitOk;
    }

    CellEvaluator evaluator(cfg.make_a(), cfg.make_v(), cfg.p, cell_grid, cfg.solver,
                            cfg.quantize);
    auto [pair, stats] = solve_macro_nonlinear(evaluator, cfg.make_f(), macro_grid, cfg.macro);
    auto [r_global, r_local] = residual_two_scale(pair, evaluator, cfg.make_f());
    pair.u.write_csv(upath);
    write_manifest(cfg, dir, "solve-homog",
                   {{"stats", to_json(stats)},
                    {"residual_global", r_global},
                    {"residual_local", r_local}},
                   {upath});
    std::cout << "macro residuals: global " << r_global << ", local " << r_local << "\n";
    return kExitOk;
}

int cmd_study(const RunConfig& cfg) {
    std::string dir = output_dir(cfg);
    bool all_pass = true;
    std::vector<std::string> artifacts;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();

    for (const auto& name : cfg.studies) {
        if (name == "apriori") {
            EpsilonTemplate tmpl{cfg.make_a(), cfg.make_v(), cfg.make_f(), cfg.f_text,
                                 cfg.p,       cfg.d,        cfg.cells_per_period};
            auto scan = apriori_scan(tmpl, cfg.eps_list, cfg.solver, cfg.growth_factor);
            std::string path = (std::filesystem::path(dir) / "apriori_scan.csv").string();
            write_file_atomic(path, scan_csv(scan));
            artifacts.push_back(path);
            bool ok = !scan.growth_flagged;
            for (const auto& row : scan.rows) ok = ok && row.ok;
            summary.push_back({{"study", "apriori"}, {"pass", ok}});
            all_pass = all_pass && ok;
            continue;
        }
        StudySpec spec = cfg.study_spec();
        ConvergenceReport report;
        if (name == "theorem71") report = study_theorem71(spec);
        else if (name == "scaled_pairing") report = study_scaled_pairing(spec);
        else if (name == "lemma61") report = study_lemma61(spec);
        else throw ConfigError("unknown study '" + name + "'");
        auto written = write_report(report, cfg.resolved(), dir, cfg.formats);
        artifacts.insert(artifacts.end(), written.begin(), written.end());
        summary.push_back({{"study", name}, {"pass", report.pass}});
        all_pass = all_pass && report.pass;
        std::cout << "study " << name << ": " << (report.pass ? "pass" : "FAIL") << "\n";
    }
    write_manifest(cfg, dir, "study", {{"studies", summary}, {"pass", all_pass}}, artifacts);
    return all_pass ? kExitOk : kExitThreshold;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical homogenization toolkit for oscillating p-Laplacian problems "
                 "with large zero-mean potential"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "INI config file")->required();
    app.add_option("--set", overrides, "override: section.key=value (repeatable)");

    auto* validate = app.add_subcommand("validate", "check hypotheses (H1)-(H3) on the fields");
    auto* solve_eps = app.add_subcommand("solve-eps", "solve the oscillating problem at one eps");
    auto* solve_cell = app.add_subcommand("solve-cell", "solve cell problems / flux table");
    auto* effective = app.add_subcommand("effective", "build the effective model");
    auto* solve_homog = app.add_subcommand("solve-homog", "solve the homogenized macro problem");
    auto* study = app.add_subcommand("study", "run the configured convergence studies");

    CLI11_PARSE(app, argc, argv);

    try {
        homog::RunConfig cfg = homog::RunConfig::load(config_path, overrides);
        if (validate->parsed()) return cmd_validate(cfg);
        if (solve_eps->parsed()) return cmd_solve_eps(cfg);
        if (solve_cell->parsed()) return cmd_solve_cell(cfg);
        if (effective->parsed()) return cmd_effective(cfg);
        if (solve_homog->parsed()) return cmd_solve_homog(cfg);
        if (study->parsed()) return cmd_study(cfg);
        return kExitConfig;
    } catch (const homog::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const homog::CentringError& e) {
        std::cerr << "centring error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const homog::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const homog::SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const homog::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

#pragma once

#include "homog/cell_problems.hpp"
#include "homog/epsilon_problem.hpp"
#include "homog/harness.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace homog {

/// 17-significant-digit decimal formatting; fixed across all CSV output so
/// identical reports serialize to identical bytes.
std::string format_double(double v);

/// Writes through a temp file in the same directory, then renames. Parent
/// directories are created. Throws IoError with the path on failure.
void write_file_atomic(const std::string& path, const std::string& content);

/// CSV body of a report series; stable column set
/// eps,value,limit,gap,quad_stability,pass.
std::string series_csv(const ReportSeries& series);

/// CSV body of an a priori scan: eps,Lp_norm,W1p_seminorm,iterations,residual.
std::string scan_csv(const AprioriScan& scan);

/// CSV body of a cell flux table: theta,xi...,q...,v,residual.
std::string flux_table_csv(const std::vector<CellSolution>& solutions, int dim);

nlohmann::ordered_json to_json(const SolveStats& stats);
nlohmann::ordered_json to_json(const ConvergenceReport& report);

/// FNV-1a 64-bit hash, hex encoded; fingerprint for resolved configs.
std::string fnv1a_hex(const std::string& text);

/// Writes one CSV per series plus a JSON manifest embedding the resolved
/// config. Returns the written paths (manifest last).
std::vector<std::string> write_report(const ConvergenceReport& report,
                                      const nlohmann::ordered_json& resolved_config,
                                      const std::string& dir,
                                      const std::vector<std::string>& formats);

} // namespace homog

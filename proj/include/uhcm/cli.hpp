#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "uhcm/config.hpp"

namespace uhcm {

struct CliOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;  // overrides chain.seed
    int threads = 0;
    std::string format = "csv";  // csv | json
    std::filesystem::path config_path;
};

/// Moment tables over the requested displacements, evaluated along both
/// analytic routes with the cross-route residual column.
void cmd_moments(const RunConfig& cfg, const CliOptions& opts);

/// Analytic phase-space witness scan with CSV and SVG outputs.
void cmd_scan(const RunConfig& cfg, const CliOptions& opts);

/// Monte Carlo run of the measurement chain; correlation estimates per order
/// with converted moments and the analytic comparison column.
void cmd_simulate(const RunConfig& cfg, const CliOptions& opts);

/// Monte Carlo witness: simulate, estimate all needed correlation orders,
/// build matrices, and bootstrap confidence intervals.
void cmd_witness(const RunConfig& cfg, const CliOptions& opts);

/// Built-in parameter sets reproducing the two reference scans.
RunConfig figure_config(const std::string& which);
void cmd_figures(const std::string& which, const CliOptions& opts);

}  // namespace uhcm

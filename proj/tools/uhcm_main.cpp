#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "uhcm/cli.hpp"
#include "uhcm/version.hpp"

namespace {

// Exit codes: 0 success, 2 configuration error, 3 numerical failure
// (truncation or series), 4 insufficient data, 1 anything else.
int run(int argc, char** argv) {
    CLI::App app{"Unbalanced homodyne correlation measurement laboratory"};
    app.set_version_flag("--version", uhcm::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string which = "fig3";

    const auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "Configuration file (JSON or TOML)");
        if (needs_config) opt->required();
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--seed", seed, "Override the configured RNG seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
        cmd->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* moments = app.add_subcommand("moments", "Analytic displaced-moment tables");
    add_common(moments, true);
    CLI::App* scan = app.add_subcommand("scan", "Phase-space witness scan");
    add_common(scan, true);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo correlation run");
    add_common(simulate, true);
    CLI::App* witness = app.add_subcommand("witness", "Monte Carlo witness with bootstrap errors");
    add_common(witness, true);
    CLI::App* figures = app.add_subcommand("figures", "Reproduce the built-in reference scans");
    figures->add_option("--which", which, "fig3 or fig4")->required();
    add_common(figures, false);

    CLI11_PARSE(app, argc, argv);

    uhcm::CliOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.format = format;
    if (seed_set) opts.seed = seed;
    if (!config_path.empty()) opts.config_path = config_path;

    uhcm::RunConfig cfg;
    if (!config_path.empty()) cfg = uhcm::load_config(config_path);

    if (moments->parsed()) uhcm::cmd_moments(cfg, opts);
    if (scan->parsed()) uhcm::cmd_scan(cfg, opts);
    if (simulate->parsed()) uhcm::cmd_simulate(cfg, opts);
    if (witness->parsed()) uhcm::cmd_witness(cfg, opts);
    if (figures->parsed()) uhcm::cmd_figures(which, opts);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const uhcm::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const uhcm::TruncationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const uhcm::SeriesError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const uhcm::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const uhcm::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}

#include "uhcm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "uhcm/moments.hpp"
#include "uhcm/parallel.hpp"
#include "uhcm/version.hpp"

namespace uhcm {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

RunManifest make_manifest(const RunConfig& cfg, const CliOptions& opts, std::uint64_t seed) {
    RunManifest manifest;
    manifest.config_hash = cfg.config_hash;
    manifest.seed = seed;
    manifest.tool_version = kVersion;
    manifest.created_utc = utc_timestamp();
    if (!opts.config_path.empty()) manifest.inputs.push_back(opts.config_path.string());
    return manifest;
}

void emit(const CliOptions& opts, RunManifest manifest, const std::string& stem,
          const std::string& csv, const std::string& jsonText, const std::string& svg = {}) {
    std::filesystem::create_directories(opts.out_dir);
    if (opts.format == "json") {
        const auto path = opts.out_dir / (stem + ".json");
        write_text_file(path, jsonText);
        manifest.outputs.push_back(path.string());
    } else {
        const auto path = opts.out_dir / (stem + ".csv");
        write_text_file(path, csv);
        manifest.outputs.push_back(path.string());
    }
    if (!svg.empty()) {
        const auto path = opts.out_dir / (stem + ".svg");
        write_text_file(path, svg);
        manifest.outputs.push_back(path.string());
    }
    write_text_file(opts.out_dir / (stem + ".manifest.json"), manifest.to_json());
}

OpticalChainConfig chain_with_seed(const RunConfig& cfg, const CliOptions& opts) {
    if (!cfg.chain) throw ConfigError("config error: this command needs a [chain] section");
    if (!cfg.signal) throw ConfigError("config error: this command needs a [chain.signal] section");
    OpticalChainConfig chain = *cfg.chain;
    if (opts.seed) chain.seed = *opts.seed;
    return chain;
}

}  // namespace

void cmd_moments(const RunConfig& cfg, const CliOptions& opts) {
    if (!cfg.state) throw ConfigError("config error: moments needs a [state] section");
    if (!cfg.scan) throw ConfigError("config error: moments needs a [scan] section");
    const DensityMatrix rho = build_state(*cfg.state);
    const std::vector<Complex> alphas = scan_grid(*cfg.scan);
    const int max_order = cfg.scan->max_order;

    std::ostringstream csv;
    csv << "alpha_re,alpha_im,order_or_n,value,std_error,cross_residual\n";
    nlohmann::json jarr = nlohmann::json::array();
    for (const Complex alpha : alphas) {
        const MomentSet set = analytic_moments(rho, alpha, max_order);
        std::vector<double> residuals(set.values.size(), 0.0);
        for (int m = 1; m <= max_order; ++m)
            residuals[static_cast<std::size_t>(m)] =
                set.value(m) - moment_via_displacement(rho, alpha, m);
        for (int m = 0; m <= max_order; ++m)
            csv << fmt(alpha.real()) << ',' << fmt(alpha.imag()) << ',' << m << ','
                << fmt(set.value(m)) << ",," << fmt(residuals[static_cast<std::size_t>(m)]) << '\n';
        nlohmann::json j;
        j["alpha"] = {alpha.real(), alpha.imag()};
        j["values"] = set.values;
        j["cross_residuals"] = residuals;
        jarr.push_back(std::move(j));
    }
    emit(opts, make_manifest(cfg, opts, 0), "moments", csv.str(), jarr.dump(2) + "\n");
}

void cmd_scan(const RunConfig& cfg, const CliOptions& opts) {
    if (!cfg.state) throw ConfigError("config error: scan needs a [state] section");
    if (!cfg.scan) throw ConfigError("config error: scan needs a [scan] section");
    if (!cfg.witness) throw ConfigError("config error: scan needs a [witness] section");
    const DensityMatrix rho = build_state(*cfg.state);
    const WitnessReport report = witness_scan(rho, *cfg.scan, *cfg.witness, opts.threads);
    const std::string svg = cfg.scan->axis == ScanSpec::Axis::grid2d
                                ? std::string()
                                : witness_svg(report, cfg.witness->k_list);
    emit(opts, make_manifest(cfg, opts, 0), "witness_scan", report.to_csv(),
         report.to_json() + "\n", svg);
}

void cmd_simulate(const RunConfig& cfg, const CliOptions& opts) {
    const OpticalChainConfig chain = chain_with_seed(cfg, opts);
    SimulateOptions sim;
    sim.threads = opts.threads;
    const ShotMatrix shots = simulate_run(chain, *cfg.signal, sim);

    std::vector<CorrelationRecord> records;
    std::vector<double> analytic;
    for (int m : cfg.orders) {
        records.push_back(estimate_gamma(shots, m));
        analytic.push_back(cfg.signal->analytic_moment(shots.alpha, m));
    }

    RunManifest manifest = make_manifest(cfg, opts, chain.seed);
    std::filesystem::create_directories(opts.out_dir);
    if (cfg.write_raw_shots) {
        const auto raw = opts.out_dir / "shots.uhcm";
        write_shot_file(raw, shots);
        manifest.outputs.push_back(raw.string());
    }
    nlohmann::json jarr = nlohmann::json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const MomentEstimate est = gamma_to_moment(records[i]);
        nlohmann::json j;
        j["m"] = records[i].m;
        j["alpha"] = {records[i].alpha.real(), records[i].alpha.imag()};
        j["gamma_hat"] = records[i].gamma_hat;
        j["std_error"] = records[i].std_error;
        j["zeta_tilde"] = records[i].zeta_tilde;
        j["shots"] = records[i].shots_used;
        j["moment"] = est.value;
        j["moment_std_error"] = est.std_error;
        j["analytic_moment"] = analytic[i];
        jarr.push_back(std::move(j));
    }
    emit(opts, std::move(manifest), "correlations", correlation_csv(records, &analytic),
         jarr.dump(2) + "\n");
}

void cmd_witness(const RunConfig& cfg, const CliOptions& opts) {
    const OpticalChainConfig chain = chain_with_seed(cfg, opts);
    if (!cfg.witness) throw ConfigError("config error: witness needs a [witness] section");
    SimulateOptions sim;
    sim.threads = opts.threads;
    const ShotMatrix shots = simulate_run(chain, *cfg.signal, sim);

    WitnessReport all;
    for (int k : cfg.witness->k_list) {
        const double w_tilde = cfg.witness->w_tilde > 0.0
                                   ? cfg.witness->w_tilde
                                   : cfg.witness->w / shots.zeta_tilde;
        WitnessReport rep = bootstrap_witness(shots, k, w_tilde, cfg.witness->q,
                                              cfg.witness->resamples, chain.seed ^ 0x5EED);
        all.points.insert(all.points.end(), rep.points.begin(), rep.points.end());
    }
    emit(opts, make_manifest(cfg, opts, chain.seed), "witness_mc", all.to_csv(),
         all.to_json() + "\n");
}

RunConfig figure_config(const std::string& which) {
    RunConfig cfg;
    ScanSpec scan;
    WitnessParams witness;
    witness.k_list = {1, 2};
    witness.q = 10.0;
    if (which == "fig3") {
        StateSpec state = StateSpec::squeezed_vacuum(Complex(0.03, 0.0));
        state.cutoff = CutoffPolicy::adaptive(1e-20);
        cfg.state = state;
        scan.axis = ScanSpec::Axis::real_axis;
        scan.min = -4.0;
        scan.max = 4.0;
        scan.points = 401;
        scan.envelope_c = 1.0;
        witness.w = 1.5;
    } else if (which == "fig4") {
        StateSpec state = StateSpec::spats(0.8, 0.5);
        state.cutoff = CutoffPolicy::adaptive(1e-20);
        cfg.state = state;
        scan.axis = ScanSpec::Axis::real_axis;
        scan.min = -3.0;
        scan.max = 3.0;
        scan.points = 301;
        scan.envelope_c = 1.4;
        witness.w = 1.3;
    } else {
        throw ConfigError("config error: unknown figure '" + which + "' (use fig3 or fig4)");
    }
    cfg.scan = scan;
    cfg.witness = witness;
    nlohmann::json ident;
    ident["figure"] = which;
    cfg.config_hash = fnv1a64(ident.dump());
    return cfg;
}

void cmd_figures(const std::string& which, const CliOptions& opts) {
    const RunConfig cfg = figure_config(which);
    const DensityMatrix rho = build_state(*cfg.state);
    const WitnessReport report = witness_scan(rho, *cfg.scan, *cfg.witness, opts.threads);
    emit(opts, make_manifest(cfg, opts, 0), which, report.to_csv(), report.to_json() + "\n",
         witness_svg(report, cfg.witness->k_list));
}

}  // namespace uhcm

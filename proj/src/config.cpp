#include "uhcm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "toml_lite.hpp"

namespace uhcm {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config error: " + what); }

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) bad(where + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) bad(where + " must be an integer");
    return v.get<int>();
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) bad(where + " must be a string");
    return v.get<std::string>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0))
        bad(where + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

/// Complex values are a plain number (real) or a [re, im] pair.
Complex as_complex(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    bad(where + " must be a number or [re, im]");
}

CutoffPolicy parse_cutoff(const json& obj) {
    reject_unknown(obj, "state.cutoff", {"policy", "n_max", "tail_tol", "hard_cap"});
    const std::string policy = obj.contains("policy") ? as_string(obj["policy"], "cutoff.policy")
                                                      : std::string("adaptive");
    CutoffPolicy pol;
    if (policy == "fixed") {
        if (!obj.contains("n_max")) bad("fixed cutoff needs n_max");
        pol = CutoffPolicy::fixed(as_int(obj["n_max"], "cutoff.n_max"));
    } else if (policy == "adaptive") {
        pol = CutoffPolicy::adaptive(obj.contains("tail_tol")
                                         ? as_number(obj["tail_tol"], "cutoff.tail_tol")
                                         : 1e-10);
    } else {
        bad("cutoff.policy must be 'fixed' or 'adaptive'");
    }
    if (obj.contains("hard_cap")) pol.hard_cap = as_int(obj["hard_cap"], "cutoff.hard_cap");
    return pol;
}

StateSpec parse_state(const json& obj) {
    reject_unknown(obj, "state",
                   {"kind", "n", "beta", "nbar", "xi", "loss", "cutoff"});
    if (!obj.contains("kind")) bad("state.kind is required");
    const std::string kind = as_string(obj["kind"], "state.kind");

    StateSpec spec;
    if (kind == "vacuum") {
        spec = StateSpec::vacuum();
    } else if (kind == "fock") {
        if (!obj.contains("n")) bad("state.n is required for fock");
        spec = StateSpec::fock(as_int(obj["n"], "state.n"));
    } else if (kind == "coherent") {
        if (!obj.contains("beta")) bad("state.beta is required for coherent");
        spec = StateSpec::coherent(as_complex(obj["beta"], "state.beta"));
    } else if (kind == "thermal") {
        if (!obj.contains("nbar")) bad("state.nbar is required for thermal");
        spec = StateSpec::thermal(as_number(obj["nbar"], "state.nbar"));
    } else if (kind == "squeezed_vacuum") {
        if (!obj.contains("xi")) bad("state.xi is required for squeezed_vacuum");
        spec = StateSpec::squeezed_vacuum(as_complex(obj["xi"], "state.xi"));
    } else if (kind == "spats") {
        if (!obj.contains("nbar")) bad("state.nbar is required for spats");
        spec = StateSpec::spats(as_number(obj["nbar"], "state.nbar"));
    } else {
        bad("unknown state.kind '" + kind + "'");
    }
    if (obj.contains("loss")) spec.loss = as_number(obj["loss"], "state.loss");
    if (obj.contains("cutoff")) spec.cutoff = parse_cutoff(obj["cutoff"]);
    return spec;
}

ClassicalSignalModel parse_signal(const json& obj) {
    reject_unknown(obj, "chain.signal", {"kind", "sigma0", "nbar", "radius"});
    if (!obj.contains("kind")) bad("chain.signal.kind is required");
    const std::string kind = as_string(obj["kind"], "signal.kind");
    if (kind == "coherent") {
        if (!obj.contains("sigma0")) bad("signal.sigma0 is required for coherent");
        return ClassicalSignalModel::coherent(as_complex(obj["sigma0"], "signal.sigma0"));
    }
    if (kind == "thermal") {
        if (!obj.contains("nbar")) bad("signal.nbar is required for thermal");
        return ClassicalSignalModel::thermal(as_number(obj["nbar"], "signal.nbar"));
    }
    if (kind == "phase_diffused") {
        if (!obj.contains("radius")) bad("signal.radius is required for phase_diffused");
        return ClassicalSignalModel::phase_diffused(as_number(obj["radius"], "signal.radius"));
    }
    bad("unknown signal.kind '" + kind + "'");
}

void parse_chain(const json& obj, RunConfig& out) {
    reject_unknown(obj, "chain",
                   {"T", "R", "T_D", "R_D", "beta_R", "beta_D", "alpha", "detectors", "zeta",
                    "beta_R_jitter_sd", "correlated_dark", "shots", "seed", "signal", "orders",
                    "write_raw_shots"});
    OpticalChainConfig cfg;
    if (obj.contains("T")) cfg.T = as_complex(obj["T"], "chain.T");
    if (obj.contains("R")) cfg.R = as_complex(obj["R"], "chain.R");
    if (obj.contains("T_D")) cfg.T_D = as_complex(obj["T_D"], "chain.T_D");
    if (obj.contains("R_D")) cfg.R_D = as_complex(obj["R_D"], "chain.R_D");
    if (obj.contains("beta_R")) cfg.beta_R = as_number(obj["beta_R"], "chain.beta_R");
    if (obj.contains("beta_D")) cfg.beta_D = as_complex(obj["beta_D"], "chain.beta_D");
    if (obj.contains("beta_R_jitter_sd"))
        cfg.beta_r_jitter_sd = as_number(obj["beta_R_jitter_sd"], "chain.beta_R_jitter_sd");
    if (obj.contains("correlated_dark")) {
        if (!obj["correlated_dark"].is_boolean()) bad("chain.correlated_dark must be a boolean");
        cfg.correlated_dark = obj["correlated_dark"].get<bool>();
    }
    if (obj.contains("shots")) cfg.shots = as_u64(obj["shots"], "chain.shots");
    if (obj.contains("seed")) cfg.seed = as_u64(obj["seed"], "chain.seed");

    if (!obj.contains("detectors") || !obj["detectors"].is_array())
        bad("chain.detectors must be an array");
    for (const json& d : obj["detectors"]) {
        reject_unknown(d, "chain.detectors[]", {"T_u", "eta", "gain", "dark_mean", "dark_sd"});
        DetectorConfig det;
        if (!d.contains("T_u")) bad("detector T_u is required");
        det.t_u = as_complex(d["T_u"], "detector.T_u");
        if (d.contains("eta")) det.eta = as_number(d["eta"], "detector.eta");
        if (d.contains("gain")) det.gain = as_number(d["gain"], "detector.gain");
        if (d.contains("dark_mean")) det.dark_mean = as_number(d["dark_mean"], "detector.dark_mean");
        if (d.contains("dark_sd")) det.dark_sd = as_number(d["dark_sd"], "detector.dark_sd");
        cfg.detectors.push_back(det);
    }
    if (obj.contains("zeta")) cfg = balance_gains(cfg, as_number(obj["zeta"], "chain.zeta"));
    // A requested displacement wins over an explicit beta_D.
    if (obj.contains("alpha"))
        cfg.beta_D = beta_d_for_displacement(cfg, as_complex(obj["alpha"], "chain.alpha"));

    if (obj.contains("orders")) {
        out.orders.clear();
        for (const json& v : obj["orders"]) out.orders.push_back(as_int(v, "chain.orders[]"));
    }
    if (obj.contains("write_raw_shots")) {
        if (!obj["write_raw_shots"].is_boolean()) bad("chain.write_raw_shots must be a boolean");
        out.write_raw_shots = obj["write_raw_shots"].get<bool>();
    }
    if (obj.contains("signal")) out.signal = parse_signal(obj["signal"]);
    out.chain = std::move(cfg);
}

ScanSpec parse_scan(const json& obj) {
    reject_unknown(obj, "scan",
                   {"axis", "range", "points", "envelope_c", "alphas", "max_order"});
    ScanSpec spec;
    if (obj.contains("axis")) {
        const std::string axis = as_string(obj["axis"], "scan.axis");
        if (axis == "real_axis")
            spec.axis = ScanSpec::Axis::real_axis;
        else if (axis == "imag_axis")
            spec.axis = ScanSpec::Axis::imag_axis;
        else if (axis == "grid2d")
            spec.axis = ScanSpec::Axis::grid2d;
        else
            bad("scan.axis must be real_axis, imag_axis, or grid2d");
    }
    if (obj.contains("range")) {
        if (!obj["range"].is_array() || obj["range"].size() != 2) bad("scan.range must be [min, max]");
        spec.min = as_number(obj["range"][0], "scan.range[0]");
        spec.max = as_number(obj["range"][1], "scan.range[1]");
    }
    if (obj.contains("points")) spec.points = as_int(obj["points"], "scan.points");
    if (obj.contains("envelope_c")) spec.envelope_c = as_number(obj["envelope_c"], "scan.envelope_c");
    if (obj.contains("alphas"))
        for (const json& a : obj["alphas"]) spec.alphas.push_back(as_complex(a, "scan.alphas[]"));
    if (obj.contains("max_order")) spec.max_order = as_int(obj["max_order"], "scan.max_order");
    return spec;
}

WitnessParams parse_witness(const json& obj) {
    reject_unknown(obj, "witness", {"k", "k_list", "w", "q", "w_tilde", "resamples"});
    WitnessParams params;
    if (obj.contains("k_list")) {
        params.k_list.clear();
        for (const json& v : obj["k_list"]) params.k_list.push_back(as_int(v, "witness.k_list[]"));
    } else if (obj.contains("k")) {
        params.k_list = {as_int(obj["k"], "witness.k")};
    }
    if (obj.contains("w")) params.w = as_number(obj["w"], "witness.w");
    if (obj.contains("q")) params.q = as_number(obj["q"], "witness.q");
    if (obj.contains("w_tilde")) params.w_tilde = as_number(obj["w_tilde"], "witness.w_tilde");
    if (obj.contains("resamples")) params.resamples = as_int(obj["resamples"], "witness.resamples");
    return params;
}

RunConfig from_json(const json& doc) {
    if (!doc.is_object()) bad("top-level document must be a table/object");
    reject_unknown(doc, "document", {"state", "chain", "scan", "witness"});
    RunConfig cfg;
    if (doc.contains("state")) cfg.state = parse_state(doc["state"]);
    if (doc.contains("chain")) parse_chain(doc["chain"], cfg);
    if (doc.contains("scan")) cfg.scan = parse_scan(doc["scan"]);
    if (doc.contains("witness")) cfg.witness = parse_witness(doc["witness"]);
    cfg.config_hash = fnv1a64(doc.dump());
    return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool is_toml) {
    json doc;
    if (is_toml) {
        doc = detail::parse_toml(text);
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            bad(std::string("invalid JSON: ") + e.what());
        }
    }
    return from_json(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    bool is_toml = path.extension() == ".toml";
    if (path.extension() != ".toml" && path.extension() != ".json") {
        const std::size_t first = text.find_first_not_of(" \t\r\n");
        is_toml = first == std::string::npos || text[first] != '{';
    }
    return parse_config(text, is_toml);
}

}  // namespace uhcm

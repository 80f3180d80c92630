#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uhcm/fock.hpp"
#include "uhcm/types.hpp"
#include "uhcm/witness.hpp"

namespace uhcm {

/// Phase-space sampling for scans and moment tables. The same range applies
/// to both axes of a 2-D grid. envelope_c scales the reported curves by
/// exp(-c |alpha|^2) to tame the polynomial growth at large displacement.
struct ScanSpec {
    enum class Axis { real_axis, imag_axis, grid2d };

    Axis axis = Axis::real_axis;
    double min = -1.0;
    double max = 1.0;
    int points = 2;
    double envelope_c = 0.0;
    std::vector<Complex> alphas;  // explicit list; overrides axis/range
    int max_order = 4;            // for moment tables

    void validate() const;
};

struct WitnessParams {
    std::vector<int> k_list{1, 2};
    double w = 1.0;
    double q = 10.0;
    double w_tilde = 0.0;  // 0: derive from w and the measured zeta_tilde
    int resamples = 200;

    void validate() const;
};

std::vector<Complex> scan_grid(const ScanSpec& spec);

/// Analytic phase-space witness scan: displaced moments to order 2 max(k),
/// matrix, truncated quasiprobability and minimal eigenvalue per grid point
/// and per k. Points are ordered grid-major, then by k.
WitnessReport witness_scan(const DensityMatrix& rho, const ScanSpec& scan,
                           const WitnessParams& params, int threads = 0);

/// Simple standalone SVG line plot of the enveloped curves of a 1-D scan.
std::string witness_svg(const WitnessReport& report, const std::vector<int>& k_list);

/// Reproducibility sidecar emitted next to every output file set.
struct RunManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string created_utc;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string utc_timestamp();
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace uhcm

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uhcm/chain.hpp"
#include "uhcm/fock.hpp"
#include "uhcm/scan.hpp"
#include "uhcm/types.hpp"

namespace uhcm {

/// One parsed configuration document. Sections are optional; each command
/// requires the ones it consumes. Unknown keys anywhere are rejected.
struct RunConfig {
    std::optional<StateSpec> state;
    std::optional<OpticalChainConfig> chain;
    std::optional<ClassicalSignalModel> signal;  // nested under "chain"
    std::vector<int> orders{1, 2};               // chain.orders
    bool write_raw_shots = false;                // chain.write_raw_shots
    std::optional<ScanSpec> scan;
    std::optional<WitnessParams> witness;
    std::uint64_t config_hash = 0;
};

/// Reads a JSON (.json) or TOML (.toml) document. Any other extension is
/// sniffed: documents starting with '{' parse as JSON.
RunConfig load_config(const std::filesystem::path& path);

/// Parses from an in-memory document (used by tests).
RunConfig parse_config(const std::string& text, bool is_toml);

}  // namespace uhcm

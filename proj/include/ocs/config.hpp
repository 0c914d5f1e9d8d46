#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "ocs/barrier.hpp"
#include "ocs/constants.hpp"
#include "ocs/packet.hpp"

namespace ocs {

// Flattened key=value configuration. Sections ([packet] etc.) prefix their
// keys with "section.". Energy inputs are canonicalized to wavenumber before
// hashing so E- and k-specified runs with the same physics hash identically.
struct RunConfig {
    BarrierSpec barrier;
    PhysicalConstants consts;
    double k = 0.0;            // nm^-1, canonical energy variable
    SpectrumSpec spectrum;     // packet runs (k0 mirrors k)
    PacketOptions packet;
    // sweep controls
    double sweep_min = 0.0, sweep_max = 0.0;
    int sweep_points = 0;
    int workers = 1;
    std::string format = "csv"; // csv | json
    std::map<std::string, std::string> raw; // canonicalized key=value pairs

    uint64_t hash() const;          // FNV-1a over sorted canonical lines
    std::string hash_hex() const;
};

std::map<std::string, std::string> parse_config_file(const std::string& path);

// Builds a RunConfig from file values plus command-line overrides
// (overrides win). Unknown keys raise ValidationError.
RunConfig make_run_config(const std::map<std::string, std::string>& file_kv,
                          const std::map<std::string, std::string>& overrides);

} // namespace ocs

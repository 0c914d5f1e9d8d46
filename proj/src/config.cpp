#include "ocs/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ocs/errors.hpp"
#include "ocs/output.hpp"

namespace ocs {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& val) {
    try {
        size_t pos = 0;
        double v = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs a number, got '" + val + "'");
    }
}

int to_int(const std::string& key, const std::string& val) {
    try {
        size_t pos = 0;
        int v = std::stoi(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs an integer, got '" + val + "'");
    }
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "barrier", "E", "k",
        "constants.hbar", "constants.hbar2_over_2m",
        "packet.l0", "packet.cutoff", "packet.L", "packet.t_max",
        "packet.dt_coarse", "packet.dt_fine", "packet.fine_t0", "packet.fine_t1",
        "packet.nodes_per_osc", "packet.max_k_nodes", "packet.h_ext",
        "packet.x_lo", "packet.x_hi", "packet.edge_tol",
        "sweep.min", "sweep.max", "sweep.points",
        "workers", "format",
    };
    return keys;
}

} // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError(path + ":" + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        kv[key] = val;
    }
    return kv;
}

RunConfig make_run_config(const std::map<std::string, std::string>& file_kv,
                          const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> kv = file_kv;
    for (const auto& [k, v] : overrides) kv[k] = v;

    for (const auto& [k, v] : kv)
        if (!known_keys().count(k))
            throw ValidationError("unknown config key '" + k + "'");

    RunConfig cfg;
    cfg.consts = electron_constants();
    if (kv.count("constants.hbar"))
        cfg.consts.hbar = to_double("constants.hbar", kv["constants.hbar"]);
    if (kv.count("constants.hbar2_over_2m"))
        cfg.consts.hbar2_over_2m =
            to_double("constants.hbar2_over_2m", kv["constants.hbar2_over_2m"]);
    if (!(cfg.consts.hbar > 0.0) || !(cfg.consts.hbar2_over_2m > 0.0))
        throw ValidationError("constants must be positive");

    if (!kv.count("barrier"))
        throw ValidationError("config needs a barrier (barrier = rect:V0,a,b | double:V0,d,l,a | table:path)");
    cfg.barrier = parse_barrier(kv["barrier"]);
    validate_barrier(cfg.barrier);

    if (kv.count("E") && kv.count("k"))
        throw ValidationError("give the energy as E or k, not both");
    if (kv.count("E")) {
        double E = to_double("E", kv["E"]);
        if (!(E > 0.0)) throw ValidationError("E must be positive, got " + kv["E"]);
        cfg.k = wavenumber_from_energy(E, cfg.consts);
    } else if (kv.count("k")) {
        cfg.k = to_double("k", kv["k"]);
        if (!(cfg.k > 0.0)) throw ValidationError("k must be positive, got " + kv["k"]);
    } else {
        throw ValidationError("config needs an energy (E in eV or k in nm^-1)");
    }

    cfg.spectrum.k0 = cfg.k;
    cfg.spectrum.l0 = kv.count("packet.l0") ? to_double("packet.l0", kv["packet.l0"]) : 10.0;
    if (kv.count("packet.cutoff"))
        cfg.spectrum.cutoff = to_double("packet.cutoff", kv["packet.cutoff"]);

    if (kv.count("packet.t_max")) cfg.packet.t_max = to_double("packet.t_max", kv["packet.t_max"]);
    if (kv.count("packet.L")) cfg.packet.L = to_double("packet.L", kv["packet.L"]);
    if (kv.count("packet.dt_coarse"))
        cfg.packet.dt_coarse = to_double("packet.dt_coarse", kv["packet.dt_coarse"]);
    if (kv.count("packet.dt_fine"))
        cfg.packet.dt_fine = to_double("packet.dt_fine", kv["packet.dt_fine"]);
    if (kv.count("packet.fine_t0"))
        cfg.packet.fine_t0 = to_double("packet.fine_t0", kv["packet.fine_t0"]);
    if (kv.count("packet.fine_t1"))
        cfg.packet.fine_t1 = to_double("packet.fine_t1", kv["packet.fine_t1"]);
    if (kv.count("packet.nodes_per_osc"))
        cfg.packet.nodes_per_osc = to_double("packet.nodes_per_osc", kv["packet.nodes_per_osc"]);
    if (kv.count("packet.max_k_nodes"))
        cfg.packet.max_k_nodes = to_int("packet.max_k_nodes", kv["packet.max_k_nodes"]);
    if (kv.count("packet.h_ext")) cfg.packet.h_ext = to_double("packet.h_ext", kv["packet.h_ext"]);
    if (kv.count("packet.x_lo")) cfg.packet.x_lo = to_double("packet.x_lo", kv["packet.x_lo"]);
    if (kv.count("packet.x_hi")) cfg.packet.x_hi = to_double("packet.x_hi", kv["packet.x_hi"]);
    if (kv.count("packet.edge_tol"))
        cfg.packet.edge_tol = to_double("packet.edge_tol", kv["packet.edge_tol"]);

    if (kv.count("sweep.min")) cfg.sweep_min = to_double("sweep.min", kv["sweep.min"]);
    if (kv.count("sweep.max")) cfg.sweep_max = to_double("sweep.max", kv["sweep.max"]);
    if (kv.count("sweep.points")) cfg.sweep_points = to_int("sweep.points", kv["sweep.points"]);

    if (kv.count("workers")) {
        cfg.workers = to_int("workers", kv["workers"]);
        if (cfg.workers < 1) throw ValidationError("workers must be >= 1");
    }
    if (kv.count("format")) {
        cfg.format = kv["format"];
        if (cfg.format != "csv" && cfg.format != "json")
            throw ValidationError("format must be csv or json, got '" + cfg.format + "'");
    }

    // canonical form: energy always stored as k so E- and k-specified runs of
    // the same physics hash identically; format and workers only change how the
    // run is presented or scheduled, so they stay out of the hash too
    cfg.raw = kv;
    cfg.raw.erase("E");
    cfg.raw.erase("format");
    cfg.raw.erase("workers");
    cfg.raw["k"] = format_double(cfg.k);
    return cfg;
}

uint64_t RunConfig::hash() const {
    uint64_t h = 1469598103934665603ull; // FNV-1a 64 offset basis
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (const auto& [k, v] : raw) { // std::map iterates in sorted key order
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    return h;
}

std::string RunConfig::hash_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)hash());
    return buf;
}

} // namespace ocs

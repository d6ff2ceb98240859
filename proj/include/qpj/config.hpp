#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qpj/errors.hpp"
#include "qpj/hash.hpp"
#include "qpj/junction.hpp"
#include "qpj/resonator.hpp"
#include "qpj/units.hpp"

namespace qpj {

inline constexpr const char* kVersion = "1.0.0";

/// Run configuration in laboratory units (meV, kOhm, K, mV, GHz, fF, nH, Ohm).
struct RunConfig {
    struct Junction {
        double gap_left_meV = 0.0;
        double gap_right_meV = 0.0;
        double resistance_kohm = 0.0;
        double temperature_K = 0.0;
        double dynes_rate = 0.0;  // hbar nu / Delta_Sigma; 0 selects the floor
    } junction;
    struct Drive {
        double amplitude_mV = 0.0;
        double frequency_GHz = 0.0;  // Omega / 2 pi
        double phase_bias_pi = 0.0;
    } drive;
    struct Circuit {
        double capacitance_fF = 0.0;
        double inductance_nH = 0.0;
        double coupling_capacitance_fF = 1.0;
        double probe_impedance_ohm = 50.0;
        double probe_temperature_K = -1.0;  // defaults to the lead temperature
    } circuit;
    struct Numerics {
        // polarization table, reduced frequency units
        double grid_omega_max = 0.0;  // 0 picks what the task needs
        double grid_spacing = 0.006;
        double grid_inner_extent = 3.0;
        double grid_outer_spacing = 0.02;
        double quad_rel_tol = 1e-9;
        double quad_cutoff = 40.0;
        // admittance task, reduced frequency units
        double admittance_omega_min = -3.0;
        double admittance_omega_max = 3.0;
        double admittance_points = 601;
        double harmonic = 0;
        // spectra and quasitemperature
        double spectrum_points = 2001;
        double spectrum_span = 20.0;
        double qtemp_lo_K = 1e-3;
        double qtemp_hi_K = 10.0;
        double qtemp_tol_K = 1e-4;
        // (Omega, V0) sweep
        double sweep_freq_min_GHz = 29.0;
        double sweep_freq_max_GHz = 36.0;
        double sweep_freq_points = 20;
        double sweep_amp_min_mV = 0.1;
        double sweep_amp_max_mV = 0.3;
        double sweep_amp_points = 20;
        // Monte Carlo
        double mc_trajectories = 200;
        double mc_dt = 0.0;  // 0 picks 0.025 / omega_r
        double mc_kernel_band = 100.0;
        double mc_noise_band = 0.0;  // 0 picks the resonator band plus drive sidebands
        double mc_segments = 4;
        double seed = 1;
        double threads = 0;
    } numerics;
};

namespace detail {

struct ConfigKey {
    const char* section;
    const char* name;
    bool required;
    std::function<double&(RunConfig&)> field;
};

inline const std::vector<ConfigKey>& config_keys() {
#define QPJ_KEY(sec, member, req) \
    ConfigKey { #sec, #member, req, [](RunConfig& c) -> double& { return c.sec.member; } }
    static const std::vector<ConfigKey> keys = {
        QPJ_KEY(junction, gap_left_meV, true),
        QPJ_KEY(junction, gap_right_meV, true),
        QPJ_KEY(junction, resistance_kohm, true),
        QPJ_KEY(junction, temperature_K, true),
        QPJ_KEY(junction, dynes_rate, false),
        QPJ_KEY(drive, amplitude_mV, false),
        QPJ_KEY(drive, frequency_GHz, false),
        QPJ_KEY(drive, phase_bias_pi, false),
        QPJ_KEY(circuit, capacitance_fF, true),
        QPJ_KEY(circuit, inductance_nH, true),
        QPJ_KEY(circuit, coupling_capacitance_fF, false),
        QPJ_KEY(circuit, probe_impedance_ohm, false),
        QPJ_KEY(circuit, probe_temperature_K, false),
        QPJ_KEY(numerics, grid_omega_max, false),
        QPJ_KEY(numerics, grid_spacing, false),
        QPJ_KEY(numerics, grid_inner_extent, false),
        QPJ_KEY(numerics, grid_outer_spacing, false),
        QPJ_KEY(numerics, quad_rel_tol, false),
        QPJ_KEY(numerics, quad_cutoff, false),
        QPJ_KEY(numerics, admittance_omega_min, false),
        QPJ_KEY(numerics, admittance_omega_max, false),
        QPJ_KEY(numerics, admittance_points, false),
        QPJ_KEY(numerics, harmonic, false),
        QPJ_KEY(numerics, spectrum_points, false),
        QPJ_KEY(numerics, spectrum_span, false),
        QPJ_KEY(numerics, qtemp_lo_K, false),
        QPJ_KEY(numerics, qtemp_hi_K, false),
        QPJ_KEY(numerics, qtemp_tol_K, false),
        QPJ_KEY(numerics, sweep_freq_min_GHz, false),
        QPJ_KEY(numerics, sweep_freq_max_GHz, false),
        QPJ_KEY(numerics, sweep_freq_points, false),
        QPJ_KEY(numerics, sweep_amp_min_mV, false),
        QPJ_KEY(numerics, sweep_amp_max_mV, false),
        QPJ_KEY(numerics, sweep_amp_points, false),
        QPJ_KEY(numerics, mc_trajectories, false),
        QPJ_KEY(numerics, mc_dt, false),
        QPJ_KEY(numerics, mc_kernel_band, false),
        QPJ_KEY(numerics, mc_noise_band, false),
        QPJ_KEY(numerics, mc_segments, false),
        QPJ_KEY(numerics, seed, false),
        QPJ_KEY(numerics, threads, false),
    };
#undef QPJ_KEY
    return keys;
}

inline bool is_count(double v) { return v >= 0.0 && std::floor(v) == v && v < 1e15; }

}  // namespace detail

inline void validate(const RunConfig& c) {
    std::vector<std::string> bad;
    auto need = [&](bool ok, const char* msg) {
        if (!ok) bad.emplace_back(msg);
    };
    need(c.junction.gap_left_meV > 0.0, "junction.gap_left_meV must be > 0");
    need(c.junction.gap_right_meV > 0.0, "junction.gap_right_meV must be > 0");
    need(c.junction.resistance_kohm > 0.0, "junction.resistance_kohm must be > 0");
    need(c.junction.temperature_K >= 0.0, "junction.temperature_K must be >= 0");
    need(c.junction.dynes_rate >= 0.0, "junction.dynes_rate must be >= 0");
    need(c.drive.amplitude_mV >= 0.0, "drive.amplitude_mV must be >= 0");
    need(c.drive.amplitude_mV == 0.0 || c.drive.frequency_GHz > 0.0, "drive.frequency_GHz must be > 0 when the amplitude is nonzero");
    need(std::isfinite(c.drive.phase_bias_pi), "drive.phase_bias_pi must be finite");
    need(c.circuit.capacitance_fF > 0.0, "circuit.capacitance_fF must be > 0");
    need(c.circuit.inductance_nH > 0.0, "circuit.inductance_nH must be > 0");
    need(c.circuit.coupling_capacitance_fF >= 0.0, "circuit.coupling_capacitance_fF must be >= 0");
    need(c.circuit.probe_impedance_ohm > 0.0, "circuit.probe_impedance_ohm must be > 0");
    const auto& n = c.numerics;
    need(n.grid_omega_max >= 0.0, "numerics.grid_omega_max must be >= 0");
    need(n.grid_spacing > 0.0, "numerics.grid_spacing must be > 0");
    need(n.grid_inner_extent > 0.0, "numerics.grid_inner_extent must be > 0");
    need(n.grid_outer_spacing > 0.0, "numerics.grid_outer_spacing must be > 0");
    need(n.quad_rel_tol > 0.0, "numerics.quad_rel_tol must be > 0");
    need(n.quad_cutoff > 2.0, "numerics.quad_cutoff must be > 2");
    need(n.admittance_omega_max > n.admittance_omega_min, "numerics.admittance_omega_max must exceed admittance_omega_min");
    need(detail::is_count(n.admittance_points) && n.admittance_points >= 2, "numerics.admittance_points must be an integer >= 2");
    need(std::floor(n.harmonic) == n.harmonic, "numerics.harmonic must be an integer");
    need(detail::is_count(n.spectrum_points) && n.spectrum_points >= 11, "numerics.spectrum_points must be an integer >= 11");
    need(n.spectrum_span > 0.0, "numerics.spectrum_span must be > 0");
    need(n.qtemp_lo_K > 0.0 && n.qtemp_hi_K > n.qtemp_lo_K, "numerics.qtemp bracket must satisfy 0 < lo < hi");
    need(n.qtemp_tol_K > 0.0, "numerics.qtemp_tol_K must be > 0");
    need(n.sweep_freq_min_GHz > 0.0 && n.sweep_freq_max_GHz >= n.sweep_freq_min_GHz, "numerics sweep frequency range invalid");
    need(n.sweep_amp_min_mV >= 0.0 && n.sweep_amp_max_mV >= n.sweep_amp_min_mV, "numerics sweep amplitude range invalid");
    need(detail::is_count(n.sweep_freq_points) && n.sweep_freq_points >= 1, "numerics.sweep_freq_points must be an integer >= 1");
    need(detail::is_count(n.sweep_amp_points) && n.sweep_amp_points >= 1, "numerics.sweep_amp_points must be an integer >= 1");
    need(detail::is_count(n.mc_trajectories) && n.mc_trajectories >= 1, "numerics.mc_trajectories must be an integer >= 1");
    need(n.mc_dt >= 0.0, "numerics.mc_dt must be >= 0");
    need(n.mc_kernel_band > 0.0, "numerics.mc_kernel_band must be > 0");
    need(n.mc_noise_band >= 0.0, "numerics.mc_noise_band must be >= 0");
    need(detail::is_count(n.mc_segments) && n.mc_segments >= 1, "numerics.mc_segments must be an integer >= 1");
    need(detail::is_count(n.seed), "numerics.seed must be a non-negative integer");
    need(detail::is_count(n.threads), "numerics.threads must be a non-negative integer");
    if (!bad.empty()) throw ValidationError(bad);
}

/// Parses INI text with sections [junction] [drive] [circuit] [numerics].
/// Unknown sections or keys and missing required keys are all reported together.
inline RunConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(e.what());
    }
    RunConfig c;
    std::vector<std::string> bad;
    const auto& keys = detail::config_keys();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            bad.push_back("key '" + section + "' outside a section");
            continue;
        }
        bool known_section = false;
        for (const auto& k : keys) known_section |= section == k.section;
        if (!known_section) {
            bad.push_back("unknown section [" + section + "]");
            continue;
        }
        for (const auto& [name, value] : body) {
            const detail::ConfigKey* key = nullptr;
            for (const auto& k : keys)
                if (section == k.section && name == k.name) key = &k;
            if (!key) {
                bad.push_back("unknown key " + section + "." + name);
                continue;
            }
            const std::string text = value.data();
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
            if (used == 0 || used != text.size() || !std::isfinite(v)) {
                bad.push_back(section + "." + name + ": not a number: '" + text + "'");
                continue;
            }
            key->field(c) = v;
        }
    }
    for (const auto& k : keys)
        if (k.required && !tree.get_child_optional(std::string(k.section) + "." + k.name))
            bad.push_back(std::string("missing required key ") + k.section + "." + k.name);
    if (!bad.empty()) throw ValidationError(bad);
    if (c.circuit.probe_temperature_K < 0.0) c.circuit.probe_temperature_K = c.junction.temperature_K;
    validate(c);
    return c;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

/// Canonical key=value listing; its FNV-1a hash tags every output file.
inline std::string canonical_config(const RunConfig& c) {
    RunConfig copy = c;
    std::string out;
    for (const auto& k : detail::config_keys())
        out += std::string(k.section) + "." + k.name + "=" + fmt_exact(k.field(copy)) + "\n";
    return out;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(canonical_config(c))); }

/// Physical parameters in reduced units (hbar = k_B = 1, energy Delta_Sigma,
/// conductance 1/R_J).
struct ReducedSetup {
    ReducedUnits units;
    JunctionParams junction;
    DriveParams drive;
    ResonatorCircuit circuit;
};

inline ReducedSetup to_reduced_units(const RunConfig& c) {
    const double mev = 1e-3 * si::electron_volt;
    const double gap_sum = (c.junction.gap_left_meV + c.junction.gap_right_meV) * mev;
    ReducedSetup r{ReducedUnits{gap_sum, c.junction.resistance_kohm * 1e3}, {}, {}, {}};
    const auto& u = r.units;
    const double t = u.kelvin_to_reduced(c.junction.temperature_K);
    r.junction.left = {c.junction.gap_left_meV * mev / gap_sum, c.junction.dynes_rate, t};
    r.junction.right = {c.junction.gap_right_meV * mev / gap_sum, c.junction.dynes_rate, t};
    r.junction.tunnel_resistance = u.resistance();
    r.drive.amplitude = u.volt_to_reduced_energy(c.drive.amplitude_mV * 1e-3);
    r.drive.drive_freq = u.hz_to_reduced(c.drive.frequency_GHz * 1e9);
    r.drive.phase_bias = c.drive.phase_bias_pi * std::numbers::pi;
    r.circuit.capacitance = c.circuit.capacitance_fF * 1e-15 / u.capacitance();
    r.circuit.inductance = c.circuit.inductance_nH * 1e-9 / u.inductance();
    r.circuit.coupling_capacitance = c.circuit.coupling_capacitance_fF * 1e-15 / u.capacitance();
    r.circuit.probe_impedance = c.circuit.probe_impedance_ohm / u.resistance();
    r.circuit.probe_temperature = u.kelvin_to_reduced(c.circuit.probe_temperature_K);
    return r;
}

/// Inverse of to_reduced_units for the physical sections; numerics are copied from `base`.
inline RunConfig to_si(const ReducedSetup& r, const RunConfig& base = {}) {
    RunConfig c = base;
    const auto& u = r.units;
    const double mev = 1e-3 * si::electron_volt;
    c.junction.gap_left_meV = r.junction.left.gap * u.energy() / mev;
    c.junction.gap_right_meV = r.junction.right.gap * u.energy() / mev;
    c.junction.resistance_kohm = u.resistance() * 1e-3;
    c.junction.temperature_K = u.reduced_to_kelvin(r.junction.left.temperature);
    c.junction.dynes_rate = r.junction.left.dynes_rate;
    c.drive.amplitude_mV = u.reduced_energy_to_volt(r.drive.amplitude) * 1e3;
    c.drive.frequency_GHz = u.reduced_to_hz(r.drive.drive_freq) * 1e-9;
    c.drive.phase_bias_pi = r.drive.phase_bias / std::numbers::pi;
    c.circuit.capacitance_fF = r.circuit.capacitance * u.capacitance() * 1e15;
    c.circuit.inductance_nH = r.circuit.inductance * u.inductance() * 1e9;
    c.circuit.coupling_capacitance_fF = r.circuit.coupling_capacitance * u.capacitance() * 1e15;
    c.circuit.probe_impedance_ohm = r.circuit.probe_impedance * u.resistance();
    c.circuit.probe_temperature_K = u.reduced_to_kelvin(r.circuit.probe_temperature);
    return c;
}

}  // namespace qpj

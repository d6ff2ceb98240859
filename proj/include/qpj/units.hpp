#pragma once

#include <cmath>
#include <numbers>

namespace qpj {

/// Exact SI values (2019 redefinition).
namespace si {
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double boltzmann = 1.380649e-23;            // J / K
inline constexpr double electron_volt = elementary_charge;   // J
/// Resistance quantum 2 pi hbar / (2e)^2, about 6.45 kOhm.
inline constexpr double resistance_quantum = planck / (4.0 * elementary_charge * elementary_charge);
}  // namespace si

/// Internal unit system: hbar = k_B = 1, energies in units of the summed gap
/// Delta_Sigma, conductances in units of 1/R_J. Everything inside the library
/// is expressed in these units; conversion happens only at the I/O boundary.
struct ReducedUnits {
    double gap_sum_joule;  // Delta_Sigma
    double resistance_ohm; // R_J

    double energy() const { return gap_sum_joule; }
    double time() const { return si::hbar / gap_sum_joule; }
    double angular_frequency() const { return gap_sum_joule / si::hbar; }
    double temperature_kelvin() const { return gap_sum_joule / si::boltzmann; }
    double resistance() const { return resistance_ohm; }
    double capacitance() const { return si::hbar / (gap_sum_joule * resistance_ohm); }
    double inductance() const { return si::hbar * resistance_ohm / gap_sum_joule; }
    double power() const { return gap_sum_joule * gap_sum_joule / si::hbar; }
    double flux() const { return std::sqrt(si::hbar * resistance_ohm); }
    double current() const { return gap_sum_joule / std::sqrt(si::hbar * resistance_ohm); }
    /// R_Q / R_J; the only place the elementary charge enters reduced formulas.
    double quantum_ratio() const { return si::resistance_quantum / resistance_ohm; }

    double hz_to_reduced(double f_hz) const { return 2.0 * std::numbers::pi * f_hz / angular_frequency(); }
    double reduced_to_hz(double omega) const { return omega * angular_frequency() / (2.0 * std::numbers::pi); }
    double kelvin_to_reduced(double t) const { return t / temperature_kelvin(); }
    double reduced_to_kelvin(double t) const { return t * temperature_kelvin(); }
    /// e V in units of Delta_Sigma for a voltage in volts.
    double volt_to_reduced_energy(double v) const { return si::elementary_charge * v / gap_sum_joule; }
    double reduced_energy_to_volt(double ev) const { return ev * gap_sum_joule / si::elementary_charge; }
};

}  // namespace qpj

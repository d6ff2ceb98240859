#pragma once

#include <cmath>
#include <complex>

namespace qpj {

using cplx = std::complex<double>;

/// Substituted for a configured Dynes rate of exactly zero (units Delta_Sigma/hbar).
inline constexpr double kDynesFloor = 1e-6;

/// One superconducting lead. All quantities in reduced units.
struct LeadParams {
    double gap = 0.5;
    double dynes_rate = 0.0;
    double temperature = 0.0;

    double effective_dynes() const { return dynes_rate > 0.0 ? dynes_rate : kDynesFloor; }
};

/// Normal (g) and anomalous (f) quasiclassical Green's function components.
struct GreensValue {
    cplx g;
    cplx f;
};

/// Fermi-Dirac occupation; exact step at zero temperature.
inline double occupation(const LeadParams& lead, double energy) {
    if (lead.temperature <= 0.0) {
        if (energy < 0.0) return 1.0;
        if (energy > 0.0) return 0.0;
        return 0.5;
    }
    const double x = energy / lead.temperature;
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

/// 1 - 2 n(energy), evaluated as tanh to avoid cancellation.
inline double distribution_factor(const LeadParams& lead, double energy) {
    if (lead.temperature <= 0.0) return energy > 0.0 ? 1.0 : (energy < 0.0 ? -1.0 : 0.0);
    return std::tanh(0.5 * energy / lead.temperature);
}

/// coth(x) with the Laurent series 1/x + x/3 near the pole.
inline double coth_safe(double x) {
    constexpr double x_min = 1e-4;
    if (std::abs(x) <= x_min) return 1.0 / x + x / 3.0;
    if (std::abs(x) > 20.0) return x > 0.0 ? 1.0 : -1.0;
    return 1.0 / std::tanh(x);
}

/// Thermal factor coth(omega / 2T); sign(omega) at T = 0.
inline double thermal_coth(double omega, double temperature) {
    if (temperature <= 0.0) return omega > 0.0 ? 1.0 : (omega < 0.0 ? -1.0 : 0.0);
    return coth_safe(0.5 * omega / temperature);
}

namespace detail {
inline GreensValue bcs_green(const LeadParams& lead, double omega, double sign) {
    const cplx z{omega, sign * lead.effective_dynes()};
    const cplx root = std::sqrt(cplx{lead.gap * lead.gap, 0.0} - z * z);
    return {-z / root, -lead.gap / root};
}
}  // namespace detail

inline GreensValue green_retarded(const LeadParams& lead, double omega) {
    return detail::bcs_green(lead, omega, +1.0);
}

inline GreensValue green_advanced(const LeadParams& lead, double omega) {
    return detail::bcs_green(lead, omega, -1.0);
}

inline GreensValue green_keldysh(const LeadParams& lead, double omega) {
    const GreensValue r = green_retarded(lead, omega);
    const double h = distribution_factor(lead, omega);
    // g^A = conj(g^R) on the real axis, so g^R - g^A = 2i Im g^R.
    return {cplx{0.0, 2.0 * r.g.imag() * h}, cplx{0.0, 2.0 * r.f.imag() * h}};
}

}  // namespace qpj

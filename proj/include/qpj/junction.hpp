#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qpj/errors.hpp"
#include "qpj/polarization.hpp"

namespace qpj {

/// Harmonic phase drive phi0 + 2x sin(Omega t). `amplitude` is eV0 in units of
/// Delta_Sigma, `drive_freq` the reduced angular frequency Omega.
struct DriveParams {
    double phase_bias = 0.0;
    double amplitude = 0.0;
    double drive_freq = 0.0;

    void validate() const {
        std::vector<std::string> bad;
        if (!(amplitude >= 0.0)) bad.push_back("drive amplitude must be >= 0");
        if (amplitude > 0.0 && !(drive_freq > 0.0)) bad.push_back("drive frequency must be > 0 when the amplitude is nonzero");
        if (!std::isfinite(phase_bias)) bad.push_back("phase bias must be finite");
        if (!bad.empty()) throw ValidationError(bad);
    }

    /// Drive index eV0 / (hbar Omega).
    double index() const { return amplitude == 0.0 ? 0.0 : amplitude / drive_freq; }
};

/// Integer-order Bessel function with the reflection rules for negative order and argument.
inline double bessel_j(int n, double x) {
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        if (n % 2) sign = -sign;
    }
    if (x < 0.0) {
        x = -x;
        if (n % 2) sign = -sign;
    }
    if (x == 0.0) return n == 0 ? sign : 0.0;
    return sign * std::cyl_bessel_j(static_cast<double>(n), x);
}

/// c_n = exp(i phi0 / 2) J_n(-x).
inline cplx fourier_coeff(const DriveParams& d, int n) {
    return std::polar(1.0, 0.5 * d.phase_bias) * bessel_j(n, -d.index());
}

/// Sideband cutoff: beyond ceil(x + 10 x^{1/3} + 12) the Bessel weights are negligible.
inline int harmonic_cutoff(double x) {
    x = std::abs(x);
    if (x == 0.0) return 0;
    return static_cast<int>(std::ceil(x + 10.0 * std::cbrt(x) + 12.0));
}

/// Collects non-fatal diagnostics such as sideband truncation.
struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string w) {
        for (const auto& x : warnings)
            if (x == w) return;
        warnings.push_back(std::move(w));
    }
};

inline void check_truncation(const DriveParams& d, Diagnostics* diag) {
    if (!diag) return;
    const int nmax = harmonic_cutoff(d.index());
    if (nmax == 0) return;
    const double tail = std::norm(fourier_coeff(d, nmax));
    if (tail > 1e-12) diag->warn("TruncationWarning: |c_Nmax|^2 = " + std::to_string(tail) + " exceeds 1e-12");
}

/// Y_J(omega) = (i/omega)[Pi~_n(omega, 0) + Pi~_s(omega, 0) cos phi0] in units of 1/R_J.
inline cplx static_admittance(const PolarizationTable& t, double phase_bias, double omega) {
    if (omega == 0.0) throw ValidationError({"admittance is singular at omega = 0; use inverse_inductance"});
    const cplx pn = pi_tilde(t, omega, 0.0, PiKind::normal);
    const cplx ps = pi_tilde(t, omega, 0.0, PiKind::anomalous);
    return cplx{0.0, 1.0 / omega} * (pn + ps * std::cos(phase_bias));
}

/// Harmonic n of the driven admittance, linking probe frequency omega to the
/// response at omega + n Omega.
inline cplx driven_admittance(const PolarizationTable& t, const DriveParams& d, int n, double omega,
                              Diagnostics* diag = nullptr) {
    if (omega == 0.0) throw ValidationError({"admittance is singular at omega = 0; use inverse_inductance"});
    check_truncation(d, diag);
    const int nmax = harmonic_cutoff(d.index());
    const double big_omega = d.drive_freq;
    std::vector<cplx> c(static_cast<std::size_t>(4 * nmax + 1));
    auto coeff = [&](int k) -> cplx {
        if (std::abs(k) > 2 * nmax) return 0.0;
        return c[static_cast<std::size_t>(k + 2 * nmax)];
    };
    for (int k = -2 * nmax; k <= 2 * nmax; ++k) c[static_cast<std::size_t>(k + 2 * nmax)] = fourier_coeff(d, k);

    cplx acc = 0.0;
    for (int np = -nmax; np <= nmax; ++np) {
        const cplx a = coeff(np), b = std::conj(coeff(-np));
        if (a == 0.0 && b == 0.0) continue;
        const cplx left0 = std::conj(coeff(np - n)), left1 = coeff(n - np);
        if (left0 == 0.0 && left1 == 0.0) continue;
        const double shift = np * big_omega;
        const cplx pn = pi_tilde(t, omega, shift, PiKind::normal);
        const cplx ps = pi_tilde(t, omega, shift, PiKind::anomalous);
        acc += left0 * (pn * a + ps * b) + left1 * (ps * a + pn * b);
    }
    return cplx{0.0, 0.5 / omega} * acc;
}

/// Coefficient r of the inductive pole Y_{J,0} ~ i r / omega, i.e. the
/// effective inverse Josephson inductance (in reduced units).
inline double inverse_inductance(const PolarizationTable& t, const DriveParams& d) {
    const int nmax = harmonic_cutoff(d.index());
    double acc = 0.0;
    for (int np = -nmax; np <= nmax; ++np) {
        const double w = (fourier_coeff(d, np) * fourier_coeff(d, -np)).real();
        if (w == 0.0) continue;
        acc += t.retarded(np * d.drive_freq).s.real() * w;
    }
    return 0.5 * acc;
}

/// Y_{J,n} as a function of probe frequency, bound to a table and drive.
struct AdmittanceHarmonic {
    int n = 0;
    std::function<cplx(double)> value;
};

inline AdmittanceHarmonic admittance_harmonic(const PolarizationTable& t, const DriveParams& d, int n) {
    return {n, [&t, d, n](double omega) { return driven_admittance(t, d, n, omega); }};
}

/// dc Josephson current in units of Delta_Sigma / (2 e R_J).
inline double dc_josephson_current(const PolarizationTable& t, double phase_bias) {
    return 0.5 * t.retarded(0.0).s.real() * std::sin(phase_bias);
}

/// Complex amplitudes I_n of the drive-only current I(t) = sum_n I_n exp(-i n Omega t),
/// for n in [-n_range, n_range], in units of Delta_Sigma / (2 e R_J).
inline std::vector<cplx> drive_current_harmonics(const PolarizationTable& t, const DriveParams& d, int n_range) {
    const int nmax = harmonic_cutoff(d.index());
    auto amp = [&](int n) {
        cplx a = 0.0;
        for (int np = -nmax; np <= nmax; ++np) {
            const cplx c = fourier_coeff(d, np);
            if (c == 0.0) continue;
            const auto p = t.retarded(np * d.drive_freq);
            a += c * (fourier_coeff(d, n - np) * p.s + std::conj(fourier_coeff(d, np - n)) * p.n);
        }
        return a;
    };
    std::vector<cplx> out;
    for (int n = -n_range; n <= n_range; ++n) out.push_back((amp(n) - std::conj(amp(-n))) / cplx{0.0, 4.0});
    return out;
}

/// Josephson energy in units of Delta_Sigma; `quantum_ratio` is R_Q / R_J with R_Q = h / 4e^2.
inline double josephson_energy(const PolarizationTable& t, double quantum_ratio) {
    return quantum_ratio * t.retarded(0.0).s.real() / (4.0 * std::numbers::pi);
}

}  // namespace qpj

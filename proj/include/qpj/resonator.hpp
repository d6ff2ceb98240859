#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "qpj/errors.hpp"
#include "qpj/junction.hpp"
#include "qpj/parallel.hpp"
#include "qpj/quadrature.hpp"

namespace qpj {

/// LC resonator shunted by the junction, weakly coupled to a probe line.
/// All fields in reduced units.
struct ResonatorCircuit {
    double inductance = 0.0;
    double capacitance = 0.0;
    double coupling_capacitance = 0.0;
    double probe_impedance = 0.0;
    double probe_temperature = 0.0;

    void validate() const {
        std::vector<std::string> bad;
        if (!(inductance > 0.0)) bad.push_back("resonator inductance must be > 0");
        if (!(capacitance > 0.0)) bad.push_back("resonator capacitance must be > 0");
        if (!(coupling_capacitance >= 0.0)) bad.push_back("coupling capacitance must be >= 0");
        if (!(probe_impedance > 0.0)) bad.push_back("probe impedance must be > 0");
        if (!(probe_temperature >= 0.0)) bad.push_back("probe temperature must be >= 0");
        if (!bad.empty()) throw ValidationError(bad);
    }

    double bare_frequency() const { return 1.0 / std::sqrt(inductance * capacitance); }
    double impedance() const { return std::sqrt(inductance / capacitance); }
    /// Z_r << R_Q, taken as Z_r < R_Q / 10. `quantum_ratio` is R_Q / R_J.
    bool low_impedance(double quantum_ratio) const { return impedance() < 0.1 * quantum_ratio; }
};

/// omega * Y_{J,0}(omega), finite at omega = 0 where it equals i / L_J,eff.
inline cplx omega_admittance(const PolarizationTable& t, const DriveParams& d, double omega) {
    if (omega == 0.0) return {0.0, inverse_inductance(t, d)};
    return omega * driven_admittance(t, d, 0, omega);
}

/// L / (omega^2 L C + i L (omega Y) - 1) for a given omega * Y.
inline cplx resonator_green(const ResonatorCircuit& c, double omega, cplx omega_y) {
    const double l = c.inductance;
    return l / (omega * omega * l * c.capacitance + cplx{0.0, 1.0} * l * omega_y - 1.0);
}

inline cplx g_retarded_res(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, double omega) {
    return resonator_green(c, omega, omega_admittance(t, d, omega));
}

inline cplx g_advanced_res(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, double omega) {
    return std::conj(g_retarded_res(c, t, d, omega));
}

/// Drive-averaged junction noise entering the flux correlator:
/// sum_{n'} [c*_{n'-n}, c_{n-n'}] Pi^K(omega + n' Omega) [c_{n'}; c*_{-n'}]
/// with Pi_n^K on the diagonal and Pi_s^K off it.
inline cplx keldysh_noise_form(const PolarizationTable& t, const DriveParams& d, int n, double omega) {
    const int nmax = harmonic_cutoff(d.index());
    cplx acc = 0.0;
    for (int np = -nmax; np <= nmax; ++np) {
        const cplx a = fourier_coeff(d, np), b = std::conj(fourier_coeff(d, -np));
        const cplx l0 = std::conj(fourier_coeff(d, np - n)), l1 = fourier_coeff(d, n - np);
        if ((a == 0.0 && b == 0.0) || (l0 == 0.0 && l1 == 0.0)) continue;
        const auto k = t.keldysh(omega + np * d.drive_freq);
        acc += l0 * (k.n * a + k.s * b) + l1 * (k.s * a + k.n * b);
    }
    return acc;
}

inline cplx g_keldysh_res(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, int n,
                          double omega) {
    const cplx gr = g_retarded_res(c, t, d, omega + n * d.drive_freq);
    const cplx ga = g_advanced_res(c, t, d, omega);
    return gr * ga * keldysh_noise_form(t, d, n, omega) / 16.0;
}

/// Transmission to second order in the coupling capacitance.
inline cplx s21_from_green(const ResonatorCircuit& c, double omega, cplx g_ret) {
    const double a = omega * c.probe_impedance * c.coupling_capacitance;
    const cplx i{0.0, 1.0};
    return 1.0 + 0.5 * i * a - 0.25 * a * a -
           0.5 * i * omega * omega * omega * c.probe_impedance * c.coupling_capacitance * c.coupling_capacitance * g_ret;
}

inline cplx s21(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, double omega) {
    return s21_from_green(c, omega, g_retarded_res(c, t, d, omega));
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectralResult {
    std::vector<double> grid;
    std::vector<cplx> g_ret;
    std::vector<cplx> g_kel;
    double stark_freq = std::numeric_limits<double>::quiet_NaN();
    double linewidth = std::numeric_limits<double>::quiet_NaN();
    double kolmogorov = std::numeric_limits<double>::quiet_NaN();
    bool non_lorentzian = false;
};

/// Resonance estimate: the zero of Re D(omega), D = omega^2 L C + i L omega Y - 1,
/// next to the bare pole (which includes the junction inductance).
inline double resonance_root(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d) {
    const double inv_l = 1.0 / c.inductance + inverse_inductance(t, d);
    if (!(inv_l > 0.0)) throw ResonanceNotFound("effective inductance is not positive");
    const double w0 = std::sqrt(inv_l / c.capacitance);
    auto re_d = [&](double w) {
        const cplx wy = omega_admittance(t, d, w);
        return w * w * c.inductance * c.capacitance - c.inductance * wy.imag() - 1.0;
    };
    double lo = w0, hi = w0;
    double flo = re_d(lo), fhi = flo;
    if (flo == 0.0) return w0;
    for (int k = 1; k <= 60 && flo * fhi > 0.0; ++k) {
        const double step = w0 * 0.005 * k;
        lo = std::max(w0 - step, 1e-3 * w0);
        hi = w0 + step;
        flo = re_d(lo);
        fhi = re_d(hi);
        if (flo * re_d(w0) <= 0.0) {
            hi = w0;
            fhi = re_d(w0);
            break;
        }
        if (fhi * re_d(w0) <= 0.0) {
            lo = w0;
            flo = re_d(w0);
            break;
        }
    }
    if (flo * fhi > 0.0) throw ResonanceNotFound("no zero of Re D near the bare resonance");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = re_d(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Rough decay rate Re Y(omega) / C at the resonance, floored so it can size grids.
inline double linewidth_estimate(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d,
                                 double omega_res) {
    const double g = driven_admittance(t, d, 0, omega_res).real() / c.capacitance;
    return std::max(std::abs(g), 1e-12 * omega_res);
}

inline SpectralResult compute_spectrum(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d,
                                       std::vector<double> grid, bool with_keldysh = true, unsigned threads = 1) {
    SpectralResult r;
    r.grid = std::move(grid);
    r.g_ret.resize(r.grid.size());
    if (with_keldysh) r.g_kel.resize(r.grid.size());
    parallel_for(r.grid.size(), resolve_threads(threads), [&](std::size_t i) {
        r.g_ret[i] = g_retarded_res(c, t, d, r.grid[i]);
        if (with_keldysh) r.g_kel[i] = g_keldysh_res(c, t, d, 0, r.grid[i]);
    });
    return r;
}

/// Frequency of the dominant extremum of |Im G^R|, refined by a parabola through
/// the three samples around it.
inline double stark_shifted_freq(const SpectralResult& s) {
    const std::size_t n = s.grid.size();
    if (n < 3) throw ResonanceNotFound("spectrum has fewer than three points");
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(s.g_ret[i].imag()) > std::abs(s.g_ret[best].imag())) best = i;
    if (best == 0 || best + 1 == n) throw ResonanceNotFound("|Im G^R| peaks at the edge of the spectral window");
    const double x0 = s.grid[best - 1], x1 = s.grid[best], x2 = s.grid[best + 1];
    const double y0 = std::abs(s.g_ret[best - 1].imag()), y1 = std::abs(s.g_ret[best].imag()),
                 y2 = std::abs(s.g_ret[best + 1].imag());
    const double d1 = (y1 - y0) / (x1 - x0), d2 = (y2 - y1) / (x2 - x1);
    const double curv = (d2 - d1) / (x2 - x0);
    if (curv >= 0.0) return x1;
    const double xv = 0.5 * (x0 + x1) - d1 / (2.0 * curv);
    return std::clamp(xv, x0, x2);
}

struct LineShape {
    double fwhm = 0.0;
    double center = 0.0;
    /// Sup distance between the normalized cumulative line shape and that of
    /// the Lorentzian with the same center and width, over the window.
    double kolmogorov = 0.0;
    bool non_lorentzian = false;
};

inline LineShape line_shape(const SpectralResult& s, double flag_threshold = 0.05) {
    const double center = stark_shifted_freq(s);
    const std::size_t n = s.grid.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::abs(s.g_ret[i].imag());
    const std::size_t peak = static_cast<std::size_t>(
        std::lower_bound(s.grid.begin(), s.grid.end(), center) - s.grid.begin());
    const std::size_t ip = std::min(peak, n - 1);
    double ymax = y[ip];
    if (ip > 0) ymax = std::max(ymax, y[ip - 1]);
    const double half = 0.5 * ymax;
    auto crossing = [&](std::size_t from, int dir) {
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(from);
        while (true) {
            const std::ptrdiff_t j = i + dir;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) throw ResonanceNotFound("half maximum not reached in window");
            if (y[static_cast<std::size_t>(j)] <= half) {
                const double ya = y[static_cast<std::size_t>(i)], yb = y[static_cast<std::size_t>(j)];
                const double xa = s.grid[static_cast<std::size_t>(i)], xb = s.grid[static_cast<std::size_t>(j)];
                return xa + (ya - half) / (ya - yb) * (xb - xa);
            }
            i = j;
        }
    };
    std::size_t top = ip;
    if (ip > 0 && y[ip - 1] > y[ip]) top = ip - 1;
    const double right = crossing(top, +1), left = crossing(top, -1);
    LineShape out;
    out.fwhm = right - left;
    out.center = center;

    // Cumulative shapes over the window, trapezoid for the data.
    const double g2 = 0.5 * out.fwhm;
    auto lor_cdf = [&](double x) { return std::atan((x - center) / g2); };
    const double l0 = lor_cdf(s.grid.front()), l1 = lor_cdf(s.grid.back());
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (y[i] + y[i - 1]) * (s.grid[i] - s.grid[i - 1]);
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dist = std::max(dist, std::abs(cum[i] / cum.back() - (lor_cdf(s.grid[i]) - l0) / (l1 - l0)));
    out.kolmogorov = dist;
    out.non_lorentzian = dist > flag_threshold;
    return out;
}

inline double linewidth(const SpectralResult& s) { return line_shape(s).fwhm; }

/// Spectrum on a uniform window of +-`span` estimated linewidths around the
/// resonance, widened until the half maximum is bracketed, with stark
/// frequency and line shape filled in.
inline SpectralResult resonance_spectrum(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d,
                                         std::size_t points = 2001, double span = 20.0, bool with_keldysh = false,
                                         unsigned threads = 1) {
    const double w0 = resonance_root(c, t, d);
    double width = span * linewidth_estimate(c, t, d, w0);
    for (int attempt = 0; attempt < 12; ++attempt) {
        std::vector<double> g(points);
        const double lo = std::max(w0 - width, 0.5 * w0);
        const double hi = w0 + width;
        for (std::size_t i = 0; i < points; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        auto s = compute_spectrum(c, t, d, std::move(g), with_keldysh, threads);
        try {
            const auto shape = line_shape(s);
            // A resonance narrower than a few grid steps is re-sampled.
            const double step = (hi - lo) / static_cast<double>(points - 1);
            if (shape.fwhm < 20.0 * step && attempt < 11) {
                width = std::max(span * shape.fwhm, 1e-15 * w0);
                continue;
            }
            s.stark_freq = shape.center;
            s.linewidth = shape.fwhm;
            s.kolmogorov = shape.kolmogorov;
            s.non_lorentzian = shape.non_lorentzian;
            return s;
        } catch (const ResonanceNotFound&) {
            width *= 3.0;
        }
    }
    throw ResonanceNotFound("could not bracket the resonance line");
}

// ---------------------------------------------------------------------------
// Heat flow and quasitemperature

struct HeatPowerOptions {
    double rel_tol = 1e-8;
    std::size_t max_panels = 20000;
};

/// Noise- and period-averaged heat flow from the probe line into the
/// resonator as a function of the probe temperature. The frequency panels are
/// found once and reused for every probe temperature.
class HeatPower {
public:
    HeatPower(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, HeatPowerOptions opt = {})
        : c_(c), t_(t), d_(d), opt_(opt) {
        const int nmax = harmonic_cutoff(d.index());
        const double gap = t.junction().gap_sum();
        omega_cut_ = gap + (nmax + 2) * d.drive_freq;
        omega_res_ = resonance_root(c, t, d);
        const double g = linewidth_estimate(c, t, d, omega_res_);

        std::vector<double> pts{0.0, omega_cut_, omega_res_};
        for (double k = 0.5; k < 1e9 && k * g < 0.5 * omega_res_; k *= 4.0) {
            pts.push_back(omega_res_ - k * g);
            pts.push_back(omega_res_ + k * g);
        }
        for (int n = -nmax - 2; n <= nmax + 2; ++n)
            for (double e : {gap, -gap}) {
                const double w = e + n * d.drive_freq;
                if (w > 0.0 && w < omega_cut_) pts.push_back(w);
            }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

        QuadratureOptions q;
        q.rel_tol = opt.rel_tol;
        q.abs_tol = 0.0;
        q.max_panels = opt.max_panels;
        const double t_ref = t.junction().temperature() > 0.0 ? t.junction().temperature() : 0.01;
        auto f = [&](double w) -> Vec<2> {
            const auto [k, r] = parts(w);
            return {k, r * thermal_coth(w, t_ref)};
        };
        const auto res = integrate<2>(f, pts, q, &panels_);
        keldysh_part_ = 2.0 * res.value[0] * prefactor();
    }

    /// Power in reduced units (Delta_Sigma^2 / hbar).
    double operator()(double t_probe) const {
        if (!(t_probe > 0.0)) throw ValidationError({"probe temperature must be > 0"});
        auto f = [&](double w) -> Vec<1> { return {parts(w)[1] * thermal_coth(w, t_probe)}; };
        const auto r = integrate_on_panels<1>(f, panels_);
        return keldysh_part_ - 2.0 * r[0] * prefactor();
    }

    double omega_cut() const { return omega_cut_; }
    double resonance() const { return omega_res_; }

private:
    // Returns {Im G^K omega^4, Im G^R omega^4} at omega.
    std::array<double, 2> parts(double w) const {
        const cplx wy = omega_admittance(t_, d_, w);
        const cplx gr = resonator_green(c_, w, wy);
        const cplx gk = std::norm(gr) * keldysh_noise_form(t_, d_, 0, w) / 16.0;
        const double w4 = w * w * w * w;
        return {gk.imag() * w4, gr.imag() * w4};
    }
    double prefactor() const {
        return c_.coupling_capacitance * c_.coupling_capacitance * c_.probe_impedance / 2.0 / (2.0 * std::numbers::pi);
    }

    ResonatorCircuit c_;
    const PolarizationTable& t_;
    DriveParams d_;
    HeatPowerOptions opt_;
    double omega_cut_ = 0.0;
    double omega_res_ = 0.0;
    double keldysh_part_ = 0.0;
    std::vector<Panel> panels_;
};

inline double heat_power(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d, double t_probe,
                         HeatPowerOptions opt = {}) {
    return HeatPower(c, t, d, opt)(t_probe);
}

struct QuasitemperatureOptions {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double tol = 0.0;
    HeatPowerOptions power{};
};

/// Probe temperature at which the heat flow into the resonator vanishes (bisection).
inline double quasitemperature(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d,
                               const QuasitemperatureOptions& opt) {
    HeatPower p(c, t, d, opt.power);
    double lo = opt.t_lo, hi = opt.t_hi;
    double plo = p(lo), phi = p(hi);
    if (!(plo < 0.0 && phi > 0.0)) {
        std::ostringstream os;
        os << "heat flow does not change sign on the bracket: P(lo) = " << plo << ", P(hi) = " << phi;
        throw NoSignChange(os.str(), plo, phi);
    }
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        const double pm = p(mid);
        if (pm < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct SweepPoint {
    double drive_freq = 0.0;
    double amplitude = 0.0;
    double quasitemperature = std::numeric_limits<double>::quiet_NaN();
    double linewidth = std::numeric_limits<double>::quiet_NaN();
    double stark_freq = std::numeric_limits<double>::quiet_NaN();
    bool non_lorentzian = false;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<SweepPoint> points;
};

/// Quasitemperature and linewidth over a (drive frequency, amplitude) grid.
/// `table_for` maps a drive to the polarization table to use; failures are
/// recorded per point.
template <class TableFor>
SweepResult sweep_map(const ResonatorCircuit& c, TableFor&& table_for, const std::vector<double>& drive_freqs,
                      const std::vector<double>& amplitudes, double phase_bias, const QuasitemperatureOptions& opt,
                      unsigned threads = 0) {
    SweepResult r;
    for (double a : amplitudes)
        for (double w : drive_freqs) r.points.push_back({w, a});
    parallel_for(r.points.size(), resolve_threads(threads), [&](std::size_t i) {
        auto& pt = r.points[i];
        const DriveParams d{phase_bias, pt.amplitude, pt.drive_freq};
        try {
            const PolarizationTable& t = table_for(d);
            const auto s = resonance_spectrum(c, t, d);
            pt.linewidth = s.linewidth;
            pt.stark_freq = s.stark_freq;
            pt.non_lorentzian = s.non_lorentzian;
            pt.quasitemperature = quasitemperature(c, t, d, opt);
        } catch (const Error& e) {
            pt.status = e.kind();
        }
    });
    return r;
}

/// Drive frequency where sign * w~_r + photons * Omega equals the gap sum,
/// found by fixed-point iteration on the drive-dependent resonance.
inline double photon_assisted_resonance(const ResonatorCircuit& c, const PolarizationTable& t, double amplitude,
                                        double phase_bias, int photons, int sign, double tol = 1e-12) {
    const double gap = t.junction().gap_sum();
    double w = c.bare_frequency();
    double big = (gap - sign * w) / photons;
    for (int it = 0; it < 100; ++it) {
        w = resonance_root(c, t, DriveParams{phase_bias, amplitude, big});
        const double next = (gap - sign * w) / photons;
        if (std::abs(next - big) < tol * big) return next;
        big = next;
    }
    throw ResonanceNotFound("drive-frequency iteration for the photon-assisted resonance did not settle");
}

/// Largest |omega| a table must cover for heat-power evaluation at this drive.
inline double required_table_extent(const DriveParams& d, double gap_sum = 1.0) {
    const int nmax = harmonic_cutoff(d.index());
    return gap_sum + (2 * nmax + 2) * d.drive_freq + 0.5;
}

}  // namespace qpj

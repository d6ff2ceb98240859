#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qpj/errors.hpp"
#include "qpj/junction.hpp"
#include "qpj/resonator.hpp"

namespace qpj {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place complex DFT. FFTW_FORWARD computes sum_j a_j exp(-2 pi i jk / N).
inline void dft(std::vector<cplx>& a, int sign) {
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(a.size()), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Factor of a 2x2 Hermitian PSD matrix [[a, b], [conj b, d]]: M with M M^H = S.
// Small negative eigenvalues (relative to the trace) are clamped.
inline std::array<cplx, 4> hermitian_sqrt2(double a, cplx b, double d, double clamp_tol) {
    const double tr = a + d;
    const double half_diff = 0.5 * (a - d);
    const double rad = std::sqrt(half_diff * half_diff + std::norm(b));
    double l1 = 0.5 * tr + rad, l2 = 0.5 * tr - rad;
    const double scale = std::max(std::abs(tr), std::numeric_limits<double>::min());
    if (l2 < -clamp_tol * scale || l1 < -clamp_tol * scale) {
        std::ostringstream os;
        os << "noise covariance has eigenvalue " << l2 << " (trace " << tr << ")";
        throw NotPositiveSemidefinite(os.str());
    }
    l1 = std::max(l1, 0.0);
    l2 = std::max(l2, 0.0);
    // Eigenvectors of the Hermitian 2x2.
    cplx v1a, v1b, v2a, v2b;
    if (std::abs(b) > 0.0) {
        v1a = b;
        v1b = cplx(0.5 * tr + rad - a);
        const double n1 = std::sqrt(std::norm(v1a) + std::norm(v1b));
        v1a /= n1;
        v1b /= n1;
        v2a = -std::conj(v1b);
        v2b = std::conj(v1a);
    } else {
        // diagonal: factor each axis separately
        v1a = 1.0;
        v1b = 0.0;
        v2a = 0.0;
        v2b = 1.0;
        l1 = std::max(a, 0.0);
        l2 = std::max(d, 0.0);
    }
    const double s1 = std::sqrt(l1), s2 = std::sqrt(l2);
    return {v1a * s1, v2a * s2, v1b * s1, v2b * s2};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Noise model and synthesis

/// Spectra of the complex junction noise: s_xx for <xi*(t) xi(t')> and s_xy for
/// <xi(t) xi(t')>, tabulated on an ascending frequency grid, zero outside it.
struct NoiseSpectralModel {
    std::vector<double> grid;
    std::vector<double> s_xx;
    std::vector<cplx> s_xy;
    DriveParams drive;

    double band_limit() const { return grid.empty() ? 0.0 : std::min(-grid.front(), grid.back()); }

    std::pair<double, cplx> at(double w) const {
        if (grid.size() < 2 || w < grid.front() || w > grid.back()) return {0.0, 0.0};
        auto it = std::upper_bound(grid.begin(), grid.end(), w);
        std::size_t i = it == grid.end() ? grid.size() - 2 : static_cast<std::size_t>(it - grid.begin()) - 1;
        i = std::min(i, grid.size() - 2);
        const double f = (w - grid[i]) / (grid[i + 1] - grid[i]);
        return {s_xx[i] + f * (s_xx[i + 1] - s_xx[i]), s_xy[i] + f * (s_xy[i + 1] - s_xy[i])};
    }
};

inline std::vector<double> symmetric_grid(double w_max, std::size_t half_points) {
    std::vector<double> g;
    for (std::size_t k = 0; k <= 2 * half_points; ++k)
        g.push_back(-w_max + w_max * static_cast<double>(k) / static_cast<double>(half_points));
    g[half_points] = 0.0;
    return g;
}

/// s_xx = i Pi_n^K, s_xy = -i Pi_s^K from the table, with the per-frequency
/// covariance of (xi(w), xi*(-w)) checked for positive semidefiniteness.
inline NoiseSpectralModel build_noise_model(const PolarizationTable& t, const DriveParams& d, std::vector<double> grid,
                                            double clamp_tol = 1e-10) {
    NoiseSpectralModel m;
    m.grid = std::move(grid);
    m.drive = d;
    m.s_xx.resize(m.grid.size());
    m.s_xy.resize(m.grid.size());
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const auto k = t.keldysh(m.grid[i]);
        m.s_xx[i] = (cplx{0.0, 1.0} * k.n).real();
        m.s_xy[i] = cplx{0.0, -1.0} * k.s;
    }
    for (double w : m.grid) {
        const auto [a_minus, b] = m.at(-w);
        const auto [a_plus, b_plus] = m.at(w);
        (void)b_plus;
        detail::hermitian_sqrt2(a_minus, b, a_plus, clamp_tol);
    }
    return m;
}

/// Stationary complex Gaussian series with the model's correlators, built per
/// frequency-bin pair (k, -k) from a 2x2 factorization and one inverse DFT.
inline std::vector<cplx> synthesize_noise(const NoiseSpectralModel& m, std::size_t n, double dt, std::uint64_t seed,
                                          double clamp_tol = 1e-10) {
    if (!(dt > 0.0) || m.band_limit() > std::numbers::pi / dt * (1.0 + 1e-12))
        throw ValidationError({"noise time step must resolve the model band: dt <= pi / omega_max"});
    std::vector<cplx> x(n, 0.0);
    if (n == 0) return x;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    auto unit = [&] {
        const double re = normal(rng);
        return cplx{re, normal(rng)} * inv_sqrt2;
    };
    const double total = static_cast<double>(n) * dt;
    const double dw = 2.0 * std::numbers::pi / total;
    auto self_paired = [&](std::size_t k, double w) {
        const auto [p, q] = m.at(w);
        const double qr = q.real();
        // X = a + ib with <a^2> = (P + Q)/2, <b^2> = (P - Q)/2.
        const double va = std::max(0.5 * (p + qr) / total, 0.0), vb = std::max(0.5 * (p - qr) / total, 0.0);
        if ((p - std::abs(qr)) < -clamp_tol * std::abs(p)) throw NotPositiveSemidefinite("noise covariance at a self-paired bin");
        x[k] = cplx{std::sqrt(va) * normal(rng), std::sqrt(vb) * normal(rng)};
    };
    self_paired(0, 0.0);
    const std::size_t half = (n - 1) / 2;
    for (std::size_t k = 1; k <= half; ++k) {
        const double w = dw * static_cast<double>(k);
        const auto [a_minus, b_minus] = m.at(-w);
        const auto [a_plus, b_plus] = m.at(w);
        const cplx q = 0.5 * (b_minus + b_plus) / total;
        const auto f = detail::hermitian_sqrt2(a_minus / total, q, a_plus / total, clamp_tol);
        const cplx u1 = unit(), u2 = unit();
        x[k] = f[0] * u1 + f[1] * u2;
        x[n - k] = std::conj(f[2] * u1 + f[3] * u2);
    }
    if (n % 2 == 0) self_paired(n / 2, std::numbers::pi / dt);
    detail::dft(x, FFTW_FORWARD);
    return x;
}

/// Noise current I(t) = Im(xi(t) exp(-i phi_d(t)/2)) / 2 entering the resonator
/// equation; `t0` shifts the drive phase origin.
inline std::vector<double> noise_current(const std::vector<cplx>& xi, const DriveParams& d, double dt, double t0 = 0.0) {
    std::vector<double> out(xi.size());
    const double x = d.index();
    for (std::size_t j = 0; j < xi.size(); ++j) {
        const double t = t0 + dt * static_cast<double>(j);
        const double phase = d.phase_bias + (x == 0.0 ? 0.0 : 2.0 * x * std::sin(d.drive_freq * t));
        out[j] = 0.5 * (xi[j] * std::polar(1.0, -0.5 * phase)).imag();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Memory kernel

/// Time-domain representation of the junction force int Y(t - t') phi'(t') dt'
/// = g_inf phi'(t) + sum_m weights[m] phi(t - m dt), with phi interpolated
/// linearly between samples.
struct MemoryKernel {
    double dt = 0.0;
    double g_inf = 0.0;
    double k_inf = 0.0;
    std::vector<double> weights;
    /// Energy of the anticausal part relative to the causal part.
    double anticausal_ratio = 0.0;
    /// Largest imaginary part relative to the peak weight.
    double imag_ratio = 0.0;
    /// Largest dropped weight beyond the memory window, relative to the peak.
    double tail_level = 0.0;

    double static_stiffness() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

struct KernelOptions {
    /// Frequencies up to this bound enter the weights; a raised-cosine taper
    /// covers the last `taper_fraction` of the band.
    double band = 100.0;
    double taper_fraction = 0.2;
    /// Period of the discrete transform; must exceed the kernel's memory.
    double wrap_time = 4096.0;
    double tail_tol = 1e-8;
    /// Hard cap on the memory window. Linear interpolation of the tabulated
    /// admittance leaves a ~1e-7 floor in the weights, so the tail criterion
    /// alone would keep the whole wrap.
    double max_memory = 1024.0;
    double causality_tol = 1e-6;
};

/// Builds hat-function weights w_m = int k(tau) Lambda(tau/dt - m) dtau from the
/// frequency-domain kernel K(w) = -i w Y(w). `omega_y(w)` returns w Y(w) (finite
/// at w = 0); g_inf and k_inf are the exactly known limits
/// K(w) -> -i w g_inf + k_inf as |w| -> infinity.
inline MemoryKernel build_kernel_from(const std::function<cplx(double)>& omega_y, double g_inf, double k_inf, double dt,
                                      const KernelOptions& o = {}) {
    if (!(dt > 0.0)) throw ValidationError({"kernel time step must be > 0"});
    const auto sub = static_cast<std::size_t>(std::ceil(dt * o.band / std::numbers::pi));
    const double tau = dt / static_cast<double>(sub);
    const std::size_t m_pts = detail::next_pow2(static_cast<std::size_t>(std::ceil(o.wrap_time / tau)));
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m_pts) * tau);
    const double w_top = std::min(o.band, std::numbers::pi / tau);
    const double taper_start = (1.0 - o.taper_fraction) * w_top;

    std::vector<cplx> f(m_pts, 0.0);
    for (std::size_t k = 0; k <= m_pts / 2; ++k) {
        const double w = dw * static_cast<double>(k);
        if (w > w_top) break;
        const cplx kernel = cplx{0.0, -1.0} * omega_y(w) + cplx{0.0, w * g_inf} - k_inf;
        const double x = 0.5 * w * dt;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        double taper = 1.0;
        if (w > taper_start) taper = 0.5 * (1.0 + std::cos(std::numbers::pi * (w - taper_start) / (w_top - taper_start)));
        const cplx v = kernel * dt * sinc * sinc * taper;
        f[k] = v;
        if (k > 0 && k < m_pts - k) f[m_pts - k] = std::conj(v);
    }
    detail::dft(f, FFTW_FORWARD);
    const double norm = dw / (2.0 * std::numbers::pi);

    MemoryKernel out;
    out.dt = dt;
    out.g_inf = g_inf;
    out.k_inf = k_inf;
    const std::size_t half_taps = m_pts / (2 * sub);
    std::vector<double> causal(half_taps);
    double peak = 0.0, imag_peak = 0.0, causal_energy = 0.0, anti_energy = 0.0;
    for (std::size_t m = 0; m < half_taps; ++m) {
        const cplx v = f[m * sub] * norm;
        causal[m] = v.real();
        peak = std::max(peak, std::abs(v.real()));
        imag_peak = std::max(imag_peak, std::abs(v.imag()));
    }
    causal[0] += k_inf;
    peak = std::max(peak, std::abs(causal[0]));
    for (double w : causal) causal_energy += w * w;
    for (std::size_t m = 1; m < half_taps; ++m) anti_energy += std::norm(f[m_pts - m * sub].real() * norm);
    if (peak == 0.0) peak = 1.0;
    out.imag_ratio = imag_peak / peak;
    out.anticausal_ratio = causal_energy > 0.0 ? anti_energy / causal_energy : 0.0;
    if (out.anticausal_ratio > o.causality_tol) {
        std::ostringstream os;
        os << "anticausal kernel energy fraction " << out.anticausal_ratio << " exceeds " << o.causality_tol;
        throw KernelNotCausal(os.str());
    }
    std::size_t last = 0;
    for (std::size_t m = 0; m < half_taps; ++m)
        if (std::abs(causal[m]) > o.tail_tol * peak) last = m;
    last = std::min(last, static_cast<std::size_t>(o.max_memory / dt));
    for (std::size_t m = last + 1; m < half_taps; ++m) out.tail_level = std::max(out.tail_level, std::abs(causal[m]) / peak);
    causal.resize(last + 1);
    out.weights = std::move(causal);
    return out;
}

/// High-frequency limit k_inf of K(w) + i w for the drive-averaged junction.
inline double kernel_high_frequency_limit(const PolarizationTable& t, const DriveParams& d) {
    const int nmax = harmonic_cutoff(d.index());
    double acc = 0.0;
    for (int np = -nmax; np <= nmax; ++np) {
        const cplx a = fourier_coeff(d, np), b = fourier_coeff(d, -np);
        if (a == 0.0 && b == 0.0) continue;
        const auto p = t.retarded(np * d.drive_freq);
        acc += (-0.125 * p.n * (std::norm(a) + std::norm(b)) + 0.25 * p.s * (a * b).real()).real();
    }
    return acc;
}

inline MemoryKernel build_kernel(const PolarizationTable& t, const DriveParams& d, double dt, const KernelOptions& o = {}) {
    return build_kernel_from([&](double w) { return omega_admittance(t, d, w); }, 1.0,
                             kernel_high_frequency_limit(t, d), dt, o);
}

/// Purely dissipative kernel Y = conductance.
inline MemoryKernel ohmic_kernel(double conductance, double dt) {
    MemoryKernel k;
    k.dt = dt;
    k.g_inf = conductance;
    k.weights = {0.0};
    return k;
}

// ---------------------------------------------------------------------------
// Time stepping

struct LangevinState {
    double flux = 0.0;
    double velocity = 0.0;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> flux;
    std::vector<double> velocity;
    std::uint64_t seed = 0;
};

/// C phi'' + g_inf phi' + sum_m w_m phi(t - m dt) + phi / L = -I(t), integrated
/// with a velocity-Verlet scheme whose damping half-kick is implicit. The
/// history before t = 0 is the initial flux.
inline Trajectory integrate_langevin(const ResonatorCircuit& c, const MemoryKernel& k, const std::vector<double>& current,
                                     LangevinState init = {}) {
    const double dt = k.dt;
    const double stiff = 1.0 / c.inductance + std::max(k.static_stiffness(), 0.0);
    const double w_eff = std::max(c.bare_frequency(), std::sqrt(stiff / c.capacitance));
    if (!(dt < 0.1 / w_eff)) {
        std::ostringstream os;
        os << "time step " << dt << " violates dt < 0.1 / omega_r = " << 0.1 / w_eff;
        throw UnstableStep(os.str());
    }
    const std::size_t n = current.size();
    const std::size_t taps = k.weights.size();
    // Doubled ring buffer so the last `taps` fluxes are always contiguous.
    std::vector<double> ring(2 * taps, init.flux);
    std::size_t head = 0;  // ring[head] holds the newest flux
    auto push = [&](double phi) {
        head = head == 0 ? taps - 1 : head - 1;
        ring[head] = phi;
        ring[head + taps] = phi;
    };
    auto memory = [&]() {
        const double* h = ring.data() + head;
        const double* w = k.weights.data();
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t m = 0;
        for (; m + 4 <= taps; m += 4) {
            s0 += w[m] * h[m];
            s1 += w[m + 1] * h[m + 1];
            s2 += w[m + 2] * h[m + 2];
            s3 += w[m + 3] * h[m + 3];
        }
        for (; m < taps; ++m) s0 += w[m] * h[m];
        return (s0 + s1) + (s2 + s3);
    };

    Trajectory tr;
    tr.dt = dt;
    tr.flux.resize(n);
    tr.velocity.resize(n);
    if (n == 0) return tr;
    const double a = 0.5 * dt / c.capacitance;
    const double damp = a * k.g_inf;
    double phi = init.flux, v = init.velocity;
    push(phi);
    double force = -memory() - phi / c.inductance - current[0];
    tr.flux[0] = phi;
    tr.velocity[0] = v;
    for (std::size_t i = 1; i < n; ++i) {
        const double vh = v + a * force - damp * v;
        phi += dt * vh;
        push(phi);
        force = -memory() - phi / c.inductance - current[i];
        v = (vh + a * force) / (1.0 + damp);
        if (!std::isfinite(phi) || !std::isfinite(v)) throw UnstableStep("non-finite state during time stepping");
        tr.flux[i] = phi;
        tr.velocity[i] = v;
    }
    return tr;
}

/// One noise realization pushed through the resonator equation. The drive
/// phase origin is drawn from the seed so ensembles average over it.
inline Trajectory simulate(const ResonatorCircuit& c, const MemoryKernel& k, const NoiseSpectralModel& m,
                           std::size_t steps, std::uint64_t seed, LangevinState init = {}) {
    const auto xi = synthesize_noise(m, steps, k.dt, seed);
    double t0 = 0.0;
    if (m.drive.index() != 0.0) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        t0 = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi / m.drive.drive_freq)(rng);
    }
    auto tr = integrate_langevin(c, k, noise_current(xi, m.drive, k.dt, t0), init);
    tr.seed = seed;
    return tr;
}

// ---------------------------------------------------------------------------
// Spectral estimation

struct SpectrumOptions {
    std::size_t discard = 0;
    std::size_t segment = 4096;
    std::size_t min_trajectories = 100;
};

/// Hann-windowed, half-overlapping periodogram of the flux, collected per
/// trajectory so that errors can be estimated by jackknife over trajectories.
class FluxSpectrumAccumulator {
public:
    FluxSpectrumAccumulator(double dt, SpectrumOptions o) : dt_(dt), o_(o), window_(o.segment) {
        for (std::size_t j = 0; j < o.segment; ++j)
            window_[j] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(o.segment));
        for (double w : window_) wsum2_ += w * w;
    }

    /// Segment-averaged periodogram of one trajectory; safe to call concurrently.
    std::vector<double> periodogram(const std::vector<double>& flux) const {
        const std::size_t seg = o_.segment;
        if (flux.size() < o_.discard + seg) throw InsufficientStatistics("trajectory shorter than discard + one segment");
        std::vector<double> s(seg / 2 + 1, 0.0);
        std::vector<cplx> buf(seg);
        std::size_t count = 0;
        for (std::size_t start = o_.discard; start + seg <= flux.size(); start += seg / 2) {
            for (std::size_t j = 0; j < seg; ++j) buf[j] = window_[j] * flux[start + j];
            detail::dft(buf, FFTW_BACKWARD);
            for (std::size_t k = 0; k < s.size(); ++k) s[k] += std::norm(buf[k]);
            ++count;
        }
        for (double& v : s) v *= dt_ / (wsum2_ * static_cast<double>(count));
        return s;
    }

    void add_periodogram(std::vector<double> s) { per_traj_.push_back(std::move(s)); }
    void add(const std::vector<double>& flux) { add_periodogram(periodogram(flux)); }

    std::size_t trajectories() const { return per_traj_.size(); }
    double bin_frequency(std::size_t k) const {
        return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(o_.segment) * dt_);
    }
    const SpectrumOptions& options() const { return o_; }
    double dt() const { return dt_; }
    const std::vector<std::vector<double>>& per_trajectory() const { return per_traj_; }

private:
    double dt_;
    SpectrumOptions o_;
    std::vector<double> window_;
    double wsum2_ = 0.0;
    std::vector<std::vector<double>> per_traj_;
};

/// Keldysh flux correlator G^K = -i S_phi with jackknife errors.
struct KeldyshEstimate {
    std::vector<double> omega;
    std::vector<cplx> g_kel;
    std::vector<double> sigma;
    std::size_t trajectories = 0;
};

inline KeldyshEstimate estimate_keldysh(const FluxSpectrumAccumulator& acc) {
    const std::size_t n = acc.trajectories();
    if (n < std::max<std::size_t>(acc.options().min_trajectories, 2)) {
        std::ostringstream os;
        os << n << " trajectories, at least " << acc.options().min_trajectories << " required";
        throw InsufficientStatistics(os.str());
    }
    const auto& s = acc.per_trajectory();
    const std::size_t bins = s.front().size();
    KeldyshEstimate out;
    out.trajectories = n;
    out.omega.resize(bins);
    out.g_kel.resize(bins);
    out.sigma.resize(bins);
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < bins; ++k) {
        double sum = 0.0;
        for (const auto& t : s) sum += t[k];
        const double mean = sum / nn;
        double var = 0.0;
        for (const auto& t : s) {
            const double loo = (sum - t[k]) / (nn - 1.0);
            var += (loo - mean) * (loo - mean);
        }
        out.omega[k] = acc.bin_frequency(k);
        out.g_kel[k] = cplx{0.0, -mean};
        out.sigma[k] = std::sqrt((nn - 1.0) / nn * var);
    }
    return out;
}

inline KeldyshEstimate estimate_keldysh(const std::vector<Trajectory>& ensemble, const SpectrumOptions& o) {
    if (ensemble.empty()) throw InsufficientStatistics("empty ensemble");
    FluxSpectrumAccumulator acc(ensemble.front().dt, o);
    for (const auto& t : ensemble) acc.add(t.flux);
    return estimate_keldysh(acc);
}

/// Expected value of the windowed periodogram at `omega` for a true spectrum s:
/// the spectrum smoothed with the Hann window's spectral kernel.
inline double window_smoothed(const std::function<double(double)>& s, double omega, std::size_t segment, double dt,
                              double half_range, std::size_t points = 4001) {
    const double nseg = static_cast<double>(segment);
    auto dirichlet = [&](double th) -> cplx {
        const cplx den = 1.0 - std::polar(1.0, th);
        if (std::abs(den) < 1e-14) return nseg;
        return (1.0 - std::polar(1.0, th * nseg)) / den;
    };
    const double step = 2.0 * std::numbers::pi / nseg;
    const double wsum2 = 3.0 * nseg / 8.0;
    double acc = 0.0;
    const double h = 2.0 * half_range / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double wp = omega - half_range + h * static_cast<double>(i);
        const double th = (omega - wp) * dt;
        const cplx win = 0.5 * dirichlet(th) - 0.25 * dirichlet(th - step) - 0.25 * dirichlet(th + step);
        const double kern = dt * std::norm(win) / wsum2;
        const double wt = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
        acc += wt * s(wp) * kern;
    }
    return acc * h / (2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Ensemble run against the frequency-domain correlator

struct MonteCarloOptions {
    std::size_t trajectories = 200;
    double dt = 0.0;          // 0: 0.025 / w~_r
    double noise_band = 0.0;  // 0: resonator band plus drive sidebands
    double noise_spacing = 1e-3;
    std::size_t segments = 4;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    KernelOptions kernel{};
};

struct MonteCarloResult {
    KeldyshEstimate estimate;
    MemoryKernel kernel;
    double stark_freq = 0.0;
    double linewidth = 0.0;
    std::size_t segment = 0;
    std::size_t discard = 0;
    std::size_t steps = 0;
    std::size_t peak_bin = 0;
    std::vector<std::size_t> bins;     // bins within a few linewidths of the peak
    std::vector<double> fd_windowed;   // frequency-domain S_phi seen through the window
    std::vector<double> coth_windowed; // same for the equilibrium coth form

    /// (MC - FD) / sigma at the bin nearest the resonance.
    double peak_z() const {
        for (std::size_t i = 0; i < bins.size(); ++i)
            if (bins[i] == peak_bin)
                return (-estimate.g_kel[peak_bin].imag() - fd_windowed[i]) / estimate.sigma[peak_bin];
        return std::numeric_limits<double>::quiet_NaN();
    }
};

inline std::uint64_t trajectory_seed(std::uint64_t base, std::size_t i) {
    std::uint64_t z = base * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(i) + 1;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Runs the Langevin ensemble for the circuit shunted by the driven junction and
/// compares the flux spectrum with -Im G^K_{r,0} (and its equilibrium coth form)
/// near the resonance. The table must cover the kernel band plus drive sidebands.
inline MonteCarloResult monte_carlo_closure(const ResonatorCircuit& c, const PolarizationTable& t, const DriveParams& d,
                                            const MonteCarloOptions& o = {}) {
    MonteCarloResult r;
    const auto spec = resonance_spectrum(c, t, d, 801);
    r.stark_freq = spec.stark_freq;
    r.linewidth = spec.linewidth;
    const double dt = o.dt > 0.0 ? o.dt : 0.025 / r.stark_freq;
    r.kernel = build_kernel(t, d, dt, o.kernel);

    double band = o.noise_band;
    if (band <= 0.0) {
        const double x = d.index();
        const double sidebands = x == 0.0 ? 0.0 : (x + 6.0) * d.drive_freq;
        band = std::max(3.0, 4.0 * r.stark_freq + sidebands);
    }
    band = std::min(band, std::numbers::pi / dt);
    const auto half = static_cast<std::size_t>(std::ceil(band / o.noise_spacing));
    const auto model = build_noise_model(t, d, symmetric_grid(band, half));

    const double gamma = r.linewidth;
    r.segment = detail::next_pow2(static_cast<std::size_t>(std::ceil(20.0 / gamma / dt)));
    r.discard = static_cast<std::size_t>(std::ceil(10.0 / gamma / dt));
    r.steps = r.discard + o.segments * r.segment;

    FluxSpectrumAccumulator acc(dt, {r.discard, r.segment, 100});
    std::vector<std::vector<double>> spectra(o.trajectories);
    parallel_for(o.trajectories, resolve_threads(o.threads), [&](std::size_t i) {
        spectra[i] = acc.periodogram(simulate(c, r.kernel, model, r.steps, trajectory_seed(o.seed, i)).flux);
    });
    for (auto& s : spectra) acc.add_periodogram(std::move(s));
    r.estimate = estimate_keldysh(acc);

    const double bin_w = acc.bin_frequency(1);
    r.peak_bin = static_cast<std::size_t>(std::lround(r.stark_freq / bin_w));
    const double half_range = 60.0 * gamma + 200.0 / (static_cast<double>(r.segment) * dt);
    auto s_fd = [&](double w) { return -g_keldysh_res(c, t, d, 0, w).imag(); };
    const double temp = t.junction().temperature();
    auto s_coth = [&](double w) { return -g_retarded_res(c, t, d, w).imag() * thermal_coth(w, temp); };
    for (std::size_t b = 1; b < r.estimate.omega.size(); ++b) {
        const double w = r.estimate.omega[b];
        if (std::abs(w - r.stark_freq) > 6.0 * gamma && b != r.peak_bin) continue;
        r.bins.push_back(b);
        r.fd_windowed.push_back(window_smoothed(s_fd, w, r.segment, dt, half_range));
        r.coth_windowed.push_back(window_smoothed(s_coth, w, r.segment, dt, half_range));
    }
    return r;
}

}  // namespace qpj

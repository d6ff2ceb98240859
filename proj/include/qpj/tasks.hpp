#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qpj/config.hpp"
#include "qpj/csv.hpp"
#include "qpj/junction.hpp"
#include "qpj/polarization.hpp"
#include "qpj/resonator.hpp"
#include "qpj/stochastic.hpp"

namespace qpj {

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = {"polarization", "admittance", "spectrum", "qtemp-map", "montecarlo",
                                                   "fig1",         "fig3",       "fig4",     "fig5",      "fig6"};
    return names;
}

struct TaskContext {
    RunConfig config;
    std::filesystem::path out_dir;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string task;
    std::vector<std::string> written;  // files produced, in order

    ReducedSetup setup() const { return to_reduced_units(config); }

    PolarizationQuadrature quadrature() const {
        PolarizationQuadrature q;
        q.rel_tol = config.numerics.quad_rel_tol;
        q.cutoff = config.numerics.quad_cutoff;
        return q;
    }

    PolarizationTable table(const JunctionParams& j, double extent) const {
        GridSpec g;
        g.omega_max = std::max(extent, config.numerics.grid_omega_max);
        g.spacing = config.numerics.grid_spacing;
        g.inner_extent = config.numerics.grid_inner_extent;
        g.outer_spacing = config.numerics.grid_outer_spacing;
        return build_table(j, g, quadrature(), threads);
    }

    std::vector<std::pair<std::string, std::string>> meta(std::vector<std::pair<std::string, std::string>> extra = {}) const {
        std::vector<std::pair<std::string, std::string>> m = {
            {"qpj_version", kVersion}, {"task", task}, {"config_hash", config_hash(config)}, {"seed", std::to_string(seed)}};
        for (auto& e : extra) m.push_back(std::move(e));
        return m;
    }

    std::ofstream open(const std::string& name) {
        const auto path = out_dir / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("IOError", "cannot write " + path.string());
        written.push_back(path.string());
        return os;
    }
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline std::string cell(double v) { return CsvWriter::cell(v); }

inline void write_spectrum(TaskContext& ctx, const std::string& name, const ReducedSetup& s, const PolarizationTable& t,
                           const DriveParams& d, bool with_keldysh) {
    const auto& u = s.units;
    const auto spec = resonance_spectrum(s.circuit, t, d, static_cast<std::size_t>(ctx.config.numerics.spectrum_points),
                                         ctx.config.numerics.spectrum_span, with_keldysh, ctx.threads);
    auto os = ctx.open(name);
    std::vector<std::string> cols = {"frequency_Hz", "im_gr", "re_gr", "abs_s21"};
    if (with_keldysh) cols.push_back("im_gk");
    CsvWriter w(os,
                ctx.meta({{"drive_frequency_GHz", cell(u.reduced_to_hz(d.drive_freq) * 1e-9)},
                          {"drive_amplitude_mV", cell(u.reduced_energy_to_volt(d.amplitude) * 1e3)},
                          {"stark_frequency_Hz", cell(u.reduced_to_hz(spec.stark_freq))},
                          {"linewidth_Hz", cell(u.reduced_to_hz(spec.linewidth))},
                          {"kolmogorov_distance", cell(spec.kolmogorov)},
                          {"non_lorentzian", spec.non_lorentzian ? "1" : "0"},
                          {"green_unit", "H"}}),
                cols);
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        const double wv = spec.grid[i];
        const cplx g = spec.g_ret[i] * u.inductance();
        std::vector<std::string> row = {cell(u.reduced_to_hz(wv)), cell(g.imag()), cell(g.real()),
                                        cell(std::abs(s21_from_green(s.circuit, wv, spec.g_ret[i])))};
        if (with_keldysh) row.push_back(cell((spec.g_kel[i] * u.inductance()).imag()));
        w.row(row);
    }
}

inline QuasitemperatureOptions qtemp_options(const TaskContext& ctx, const ReducedUnits& u) {
    QuasitemperatureOptions o;
    o.t_lo = u.kelvin_to_reduced(ctx.config.numerics.qtemp_lo_K);
    o.t_hi = u.kelvin_to_reduced(ctx.config.numerics.qtemp_hi_K);
    o.tol = u.kelvin_to_reduced(ctx.config.numerics.qtemp_tol_K);
    return o;
}

inline void write_map(TaskContext& ctx, const std::string& name) {
    const auto s = ctx.setup();
    const auto& u = s.units;
    const auto& n = ctx.config.numerics;
    const auto freqs_ghz = linspace(n.sweep_freq_min_GHz, n.sweep_freq_max_GHz, static_cast<std::size_t>(n.sweep_freq_points));
    const auto amps_mv = linspace(n.sweep_amp_min_mV, n.sweep_amp_max_mV, static_cast<std::size_t>(n.sweep_amp_points));
    std::vector<double> freqs, amps;
    for (double f : freqs_ghz) freqs.push_back(u.hz_to_reduced(f * 1e9));
    for (double a : amps_mv) amps.push_back(u.volt_to_reduced_energy(a * 1e-3));
    const DriveParams widest{0.0, amps.back(), freqs.back()};
    const auto table = ctx.table(s.junction, required_table_extent(widest, s.junction.gap_sum()));
    const auto res = sweep_map(s.circuit, [&](const DriveParams&) -> const PolarizationTable& { return table; }, freqs, amps,
                               s.drive.phase_bias, qtemp_options(ctx, u), ctx.threads);
    auto os = ctx.open(name);
    CsvWriter w(os, ctx.meta({{"phase_bias_pi", cell(ctx.config.drive.phase_bias_pi)}}),
                {"Omega_GHz", "V0_mV", "T_r_K", "gamma_Hz", "status"});
    for (const auto& p : res.points)
        w.row({cell(u.reduced_to_hz(p.drive_freq) * 1e-9), cell(u.reduced_energy_to_volt(p.amplitude) * 1e3),
               cell(u.reduced_to_kelvin(p.quasitemperature)), cell(u.reduced_to_hz(p.linewidth)), p.status});
}

}  // namespace detail

inline void task_polarization(TaskContext& ctx) {
    const auto s = ctx.setup();
    const double extent = ctx.config.numerics.grid_omega_max > 0 ? ctx.config.numerics.grid_omega_max : 6.0;
    const auto t = ctx.table(s.junction, extent);
    auto os = ctx.open("polarization.csv");
    for (const auto& [k, v] : ctx.meta({{"kramers_kronig_residual", detail::cell(kramers_kronig_residual(t))},
                                        {"frequency_unit", "gap_sum_over_hbar"}}))
        os << "# " << k << ": " << v << "\n";
    write_table_csv(os, t);
}

inline void task_admittance(TaskContext& ctx) {
    const auto s = ctx.setup();
    const auto& n = ctx.config.numerics;
    const int harmonic = static_cast<int>(n.harmonic);
    const double extent = std::max(std::abs(n.admittance_omega_min), std::abs(n.admittance_omega_max)) +
                          required_table_extent(s.drive, s.junction.gap_sum()) + std::abs(harmonic) * s.drive.drive_freq;
    const auto t = ctx.table(s.junction, extent);
    const double siemens = 1.0 / s.units.resistance();
    Diagnostics diag;
    check_truncation(s.drive, &diag);
    auto meta = ctx.meta({{"admittance_unit", "S"}, {"harmonic", std::to_string(harmonic)}});
    for (const auto& wmsg : diag.warnings) meta.emplace_back("warning", wmsg);
    auto os = ctx.open("admittance.csv");
    std::vector<std::string> cols = {"frequency_Hz", "omega", "re_Y", "im_Y"};
    if (harmonic != 0) cols.push_back("harmonic");
    CsvWriter w(os, meta, cols);
    for (double wv : detail::linspace(n.admittance_omega_min, n.admittance_omega_max, static_cast<std::size_t>(n.admittance_points))) {
        if (wv == 0.0) continue;
        const cplx y = driven_admittance(t, s.drive, harmonic, wv) * siemens;
        std::vector<std::string> row = {detail::cell(s.units.reduced_to_hz(wv)), detail::cell(wv), detail::cell(y.real()),
                                        detail::cell(y.imag())};
        if (harmonic != 0) row.push_back(std::to_string(harmonic));
        w.row(row);
    }
}

inline void task_spectrum(TaskContext& ctx) {
    const auto s = ctx.setup();
    const auto t = ctx.table(s.junction, required_table_extent(s.drive, s.junction.gap_sum()) + s.circuit.bare_frequency());
    detail::write_spectrum(ctx, "spectrum.csv", s, t, s.drive, true);
}

inline void task_qtemp_map(TaskContext& ctx) { detail::write_map(ctx, "qtemp_map.csv"); }

inline void task_montecarlo(TaskContext& ctx) {
    const auto s = ctx.setup();
    const auto& n = ctx.config.numerics;
    MonteCarloOptions o;
    o.trajectories = static_cast<std::size_t>(n.mc_trajectories);
    o.dt = n.mc_dt;
    o.noise_band = n.mc_noise_band;
    o.segments = static_cast<std::size_t>(n.mc_segments);
    o.seed = ctx.seed;
    o.threads = ctx.threads;
    o.kernel.band = n.mc_kernel_band;
    const double extent = n.mc_kernel_band + harmonic_cutoff(s.drive.index()) * s.drive.drive_freq + 1.0;
    const auto t = ctx.table(s.junction, extent);
    const auto r = monte_carlo_closure(s.circuit, t, s.drive, o);
    const auto& u = s.units;
    const double unit = u.flux() * u.flux() * u.time();  // Wb^2 s
    auto os = ctx.open("montecarlo.csv");
    CsvWriter w(os,
                ctx.meta({{"trajectories", std::to_string(r.estimate.trajectories)},
                          {"time_step_s", detail::cell(r.kernel.dt * u.time())},
                          {"kernel_taps", std::to_string(r.kernel.weights.size())},
                          {"kernel_anticausal_energy", detail::cell(r.kernel.anticausal_ratio)},
                          {"stark_frequency_Hz", detail::cell(u.reduced_to_hz(r.stark_freq))},
                          {"linewidth_Hz", detail::cell(u.reduced_to_hz(r.linewidth))},
                          {"peak_z", detail::cell(r.peak_z())},
                          {"spectrum_unit", "Wb^2 s"}}),
                {"frequency_Hz", "s_phi_mc", "s_phi_mc_sigma", "s_phi_fd", "s_phi_coth"});
    for (std::size_t i = 0; i < r.bins.size(); ++i) {
        const std::size_t b = r.bins[i];
        w.row({u.reduced_to_hz(r.estimate.omega[b]), -r.estimate.g_kel[b].imag() * unit, r.estimate.sigma[b] * unit,
               r.fd_windowed[i] * unit, r.coth_windowed[i] * unit});
    }
}

inline void task_fig1(TaskContext& ctx) {
    const std::vector<std::pair<std::string, JunctionParams>> cases = {
        {"cold", symmetric_junction(0.04)},
        {"hot", symmetric_junction(0.32)},
        {"hot_asym", JunctionParams{{0.6, 0.0, 0.32}, {0.4, 0.0, 0.32}, 30e3}},
    };
    for (const auto& [name, j] : cases) {
        const auto t = ctx.table(j, 3.5);
        auto os = ctx.open("fig1_" + name + ".csv");
        CsvWriter w(os,
                    ctx.meta({{"temperature", detail::cell(j.temperature())},
                              {"gap_left", detail::cell(j.left.gap)},
                              {"gap_right", detail::cell(j.right.gap)},
                              {"units", "omega in gap_sum/hbar; Pi in gap_sum/(hbar R_J)"}}),
                    {"omega", "re_pi_n", "im_pi_n", "re_pi_s", "im_pi_s"});
        for (std::size_t i = 0; i < t.grid().size(); ++i) {
            const double wv = t.grid()[i];
            if (std::abs(wv) > 3.0) continue;
            const auto& v = t.values()[i];
            w.row({wv, v.pi_n_ret.real(), v.pi_n_ret.imag(), v.pi_s_ret.real(), v.pi_s_ret.imag()});
        }
    }
}

inline void task_fig3(TaskContext& ctx) {
    for (const auto& [name, temp] : std::vector<std::pair<std::string, double>>{{"cold", 0.04}, {"hot", 0.32}}) {
        const auto t = ctx.table(symmetric_junction(temp), 7.0);
        for (const auto& [pname, phase] : std::vector<std::pair<std::string, double>>{{"0", 0.0}, {"pi", std::numbers::pi}}) {
            auto os = ctx.open("fig3_" + name + "_phi" + pname + ".csv");
            CsvWriter w(os, ctx.meta({{"temperature", detail::cell(temp)}, {"units", "omega in gap_sum/hbar; Y in 1/R_J"}}),
                        {"omega", "re_Y", "im_Y"});
            for (double wv : detail::linspace(-3.0, 3.0, 1200)) {
                const cplx y = static_admittance(t, phase, wv);
                w.row({wv, y.real(), y.imag()});
            }
        }
    }
}

inline void task_fig4(TaskContext& ctx) {
    const double big = 0.155, amp = 0.5;
    const auto amps = detail::linspace(0.0, 0.6, 13);
    const double extent = 3.0 + required_table_extent(DriveParams{0.0, amps.back(), big});
    const auto t = ctx.table(symmetric_junction(0.04), extent);
    for (const auto& [pname, phase] : std::vector<std::pair<std::string, double>>{{"0", 0.0}, {"pi", std::numbers::pi}}) {
        const auto ws = detail::linspace(-3.0, 3.0, 1200);
        {
            auto os = ctx.open("fig4_phi" + pname + ".csv");
            CsvWriter w(os, ctx.meta({{"drive_freq", detail::cell(big)}, {"drive_amplitude", detail::cell(amp)},
                                      {"units", "omega in gap_sum/hbar; eV0 in gap_sum; Y in 1/R_J"}}),
                        {"omega", "re_Y", "im_Y"});
            for (double wv : ws) {
                const cplx y = driven_admittance(t, DriveParams{phase, amp, big}, 0, wv);
                w.row({wv, y.real(), y.imag()});
            }
        }
        auto os = ctx.open("fig4_map_phi" + pname + ".csv");
        CsvWriter w(os, ctx.meta({{"drive_freq", detail::cell(big)}, {"units", "omega in gap_sum/hbar; eV0 in gap_sum; Y in 1/R_J"}}),
                    {"eV0", "omega", "re_Y"});
        for (double a : amps)
            for (double wv : ws) w.row({a, wv, driven_admittance(t, DriveParams{phase, a, big}, 0, wv).real()});
    }
}

inline void task_fig5(TaskContext& ctx) {
    const auto s = ctx.setup();
    const double amp = s.drive.amplitude;
    const double upper = s.junction.gap_sum() / 2.5;  // bounds 3-photon resonances for the resonator frequencies of interest
    const auto t = ctx.table(s.junction, required_table_extent(DriveParams{0.0, amp, upper}, s.junction.gap_sum()));
    for (const auto& [panel, sign] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", -1}}) {
        const double centre = photon_assisted_resonance(s.circuit, t, amp, s.drive.phase_bias, 3, sign);
        for (const auto& [tag, factor] : std::vector<std::pair<std::string, double>>{{"below", 0.995}, {"on", 1.0}, {"above", 1.005}}) {
            const DriveParams d{s.drive.phase_bias, amp, centre * factor};
            detail::write_spectrum(ctx, "fig5_" + panel + "_" + tag + ".csv", s, t, d, false);
        }
    }
}

inline void task_fig6(TaskContext& ctx) { detail::write_map(ctx, "fig6.csv"); }

/// Runs one task; files land in ctx.out_dir.
inline void run_task(TaskContext& ctx) {
    std::filesystem::create_directories(ctx.out_dir);
    const std::map<std::string, void (*)(TaskContext&)> table = {
        {"polarization", task_polarization}, {"admittance", task_admittance}, {"spectrum", task_spectrum},
        {"qtemp-map", task_qtemp_map},       {"montecarlo", task_montecarlo}, {"fig1", task_fig1},
        {"fig3", task_fig3},                 {"fig4", task_fig4},             {"fig5", task_fig5},
        {"fig6", task_fig6}};
    const auto it = table.find(ctx.task);
    if (it == table.end()) throw ValidationError({"unknown task '" + ctx.task + "'"});
    it->second(ctx);
}

}  // namespace qpj

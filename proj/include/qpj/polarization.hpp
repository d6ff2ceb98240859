#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpj/errors.hpp"
#include "qpj/hash.hpp"
#include "qpj/material.hpp"
#include "qpj/parallel.hpp"
#include "qpj/quadrature.hpp"

namespace qpj {

/// Two leads and the tunnel contact. `tunnel_resistance` is kept in ohms for
/// reporting; every polarization value is expressed in units of 1/R_J.
struct JunctionParams {
    LeadParams left;
    LeadParams right;
    double tunnel_resistance = 30e3;

    double gap_sum() const { return left.gap + right.gap; }
    bool equal_temperatures() const { return left.temperature == right.temperature; }
    double temperature() const { return left.temperature; }
};

/// Symmetric junction with the given gap sum and common temperature.
inline JunctionParams symmetric_junction(double temperature, double gap_sum = 1.0, double dynes = 0.0) {
    LeadParams lead{0.5 * gap_sum, dynes, temperature};
    return {lead, lead, 30e3};
}

struct PolarizationPair {
    cplx n;
    cplx s;
};

struct PolarizationValue {
    cplx pi_n_ret;
    cplx pi_s_ret;
    cplx pi_n_kel;
    cplx pi_s_kel;
};

struct PolarizationQuadrature {
    double rel_tol = 1e-9;
    /// Half-width of the convolution window beyond the shifted origin.
    double cutoff = 40.0;
    std::size_t max_panels = 40000;
};

namespace detail {

enum class PiBlock { retarded, keldysh };

inline std::vector<double> convolution_breakpoints(const JunctionParams& j, double omega, double cutoff) {
    const double lo = std::min(0.0, omega) - cutoff;
    const double hi = std::max(0.0, omega) + cutoff;
    std::vector<double> pts{lo, hi, 0.0, omega};
    for (double e : {j.left.gap, -j.left.gap}) pts.push_back(e);
    for (double e : {j.right.gap, -j.right.gap}) pts.push_back(omega + e);
    std::vector<double> out;
    for (double p : pts)
        if (p >= lo && p <= hi) out.push_back(p);
    return out;
}

// Frequency-domain convolutions of lead Green's functions. The Keldysh rows
// use g^K g^K - (g^R - g^A)(g^R - g^A); the difference to the literal
// g^R g^A + g^A g^R + g^K g^K form is the integral of g^R g^R + g^A g^A, an
// omega-independent contact term (zero for f, divergent constant for g).
inline PolarizationPair integrate_block(const JunctionParams& j, double omega, PiBlock block,
                                        const PolarizationQuadrature& q) {
    auto integrand = [&](double x) -> Vec<4> {
        const GreensValue rl = green_retarded(j.left, x);
        const GreensValue rr = green_retarded(j.right, x - omega);
        const double hl = distribution_factor(j.left, x);
        const double hr = distribution_factor(j.right, x - omega);
        // Spectral differences X^R - X^A = 2i Im X^R.
        const cplx dgl{0.0, 2.0 * rl.g.imag()}, dfl{0.0, 2.0 * rl.f.imag()};
        const cplx dgr{0.0, 2.0 * rr.g.imag()}, dfr{0.0, 2.0 * rr.f.imag()};
        cplx n, s;
        if (block == PiBlock::retarded) {
            n = rl.g * (dgr * hr) + (dgl * hl) * std::conj(rr.g);
            s = rl.f * (dfr * hr) + (dfl * hl) * std::conj(rr.f);
        } else {
            n = dgl * dgr * (hl * hr - 1.0);
            s = dfl * dfr * (hl * hr - 1.0);
        }
        // Prefactor -i.
        return {n.imag(), -n.real(), s.imag(), -s.real()};
    };
    QuadratureOptions opt;
    opt.rel_tol = q.rel_tol;
    opt.abs_tol = 1e-15;
    opt.max_panels = q.max_panels;
    const auto r = integrate<4>(integrand, convolution_breakpoints(j, omega, q.cutoff), opt);
    return {{r.value[0], r.value[1]}, {r.value[2], r.value[3]}};
}

}  // namespace detail

/// Retarded polarization operators (normal, anomalous) at angular frequency omega.
inline PolarizationPair pi_retarded(const JunctionParams& j, double omega, const PolarizationQuadrature& q = {}) {
    return detail::integrate_block(j, omega, detail::PiBlock::retarded, q);
}

inline PolarizationPair pi_advanced(const JunctionParams& j, double omega, const PolarizationQuadrature& q = {}) {
    const auto r = pi_retarded(j, omega, q);
    return {std::conj(r.n), std::conj(r.s)};
}

/// Keldysh components by direct quadrature (valid for any lead temperatures).
inline PolarizationPair pi_keldysh_direct(const JunctionParams& j, double omega, const PolarizationQuadrature& q = {}) {
    return detail::integrate_block(j, omega, detail::PiBlock::keldysh, q);
}

/// Keldysh components from the fluctuation-dissipation theorem, given the
/// retarded values at the same frequency.
inline PolarizationPair keldysh_from_retarded(const PolarizationPair& ret, double omega, double temperature) {
    const double c = thermal_coth(omega, temperature);
    return {cplx{0.0, 2.0 * ret.n.imag() * c}, cplx{0.0, 2.0 * ret.s.imag() * c}};
}

inline PolarizationPair pi_keldysh_fdt(const JunctionParams& j, double omega, const PolarizationQuadrature& q = {}) {
    if (!j.equal_temperatures()) {
        std::ostringstream os;
        os << "fluctuation-dissipation form needs equal lead temperatures (left " << j.left.temperature
           << ", right " << j.right.temperature << ")";
        throw TemperatureMismatch(os.str());
    }
    if (omega == 0.0) return pi_keldysh_direct(j, omega, q);
    return keldysh_from_retarded(pi_retarded(j, omega, q), omega, j.temperature());
}


// ---------------------------------------------------------------------------
// Tabulation

/// Frequency grid for a polarization table: a uniform core, a coarser outer
/// band and geometric clusters around the singular frequencies.
struct GridSpec {
    double omega_max = 6.0;
    double spacing = 0.006;
    /// Uniform `spacing` is used for |omega| <= inner_extent, `outer_spacing` beyond.
    double inner_extent = 1e300;
    double outer_spacing = 0.05;
    double refine_halfwidth = 0.05;
    double refine_ratio = 0.7;
    double refine_min = 1e-6;
};

/// Immutable tabulation of all four polarization components. Linear
/// interpolation between nodes. For equal lead temperatures the Keldysh
/// components are produced from the interpolated retarded ones through the
/// fluctuation-dissipation relation at the query frequency, so equilibrium
/// detailed balance holds exactly downstream.
class PolarizationTable {
public:
    PolarizationTable() = default;
    PolarizationTable(JunctionParams junction, std::vector<double> grid, std::vector<PolarizationValue> values,
                      std::string quadrature_tag = {})
        : junction_(junction), grid_(std::move(grid)), values_(std::move(values)), tag_(std::move(quadrature_tag)) {
        if (grid_.size() != values_.size() || grid_.size() < 2)
            throw ValidationError({"polarization table needs matching grid/value arrays with at least two nodes"});
        for (std::size_t i = 1; i < grid_.size(); ++i)
            if (!(grid_[i] > grid_[i - 1])) throw ValidationError({"polarization table grid must be strictly increasing"});
    }

    const JunctionParams& junction() const { return junction_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<PolarizationValue>& values() const { return values_; }
    const std::string& quadrature_tag() const { return tag_; }
    double omega_min() const { return grid_.front(); }
    double omega_max() const { return grid_.back(); }
    bool covers(double omega) const { return omega >= grid_.front() && omega <= grid_.back(); }
    bool equilibrium() const { return junction_.equal_temperatures(); }

    PolarizationValue at(double omega) const {
        const auto [i, w] = locate(omega);
        const auto& a = values_[i];
        const auto& b = values_[i + 1];
        return {a.pi_n_ret + w * (b.pi_n_ret - a.pi_n_ret), a.pi_s_ret + w * (b.pi_s_ret - a.pi_s_ret),
                a.pi_n_kel + w * (b.pi_n_kel - a.pi_n_kel), a.pi_s_kel + w * (b.pi_s_kel - a.pi_s_kel)};
    }

    PolarizationPair retarded(double omega) const {
        const auto [i, w] = locate(omega);
        const auto& a = values_[i];
        const auto& b = values_[i + 1];
        return {a.pi_n_ret + w * (b.pi_n_ret - a.pi_n_ret), a.pi_s_ret + w * (b.pi_s_ret - a.pi_s_ret)};
    }

    PolarizationPair keldysh(double omega) const {
        const auto [i, w] = locate(omega);
        const auto& a = values_[i];
        const auto& b = values_[i + 1];
        if (equilibrium()) {
            if (w == 0.0 && grid_[i] == 0.0) return {a.pi_n_kel, a.pi_s_kel};
            if (w == 1.0 && grid_[i + 1] == 0.0) return {b.pi_n_kel, b.pi_s_kel};
            const PolarizationPair ret{a.pi_n_ret + w * (b.pi_n_ret - a.pi_n_ret),
                                       a.pi_s_ret + w * (b.pi_s_ret - a.pi_s_ret)};
            if (omega == 0.0) return {a.pi_n_kel + w * (b.pi_n_kel - a.pi_n_kel), a.pi_s_kel + w * (b.pi_s_kel - a.pi_s_kel)};
            return keldysh_from_retarded(ret, omega, junction_.temperature());
        }
        return {a.pi_n_kel + w * (b.pi_n_kel - a.pi_n_kel), a.pi_s_kel + w * (b.pi_s_kel - a.pi_s_kel)};
    }

private:
    std::pair<std::size_t, double> locate(double omega) const {
        if (!covers(omega)) {
            std::ostringstream os;
            os << "frequency " << omega << " outside polarization table [" << grid_.front() << ", " << grid_.back() << "]";
            throw OutOfTableRange(os.str());
        }
        auto it = std::upper_bound(grid_.begin(), grid_.end(), omega);
        std::size_t i = it == grid_.end() ? grid_.size() - 2 : static_cast<std::size_t>(it - grid_.begin()) - 1;
        i = std::min(i, grid_.size() - 2);
        const double w = (omega - grid_[i]) / (grid_[i + 1] - grid_[i]);
        return {i, w};
    }

    JunctionParams junction_;
    std::vector<double> grid_;
    std::vector<PolarizationValue> values_;
    std::string tag_;
};

/// Frequencies where the polarization operators are singular: +-Delta_Sigma
/// and +-(Delta_l - Delta_r) (which is zero, the thermal feature, when symmetric).
inline std::vector<double> singular_frequencies(const JunctionParams& j) {
    const double sum = j.left.gap + j.right.gap;
    const double diff = std::abs(j.left.gap - j.right.gap);
    std::vector<double> s{-sum, sum, -diff, diff};
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline std::vector<double> make_grid(const JunctionParams& j, const GridSpec& spec) {
    std::vector<double> g;
    const double inner = std::min(spec.inner_extent, spec.omega_max);
    const auto n_inner = static_cast<long>(std::ceil(inner / spec.spacing));
    const double h_in = inner / static_cast<double>(n_inner);
    for (long k = -n_inner; k <= n_inner; ++k) g.push_back(static_cast<double>(k) * h_in);
    if (spec.omega_max > inner) {
        const auto n_out = static_cast<long>(std::ceil((spec.omega_max - inner) / spec.outer_spacing));
        const double h_out = (spec.omega_max - inner) / static_cast<double>(n_out);
        for (long k = 1; k <= n_out; ++k) {
            g.push_back(inner + static_cast<double>(k) * h_out);
            g.push_back(-inner - static_cast<double>(k) * h_out);
        }
    }
    for (double s : singular_frequencies(j)) {
        if (std::abs(s) > spec.omega_max) continue;
        g.push_back(s);
        for (double d = spec.refine_halfwidth; d >= spec.refine_min; d *= spec.refine_ratio) {
            if (std::abs(s + d) <= spec.omega_max) g.push_back(s + d);
            if (std::abs(s - d) <= spec.omega_max) g.push_back(s - d);
        }
    }
    std::vector<double> pos;
    for (double x : g)
        if (x > 0.0) pos.push_back(x);
    std::sort(pos.begin(), pos.end());
    std::vector<double> half;
    for (double x : pos)
        if ((half.empty() && x > 1e-12) || (!half.empty() && x - half.back() > 1e-12)) half.push_back(x);
    std::vector<double> out;
    out.reserve(2 * half.size() + 1);
    for (auto it = half.rbegin(); it != half.rend(); ++it) out.push_back(-*it);
    out.push_back(0.0);
    out.insert(out.end(), half.begin(), half.end());
    return out;
}

inline std::string quadrature_tag(const PolarizationQuadrature& q, const GridSpec& spec) {
    std::string s = "rel_tol=" + fmt_exact(q.rel_tol) + ";cutoff=" + fmt_exact(q.cutoff) +
                    ";omega_max=" + fmt_exact(spec.omega_max) + ";spacing=" + fmt_exact(spec.spacing) +
                    ";inner=" + fmt_exact(spec.inner_extent) + ";outer=" + fmt_exact(spec.outer_spacing) +
                    ";refine=" + fmt_exact(spec.refine_halfwidth) + "/" + fmt_exact(spec.refine_ratio) + "/" +
                    fmt_exact(spec.refine_min);
    return hex64(fnv1a(s));
}

/// Tabulates the polarization operators. Nodes are evaluated in parallel.
inline PolarizationTable build_table(const JunctionParams& j, const GridSpec& spec,
                                     const PolarizationQuadrature& q = {}, unsigned threads = 0) {
    auto grid = make_grid(j, spec);
    std::vector<PolarizationValue> values(grid.size());
    const bool eq = j.equal_temperatures();
    // Retarded values come from omega >= 0 and are mirrored (the grid is
    // symmetric), so Pi^R(-w) = conj Pi^R(w) holds exactly on the table.
    const std::size_t n = grid.size();
    const std::size_t zero = n / 2;
    parallel_for(n - zero, resolve_threads(threads), [&](std::size_t k) {
        const std::size_t i = zero + k;
        auto r = pi_retarded(j, grid[i], q);
        if (grid[i] == 0.0) r = {r.n.real(), r.s.real()};
        values[i].pi_n_ret = r.n;
        values[i].pi_s_ret = r.s;
        values[n - 1 - i].pi_n_ret = std::conj(r.n);
        values[n - 1 - i].pi_s_ret = std::conj(r.s);
    });
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        const double w = grid[i];
        const PolarizationPair r{values[i].pi_n_ret, values[i].pi_s_ret};
        const auto k = (eq && w != 0.0) ? keldysh_from_retarded(r, w, j.temperature()) : pi_keldysh_direct(j, w, q);
        values[i].pi_n_kel = k.n;
        values[i].pi_s_kel = k.s;
    });
    return PolarizationTable(j, std::move(grid), std::move(values), quadrature_tag(q, spec));
}

enum class PiKind { normal, anomalous };

/// Shorthand combinations entering the admittance:
/// normal:    [Pi_n^R(w + w') - Pi_n^R(w')] / 4
/// anomalous: [Pi_s^R(w + w') + Pi_s^R(w')] / 4
inline cplx pi_tilde(const PolarizationTable& t, double omega, double omega_prime, PiKind kind) {
    const auto a = t.retarded(omega + omega_prime);
    const auto b = t.retarded(omega_prime);
    if (kind == PiKind::normal) return 0.25 * (a.n - b.n);
    return 0.25 * (a.s + b.s);
}

namespace detail {

// Principal-value Hilbert reconstruction of Re F from a piecewise-linear Im F
// on `grid`, closed beyond the ends by the asymptote Im F ~ c / omega.
inline std::vector<double> hilbert_real_part(const std::vector<double>& grid, const std::vector<double>& im) {
    const std::size_t n = grid.size();
    std::vector<double> re(n, 0.0);
    const double lo = grid.front(), hi = grid.back();
    const double c_hi = im.back() * hi, c_lo = im.front() * lo;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double w = grid[i];
        const double v = im[i];
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double a = grid[k], b = grid[k + 1];
            const double q = (im[k + 1] - im[k]) / (b - a);
            if (k == i || k + 1 == i) {
                acc += q * (b - a);
                continue;
            }
            const double p_at_w = im[k] + q * (w - a);  // linear extension evaluated at w
            acc += q * (b - a) + (p_at_w - v) * std::log(std::abs((b - w) / (a - w)));
        }
        // v * PV integral of 1/(x - w) over [lo, hi]
        if (w > lo && w < hi) acc += v * std::log((hi - w) / (w - lo));
        // Tails: integral of c/(x (x - w)) beyond each end.
        if (w != 0.0) {
            acc += -(c_hi / w) * std::log1p(-w / hi);
            acc += (c_lo / w) * std::log1p(-w / lo);
        } else {
            acc += c_hi / hi - c_lo / lo;
        }
        re[i] = acc / std::numbers::pi;
    }
    return re;
}

}  // namespace detail

/// Kramers-Kronig self-consistency of the tabulated retarded components:
/// max |Re Pi^R - H[Im Pi^R]| / max |Re Pi^R|, taking the worse of the
/// normal and anomalous channels. The exactly known normal-state part
/// -4i omega of Pi_n (zero real part) is removed before the transform.
inline double kramers_kronig_residual(const PolarizationTable& t) {
    const auto& g = t.grid();
    const auto& v = t.values();
    double worst = 0.0;
    for (int channel = 0; channel < 2; ++channel) {
        std::vector<double> re(g.size()), im(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const cplx p = channel == 0 ? v[i].pi_n_ret + cplx{0.0, 4.0 * g[i]} : v[i].pi_s_ret;
            re[i] = p.real();
            im[i] = p.imag();
        }
        const auto rec = detail::hilbert_real_part(g, im);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            // the closure is log-singular exactly at the two end nodes
            if (i != 0 && i + 1 != g.size()) num = std::max(num, std::abs(re[i] - rec[i]));
            den = std::max(den, std::abs(re[i]));
        }
        if (den == 0.0) den = 1.0;
        worst = std::max(worst, num / den);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// CSV interchange

inline void write_table_csv(std::ostream& os, const PolarizationTable& t) {
    const auto& j = t.junction();
    os << "# qpj polarization table\n";
    os << "# junction: gap_left=" << fmt_exact(j.left.gap) << " gap_right=" << fmt_exact(j.right.gap)
       << " dynes_left=" << fmt_exact(j.left.dynes_rate) << " dynes_right=" << fmt_exact(j.right.dynes_rate)
       << " temperature_left=" << fmt_exact(j.left.temperature) << " temperature_right=" << fmt_exact(j.right.temperature)
       << " tunnel_resistance=" << fmt_exact(j.tunnel_resistance) << "\n";
    os << "# quadrature_hash: " << t.quadrature_tag() << "\n";
    os << "omega,re_pi_n_ret,im_pi_n_ret,re_pi_s_ret,im_pi_s_ret,re_pi_n_kel,im_pi_n_kel,re_pi_s_kel,im_pi_s_kel\n";
    for (std::size_t i = 0; i < t.grid().size(); ++i) {
        const auto& v = t.values()[i];
        os << fmt_exact(t.grid()[i]);
        for (cplx c : {v.pi_n_ret, v.pi_s_ret, v.pi_n_kel, v.pi_s_kel}) os << ',' << fmt_exact(c.real()) << ',' << fmt_exact(c.imag());
        os << '\n';
    }
}

inline PolarizationTable read_table_csv(std::istream& is) {
    JunctionParams j;
    std::string tag;
    std::vector<double> grid;
    std::vector<PolarizationValue> values;
    std::string line;
    bool header_seen = false;
    int found = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string word;
            while (ls >> word) {
                const auto eq = word.find('=');
                if (word == "quadrature_hash:") ls >> tag;
                if (eq == std::string::npos) continue;
                const std::string key = word.substr(0, eq);
                const double val = std::stod(word.substr(eq + 1));
                if (key == "gap_left") j.left.gap = val, ++found;
                else if (key == "gap_right") j.right.gap = val, ++found;
                else if (key == "dynes_left") j.left.dynes_rate = val, ++found;
                else if (key == "dynes_right") j.right.dynes_rate = val, ++found;
                else if (key == "temperature_left") j.left.temperature = val, ++found;
                else if (key == "temperature_right") j.right.temperature = val, ++found;
                else if (key == "tunnel_resistance") j.tunnel_resistance = val, ++found;
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("omega,", 0) != 0) throw ParseError("polarization table: missing column header");
            header_seen = true;
            continue;
        }
        std::array<double, 9> f{};
        std::istringstream ls(line);
        std::string cell;
        std::size_t k = 0;
        while (std::getline(ls, cell, ',')) {
            if (k >= f.size()) throw ParseError("polarization table: too many columns in '" + line + "'");
            try {
                f[k++] = std::stod(cell);
            } catch (const std::exception&) {
                throw ParseError("polarization table: bad number '" + cell + "'");
            }
        }
        if (k != f.size()) throw ParseError("polarization table: expected 9 columns in '" + line + "'");
        grid.push_back(f[0]);
        values.push_back({{f[1], f[2]}, {f[3], f[4]}, {f[5], f[6]}, {f[7], f[8]}});
    }
    if (found != 7) throw ParseError("polarization table: incomplete junction metadata");
    return PolarizationTable(j, std::move(grid), std::move(values), tag);
}

}  // namespace qpj
